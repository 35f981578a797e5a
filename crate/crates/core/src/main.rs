fn main() {
    std::process::exit(pdfem::cli::main_from_env());
}
