//! Element quadrature rules in barycentric form. Weights sum to 1 and are
//! multiplied by the element measure.

/// A point given by barycentric coordinates and its weight.
pub type QuadPoint = ([f64; 3], f64);

const G2: f64 = 0.211_324_865_405_187_13;
const G3: f64 = 0.112_701_665_379_258_3;

/// Two-point Gauss rule on a segment (exact to degree 3).
pub const SEGMENT_2: [QuadPoint; 2] = [([1.0 - G2, G2, 0.0], 0.5), ([G2, 1.0 - G2, 0.0], 0.5)];

/// Three-point Gauss rule on a segment (exact to degree 5).
pub const SEGMENT_3: [QuadPoint; 3] = [
    ([1.0 - G3, G3, 0.0], 5.0 / 18.0),
    ([0.5, 0.5, 0.0], 8.0 / 18.0),
    ([G3, 1.0 - G3, 0.0], 5.0 / 18.0),
];

/// Three-point interior rule on a triangle (exact to degree 2).
pub const TRIANGLE_3: [QuadPoint; 3] = [
    ([2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0], 1.0 / 3.0),
    ([1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0], 1.0 / 3.0),
    ([1.0 / 6.0, 1.0 / 6.0, 2.0 / 3.0], 1.0 / 3.0),
];

const DA: f64 = 0.445_948_490_915_965;
const DB: f64 = 0.091_576_213_509_771;
const WA: f64 = 0.223_381_589_678_011;
const WB: f64 = 0.109_951_743_655_322;

/// Six-point rule on a triangle (exact to degree 4).
pub const TRIANGLE_6: [QuadPoint; 6] = [
    ([1.0 - 2.0 * DA, DA, DA], WA),
    ([DA, 1.0 - 2.0 * DA, DA], WA),
    ([DA, DA, 1.0 - 2.0 * DA], WA),
    ([1.0 - 2.0 * DB, DB, DB], WB),
    ([DB, 1.0 - 2.0 * DB, DB], WB),
    ([DB, DB, 1.0 - 2.0 * DB], WB),
];

/// Rule used for force, bilinear and energy integrals.
pub fn force_rule(dim: usize) -> &'static [QuadPoint] {
    if dim == 1 {
        &SEGMENT_2
    } else {
        &TRIANGLE_3
    }
}

/// Higher-order rule used for projections and error norms.
pub fn accurate_rule(dim: usize) -> &'static [QuadPoint] {
    if dim == 1 {
        &SEGMENT_3
    } else {
        &TRIANGLE_6
    }
}
