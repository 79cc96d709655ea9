//! Small numeric helpers shared across modules.

/// Comparison slack for thresholds built from fractional powers.
pub const EPS: f64 = 1e-9;

#[inline]
pub fn powf(x: f64, y: f64) -> f64 {
    libm::pow(x, y)
}

#[inline]
pub fn log2(x: f64) -> f64 {
    libm::log2(x)
}

/// `d^e` for a node degree, with `0^e = 0`.
#[inline]
pub fn deg_pow(d: usize, e: f64) -> f64 {
    if d == 0 {
        0.0
    } else {
        powf(d as f64, e)
    }
}

/// `a >= b` up to [`EPS`].
#[inline]
pub fn ge(a: f64, b: f64) -> bool {
    a >= b - EPS
}

/// `a <= b` up to [`EPS`].
#[inline]
pub fn le(a: f64, b: f64) -> bool {
    a <= b + EPS
}
