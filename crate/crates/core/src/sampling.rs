//! Deterministic low-discrepancy point sets used by the invariant checks.

use crate::cplane::Point;
use crate::scalar::Scalar;

/// Radical-inverse (Halton) sequence in `base`, for `i >= 1`.
pub fn halton(mut i: usize, base: usize) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    while i > 0 {
        f /= base as f64;
        r += f * (i % base) as f64;
        i /= base;
    }
    r
}

/// `n` quasi-random points of the open unit disc, area-uniform, with
/// `|z| <= 1 - margin`.
pub fn disc_points<T: Scalar>(n: usize, margin: f64) -> Vec<Point<T>> {
    (1..=n)
        .map(|i| {
            let r = halton(i, 2).sqrt() * (1.0 - margin);
            let th = std::f64::consts::TAU * halton(i, 3);
            Point::new(T::lit(r * th.cos()), T::lit(r * th.sin()))
        })
        .collect()
}

/// `n` quasi-random points of the right half-plane: log-uniform real parts in
/// `[re_min, re_max]`, uniform imaginary parts in `[-im_max, im_max]`.
pub fn half_plane_points<T: Scalar>(n: usize, re_min: f64, re_max: f64, im_max: f64) -> Vec<Point<T>> {
    let (a, b) = (re_min.ln(), re_max.ln());
    (1..=n)
        .map(|i| {
            let re = (a + (b - a) * halton(i, 2)).exp();
            let im = im_max * (2.0 * halton(i, 3) - 1.0);
            Point::new(T::lit(re), T::lit(im))
        })
        .collect()
}
