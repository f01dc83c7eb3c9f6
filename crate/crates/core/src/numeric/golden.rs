//! Golden-section maximization of a unimodal function on a bracket.

use crate::real::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GoldenResult<T> {
    pub x: T,
    pub value: T,
    /// Final bracket width reached `tol`.
    pub converged: bool,
    pub iterations: usize,
}

/// Maximize `f` on `[lo, hi]` until the bracket is narrower than `tol`.
/// Non-finite function values are treated as −∞.
pub fn golden_section_max<T: Real, F: FnMut(T) -> T>(
    mut f: F,
    mut lo: T,
    mut hi: T,
    tol: T,
    max_iter: usize,
) -> GoldenResult<T> {
    let inv_phi = (T::lit(5.0).sqrt() - T::one()) / T::lit(2.0);
    let mut eval = |x: T| {
        let v = f(x);
        if v.is_finite() {
            v
        } else {
            T::neg_infinity()
        }
    };
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = eval(x1);
    let mut f2 = eval(x2);
    let mut iterations = 0;
    while (hi - lo).abs() > tol && iterations < max_iter {
        iterations += 1;
        if f1 >= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = eval(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = eval(x2);
        }
    }
    let (x, value) = if f1 >= f2 { (x1, f1) } else { (x2, f2) };
    GoldenResult {
        x,
        value,
        converged: (hi - lo).abs() <= tol,
        iterations,
    }
}
