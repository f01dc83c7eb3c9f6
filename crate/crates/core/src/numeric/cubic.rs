//! Real roots of a real cubic (analytic, then Newton-polished).

use crate::real::Real;

#[derive(Debug, Clone, PartialEq)]
pub struct CubicRoots<T> {
    /// Real roots in ascending order (complex pairs with negligible imaginary
    /// part are included as a double root).
    pub real: Vec<T>,
    /// Number of roots discarded as genuinely complex.
    pub complex_discarded: usize,
}

/// Roots of `c3 x³ + c2 x² + c1 x + c0`. Lower-degree polynomials are
/// handled when the leading coefficients are exactly zero.
pub fn real_cubic_roots<T: Real>(c3: T, c2: T, c1: T, c0: T) -> CubicRoots<T> {
    let coeffs = [c3, c2, c1, c0];
    let (mut roots, discarded) = if c3 != T::zero() {
        monic_cubic(c2 / c3, c1 / c3, c0 / c3)
    } else if c2 != T::zero() {
        quadratic(c1 / c2, c0 / c2)
    } else if c1 != T::zero() {
        (vec![-c0 / c1], 0)
    } else {
        (Vec::new(), 0)
    };
    for r in roots.iter_mut() {
        *r = polish(&coeffs, *r);
    }
    roots.sort_by(|a, b| a.partial_cmp(b).expect("finite roots"));
    CubicRoots {
        real: roots,
        complex_discarded: discarded,
    }
}

/// Evaluate the polynomial and its derivative by Horner's rule.
pub(crate) fn eval<T: Real>(coeffs: &[T; 4], x: T) -> (T, T) {
    let mut p = T::zero();
    let mut dp = T::zero();
    for &c in coeffs {
        dp = dp * x + p;
        p = p * x + c;
    }
    (p, dp)
}

fn polish<T: Real>(coeffs: &[T; 4], mut x: T) -> T {
    let mut last_step = T::infinity();
    for _ in 0..8 {
        let (p, dp) = eval(coeffs, x);
        if dp == T::zero() || p == T::zero() {
            break;
        }
        let step = p / dp;
        if !step.is_finite() || step.abs() >= last_step {
            break;
        }
        x = x - step;
        last_step = step.abs();
        if last_step <= T::epsilon() * x.abs() {
            break;
        }
    }
    x
}

fn imag_is_negligible<T: Real>(re: T, im: T) -> bool {
    im.abs() < T::lit(1e-8) * T::one().max(re.abs())
}

fn quadratic<T: Real>(b: T, c: T) -> (Vec<T>, usize) {
    // x² + b x + c
    let disc = b * b - T::lit(4.0) * c;
    let half = T::lit(0.5);
    if disc >= T::zero() {
        let q = -half * (b + b.signum() * disc.sqrt());
        if q == T::zero() {
            return (vec![T::zero(), T::zero()], 0);
        }
        (vec![q, c / q], 0)
    } else {
        let re = -half * b;
        let im = half * (-disc).sqrt();
        if imag_is_negligible(re, im) {
            (vec![re, re], 0)
        } else {
            (Vec::new(), 2)
        }
    }
}

fn monic_cubic<T: Real>(a: T, b: T, c: T) -> (Vec<T>, usize) {
    // Rescale x = s·y so every coefficient of the monic cubic in y is O(1).
    let s = a.abs().max(b.abs().sqrt()).max(c.abs().cbrt());
    if s == T::zero() {
        return (vec![T::zero(); 3], 0);
    }
    let a1 = a / s;
    let b1 = b / (s * s);
    let c1 = c / (s * s * s);

    let three = T::lit(3.0);
    let two = T::lit(2.0);
    let shift = a1 / three;
    let p = b1 - a1 * a1 / three;
    let q = two * a1 * a1 * a1 / T::lit(27.0) - a1 * b1 / three + c1;
    let half_q = q / two;
    let third_p = p / three;
    let disc = half_q * half_q + third_p * third_p * third_p;

    if disc > T::zero() {
        let big = -half_q.signum() * (half_q.abs() + disc.sqrt()).cbrt();
        let small = if big != T::zero() {
            -third_p / big
        } else {
            T::zero()
        };
        let t = big + small;
        let real = (t - shift) * s;
        let pair_re = (-(t / two) - shift) * s;
        let pair_im = (three.sqrt() / two * (big - small)).abs() * s;
        if imag_is_negligible(pair_re, pair_im) {
            (vec![real, pair_re, pair_re], 0)
        } else {
            (vec![real], 2)
        }
    } else {
        let r = (-third_p).sqrt();
        let roots = if r == T::zero() {
            vec![-shift * s; 3]
        } else {
            let arg = (-half_q / (r * r * r)).max(-T::one()).min(T::one());
            let phi = arg.acos();
            (0..3)
                .map(|k| {
                    let angle = (phi - two * T::PI() * T::lit(k as f64)) / three;
                    (two * r * angle.cos() - shift) * s
                })
                .collect()
        };
        (roots, 0)
    }
}
