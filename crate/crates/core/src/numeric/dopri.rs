//! Dormand–Prince 5(4) with PI-free classic step control.
//!
//! Steps are clamped so that every requested sample time is hit exactly;
//! samples are therefore integrator states, never interpolants.

use crate::error::{Error, Result};
use crate::real::Real;

pub trait OdeSystem<T, const N: usize> {
    fn rhs(&self, t: T, y: &[T; N], dy: &mut [T; N]);
}

#[derive(Debug, Clone, Copy)]
pub struct Tolerances<T> {
    pub rel: T,
    pub abs: T,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, serde::Serialize)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
    pub fn_evals: usize,
    /// Largest normalized error estimate among accepted steps (≤ 1).
    pub max_error_estimate: f64,
}

#[derive(Debug, Clone)]
pub struct SampledRun<T, const N: usize> {
    pub times: Vec<T>,
    pub states: Vec<[T; N]>,
    pub stats: StepStats,
}

// Butcher tableau.
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// Difference between 5th and embedded 4th order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

fn axpy<T: Real, const N: usize>(y: &[T; N], h: T, terms: &[(f64, &[T; N])]) -> [T; N] {
    let mut out = *y;
    for (i, o) in out.iter_mut().enumerate() {
        let mut acc = T::zero();
        for (w, k) in terms {
            acc = acc + T::lit(*w) * k[i];
        }
        *o = *o + h * acc;
    }
    out
}

/// Integrate from `t0` and record the state at `n_samples` uniformly spaced
/// times `sample_start + k·sample_dt`. `monitor` sees every accepted state
/// and may abort the run.
#[allow(clippy::too_many_arguments)]
pub fn integrate_sampled<T, const N: usize, S, M>(
    sys: &S,
    t0: T,
    y0: [T; N],
    sample_start: T,
    sample_dt: T,
    n_samples: usize,
    tol: Tolerances<T>,
    h_init: T,
    mut monitor: M,
) -> Result<SampledRun<T, N>>
where
    T: Real,
    S: OdeSystem<T, N>,
    M: FnMut(T, &[T; N]) -> Result<()>,
{
    let sample_time = |k: usize| sample_start + sample_dt * T::lit(k as f64);
    let mut stats = StepStats::default();
    let mut times = Vec::with_capacity(n_samples);
    let mut states = Vec::with_capacity(n_samples);

    let mut t = t0;
    let mut y = y0;
    let mut k1 = [T::zero(); N];
    sys.rhs(t, &y, &mut k1);
    stats.fn_evals += 1;
    // Step proposed by the controller; `h` is that step clamped to the next sample.
    let mut h_free = h_init;
    let mut next = 0usize;

    if n_samples > 0 && sample_time(0) <= t {
        times.push(t);
        states.push(y);
        next = 1;
    }

    let (safety, min_fac, max_fac) = (T::lit(0.9), T::lit(0.2), T::lit(5.0));
    let fifth = T::lit(0.2);

    while next < n_samples {
        let target = sample_time(next);
        let (h, lands) = if t + h_free >= target {
            (target - t, true)
        } else {
            (h_free, false)
        };
        if h <= T::epsilon() * t.abs().max(T::one()) {
            return Err(Error::StepSizeUnderflow { time: t.as_f64() });
        }

        let mut k2 = [T::zero(); N];
        let mut k3 = [T::zero(); N];
        let mut k4 = [T::zero(); N];
        let mut k5 = [T::zero(); N];
        let mut k6 = [T::zero(); N];
        let mut k7 = [T::zero(); N];
        sys.rhs(t + T::lit(C2) * h, &axpy(&y, h, &[(A21, &k1)]), &mut k2);
        sys.rhs(
            t + T::lit(C3) * h,
            &axpy(&y, h, &[(A31, &k1), (A32, &k2)]),
            &mut k3,
        );
        sys.rhs(
            t + T::lit(C4) * h,
            &axpy(&y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]),
            &mut k4,
        );
        sys.rhs(
            t + T::lit(C5) * h,
            &axpy(&y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
            &mut k5,
        );
        sys.rhs(
            t + h,
            &axpy(
                &y,
                h,
                &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
            ),
            &mut k6,
        );
        let y_new = axpy(
            &y,
            h,
            &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)],
        );
        sys.rhs(t + h, &y_new, &mut k7);
        stats.fn_evals += 6;

        let mut err_sq = T::zero();
        for i in 0..N {
            let e = h
                * (T::lit(E1) * k1[i]
                    + T::lit(E3) * k3[i]
                    + T::lit(E4) * k4[i]
                    + T::lit(E5) * k5[i]
                    + T::lit(E6) * k6[i]
                    + T::lit(E7) * k7[i]);
            let scale = tol.abs + tol.rel * y[i].abs().max(y_new[i].abs());
            let r = e / scale;
            err_sq = err_sq + r * r;
        }
        let err = (err_sq / T::lit(N as f64)).sqrt();
        if !err.is_finite() {
            return Err(Error::Diverged {
                time: t.as_f64(),
                magnitude: f64::INFINITY,
            });
        }

        let factor = if err == T::zero() {
            max_fac
        } else {
            (safety * err.powf(-fifth)).max(min_fac).min(max_fac)
        };

        if err <= T::one() {
            stats.accepted += 1;
            stats.max_error_estimate = stats.max_error_estimate.max(err.as_f64());
            t = if lands { target } else { t + h };
            y = y_new;
            k1 = k7;
            monitor(t, &y)?;
            if lands {
                times.push(t);
                states.push(y);
                next += 1;
                // A clamped step says nothing about the admissible size; keep
                // the controller's proposal unless this step allows more.
                h_free = h_free.max(h * factor);
            } else {
                h_free = h * factor;
            }
        } else {
            stats.rejected += 1;
            h_free = h * factor.min(T::one());
        }
    }

    Ok(SampledRun {
        times,
        states,
        stats,
    })
}
