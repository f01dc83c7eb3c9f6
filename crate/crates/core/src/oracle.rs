//! Time-domain check of the sideband solution.
//!
//! The mean-field equations are integrated with pump and probe on, and the
//! periodic response of cavity A is projected onto e^{-inΩt}. The state is
//! carried as the deviation from the computed steady state (an exact change
//! of variables), so tolerances apply at the scale of the sidebands rather
//! than the pump field.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::numeric::{integrate_sampled, OdeSystem, StepStats, Tolerances};
use crate::params::{derive, DerivedQuantities, SystemParams};
use crate::sideband::closed_form;
use crate::steady_state::{
    assess_linear_stability, solve_steady_state, BranchPolicy, LinearStability, SteadyState,
};

/// Fewest beat periods accepted for harmonic extraction.
pub const MIN_WINDOW_PERIODS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OracleSettings {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Integer number of beat periods 2π/|Ω| in the extraction window.
    pub window_periods: usize,
    pub samples_per_period: usize,
    /// Transient before the window (s); `None` uses [`transient_estimate`]
    /// with `decay_times`.
    pub transient: Option<f64>,
    /// Slowest decay times to wait before the window.
    pub decay_times: f64,
    /// Start from the empty cavity instead of the steady state.
    pub start_empty: bool,
}

impl Default for OracleSettings {
    fn default() -> Self {
        OracleSettings {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            window_periods: MIN_WINDOW_PERIODS,
            samples_per_period: 64,
            transient: None,
            decay_times: DEFAULT_DECAY_TIMES,
            start_empty: false,
        }
    }
}

/// Default settling length. Switching the probe on rings the mechanics; 25
/// decay times leave e^{-25} of that ringing, below the second-order
/// sideband at the probe strengths used for validation.
pub const DEFAULT_DECAY_TIMES: f64 = 25.0;

/// `decay_times` slowest decay times, and at least 50 mechanical periods.
pub fn transient_estimate(p: &SystemParams<f64>, st: &LinearStability, decay_times: f64) -> f64 {
    let slowest = st
        .eigenvalues
        .iter()
        .map(|z| z.re.abs())
        .fold(f64::INFINITY, f64::min);
    let mech = 50.0 * std::f64::consts::TAU / p.omega_m;
    (decay_times / slowest).max(mech)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    /// Sample times (s), uniformly spaced over the extraction window.
    pub times: Vec<f64>,
    pub a: Vec<Complex64>,
    pub b: Vec<Complex64>,
    pub c: Vec<Complex64>,
    /// Displacement and momentum in zero-point units.
    pub x_zpf: Vec<f64>,
    pub p_zpf: Vec<f64>,
    /// Zero-point displacement (m), for converting `x_zpf`.
    pub x_zpf_scale: f64,
    /// Constant subtracted from `a` before projecting (the steady state).
    pub reference: Complex64,
    pub omega: f64,
    pub window_periods: usize,
    pub samples_per_period: usize,
    pub stats: StepStats,
}

impl Trajectory {
    pub fn x_metres(&self) -> Vec<f64> {
        self.x_zpf.iter().map(|x| x * self.x_zpf_scale).collect()
    }
}

struct MeanField {
    p: SystemParams<f64>,
    g1: f64,
    drive_probe: f64,
    omega: f64,
    a_s: Complex64,
    delta_bar: f64,
}

impl OdeSystem<f64, 8> for MeanField {
    fn rhs(&self, t: f64, y: &[f64; 8], dy: &mut [f64; 8]) {
        let p = &self.p;
        let i = Complex64::i();
        let da = Complex64::new(y[0], y[1]);
        let db = Complex64::new(y[2], y[3]);
        let dc = Complex64::new(y[4], y[5]);
        let (dx, dp) = (y[6], y[7]);
        let a = self.a_s + da;
        // Steady-state terms cancel identically; what remains is exact.
        let ra = (i * self.delta_bar - p.kappa_a / 2.0) * da
            - i * self.g1 * dx * a
            - i * p.tunneling_j * db
            - i * p.atom_coupling_g * dc
            + self.drive_probe * Complex64::from_polar(1.0, -self.omega * t);
        let rb = (i * p.delta_1 - p.kappa_b / 2.0) * db - i * p.tunneling_j * da;
        let rc = -(p.gamma_atom + i * p.delta_2) * dc - i * p.atom_coupling_g * da;
        let rx = p.omega_m * dp;
        let rp = -p.omega_m * dx
            - self.g1 * (2.0 * (self.a_s.conj() * da).re + da.norm_sqr())
            - p.gamma_m * dp;
        *dy = [ra.re, ra.im, rb.re, rb.im, rc.re, rc.im, rx, rp];
    }
}

/// Integrate with pump and probe on. Refused unless the steady state is
/// linearly stable.
pub fn integrate(
    p: &SystemParams<f64>,
    d: &DerivedQuantities<f64>,
    s: &SteadyState<f64>,
    omega: f64,
    settings: &OracleSettings,
) -> Result<Trajectory> {
    let st = assess_linear_stability(p, d, s);
    if !st.stable {
        return Err(Error::InstabilityGate {
            max_re: st.max_real,
        });
    }
    if omega == 0.0 || !omega.is_finite() {
        return Err(Error::InvalidInput(
            "oracle needs a non-zero beat frequency".into(),
        ));
    }
    if settings.window_periods < MIN_WINDOW_PERIODS {
        return Err(Error::InsufficientWindow(format!(
            "{} beat periods requested, at least {MIN_WINDOW_PERIODS} needed",
            settings.window_periods
        )));
    }
    let period = std::f64::consts::TAU / omega.abs();
    let transient = settings
        .transient
        .unwrap_or_else(|| transient_estimate(p, &st, settings.decay_times));
    // Start the window on a whole number of beat periods.
    let start = (transient / period).ceil() * period;
    let spp = settings.samples_per_period.max(8);
    let n = settings.window_periods * spp;
    let dt = period / spp as f64;

    let sys = MeanField {
        p: *p,
        g1: d.g1,
        drive_probe: p.input_coupling() * d.eps_probe,
        omega,
        a_s: s.a_s,
        delta_bar: s.delta_bar,
    };
    let y0 = if settings.start_empty {
        [
            -s.a_s.re, -s.a_s.im, -s.b_s.re, -s.b_s.im, -s.c_s.re, -s.c_s.im, -s.x_s_zpf, 0.0,
        ]
    } else {
        [0.0; 8]
    };
    let limit = 1e6 * s.scale().max(1.0);
    let tol = Tolerances {
        rel: settings.rel_tol,
        abs: settings.abs_tol,
    };
    let h0 = period / 100.0;
    let run = integrate_sampled(&sys, 0.0, y0, start, dt, n, tol, h0, |t, y: &[f64; 8]| {
        let mag = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        if mag > limit || !mag.is_finite() {
            return Err(Error::Diverged {
                time: t,
                magnitude: mag,
            });
        }
        Ok(())
    })?;

    let pick = |k: usize| -> Vec<Complex64> {
        run.states
            .iter()
            .map(|y| Complex64::new(y[2 * k], y[2 * k + 1]))
            .collect()
    };
    let shift = |v: Vec<Complex64>, z: Complex64| v.into_iter().map(|w| w + z).collect();
    Ok(Trajectory {
        times: run.times,
        a: shift(pick(0), s.a_s),
        b: shift(pick(1), s.b_s),
        c: shift(pick(2), s.c_s),
        x_zpf: run.states.iter().map(|y| y[6] + s.x_s_zpf).collect(),
        p_zpf: run.states.iter().map(|y| y[7]).collect(),
        x_zpf_scale: d.x_zpf,
        reference: s.a_s,
        omega,
        window_periods: settings.window_periods,
        samples_per_period: spp,
        stats: run.stats,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HarmonicDecomposition {
    /// Orders n; amplitude n multiplies e^{-inΩt}.
    pub orders: Vec<i32>,
    pub amplitudes: Vec<Complex64>,
    /// Power left outside the extracted orders, as a fraction of the
    /// fluctuating (n ≠ 0) power.
    pub residual_power_fraction: f64,
    pub window_periods: usize,
}

impl HarmonicDecomposition {
    pub fn amplitude(&self, n: i32) -> Option<Complex64> {
        self.orders
            .iter()
            .position(|&k| k == n)
            .map(|i| self.amplitudes[i])
    }
}

/// Project the cavity-A samples onto e^{-inΩt}, |n| ≤ `n_max`. The window
/// must span a whole number (≥ 20) of beat periods; on such a window the
/// periodic trapezoid rule is the sample mean.
pub fn extract_harmonics(
    traj: &Trajectory,
    omega: f64,
    n_max: usize,
) -> Result<HarmonicDecomposition> {
    let spp = traj.samples_per_period;
    if traj.window_periods < MIN_WINDOW_PERIODS {
        return Err(Error::InsufficientWindow(format!(
            "{} beat periods, at least {MIN_WINDOW_PERIODS} needed",
            traj.window_periods
        )));
    }
    if traj.a.len() != traj.window_periods * spp || traj.times.len() != traj.a.len() {
        return Err(Error::InsufficientWindow(
            "sample count is not a whole number of periods".into(),
        ));
    }
    if spp <= 2 * n_max {
        return Err(Error::InsufficientWindow(format!(
            "{spp} samples per period cannot resolve order {n_max}"
        )));
    }
    let n_samples = traj.a.len() as f64;
    let dev: Vec<Complex64> = traj.a.iter().map(|a| a - traj.reference).collect();
    let mut orders = Vec::new();
    let mut amplitudes = Vec::new();
    let max = n_max as i32;
    for n in -max..=max {
        let sum: Complex64 = traj
            .times
            .iter()
            .zip(&dev)
            .map(|(t, a)| a * Complex64::from_polar(1.0, n as f64 * omega * t))
            .sum();
        let mut amp = sum / n_samples;
        if n == 0 {
            amp += traj.reference;
        }
        orders.push(n);
        amplitudes.push(amp);
    }
    let zero = amplitudes[max as usize] - traj.reference;
    let mut ac_power = 0.0;
    let mut residual = 0.0;
    for (t, a) in traj.times.iter().zip(&dev) {
        let mut model = Complex64::new(0.0, 0.0);
        for (n, amp) in orders.iter().zip(&amplitudes) {
            if *n != 0 {
                model += amp * Complex64::from_polar(1.0, -(*n as f64) * omega * t);
            }
        }
        ac_power += (a - zero).norm_sqr();
        residual += (a - zero - model).norm_sqr();
    }
    Ok(HarmonicDecomposition {
        orders,
        amplitudes,
        residual_power_fraction: if ac_power > 0.0 {
            residual / ac_power
        } else {
            0.0
        },
        window_periods: traj.window_periods,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AmplitudePair {
    #[serde(rename = "A1m")]
    pub a1_minus: Complex64,
    #[serde(rename = "A2m")]
    pub a2_minus: Complex64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OracleAmplitudes {
    pub amp1: Complex64,
    pub amp2: Complex64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub closed_form: AmplitudePair,
    pub oracle: OracleAmplitudes,
    pub rel_dev_1: f64,
    pub rel_dev_2: f64,
    pub stable: bool,
    pub window_periods: usize,
    pub residual_power_fraction: f64,
    pub stats: StepStats,
}

/// Compare closed-form A1-, A2- against the time-domain harmonics at Ω.
pub fn validate(
    p: &SystemParams<f64>,
    omega: f64,
    settings: &OracleSettings,
) -> Result<ValidationReport> {
    let d = derive(p);
    let s = solve_steady_state(p, &d, BranchPolicy::Lowest)?;
    validate_on(p, &d, &s, omega, settings)
}

pub fn validate_on(
    p: &SystemParams<f64>,
    d: &DerivedQuantities<f64>,
    s: &SteadyState<f64>,
    omega: f64,
    settings: &OracleSettings,
) -> Result<ValidationReport> {
    let cf = closed_form(p, d, s, omega)?;
    let traj = integrate(p, d, s, omega, settings)?;
    let h = extract_harmonics(&traj, omega, 2)?;
    let amp1 = h.amplitude(1).expect("order 1 extracted");
    let amp2 = h.amplitude(2).expect("order 2 extracted");
    let dev = |o: Complex64, c: Complex64| (o - c).norm() / c.norm();
    Ok(ValidationReport {
        closed_form: AmplitudePair {
            a1_minus: cf.a1_minus,
            a2_minus: cf.a2_minus,
        },
        oracle: OracleAmplitudes { amp1, amp2 },
        rel_dev_1: dev(amp1, cf.a1_minus),
        rel_dev_2: dev(amp2, cf.a2_minus),
        stable: true,
        window_periods: traj.window_periods,
        residual_power_fraction: h.residual_power_fraction,
        stats: traj.stats,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::ConfigDocument;

    fn passive(edit: impl FnOnce(&mut ConfigDocument)) -> SystemParams<f64> {
        let mut doc = ConfigDocument::reference();
        doc.kappa_b_mhz = 2.0;
        edit(&mut doc);
        doc.resolve().unwrap()
    }

    fn synthetic(omega: f64, f: impl Fn(f64) -> Complex64, reference: Complex64) -> Trajectory {
        let spp = 64;
        let periods = 20;
        let dt = std::f64::consts::TAU / omega / spp as f64;
        let times: Vec<f64> = (0..spp * periods).map(|k| 3.0 + k as f64 * dt).collect();
        let a: Vec<Complex64> = times.iter().map(|&t| f(t)).collect();
        let z = vec![Complex64::new(0.0, 0.0); a.len()];
        Trajectory {
            times,
            b: z.clone(),
            c: z,
            x_zpf: vec![0.0; a.len()],
            p_zpf: vec![0.0; a.len()],
            a,
            x_zpf_scale: 1.0,
            reference,
            omega,
            window_periods: periods,
            samples_per_period: spp,
            stats: StepStats::default(),
        }
    }

    #[test]
    fn constant_trajectory() {
        let a_s = Complex64::new(2.0, -1.0);
        let h =
            extract_harmonics(&synthetic(5.0, |_| a_s, Complex64::new(0.0, 0.0)), 5.0, 2).unwrap();
        assert!((h.amplitude(0).unwrap() - a_s).norm() < 1e-10);
        for n in [-2, -1, 1, 2] {
            assert!(h.amplitude(n).unwrap().norm() < 1e-10);
        }
    }

    #[test]
    fn single_tone() {
        let w = 7.0;
        let tr = synthetic(
            w,
            |t| 3.0 * Complex64::from_polar(1.0, -w * t),
            Complex64::new(0.0, 0.0),
        );
        let h = extract_harmonics(&tr, w, 2).unwrap();
        assert!((h.amplitude(1).unwrap() - 3.0).norm() < 1e-10);
        assert!(h.amplitude(-1).unwrap().norm() < 1e-10);
        assert!(h.residual_power_fraction < 1e-20);
    }

    #[test]
    fn short_window_rejected() {
        let mut tr = synthetic(1.0, |_| Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0));
        tr.window_periods = 10;
        assert!(matches!(
            extract_harmonics(&tr, 1.0, 2),
            Err(Error::InsufficientWindow(_))
        ));
    }

    #[test]
    fn unstable_gain_cavity_refused() {
        let mut doc = ConfigDocument::reference();
        doc.kappa_b_mhz = -2.0;
        doc.j_over_kappa_a = 0.0;
        let p = doc.resolve().unwrap();
        let d = derive(&p);
        let s = solve_steady_state(&p, &d, BranchPolicy::Lowest).unwrap();
        let err = integrate(&p, &d, &s, p.omega_m, &OracleSettings::default()).unwrap_err();
        assert!(matches!(err, Error::InstabilityGate { .. }));
    }

    #[test]
    fn relaxes_to_steady_state_without_probe() {
        let p = passive(|c| c.probe_ratio = 0.0);
        let d = derive(&p);
        let s = solve_steady_state(&p, &d, BranchPolicy::Lowest).unwrap();
        let settings = OracleSettings {
            start_empty: true,
            ..OracleSettings::default()
        };
        let tr = integrate(&p, &d, &s, p.omega_m, &settings).unwrap();
        let last = tr.a.len() - 1;
        assert!((tr.a[last] - s.a_s).norm() < 1e-8 * s.a_s.norm());
        assert!((tr.b[last] - s.b_s).norm() < 1e-8 * s.b_s.norm());
        assert!((tr.c[last] - s.c_s).norm() < 1e-8 * s.c_s.norm());
        assert!((tr.x_zpf[last] - s.x_s_zpf).abs() < 1e-8 * s.x_s_zpf.abs());
        // d|a|²/dt from finite differences is negligible at convergence.
        let dt = tr.times[1] - tr.times[0];
        let rate = (tr.a[last].norm_sqr() - tr.a[last - 1].norm_sqr()) / dt;
        assert!(rate.abs() * 1e-9 < s.intensity * p.kappa_a * 1e-6);
        assert!(tr.stats.accepted > 0);
    }

    #[test]
    fn ten_decay_times_floor() {
        let p = passive(|_| {});
        let d = derive(&p);
        let s = solve_steady_state(&p, &d, BranchPolicy::Lowest).unwrap();
        let st = assess_linear_stability(&p, &d, &s);
        let t10 = transient_estimate(&p, &st, 10.0);
        assert!(t10 >= 50.0 * std::f64::consts::TAU / p.omega_m);
        assert!((transient_estimate(&p, &st, 25.0) / t10 - 2.5).abs() < 1e-12);
    }

    #[test]
    fn window_doubling_is_stable() {
        let p = passive(|c| c.probe_ratio = 0.01);
        let w = 0.8 * p.omega_m;
        let a = validate(&p, w, &OracleSettings::default()).unwrap();
        let b = validate(
            &p,
            w,
            &OracleSettings {
                window_periods: 40,
                ..OracleSettings::default()
            },
        )
        .unwrap();
        assert!((a.oracle.amp1 - b.oracle.amp1).norm() < 1e-6 * a.oracle.amp1.norm());
        assert!((a.oracle.amp2 - b.oracle.amp2).norm() < 1e-6 * a.oracle.amp2.norm());
    }

    #[test]
    fn first_order_matches_closed_form() {
        let p = passive(|c| c.probe_ratio = 0.01);
        let r = validate(&p, 0.8 * p.omega_m, &OracleSettings::default()).unwrap();
        assert!(r.rel_dev_1 < 0.02, "{r:?}");
        assert!(r.rel_dev_2 < 0.05, "{r:?}");
    }

    #[test]
    fn first_order_deviation_shrinks_with_probe() {
        let devs: Vec<f64> = [0.05, 0.02, 0.01]
            .iter()
            .map(|&r| {
                let p = passive(|c| c.probe_ratio = r);
                validate(&p, 0.8 * p.omega_m, &OracleSettings::default())
                    .unwrap()
                    .rel_dev_1
            })
            .collect();
        assert!(devs[1] < devs[0] && devs[2] < devs[1], "{devs:?}");
    }
}
