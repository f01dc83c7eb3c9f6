//! Transmission and sideband-generation efficiencies.
//!
//! With the input-output relation the output field reads
//! `S_out = S_in − sqrt(ηκ_a) a`, so each harmonic of `a` maps to one output
//! component. Efficiencies are amplitude ratios against the probe and may
//! exceed one.

use std::io::Write;

use serde::Serialize;

use crate::error::{Error, ErrorKind, Result};
use crate::params::{DerivedQuantities, SystemParams};
use crate::real::{c, Real, C};
use crate::sideband::{closed_form, SidebandSolution};
use crate::steady_state::{solve_steady_state, BranchPolicy, SteadyState};

/// CSV header of a spectrum file.
pub const SPECTRUM_HEADER: &str = "Omega_over_omega_m,t_p_sq,eta_f,eta_s,delta,masked";

fn probe_scale<T: Real>(p: &SystemParams<T>, d: &DerivedQuantities<T>) -> Result<T> {
    if d.eps_probe == T::zero() {
        return Err(Error::UndefinedRatio);
    }
    Ok(p.input_coupling() / d.eps_probe)
}

/// |t_p|² = |1 − sqrt(ηκ_a) A1- / ε_p|².
pub fn transmission<T: Real>(
    p: &SystemParams<T>,
    d: &DerivedQuantities<T>,
    a1_minus: C<T>,
) -> Result<T> {
    let k = probe_scale(p, d)?;
    Ok((c(T::one(), T::zero()) - a1_minus * k).norm_sqr())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Efficiencies<T> {
    pub eta_f: T,
    pub eta_s: T,
    pub delta: T,
}

/// First- and second-order upper-sideband efficiencies and their difference.
pub fn efficiencies<T: Real>(
    p: &SystemParams<T>,
    d: &DerivedQuantities<T>,
    a1_minus: C<T>,
    a2_minus: C<T>,
) -> Result<Efficiencies<T>> {
    let k = probe_scale(p, d)?;
    let eta_f = (a1_minus * k).norm();
    let eta_s = (a2_minus * k).norm();
    Ok(Efficiencies {
        eta_f,
        eta_s,
        delta: eta_s - eta_f,
    })
}

/// Output-field coefficients at the pump, probe, Stokes and second-order
/// frequencies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OutputFields<T> {
    /// ε₁ − sqrt(ηκ_a) a_s at ω₁.
    pub d1: C<T>,
    /// ε_p − sqrt(ηκ_a) A1- at ω₁ + Ω.
    pub d_p: C<T>,
    /// −sqrt(ηκ_a) A1+ at ω₁ − Ω.
    pub stokes: C<T>,
    /// −sqrt(ηκ_a) A2- at ω₁ + 2Ω.
    pub upper_second: C<T>,
    /// −sqrt(ηκ_a) A2+ at ω₁ − 2Ω.
    pub lower_second: C<T>,
}

pub fn output_fields<T: Real>(
    p: &SystemParams<T>,
    d: &DerivedQuantities<T>,
    s: &SteadyState<T>,
    sol: &SidebandSolution<T>,
) -> OutputFields<T> {
    let k = p.input_coupling();
    OutputFields {
        d1: c(d.eps_pump, T::zero()) - s.a_s * k,
        d_p: c(d.eps_probe, T::zero()) - sol.a1_minus * k,
        stokes: -(sol.a1_plus * k),
        upper_second: -(sol.a2_minus * k),
        lower_second: -(sol.a2_plus * k),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpectrumPoint<T> {
    #[serde(rename = "Omega_over_omega_m")]
    pub omega_over_omega_m: T,
    pub t_p_sq: T,
    pub eta_f: T,
    pub eta_s: T,
    pub delta: T,
    /// The point sits on a singular or ill-conditioned response; the other
    /// fields are NaN.
    pub masked: bool,
}

impl<T: Real> SpectrumPoint<T> {
    pub fn masked(omega_over_omega_m: T) -> Self {
        let nan = T::nan();
        SpectrumPoint {
            omega_over_omega_m,
            t_p_sq: nan,
            eta_f: nan,
            eta_s: nan,
            delta: nan,
            masked: true,
        }
    }
}

/// Observables at one Ω for a given steady state. Physics failures (singular
/// denominators, ill-conditioned blocks) give a masked point; input errors
/// propagate.
pub fn evaluate_point<T: Real>(
    p: &SystemParams<T>,
    d: &DerivedQuantities<T>,
    s: &SteadyState<T>,
    omega: T,
) -> Result<SpectrumPoint<T>> {
    probe_scale(p, d)?;
    let ratio = omega / p.omega_m;
    let sol = match closed_form(p, d, s, omega) {
        Ok(sol) => sol,
        Err(e) if e.kind() == ErrorKind::Physics => {
            log::debug!("masking Ω/ω_m = {}: {e}", ratio.as_f64());
            return Ok(SpectrumPoint::masked(ratio));
        }
        Err(e) => return Err(e),
    };
    let t_p_sq = transmission(p, d, sol.a1_minus)?;
    let eff = efficiencies(p, d, sol.a1_minus, sol.a2_minus)?;
    let point = SpectrumPoint {
        omega_over_omega_m: ratio,
        t_p_sq,
        eta_f: eff.eta_f,
        eta_s: eff.eta_s,
        delta: eff.delta,
        masked: false,
    };
    if [t_p_sq, eff.eta_f, eff.eta_s].iter().all(|v| v.is_finite()) {
        Ok(point)
    } else {
        Ok(SpectrumPoint::masked(ratio))
    }
}

/// Spectrum over a strictly monotone grid of Ω (rad/s) on a given steady
/// state.
pub fn spectrum_on<T: Real>(
    p: &SystemParams<T>,
    d: &DerivedQuantities<T>,
    s: &SteadyState<T>,
    omega_grid: &[T],
) -> Result<Vec<SpectrumPoint<T>>> {
    check_monotone(omega_grid)?;
    omega_grid
        .iter()
        .map(|&w| evaluate_point(p, d, s, w))
        .collect()
}

/// Spectrum on the lowest steady-state branch.
pub fn spectrum<T: Real>(
    p: &SystemParams<T>,
    d: &DerivedQuantities<T>,
    omega_grid: &[T],
) -> Result<Vec<SpectrumPoint<T>>> {
    let s = solve_steady_state(p, d, BranchPolicy::Lowest)?;
    spectrum_on(p, d, &s, omega_grid)
}

fn check_monotone<T: Real>(grid: &[T]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::InvalidInput("empty Ω grid".into()));
    }
    let up = grid.windows(2).all(|w| w[1] > w[0]);
    let down = grid.windows(2).all(|w| w[1] < w[0]);
    if !(up || down) {
        return Err(Error::InvalidInput(
            "Ω grid must be strictly monotone".into(),
        ));
    }
    Ok(())
}

/// `n` evenly spaced values from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n)
            .map(|k| {
                if k == n - 1 {
                    hi
                } else {
                    lo + (hi - lo) * k as f64 / (n - 1) as f64
                }
            })
            .collect(),
    }
}

fn fmt_value(v: f64) -> String {
    if v.is_nan() {
        "NaN".to_string()
    } else {
        format!("{v:.16e}")
    }
}

/// Write a spectrum as CSV: header row, 17 significant digits, masked rows
/// as NaN with `masked = 1`.
pub fn write_spectrum_csv<T: Real, W: Write>(
    mut out: W,
    points: &[SpectrumPoint<T>],
) -> std::io::Result<()> {
    writeln!(out, "{SPECTRUM_HEADER}")?;
    for pt in points {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            fmt_value(pt.omega_over_omega_m.as_f64()),
            fmt_value(pt.t_p_sq.as_f64()),
            fmt_value(pt.eta_f.as_f64()),
            fmt_value(pt.eta_s.as_f64()),
            fmt_value(pt.delta.as_f64()),
            u8::from(pt.masked)
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{derive, ConfigDocument};
    use crate::sideband::hierarchical_solve;
    use num_complex::Complex64;

    fn setup(
        edit: impl FnOnce(&mut ConfigDocument),
    ) -> (SystemParams<f64>, DerivedQuantities<f64>) {
        let mut doc = ConfigDocument::reference();
        edit(&mut doc);
        let p = doc.resolve().unwrap();
        let d = derive(&p);
        (p, d)
    }

    #[test]
    fn transmission_limits() {
        let (p, d) = setup(|_| {});
        assert_eq!(transmission(&p, &d, Complex64::new(0.0, 0.0)).unwrap(), 1.0);
        let absorb = Complex64::new(d.eps_probe / p.input_coupling(), 0.0);
        assert!(transmission(&p, &d, absorb).unwrap() < 1e-28);
        let e = efficiencies(&p, &d, absorb, Complex64::new(0.0, 0.0)).unwrap();
        assert_eq!(e.eta_s, 0.0);
        assert_eq!(e.delta, e.eta_s - e.eta_f);
    }

    #[test]
    fn zero_probe_is_undefined() {
        let (p, d) = setup(|c| c.probe_ratio = 0.0);
        assert!(matches!(
            spectrum(&p, &d, &[p.omega_m]),
            Err(Error::UndefinedRatio)
        ));
    }

    #[test]
    fn wide_spectrum_is_nonnegative() {
        let (p, d) = setup(|_| {});
        let grid: Vec<f64> = linspace(-2.0, 2.0, 2001)
            .iter()
            .map(|r| r * p.omega_m)
            .collect();
        let pts = spectrum(&p, &d, &grid).unwrap();
        assert_eq!(pts.len(), 2001);
        for pt in pts.iter().filter(|pt| !pt.masked) {
            assert!(pt.t_p_sq >= 0.0 && pt.eta_f >= 0.0 && pt.eta_s >= 0.0);
            assert_eq!(pt.delta, pt.eta_s - pt.eta_f);
        }
    }

    #[test]
    fn inverted_omit_profile() {
        let (p, d) = setup(|c| {
            c.g_mhz = 0.0;
            c.j_over_kappa_a = 0.45;
            c.kappa_b_mhz = -2.0;
            c.omega_m_mhz = 20.0;
        });
        let grid: Vec<f64> = linspace(0.5, 1.5, 4001)
            .iter()
            .map(|r| r * p.omega_m)
            .collect();
        let t: Vec<f64> = spectrum(&p, &d, &grid)
            .unwrap()
            .iter()
            .map(|x| x.t_p_sq)
            .collect();
        let maxima: Vec<usize> = (1..t.len() - 1)
            .filter(|&k| t[k] > t[k - 1] && t[k] > t[k + 1])
            .collect();
        let big: Vec<usize> = maxima.iter().copied().filter(|&k| t[k] > 1.0).collect();
        assert!(big.len() >= 2, "{maxima:?}");
        let valley = (big[0]..big[big.len() - 1])
            .map(|k| t[k])
            .fold(f64::INFINITY, f64::min);
        assert!(valley < t[big[0]] && valley < t[big[big.len() - 1]]);
    }

    #[test]
    fn steady_state_reuse_is_exact() {
        let (p, d) = setup(|c| c.j_over_kappa_a = 0.55);
        let s = solve_steady_state(&p, &d, BranchPolicy::Lowest).unwrap();
        let w = 1.02 * p.omega_m;
        let a = evaluate_point(&p, &d, &s, w).unwrap();
        let s2 = solve_steady_state(&p, &d, BranchPolicy::Lowest).unwrap();
        let b = evaluate_point(&p, &d, &s2, w).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn eta_f_matches_hierarchical_route() {
        let (p, d) = setup(|c| c.j_over_kappa_a = 0.55);
        let s = solve_steady_state(&p, &d, BranchPolicy::Lowest).unwrap();
        for r in linspace(-1.9, 1.9, 77) {
            let w = r * p.omega_m;
            let pt = evaluate_point(&p, &d, &s, w).unwrap();
            let h = hierarchical_solve(&p, &d, &s, w).unwrap();
            let eta_f = (h.a1_minus * p.input_coupling() / d.eps_probe).norm();
            assert!((pt.eta_f - eta_f).abs() <= 1e-10 * eta_f);
        }
    }

    #[test]
    fn output_fields_relations() {
        let (p, d) = setup(|_| {});
        let s = solve_steady_state(&p, &d, BranchPolicy::Lowest).unwrap();
        let sol = closed_form(&p, &d, &s, p.omega_m).unwrap();
        let out = output_fields(&p, &d, &s, &sol);
        let tp = out.d_p / d.eps_probe;
        let t = transmission(&p, &d, sol.a1_minus).unwrap();
        assert!((tp.norm_sqr() - t).abs() < 1e-12 * t.max(1.0));
        let e = efficiencies(&p, &d, sol.a1_minus, sol.a2_minus).unwrap();
        assert!((out.upper_second.norm() / d.eps_probe - e.eta_s).abs() < 1e-12 * e.eta_s);
    }

    #[test]
    fn csv_layout() {
        let pts = [
            SpectrumPoint {
                omega_over_omega_m: 1.0,
                t_p_sq: 0.5,
                eta_f: 0.25,
                eta_s: 0.125,
                delta: -0.125,
                masked: false,
            },
            SpectrumPoint::masked(1.5),
        ];
        let mut buf = Vec::new();
        write_spectrum_csv(&mut buf, &pts).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], SPECTRUM_HEADER);
        assert_eq!(lines[1], "1.0000000000000000e0,5.0000000000000000e-1,2.5000000000000000e-1,1.2500000000000000e-1,-1.2500000000000000e-1,0");
        assert_eq!(lines[2], "1.5000000000000000e0,NaN,NaN,NaN,NaN,1");
        assert!(text.ends_with('\n'));
    }

    #[test]
    fn non_monotone_grid_rejected() {
        let (p, d) = setup(|_| {});
        assert!(matches!(
            spectrum(&p, &d, &[1.0, 3.0, 2.0]),
            Err(Error::InvalidInput(_))
        ));
    }
}
