//! Built-in consistency suite: closed form against harmonic balance, and
//! the exact in-model scaling laws.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::Result;
use crate::observables::efficiencies;
use crate::params::{derive, ConfigDocument, DerivedQuantities, SystemParams};
use crate::real::rel_diff;
use crate::sideband::{
    closed_form, elimination_kernels, hierarchical_solve, response::response_at,
};
use crate::steady_state::{solve_steady_state, BranchPolicy, SteadyState};
use crate::sweep::{find_peak, Observable};

pub const DEFAULT_SEED: u64 = 0x5eed_2024;
pub const EQUIVALENCE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: usize,
    pub failed: usize,
    /// Worst observed metric (relative error, ratio, ...).
    pub worst: f64,
    pub detail: String,
}

impl CheckResult {
    pub fn ok(&self) -> bool {
        self.failed == 0 && self.passed > 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelftestReport {
    pub seed: u64,
    pub checks: Vec<CheckResult>,
    pub passed: usize,
    pub failed: usize,
}

/// One randomly drawn operating point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub params: SystemParams<f64>,
    pub derived: DerivedQuantities<f64>,
    pub omega: f64,
}

/// J/κ_a log-uniform on [0.01, 4], G/2π uniform on [0, 15] MHz, Ω/ω_m
/// uniform on [−2, 2], κ_b = ±κ_a with random sign.
pub fn draw(rng: &mut impl Rng) -> Sample {
    let mut doc = ConfigDocument::reference();
    doc.j_over_kappa_a = 10f64.powf(rng.gen_range(0.01f64.log10()..4f64.log10()));
    doc.g_mhz = rng.gen_range(0.0..15.0);
    doc.kappa_b_mhz = if rng.gen_bool(0.5) {
        doc.kappa_a_mhz
    } else {
        -doc.kappa_a_mhz
    };
    let ratio: f64 = rng.gen_range(-2.0..2.0);
    let params = doc.resolve().expect("drawn parameters are valid");
    Sample {
        params,
        derived: derive(&params),
        omega: ratio * params.omega_m,
    }
}

fn steady(s: &Sample) -> Result<SteadyState<f64>> {
    solve_steady_state(&s.params, &s.derived, BranchPolicy::Lowest)
}

/// Closed form against harmonic balance for A1- and A2- on `n` random
/// points. Points where either route reports a singular response are
/// redrawn and counted in the detail line.
pub fn equivalence_suite(n: usize, seed: u64) -> (CheckResult, CheckResult) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut w1, mut w2) = (0.0f64, 0.0f64);
    let (mut f1, mut f2) = (0, 0);
    let mut done = 0;
    let mut redrawn = 0;
    while done < n {
        let smp = draw(&mut rng);
        let Ok(st) = steady(&smp) else {
            redrawn += 1;
            continue;
        };
        let (cf, h) = match (
            closed_form(&smp.params, &smp.derived, &st, smp.omega),
            hierarchical_solve(&smp.params, &smp.derived, &st, smp.omega),
        ) {
            (Ok(a), Ok(b)) => (a, b),
            _ => {
                redrawn += 1;
                continue;
            }
        };
        done += 1;
        let e1 = rel_diff(cf.a1_minus, h.a1_minus);
        let e2 = rel_diff(cf.a2_minus, h.a2_minus);
        w1 = w1.max(e1);
        w2 = w2.max(e2);
        f1 += usize::from(!(e1 < EQUIVALENCE_TOL));
        f2 += usize::from(!(e2 < EQUIVALENCE_TOL));
    }
    let detail = format!("{n} points, {redrawn} redrawn, tolerance {EQUIVALENCE_TOL:e}");
    (
        CheckResult {
            name: "A1- closed form vs harmonic balance".into(),
            passed: n - f1,
            failed: f1,
            worst: w1,
            detail: detail.clone(),
        },
        CheckResult {
            name: "A2- closed form vs harmonic balance".into(),
            passed: n - f2,
            failed: f2,
            worst: w2,
            detail,
        },
    )
}

/// The eliminated B and C contributions reproduce the α kernels.
pub fn kernel_check(n: usize, seed: u64) -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xa1fa);
    let i = num_complex::Complex64::i();
    let (mut worst, mut failed, mut done) = (0.0f64, 0, 0);
    while done < n {
        let smp = draw(&mut rng);
        let Ok(st) = steady(&smp) else { continue };
        let (Ok(r), Ok((kb, kc)), Ok((kbm, kcm))) = (
            response_at(&smp.params, &smp.derived, &st, smp.omega),
            elimination_kernels(&smp.params, smp.omega),
            elimination_kernels(&smp.params, -smp.omega),
        ) else {
            continue;
        };
        done += 1;
        let p = &smp.params;
        let errs = [
            rel_diff(-i * p.tunneling_j * kb, -r.alpha3),
            rel_diff(-i * p.atom_coupling_g * kc, -r.alpha4),
            rel_diff((-i * p.tunneling_j * kbm).conj(), -r.alpha1),
            rel_diff((-i * p.atom_coupling_g * kcm).conj(), -r.alpha2),
        ];
        let e = errs.iter().copied().fold(0.0, f64::max);
        worst = worst.max(e);
        failed += usize::from(!(e < 1e-12));
    }
    CheckResult {
        name: "elimination kernels reproduce α1..α4".into(),
        passed: n - failed,
        failed,
        worst,
        detail: format!("{n} points, tolerance 1e-12"),
    }
}

/// Doubling ε_p leaves η_f unchanged and doubles η_s.
pub fn probe_scaling_check(n: usize, seed: u64) -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5ca1e);
    let (mut worst, mut failed, mut done) = (0.0f64, 0, 0);
    while done < n {
        let smp = draw(&mut rng);
        let Ok(st) = steady(&smp) else { continue };
        let mut d2 = smp.derived;
        d2.eps_probe *= 2.0;
        let (Ok(a), Ok(b)) = (
            closed_form(&smp.params, &smp.derived, &st, smp.omega),
            closed_form(&smp.params, &d2, &st, smp.omega),
        ) else {
            continue;
        };
        done += 1;
        let ea =
            efficiencies(&smp.params, &smp.derived, a.a1_minus, a.a2_minus).expect("probe is on");
        let eb = efficiencies(&smp.params, &d2, b.a1_minus, b.a2_minus).expect("probe is on");
        let e_f = (eb.eta_f - ea.eta_f).abs() / ea.eta_f;
        let e_s = (eb.eta_s - 2.0 * ea.eta_s).abs() / (2.0 * ea.eta_s);
        let e = e_f.max(e_s);
        worst = worst.max(e);
        failed += usize::from(!(e < 1e-12));
    }
    CheckResult {
        name: "η_f independent of ε_p, η_s linear in ε_p".into(),
        passed: n - failed,
        failed,
        worst,
        detail: format!("{n} points, tolerance 1e-12"),
    }
}

/// With g1 = 0 there is no second-order sideband.
pub fn no_coupling_check(n: usize, seed: u64) -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x0c0);
    let (mut worst, mut failed, mut done) = (0.0f64, 0, 0);
    while done < n {
        let mut smp = draw(&mut rng);
        smp.derived.g1 = 0.0;
        let Ok(st) = steady(&smp) else { continue };
        let Ok(sol) = closed_form(&smp.params, &smp.derived, &st, smp.omega) else {
            continue;
        };
        done += 1;
        let e = efficiencies(&smp.params, &smp.derived, sol.a1_minus, sol.a2_minus)
            .expect("probe is on");
        let ratio = e.eta_s / e.eta_f.max(f64::MIN_POSITIVE);
        worst = worst.max(ratio);
        failed += usize::from(!(ratio <= 1e-15));
    }
    CheckResult {
        name: "η_s vanishes without optomechanical coupling".into(),
        passed: n - failed,
        failed,
        worst,
        detail: format!("{n} points, η_s/η_f ≤ 1e-15"),
    }
}

/// G → 0 is a continuous limit.
pub fn atom_continuity_check() -> CheckResult {
    let mut doc = ConfigDocument::reference();
    doc.g_mhz = 0.0;
    let p0 = doc.resolve().expect("valid");
    doc.g_mhz = 1e-6;
    let p1 = doc.resolve().expect("valid");
    let (d0, d1) = (derive(&p0), derive(&p1));
    let (s0, s1) = (
        solve_steady_state(&p0, &d0, BranchPolicy::Lowest).expect("steady"),
        solve_steady_state(&p1, &d1, BranchPolicy::Lowest).expect("steady"),
    );
    let (mut worst, mut failed, mut passed) = (0.0f64, 0, 0);
    for k in 0..81 {
        let w = (-2.0 + 0.05 * k as f64 + 0.001) * p0.omega_m;
        let (Ok(a), Ok(b)) = (closed_form(&p0, &d0, &s0, w), closed_form(&p1, &d1, &s1, w)) else {
            continue;
        };
        let e = rel_diff(a.a1_minus, b.a1_minus).max(rel_diff(a.a2_minus, b.a2_minus));
        worst = worst.max(e);
        if e < 1e-4 {
            passed += 1;
        } else {
            failed += 1;
        }
    }
    CheckResult {
        name: "continuity in G at G = 0".into(),
        passed,
        failed,
        worst,
        detail: "81 Ω points, G/2π = 1e-6 MHz vs 0, tolerance 1e-4".into(),
    }
}

/// The η_s feature near Ω = −ω_m comes from the atoms: without them it is
/// absent or at least ten times weaker.
pub fn atom_peak_check() -> CheckResult {
    let peak = |g: f64| {
        let mut doc = ConfigDocument::reference();
        doc.g_mhz = g;
        doc.kappa_b_mhz = -doc.kappa_a_mhz;
        let p = doc.resolve().expect("valid");
        let d = derive(&p);
        let s = solve_steady_state(&p, &d, BranchPolicy::Lowest).expect("steady");
        find_peak(&p, &d, &s, Observable::EtaSMax, [-1.5, -0.5], 2001).map(|pk| pk.value)
    };
    let (with, without) = match (peak(10.0), peak(0.0)) {
        (Ok(a), Ok(b)) => (a, b),
        _ => (f64::NAN, f64::NAN),
    };
    let ratio = with / without;
    let ok = ratio > 10.0;
    CheckResult {
        name: "η_s peak near Ω = −ω_m needs atoms".into(),
        passed: usize::from(ok),
        failed: usize::from(!ok),
        worst: ratio,
        detail: format!("max η_s near −1: {with:.3e} with G/2π = 10 MHz, {without:.3e} without"),
    }
}

/// Run every check. `n` sets the number of random points for the
/// equivalence suite (the other random checks use n/10).
pub fn run(n: usize, seed: u64) -> SelftestReport {
    let (a1, a2) = equivalence_suite(n, seed);
    let small = (n / 10).max(1);
    let checks = vec![
        a1,
        a2,
        kernel_check(small, seed),
        probe_scaling_check(small, seed),
        no_coupling_check(small, seed),
        atom_continuity_check(),
        atom_peak_check(),
    ];
    let passed = checks.iter().filter(|c| c.ok()).count();
    SelftestReport {
        seed,
        failed: checks.len() - passed,
        passed,
        checks,
    }
}
