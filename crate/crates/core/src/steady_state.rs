//! Self-consistent steady state of the pumped system.
//!
//! Radiation pressure shifts the cavity detuning by `g1² I / ω_m`
//! (I = |a_s|²), which turns the field equation into a real cubic in I.
//! Every non-negative root is a candidate steady state; a [`BranchPolicy`]
//! picks one.

use std::fmt;
use std::str::FromStr;

use nalgebra::SMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::real_cubic_roots;
use crate::params::{DerivedQuantities, SystemParams};
use crate::real::{c, i_unit, Real, C};

/// Relative bound on `|D(I) a_s + sqrt(ηκ_a) ε₁|`.
pub const RESIDUAL_TOL: f64 = 1e-9;

/// Denominators below `DEGENERATE_TOL · κ_a` are rejected.
pub const DEGENERATE_TOL: f64 = 1e-6;

/// Coefficients of `c3 I³ + c2 I² + c1 I + c0` whose roots are the
/// admissible intra-cavity intensities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IntensityPolynomial<T> {
    pub c3: T,
    pub c2: T,
    pub c1: T,
    pub c0: T,
}

impl<T: Real> IntensityPolynomial<T> {
    pub fn eval(&self, intensity: T) -> T {
        ((self.c3 * intensity + self.c2) * intensity + self.c1) * intensity + self.c0
    }
}

/// Intensity-independent part of the field denominator:
/// `−κ_a/2 + J²/(iΔ₁ − κ_b/2) − G²/(γ_a + iΔ₂)`.
fn static_denominator<T: Real>(p: &SystemParams<T>) -> Result<C<T>> {
    let half = T::lit(0.5);
    let threshold = T::lit(DEGENERATE_TOL) * p.kappa_a;
    let mut k = c(-half * p.kappa_a, T::zero());
    if p.tunneling_j != T::zero() {
        let den = c(-half * p.kappa_b, p.delta_1);
        if den.norm() < threshold {
            return Err(Error::DegenerateDenominator {
                which: "iΔ₁ − κ_b/2",
                modulus: den.norm().as_f64(),
                threshold: threshold.as_f64(),
            });
        }
        k = k + c(p.tunneling_j * p.tunneling_j, T::zero()) / den;
    }
    if p.atom_coupling_g != T::zero() {
        let den = c(p.gamma_atom, p.delta_2);
        if den.norm() < threshold {
            return Err(Error::DegenerateDenominator {
                which: "γ_a + iΔ₂",
                modulus: den.norm().as_f64(),
                threshold: threshold.as_f64(),
            });
        }
        k = k - c(p.atom_coupling_g * p.atom_coupling_g, T::zero()) / den;
    }
    Ok(k)
}

/// Optomechanical frequency pull per unit intensity, `g1²/ω_m`.
fn shift_per_intensity<T: Real>(p: &SystemParams<T>, d: &DerivedQuantities<T>) -> T {
    d.g1 * d.g1 / p.omega_m
}

/// The full field denominator `D(I)`; `a_s = −sqrt(ηκ_a) ε₁ / D(I)`.
pub fn field_denominator<T: Real>(
    p: &SystemParams<T>,
    d: &DerivedQuantities<T>,
    intensity: T,
) -> Result<C<T>> {
    let k = static_denominator(p)?;
    Ok(k + c(T::zero(), p.delta_1 + shift_per_intensity(p, d) * intensity))
}

pub fn intensity_polynomial<T: Real>(
    p: &SystemParams<T>,
    d: &DerivedQuantities<T>,
) -> Result<IntensityPolynomial<T>> {
    let k = static_denominator(p)?;
    let s = shift_per_intensity(p, d);
    // |D(I)|² = Re(K)² + (Δ₁ + Im(K) + s I)²
    let detuning = p.delta_1 + k.im;
    let two = T::lit(2.0);
    Ok(IntensityPolynomial {
        c3: s * s,
        c2: two * detuning * s,
        c1: k.re * k.re + detuning * detuning,
        c0: -(p.eta * p.kappa_a * d.eps_pump * d.eps_pump),
    })
}

/// Which root of the intensity cubic to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum BranchPolicy {
    /// Smallest intensity: the branch connected to the undriven state.
    #[default]
    Lowest,
    Highest,
    /// Zero-based index into the ascending list of physical roots.
    Index(usize),
}

impl fmt::Display for BranchPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BranchPolicy::Lowest => f.write_str("lowest"),
            BranchPolicy::Highest => f.write_str("highest"),
            BranchPolicy::Index(n) => write!(f, "index:{n}"),
        }
    }
}

impl From<BranchPolicy> for String {
    fn from(b: BranchPolicy) -> String {
        b.to_string()
    }
}

impl TryFrom<String> for BranchPolicy {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl FromStr for BranchPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lowest" => Ok(BranchPolicy::Lowest),
            "highest" => Ok(BranchPolicy::Highest),
            other => other
                .strip_prefix("index:")
                .and_then(|n| n.parse().ok())
                .map(BranchPolicy::Index)
                .ok_or_else(|| {
                    Error::InvalidInput(format!(
                        "branch must be lowest, highest or index:n (got `{other}`)"
                    ))
                }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SteadyState<T> {
    pub a_s: C<T>,
    pub b_s: C<T>,
    pub c_s: C<T>,
    /// Mechanical displacement in metres.
    pub x_s: T,
    /// Mechanical displacement in units of the zero-point displacement.
    pub x_s_zpf: T,
    /// |a_s|².
    pub intensity: T,
    /// Shifted detuning Δ̄ = Δ₁ − g1 x̃_s.
    pub delta_bar: T,
    /// All real non-negative roots of the intensity cubic, ascending.
    pub all_roots: Vec<T>,
    pub branch: BranchPolicy,
    /// Index of the selected root in `all_roots`.
    pub selected: usize,
    /// |D(|a_s|²) a_s + sqrt(ηκ_a) ε₁|.
    pub residual: T,
    pub converged: bool,
}

impl<T: Real> SteadyState<T> {
    pub fn is_multistable(&self) -> bool {
        self.all_roots.len() > 1
    }

    /// Largest steady amplitude, used as a natural scale for fluctuations.
    pub fn scale(&self) -> T {
        self.a_s
            .norm()
            .max(self.b_s.norm())
            .max(self.c_s.norm())
            .max(self.x_s_zpf.abs())
    }
}

pub fn solve_steady_state<T: Real>(
    p: &SystemParams<T>,
    d: &DerivedQuantities<T>,
    branch: BranchPolicy,
) -> Result<SteadyState<T>> {
    let poly = intensity_polynomial(p, d)?;
    let roots = real_cubic_roots(poly.c3, poly.c2, poly.c1, poly.c0);
    let physical: Vec<T> = roots.real.into_iter().filter(|r| *r >= T::zero()).collect();
    if physical.is_empty() {
        return Err(Error::NoPhysicalRoot);
    }
    let selected = match branch {
        BranchPolicy::Lowest => 0,
        BranchPolicy::Highest => physical.len() - 1,
        BranchPolicy::Index(n) if n < physical.len() => n,
        BranchPolicy::Index(n) => {
            return Err(Error::NoSuchBranch {
                requested: format!("index:{n}"),
                available: physical.len(),
            })
        }
    };
    let drive = p.input_coupling() * d.eps_pump;
    let den = field_denominator(p, d, physical[selected])?;
    let a_s = c(-drive, T::zero()) / den;
    let i = i_unit::<T>();

    let b_s = if p.tunneling_j == T::zero() {
        c(T::zero(), T::zero())
    } else {
        i * p.tunneling_j * a_s / c(-T::lit(0.5) * p.kappa_b, p.delta_1)
    };
    let c_s = if p.atom_coupling_g == T::zero() {
        c(T::zero(), T::zero())
    } else {
        -i * p.atom_coupling_g * a_s / c(p.gamma_atom, p.delta_2)
    };

    let intensity = a_s.norm_sqr();
    let x_s_zpf = -d.g1 * intensity / p.omega_m;
    let residual = (field_denominator(p, d, intensity)? * a_s + drive).norm();
    let converged = residual <= T::lit(RESIDUAL_TOL) * drive;
    if !converged {
        log::warn!(
            "steady-state residual {:e} exceeds bound",
            (residual / drive).as_f64()
        );
    }

    Ok(SteadyState {
        a_s,
        b_s,
        c_s,
        x_s: x_s_zpf * d.x_zpf,
        x_s_zpf,
        intensity,
        delta_bar: p.delta_1 - d.g1 * x_s_zpf,
        all_roots: physical,
        branch,
        selected,
        residual,
        converged,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinearStability {
    pub eigenvalues: Vec<Complex64>,
    pub max_real: f64,
    pub stable: bool,
}

/// Jacobian of the mean-field equations about the steady state in the real
/// basis (Re a, Im a, Re b, Im b, Re c, Im c, x̃, p̃), where x̃, p̃ are in
/// zero-point units. It is similar to the complex (δa, δa*, …) form, so the
/// spectrum is the same.
pub fn jacobian<T: Real>(
    p: &SystemParams<T>,
    d: &DerivedQuantities<T>,
    s: &SteadyState<T>,
) -> SMatrix<f64, 8, 8> {
    let f = |v: T| v.as_f64();
    let (ka, kb) = (f(p.kappa_a), f(p.kappa_b));
    let (j, g, gam) = (f(p.tunneling_j), f(p.atom_coupling_g), f(p.gamma_atom));
    let (d1, d2, wm, gm) = (f(p.delta_1), f(p.delta_2), f(p.omega_m), f(p.gamma_m));
    let g1 = f(d.g1);
    let (ar, ai) = (f(s.a_s.re), f(s.a_s.im));
    let db = f(s.delta_bar);

    let mut m = SMatrix::<f64, 8, 8>::zeros();
    // Complex coefficient w acting on complex variable at (row, col).
    let mut put = |row: usize, col: usize, w: Complex64| {
        m[(row, col)] += w.re;
        m[(row, col + 1)] -= w.im;
        m[(row + 1, col)] += w.im;
        m[(row + 1, col + 1)] += w.re;
    };
    put(0, 0, Complex64::new(-ka / 2.0, db));
    put(0, 2, Complex64::new(0.0, -j));
    put(0, 4, Complex64::new(0.0, -g));
    put(2, 2, Complex64::new(-kb / 2.0, d1));
    put(2, 0, Complex64::new(0.0, -j));
    put(4, 4, Complex64::new(-gam, -d2));
    put(4, 0, Complex64::new(0.0, -g));
    // −i g1 a_s δx̃
    m[(0, 6)] += g1 * ai;
    m[(1, 6)] -= g1 * ar;
    // x̃' = ω_m p̃ ; p̃' = −ω_m x̃ − 2 g1 Re(a_s* δa) − Γ_m p̃
    m[(6, 7)] = wm;
    m[(7, 6)] = -wm;
    m[(7, 7)] = -gm;
    m[(7, 0)] = -2.0 * g1 * ar;
    m[(7, 1)] = -2.0 * g1 * ai;
    m
}

pub fn assess_linear_stability<T: Real>(
    p: &SystemParams<T>,
    d: &DerivedQuantities<T>,
    s: &SteadyState<T>,
) -> LinearStability {
    let eig = jacobian(p, d, s).complex_eigenvalues();
    let mut eigenvalues: Vec<Complex64> = eig.iter().copied().collect();
    eigenvalues.sort_by(|a, b| {
        b.re.partial_cmp(&a.re)
            .unwrap()
            .then(a.im.partial_cmp(&b.im).unwrap())
    });
    let max_real = eigenvalues
        .iter()
        .map(|z| z.re)
        .fold(f64::NEG_INFINITY, f64::max);
    LinearStability {
        eigenvalues,
        max_real,
        stable: max_real < 0.0,
    }
}
