//! Response functions entering the closed-form sideband amplitudes.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::params::{DerivedQuantities, SystemParams};
use crate::real::{c, i_unit, Real, C};
use crate::steady_state::SteadyState;

/// Denominators smaller than this fraction of their natural scale are
/// treated as singular.
pub const SINGULAR_TOL: f64 = 1e-8;

/// Every symbol of the closed-form solution at one frequency argument ν.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResponseFunctions<T> {
    pub nu: T,
    pub alpha1: C<T>,
    pub alpha2: C<T>,
    pub alpha3: C<T>,
    pub alpha4: C<T>,
    pub beta1: C<T>,
    pub beta2: C<T>,
    /// Mechanical susceptibility 1/(m(ω_m² − ν² − iνΓ_m)).
    pub chi: C<T>,
    /// Susceptibility in zero-point units, ω_m/(ω_m² − ν² − iνΓ_m).
    pub chi_zpf: C<T>,
    /// Optomechanical feedback g1² |a_s|² χ̃(ν) / β1(ν).
    pub f: C<T>,
    pub delta_bar: T,
}

/// Response functions at Ω and 2Ω.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResponsePair<T> {
    pub omega: ResponseFunctions<T>,
    pub two_omega: ResponseFunctions<T>,
}

pub(crate) fn guard<T: Real>(den: C<T>, scale: T, which: &'static str) -> Result<C<T>> {
    let threshold = T::lit(SINGULAR_TOL) * scale.abs();
    let modulus = den.norm();
    if modulus < threshold || !modulus.is_finite() {
        return Err(Error::SingularResponse {
            which,
            modulus: modulus.as_f64(),
            threshold: threshold.as_f64(),
        });
    }
    Ok(den)
}

/// `num / den`, zero when `num` is exactly zero (so an absent coupling never
/// trips the singularity guard).
fn kernel<T: Real>(num: T, den: C<T>, scale: T, which: &'static str) -> Result<C<T>> {
    if num == T::zero() {
        return Ok(c(T::zero(), T::zero()));
    }
    Ok(c(num, T::zero()) / guard(den, scale, which)?)
}

pub fn response_at<T: Real>(
    p: &SystemParams<T>,
    d: &DerivedQuantities<T>,
    s: &SteadyState<T>,
    nu: T,
) -> Result<ResponseFunctions<T>> {
    let half = T::lit(0.5);
    let ka = p.kappa_a;
    let j2 = p.tunneling_j * p.tunneling_j;
    let g2 = p.atom_coupling_g * p.atom_coupling_g;
    let i = i_unit::<T>();

    let alpha1 = kernel(j2, c(half * p.kappa_b, p.delta_1 - nu), ka, "α1")?;
    let alpha2 = kernel(g2, c(p.gamma_atom, -(p.delta_2 + nu)), ka, "α2")?;
    let alpha3 = kernel(j2, c(half * p.kappa_b, -(p.delta_1 + nu)), ka, "α3")?;
    let alpha4 = kernel(g2, c(p.gamma_atom, p.delta_2 - nu), ka, "α4")?;

    let db = s.delta_bar;
    let beta1 = i * (db - nu) + half * ka + alpha1 + alpha2;
    let beta2 = i * (db + nu) - half * ka - alpha3 - alpha4;

    let wm = p.omega_m;
    let mech = guard(
        c(wm * wm - nu * nu, -nu * p.gamma_m),
        wm * wm,
        "ω_m² − ν² − iνΓ_m",
    )?;
    let chi_zpf = c(wm, T::zero()) / mech;
    let chi = c(T::one(), T::zero()) / (mech * p.mass);
    let f = chi_zpf * (d.g1 * d.g1 * s.intensity) / guard(beta1, ka, "β1")?;

    Ok(ResponseFunctions {
        nu,
        alpha1,
        alpha2,
        alpha3,
        alpha4,
        beta1,
        beta2,
        chi,
        chi_zpf,
        f,
        delta_bar: db,
    })
}

pub fn response_functions<T: Real>(
    p: &SystemParams<T>,
    d: &DerivedQuantities<T>,
    s: &SteadyState<T>,
    omega: T,
) -> Result<ResponsePair<T>> {
    Ok(ResponsePair {
        omega: response_at(p, d, s, omega)?,
        two_omega: response_at(p, d, s, omega + omega)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{derive, ConfigDocument};
    use crate::steady_state::{solve_steady_state, BranchPolicy};
    use num_complex::Complex64;

    fn setup(
        edit: impl FnOnce(&mut ConfigDocument),
    ) -> (SystemParams<f64>, DerivedQuantities<f64>, SteadyState<f64>) {
        let mut doc = ConfigDocument::reference();
        edit(&mut doc);
        let p = doc.resolve().unwrap();
        let d = derive(&p);
        let s = solve_steady_state(&p, &d, BranchPolicy::Lowest).unwrap();
        (p, d, s)
    }

    #[test]
    fn atom_kernels_vanish_without_atoms() {
        let (p, d, s) = setup(|c| c.g_mhz = 0.0);
        let r = response_at(&p, &d, &s, 0.7 * p.omega_m).unwrap();
        assert_eq!(r.alpha2, Complex64::new(0.0, 0.0));
        assert_eq!(r.alpha4, Complex64::new(0.0, 0.0));
    }

    #[test]
    fn tunnelling_kernels_vanish_without_tunnelling() {
        let (p, d, s) = setup(|c| c.j_over_kappa_a = 0.0);
        let r = response_at(&p, &d, &s, 1.3 * p.omega_m).unwrap();
        assert_eq!(r.alpha1, Complex64::new(0.0, 0.0));
        assert_eq!(r.alpha3, Complex64::new(0.0, 0.0));
    }

    #[test]
    fn susceptibility_on_mechanical_resonance() {
        let (p, d, s) = setup(|_| {});
        let w = p.omega_m;
        let r = response_at(&p, &d, &s, w).unwrap();
        let direct = 1.0 / (Complex64::new(w * w - w * w, -w * p.gamma_m) * p.mass);
        assert!((r.chi - direct).norm() / direct.norm() < 1e-14);
        let peak = 1.0 / (p.mass * w * p.gamma_m);
        assert!((r.chi.norm() - peak).abs() / peak < 1e-12);
        let pair = response_functions(&p, &d, &s, w).unwrap();
        let two = 1.0 / (Complex64::new(w * w - 4.0 * w * w, -2.0 * w * p.gamma_m) * p.mass);
        assert!((pair.two_omega.chi - two).norm() / two.norm() < 1e-14);
    }

    #[test]
    fn kernels_by_substitution() {
        let (p, d, s) = setup(|_| {});
        let nu = 0.37 * p.omega_m;
        let r = response_at(&p, &d, &s, nu).unwrap();
        let i = Complex64::i();
        let j2 = p.tunneling_j.powi(2);
        let g2 = p.atom_coupling_g.powi(2);
        assert!((r.alpha1 * (p.kappa_b / 2.0 + i * (p.delta_1 - nu)) - j2).norm() < 1e-12 * j2);
        assert!((r.alpha2 * (p.gamma_atom - i * (p.delta_2 + nu)) - g2).norm() < 1e-12 * g2);
        assert!((r.alpha3 * (p.kappa_b / 2.0 - i * (p.delta_1 + nu)) - j2).norm() < 1e-12 * j2);
        assert!((r.alpha4 * (p.gamma_atom + i * (p.delta_2 - nu)) - g2).norm() < 1e-12 * g2);
    }

    #[test]
    fn singular_kernel_is_reported() {
        // κ_b = 0 and Δ₁ = −ν puts α3 exactly on its pole.
        let (mut p, d, s) = setup(|c| c.kappa_b_mhz = 1.0);
        p.kappa_b = 0.0;
        let err = response_at(&p, &d, &s, -p.delta_1).unwrap_err();
        assert!(matches!(err, Error::SingularResponse { which: "α3", .. }));
    }
}
