//! Closed-form sideband amplitudes.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::params::{DerivedQuantities, SystemParams};
use crate::real::{i_unit, rel_diff, Real, C};
use crate::sideband::hierarchical::second_order_block;
use crate::sideband::response::{guard, response_functions, ResponsePair};
use crate::sideband::{Method, SidebandSolution};
use crate::steady_state::SteadyState;

/// Largest tolerated relative gap between the closed-form A2- and the one
/// returned by the second-order block.
pub const MISMATCH_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FirstOrder<T> {
    #[serde(rename = "A1_minus")]
    pub a1_minus: C<T>,
    #[serde(rename = "A1_plus")]
    pub a1_plus: C<T>,
    /// X1 in zero-point units.
    pub x1_zpf: C<T>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SecondOrder<T> {
    #[serde(rename = "A2_minus")]
    pub a2_minus: C<T>,
    #[serde(rename = "A2_plus")]
    pub a2_plus: C<T>,
    pub x2_zpf: C<T>,
}

fn one_plus_i<T: Real>(f: C<T>) -> Result<C<T>> {
    guard(i_unit::<T>() * f + T::one(), T::one(), "1 + if")
}

pub(crate) fn first_order_with<T: Real>(
    p: &SystemParams<T>,
    d: &DerivedQuantities<T>,
    s: &SteadyState<T>,
    r: &ResponsePair<T>,
) -> Result<FirstOrder<T>> {
    let i = i_unit::<T>();
    let w = &r.omega;
    let g1 = d.g1;
    let drive = p.input_coupling() * d.eps_probe;
    let opf = one_plus_i(w.f)?;
    let pull = i * g1 * g1 * s.intensity * w.chi_zpf;
    let den = guard(-w.beta2 * opf - pull, p.kappa_a, "first-order denominator")?;
    let a1_minus = opf * drive / den;
    let x1 = -(s.a_s.conj() * w.chi_zpf * a1_minus * g1) / opf;
    let a1_plus_conj = i * g1 * s.a_s.conj() * x1 / w.beta1;
    Ok(FirstOrder {
        a1_minus,
        a1_plus: a1_plus_conj.conj(),
        x1_zpf: x1,
    })
}

/// A1-, A1+ and X1.
pub fn first_order<T: Real>(
    p: &SystemParams<T>,
    d: &DerivedQuantities<T>,
    s: &SteadyState<T>,
    omega: T,
) -> Result<FirstOrder<T>> {
    let r = response_functions(p, d, s, omega)?;
    first_order_with(p, d, s, &r)
}

/// Closed-form A2- from the θ auxiliaries.
pub(crate) fn a2_minus_with<T: Real>(
    p: &SystemParams<T>,
    d: &DerivedQuantities<T>,
    s: &SteadyState<T>,
    r: &ResponsePair<T>,
    first: &FirstOrder<T>,
) -> Result<C<T>> {
    let i = i_unit::<T>();
    let g1 = d.g1;
    let a = s.a_s;
    let (w, w2) = (&r.omega, &r.two_omega);
    let x1 = first.x1_zpf;
    let opf2 = one_plus_i(w2.f)?;
    let theta4 = first.a1_minus * x1;
    let theta1 = x1 * x1 * w2.f * g1 / (w.beta1 * opf2);
    let theta2 = a.conj() * w2.chi_zpf * g1 / opf2;
    let f1 = a.conj() * theta4 * w2.chi_zpf * (g1 * g1) / w.beta1;
    let theta3 = i * f1 / opf2;
    let den = guard(
        w2.beta2 + i * a * theta2 * g1,
        p.kappa_a,
        "second-order denominator",
    )?;
    Ok(i * g1 * (a * (theta1 - theta3) + theta4) / den)
}

/// A2- in closed form; A2+ and X2 from the second-order block, whose own
/// A2- must agree with the closed form.
pub fn second_order<T: Real>(
    p: &SystemParams<T>,
    d: &DerivedQuantities<T>,
    s: &SteadyState<T>,
    omega: T,
    first: &FirstOrder<T>,
) -> Result<SecondOrder<T>> {
    let r = response_functions(p, d, s, omega)?;
    second_order_with(p, d, s, &r, first)
}

fn second_order_with<T: Real>(
    p: &SystemParams<T>,
    d: &DerivedQuantities<T>,
    s: &SteadyState<T>,
    r: &ResponsePair<T>,
    first: &FirstOrder<T>,
) -> Result<SecondOrder<T>> {
    let a2_minus = a2_minus_with(p, d, s, r, first)?;
    let [block_a2m, a2pc, x2] = second_order_block(
        p,
        d,
        s,
        r.omega.nu,
        first.a1_minus,
        first.a1_plus.conj(),
        first.x1_zpf,
    )?;
    let gap = rel_diff(a2_minus, block_a2m);
    let tol = T::lit(MISMATCH_TOL).max(T::epsilon() * T::lit(1e3));
    if !(gap <= tol) {
        return Err(Error::HierarchyMismatch {
            rel_diff: gap.as_f64(),
        });
    }
    Ok(SecondOrder {
        a2_minus,
        a2_plus: a2pc.conj(),
        x2_zpf: x2,
    })
}

/// Full sideband solution through the closed forms.
pub fn closed_form<T: Real>(
    p: &SystemParams<T>,
    d: &DerivedQuantities<T>,
    s: &SteadyState<T>,
    omega: T,
) -> Result<SidebandSolution<T>> {
    let r = response_functions(p, d, s, omega)?;
    let first = first_order_with(p, d, s, &r)?;
    let second = second_order_with(p, d, s, &r, &first)?;
    Ok(SidebandSolution {
        omega,
        a1_minus: first.a1_minus,
        a1_plus: first.a1_plus,
        a2_minus: second.a2_minus,
        a2_plus: second.a2_plus,
        x1: first.x1_zpf * d.x_zpf,
        x2: second.x2_zpf * d.x_zpf,
        x1_zpf: first.x1_zpf,
        x2_zpf: second.x2_zpf,
        eliminated: None,
        method: Method::ClosedForm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{derive, ConfigDocument};
    use crate::sideband::hierarchical_solve;
    use crate::steady_state::{solve_steady_state, BranchPolicy};

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
    fn zero_probe() {
        let (p, d, s) = setup(|c| c.probe_ratio = 0.0);
        let f = first_order(&p, &d, &s, p.omega_m).unwrap();
        assert_eq!(f.a1_minus.norm() + f.a1_plus.norm() + f.x1_zpf.norm(), 0.0);
    }

    #[test]
    fn decoupled_mechanics_gives_bare_response() {
        let (p, mut d, _) = setup(|_| {});
        d.g1 = 0.0;
        let s = solve_steady_state(&p, &d, BranchPolicy::Lowest).unwrap();
        let w = 1.1 * p.omega_m;
        let r = response_functions(&p, &d, &s, w).unwrap();
        let f = first_order(&p, &d, &s, w).unwrap();
        let bare = -p.input_coupling() * d.eps_probe / r.omega.beta2;
        assert!((f.a1_minus - bare).norm() < 1e-14 * bare.norm());
        assert_eq!(f.x1_zpf.norm(), 0.0);
        let sec = second_order(&p, &d, &s, w, &f).unwrap();
        assert_eq!(
            sec.a2_minus.norm() + sec.a2_plus.norm() + sec.x2_zpf.norm(),
            0.0
        );
    }

    #[test]
    fn probe_scaling_is_exact_in_model() {
        let (p, d, s) = setup(|_| {});
        let mut d2 = d;
        d2.eps_probe = 2.0 * d.eps_probe;
        let w = 0.97 * p.omega_m;
        let a = closed_form(&p, &d, &s, w).unwrap();
        let b = closed_form(&p, &d2, &s, w).unwrap();
        assert!((b.a1_minus - a.a1_minus * 2.0).norm() < 1e-14 * b.a1_minus.norm());
        assert!((b.a2_minus - a.a2_minus * 4.0).norm() < 1e-13 * b.a2_minus.norm());
    }

    #[test]
    fn agrees_with_hierarchical_route() {
        for (j, g, kb) in [
            (0.45, 0.0, -2.0),
            (0.55, 10.0, -2.0),
            (1.3, 10.0, 2.0),
            (2.8, 5.0, -2.0),
        ] {
            let (p, d, s) = setup(|c| {
                c.j_over_kappa_a = j;
                c.g_mhz = g;
                c.kappa_b_mhz = kb;
            });
            for k in 0..41 {
                let w = (-2.0 + 0.1 * k as f64 + 0.0037) * p.omega_m;
                let cf = closed_form(&p, &d, &s, w).unwrap();
                let h = hierarchical_solve(&p, &d, &s, w).unwrap();
                assert!(rel_diff(cf.a1_minus, h.a1_minus) < 1e-10);
                assert!(
                    rel_diff(cf.a2_minus, h.a2_minus) < 1e-10,
                    "J={j} G={g} Ω={w}"
                );
                assert!(rel_diff(cf.a1_plus, h.a1_plus) < 1e-10);
                assert!(rel_diff(cf.x1, h.x1) < 1e-10);
            }
        }
    }

    #[test]
    fn f32_instantiation_is_close() {
        let (p, d, s) = setup(|c| c.j_over_kappa_a = 0.55);
        let w = 0.9 * p.omega_m;
        let r64 = closed_form(&p, &d, &s, w).unwrap();
        let p32 = p.cast::<f32>();
        let d32 = derive(&p32);
        let s32 = solve_steady_state(&p32, &d32, BranchPolicy::Lowest).unwrap();
        let r32 = closed_form(&p32, &d32, &s32, w as f32).unwrap();
        let a = crate::real::cast_c::<f32, f64>(r32.a1_minus);
        assert!(rel_diff(a, r64.a1_minus) < 1e-3);
    }
}
