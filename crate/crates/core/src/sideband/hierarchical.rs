//! Order-by-order harmonic balance.
//!
//! Substituting the sideband ansatz into the mean-field equations and
//! collecting e^{-iνt} components gives, per order, a 3×3 complex system in
//! (A_ν, A_{−ν}*, X̃_ν). Cavity B and the atoms enter only linearly and are
//! eliminated per harmonic with [`elimination_kernels`].
//!
//! At first order (ν = Ω) the sources are the probe drive alone. The
//! products X̃·δa and |δa|² would add third-order pieces
//! (A1+ X2, A2- X1*, A1- X2*, A2+ X1, A1-* A2-, A1+ A2+*); they are dropped.
//! At second order (ν = 2Ω) the sources are the first-order products
//! X1 A1-, X1 A1+* and A1+* A1-.

use crate::error::{Error, Result};
use crate::numeric::solve3;
use crate::params::{DerivedQuantities, SystemParams};
use crate::real::{c, i_unit, Real, C};
use crate::sideband::response::guard;
use crate::sideband::{Eliminated, Method, SidebandSolution};
use crate::steady_state::SteadyState;

/// Condition numbers above this reject the block.
pub const CONDITION_LIMIT: f64 = 1e12;

/// `(k_B(ν), k_C(ν))` with `B_ν = k_B A_ν`, `C_ν = k_C A_ν` for the
/// e^{-iνt} harmonic. Negative ν gives the e^{+i|ν|t} harmonic.
pub fn elimination_kernels<T: Real>(p: &SystemParams<T>, nu: T) -> Result<(C<T>, C<T>)> {
    let i = i_unit::<T>();
    let zero = c(T::zero(), T::zero());
    let kb = if p.tunneling_j == T::zero() {
        zero
    } else {
        let den = guard(
            c(T::lit(0.5) * p.kappa_b, -(p.delta_1 + nu)),
            p.kappa_a,
            "B kernel",
        )?;
        -i * p.tunneling_j / den
    };
    let kc = if p.atom_coupling_g == T::zero() {
        zero
    } else {
        let den = guard(c(p.gamma_atom, p.delta_2 - nu), p.kappa_a, "C kernel")?;
        -i * p.atom_coupling_g / den
    };
    Ok((kb, kc))
}

/// Coefficient of A_ν in the cavity-A equation with B and C eliminated.
fn cavity_row<T: Real>(p: &SystemParams<T>, s: &SteadyState<T>, nu: T) -> Result<C<T>> {
    let i = i_unit::<T>();
    let (kb, kc) = elimination_kernels(p, nu)?;
    Ok(i * (s.delta_bar + nu)
        - T::lit(0.5) * p.kappa_a
        - i * p.tunneling_j * kb
        - i * p.atom_coupling_g * kc)
}

type Block<T> = [[C<T>; 3]; 3];

fn assemble<T: Real>(
    p: &SystemParams<T>,
    d: &DerivedQuantities<T>,
    s: &SteadyState<T>,
    nu: T,
) -> Result<Block<T>> {
    let i = i_unit::<T>();
    let zero = c(T::zero(), T::zero());
    let g1 = d.g1;
    let a = s.a_s;
    let wm = p.omega_m;
    let inv_chi = c((wm * wm - nu * nu) / wm, -nu * p.gamma_m / wm);
    Ok([
        [cavity_row(p, s, nu)?, zero, -i * g1 * a],
        [zero, cavity_row(p, s, -nu)?.conj(), i * g1 * a.conj()],
        [a.conj() * g1, a * g1, inv_chi],
    ])
}

/// Right-hand side for sources `drive` (probe), `s_minus` = [δx̃ δa]_ν,
/// `s_plus_conj` = ([δx̃ δa]_{−ν})*, `p_src` = [|δa|²]_ν.
fn rhs<T: Real>(g1: T, drive: C<T>, s_minus: C<T>, s_plus_conj: C<T>, p_src: C<T>) -> [C<T>; 3] {
    let i = i_unit::<T>();
    [
        -drive + i * g1 * s_minus,
        -i * g1 * s_plus_conj,
        -(p_src * g1),
    ]
}

fn solve_block<T: Real>(m: &Block<T>, r: &[C<T>; 3], order: u8) -> Result<[C<T>; 3]> {
    let solved = solve3(m, r);
    if !(solved.condition <= T::lit(CONDITION_LIMIT)) {
        return Err(Error::IllConditioned {
            order,
            condition: solved.condition.as_f64(),
        });
    }
    Ok(solved.x)
}

/// First-order block: returns (A1-, (A1+)*, X̃1).
pub(crate) fn first_order_block<T: Real>(
    p: &SystemParams<T>,
    d: &DerivedQuantities<T>,
    s: &SteadyState<T>,
    omega: T,
) -> Result<[C<T>; 3]> {
    let zero = c(T::zero(), T::zero());
    let drive = c(p.input_coupling() * d.eps_probe, T::zero());
    let m = assemble(p, d, s, omega)?;
    solve_block(&m, &rhs(d.g1, drive, zero, zero, zero), 1)
}

/// Second-order block sourced by first-order products: returns
/// (A2-, (A2+)*, X̃2).
pub(crate) fn second_order_block<T: Real>(
    p: &SystemParams<T>,
    d: &DerivedQuantities<T>,
    s: &SteadyState<T>,
    omega: T,
    a1_minus: C<T>,
    a1_plus_conj: C<T>,
    x1: C<T>,
) -> Result<[C<T>; 3]> {
    let zero = c(T::zero(), T::zero());
    let m = assemble(p, d, s, omega + omega)?;
    let r = rhs(
        d.g1,
        zero,
        x1 * a1_minus,
        x1 * a1_plus_conj,
        a1_plus_conj * a1_minus,
    );
    solve_block(&m, &r, 2)
}

pub fn hierarchical_solve<T: Real>(
    p: &SystemParams<T>,
    d: &DerivedQuantities<T>,
    s: &SteadyState<T>,
    omega: T,
) -> Result<SidebandSolution<T>> {
    let [a1m, a1pc, x1] = first_order_block(p, d, s, omega)?;
    let [a2m, a2pc, x2] = second_order_block(p, d, s, omega, a1m, a1pc, x1)?;
    let (a1p, a2p) = (a1pc.conj(), a2pc.conj());
    let two = omega + omega;
    let (kb1m, kc1m) = elimination_kernels(p, omega)?;
    let (kb1p, kc1p) = elimination_kernels(p, -omega)?;
    let (kb2m, kc2m) = elimination_kernels(p, two)?;
    let (kb2p, kc2p) = elimination_kernels(p, -two)?;
    Ok(SidebandSolution {
        omega,
        a1_minus: a1m,
        a1_plus: a1p,
        a2_minus: a2m,
        a2_plus: a2p,
        x1: x1 * d.x_zpf,
        x2: x2 * d.x_zpf,
        x1_zpf: x1,
        x2_zpf: x2,
        eliminated: Some(Eliminated {
            b1_minus: kb1m * a1m,
            b1_plus: kb1p * a1p,
            b2_minus: kb2m * a2m,
            b2_plus: kb2p * a2p,
            c1_minus: kc1m * a1m,
            c1_plus: kc1p * a1p,
            c2_minus: kc2m * a2m,
            c2_plus: kc2p * a2p,
        }),
        method: Method::Hierarchical,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{derive, ConfigDocument};
    use crate::sideband::response::response_at;
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
    fn zero_probe_gives_zero_solution() {
        let (p, d, s) = setup(|c| c.probe_ratio = 0.0);
        let sol = hierarchical_solve(&p, &d, &s, p.omega_m).unwrap();
        let z = Complex64::new(0.0, 0.0);
        assert_eq!(
            [sol.a1_minus, sol.a1_plus, sol.a2_minus, sol.a2_plus],
            [z; 4]
        );
        assert_eq!([sol.x1, sol.x2], [z; 2]);
    }

    #[test]
    fn kernels_reproduce_alpha_terms() {
        let (p, d, s) = setup(|_| {});
        let i = Complex64::i();
        for k in 0..20 {
            let nu = (-2.0 + 0.2 * k as f64 + 0.013) * p.omega_m;
            let r = response_at(&p, &d, &s, nu).unwrap();
            let (kb, kc) = elimination_kernels(&p, nu).unwrap();
            assert!((-i * p.tunneling_j * kb + r.alpha3).norm() < 1e-12 * r.alpha3.norm());
            assert!((-i * p.atom_coupling_g * kc + r.alpha4).norm() < 1e-12 * r.alpha4.norm());
            // The conjugate row carries α1, α2.
            let (kb, kc) = elimination_kernels(&p, -nu).unwrap();
            assert!(((-i * p.tunneling_j * kb).conj() + r.alpha1).norm() < 1e-12 * r.alpha1.norm());
            assert!(
                ((-i * p.atom_coupling_g * kc).conj() + r.alpha2).norm() < 1e-12 * r.alpha2.norm()
            );
        }
    }

    #[test]
    fn eliminated_fields_satisfy_linearised_equations() {
        let (p, d, s) = setup(|_| {});
        let w = 0.93 * p.omega_m;
        let sol = hierarchical_solve(&p, &d, &s, w).unwrap();
        let e = sol.eliminated.unwrap();
        let i = Complex64::i();
        // −iν B = (iΔ₁ − κ_b/2) B − iJ A ; −iν C = −(γ_a + iΔ₂) C − iG A
        let check_b = |nu: f64, b: Complex64, a: Complex64| {
            let lhs = -i * nu * b;
            let rhs = (i * p.delta_1 - p.kappa_b / 2.0) * b - i * p.tunneling_j * a;
            assert!((lhs - rhs).norm() <= 1e-12 * (nu.abs() * b.norm() + p.tunneling_j * a.norm()));
        };
        let check_c = |nu: f64, cc: Complex64, a: Complex64| {
            let lhs = -i * nu * cc;
            let rhs = -(p.gamma_atom + i * p.delta_2) * cc - i * p.atom_coupling_g * a;
            assert!(
                (lhs - rhs).norm() <= 1e-12 * (nu.abs() * cc.norm() + p.atom_coupling_g * a.norm())
            );
        };
        check_b(w, e.b1_minus, sol.a1_minus);
        check_b(-w, e.b1_plus, sol.a1_plus);
        check_b(2.0 * w, e.b2_minus, sol.a2_minus);
        check_b(-2.0 * w, e.b2_plus, sol.a2_plus);
        check_c(w, e.c1_minus, sol.a1_minus);
        check_c(-w, e.c1_plus, sol.a1_plus);
        check_c(2.0 * w, e.c2_minus, sol.a2_minus);
        check_c(-2.0 * w, e.c2_plus, sol.a2_plus);
    }

    #[test]
    fn no_optomechanics_means_no_second_sideband() {
        let (p, mut d, _) = setup(|_| {});
        d.g1 = 0.0;
        let s = solve_steady_state(&p, &d, BranchPolicy::Lowest).unwrap();
        let sol = hierarchical_solve(&p, &d, &s, 0.8 * p.omega_m).unwrap();
        assert_eq!(sol.a2_minus.norm(), 0.0);
        assert_eq!(sol.a2_plus.norm(), 0.0);
        assert_eq!(sol.x1.norm(), 0.0);
    }
}
