//! Dense 3×3 complex solve with a condition estimate.

use crate::real::{Real, C};

#[derive(Debug, Clone, Copy)]
pub struct Solved3<T> {
    pub x: [C<T>; 3],
    /// 1-norm condition number `‖A‖₁ ‖A⁻¹‖₁` (infinite when singular).
    pub condition: T,
}

fn lu_solve<T: Real>(m: &[[C<T>; 3]; 3], rhs: &[C<T>; 3]) -> Option<[C<T>; 3]> {
    let mut a = *m;
    let mut b = *rhs;
    for col in 0..3 {
        let pivot = (col..3)
            .max_by(|&i, &j| a[i][col].norm().partial_cmp(&a[j][col].norm()).unwrap())
            .unwrap();
        if a[pivot][col].norm() == T::zero() {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..3 {
            let factor = a[row][col] / a[col][col];
            for k in col..3 {
                let sub = factor * a[col][k];
                a[row][k] = a[row][k] - sub;
            }
            b[row] = b[row] - factor * b[col];
        }
    }
    let mut x = [C::new(T::zero(), T::zero()); 3];
    for row in (0..3).rev() {
        let mut acc = b[row];
        for k in row + 1..3 {
            acc = acc - a[row][k] * x[k];
        }
        x[row] = acc / a[row][row];
    }
    Some(x)
}

fn one_norm<T: Real>(m: &[[C<T>; 3]; 3]) -> T {
    (0..3)
        .map(|j| (0..3).map(|i| m[i][j].norm()).fold(T::zero(), |s, v| s + v))
        .fold(T::zero(), T::max)
}

/// Solve `m x = rhs` by partial-pivot Gaussian elimination.
pub fn solve3<T: Real>(m: &[[C<T>; 3]; 3], rhs: &[C<T>; 3]) -> Solved3<T> {
    let zero = C::new(T::zero(), T::zero());
    let Some(x) = lu_solve(m, rhs) else {
        return Solved3 {
            x: [zero; 3],
            condition: T::infinity(),
        };
    };
    let mut inv = [[zero; 3]; 3];
    for j in 0..3 {
        let mut e = [zero; 3];
        e[j] = C::new(T::one(), T::zero());
        let col = lu_solve(m, &e).expect("factorization succeeded above");
        for i in 0..3 {
            inv[i][j] = col[i];
        }
    }
    Solved3 {
        x,
        condition: one_norm(m) * one_norm(&inv),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    #[test]
    fn solves_and_reports_condition() {
        let m = [
            [
                Complex64::new(2.0, 1.0),
                Complex64::new(0.0, -1.0),
                Complex64::new(1.0, 0.0),
            ],
            [
                Complex64::new(0.5, 0.0),
                Complex64::new(3.0, 0.0),
                Complex64::new(0.0, 2.0),
            ],
            [
                Complex64::new(0.0, 0.0),
                Complex64::new(1.0, 1.0),
                Complex64::new(4.0, -1.0),
            ],
        ];
        let want = [
            Complex64::new(1.0, -2.0),
            Complex64::new(0.5, 0.25),
            Complex64::new(-3.0, 1.0),
        ];
        let rhs: Vec<_> = (0..3)
            .map(|i| (0..3).map(|j| m[i][j] * want[j]).sum::<Complex64>())
            .collect();
        let s = solve3(&m, &[rhs[0], rhs[1], rhs[2]]);
        for k in 0..3 {
            assert!((s.x[k] - want[k]).norm() < 1e-14);
        }
        assert!(s.condition > 1.0 && s.condition < 100.0);
    }

    #[test]
    fn singular_is_infinite() {
        let one = Complex64::new(1.0, 0.0);
        let z = Complex64::new(0.0, 0.0);
        let m = [[one, one, z], [one, one, z], [z, z, one]];
        let s = solve3(&m, &[one, one, one]);
        assert!(s.condition.is_infinite());
    }
}
