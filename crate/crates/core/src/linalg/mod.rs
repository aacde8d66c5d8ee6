//! Dense linear-algebra kernels sized for control problems of a dozen states
//! or fewer: real Schur decomposition, eigenvalue extraction with balancing,
//! Schur reordering, and a Kronecker-product Lyapunov solver.

mod ordschur;
mod schur;

pub use ordschur::order_schur;
pub use schur::{hessenberg, real_schur, schur_eigenvalues, Schur};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::matrix::Mat;

/// Parlett-Reinsch balancing: diagonal similarity D A D⁻¹ with powers of two
/// so that row and column norms match. Eigenvalues are unchanged; accuracy on
/// badly scaled matrices improves considerably.
pub fn balance(a: &Mat) -> Mat {
    const RADIX: f64 = 2.0;
    let n = a.rows();
    let mut m = a.clone();
    let sqrdx = RADIX * RADIX;
    loop {
        let mut done = true;
        for i in 0..n {
            let mut c = 0.0;
            let mut r = 0.0;
            for j in 0..n {
                if j != i {
                    c += m[(j, i)].abs();
                    r += m[(i, j)].abs();
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let mut g = r / RADIX;
            let mut f = 1.0;
            let s = c + r;
            let mut c2 = c;
            while c2 < g {
                f *= RADIX;
                c2 *= sqrdx;
            }
            g = r * RADIX;
            while c2 > g {
                f /= RADIX;
                c2 /= sqrdx;
            }
            if (c2 + r) / f < 0.95 * s {
                done = false;
                let ginv = 1.0 / f;
                for j in 0..n {
                    m[(i, j)] *= ginv;
                }
                for j in 0..n {
                    m[(j, i)] *= f;
                }
            }
        }
        if done {
            return m;
        }
    }
}

/// Eigenvalues of a general real matrix: balancing, Hessenberg reduction and
/// shifted QR. Complex pairs come out conjugate-symmetric.
pub fn eigenvalues(a: &Mat) -> Result<Vec<Complex64>> {
    if !a.all_finite() {
        return Err(Error::InvalidParameter {
            name: "matrix",
            reason: "non-finite entries".into(),
        });
    }
    let balanced = balance(a);
    let schur = real_schur(&balanced)?;
    Ok(schur_eigenvalues(&schur.t))
}

/// Solve the continuous Lyapunov equation AᵀX + XA + Q = 0 through the
/// n²-dimensional Kronecker linear system. Fine for n up to a dozen.
pub fn solve_lyapunov(a: &Mat, q: &Mat) -> Result<Mat> {
    assert!(a.is_square() && q.is_square());
    assert_eq!(a.rows(), q.rows());
    let n = a.rows();
    // (I ⊗ Aᵀ + Aᵀ ⊗ I) vec(X) = -vec(Q), column-major vec.
    let mut kron = Mat::zeros(n * n, n * n);
    for col in 0..n {
        for row in 0..n {
            let eq = col * n + row;
            for k in 0..n {
                kron[(eq, col * n + k)] += a[(k, row)];
                kron[(eq, k * n + row)] += a[(k, col)];
            }
        }
    }
    let mut rhs = Mat::zeros(n * n, 1);
    for col in 0..n {
        for row in 0..n {
            rhs[(col * n + row, 0)] = -q[(row, col)];
        }
    }
    let x = kron.solve(&rhs)?;
    let mut out = Mat::zeros(n, n);
    for col in 0..n {
        for row in 0..n {
            out[(row, col)] = x[(col * n + row, 0)];
        }
    }
    Ok(out.symmetrized())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn balancing_preserves_eigenvalues() {
        let a = Mat::from_rows(&[
            &[1.0, 1.0e8, 0.0],
            &[1.0e-8, 2.0, 1.0e-8],
            &[0.0, 1.0e8, 3.0],
        ]);
        let eigs = eigenvalues(&a).unwrap();
        let sum: f64 = eigs.iter().map(|e| e.re).sum();
        assert_relative_eq!(sum, 6.0, max_relative = 1e-9);
    }

    #[test]
    fn lyapunov_diagonal_case() {
        // A = diag(-1, -2): X_ij = Q_ij / (a_i + a_j) with sign.
        let a = Mat::diag(&[-1.0, -2.0]);
        let q = Mat::from_rows(&[&[2.0, 3.0], &[3.0, 8.0]]);
        let x = solve_lyapunov(&a, &q).unwrap();
        assert_relative_eq!(x[(0, 0)], 1.0, epsilon = 1e-12); // 2 / (2*1)
        assert_relative_eq!(x[(0, 1)], 1.0, epsilon = 1e-12); // 3 / 3
        assert_relative_eq!(x[(1, 1)], 2.0, epsilon = 1e-12); // 8 / 4
    }

    #[test]
    fn lyapunov_residual_random_stable() {
        let mut state = 42u64;
        let mut next = move || {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            ((state >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        };
        let n = 4;
        let mut a = Mat::from_fn(n, n, |_, _| next());
        for i in 0..n {
            a[(i, i)] -= 3.0; // push spectrum left
        }
        let c = Mat::from_fn(n, n, |_, _| next());
        let q = (&c.transpose() * &c).symmetrized(); // PSD
        let x = solve_lyapunov(&a, &q).unwrap();
        let resid = &(&(&a.transpose() * &x) + &(&x * &a)) + &q;
        assert!(resid.max_abs() < 1e-10 * q.max_abs().max(1.0));
    }
}
