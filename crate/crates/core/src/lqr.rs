//! Continuous-time LQR synthesis.
//!
//! The primary solver forms the 2n x 2n Hamiltonian
//! [[A, -B R⁻¹ Bᵀ], [-Q, -Aᵀ]], computes its ordered real Schur
//! decomposition and reads the stabilizing Riccati solution off the stable
//! invariant subspace. An independent Newton iteration with Lyapunov solves
//! serves as fallback and cross-check. Weights are scaled internally so the
//! Hamiltonian blocks share a magnitude; the gain is invariant under that
//! scaling.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{eigenvalues, order_schur, real_schur, schur_eigenvalues, solve_lyapunov};
use crate::matrix::Mat;
use crate::sim::Trajectory;

/// State and control weights of the quadratic cost.
#[derive(Debug, Clone, PartialEq)]
pub struct LqrWeights {
    /// 4x4 symmetric positive-semidefinite state weight.
    pub q: Mat,
    /// Positive control weight (single actuated channel).
    pub r: f64,
}

impl LqrWeights {
    pub fn new(q: Mat, r: f64) -> Result<Self> {
        let w = Self { q, r };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.q.is_square() {
            return Err(Error::Dimension {
                context: "LqrWeights::q",
                expected: "square".into(),
                got: format!("{}x{}", self.q.rows(), self.q.cols()),
            });
        }
        if !self.q.all_finite() || !self.r.is_finite() {
            return Err(Error::InvalidParameter {
                name: "weights",
                reason: "non-finite entries".into(),
            });
        }
        let asym = (&self.q - &self.q.transpose()).max_abs();
        if asym > 1e-12 * self.q.max_abs().max(1.0) {
            return Err(Error::InvalidParameter {
                name: "Q",
                reason: format!("must be symmetric; asymmetry {asym:.3e}"),
            });
        }
        let eigs = eigenvalues(&self.q.symmetrized())?;
        let min_eig = eigs.iter().map(|e| e.re).fold(f64::INFINITY, f64::min);
        if min_eig < -1e-9 * self.q.max_abs().max(1.0) {
            return Err(Error::InvalidParameter {
                name: "Q",
                reason: format!("must be positive semidefinite; min eigenvalue {min_eig:.3e}"),
            });
        }
        if !(self.r > 0.0) {
            return Err(Error::InvalidParameter {
                name: "R",
                reason: format!("must be positive, got {}", self.r),
            });
        }
        Ok(())
    }
}

/// Built-in reference weights: Q = diag(1e10, 1e8, 1, 1), R = 1.
pub fn reference_weights() -> LqrWeights {
    LqrWeights {
        q: Mat::diag(&[1.0e10, 1.0e8, 1.0, 1.0]),
        r: 1.0,
    }
}

/// A solved state-feedback design.
#[derive(Debug, Clone)]
pub struct LqrDesign {
    pub weights: LqrWeights,
    /// Stabilizing Riccati solution.
    pub p: Mat,
    /// Feedback gain row (u = -K x).
    pub k: Mat,
    /// ‖AᵀP + PA - PBR⁻¹BᵀP + Q‖_F / max(1, ‖Q‖_F).
    pub residual_norm: f64,
    pub closed_loop_poles: Vec<Complex64>,
}

impl LqrDesign {
    pub fn gain_row(&self) -> [f64; 4] {
        [
            self.k[(0, 0)],
            self.k[(0, 1)],
            self.k[(0, 2)],
            self.k[(0, 3)],
        ]
    }
}

const RESIDUAL_TOL: f64 = 1e-8;

fn care_residual(a: &Mat, b: &Mat, q: &Mat, r: f64, p: &Mat) -> f64 {
    let s = b.scale(1.0 / r);
    let pbrbp = &(&(p * &s) * &b.transpose()) * p;
    let resid = &(&(&(&a.transpose() * p) + &(p * a)) - &pbrbp) + q;
    resid.frobenius_norm() / q.frobenius_norm().max(1.0)
}

fn closed_loop(a: &Mat, b: &Mat, k: &Mat) -> Mat {
    a - &(b * k)
}

/// PBH stabilizability test: every eigenvalue of A with Re >= 0 must be
/// controllable. Rank deficiency of [A - λI, B] is detected through the
/// smallest singular value of its realification.
fn check_stabilizable(a: &Mat, b: &Mat) -> Result<()> {
    let n = a.rows();
    let m = b.cols();
    let scale = a.frobenius_norm() + b.frobenius_norm() + 1.0;
    for lam in eigenvalues(a)? {
        if lam.re < 0.0 {
            continue;
        }
        // realified [A - λI, B]: [[Re, -Im], [Im, Re]] stacked with B ⊕ B
        let rows = 2 * n;
        let cols = 2 * (n + m);
        let mut g = Mat::zeros(rows, cols);
        for i in 0..n {
            for j in 0..n {
                let re = a[(i, j)] - if i == j { lam.re } else { 0.0 };
                let im = if i == j { -lam.im } else { 0.0 };
                g[(i, j)] = re;
                g[(i, n + j)] = -im;
                g[(n + i, j)] = im;
                g[(n + i, n + j)] = re;
            }
            for j in 0..m {
                g[(i, 2 * n + j)] = b[(i, j)];
                g[(n + i, 2 * n + m + j)] = b[(i, j)];
            }
        }
        let gram = &g * &g.transpose();
        let eigs = eigenvalues(&gram.symmetrized())?;
        let min_eig = eigs.iter().map(|e| e.re).fold(f64::INFINITY, f64::min);
        let sigma_min = min_eig.max(0.0).sqrt();
        if sigma_min <= 1e-8 * (scale + lam.norm()) {
            return Err(Error::NotStabilizable {
                mode: format!("{:.6e}{:+.6e}i", lam.re, lam.im),
            });
        }
    }
    Ok(())
}

/// Solve the continuous algebraic Riccati equation for the actuated column
/// `b2` and return the stabilizing design.
pub fn solve_care(a: &Mat, b2: &Mat, weights: &LqrWeights) -> Result<LqrDesign> {
    weights.validate()?;
    let n = a.rows();
    if !a.is_square() || b2.rows() != n || weights.q.rows() != n {
        return Err(Error::Dimension {
            context: "solve_care",
            expected: format!("A {n}x{n}, B {n}x1, Q {n}x{n}"),
            got: format!(
                "A {}x{}, B {}x{}, Q {}x{}",
                a.rows(),
                a.cols(),
                b2.rows(),
                b2.cols(),
                weights.q.rows(),
                weights.q.cols()
            ),
        });
    }
    check_stabilizable(a, b2)?;

    // Uniform weight scaling (cQ, cR) leaves K unchanged and scales P by c;
    // pick c so the Hamiltonian corner blocks have comparable norms.
    let s_mat = &b2.scale(1.0 / weights.r) * &b2.transpose();
    let q_norm = weights.q.frobenius_norm();
    let s_norm = s_mat.frobenius_norm();
    let c = if q_norm > 0.0 && s_norm > 0.0 {
        (s_norm / q_norm).sqrt()
    } else {
        1.0
    };
    let q_s = weights.q.scale(c);
    let r_s = weights.r * c;

    let mut ham = Mat::zeros(2 * n, 2 * n);
    ham.set_block(0, 0, a);
    ham.set_block(0, n, &(&b2.scale(-1.0 / r_s) * &b2.transpose()));
    ham.set_block(n, 0, &q_s.scale(-1.0));
    ham.set_block(n, n, &a.transpose().scale(-1.0));

    let mut schur = real_schur(&ham)?;
    let stable_count = order_schur(&mut schur, |e| e.re < 0.0)?;
    if stable_count != n {
        return Err(Error::NoStabilizingSolution {
            reason: format!(
                "Hamiltonian has {stable_count} strictly stable eigenvalues, expected {n} \
                 (imaginary-axis or defective modes present)"
            ),
        });
    }

    let u11 = schur.q.block(0, 0, n, n);
    let u21 = schur.q.block(n, 0, n, n);
    // P_scaled = U21 U11⁻¹ solved as U11ᵀ Xᵀ = U21ᵀ
    let p_scaled_t = u11.transpose().solve(&u21.transpose()).map_err(|_| {
        Error::NoStabilizingSolution {
            reason: "stable invariant subspace has singular leading block".into(),
        }
    })?;
    let p = p_scaled_t.transpose().symmetrized().scale(1.0 / c);

    let k = (&b2.transpose() * &p).scale(1.0 / weights.r);
    let residual_norm = care_residual(a, b2, &weights.q, weights.r, &p);
    // Stable Hamiltonian eigenvalues are exactly the closed-loop poles.
    let mut closed_loop_poles = schur_eigenvalues(&schur.t.block(0, 0, n, n));
    sort_complex(&mut closed_loop_poles);

    if residual_norm > RESIDUAL_TOL {
        return Err(Error::NoStabilizingSolution {
            reason: format!("residual {residual_norm:.3e} exceeds {RESIDUAL_TOL:.1e}"),
        });
    }
    if closed_loop_poles.iter().any(|e| e.re >= 0.0) {
        return Err(Error::NoStabilizingSolution {
            reason: "selected subspace does not stabilize the loop".into(),
        });
    }

    Ok(LqrDesign {
        weights: weights.clone(),
        p,
        k,
        residual_norm,
        closed_loop_poles,
    })
}

/// Newton iteration for the same CARE, seeded with a Lyapunov-stabilized
/// initial gain when A is unstable. Independent of the Schur path.
pub fn newton_kleinman(a: &Mat, b2: &Mat, weights: &LqrWeights) -> Result<LqrDesign> {
    weights.validate()?;
    check_stabilizable(a, b2)?;
    let n = a.rows();

    let max_re = eigenvalues(a)?
        .iter()
        .map(|e| e.re)
        .fold(f64::NEG_INFINITY, f64::max);
    let mut k = if max_re < 0.0 {
        Mat::zeros(1, n)
    } else {
        bass_initial_gain(a, b2)?
    };

    let mut p = Mat::zeros(n, n);
    let mut converged = false;
    for _ in 0..200 {
        let a_cl = closed_loop(a, b2, &k);
        let kr_k = &k.transpose().scale(weights.r) * &k;
        let rhs = &weights.q + &kr_k;
        p = solve_lyapunov(&a_cl, &rhs)?;
        let k_next = &b2.transpose().scale(1.0 / weights.r) * &p;
        let delta = (&k_next - &k).max_abs();
        let scale = k.max_abs().max(1.0);
        k = k_next;
        if delta <= 1e-13 * scale {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NoStabilizingSolution {
            reason: "Newton iteration did not converge in 200 steps".into(),
        });
    }

    let residual_norm = care_residual(a, b2, &weights.q, weights.r, &p);
    let mut closed_loop_poles = eigenvalues(&closed_loop(a, b2, &k))?;
    sort_complex(&mut closed_loop_poles);
    if closed_loop_poles.iter().any(|e| e.re >= 0.0) {
        return Err(Error::NoStabilizingSolution {
            reason: "Newton iterate is not stabilizing".into(),
        });
    }
    Ok(LqrDesign {
        weights: weights.clone(),
        p,
        k,
        residual_norm,
        closed_loop_poles,
    })
}

/// Bass construction: with β above the spectral abscissa magnitude, Z from
/// (A + βI) Z + Z (A + βI)ᵀ = 2 B Bᵀ gives the stabilizing K₀ = Bᵀ Z⁻¹.
fn bass_initial_gain(a: &Mat, b2: &Mat) -> Result<Mat> {
    let n = a.rows();
    let beta = a.frobenius_norm() + 1.0;
    let mut shifted = a.clone();
    for i in 0..n {
        shifted[(i, i)] += beta;
    }
    // M Z + Z Mᵀ = -2BBᵀ with M = -(A + βI): pass Mᵀ to the standard form.
    let q = (b2 * &b2.transpose()).scale(2.0);
    let m_t = shifted.scale(-1.0).transpose();
    let z = solve_lyapunov(&m_t, &q)?;
    let z_inv = z.inverse().map_err(|_| Error::NotStabilizable {
        mode: "Bass initialisation produced a singular Gramian".into(),
    })?;
    Ok(&b2.transpose() * &z_inv)
}

/// Trapezoidal approximation of the quadratic cost along a trajectory.
pub fn evaluate_cost(traj: &Trajectory, weights: &LqrWeights) -> Result<f64> {
    weights.validate()?;
    if traj.t.len() < 2 {
        return Err(Error::EmptyTrajectory {
            reason: format!("need at least 2 samples, got {}", traj.t.len()),
        });
    }
    let integrand = |i: usize| -> f64 {
        let x = traj.x[i];
        let u = traj.f_a[i];
        let mut xqx = 0.0;
        for r in 0..4 {
            for c in 0..4 {
                xqx += x[r] * weights.q[(r, c)] * x[c];
            }
        }
        xqx + u * weights.r * u
    };
    let mut total = 0.0;
    for i in 1..traj.t.len() {
        let dt = traj.t[i] - traj.t[i - 1];
        total += dt * (integrand(i) + integrand(i - 1)) / 2.0;
    }
    Ok(total)
}

pub(crate) fn sort_complex(v: &mut [Complex64]) {
    v.sort_by(|a, b| {
        a.re.partial_cmp(&b.re)
            .unwrap()
            .then(a.im.partial_cmp(&b.im).unwrap())
    });
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn reference_weight_entries() {
        let w = reference_weights();
        assert_eq!(w.q[(0, 0)], 1.0e10);
        assert_eq!(w.q[(2, 2)], 1.0);
        assert_eq!(w.r, 1.0);
        w.validate().unwrap();
    }

    #[test]
    fn scalar_care_stable_plant() {
        // A=0, B=1, Q=1, R=1: -P² + 1 = 0, stabilizing P = 1, pole -1.
        let a = Mat::from_rows(&[&[0.0]]);
        let b = Mat::col_vec(&[1.0]);
        let w = LqrWeights::new(Mat::diag(&[1.0]), 1.0).unwrap();
        let d = solve_care(&a, &b, &w).unwrap();
        assert_relative_eq!(d.p[(0, 0)], 1.0, max_relative = 1e-12);
        assert_relative_eq!(d.k[(0, 0)], 1.0, max_relative = 1e-12);
        assert_relative_eq!(d.closed_loop_poles[0].re, -1.0, max_relative = 1e-12);
    }

    #[test]
    fn scalar_care_unstable_plant_zero_state_cost() {
        // A=1, B=1, Q=0, R=1: 2P - P² = 0, stabilizing P = 2, pole -1.
        let a = Mat::from_rows(&[&[1.0]]);
        let b = Mat::col_vec(&[1.0]);
        let w = LqrWeights::new(Mat::diag(&[0.0]), 1.0).unwrap();
        let d = solve_care(&a, &b, &w).unwrap();
        assert_relative_eq!(d.p[(0, 0)], 2.0, max_relative = 1e-12);
        assert_relative_eq!(d.k[(0, 0)], 2.0, max_relative = 1e-12);
        assert_relative_eq!(d.closed_loop_poles[0].re, -1.0, max_relative = 1e-12);

        let nk = newton_kleinman(&a, &b, &w).unwrap();
        assert_relative_eq!(nk.p[(0, 0)], 2.0, max_relative = 1e-10);
        assert_relative_eq!(nk.k[(0, 0)], 2.0, max_relative = 1e-10);
    }

    #[test]
    fn uncontrollable_unstable_mode_is_rejected() {
        // x1 unstable and disconnected from the input
        let a = Mat::from_rows(&[&[1.0, 0.0], &[0.0, -1.0]]);
        let b = Mat::col_vec(&[0.0, 1.0]);
        let w = LqrWeights::new(Mat::diag(&[1.0, 1.0]), 1.0).unwrap();
        assert!(matches!(
            solve_care(&a, &b, &w),
            Err(Error::NotStabilizable { .. })
        ));
    }

    #[test]
    fn invalid_weights_are_rejected() {
        let q_asym = Mat::from_rows(&[&[1.0, 1.0], &[0.0, 1.0]]);
        assert!(LqrWeights::new(q_asym, 1.0).is_err());
        let q_indef = Mat::diag(&[1.0, -1.0]);
        assert!(LqrWeights::new(q_indef, 1.0).is_err());
        assert!(LqrWeights::new(Mat::diag(&[1.0, 1.0]), 0.0).is_err());
    }
}
