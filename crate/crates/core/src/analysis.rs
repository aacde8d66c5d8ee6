//! Poles, zeros and stability verdicts of the passive and closed-loop
//! suspensions.
//!
//! Pole-zero maps are taken from the road-velocity disturbance input to each
//! of the three output channels. Finite transmission zeros come from the
//! Rosenbrock pencil, deflated one infinite zero at a time with orthogonal
//! compressions until the feedthrough is regular; poles are plain
//! eigenvalues of the closed-loop state matrix.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::eigenvalues;
use crate::lqr::sort_complex;
use crate::matrix::Mat;
use crate::pid::PidGains;
use crate::vehicle::{OutputChannel, StateSpace, INPUT_ROAD_VELOCITY};

/// A SISO-per-channel closed loop: state matrix, disturbance column and one
/// output row per channel (actuator feedthrough already folded in).
#[derive(Debug, Clone)]
pub struct ClosedLoopSystem {
    pub label: String,
    pub a_cl: Mat,
    /// Disturbance input column (road velocity channel).
    pub b_cl: Mat,
    /// 3 x n output matrix over the closed-loop state.
    pub c_cl: Mat,
    /// Feedthrough from the disturbance per channel.
    pub d_cl: [f64; 3],
}

impl ClosedLoopSystem {
    pub fn order(&self) -> usize {
        self.a_cl.rows()
    }

    /// Single-channel view (A, B, C row, D scalar).
    pub fn siso(&self, channel: OutputChannel) -> (Mat, Mat, Mat, f64) {
        let i = channel.index();
        (
            self.a_cl.clone(),
            self.b_cl.clone(),
            self.c_cl.block(i, 0, 1, self.a_cl.cols()),
            self.d_cl[i],
        )
    }
}

/// The open loop as a trivially "closed" system.
pub fn passive_loop(ss: &StateSpace) -> ClosedLoopSystem {
    ClosedLoopSystem {
        label: "passive".into(),
        a_cl: ss.a.clone(),
        b_cl: ss.b.block(0, INPUT_ROAD_VELOCITY, 4, 1),
        c_cl: ss.c.clone(),
        d_cl: [
            ss.d[(0, INPUT_ROAD_VELOCITY)],
            ss.d[(1, INPUT_ROAD_VELOCITY)],
            ss.d[(2, INPUT_ROAD_VELOCITY)],
        ],
    }
}

/// State feedback u = -Kx closed around the actuator column.
pub fn close_loop_lqr(ss: &StateSpace, k: &Mat) -> Result<ClosedLoopSystem> {
    if k.rows() != 1 || k.cols() != 4 {
        return Err(Error::Dimension {
            context: "close_loop_lqr gain",
            expected: "1x4".into(),
            got: format!("{}x{}", k.rows(), k.cols()),
        });
    }
    let b2 = ss.b_actuator();
    let a_cl = &ss.a - &(&b2 * k);
    // outputs see the actuator through D: y = (C - D₂K)x
    let d2 = ss.d.block(0, 1, 3, 1);
    let c_cl = &ss.c - &(&d2 * k);
    Ok(ClosedLoopSystem {
        label: "lqr".into(),
        a_cl,
        b_cl: ss.b.block(0, INPUT_ROAD_VELOCITY, 4, 1),
        c_cl,
        d_cl: [
            ss.d[(0, INPUT_ROAD_VELOCITY)],
            ss.d[(1, INPUT_ROAD_VELOCITY)],
            ss.d[(2, INPUT_ROAD_VELOCITY)],
        ],
    })
}

/// Dual-loop PID closed around the actuator, realised minimally: the two
/// integral paths share one state (they drive the same actuator, so separate
/// integrators would carry an exact zero eigenvalue that no input excites
/// and no output observes), plus one filter state per loop with derivative
/// action. The road-displacement terms in the loop errors are exogenous and
/// do not enter the state matrix.
pub fn close_loop_pid(
    ss: &StateSpace,
    motion: &PidGains,
    travel: &PidGains,
) -> Result<ClosedLoopSystem> {
    motion.validate()?;
    travel.validate()?;
    // measurement rows over the plant state (road feedthrough excluded)
    let c_motion = [1.0, 0.0, 1.0, 0.0];
    let c_travel = [1.0, 0.0, 0.0, 0.0];

    struct LoopPlan {
        gains: PidGains,
        c_row: [f64; 4],
        filter: bool,
    }
    let loops: Vec<LoopPlan> = [(motion, c_motion), (travel, c_travel)]
        .into_iter()
        .filter(|(g, _)| !g.is_zero())
        .map(|(g, c_row)| LoopPlan {
            gains: *g,
            c_row,
            filter: g.k_d > 0.0,
        })
        .collect();

    let has_integrator = loops.iter().any(|l| l.gains.k_i != 0.0);
    let n_filters = loops.iter().filter(|l| l.filter).count();
    let n = 4 + usize::from(has_integrator) + n_filters;

    // state layout: plant(4) | shared integrator | filters in loop order
    let int_idx = has_integrator.then_some(4);
    let mut filter_idx = Vec::new();
    let mut next = 4 + usize::from(has_integrator);
    for l in &loops {
        if l.filter {
            filter_idx.push(Some(next));
            next += 1;
        } else {
            filter_idx.push(None);
        }
    }

    // force row over the closed-loop state: u = -Σ(kp + kd·n)Cᵢx + x_int
    //                                          - Σ kd·n²·x_f
    let mut u_row = vec![0.0; n];
    for (li, l) in loops.iter().enumerate() {
        let kp_eff = l.gains.k_p + if l.filter { l.gains.k_d * l.gains.n_filter } else { 0.0 };
        for j in 0..4 {
            u_row[j] -= kp_eff * l.c_row[j];
        }
        if let Some(fi) = filter_idx[li] {
            u_row[fi] = -l.gains.k_d * l.gains.n_filter * l.gains.n_filter;
        }
    }
    if let Some(ii) = int_idx {
        u_row[ii] = 1.0;
    }

    let b2 = ss.b_actuator();
    let mut a_cl = Mat::zeros(n, n);
    // plant rows: A x + B2 u
    for i in 0..4 {
        for j in 0..4 {
            a_cl[(i, j)] = ss.a[(i, j)];
        }
        for j in 0..n {
            a_cl[(i, j)] += b2[(i, 0)] * u_row[j];
        }
    }
    // shared integrator: ẋ_int = Σ kᵢ eᵢ = -Σ kᵢ Cᵢ x (+ exogenous road terms)
    if let Some(ii) = int_idx {
        for l in &loops {
            for j in 0..4 {
                a_cl[(ii, j)] -= l.gains.k_i * l.c_row[j];
            }
        }
    }
    // filters: ẋ_f = -n x_f + e = -n x_f - C x (+ exogenous road terms)
    for (li, l) in loops.iter().enumerate() {
        if let Some(fi) = filter_idx[li] {
            for j in 0..4 {
                a_cl[(fi, j)] = -l.c_row[j];
            }
            a_cl[(fi, fi)] = -l.gains.n_filter;
        }
    }

    // outputs: plant C padded with zeros, actuator feedthrough folded in
    let mut c_cl = Mat::zeros(3, n);
    for i in 0..3 {
        for j in 0..4 {
            c_cl[(i, j)] = ss.c[(i, j)];
        }
        let d2 = ss.d[(i, 1)];
        for j in 0..n {
            c_cl[(i, j)] += d2 * u_row[j];
        }
    }

    let mut b_cl = Mat::zeros(n, 1);
    for i in 0..4 {
        b_cl[(i, 0)] = ss.b[(i, INPUT_ROAD_VELOCITY)];
    }

    Ok(ClosedLoopSystem {
        label: "pid".into(),
        a_cl,
        b_cl,
        c_cl,
        d_cl: [
            ss.d[(0, INPUT_ROAD_VELOCITY)],
            ss.d[(1, INPUT_ROAD_VELOCITY)],
            ss.d[(2, INPUT_ROAD_VELOCITY)],
        ],
    })
}

/// Closed-loop poles, conjugate-symmetric, sorted by real part.
pub fn compute_poles(sys: &ClosedLoopSystem) -> Result<Vec<Complex64>> {
    let mut poles = eigenvalues(&sys.a_cl)?;
    sort_complex(&mut poles);
    Ok(poles)
}

/// Finite transmission zeros of one channel.
pub fn compute_zeros(sys: &ClosedLoopSystem, channel: OutputChannel) -> Result<Vec<Complex64>> {
    let (a, b, c, d) = sys.siso(channel);
    let mut zeros = transmission_zeros(&a, &b, &c, d)?;
    sort_complex(&mut zeros);
    Ok(zeros)
}

/// Finite zeros of (A, B, C, D) with scalar input and output: deflate the
/// Rosenbrock pencil by orthogonal compression until the feedthrough is
/// invertible, then read zeros as eigenvalues of A - B D⁻¹ C.
pub fn transmission_zeros(a: &Mat, b: &Mat, c: &Mat, d: f64) -> Result<Vec<Complex64>> {
    let mut a = a.clone();
    let mut b: Vec<f64> = b.column(0);
    let mut c: Vec<f64> = c.row(0).to_vec();
    let mut d = d;

    loop {
        let n = a.rows();
        let feed_scale = 1.0
            + c.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
                * b.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        if d.abs() > 1e-12 * feed_scale {
            // regular pencil: zeros are eigenvalues of A - B C / D
            let mut m = a.clone();
            for i in 0..n {
                for j in 0..n {
                    m[(i, j)] -= b[i] * c[j] / d;
                }
            }
            return eigenvalues(&m);
        }
        if n == 0 {
            return Ok(Vec::new());
        }
        let c_norm = c.iter().map(|v| v * v).sum::<f64>().sqrt();
        let a_scale = a.max_abs().max(1.0);
        if c_norm <= 1e-14 * a_scale {
            return Err(Error::DegeneratePencil);
        }

        // Householder P (symmetric, orthogonal) with c P = γ e₁ᵀ
        let mut v = c.clone();
        let gamma = if v[0] >= 0.0 { c_norm } else { -c_norm };
        v[0] += gamma;
        let vnorm2: f64 = v.iter().map(|x| x * x).sum();
        let apply = |vec_in: &[f64], v: &[f64]| -> Vec<f64> {
            let dot: f64 = vec_in.iter().zip(v).map(|(x, y)| x * y).sum();
            let f = 2.0 * dot / vnorm2;
            vec_in
                .iter()
                .zip(v)
                .map(|(x, y)| x - f * y)
                .collect()
        };

        // A' = P A P, b' = P b (P symmetric)
        let mut ap = Mat::zeros(n, n);
        for i in 0..n {
            let row = apply(a.row(i), &v);
            for j in 0..n {
                ap[(i, j)] = row[j];
            }
        }
        let mut ap2 = Mat::zeros(n, n);
        for j in 0..n {
            let col: Vec<f64> = (0..n).map(|i| ap[(i, j)]).collect();
            let col = apply(&col, &v);
            for i in 0..n {
                ap2[(i, j)] = col[i];
            }
        }
        let bp = apply(&b, &v);

        // constrained coordinate removed; remaining problem is one smaller
        let m = n - 1;
        let mut a_next = Mat::zeros(m, m);
        for i in 0..m {
            for j in 0..m {
                a_next[(i, j)] = ap2[(i + 1, j + 1)];
            }
        }
        let c_next: Vec<f64> = (0..m).map(|j| ap2[(0, j + 1)]).collect();
        let b_next: Vec<f64> = (0..m).map(|i| bp[i + 1]).collect();
        let d_next = bp[0];

        a = a_next;
        b = b_next;
        c = c_next;
        d = d_next;
    }
}

/// Stability verdict of a pole set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Stable,
    Unstable,
}

/// Strict verdict: stable iff every pole satisfies Re < -margin.
pub fn stability_verdict(poles: &[Complex64], margin: f64) -> Verdict {
    assert!(!poles.is_empty(), "empty pole list");
    let max_re = poles.iter().map(|p| p.re).fold(f64::NEG_INFINITY, f64::max);
    if max_re < -margin {
        Verdict::Stable
    } else {
        Verdict::Unstable
    }
}

/// Largest pole real part (the negative of the stability margin).
pub fn spectral_abscissa(poles: &[Complex64]) -> f64 {
    poles.iter().map(|p| p.re).fold(f64::NEG_INFINITY, f64::max)
}

/// Poles and zeros of one variant and channel, ready for export.
#[derive(Debug, Clone)]
pub struct PoleZeroMap {
    pub variant: String,
    pub channel: OutputChannel,
    pub poles: Vec<Complex64>,
    pub zeros: Vec<Complex64>,
}

pub fn pole_zero_map(sys: &ClosedLoopSystem, channel: OutputChannel) -> Result<PoleZeroMap> {
    Ok(PoleZeroMap {
        variant: sys.label.clone(),
        channel,
        poles: compute_poles(sys)?,
        zeros: compute_zeros(sys, channel)?,
    })
}
