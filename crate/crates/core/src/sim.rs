//! Fixed-grid simulation of the closed-loop suspension.
//!
//! Between road events the plant is integrated with classical fourth-order
//! Runge-Kutta. Road displacement discontinuities (the step onset, every
//! noise resample boundary) act on the state as exact jumps Δx = B_road·ΔZr,
//! the integral of the impulsive road-velocity input; events land on grid
//! points by construction. The PID force is computed once per step and held
//! (a fast digital loop); the LQR law u = -Kx enters the derivative
//! continuously, so the run coincides with integrating the precomposed
//! closed-loop matrix.

use crate::error::{Error, Result};
use crate::matrix::Mat;
use crate::pid::{DualLoopPid, PidSetup};
use crate::signals::{apply_uncertainty, RoadKind, ScenarioSpec};
use crate::vehicle::{
    assemble_state_space, evaluate_outputs, StateSpace, StateVector, SuspensionParams,
};

/// Suspension variant labels, in the reporting order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    Passive,
    Pid,
    Lqr,
}

impl Variant {
    pub const ALL: [Variant; 3] = [Variant::Passive, Variant::Pid, Variant::Lqr];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Passive => "passive",
            Variant::Pid => "pid",
            Variant::Lqr => "lqr",
        }
    }
}

/// Force law attached to a run.
#[derive(Debug, Clone)]
pub enum Controller {
    Passive,
    Pid(DualLoopPid),
    /// State feedback u = -K x with a 1x4 gain row.
    Lqr(Mat),
}

impl Controller {
    pub fn variant(&self) -> Variant {
        match self {
            Controller::Passive => Variant::Passive,
            Controller::Pid(_) => Variant::Pid,
            Controller::Lqr(_) => Variant::Lqr,
        }
    }
}

/// Uniformly sampled simulation record.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub t: Vec<f64>,
    pub x: Vec<[f64; 4]>,
    /// Actuator force per sample (0 for the passive variant).
    pub f_a: Vec<f64>,
    /// Road displacement per sample.
    pub z_r: Vec<f64>,
    pub travel: Vec<f64>,
    pub acceleration: Vec<f64>,
    pub motion: Vec<f64>,
    pub variant: String,
    pub scenario: String,
    /// Step onset of the driving road signal (s); metrics measure from here.
    pub step_time: f64,
    pub dt: f64,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn channel(&self, ch: crate::vehicle::OutputChannel) -> &[f64] {
        match ch {
            crate::vehicle::OutputChannel::SuspensionTravel => &self.travel,
            crate::vehicle::OutputChannel::SprungMassAcceleration => &self.acceleration,
            crate::vehicle::OutputChannel::SprungMassMotion => &self.motion,
        }
    }
}

fn require_grid_aligned(what: &'static str, value: f64, dt: f64) -> Result<()> {
    let ratio = value / dt;
    if (ratio - ratio.round()).abs() > 1e-6 * ratio.abs().max(1.0) {
        return Err(Error::MisalignedEvent { what, value, dt });
    }
    Ok(())
}

const DIVERGENCE_LIMIT: f64 = 1.0e6;

/// Simulate from the zero initial state.
pub fn simulate(ss: &StateSpace, controller: Controller, spec: &ScenarioSpec) -> Result<Trajectory> {
    simulate_from(ss, controller, spec, [0.0; 4])
}

/// Simulate from an arbitrary initial state.
pub fn simulate_from(
    ss: &StateSpace,
    mut controller: Controller,
    spec: &ScenarioSpec,
    x0: [f64; 4],
) -> Result<Trajectory> {
    spec.validate()?;
    let dt = spec.dt;
    require_grid_aligned("step_time", spec.road.step_time, dt)?;
    if spec.road.kind == RoadKind::StepPlusNoise {
        require_grid_aligned("noise_sample_time", spec.road.noise_sample_time, dt)?;
    }
    if let Some(w) = spec.road.pulse_width {
        require_grid_aligned("pulse_width", w, dt)?;
    }
    if let Controller::Lqr(k) = &controller {
        if k.rows() != 1 || k.cols() != 4 {
            return Err(Error::Dimension {
                context: "state feedback gain",
                expected: "1x4".into(),
                got: format!("{}x{}", k.rows(), k.cols()),
            });
        }
    }
    if let Controller::Pid(ctl) = &mut controller {
        ctl.reset();
    }

    let steps = (spec.horizon / dt).round() as usize;
    let n_samples = steps + 1;
    let variant = controller.variant();

    // local copies for the tight loop
    let a: [[f64; 4]; 4] = {
        let mut m = [[0.0; 4]; 4];
        for (i, row) in m.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = ss.a[(i, j)];
            }
        }
        m
    };
    let b_road = ss.b_road();
    let b_act = {
        let col = ss.b_actuator();
        [col[(0, 0)], col[(1, 0)], col[(2, 0)], col[(3, 0)]]
    };
    let k_gain: Option<[f64; 4]> = match &controller {
        Controller::Lqr(k) => Some([k[(0, 0)], k[(0, 1)], k[(0, 2)], k[(0, 3)]]),
        _ => None,
    };

    let deriv = |x: &[f64; 4], f_a: f64| -> [f64; 4] {
        let mut dx = [0.0; 4];
        for i in 0..4 {
            dx[i] = a[i][0] * x[0] + a[i][1] * x[1] + a[i][2] * x[2] + a[i][3] * x[3]
                + b_act[i] * f_a;
        }
        dx
    };
    // With continuous state feedback the force inside the stages follows the
    // stage state; otherwise it is the held sample value.
    let stage_force = |x: &[f64; 4], held: f64| -> f64 {
        match &k_gain {
            Some(k) => -(k[0] * x[0] + k[1] * x[1] + k[2] * x[2] + k[3] * x[3]),
            None => held,
        }
    };

    let mut traj = Trajectory {
        t: Vec::with_capacity(n_samples),
        x: Vec::with_capacity(n_samples),
        f_a: Vec::with_capacity(n_samples),
        z_r: Vec::with_capacity(n_samples),
        travel: Vec::with_capacity(n_samples),
        acceleration: Vec::with_capacity(n_samples),
        motion: Vec::with_capacity(n_samples),
        variant: variant.name().to_string(),
        scenario: spec.name.clone(),
        step_time: spec.road.step_time,
        dt,
    };

    let mut x = x0;
    let mut z_held = 0.0;

    for k in 0..n_samples {
        let t = k as f64 * dt;
        let road = spec.road.value(t);
        if road.total != z_held {
            let dz = road.total - z_held;
            for i in 0..4 {
                x[i] += b_road[i] * dz;
            }
            z_held = road.total;
        }

        if !x.iter().all(|v| v.is_finite() && v.abs() <= DIVERGENCE_LIMIT) {
            return Err(Error::Divergence {
                last_finite: k.saturating_sub(1),
            });
        }

        let state = StateVector::from_array(x);
        // position channels first; the PID needs them before the force exists
        let positions = evaluate_outputs(ss, &state, (0.0, 0.0), z_held)?;
        let f_a = match &mut controller {
            Controller::Passive => 0.0,
            Controller::Lqr(_) => stage_force(&x, 0.0),
            Controller::Pid(ctl) => ctl.dual_loop_force(&positions, z_held, dt)?,
        };
        let outputs = evaluate_outputs(ss, &state, (0.0, f_a), z_held)?;

        traj.t.push(t);
        traj.x.push(x);
        traj.f_a.push(f_a);
        traj.z_r.push(z_held);
        traj.travel.push(outputs.suspension_travel);
        traj.acceleration.push(outputs.sprung_mass_acceleration);
        traj.motion.push(outputs.sprung_mass_motion);

        if k < steps {
            let k1 = deriv(&x, stage_force(&x, f_a));
            let x2 = add_scaled(&x, &k1, dt / 2.0);
            let k2 = deriv(&x2, stage_force(&x2, f_a));
            let x3 = add_scaled(&x, &k2, dt / 2.0);
            let k3 = deriv(&x3, stage_force(&x3, f_a));
            let x4 = add_scaled(&x, &k3, dt);
            let k4 = deriv(&x4, stage_force(&x4, f_a));
            for i in 0..4 {
                x[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
        }
    }
    Ok(traj)
}

fn add_scaled(x: &[f64; 4], d: &[f64; 4], s: f64) -> [f64; 4] {
    [
        x[0] + s * d[0],
        x[1] + s * d[1],
        x[2] + s * d[2],
        x[3] + s * d[3],
    ]
}

/// Batch driver: one trajectory per (variant, scenario). The feedback gain
/// comes from the nominal-plant design and the PID gains are fixed; the
/// plant alone absorbs each scenario's mass scaling.
pub fn run_matrix(
    params: &SuspensionParams,
    lqr_gain: &Mat,
    pid: &PidSetup,
    scenarios: &[ScenarioSpec],
    variants: &[Variant],
) -> Result<Vec<Trajectory>> {
    if scenarios.is_empty() || variants.is_empty() {
        return Err(Error::EmptyTrajectory {
            reason: "run_matrix needs at least one scenario and one variant".into(),
        });
    }
    let mut out = Vec::with_capacity(scenarios.len() * variants.len());
    for spec in scenarios {
        let plant_params = apply_uncertainty(params, spec);
        let ss = assemble_state_space(&plant_params)?;
        for &variant in variants {
            let controller = match variant {
                Variant::Passive => Controller::Passive,
                Variant::Lqr => Controller::Lqr(lqr_gain.clone()),
                Variant::Pid => Controller::Pid(pid.build()?),
            };
            let traj =
                simulate(&ss, controller, spec).map_err(|e| Error::InScenario {
                    scenario: spec.name.clone(),
                    variant: variant.name().into(),
                    source: Box::new(e),
                })?;
            out.push(traj);
        }
    }
    Ok(out)
}
