//! Quarter-car plant: parameters, state-space assembly and output maps.
//!
//! States: x1 = suspension travel (Zs - Zus), x2 = sprung mass velocity,
//! x3 = wheel deflection (Zus - Zr), x4 = unsprung mass velocity.
//! Inputs: column 0 = road velocity (dZr/dt), column 1 = actuator force Fa.
//! Outputs: suspension travel, sprung mass acceleration, sprung mass motion
//! (the absolute body displacement, reconstructed as x1 + x3 + Zr).

use crate::error::{Error, Result};
use crate::matrix::Mat;

/// Physical constants of the quarter car.
#[derive(Debug, Clone, PartialEq)]
pub struct SuspensionParams {
    /// Suspension damping (N·s/m).
    pub b_s: f64,
    /// Tyre damping (N·s/m).
    pub b_us: f64,
    /// Suspension stiffness (N/m).
    pub k_s: f64,
    /// Tyre stiffness (N/m).
    pub k_us: f64,
    /// Sprung mass (kg).
    pub m_s: f64,
    /// Unsprung mass (kg).
    pub m_us: f64,
}

impl Default for SuspensionParams {
    /// Built-in reference parameter set used by all scenario defaults.
    fn default() -> Self {
        Self {
            b_s: 1544.0,
            b_us: 0.0,
            k_s: 26_000.0,
            k_us: 100_000.0,
            m_s: 234.0,
            m_us: 43.0,
        }
    }
}

impl SuspensionParams {
    pub fn validate(&self) -> Result<()> {
        let checks: [(&'static str, f64, bool); 6] = [
            ("m_s", self.m_s, self.m_s > 0.0),
            ("m_us", self.m_us, self.m_us > 0.0),
            ("k_s", self.k_s, self.k_s >= 0.0),
            ("k_us", self.k_us, self.k_us >= 0.0),
            ("b_s", self.b_s, self.b_s >= 0.0),
            ("b_us", self.b_us, self.b_us >= 0.0),
        ];
        for (name, value, ok) in checks {
            if !value.is_finite() {
                return Err(Error::InvalidParameter {
                    name,
                    reason: format!("must be finite, got {value}"),
                });
            }
            if !ok {
                let constraint = if name.starts_with('m') { "> 0" } else { ">= 0" };
                return Err(Error::InvalidParameter {
                    name,
                    reason: format!("must be {constraint}, got {value}"),
                });
            }
        }
        Ok(())
    }

    /// Same car with the sprung mass scaled by `factor`.
    pub fn with_sprung_mass_scale(&self, factor: f64) -> Self {
        Self {
            m_s: self.m_s * factor,
            ..self.clone()
        }
    }
}

/// Plant state at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StateVector {
    /// x1: suspension travel Zs - Zus (m).
    pub x1: f64,
    /// x2: sprung mass velocity (m/s).
    pub x2: f64,
    /// x3: wheel deflection Zus - Zr (m).
    pub x3: f64,
    /// x4: unsprung mass velocity (m/s).
    pub x4: f64,
}

impl StateVector {
    pub fn from_array(a: [f64; 4]) -> Self {
        Self {
            x1: a[0],
            x2: a[1],
            x3: a[2],
            x4: a[3],
        }
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.x1, self.x2, self.x3, self.x4]
    }

    pub fn is_finite(&self) -> bool {
        self.as_array().iter().all(|v| v.is_finite())
    }
}

/// Output channels of the quarter car.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OutputChannel {
    SuspensionTravel,
    SprungMassAcceleration,
    SprungMassMotion,
}

impl OutputChannel {
    pub const ALL: [OutputChannel; 3] = [
        OutputChannel::SuspensionTravel,
        OutputChannel::SprungMassAcceleration,
        OutputChannel::SprungMassMotion,
    ];

    pub fn index(self) -> usize {
        match self {
            OutputChannel::SuspensionTravel => 0,
            OutputChannel::SprungMassAcceleration => 1,
            OutputChannel::SprungMassMotion => 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            OutputChannel::SuspensionTravel => "suspension_travel",
            OutputChannel::SprungMassAcceleration => "sprung_mass_acceleration",
            OutputChannel::SprungMassMotion => "sprung_mass_motion",
        }
    }
}

/// Output values at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutputChannels {
    /// Suspension travel (m).
    pub suspension_travel: f64,
    /// Sprung mass acceleration (m/s²).
    pub sprung_mass_acceleration: f64,
    /// Sprung mass motion: absolute body displacement (m).
    pub sprung_mass_motion: f64,
}

/// Input channel indices of the assembled model.
pub const INPUT_ROAD_VELOCITY: usize = 0;
pub const INPUT_ACTUATOR: usize = 1;

/// Continuous-time model (A, B, C, D) with named channels.
#[derive(Debug, Clone)]
pub struct StateSpace {
    pub a: Mat,
    pub b: Mat,
    pub c: Mat,
    pub d: Mat,
    pub input_names: [&'static str; 2],
    pub output_names: [&'static str; 3],
    /// Parameters the model was assembled from.
    pub params: SuspensionParams,
}

impl StateSpace {
    /// Road-velocity input column as an array.
    pub fn b_road(&self) -> [f64; 4] {
        [
            self.b[(0, INPUT_ROAD_VELOCITY)],
            self.b[(1, INPUT_ROAD_VELOCITY)],
            self.b[(2, INPUT_ROAD_VELOCITY)],
            self.b[(3, INPUT_ROAD_VELOCITY)],
        ]
    }

    /// Actuator input column as a 4x1 matrix.
    pub fn b_actuator(&self) -> Mat {
        self.b.block(0, INPUT_ACTUATOR, 4, 1)
    }
}

/// Build the quarter-car state space from validated parameters.
pub fn assemble_state_space(params: &SuspensionParams) -> Result<StateSpace> {
    params.validate()?;
    let SuspensionParams {
        b_s,
        b_us,
        k_s,
        k_us,
        m_s,
        m_us,
    } = *params;

    let a = Mat::from_rows(&[
        &[0.0, 1.0, 0.0, -1.0],
        &[-k_s / m_s, -b_s / m_s, 0.0, b_s / m_s],
        &[0.0, 0.0, 0.0, 1.0],
        &[k_s / m_us, b_s / m_us, -k_us / m_us, -(b_s + b_us) / m_us],
    ]);
    // Force on the unsprung mass carries 1/m_us; the actuator acts between
    // the two masses with opposite reactions.
    let b = Mat::from_rows(&[
        &[0.0, 0.0],
        &[0.0, 1.0 / m_s],
        &[-1.0, 0.0],
        &[b_us / m_us, -1.0 / m_us],
    ]);
    // Row 0: suspension travel. Row 1: sprung mass acceleration. Row 2:
    // sprung mass motion less the road displacement, which the simulation
    // adds back per sample (x1 + x3 + Zr).
    let c = Mat::from_rows(&[
        &[1.0, 0.0, 0.0, 0.0],
        &[-k_s / m_s, -b_s / m_s, 0.0, b_s / m_s],
        &[1.0, 0.0, 1.0, 0.0],
    ]);
    let d = Mat::from_rows(&[&[0.0, 0.0], &[0.0, 1.0 / m_s], &[0.0, 0.0]]);

    if !(a.all_finite() && b.all_finite() && c.all_finite() && d.all_finite()) {
        return Err(Error::InvalidParameter {
            name: "params",
            reason: "assembled matrices contain non-finite entries".into(),
        });
    }

    Ok(StateSpace {
        a,
        b,
        c,
        d,
        input_names: ["road_velocity", "actuator_force"],
        output_names: [
            "suspension_travel",
            "sprung_mass_acceleration",
            "sprung_mass_motion",
        ],
        params: params.clone(),
    })
}

/// Evaluate the three output channels at a state, input pair and road level.
pub fn evaluate_outputs(
    ss: &StateSpace,
    x: &StateVector,
    u: (f64, f64),
    z_r: f64,
) -> Result<OutputChannels> {
    if !x.is_finite() {
        return Err(Error::InvalidParameter {
            name: "state",
            reason: "non-finite state".into(),
        });
    }
    let xs = x.as_array();
    let (road_vel, f_a) = u;
    let row = |i: usize| -> f64 {
        let cr = ss.c.row(i);
        cr[0] * xs[0] + cr[1] * xs[1] + cr[2] * xs[2] + cr[3] * xs[3]
            + ss.d[(i, INPUT_ROAD_VELOCITY)] * road_vel
            + ss.d[(i, INPUT_ACTUATOR)] * f_a
    };
    Ok(OutputChannels {
        suspension_travel: row(0),
        sprung_mass_acceleration: row(1),
        sprung_mass_motion: row(2) + z_r,
    })
}
