//! Road excitation signals and scenario descriptions.
//!
//! The road is a displacement step (optionally a finite pulse) plus an
//! optional piecewise-constant Gaussian overlay with per-sample variance
//! `noise_power / noise_sample_time`. Noise values derive statelessly from
//! `(seed, interval index)`, so evaluation order and concurrency cannot
//! change a realisation.

use crate::error::{Error, Result};
use crate::vehicle::SuspensionParams;

pub const DEFAULT_STEP_AMPLITUDE: f64 = 0.08;
pub const DEFAULT_STEP_TIME: f64 = 1.0;
pub const DEFAULT_NOISE_POWER: f64 = 1.0e-5;
pub const DEFAULT_NOISE_SAMPLE_TIME: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RoadKind {
    Step,
    StepPlusNoise,
}

/// Road displacement profile.
#[derive(Debug, Clone, PartialEq)]
pub struct RoadSignal {
    pub kind: RoadKind,
    /// Step amplitude (m).
    pub step_amplitude: f64,
    /// Step onset (s).
    pub step_time: f64,
    /// When set, the step returns to zero after this duration (bump pulse
    /// instead of a held step).
    pub pulse_width: Option<f64>,
    /// Noise power (m²·s), Simulink band-limited-white-noise convention.
    pub noise_power: f64,
    /// Noise hold interval (s).
    pub noise_sample_time: f64,
    /// Seed of the stateless noise stream.
    pub seed: u64,
}

/// One road evaluation: total displacement plus the held noise component.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoadValue {
    pub total: f64,
    pub noise: f64,
}

impl RoadSignal {
    pub fn step(amplitude: f64, at: f64) -> Self {
        Self {
            kind: RoadKind::Step,
            step_amplitude: amplitude,
            step_time: at,
            pulse_width: None,
            noise_power: 0.0,
            noise_sample_time: DEFAULT_NOISE_SAMPLE_TIME,
            seed: 0,
        }
    }

    pub fn step_with_noise(amplitude: f64, at: f64, power: f64, sample_time: f64, seed: u64) -> Self {
        Self {
            kind: RoadKind::StepPlusNoise,
            step_amplitude: amplitude,
            step_time: at,
            pulse_width: None,
            noise_power: power,
            noise_sample_time: sample_time,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.step_time >= 0.0 && self.step_time.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "step_time",
                reason: format!("must be >= 0, got {}", self.step_time),
            });
        }
        if self.kind == RoadKind::StepPlusNoise && !(self.noise_sample_time > 0.0) {
            return Err(Error::InvalidParameter {
                name: "noise_sample_time",
                reason: format!("must be > 0 when noise is enabled, got {}", self.noise_sample_time),
            });
        }
        if !(self.noise_power >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "noise_power",
                reason: format!("must be >= 0, got {}", self.noise_power),
            });
        }
        if let Some(w) = self.pulse_width {
            if !(w > 0.0) {
                return Err(Error::InvalidParameter {
                    name: "pulse_width",
                    reason: format!("must be > 0 when set, got {w}"),
                });
            }
        }
        Ok(())
    }

    /// Standard deviation of one held noise sample.
    pub fn noise_sigma(&self) -> f64 {
        match self.kind {
            RoadKind::Step => 0.0,
            RoadKind::StepPlusNoise => (self.noise_power / self.noise_sample_time).sqrt(),
        }
    }

    /// Held noise value on interval `k` (pure in `(seed, k)`).
    pub fn noise_sample(&self, k: u64) -> f64 {
        match self.kind {
            RoadKind::Step => 0.0,
            RoadKind::StepPlusNoise => self.noise_sigma() * standard_gaussian(self.seed, k),
        }
    }

    /// Road displacement at time `t >= 0` together with the held noise
    /// component. Event boundaries resolve with a small relative guard so
    /// that grid-aligned times land on the correct side.
    pub fn value(&self, t: f64) -> RoadValue {
        debug_assert!(t >= 0.0);
        let tol = 1e-9 * self.step_time.abs().max(1.0);
        let mut step = if t >= self.step_time - tol {
            self.step_amplitude
        } else {
            0.0
        };
        if let Some(w) = self.pulse_width {
            if t >= self.step_time + w - tol {
                step = 0.0;
            }
        }
        let noise = match self.kind {
            RoadKind::Step => 0.0,
            RoadKind::StepPlusNoise => {
                let idx = ((t + tol) / self.noise_sample_time).floor();
                self.noise_sample(idx.max(0.0) as u64)
            }
        };
        RoadValue {
            total: step + noise,
            noise,
        }
    }
}

/// SplitMix64 output function over a counter; the basis of the stateless
/// noise stream.
fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn to_unit_interval(bits: u64) -> f64 {
    // (0, 1): 53-bit mantissa, offset half an ulp away from zero
    ((bits >> 11) as f64 + 0.5) * (1.0 / 9_007_199_254_740_992.0)
}

/// Standard normal deviate, pure in `(seed, k)`: two counter-derived
/// uniforms through the Box-Muller transform.
pub fn standard_gaussian(seed: u64, k: u64) -> f64 {
    let base = splitmix64(seed ^ k.wrapping_mul(0xA076_1D64_78BD_642F));
    let u1 = to_unit_interval(splitmix64(base));
    let u2 = to_unit_interval(splitmix64(base.wrapping_add(1)));
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// How the steady reference of a response is determined.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReferenceMode {
    /// Mean of the channel over the final 10% of the horizon.
    FinalMean,
    /// Known asymptote: 0 for travel and acceleration, step amplitude for
    /// sprung mass motion.
    Asymptote,
}

/// One experiment: road input, plant perturbation, grid and metric band.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSpec {
    pub name: String,
    pub road: RoadSignal,
    /// Sprung-mass scaling of the simulated plant (1.0 nominal).
    pub sprung_mass_scale: f64,
    /// Optional absolute override of the scaled sprung mass (kg).
    pub sprung_mass_override: Option<f64>,
    /// Simulation horizon (s).
    pub horizon: f64,
    /// Integration step (s).
    pub dt: f64,
    /// Settling band as a fraction of the peak deviation.
    pub settling_band: f64,
    pub reference_mode: ReferenceMode,
}

pub const DEFAULT_STEP_DT: f64 = 1.0e-4;
pub const DEFAULT_STEP_HORIZON: f64 = 3.0;
pub const DEFAULT_NOISE_HORIZON: f64 = 10.0;
pub const DEFAULT_STEP_BAND: f64 = 0.02;
pub const DEFAULT_NOISE_BAND: f64 = 0.05;
pub const DEFAULT_UNCERTAINTY_SCALE: f64 = 1.2;

impl ScenarioSpec {
    /// Held 0.08 m step at t = 1 s on the nominal plant.
    pub fn nominal_step() -> Self {
        Self {
            name: "nominal".into(),
            road: RoadSignal::step(DEFAULT_STEP_AMPLITUDE, DEFAULT_STEP_TIME),
            sprung_mass_scale: 1.0,
            sprung_mass_override: None,
            horizon: DEFAULT_STEP_HORIZON,
            dt: DEFAULT_STEP_DT,
            settling_band: DEFAULT_STEP_BAND,
            reference_mode: ReferenceMode::FinalMean,
        }
    }

    /// Same step on a plant with the sprung mass scaled up 20%.
    pub fn uncertainty_step() -> Self {
        Self {
            name: "uncertainty".into(),
            sprung_mass_scale: DEFAULT_UNCERTAINTY_SCALE,
            ..Self::nominal_step()
        }
    }

    /// Step plus band-limited white noise, 5% settling band.
    pub fn noise_step(seed: u64) -> Self {
        Self {
            name: "noise".into(),
            road: RoadSignal::step_with_noise(
                DEFAULT_STEP_AMPLITUDE,
                DEFAULT_STEP_TIME,
                DEFAULT_NOISE_POWER,
                DEFAULT_NOISE_SAMPLE_TIME,
                seed,
            ),
            horizon: DEFAULT_NOISE_HORIZON,
            settling_band: DEFAULT_NOISE_BAND,
            ..Self::nominal_step()
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.road.validate()?;
        if !(self.horizon > self.road.step_time) {
            return Err(Error::InvalidParameter {
                name: "horizon",
                reason: format!(
                    "must exceed step_time {}, got {}",
                    self.road.step_time, self.horizon
                ),
            });
        }
        if !(self.dt > 0.0) {
            return Err(Error::InvalidParameter {
                name: "dt",
                reason: format!("must be > 0, got {}", self.dt),
            });
        }
        if !(self.settling_band > 0.0 && self.settling_band < 1.0) {
            return Err(Error::InvalidParameter {
                name: "settling_band",
                reason: format!("must lie in (0, 1), got {}", self.settling_band),
            });
        }
        if !(self.sprung_mass_scale > 0.0) {
            return Err(Error::InvalidParameter {
                name: "sprung_mass_scale",
                reason: format!("must be > 0, got {}", self.sprung_mass_scale),
            });
        }
        Ok(())
    }

    /// Scenario copy with a different noise seed.
    pub fn with_seed(&self, seed: u64) -> Self {
        let mut s = self.clone();
        s.road.seed = seed;
        s
    }
}

/// Plant parameters for this scenario: sprung mass scaled, optionally pinned
/// to an absolute value. Controllers are designed on the nominal plant and
/// are never re-derived here.
pub fn apply_uncertainty(params: &SuspensionParams, spec: &ScenarioSpec) -> SuspensionParams {
    let mut out = params.with_sprung_mass_scale(spec.sprung_mass_scale);
    if let Some(m) = spec.sprung_mass_override {
        out.m_s = m;
    }
    out
}
