//! Dual-loop PID force law: one loop on sprung mass motion, one on
//! suspension travel, outputs summed into the actuator force.
//!
//! Realisation per loop: trapezoidal integral, first-order filtered
//! derivative `k_d·n·s/(s + n)` discretised backward-Euler. By default the
//! motion loop's proportional and integral paths act on the error against
//! the road displacement while the derivative acts on the measured motion
//! alone; road steps therefore reach neither a pure gain kick nor the
//! differentiator. Both choices are switchable.

use crate::error::{Error, Result};
use crate::vehicle::OutputChannels;

/// Gains of a single PID loop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PidGains {
    pub k_p: f64,
    pub k_i: f64,
    pub k_d: f64,
    /// Derivative filter coefficient (1/s).
    pub n_filter: f64,
}

/// Default derivative filter coefficient. The loop with the built-in
/// reference gains is unstable for coefficients below roughly 150 1/s, so
/// the default sits well inside the stable region.
pub const DEFAULT_DERIVATIVE_FILTER: f64 = 500.0;

impl PidGains {
    pub fn new(k_p: f64, k_i: f64, k_d: f64) -> Self {
        Self {
            k_p,
            k_i,
            k_d,
            n_filter: DEFAULT_DERIVATIVE_FILTER,
        }
    }

    pub fn with_filter(mut self, n_filter: f64) -> Self {
        self.n_filter = n_filter;
        self
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("k_p", self.k_p),
            ("k_i", self.k_i),
            ("k_d", self.k_d),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter {
                    name,
                    reason: format!("must be finite and >= 0, got {v}"),
                });
            }
        }
        if !(self.n_filter > 0.0 && self.n_filter.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "n_filter",
                reason: format!("must be > 0, got {}", self.n_filter),
            });
        }
        Ok(())
    }

    pub fn is_zero(&self) -> bool {
        self.k_p == 0.0 && self.k_i == 0.0 && self.k_d == 0.0
    }
}

/// Built-in reference tuning: (motion loop, travel loop).
pub fn reference_gains() -> (PidGains, PidGains) {
    (
        PidGains::new(3.2e5, 5.24e3, 3.8e6),
        PidGains::new(160.0, 1.27e4, 0.0),
    )
}

/// Mutable per-loop realisation state.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PidState {
    /// Accumulated trapezoidal integral of the error.
    pub integral_accum: f64,
    /// Filtered-derivative internal state.
    pub deriv_state: f64,
    /// Previous error sample (trapezoid endpoint).
    pub prev_error: f64,
}

/// Advance one loop by one step; returns the control contribution.
pub fn pid_step(gains: &PidGains, state: &mut PidState, e: f64, dt: f64) -> Result<f64> {
    debug_assert!(dt > 0.0);
    if !e.is_finite() {
        return Err(Error::InvalidParameter {
            name: "error",
            reason: format!("non-finite error sample {e}"),
        });
    }
    state.integral_accum += dt * (e + state.prev_error) / 2.0;
    let mut u = gains.k_p * e + gains.k_i * state.integral_accum;
    if gains.k_d > 0.0 {
        let n = gains.n_filter;
        state.deriv_state = (state.deriv_state + dt * e) / (1.0 + n * dt);
        u += gains.k_d * n * (e - n * state.deriv_state);
    }
    state.prev_error = e;
    Ok(u)
}

/// How the motion loop's reference is produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MotionReference {
    /// Reference follows the road displacement, so the loop regulates the
    /// body relative to the road level. Consistent with the travel loop at
    /// the post-step equilibrium.
    TrackRoad,
    /// Fixed reference value (absolute regulation).
    Fixed,
}

/// One loop of the dual controller with its wiring options.
#[derive(Debug, Clone)]
pub struct Loop {
    pub gains: PidGains,
    pub enabled: bool,
    /// Proportional/integral state.
    pub state: PidState,
    /// Separate derivative-path state when the derivative acts on the
    /// measurement instead of the error.
    pub deriv_path: PidState,
}

impl Loop {
    fn new(gains: PidGains) -> Self {
        Self {
            gains,
            enabled: true,
            state: PidState::default(),
            deriv_path: PidState::default(),
        }
    }
}

/// Dual-loop PID controller.
#[derive(Debug, Clone)]
pub struct DualLoopPid {
    pub motion_loop: Loop,
    pub travel_loop: Loop,
    /// Motion-loop reference value (m); updated per sample when
    /// `motion_reference` is `TrackRoad`.
    pub r_motion: f64,
    /// Travel-loop reference value (m).
    pub r_travel: f64,
    pub motion_reference: MotionReference,
    /// When true the derivative differentiates the error (reference
    /// included); when false it differentiates the measurement only.
    pub derivative_on_error: bool,
}

impl DualLoopPid {
    pub fn new(motion: PidGains, travel: PidGains) -> Result<Self> {
        motion.validate()?;
        travel.validate()?;
        Ok(Self {
            motion_loop: Loop::new(motion),
            travel_loop: Loop::new(travel),
            r_motion: 0.0,
            r_travel: 0.0,
            motion_reference: MotionReference::TrackRoad,
            derivative_on_error: false,
        })
    }

    /// Controller with the built-in reference tuning and default wiring.
    pub fn reference_controller() -> Self {
        let (motion, travel) = reference_gains();
        Self::new(motion, travel).expect("reference gains are valid")
    }

    /// Reset all realisation state to zero (simulation start).
    pub fn reset(&mut self) {
        self.motion_loop.state = PidState::default();
        self.motion_loop.deriv_path = PidState::default();
        self.travel_loop.state = PidState::default();
        self.travel_loop.deriv_path = PidState::default();
    }

    /// Actuator force from the current outputs. `z_r` is the road
    /// displacement, used when the motion reference tracks the road.
    pub fn dual_loop_force(
        &mut self,
        outputs: &OutputChannels,
        z_r: f64,
        dt: f64,
    ) -> Result<f64> {
        if self.motion_reference == MotionReference::TrackRoad {
            self.r_motion = z_r;
        }
        let mut f_a = 0.0;
        if self.motion_loop.enabled {
            f_a += loop_force(
                &mut self.motion_loop,
                self.r_motion,
                outputs.sprung_mass_motion,
                self.derivative_on_error,
                dt,
            )?;
        }
        if self.travel_loop.enabled {
            f_a += loop_force(
                &mut self.travel_loop,
                self.r_travel,
                outputs.suspension_travel,
                self.derivative_on_error,
                dt,
            )?;
        }
        Ok(f_a)
    }
}

/// Immutable description of a dual-loop controller; builds fresh controller
/// instances so every simulation run owns its own state.
#[derive(Debug, Clone)]
pub struct PidSetup {
    pub motion: PidGains,
    pub travel: PidGains,
    pub motion_reference: MotionReference,
    pub derivative_on_error: bool,
    pub r_motion: f64,
    pub r_travel: f64,
    pub motion_enabled: bool,
    pub travel_enabled: bool,
}

impl Default for PidSetup {
    fn default() -> Self {
        let (motion, travel) = reference_gains();
        Self {
            motion,
            travel,
            motion_reference: MotionReference::TrackRoad,
            derivative_on_error: false,
            r_motion: 0.0,
            r_travel: 0.0,
            motion_enabled: true,
            travel_enabled: true,
        }
    }
}

impl PidSetup {
    pub fn build(&self) -> Result<DualLoopPid> {
        let mut ctl = DualLoopPid::new(self.motion, self.travel)?;
        ctl.motion_reference = self.motion_reference;
        ctl.derivative_on_error = self.derivative_on_error;
        ctl.r_motion = self.r_motion;
        ctl.r_travel = self.r_travel;
        ctl.motion_loop.enabled = self.motion_enabled;
        ctl.travel_loop.enabled = self.travel_enabled;
        Ok(ctl)
    }
}

fn loop_force(
    lp: &mut Loop,
    reference: f64,
    measurement: f64,
    derivative_on_error: bool,
    dt: f64,
) -> Result<f64> {
    let e = reference - measurement;
    if derivative_on_error || lp.gains.k_d == 0.0 {
        pid_step(&lp.gains, &mut lp.state, e, dt)
    } else {
        // split realisation: P and I on the error, D on the measurement
        let pi_gains = PidGains {
            k_d: 0.0,
            ..lp.gains
        };
        let d_gains = PidGains {
            k_p: 0.0,
            k_i: 0.0,
            ..lp.gains
        };
        let u_pi = pid_step(&pi_gains, &mut lp.state, e, dt)?;
        let u_d = pid_step(&d_gains, &mut lp.deriv_path, -measurement, dt)?;
        Ok(u_pi + u_d)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn pure_proportional() {
        let gains = PidGains::new(1.0, 0.0, 0.0);
        let mut st = PidState::default();
        let u = pid_step(&gains, &mut st, 0.5, 1e-3).unwrap();
        assert_relative_eq!(u, 0.5);
    }

    #[test]
    fn integrator_on_constant_input() {
        let gains = PidGains::new(0.0, 1.0, 0.0);
        let mut st = PidState::default();
        let dt = 1e-3;
        let mut u = 0.0;
        for _ in 0..1000 {
            u = pid_step(&gains, &mut st, 1.0, dt).unwrap();
        }
        assert!((u - 1.0).abs() < 1e-3, "u = {u}");
    }

    #[test]
    fn filtered_derivative_of_ramp_converges_to_slope() {
        let gains = PidGains::new(0.0, 0.0, 1.0).with_filter(100.0);
        let mut st = PidState::default();
        let dt = 1e-4;
        let mut u = 0.0;
        for k in 1..=1000 {
            u = pid_step(&gains, &mut st, k as f64 * dt, dt).unwrap();
        }
        assert!((u - 1.0).abs() < 0.02, "u = {u}");
    }

    #[test]
    fn non_finite_error_is_rejected() {
        let gains = PidGains::new(1.0, 1.0, 0.0);
        let mut st = PidState::default();
        assert!(pid_step(&gains, &mut st, f64::NAN, 1e-3).is_err());
    }

    #[test]
    fn zero_everything_gives_zero_force() {
        let mut ctl = DualLoopPid::reference_controller();
        let out = OutputChannels {
            suspension_travel: 0.0,
            sprung_mass_acceleration: 0.0,
            sprung_mass_motion: 0.0,
        };
        let f = ctl.dual_loop_force(&out, 0.0, 1e-3).unwrap();
        assert_eq!(f, 0.0);
    }

    #[test]
    fn first_step_force_opposes_upward_motion() {
        let mut ctl = DualLoopPid::reference_controller();
        let out = OutputChannels {
            suspension_travel: 0.0,
            sprung_mass_acceleration: 0.0,
            sprung_mass_motion: 0.01,
        };
        let f = ctl.dual_loop_force(&out, 0.0, 1e-3).unwrap();
        // proportional + derivative of the motion loop dominate; both push down
        assert!(f < 0.0, "force {f} should oppose upward motion");
        // hand evaluation: e = -0.01 so u_p = -3.2e3; the derivative path sees
        // the measurement rise from 0 to 0.01 in one step
        let (motion, _) = reference_gains();
        let n = motion.n_filter;
        let dt = 1e-3;
        let filt = dt * (-0.01) / (1.0 + n * dt);
        let expected_d = motion.k_d * n * (-0.01 - n * filt);
        let expected = motion.k_p * (-0.01) + motion.k_i * dt * (-0.01) / 2.0 + expected_d;
        assert_relative_eq!(f, expected, max_relative = 1e-12);
    }

    #[test]
    fn disabling_one_loop_leaves_the_other() {
        let mut ctl = DualLoopPid::reference_controller();
        ctl.motion_loop.enabled = false;
        let out = OutputChannels {
            suspension_travel: 0.02,
            sprung_mass_acceleration: 0.0,
            sprung_mass_motion: 0.05,
        };
        let f_travel_only = ctl.dual_loop_force(&out, 0.0, 1e-3).unwrap();

        let (_, travel) = reference_gains();
        let mut lone = DualLoopPid::new(PidGains::new(0.0, 0.0, 0.0), travel).unwrap();
        lone.motion_loop.enabled = false;
        let f_lone = lone.dual_loop_force(&out, 0.0, 1e-3).unwrap();
        assert_relative_eq!(f_travel_only, f_lone);
    }

    #[test]
    fn dual_loop_is_superposition_of_single_loops() {
        let out_seq = [
            (0.01, 0.03, 0.0),
            (-0.02, 0.01, 0.04),
            (0.005, -0.02, 0.04),
        ];
        let mk_out = |(t, m, _): (f64, f64, f64)| OutputChannels {
            suspension_travel: t,
            sprung_mass_acceleration: 0.0,
            sprung_mass_motion: m,
        };
        let dt = 1e-3;

        let mut both = DualLoopPid::reference_controller();
        let mut only_motion = DualLoopPid::reference_controller();
        only_motion.travel_loop.enabled = false;
        let mut only_travel = DualLoopPid::reference_controller();
        only_travel.motion_loop.enabled = false;

        for &sample in &out_seq {
            let (_, _, zr) = sample;
            let o = mk_out(sample);
            let f = both.dual_loop_force(&o, zr, dt).unwrap();
            let fm = only_motion.dual_loop_force(&o, zr, dt).unwrap();
            let ft = only_travel.dual_loop_force(&o, zr, dt).unwrap();
            assert_relative_eq!(f, fm + ft, max_relative = 1e-12, epsilon = 1e-12);
        }
    }

    #[test]
    fn road_tracking_reference_cancels_road_level() {
        // body sitting exactly at the road level produces no motion-loop error
        let mut ctl = DualLoopPid::reference_controller();
        ctl.travel_loop.enabled = false;
        let out = OutputChannels {
            suspension_travel: 0.0,
            sprung_mass_acceleration: 0.0,
            sprung_mass_motion: 0.08,
        };
        let f = ctl.dual_loop_force(&out, 0.08, 1e-3).unwrap();
        // derivative path still reacts to the measurement step from rest
        let (motion, _) = reference_gains();
        let n = motion.n_filter;
        let dt = 1e-3;
        let filt = dt * (-0.08) / (1.0 + n * dt);
        let expected = motion.k_d * n * (-0.08 - n * filt);
        assert_relative_eq!(f, expected, max_relative = 1e-12);
    }
}
