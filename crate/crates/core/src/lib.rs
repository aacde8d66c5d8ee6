//! Quarter-car suspension toolkit: plant modelling, LQR and dual-loop PID
//! synthesis, pole-zero analysis, fixed-step simulation with exact handling
//! of road displacement jumps, and step-response metric extraction.

pub mod analysis;
pub mod error;
pub mod linalg;
pub mod lqr;
pub mod matrix;
pub mod metrics;
pub mod pid;
pub mod signals;
pub mod sim;
pub mod vehicle;

pub use error::{Error, Result};
pub use matrix::Mat;
pub use vehicle::{OutputChannel, StateSpace, StateVector, SuspensionParams};
