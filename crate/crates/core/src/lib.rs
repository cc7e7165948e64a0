//! Differential-cascaded adaptive control of rigid-link manipulators.
//!
//! The crate models a planar two-link arm, the degree-ℓ reference dynamics
//! that generate the reference velocity `z`, the adaptive torque laws, and a
//! fixed-step closed-loop simulator with ground-truth diagnostics.

pub mod config;
pub mod control;
pub mod dynamics;
pub mod error;
pub mod integrate;
pub mod reference;
pub mod sim;
pub mod verify;

pub use control::{ControlGains, ControlLaw, ControllerState, ParameterBox};
pub use dynamics::{ManipulatorParams, Regressor, RobotState};
pub use error::{ConfigError, DiagnosticError, DynamicsError, SimError};
pub use reference::{Feedback, Interconnection, ReferenceConfig, ReferenceForm, ReferenceState, Trajectory};
pub use sim::{run, Sampling, SimConfig, SimLog, TauStar};
