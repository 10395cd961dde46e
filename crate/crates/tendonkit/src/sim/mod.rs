//! Closed-loop forward simulation.
//!
//! The plant is the rigid-body model driven by wire tensions through an
//! optional elastic transmission; the controller runs at its own rate with
//! physics substeps in between. Scenario files declare the model, the
//! controller, a reference trajectory, and timed events (payload
//! attachment, impulses, a contact plane). Runs are single-threaded and
//! bit-deterministic: identical scenarios produce identical traces.
//!
//! Two actuation modes:
//! - `ideal_tension`: commanded tensions act on the joints directly.
//! - `elastic`: each wire is a unilateral spring-damper between the joint-
//!   side geometric length and a motor-side released length; the motor
//!   winds to realize the commanded tension through a first-order lag.

mod engine;
mod reference;
mod scenario;
mod trace;

pub use engine::{
    apply_plane_contact, run_scenario, total_steps_for, RunOutput, SimState, WireTransmission,
    MOTOR_TIME_CONSTANT, WIRE_DAMPING_RATIO,
};
pub use reference::ReferenceTrajectory;
pub use scenario::{
    interpret_scenario, load_scenario, ActuationMode, ContactPlane, ControllerChoice, Event,
    EventKind, Integrator, ReferenceSpec, ScenarioSpec,
};
pub use trace::{read_csv, summarize, SummaryMetrics, Trace, TraceError, TraceRow};

use thiserror::Error;

use crate::controller::ControllerError;
use crate::dynamics::DynamicsError;
use crate::kinematics::KinematicsError;
use crate::model::{ModelError, ValidationError};
use crate::textfmt::ParseError;

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Validation(#[from] ValidationError),
    #[error(transparent)]
    Kinematics(#[from] KinematicsError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Controller(#[from] ControllerError),
    #[error("simulation diverged at t = {t:.6} s (state norm exceeded 1e9); partial trace retained")]
    NumericalBlowup { t: f64, trace: Box<Trace> },
    #[error("failed to read `{path}`: {message}")]
    Io { path: String, message: String },
}
