//! Wire-space computed-torque control.
//!
//! One control tick composes three stages:
//!
//! 1. computed torque: `τ_ref = M(q)(K_p(q_ref − q) + q̈_ref) + h + g`,
//! 2. tension distribution: the box QP from [`crate::tension`] turns
//!    `τ_ref` into non-negative wire tensions `f_ref`,
//! 3. wire-velocity feedback: `f_final = K_v(l̇_ref − l̇) + f_ref`,
//!    clamped to `[0, f_max]`.
//!
//! Deliberately absent: joint-velocity feedback. Damping is injected on
//! the wire side (stage 3), which keeps the law robust to joint-encoder
//! velocity noise; the Coriolis term `h` is evaluated with the reference
//! feedforward velocity, never the measured one. Perturbing measured `q̇`
//! leaves the output bit-identical (tested).

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::dynamics::{self, DynamicsError};
use crate::kinematics::{self, KinematicsError};
use crate::model::RobotModel;
use crate::tension::{SolveStatus, TensionError, TensionProblem, TensionSolver, DEFAULT_LAMBDA};

pub const DEFAULT_KP: f64 = 400.0;
pub const DEFAULT_KV: f64 = 200.0;
pub const DEFAULT_CONTROL_RATE: f64 = 500.0;

#[derive(Debug, Clone, Error)]
pub enum ControllerError {
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Kinematics(#[from] KinematicsError),
    #[error(transparent)]
    Tension(#[from] TensionError),
    #[error("{what}: expected dimension {expected}, got {got}")]
    DimensionMismatch { what: &'static str, expected: usize, got: usize },
    #[error("controller config: {0}")]
    BadConfig(String),
}

/// Gains and QP parameters for one control loop.
#[derive(Debug, Clone)]
pub struct ControllerConfig {
    /// Position gain (N×N, 1/s²): multiplies the joint-angle error to give
    /// a corrective acceleration. Diagonal in practice.
    pub kp: DMatrix<f64>,
    /// Wire-velocity gain (R×R, N·s/m). Diagonal in practice.
    pub kv: DMatrix<f64>,
    /// Torque-tracking weight diagonal forwarded to the tension QP.
    pub lambda: DVector<f64>,
    /// Per-wire tension bounds forwarded to the tension QP.
    pub f_min: DVector<f64>,
    pub f_max: DVector<f64>,
    /// Loop rate in Hz.
    pub control_rate: f64,
}

impl ControllerConfig {
    /// Default gains with tension bounds taken from the model's routes.
    pub fn from_model(model: &RobotModel) -> ControllerConfig {
        let n = model.n_joints();
        let r = model.n_routes();
        ControllerConfig {
            kp: DMatrix::identity(n, n) * DEFAULT_KP,
            kv: DMatrix::identity(r, r) * DEFAULT_KV,
            lambda: DVector::from_element(n, DEFAULT_LAMBDA),
            f_min: DVector::from_iterator(r, model.routes.iter().map(|w| w.f_min)),
            f_max: DVector::from_iterator(r, model.routes.iter().map(|w| w.f_max)),
            control_rate: DEFAULT_CONTROL_RATE,
        }
    }

    /// Compliant preset: both gains divided by 10. Used for impact
    /// scenarios where the arm should yield rather than fight.
    pub fn low_gain(model: &RobotModel) -> ControllerConfig {
        let mut c = ControllerConfig::from_model(model);
        c.kp /= 10.0;
        c.kv /= 10.0;
        c
    }

    pub fn validate(&self, model: &RobotModel) -> Result<(), ControllerError> {
        let n = model.n_joints();
        let r = model.n_routes();
        if self.kp.shape() != (n, n) {
            return Err(ControllerError::DimensionMismatch { what: "kp", expected: n, got: self.kp.nrows() });
        }
        if self.kv.shape() != (r, r) {
            return Err(ControllerError::DimensionMismatch { what: "kv", expected: r, got: self.kv.nrows() });
        }
        if self.lambda.len() != n {
            return Err(ControllerError::DimensionMismatch { what: "lambda", expected: n, got: self.lambda.len() });
        }
        if self.f_min.len() != r || self.f_max.len() != r {
            return Err(ControllerError::DimensionMismatch { what: "f bounds", expected: r, got: self.f_min.len() });
        }
        for (name, m) in [("kp", &self.kp), ("kv", &self.kv)] {
            if !m.iter().all(|x| x.is_finite()) {
                return Err(ControllerError::BadConfig(format!("{name} must be finite")));
            }
            if (m - m.transpose()).amax() > 1e-9 * m.amax().max(1.0) {
                return Err(ControllerError::BadConfig(format!("{name} must be symmetric")));
            }
            let lo = m.clone().symmetric_eigenvalues().min();
            if lo < -1e-9 * m.amax().max(1.0) {
                return Err(ControllerError::BadConfig(format!("{name} must be positive semi-definite")));
            }
        }
        if !(self.control_rate.is_finite() && self.control_rate > 0.0) {
            return Err(ControllerError::BadConfig("control_rate must be positive".into()));
        }
        Ok(())
    }
}

/// Reference signals for one tick. `qdot_ref` is the feedforward joint
/// velocity implied by the reference trajectory (zero when holding a
/// posture); it feeds the Coriolis term and is distinct from — and never
/// replaced by — the measured joint velocity.
#[derive(Debug, Clone, PartialEq)]
pub struct Reference {
    pub q_ref: Vec<f64>,
    pub qdot_ref: Vec<f64>,
    pub qdd_ref: Vec<f64>,
    /// Target wire velocity; `G(q_ref)·q̇_ref` when generated from a joint
    /// trajectory.
    pub ldot_ref: Vec<f64>,
}

impl Reference {
    /// Hold a fixed posture: all rate references zero.
    pub fn hold(model: &RobotModel, q_ref: Vec<f64>) -> Reference {
        Reference {
            q_ref,
            qdot_ref: vec![0.0; model.n_joints()],
            qdd_ref: vec![0.0; model.n_joints()],
            ldot_ref: vec![0.0; model.n_routes()],
        }
    }
}

/// Sensor values available to the controller. `qdot` is carried for
/// diagnostics only: the control law does not read it.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasuredState {
    pub q: Vec<f64>,
    pub qdot: Vec<f64>,
    /// Wire velocities (motor encoder rate × pulley radius).
    pub ldot: Vec<f64>,
}

/// Output of one control tick, with QP diagnostics.
#[derive(Debug, Clone)]
pub struct ControlStep {
    /// Commanded tensions after velocity feedback and clamping.
    pub f_final: DVector<f64>,
    /// QP tensions before velocity feedback.
    pub f_ref: DVector<f64>,
    /// Computed-torque request.
    pub tau_ref: DVector<f64>,
    /// QP torque-tracking residual `τ_ref + Gᵀf_ref`.
    pub torque_residual: DVector<f64>,
    pub kkt_residual: f64,
    pub qp_iterations: usize,
    pub qp_status: SolveStatus,
}

/// Computed-torque law: `τ_ref = M(q)(K_p(q_ref − q) + q̈_ref) + h(q, q̇_ff) + g(q)`
/// with `q̇_ff` the reference feedforward velocity.
pub fn computed_torque(
    model: &RobotModel,
    q: &[f64],
    reference: &Reference,
    kp: &DMatrix<f64>,
) -> Result<DVector<f64>, ControllerError> {
    let n = model.n_joints();
    for (what, len) in [
        ("q", q.len()),
        ("q_ref", reference.q_ref.len()),
        ("qdot_ref", reference.qdot_ref.len()),
        ("qdd_ref", reference.qdd_ref.len()),
    ] {
        if len != n {
            return Err(ControllerError::DimensionMismatch { what, expected: n, got: len });
        }
    }
    if kp.shape() != (n, n) {
        return Err(ControllerError::DimensionMismatch { what: "kp", expected: n, got: kp.nrows() });
    }
    let m = dynamics::inertia_matrix(model, q)?;
    let h = dynamics::bias_forces(model, q, &reference.qdot_ref)?;
    let grav = dynamics::gravity_vector(model, q)?;
    let err = DVector::from_iterator(n, reference.q_ref.iter().zip(q).map(|(r, m)| r - m));
    let qdd = DVector::from_row_slice(&reference.qdd_ref);
    Ok(m * (kp * err + qdd) + h + grav)
}

/// Torque generated by a tension vector: `τ = −Gᵀf`.
pub fn torque_from_tension(g: &DMatrix<f64>, f: &DVector<f64>) -> Result<DVector<f64>, ControllerError> {
    if f.len() != g.nrows() {
        return Err(ControllerError::DimensionMismatch { what: "f", expected: g.nrows(), got: f.len() });
    }
    Ok(-(g.transpose() * f))
}

/// Wire-velocity feedback: `f_final = K_v(l̇ − l̇_ref) + f_ref`, clamped
/// elementwise to `[0, f_max]` (wires cannot push, winches saturate).
///
/// Sign convention: `l̇` is the geometric length rate (lengthening
/// positive). A wire lengthening faster than its reference is being
/// stretched by the joint motion it opposes, so its tension rises to
/// brake that motion; with τ = −Gᵀf this yields joint-space damping
/// −K_v G G ᵀ-shaped, never excitation. (Controllers that read the
/// winding rate off the motor, where contraction is positive, write the
/// same term with the arguments swapped.)
pub fn tension_command(
    f_ref: &DVector<f64>,
    kv: &DMatrix<f64>,
    ldot_ref: &[f64],
    ldot: &[f64],
    f_max: &DVector<f64>,
) -> Result<DVector<f64>, ControllerError> {
    let r = f_ref.len();
    for (what, len) in [("ldot_ref", ldot_ref.len()), ("ldot", ldot.len()), ("f_max", f_max.len())] {
        if len != r {
            return Err(ControllerError::DimensionMismatch { what, expected: r, got: len });
        }
    }
    if kv.shape() != (r, r) {
        return Err(ControllerError::DimensionMismatch { what: "kv", expected: r, got: kv.nrows() });
    }
    let diff = DVector::from_iterator(r, ldot_ref.iter().zip(ldot).map(|(a, b)| b - a));
    let mut f = kv * diff + f_ref;
    for i in 0..r {
        f[i] = f[i].clamp(0.0, f_max[i]);
    }
    Ok(f)
}

/// One control loop instance. Owns the warm-started tension solver, so a
/// single `Controller` should serve a single loop; the stateless
/// [`control_step`] is for batch or one-off use.
#[derive(Debug, Clone)]
pub struct Controller {
    config: ControllerConfig,
    solver: TensionSolver,
}

impl Controller {
    pub fn new(model: &RobotModel, config: ControllerConfig) -> Result<Controller, ControllerError> {
        config.validate(model)?;
        Ok(Controller { config, solver: TensionSolver::new() })
    }

    pub fn config(&self) -> &ControllerConfig {
        &self.config
    }

    pub fn step(
        &mut self,
        model: &RobotModel,
        state: &MeasuredState,
        reference: &Reference,
    ) -> Result<ControlStep, ControllerError> {
        let n = model.n_joints();
        let r = model.n_routes();
        if state.q.len() != n {
            return Err(ControllerError::DimensionMismatch { what: "q", expected: n, got: state.q.len() });
        }
        if state.qdot.len() != n {
            return Err(ControllerError::DimensionMismatch { what: "qdot", expected: n, got: state.qdot.len() });
        }
        if state.ldot.len() != r {
            return Err(ControllerError::DimensionMismatch { what: "ldot", expected: r, got: state.ldot.len() });
        }
        if reference.ldot_ref.len() != r {
            return Err(ControllerError::DimensionMismatch { what: "ldot_ref", expected: r, got: reference.ldot_ref.len() });
        }

        let tau_ref = computed_torque(model, &state.q, reference, &self.config.kp)?;
        let g = kinematics::muscle_jacobian(model, &state.q)?;
        let problem = TensionProblem {
            g,
            tau_ref: tau_ref.clone(),
            f_min: self.config.f_min.clone(),
            f_max: self.config.f_max.clone(),
            lambda: self.config.lambda.clone(),
        };
        let qp = self.solver.solve(&problem)?;
        let f_final = tension_command(
            &qp.f,
            &self.config.kv,
            &reference.ldot_ref,
            &state.ldot,
            &self.config.f_max,
        )?;
        Ok(ControlStep {
            f_final,
            f_ref: qp.f,
            tau_ref,
            torque_residual: qp.torque_residual,
            kkt_residual: qp.kkt_residual,
            qp_iterations: qp.iterations,
            qp_status: qp.status,
        })
    }
}

/// Stateless one-shot control tick (cold QP start).
pub fn control_step(
    model: &RobotModel,
    state: &MeasuredState,
    reference: &Reference,
    config: &ControllerConfig,
) -> Result<ControlStep, ControllerError> {
    Controller::new(model, config.clone())?.step(model, state, reference)
}
