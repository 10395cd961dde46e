//! Time-stepping engine: transmission model, contact penalty, event
//! application, and the scenario run loop.
//!
//! The integrated state is `(q, qdot, l_motor)`. In `elastic` mode each
//! wire is a serial stiffness between the geometric length `l(q)` and the
//! motor-side length `l_motor`; the motor tracks commanded tension with a
//! first-order lag. In `ideal_tension` mode commanded tensions act
//! directly and the motor lengths shadow the geometric ones.

use nalgebra::{DVector, Vector3};

use crate::controller::{Controller, MeasuredState};
use crate::dynamics::{forward_dynamics, inertia_matrix, DynamicsError, ExternalForce};
use crate::kinematics::{
    forward_kinematics_unchecked, muscle_jacobian, muscle_jacobian_with_fk, point_jacobian,
    wire_lengths, wire_lengths_with_fk,
};
use crate::model::{RobotModel, ValidationError};
use crate::sim::reference::ReferenceTrajectory;
use crate::sim::scenario::{
    ActuationMode, ContactPlane, ControllerChoice, EventKind, Integrator, ScenarioSpec,
};
use crate::sim::trace::{Trace, TraceRow};
use crate::sim::SimError;

/// First-order time constant of the motor tension loop, in seconds.
pub const MOTOR_TIME_CONSTANT: f64 = 0.002;
/// Damping ratio applied to each wire's stretch rate.
pub const WIRE_DAMPING_RATIO: f64 = 0.1;

/// Magnitude bound beyond which the integration is declared divergent.
const BLOWUP_LIMIT: f64 = 1.0e9;

/// Integrated simulation state plus the most recent derived quantities.
#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    pub t: f64,
    pub q: DVector<f64>,
    pub qdot: DVector<f64>,
    /// Motor-side wire lengths (shadow the geometric lengths in
    /// ideal-tension mode).
    pub l_motor: DVector<f64>,
    /// Motor-side length rates at the last derivative evaluation.
    pub ldot_motor: DVector<f64>,
    /// Tensions applied to the structure at the last evaluation.
    pub f_applied: DVector<f64>,
}

/// Per-wire series stiffness and damping, fixed at scenario start.
#[derive(Debug, Clone)]
pub struct WireTransmission {
    /// Stiffness of each wire, N/m (axial stiffness over rest length).
    pub k: Vec<f64>,
    /// Viscous damping on the stretch rate, N·s/m.
    pub c: Vec<f64>,
}

impl WireTransmission {
    /// Builds the transmission for `model` with rest lengths and reflected
    /// masses captured at `q0`. `ea_scale` multiplies every stiffness.
    pub fn from_model(model: &RobotModel, q0: &[f64], ea_scale: f64) -> Result<WireTransmission, SimError> {
        let r = model.n_routes();
        let lengths = wire_lengths(model, q0)?;
        let g = muscle_jacobian(model, q0)?;
        let m = inertia_matrix(model, q0)?;
        let chol = m
            .cholesky()
            .ok_or(DynamicsError::SingularInertia { cond: f64::INFINITY })?;
        let mut k = Vec::with_capacity(r);
        let mut c = Vec::with_capacity(r);
        for (i, route) in model.routes.iter().enumerate() {
            let l0 = lengths[i].max(1.0e-6);
            let ki = ea_scale * route.elasticity / l0;
            // The reflected mass seen by wire i sets the damping scale;
            // routes with no leverage at q0 fall back to 1 kg.
            let gi = g.row(i).transpose();
            let mobility = gi.dot(&chol.solve(&gi));
            let m_eff = if mobility > 1.0e-12 { (1.0 / mobility).clamp(1.0e-3, 1.0e4) } else { 1.0 };
            k.push(ki);
            c.push(2.0 * WIRE_DAMPING_RATIO * (ki * m_eff).sqrt());
        }
        Ok(WireTransmission { k, c })
    }

    /// Tension transmitted to the structure by wire `i`. A slack wire
    /// (geometric length shorter than the motor-side length) carries
    /// nothing, and the viscoelastic force never pulls negative.
    pub fn applied_tension(&self, i: usize, stretch: f64, stretch_rate: f64) -> f64 {
        if stretch < 0.0 {
            return 0.0;
        }
        (self.k[i] * stretch + self.c[i] * stretch_rate).max(0.0)
    }

    /// Rate of the motor-side length for wire `i`: the motor reels wire in
    /// or out so the spring force converges on `f_cmd` with the motor time
    /// constant.
    pub fn motor_rate(&self, i: usize, f_cmd: f64, f_raw: f64, ldot_geom: f64) -> f64 {
        ldot_geom - (f_cmd - f_raw) / (self.k[i] * MOTOR_TIME_CONSTANT)
    }
}

/// Penalty force a contact plane exerts on a point; zero when the point is
/// on the free side. The force acts along the plane normal and never
/// sticks (no adhesion, no friction).
pub fn apply_plane_contact(plane: &ContactPlane, pos: &Vector3<f64>, vel: &Vector3<f64>) -> Vector3<f64> {
    let depth = plane.offset - plane.normal.dot(pos);
    if depth <= 0.0 {
        return Vector3::zeros();
    }
    let rate = -plane.normal.dot(vel);
    let magnitude = (plane.stiffness * depth + plane.damping * rate).max(0.0);
    plane.normal.into_inner() * magnitude
}

/// Number of integration steps a scenario will take.
pub fn total_steps_for(spec: &ScenarioSpec) -> usize {
    (spec.duration / spec.dt).round().max(1.0) as usize
}

struct Derivative {
    qdd: DVector<f64>,
    ldot_motor: DVector<f64>,
    f_applied: DVector<f64>,
}

/// Evaluates the state derivative plus the tensions actually applied.
#[allow(clippy::too_many_arguments)]
fn eval_derivative(
    model: &RobotModel,
    mode: ActuationMode,
    trans: &WireTransmission,
    q: &DVector<f64>,
    qdot: &DVector<f64>,
    l_motor: &DVector<f64>,
    f_cmd: &DVector<f64>,
    plane: Option<&ContactPlane>,
    ee: (usize, Vector3<f64>),
) -> Result<Derivative, SimError> {
    let n = model.n_joints();
    let r = model.n_routes();
    let qs: Vec<f64> = q.iter().copied().collect();
    let fk = forward_kinematics_unchecked(model, &qs)?;
    let g = muscle_jacobian_with_fk(model, &fk)?;
    let ldot_geom = &g * qdot;

    let mut f_applied = DVector::zeros(r);
    let mut ldot_motor = DVector::zeros(r);
    match mode {
        ActuationMode::IdealTension => {
            for i in 0..r {
                f_applied[i] = f_cmd[i].max(0.0);
                ldot_motor[i] = ldot_geom[i];
            }
        }
        ActuationMode::Elastic => {
            let l_geom = wire_lengths_with_fk(model, &qs, &fk)?;
            for i in 0..r {
                let stretch = l_geom[i] - l_motor[i];
                let f_raw = trans.k[i] * stretch;
                let lm_dot = trans.motor_rate(i, f_cmd[i], f_raw, ldot_geom[i]);
                ldot_motor[i] = lm_dot;
                f_applied[i] = trans.applied_tension(i, stretch, ldot_geom[i] - lm_dot);
            }
        }
    }

    let tau = if r > 0 { -(g.transpose() * &f_applied) } else { DVector::zeros(n) };

    let mut wrenches = Vec::new();
    if let Some(plane) = plane {
        let pos = fk[ee.0].transform_point(&ee.1.into()).coords;
        let jac = point_jacobian(model, &fk, ee.0, &ee.1)?;
        let vel = &jac * qdot;
        let force = apply_plane_contact(plane, &pos, &Vector3::new(vel[0], vel[1], vel[2]));
        if force != Vector3::zeros() {
            wrenches.push(ExternalForce { link: ee.0, point: ee.1, force });
        }
    }

    let qd_vec: Vec<f64> = qdot.iter().copied().collect();
    let qdd = forward_dynamics(model, &qs, &qd_vec, &tau, &wrenches)?;
    Ok(Derivative { qdd, ldot_motor, f_applied })
}

/// Advances the state by one step of the chosen integrator. The stored
/// `ldot_motor`/`f_applied` are the values at the step start.
#[allow(clippy::too_many_arguments)]
fn step_once(
    integrator: Integrator,
    model: &RobotModel,
    mode: ActuationMode,
    trans: &WireTransmission,
    state: &mut SimState,
    f_cmd: &DVector<f64>,
    plane: Option<&ContactPlane>,
    ee: (usize, Vector3<f64>),
    dt: f64,
) -> Result<(), SimError> {
    match integrator {
        Integrator::SemiImplicitEuler => {
            let d = eval_derivative(model, mode, trans, &state.q, &state.qdot, &state.l_motor, f_cmd, plane, ee)?;
            state.qdot += dt * &d.qdd;
            state.q += dt * &state.qdot;
            state.l_motor += dt * &d.ldot_motor;
            state.ldot_motor = d.ldot_motor;
            state.f_applied = d.f_applied;
        }
        Integrator::Rk4 => {
            // Classic tableau on the extended first-order system
            // (q, qdot, l_motor); the q-derivative at each stage is that
            // stage's qdot value.
            let (q0, qd0, lm0) = (state.q.clone(), state.qdot.clone(), state.l_motor.clone());
            let k1 = eval_derivative(model, mode, trans, &q0, &qd0, &lm0, f_cmd, plane, ee)?;
            let qd_k2 = &qd0 + 0.5 * dt * &k1.qdd;
            let k2 = eval_derivative(
                model, mode, trans,
                &(&q0 + 0.5 * dt * &qd0),
                &qd_k2,
                &(&lm0 + 0.5 * dt * &k1.ldot_motor),
                f_cmd, plane, ee,
            )?;
            let qd_k3 = &qd0 + 0.5 * dt * &k2.qdd;
            let k3 = eval_derivative(
                model, mode, trans,
                &(&q0 + 0.5 * dt * &qd_k2),
                &qd_k3,
                &(&lm0 + 0.5 * dt * &k2.ldot_motor),
                f_cmd, plane, ee,
            )?;
            let qd_k4 = &qd0 + dt * &k3.qdd;
            let k4 = eval_derivative(
                model, mode, trans,
                &(&q0 + dt * &qd_k3),
                &qd_k4,
                &(&lm0 + dt * &k3.ldot_motor),
                f_cmd, plane, ee,
            )?;
            state.q = &q0 + (dt / 6.0) * (&qd0 + 2.0 * qd_k2 + 2.0 * qd_k3 + qd_k4);
            state.qdot = &qd0 + (dt / 6.0) * (&k1.qdd + 2.0 * &k2.qdd + 2.0 * &k3.qdd + &k4.qdd);
            state.l_motor = &lm0
                + (dt / 6.0)
                    * (&k1.ldot_motor + 2.0 * &k2.ldot_motor + 2.0 * &k3.ldot_motor + &k4.ldot_motor);
            state.ldot_motor = k1.ldot_motor;
            state.f_applied = k1.f_applied;
        }
    }
    state.t += dt;
    Ok(())
}

fn state_is_finite(state: &SimState) -> bool {
    let ok = |v: &DVector<f64>| v.iter().all(|x| x.is_finite() && x.abs() <= BLOWUP_LIMIT);
    ok(&state.q) && ok(&state.qdot) && ok(&state.l_motor)
}

/// Result of a completed scenario run.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub trace: Trace,
    pub final_state: SimState,
}

#[derive(Clone, Copy)]
struct Diag {
    kkt: f64,
    iters: usize,
    tau_res: f64,
}

/// Runs a scenario to completion, producing the sampled trace.
///
/// Scheduling is integer-based so reruns are bit-identical: step `s` sits
/// at `t = s·dt`, the controller refreshes every `round(1/(rate·dt))`
/// steps, and an event fires on the step whose midpoint covers its time.
/// Attached payloads become part of the working model, which both the
/// plant and the controller read (grasped cargo is known cargo).
pub fn run_scenario(spec: &ScenarioSpec) -> Result<RunOutput, SimError> {
    let n = spec.model.n_joints();
    let r = spec.model.n_routes();
    let dt = spec.dt;
    let ee = spec.end_effector;

    let reference = ReferenceTrajectory::generate(
        &spec.model,
        &spec.reference,
        ee,
        spec.duration,
        spec.control_rate,
    )?;

    let mut working = spec.model.clone();
    let mut attachments: Vec<(usize, f64, Vector3<f64>)> = Vec::new();
    let trans = WireTransmission::from_model(&spec.model, &spec.q0, spec.ea_scale)?;
    let mut controller = match &spec.controller {
        ControllerChoice::ComputedTorque(cfg) => Some(Controller::new(&spec.model, cfg.clone())?),
        _ => None,
    };
    let mut f_cmd = match &spec.controller {
        ControllerChoice::Constant(f) => DVector::from_row_slice(f),
        _ => DVector::zeros(r),
    };

    let total_steps = total_steps_for(spec);
    let ctrl_every = (1.0 / (spec.control_rate * dt)).round().max(1.0) as usize;
    let sample_every = (1.0 / (spec.sample_rate * dt)).round().max(1.0) as usize;

    let l0 = wire_lengths(&spec.model, &spec.q0)?;
    let g0 = muscle_jacobian(&spec.model, &spec.q0)?;
    let qd0 = DVector::from_row_slice(&spec.qd0);
    let mut state = SimState {
        t: 0.0,
        q: DVector::from_row_slice(&spec.q0),
        qdot: qd0.clone(),
        l_motor: l0,
        ldot_motor: &g0 * &qd0,
        f_applied: DVector::zeros(r),
    };

    let mut plane: Option<ContactPlane> = None;
    let mut next_event = 0usize;
    let mut events_fired = 0usize;
    let mut diag = Diag { kkt: 0.0, iters: 0, tau_res: 0.0 };
    let mut trace = Trace::new(n, r);

    for s in 0..=total_steps {
        let t = s as f64 * dt;
        state.t = t;

        while next_event < spec.events.len() && spec.events[next_event].time <= t + 0.5 * dt {
            match &spec.events[next_event].kind {
                EventKind::AttachMass { link, kg, point } => {
                    working = working.with_point_mass(*link, *kg, *point)?;
                    attachments.push((*link, *kg, *point));
                }
                EventKind::DetachMass => {
                    attachments.pop().ok_or_else(|| {
                        ValidationError::new("detach_mass", "no attached mass to release")
                    })?;
                    // Rebuild from the pristine base so attach/detach
                    // round-trips are numerically exact.
                    working = spec.model.clone();
                    for (link, kg, point) in &attachments {
                        working = working.with_point_mass(*link, *kg, *point)?;
                    }
                }
                EventKind::Impulse { link, point, impulse } => {
                    let qs: Vec<f64> = state.q.iter().copied().collect();
                    let fk = forward_kinematics_unchecked(&working, &qs)?;
                    let jac = point_jacobian(&working, &fk, *link, point)?;
                    let m = inertia_matrix(&working, &qs)?;
                    let chol = m
                        .cholesky()
                        .ok_or(DynamicsError::SingularInertia { cond: f64::INFINITY })?;
                    state.qdot += chol.solve(&(jac.transpose() * impulse));
                }
                EventKind::PlaneContact(p) => {
                    plane = Some(*p);
                }
            }
            events_fired += 1;
            next_event += 1;
        }

        if s % ctrl_every == 0 {
            if let ControllerChoice::ComputedTorque(_) = &spec.controller {
                let ctrl = controller.as_mut().expect("controller initialized above");
                let qs: Vec<f64> = state.q.iter().copied().collect();
                let ldot = match spec.mode {
                    ActuationMode::Elastic => state.ldot_motor.iter().copied().collect(),
                    ActuationMode::IdealTension => {
                        let g = muscle_jacobian(&working, &qs)?;
                        (&g * &state.qdot).iter().copied().collect()
                    }
                };
                let measured = MeasuredState {
                    q: qs,
                    qdot: state.qdot.iter().copied().collect(),
                    ldot,
                };
                let step = ctrl.step(&working, &measured, reference.at_tick(s / ctrl_every))?;
                diag = Diag {
                    kkt: step.kkt_residual,
                    iters: step.qp_iterations,
                    tau_res: step.torque_residual.amax(),
                };
                f_cmd = step.f_final;
            }
        }

        if s % sample_every == 0 || s == total_steps {
            // Refresh applied tensions for the current state so the row
            // reflects this instant, not the previous step's start.
            let d = eval_derivative(&working, spec.mode, &trans, &state.q, &state.qdot, &state.l_motor, &f_cmd, plane.as_ref(), ee)?;
            state.ldot_motor = d.ldot_motor;
            state.f_applied = d.f_applied;
            trace.rows.push(sample_row(&working, &state, &reference, s / ctrl_every, ee, events_fired, diag)?);
        }

        if s == total_steps {
            break;
        }

        step_once(spec.integrator, &working, spec.mode, &trans, &mut state, &f_cmd, plane.as_ref(), ee, dt)?;

        if !state_is_finite(&state) {
            return Err(SimError::NumericalBlowup { t: state.t, trace: Box::new(trace) });
        }
    }

    Ok(RunOutput { trace, final_state: state })
}

fn sample_row(
    model: &RobotModel,
    state: &SimState,
    reference: &ReferenceTrajectory,
    tick: usize,
    ee: (usize, Vector3<f64>),
    events: usize,
    diag: Diag,
) -> Result<TraceRow, SimError> {
    let qs: Vec<f64> = state.q.iter().copied().collect();
    let fk = forward_kinematics_unchecked(model, &qs)?;
    let pos = fk[ee.0].transform_point(&ee.1.into()).coords;
    let jac = point_jacobian(model, &fk, ee.0, &ee.1)?;
    let vel = &jac * &state.qdot;
    Ok(TraceRow {
        t: state.t,
        q: qs,
        qdot: state.qdot.iter().copied().collect(),
        f: state.f_applied.iter().copied().collect(),
        ee_pos: [pos[0], pos[1], pos[2]],
        ee_vel: [vel[0], vel[1], vel[2]],
        q_ref: reference.at_tick(tick).q_ref.clone(),
        ref_pos: reference.task_position(tick),
        qp_kkt: diag.kkt,
        qp_iters: diag.iters,
        tau_res: diag.tau_res,
        events,
    })
}

#[cfg(test)]
mod tests {
    use approx::assert_relative_eq;

    use super::*;
    use crate::dynamics::total_energy;
    use crate::fixtures;
    use crate::model::load_model;
    use crate::sim::scenario::{Event, ReferenceSpec};

    fn pendulum_spec() -> ScenarioSpec {
        ScenarioSpec {
            name: "test".into(),
            model: load_model(fixtures::PENDULUM).unwrap(),
            mode: ActuationMode::IdealTension,
            integrator: Integrator::SemiImplicitEuler,
            duration: 0.5,
            dt: 1e-3,
            control_rate: 500.0,
            sample_rate: 200.0,
            ea_scale: 1.0,
            controller: ControllerChoice::None,
            end_effector: (1, Vector3::new(0.0, 0.0, -1.0)),
            reference: ReferenceSpec::Hold { q: vec![0.0] },
            events: vec![],
            q0: vec![0.0],
            qd0: vec![0.0],
        }
    }

    #[test]
    fn transmission_tension_facts() {
        let model = load_model(fixtures::PENDULUM).unwrap();
        let trans = WireTransmission::from_model(&model, &[0.0], 1.0).unwrap();
        // Stiffness is axial stiffness over the rest length 0.3 m.
        assert_relative_eq!(trans.k[0], 10_000.0 / 0.3, epsilon = 1e-9);
        assert_eq!(trans.k.len(), 2);
        assert!(trans.c[0] > 0.0);

        // Taut wire at zero rate: plain spring force.
        assert_relative_eq!(trans.applied_tension(0, 3e-4, 0.0), 10.0, epsilon = 1e-9);
        // No stretch, no force.
        assert_eq!(trans.applied_tension(0, 0.0, 0.0), 0.0);
        // Slack transmits nothing regardless of rate.
        assert_eq!(trans.applied_tension(0, -1e-3, 5.0), 0.0);
        // Damping never pulls the force negative.
        assert_eq!(trans.applied_tension(0, 1e-6, -10.0), 0.0);
    }

    #[test]
    fn motor_reels_toward_commanded_tension() {
        let model = load_model(fixtures::PENDULUM).unwrap();
        let trans = WireTransmission::from_model(&model, &[0.0], 1.0).unwrap();
        // Satisfied command: the motor just follows the geometry.
        assert_eq!(trans.motor_rate(0, 10.0, 10.0, 0.25), 0.25);
        // Under-tensioned wire: the motor shortens l_motor to stretch it,
        // and the implied force rate matches the motor time constant.
        let rate = trans.motor_rate(0, 10.0, 4.0, 0.0);
        assert!(rate < 0.0);
        let f_dot = trans.k[0] * (0.0 - rate);
        assert_relative_eq!(f_dot, (10.0 - 4.0) / MOTOR_TIME_CONSTANT, epsilon = 1e-9);
    }

    #[test]
    fn plane_contact_penalty_facts() {
        let plane = ContactPlane {
            normal: nalgebra::Unit::new_normalize(Vector3::z()),
            offset: 0.0,
            stiffness: 1e5,
            damping: 200.0,
        };
        // Free side: no force.
        let f = apply_plane_contact(&plane, &Vector3::new(0.0, 0.0, 0.01), &Vector3::zeros());
        assert_eq!(f, Vector3::zeros());
        // One millimetre of penetration at rest: 100 N along the normal.
        let f = apply_plane_contact(&plane, &Vector3::new(0.0, 0.0, -0.001), &Vector3::zeros());
        assert_relative_eq!(f.z, 100.0, epsilon = 1e-12);
        assert_eq!((f.x, f.y), (0.0, 0.0));
        // Rapid separation: damping may cancel the push but never sucks.
        let f = apply_plane_contact(&plane, &Vector3::new(0.0, 0.0, -0.001), &Vector3::new(0.0, 0.0, 10.0));
        assert_eq!(f, Vector3::zeros());
    }

    #[test]
    fn hanging_pendulum_stays_put() {
        let out = run_scenario(&pendulum_spec()).unwrap();
        assert_eq!(out.final_state.q[0], 0.0);
        assert_eq!(out.final_state.qdot[0], 0.0);
        assert_eq!(out.trace.rows.len(), 101, "duration·sample_rate + 1 rows");
    }

    #[test]
    fn passive_swing_conserves_energy_under_rk4() {
        let mut spec = pendulum_spec();
        spec.integrator = Integrator::Rk4;
        spec.duration = 2.0;
        spec.q0 = vec![1.0];
        spec.reference = ReferenceSpec::Hold { q: vec![1.0] };
        let out = run_scenario(&spec).unwrap();
        let qf: Vec<f64> = out.final_state.q.iter().copied().collect();
        let qdf: Vec<f64> = out.final_state.qdot.iter().copied().collect();
        let e0 = total_energy(&spec.model, &spec.q0, &[0.0]).unwrap();
        let ef = total_energy(&spec.model, &qf, &qdf).unwrap();
        // Swing amplitude 1 rad: energy relative to the bottom is mgl(1−cos 1).
        let scale = 9.81 * (1.0 - 1.0_f64.cos());
        let drift = (ef - e0) / scale;
        assert!(drift.abs() < 1e-8, "relative energy drift {drift}");
    }

    #[test]
    fn antagonistic_pretension_changes_nothing() {
        let mut passive = pendulum_spec();
        passive.q0 = vec![0.5];
        passive.duration = 0.6;
        let mut pulled = passive.clone();
        // Equal pull on the +r and −r wrap routes: zero net joint torque.
        pulled.controller = ControllerChoice::Constant(vec![30.0, 30.0]);
        let a = run_scenario(&passive).unwrap();
        let b = run_scenario(&pulled).unwrap();
        assert_eq!(a.final_state.q, b.final_state.q);
        assert_eq!(a.final_state.qdot, b.final_state.qdot);
        // The trace still reports the tensions that were applied.
        assert_eq!(b.trace.rows[0].f, vec![30.0, 30.0]);
    }

    #[test]
    fn impulse_event_matches_analytic_velocity_jump() {
        let mut spec = pendulum_spec();
        // Unit reflected inertia at the tip: Δq̇ = J·j = (−1)·2.
        spec.events = vec![Event {
            time: 0.0,
            kind: EventKind::Impulse {
                link: 1,
                point: Vector3::new(0.0, 0.0, -1.0),
                impulse: Vector3::new(2.0, 0.0, 0.0),
            },
        }];
        spec.duration = 0.01;
        let out = run_scenario(&spec).unwrap();
        let first = &out.trace.rows[0];
        assert_eq!(first.events, 1, "impulse fires before the first sample");
        assert_relative_eq!(first.qdot[0], -2.0, epsilon = 1e-12);
    }

    #[test]
    fn attached_mass_alters_the_plant() {
        let mut spec = pendulum_spec();
        spec.q0 = vec![0.4];
        spec.reference = ReferenceSpec::Hold { q: vec![0.4] };
        let baseline = run_scenario(&spec).unwrap();
        spec.events = vec![Event {
            time: 0.25,
            kind: EventKind::AttachMass { link: 1, kg: 1.0, point: Vector3::new(0.0, 0.0, -1.0) },
        }];
        let loaded = run_scenario(&spec).unwrap();
        let counts: Vec<usize> = loaded.trace.rows.iter().map(|r| r.events).collect();
        assert!(counts.iter().any(|&c| c == 0) && *counts.last().unwrap() == 1);
        let flip = loaded.trace.rows.iter().position(|r| r.events == 1).unwrap();
        assert!(loaded.trace.rows[flip].t >= 0.25 - 1e-9);
        // A point mass added at the bob radius leaves the passive swing
        // unchanged (g/l is mass-independent), so the path comparison is
        // void here; the tension response test below probes the swap.
        assert_eq!(baseline.trace.rows.len(), loaded.trace.rows.len());
    }

    #[test]
    fn attach_changes_response_to_tension() {
        // Pull one wire with constant tension; the velocity response after
        // the attach must shrink by the added inertia.
        let mut spec = pendulum_spec();
        spec.controller = ControllerChoice::Constant(vec![40.0, 0.0]);
        spec.duration = 0.2;
        let light = run_scenario(&spec).unwrap();
        spec.events = vec![Event {
            time: 0.0,
            kind: EventKind::AttachMass { link: 1, kg: 3.0, point: Vector3::new(0.0, 0.0, -1.0) },
        }];
        let heavy = run_scenario(&spec).unwrap();
        let v_light = light.final_state.qdot[0].abs();
        let v_heavy = heavy.final_state.qdot[0].abs();
        assert!(v_heavy < v_light, "added inertia must slow the response: {v_heavy} vs {v_light}");
    }

    #[test]
    fn detach_restores_the_original_model_exactly() {
        let mut spec = pendulum_spec();
        spec.q0 = vec![0.3];
        spec.reference = ReferenceSpec::Hold { q: vec![0.3] };
        spec.duration = 0.4;
        let baseline = run_scenario(&spec).unwrap();
        // Attach and immediately detach: by the first integration step the
        // working model is back to the base model.
        spec.events = vec![
            Event {
                time: 0.0,
                kind: EventKind::AttachMass { link: 1, kg: 2.0, point: Vector3::zeros() },
            },
            Event { time: 0.0, kind: EventKind::DetachMass },
        ];
        let cycled = run_scenario(&spec).unwrap();
        assert_eq!(baseline.final_state.q, cycled.final_state.q);
        assert_eq!(cycled.trace.rows[0].events, 2);
    }

    #[test]
    fn reruns_are_bit_identical() {
        let mut spec = pendulum_spec();
        spec.mode = ActuationMode::Elastic;
        spec.dt = 1e-4;
        spec.duration = 0.2;
        spec.q0 = vec![0.1];
        spec.reference = ReferenceSpec::Hold { q: vec![0.3] };
        spec.controller = ControllerChoice::ComputedTorque(
            crate::controller::ControllerConfig::from_model(&spec.model),
        );
        spec.events = vec![Event {
            time: 0.1,
            kind: EventKind::Impulse {
                link: 1,
                point: Vector3::new(0.0, 0.0, -1.0),
                impulse: Vector3::new(0.5, 0.0, 0.0),
            },
        }];
        let a = run_scenario(&spec).unwrap().trace.to_csv();
        let b = run_scenario(&spec).unwrap().trace.to_csv();
        assert_eq!(a, b);
        assert!(a.lines().count() > 10);
    }

    #[test]
    fn wire_velocity_feedback_damps_ringing() {
        // Computed torque carries no q̇ term; all damping enters through
        // the wire-velocity tension feedback. Kick the held pendulum and
        // compare the residual ring against a run with that gain zeroed —
        // a sign error here shows up as excitation instead of decay.
        let ring = |kv_scale: f64| {
            let mut spec = pendulum_spec();
            spec.duration = 2.0;
            spec.q0 = vec![0.3];
            spec.qd0 = vec![1.0];
            spec.reference = ReferenceSpec::Hold { q: vec![0.3] };
            let mut cfg = crate::controller::ControllerConfig::from_model(&spec.model);
            cfg.kv *= kv_scale;
            spec.controller = ControllerChoice::ComputedTorque(cfg);
            let trace = run_scenario(&spec).unwrap().trace;
            trace
                .rows
                .iter()
                .filter(|r| r.t > 1.5)
                .map(|r| r.qdot[0].abs())
                .fold(0.0_f64, f64::max)
        };
        let undamped = ring(0.0);
        let damped = ring(25.0);
        assert!(undamped > 0.5, "kv = 0 should keep ringing, got {undamped}");
        assert!(damped < 0.2, "kv should damp the ring, got {damped}");
        assert!(damped * 5.0 < undamped);
    }

    #[test]
    fn divergence_is_reported_with_partial_trace() {
        let mut spec = pendulum_spec();
        spec.controller = ControllerChoice::Constant(vec![1e12, 0.0]);
        spec.duration = 0.2;
        match run_scenario(&spec) {
            Err(SimError::NumericalBlowup { t, trace }) => {
                assert!(t > 0.0 && t < 0.2);
                assert!(!trace.rows.is_empty());
            }
            other => panic!("expected blowup, got {other:?}"),
        }
    }

    #[test]
    fn contact_plane_bounds_penetration() {
        // Swing the bob down onto a plane just under its low point; the
        // penalty must arrest it with millimetre-scale penetration.
        let mut spec = pendulum_spec();
        spec.q0 = vec![0.6];
        spec.reference = ReferenceSpec::Hold { q: vec![0.6] };
        spec.duration = 1.0;
        spec.events = vec![Event {
            time: 0.0,
            kind: EventKind::PlaneContact(ContactPlane {
                normal: nalgebra::Unit::new_normalize(Vector3::z()),
                offset: -0.98,
                stiffness: 1e5,
                damping: 300.0,
            }),
        }];
        let out = run_scenario(&spec).unwrap();
        let min_z = out.trace.rows.iter().map(|r| r.ee_pos[2]).fold(f64::INFINITY, f64::min);
        assert!(min_z < -0.9799, "bob never reached the plane: {min_z}");
        assert!(min_z > -0.99, "penetration too deep: {min_z}");
    }
}
