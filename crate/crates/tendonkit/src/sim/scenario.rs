//! Scenario files: what to simulate, with which controller, and what
//! happens along the way.
//!
//! Scenarios use the same structured-text dialect as model files. A
//! minimal file declares `[scenario]` (model path, duration), an
//! `[end_effector]` point, and a `[reference]`; optional sections add a
//! controller choice, an initial state, and timed `[event.k]` entries.

use std::path::Path;

use nalgebra::{Unit, Vector3};

use crate::controller::ControllerConfig;
use crate::model::{
    check_keys, load_model_file, require, want_number, want_numbers, want_text, want_vec3,
    RobotModel, ValidationError,
};
use crate::sim::SimError;
use crate::textfmt::{Document, Section};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ActuationMode {
    /// Commanded tensions act on the joints directly.
    IdealTension,
    /// Tensions pass through the elastic wire transmission.
    Elastic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Integrator {
    /// Robust default, first order; velocities update before positions.
    SemiImplicitEuler,
    /// Classic fourth order; used for energy audits.
    Rk4,
}

/// Controller wiring for a scenario.
#[derive(Debug, Clone)]
pub enum ControllerChoice {
    /// No actuation at all (passive plant).
    None,
    /// Constant commanded tensions, no feedback.
    Constant(Vec<f64>),
    /// The computed-torque / tension-QP / wire-feedback pipeline.
    ComputedTorque(ControllerConfig),
}

/// Penalty contact plane `{x : n·x = offset}` with `n` pointing into free
/// space. Activated by a `plane_contact` event and persistent thereafter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContactPlane {
    pub normal: Unit<Vector3<f64>>,
    pub offset: f64,
    pub stiffness: f64,
    pub damping: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum EventKind {
    /// Rigidly attach a point mass to `link` at `point` (link frame).
    AttachMass { link: usize, kg: f64, point: Vector3<f64> },
    /// Release the currently attached mass.
    DetachMass,
    /// Instantaneous momentum transfer at a point: `Δq̇ = M⁻¹Jᵀ·j`.
    Impulse { link: usize, point: Vector3<f64>, impulse: Vector3<f64> },
    /// Activate a contact plane acting on the end-effector point.
    PlaneContact(ContactPlane),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Event {
    pub time: f64,
    pub kind: EventKind,
}

/// Reference trajectory declaration (realized by
/// [`crate::sim::ReferenceTrajectory`]).
#[derive(Debug, Clone, PartialEq)]
pub enum ReferenceSpec {
    /// Hold a posture.
    Hold { q: Vec<f64> },
    /// Joint-space waypoints with smooth (quintic) interpolation; held
    /// flat before the first and after the last knot.
    JointKnots { times: Vec<f64>, knots: Vec<Vec<f64>> },
    /// Task-space circle traced by the end effector, realized by
    /// differential inverse kinematics from `q0`. When `center` is omitted
    /// the circle starts exactly at the end effector's initial position.
    TaskCircle {
        q0: Vec<f64>,
        center: Option<Vector3<f64>>,
        normal: Vector3<f64>,
        diameter: f64,
        period: f64,
        laps: f64,
        /// Seconds over which the angular speed ramps from zero at the
        /// start; the final lap decelerates over a matching ramp so the
        /// path is C² end to end.
        lead_in: f64,
    },
}

impl ReferenceSpec {
    /// The posture the reference starts from (default initial state).
    pub fn start_q(&self) -> &[f64] {
        match self {
            ReferenceSpec::Hold { q } => q,
            ReferenceSpec::JointKnots { knots, .. } => &knots[0],
            ReferenceSpec::TaskCircle { q0, .. } => q0,
        }
    }
}

/// A fully resolved, validated scenario.
#[derive(Debug, Clone)]
pub struct ScenarioSpec {
    pub name: String,
    pub model: RobotModel,
    pub mode: ActuationMode,
    pub integrator: Integrator,
    pub duration: f64,
    pub dt: f64,
    pub control_rate: f64,
    pub sample_rate: f64,
    /// Multiplier on every route's axial stiffness (elastic-mode sweeps).
    pub ea_scale: f64,
    pub controller: ControllerChoice,
    /// Link index and link-frame point treated as the end effector.
    pub end_effector: (usize, Vector3<f64>),
    pub reference: ReferenceSpec,
    /// Sorted by time (stable, so file order breaks ties).
    pub events: Vec<Event>,
    pub q0: Vec<f64>,
    pub qd0: Vec<f64>,
}

/// Reads a scenario file, applying `key=value` overrides to the document
/// before interpretation. The model path inside is resolved relative to
/// the scenario file's directory.
pub fn load_scenario(path: &Path, overrides: &[(String, String)]) -> Result<ScenarioSpec, SimError> {
    let text = std::fs::read_to_string(path).map_err(|e| SimError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    let mut doc = Document::parse(&text)?;
    for (key, value) in overrides {
        doc.set(key, value)?;
    }
    let sec = doc
        .section("scenario")
        .ok_or_else(|| ValidationError::new("scenario", "missing [scenario] section"))?;
    let model_rel = want_text(sec, "model", require(sec, "model")?)?;
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    let model_path = dir.join(model_rel);
    let model = load_model_file(&model_path).map_err(|e| match e {
        crate::model::ModelError::Io(err) => SimError::Io {
            path: model_path.display().to_string(),
            message: err.to_string(),
        },
        other => SimError::Model(other),
    })?;
    interpret_scenario(&doc, model)
}

/// Builds a scenario from an already-parsed document and an
/// already-loaded model (the document's `model` key is ignored).
pub fn interpret_scenario(doc: &Document, model: RobotModel) -> Result<ScenarioSpec, SimError> {
    let sec = doc
        .section("scenario")
        .ok_or_else(|| ValidationError::new("scenario", "missing [scenario] section"))?;
    check_keys(
        sec,
        &[
            "name", "model", "duration", "dt", "mode", "integrator", "control_rate",
            "sample_rate", "ea_scale",
        ],
    )?;

    let name = match sec.get("name") {
        Some(v) => want_text(sec, "name", v)?.to_string(),
        None => "scenario".to_string(),
    };
    let mode = match sec.get("mode") {
        Some(v) => match want_text(sec, "mode", v)? {
            "ideal_tension" => ActuationMode::IdealTension,
            "elastic" => ActuationMode::Elastic,
            other => {
                return Err(ValidationError::new(
                    "scenario.mode",
                    format!("unknown mode `{other}` (expected ideal_tension or elastic)"),
                )
                .into())
            }
        },
        None => ActuationMode::IdealTension,
    };
    let integrator = match sec.get("integrator") {
        Some(v) => match want_text(sec, "integrator", v)? {
            "semi_implicit" => Integrator::SemiImplicitEuler,
            "rk4" => Integrator::Rk4,
            other => {
                return Err(ValidationError::new(
                    "scenario.integrator",
                    format!("unknown integrator `{other}` (expected semi_implicit or rk4)"),
                )
                .into())
            }
        },
        None => Integrator::SemiImplicitEuler,
    };
    let duration = want_number(sec, "duration", require(sec, "duration")?)?;
    let dt = match sec.get("dt") {
        Some(v) => want_number(sec, "dt", v)?,
        None => match mode {
            ActuationMode::Elastic => 1e-4,
            ActuationMode::IdealTension => 1e-3,
        },
    };
    let control_rate = opt_number(sec, "control_rate", 500.0)?;
    let sample_rate = opt_number(sec, "sample_rate", 200.0)?;
    let ea_scale = opt_number(sec, "ea_scale", 1.0)?;

    if !(dt.is_finite() && dt > 0.0) {
        return Err(ValidationError::new("scenario.dt", "dt must be positive").into());
    }
    if !(duration.is_finite() && duration >= dt) {
        return Err(ValidationError::new("scenario.duration", "duration must be at least dt").into());
    }
    for (key, v) in [("control_rate", control_rate), ("sample_rate", sample_rate), ("ea_scale", ea_scale)] {
        if !(v.is_finite() && v > 0.0) {
            return Err(ValidationError::new(format!("scenario.{key}"), "must be positive").into());
        }
    }
    if dt > 1.0 / control_rate * (1.0 + 1e-9) {
        return Err(ValidationError::new(
            "scenario.dt",
            "dt must not exceed the control period (1/control_rate)",
        )
        .into());
    }

    let end_effector = interpret_end_effector(doc, &model)?;
    let reference = interpret_reference(doc, &model)?;
    let controller = interpret_controller(doc, &model)?;
    let events = interpret_events(doc, &model, duration)?;

    // Initial state defaults to the reference start, at rest.
    let n = model.n_joints();
    let (q0, qd0) = match doc.section("initial") {
        Some(sec) => {
            check_keys(sec, &["q", "qdot"])?;
            let q0 = match sec.get("q") {
                Some(v) => want_numbers(sec, "q", v)?,
                None => reference.start_q().to_vec(),
            };
            let qd0 = match sec.get("qdot") {
                Some(v) => want_numbers(sec, "qdot", v)?,
                None => vec![0.0; n],
            };
            (q0, qd0)
        }
        None => (reference.start_q().to_vec(), vec![0.0; n]),
    };
    for (key, v) in [("q", &q0), ("qdot", &qd0)] {
        if v.len() != n {
            return Err(ValidationError::new(
                format!("initial.{key}"),
                format!("expected {n} entries, got {}", v.len()),
            )
            .into());
        }
        if !v.iter().all(|x| x.is_finite()) {
            return Err(ValidationError::new(format!("initial.{key}"), "must be finite").into());
        }
    }
    for (j, joint) in model.joints.iter().enumerate() {
        let (lo, hi) = joint.limits;
        if q0[j] < lo - 1e-9 || q0[j] > hi + 1e-9 {
            return Err(ValidationError::new(
                "initial.q",
                format!("joint `{}` starts at {} outside limits [{lo}, {hi}]", joint.name, q0[j]),
            )
            .into());
        }
    }

    Ok(ScenarioSpec {
        name,
        model,
        mode,
        integrator,
        duration,
        dt,
        control_rate,
        sample_rate,
        ea_scale,
        controller,
        end_effector,
        reference,
        events,
        q0,
        qd0,
    })
}

fn opt_number(sec: &Section, key: &str, default: f64) -> Result<f64, ValidationError> {
    match sec.get(key) {
        Some(v) => want_number(sec, key, v),
        None => Ok(default),
    }
}

fn interpret_end_effector(
    doc: &Document,
    model: &RobotModel,
) -> Result<(usize, Vector3<f64>), SimError> {
    let sec = doc
        .section("end_effector")
        .ok_or_else(|| ValidationError::new("end_effector", "missing [end_effector] section"))?;
    check_keys(sec, &["link", "point"])?;
    let link_name = want_text(sec, "link", require(sec, "link")?)?;
    let link = model.link_index(link_name).ok_or_else(|| {
        ValidationError::new("end_effector.link", format!("unknown link `{link_name}`"))
    })?;
    let point = match sec.get("point") {
        Some(v) => want_vec3(sec, "point", v)?,
        None => Vector3::zeros(),
    };
    Ok((link, point))
}

fn interpret_controller(doc: &Document, model: &RobotModel) -> Result<ControllerChoice, SimError> {
    let Some(sec) = doc.section("controller") else {
        // Unactuated models can only run passively.
        if model.n_routes() == 0 {
            return Ok(ControllerChoice::None);
        }
        return Ok(ControllerChoice::ComputedTorque(ControllerConfig::from_model(model)));
    };
    check_keys(sec, &["type", "preset", "kp", "kv", "lambda", "f"])?;
    let kind = match sec.get("type") {
        Some(v) => want_text(sec, "type", v)?,
        None => "computed_torque",
    };
    match kind {
        "none" => Ok(ControllerChoice::None),
        "constant" => {
            let f = want_numbers(sec, "f", require(sec, "f")?)?;
            if f.len() != model.n_routes() {
                return Err(ValidationError::new(
                    "controller.f",
                    format!("expected {} tensions, got {}", model.n_routes(), f.len()),
                )
                .into());
            }
            if !f.iter().all(|x| x.is_finite() && *x >= 0.0) {
                return Err(
                    ValidationError::new("controller.f", "tensions must be non-negative").into()
                );
            }
            Ok(ControllerChoice::Constant(f))
        }
        "computed_torque" => {
            if model.n_routes() == 0 {
                return Err(ValidationError::new(
                    "controller.type",
                    "computed_torque requires a model with wire routes",
                )
                .into());
            }
            let mut config = match sec.get("preset") {
                Some(v) => match want_text(sec, "preset", v)? {
                    "default" => ControllerConfig::from_model(model),
                    "low_gain" => ControllerConfig::low_gain(model),
                    other => {
                        return Err(ValidationError::new(
                            "controller.preset",
                            format!("unknown preset `{other}` (expected default or low_gain)"),
                        )
                        .into())
                    }
                },
                None => ControllerConfig::from_model(model),
            };
            // Scalar overrides replace the diagonal uniformly.
            if let Some(v) = sec.get("kp") {
                let kp = want_number(sec, "kp", v)?;
                config.kp.fill_with_identity();
                config.kp *= kp;
            }
            if let Some(v) = sec.get("kv") {
                let kv = want_number(sec, "kv", v)?;
                config.kv.fill_with_identity();
                config.kv *= kv;
            }
            if let Some(v) = sec.get("lambda") {
                config.lambda.fill(want_number(sec, "lambda", v)?);
            }
            Ok(ControllerChoice::ComputedTorque(config))
        }
        other => Err(ValidationError::new(
            "controller.type",
            format!("unknown controller `{other}` (expected computed_torque, constant, or none)"),
        )
        .into()),
    }
}

fn interpret_reference(doc: &Document, model: &RobotModel) -> Result<ReferenceSpec, SimError> {
    let n = model.n_joints();
    let sec = doc
        .section("reference")
        .ok_or_else(|| ValidationError::new("reference", "missing [reference] section"))?;
    let kind = want_text(sec, "type", require(sec, "type")?)?;
    let want_q = |sec: &Section, key: &str| -> Result<Vec<f64>, ValidationError> {
        let q = want_numbers(sec, key, require(sec, key)?)?;
        if q.len() != n {
            return Err(ValidationError::new(
                format!("{}.{key}", sec.path_string()),
                format!("expected {n} joint values, got {}", q.len()),
            ));
        }
        Ok(q)
    };
    match kind {
        "hold" => {
            check_keys(sec, &["type", "q"])?;
            Ok(ReferenceSpec::Hold { q: want_q(sec, "q")? })
        }
        "joint_knots" => {
            check_keys(sec, &["type"])?;
            let mut knots = Vec::new();
            let mut times = Vec::new();
            for k in 0.. {
                let Some(ksec) = doc.section(&format!("reference.knot.{k}")) else { break };
                check_keys(ksec, &["t", "q"])?;
                times.push(want_number(ksec, "t", require(ksec, "t")?)?);
                knots.push(want_q(ksec, "q")?);
            }
            if knots.is_empty() {
                return Err(ValidationError::new(
                    "reference",
                    "joint_knots needs at least one [reference.knot.0] section",
                )
                .into());
            }
            if times[0] < 0.0 {
                return Err(
                    ValidationError::new("reference.knot.0.t", "knot times start at ≥ 0").into()
                );
            }
            if times.windows(2).any(|w| w[1] <= w[0]) {
                return Err(ValidationError::new(
                    "reference",
                    "knot times must be strictly increasing",
                )
                .into());
            }
            Ok(ReferenceSpec::JointKnots { times, knots })
        }
        "task_circle" => {
            check_keys(
                sec,
                &["type", "q0", "center", "normal", "diameter", "period", "laps", "lead_in"],
            )?;
            let q0 = want_q(sec, "q0")?;
            let center = match sec.get("center") {
                Some(v) => Some(want_vec3(sec, "center", v)?),
                None => None,
            };
            let normal = match sec.get("normal") {
                Some(v) => want_vec3(sec, "normal", v)?,
                None => Vector3::y(),
            };
            if normal.norm() < 1e-9 {
                return Err(ValidationError::new("reference.normal", "must be non-zero").into());
            }
            let diameter = want_number(sec, "diameter", require(sec, "diameter")?)?;
            let period = want_number(sec, "period", require(sec, "period")?)?;
            let laps = opt_number(sec, "laps", 5.0)?;
            let lead_in = opt_number(sec, "lead_in", 0.5 * period)?;
            for (key, v) in [("diameter", diameter), ("period", period), ("laps", laps)] {
                if !(v.is_finite() && v > 0.0) {
                    return Err(ValidationError::new(
                        format!("reference.{key}"),
                        "must be positive",
                    )
                    .into());
                }
            }
            if !(lead_in.is_finite() && lead_in >= 0.0) {
                return Err(
                    ValidationError::new("reference.lead_in", "must be non-negative").into()
                );
            }
            Ok(ReferenceSpec::TaskCircle { q0, center, normal, diameter, period, laps, lead_in })
        }
        other => Err(ValidationError::new(
            "reference.type",
            format!("unknown reference `{other}` (expected hold, joint_knots, or task_circle)"),
        )
        .into()),
    }
}

fn interpret_events(
    doc: &Document,
    model: &RobotModel,
    duration: f64,
) -> Result<Vec<Event>, SimError> {
    let mut events = Vec::new();
    for k in 0.. {
        let Some(sec) = doc.section(&format!("event.{k}")) else { break };
        let time = want_number(sec, "time", require(sec, "time")?)?;
        if !(time.is_finite() && (0.0..=duration).contains(&time)) {
            return Err(ValidationError::new(
                format!("event.{k}.time"),
                format!("event time must lie within [0, {duration}]"),
            )
            .into());
        }
        let kind = want_text(sec, "type", require(sec, "type")?)?;
        let want_link = |sec: &Section| -> Result<usize, ValidationError> {
            let name = want_text(sec, "link", require(sec, "link")?)?;
            model.link_index(name).ok_or_else(|| {
                ValidationError::new(format!("event.{k}.link"), format!("unknown link `{name}`"))
            })
        };
        let kind = match kind {
            "attach_mass" => {
                check_keys(sec, &["type", "time", "link", "kg", "point"])?;
                let kg = want_number(sec, "kg", require(sec, "kg")?)?;
                if !(kg.is_finite() && kg > 0.0) {
                    return Err(
                        ValidationError::new(format!("event.{k}.kg"), "must be positive").into()
                    );
                }
                let point = match sec.get("point") {
                    Some(v) => want_vec3(sec, "point", v)?,
                    None => Vector3::zeros(),
                };
                EventKind::AttachMass { link: want_link(sec)?, kg, point }
            }
            "detach_mass" => {
                check_keys(sec, &["type", "time"])?;
                EventKind::DetachMass
            }
            "impulse" => {
                check_keys(sec, &["type", "time", "link", "point", "impulse"])?;
                EventKind::Impulse {
                    link: want_link(sec)?,
                    point: want_vec3(sec, "point", require(sec, "point")?)?,
                    impulse: want_vec3(sec, "impulse", require(sec, "impulse")?)?,
                }
            }
            "plane_contact" => {
                check_keys(sec, &["type", "time", "normal", "offset", "stiffness", "damping"])?;
                let normal = want_vec3(sec, "normal", require(sec, "normal")?)?;
                if normal.norm() < 1e-9 {
                    return Err(ValidationError::new(
                        format!("event.{k}.normal"),
                        "must be non-zero",
                    )
                    .into());
                }
                let stiffness = want_number(sec, "stiffness", require(sec, "stiffness")?)?;
                let damping = opt_number(sec, "damping", 0.0)?;
                if !(stiffness.is_finite() && stiffness > 0.0) || !(damping.is_finite() && damping >= 0.0) {
                    return Err(ValidationError::new(
                        format!("event.{k}.stiffness"),
                        "stiffness must be positive and damping non-negative",
                    )
                    .into());
                }
                EventKind::PlaneContact(ContactPlane {
                    normal: Unit::new_normalize(normal),
                    offset: want_number(sec, "offset", require(sec, "offset")?)?,
                    stiffness,
                    damping,
                })
            }
            other => {
                return Err(ValidationError::new(
                    format!("event.{k}.type"),
                    format!("unknown event `{other}`"),
                )
                .into())
            }
        };
        events.push(Event { time, kind });
    }
    events.sort_by(|a, b| a.time.total_cmp(&b.time));

    // A detach only makes sense after an attach.
    let mut attached = false;
    for (idx, ev) in events.iter().enumerate() {
        match ev.kind {
            EventKind::AttachMass { .. } => attached = true,
            EventKind::DetachMass => {
                if !attached {
                    return Err(ValidationError::new(
                        format!("event.{idx}"),
                        "detach_mass without a preceding attach_mass",
                    )
                    .into());
                }
                attached = false;
            }
            _ => {}
        }
    }
    Ok(events)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::model::load_model;

    fn interpret(text: &str, model_text: &str) -> Result<ScenarioSpec, SimError> {
        let doc = Document::parse(text).unwrap();
        interpret_scenario(&doc, load_model(model_text).unwrap())
    }

    const FULL: &str = r#"
[scenario]
name = "swing"
model = "ignored.model"
duration = 0.5
mode = "elastic"
integrator = "rk4"
control_rate = 250
ea_scale = 10

[end_effector]
link = "bob"
point = [0.0, 0.0, -1.0]

[initial]
q = [0.1]
qdot = [-0.2]

[controller]
type = "computed_torque"
preset = "low_gain"
kp = 50.0

[reference]
type = "hold"
q = [0.3]

[event.0]
type = "impulse"
time = 0.2
link = "bob"
point = [0.0, 0.0, -1.0]
impulse = [1.0, 0.0, 0.0]

[event.1]
type = "plane_contact"
time = 0.3
normal = [0.0, 0.0, 2.0]
offset = -0.9
stiffness = 1e5
damping = 50
"#;

    #[test]
    fn parses_a_full_scenario() {
        let spec = interpret(FULL, fixtures::PENDULUM).unwrap();
        assert_eq!(spec.name, "swing");
        assert_eq!(spec.mode, ActuationMode::Elastic);
        assert_eq!(spec.integrator, Integrator::Rk4);
        assert_eq!(spec.duration, 0.5);
        assert_eq!(spec.dt, 1e-4, "elastic default dt");
        assert_eq!(spec.control_rate, 250.0);
        assert_eq!(spec.ea_scale, 10.0);
        assert_eq!(spec.q0, vec![0.1]);
        assert_eq!(spec.qd0, vec![-0.2]);
        assert_eq!(spec.end_effector, (1, Vector3::new(0.0, 0.0, -1.0)));
        let ControllerChoice::ComputedTorque(cfg) = &spec.controller else {
            panic!("expected computed_torque");
        };
        assert_eq!(cfg.kp[(0, 0)], 50.0);
        assert_eq!(spec.events.len(), 2);
        assert_eq!(spec.events[0].time, 0.2);
        match &spec.events[1].kind {
            EventKind::PlaneContact(p) => {
                // Normal comes back unit length.
                assert!((p.normal.z - 1.0).abs() < 1e-15 && p.offset == -0.9);
            }
            other => panic!("expected plane contact, got {other:?}"),
        }
    }

    #[test]
    fn defaults_follow_the_mode_and_reference() {
        let text = r#"
[scenario]
model = "m"
duration = 1.0

[end_effector]
link = "bob"

[reference]
type = "hold"
q = [0.25]
"#;
        let spec = interpret(text, fixtures::PENDULUM).unwrap();
        assert_eq!(spec.mode, ActuationMode::IdealTension);
        assert_eq!(spec.dt, 1e-3, "ideal-tension default dt");
        assert_eq!(spec.integrator, Integrator::SemiImplicitEuler);
        assert_eq!(spec.q0, vec![0.25], "initial posture defaults to the reference start");
        assert_eq!(spec.qd0, vec![0.0]);
        assert!(matches!(spec.controller, ControllerChoice::ComputedTorque(_)));
        assert!(spec.events.is_empty());
    }

    #[test]
    fn unactuated_model_defaults_to_passive() {
        let text = r#"
[scenario]
model = "m"
duration = 1.0

[end_effector]
link = "c"

[reference]
type = "hold"
q = [0.5, 0.0, -0.5]
"#;
        let spec = interpret(text, fixtures::TRIPLE_ROD).unwrap();
        assert!(matches!(spec.controller, ControllerChoice::None));
    }

    #[test]
    fn rejects_bad_declarations() {
        let cases: &[(&str, &str)] = &[
            // Missing reference section entirely.
            (
                "[scenario]\nmodel = \"m\"\nduration = 1.0\n\n[end_effector]\nlink = \"bob\"\n",
                "missing [reference]",
            ),
            // Unknown link name.
            (
                "[scenario]\nmodel = \"m\"\nduration = 1.0\n\n[end_effector]\nlink = \"nope\"\n\n[reference]\ntype = \"hold\"\nq = [0.0]\n",
                "unknown link",
            ),
            // Wrong joint count in the reference.
            (
                "[scenario]\nmodel = \"m\"\nduration = 1.0\n\n[end_effector]\nlink = \"bob\"\n\n[reference]\ntype = \"hold\"\nq = [0.0, 0.0]\n",
                "wrong q length",
            ),
            // Start outside joint limits.
            (
                "[scenario]\nmodel = \"m\"\nduration = 1.0\n\n[end_effector]\nlink = \"bob\"\n\n[initial]\nq = [9.0]\n\n[reference]\ntype = \"hold\"\nq = [0.0]\n",
                "q0 outside limits",
            ),
            // Event after the run ends.
            (
                "[scenario]\nmodel = \"m\"\nduration = 1.0\n\n[end_effector]\nlink = \"bob\"\n\n[reference]\ntype = \"hold\"\nq = [0.0]\n\n[event.0]\ntype = \"detach_mass\"\ntime = 2.0\n",
                "event beyond duration",
            ),
            // Detach with nothing attached.
            (
                "[scenario]\nmodel = \"m\"\nduration = 1.0\n\n[end_effector]\nlink = \"bob\"\n\n[reference]\ntype = \"hold\"\nq = [0.0]\n\n[event.0]\ntype = \"detach_mass\"\ntime = 0.5\n",
                "detach without attach",
            ),
            // dt longer than the control period.
            (
                "[scenario]\nmodel = \"m\"\nduration = 1.0\ndt = 0.01\ncontrol_rate = 500\n\n[end_effector]\nlink = \"bob\"\n\n[reference]\ntype = \"hold\"\nq = [0.0]\n",
                "dt exceeds control period",
            ),
        ];
        for (text, what) in cases {
            assert!(interpret(text, fixtures::PENDULUM).is_err(), "expected rejection: {what}");
        }
    }

    #[test]
    fn computed_torque_needs_routes() {
        let text = r#"
[scenario]
model = "m"
duration = 1.0

[end_effector]
link = "c"

[controller]
type = "computed_torque"

[reference]
type = "hold"
q = [0.0, 0.0, 0.0]
"#;
        let err = interpret(text, fixtures::TRIPLE_ROD).unwrap_err();
        assert!(err.to_string().contains("wire routes"), "got: {err}");
    }

    #[test]
    fn events_sort_by_time() {
        let text = r#"
[scenario]
model = "m"
duration = 1.0

[end_effector]
link = "bob"

[reference]
type = "hold"
q = [0.0]

[event.0]
type = "impulse"
time = 0.8
link = "bob"
point = [0.0, 0.0, -1.0]
impulse = [1.0, 0.0, 0.0]

[event.1]
type = "attach_mass"
time = 0.2
link = "bob"
kg = 0.5
point = [0.0, 0.0, -1.0]
"#;
        let spec = interpret(text, fixtures::PENDULUM).unwrap();
        assert!(matches!(spec.events[0].kind, EventKind::AttachMass { .. }));
        assert!(matches!(spec.events[1].kind, EventKind::Impulse { .. }));
    }
}
