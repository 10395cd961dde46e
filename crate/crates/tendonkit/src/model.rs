//! Robot model description and validation.
//!
//! A model is a rooted chain/tree of rigid links connected by revolute
//! joints, plus a set of wire routes. Link 0 (the first link in the file) is
//! the fixed root. Joint order in the file defines the DoF index used by
//! every `q` vector in the toolkit.
//!
//! Models load from a structured-text file (grammar in
//! `docs/model-format.md`) and serialize back losslessly.

use std::path::Path;

use nalgebra::{Isometry3, Matrix3, Translation3, Unit, UnitQuaternion, Vector3};
use thiserror::Error;

use crate::textfmt::{self, Document, Section, Value};

/// Default lower tension bound [N].
pub const DEFAULT_F_MIN: f64 = 5.0;
/// Default upper tension bound [N].
pub const DEFAULT_F_MAX: f64 = 490.0;
/// Default wire elasticity EA [N].
pub const DEFAULT_ELASTICITY: f64 = 10_000.0;
/// Default motor pulley radius [m].
pub const DEFAULT_PULLEY_RADIUS: f64 = 0.005;
/// Default motor torque constant [N·m/A].
pub const DEFAULT_TORQUE_CONSTANT: f64 = 0.318;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("parse error: {0}")]
    Parse(#[from] textfmt::ParseError),
    #[error("validation error: {0}")]
    Validation(#[from] ValidationError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// A broken model invariant. `context` names the offending element
/// (e.g. `link.upper_arm.inertia`), `message` states the violated rule.
#[derive(Debug, Clone, Error)]
#[error("{context}: {message}")]
pub struct ValidationError {
    pub context: String,
    pub message: String,
}

impl ValidationError {
    pub(crate) fn new(context: impl Into<String>, message: impl Into<String>) -> Self {
        ValidationError { context: context.into(), message: message.into() }
    }
}

/// Rigid link: mass, center of mass, and rotational inertia about the COM,
/// all expressed in the link frame.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkSpec {
    pub name: String,
    pub mass: f64,
    pub com: Vector3<f64>,
    pub inertia: Matrix3<f64>,
}

/// Revolute joint connecting `parent` to `child`. The child frame is
/// `parent_frame * origin * Rot(axis, q)`; the axis is expressed in the
/// joint frame (i.e. the child frame at q = 0).
#[derive(Debug, Clone, PartialEq)]
pub struct JointSpec {
    pub name: String,
    pub parent: String,
    pub child: String,
    pub origin: Isometry3<f64>,
    pub axis: Unit<Vector3<f64>>,
    /// Position limits (lower, upper) in radians.
    pub limits: (f64, f64),
}

/// One geometric segment of a wire route.
#[derive(Debug, Clone, PartialEq)]
pub enum Segment {
    /// Straight span between an anchor on an ancestor link and an anchor on
    /// a descendant link; its length is the distance between the two anchor
    /// points in world space.
    LinearSpan {
        from_link: String,
        from_point: Vector3<f64>,
        to_link: String,
        to_point: Vector3<f64>,
    },
    /// Wire wrapped on a pulley coaxial with a joint; contributes
    /// `arc_offset + sign * radius * q` to the route length.
    CircularWrap {
        joint: String,
        radius: f64,
        sign: f64,
        arc_offset: f64,
    },
}

/// Winding-side actuator parameters of a route.
#[derive(Debug, Clone, PartialEq)]
pub struct MotorSpec {
    pub pulley_radius: f64,
    pub torque_constant: f64,
    pub winding_sign: f64,
}

impl Default for MotorSpec {
    fn default() -> Self {
        MotorSpec {
            pulley_radius: DEFAULT_PULLEY_RADIUS,
            torque_constant: DEFAULT_TORQUE_CONSTANT,
            winding_sign: 1.0,
        }
    }
}

/// A wire route: ordered segments plus tension bounds and transmission data.
#[derive(Debug, Clone, PartialEq)]
pub struct WireRoute {
    pub name: String,
    pub segments: Vec<Segment>,
    pub f_min: f64,
    pub f_max: f64,
    /// Axial stiffness EA [N]; joint-side stiffness is EA / rest-length.
    pub elasticity: f64,
    pub motor: MotorSpec,
}

/// Obstacle-side parameters of the contact-force bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SafetyParams {
    /// Obstacle (e.g. head) mass [kg].
    pub m_h: f64,
    /// Contact stiffness [N/m].
    pub k_h: f64,
    /// Relative approach speed [m/s].
    pub v_rel: f64,
}

impl SafetyParams {
    pub fn new(m_h: f64, k_h: f64, v_rel: f64) -> Result<Self, ValidationError> {
        for (name, v) in [("m_h", m_h), ("k_h", k_h), ("v_rel", v_rel)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(ValidationError::new(
                    format!("safety.{name}"),
                    format!("must be strictly positive and finite, got {v}"),
                ));
            }
        }
        Ok(SafetyParams { m_h, k_h, v_rel })
    }
}

/// A resolved wire segment with link/joint names replaced by indices and
/// span-crossed joints precomputed. Built once at load time.
#[derive(Debug, Clone, PartialEq)]
pub enum ResolvedSegment {
    Linear {
        from_link: usize,
        from_point: Vector3<f64>,
        to_link: usize,
        to_point: Vector3<f64>,
        /// Joints on the chain between the two anchor links, root-to-leaf
        /// order. Only these joints change the span length.
        crossed: Vec<usize>,
    },
    Wrap {
        joint: usize,
        radius: f64,
        sign: f64,
        arc_offset: f64,
    },
}

/// Complete validated robot model.
#[derive(Debug, Clone, PartialEq)]
pub struct RobotModel {
    pub name: String,
    pub links: Vec<LinkSpec>,
    pub joints: Vec<JointSpec>,
    pub routes: Vec<WireRoute>,
    /// Gravity acceleration vector in the world frame [m/s²].
    pub gravity: Vector3<f64>,
    /// When set, the route count must exceed the joint count (full
    /// antagonistic actuation needs at least N+1 wires).
    pub fully_actuated: bool,
    /// Optional model-wide upper bound on any route's f_max [N].
    pub tension_ceiling: Option<f64>,

    // Derived connectivity, rebuilt by `from_parts`.
    joint_parent_link: Vec<usize>,
    joint_child_link: Vec<usize>,
    link_parent_joint: Vec<Option<usize>>,
    /// Joints on the path from the root to each link, root-first.
    link_path: Vec<Vec<usize>>,
    /// Links ordered so every parent precedes its children.
    topo_links: Vec<usize>,
    resolved: Vec<Vec<ResolvedSegment>>,
}

impl RobotModel {
    /// Assembles and validates a model from its declared parts.
    pub fn from_parts(
        name: impl Into<String>,
        links: Vec<LinkSpec>,
        joints: Vec<JointSpec>,
        routes: Vec<WireRoute>,
        gravity: Vector3<f64>,
        fully_actuated: bool,
        tension_ceiling: Option<f64>,
    ) -> Result<RobotModel, ValidationError> {
        let mut model = RobotModel {
            name: name.into(),
            links,
            joints,
            routes,
            gravity,
            fully_actuated,
            tension_ceiling,
            joint_parent_link: Vec::new(),
            joint_child_link: Vec::new(),
            link_parent_joint: Vec::new(),
            link_path: Vec::new(),
            topo_links: Vec::new(),
            resolved: Vec::new(),
        };
        model.build_connectivity()?;
        model.validate()?;
        Ok(model)
    }

    pub fn n_links(&self) -> usize {
        self.links.len()
    }

    pub fn n_joints(&self) -> usize {
        self.joints.len()
    }

    pub fn n_routes(&self) -> usize {
        self.routes.len()
    }

    pub fn link_index(&self, name: &str) -> Option<usize> {
        self.links.iter().position(|l| l.name == name)
    }

    pub fn joint_index(&self, name: &str) -> Option<usize> {
        self.joints.iter().position(|j| j.name == name)
    }

    pub fn route_index(&self, name: &str) -> Option<usize> {
        self.routes.iter().position(|r| r.name == name)
    }

    pub fn joint_parent_link(&self, joint: usize) -> usize {
        self.joint_parent_link[joint]
    }

    pub fn joint_child_link(&self, joint: usize) -> usize {
        self.joint_child_link[joint]
    }

    /// The joint whose child frame is `link`; `None` for the root.
    pub fn link_parent_joint(&self, link: usize) -> Option<usize> {
        self.link_parent_joint[link]
    }

    /// Joints on the root→`link` path, root-first.
    pub fn path_joints(&self, link: usize) -> &[usize] {
        &self.link_path[link]
    }

    /// Links ordered parent-before-child; starts with the root.
    pub fn topo_links(&self) -> &[usize] {
        &self.topo_links
    }

    pub fn resolved_segments(&self, route: usize) -> &[ResolvedSegment] {
        &self.resolved[route]
    }

    /// True when link `a` lies on the root path of link `b` (strictly above).
    pub fn is_ancestor(&self, a: usize, b: usize) -> bool {
        if a == b {
            return false;
        }
        let mut cur = b;
        while let Some(j) = self.link_parent_joint[cur] {
            cur = self.joint_parent_link[j];
            if cur == a {
                return true;
            }
        }
        false
    }

    /// Total mass of every link distal to the fixed root [kg].
    pub fn moving_part_mass(&self) -> f64 {
        self.links.iter().skip(1).map(|l| l.mass).sum()
    }

    /// Returns a copy of the model with a point mass rigidly attached to
    /// `link` at `point` (link frame). Mass, COM, and inertia of the link
    /// are recombined; everything else is unchanged.
    pub fn with_point_mass(
        &self,
        link: usize,
        kg: f64,
        point: Vector3<f64>,
    ) -> Result<RobotModel, ValidationError> {
        if link >= self.links.len() {
            return Err(ValidationError::new("attach_mass", format!("unknown link index {link}")));
        }
        if !(kg.is_finite() && kg > 0.0) {
            return Err(ValidationError::new("attach_mass", format!("mass must be positive, got {kg}")));
        }
        let mut links = self.links.clone();
        let old = &self.links[link];
        let total = old.mass + kg;
        let com = (old.com * old.mass + point * kg) / total;
        let shift = |d: Vector3<f64>, m: f64| -> Matrix3<f64> {
            (Matrix3::identity() * d.norm_squared() - d * d.transpose()) * m
        };
        let inertia = old.inertia + shift(old.com - com, old.mass) + shift(point - com, kg);
        links[link] = LinkSpec { name: old.name.clone(), mass: total, com, inertia };
        RobotModel::from_parts(
            self.name.clone(),
            links,
            self.joints.clone(),
            self.routes.clone(),
            self.gravity,
            self.fully_actuated,
            self.tension_ceiling,
        )
    }

    /// Removes a previously attached point mass (inverse of
    /// [`with_point_mass`](Self::with_point_mass)).
    pub fn without_point_mass(
        &self,
        link: usize,
        kg: f64,
        point: Vector3<f64>,
    ) -> Result<RobotModel, ValidationError> {
        if link >= self.links.len() {
            return Err(ValidationError::new("detach_mass", format!("unknown link index {link}")));
        }
        let old = &self.links[link];
        let rest = old.mass - kg;
        if !(kg.is_finite() && kg > 0.0 && rest >= 0.0) {
            return Err(ValidationError::new(
                "detach_mass",
                format!("cannot remove {kg} kg from a {} kg link", old.mass),
            ));
        }
        let com = if rest > 0.0 { (old.com * old.mass - point * kg) / rest } else { Vector3::zeros() };
        let shift = |d: Vector3<f64>, m: f64| -> Matrix3<f64> {
            (Matrix3::identity() * d.norm_squared() - d * d.transpose()) * m
        };
        // Undo the composition performed by with_point_mass.
        let inertia = old.inertia - shift(point - old.com, kg) - shift(com - old.com, rest);
        let mut links = self.links.clone();
        links[link] = LinkSpec { name: old.name.clone(), mass: rest, com, inertia };
        RobotModel::from_parts(
            self.name.clone(),
            links,
            self.joints.clone(),
            self.routes.clone(),
            self.gravity,
            self.fully_actuated,
            self.tension_ceiling,
        )
    }

    fn build_connectivity(&mut self) -> Result<(), ValidationError> {
        let n_links = self.links.len();
        if n_links == 0 {
            return Err(ValidationError::new("model", "at least one link (the root) is required"));
        }
        self.joint_parent_link.clear();
        self.joint_child_link.clear();
        for joint in &self.joints {
            let ctx = format!("joint.{}", joint.name);
            let p = self
                .link_index(&joint.parent)
                .ok_or_else(|| ValidationError::new(&ctx, format!("unknown parent link `{}`", joint.parent)))?;
            let c = self
                .link_index(&joint.child)
                .ok_or_else(|| ValidationError::new(&ctx, format!("unknown child link `{}`", joint.child)))?;
            self.joint_parent_link.push(p);
            self.joint_child_link.push(c);
        }

        // Exactly one parent joint per non-root link, none for the root.
        self.link_parent_joint = vec![None; n_links];
        for (j, &child) in self.joint_child_link.iter().enumerate() {
            if child == 0 {
                return Err(ValidationError::new(
                    format!("joint.{}", self.joints[j].name),
                    "the root link cannot be a joint child",
                ));
            }
            if let Some(prev) = self.link_parent_joint[child] {
                return Err(ValidationError::new(
                    format!("link.{}", self.links[child].name),
                    format!(
                        "has two parent joints (`{}` and `{}`); the chain must be a tree",
                        self.joints[prev].name, self.joints[j].name
                    ),
                ));
            }
            self.link_parent_joint[child] = Some(j);
        }
        for (l, link) in self.links.iter().enumerate().skip(1) {
            if self.link_parent_joint[l].is_none() {
                return Err(ValidationError::new(
                    format!("link.{}", link.name),
                    "unreachable from the root (no parent joint)",
                ));
            }
        }

        // Root-first paths; cycle detection via path length bound.
        self.link_path = vec![Vec::new(); n_links];
        for l in 1..n_links {
            let mut rev = Vec::new();
            let mut cur = l;
            while let Some(j) = self.link_parent_joint[cur] {
                rev.push(j);
                cur = self.joint_parent_link[j];
                if rev.len() > self.joints.len() {
                    return Err(ValidationError::new(
                        format!("link.{}", self.links[l].name),
                        "joint graph contains a cycle",
                    ));
                }
            }
            if cur != 0 {
                return Err(ValidationError::new(
                    format!("link.{}", self.links[l].name),
                    "not connected to the root link",
                ));
            }
            rev.reverse();
            self.link_path[l] = rev;
        }

        // Parent-before-child ordering by path depth (stable by index).
        let mut order: Vec<usize> = (0..n_links).collect();
        order.sort_by_key(|&l| (self.link_path[l].len(), l));
        self.topo_links = order;

        // Resolve route segments.
        self.resolved.clear();
        for route in &self.routes {
            let mut segs = Vec::with_capacity(route.segments.len());
            for (k, seg) in route.segments.iter().enumerate() {
                let ctx = format!("route.{}.segment.{}", route.name, k);
                match seg {
                    Segment::LinearSpan { from_link, from_point, to_link, to_point } => {
                        let from = self.link_index(from_link).ok_or_else(|| {
                            ValidationError::new(&ctx, format!("unknown link `{from_link}`"))
                        })?;
                        let to = self.link_index(to_link).ok_or_else(|| {
                            ValidationError::new(&ctx, format!("unknown link `{to_link}`"))
                        })?;
                        if !self.is_ancestor(from, to) {
                            return Err(ValidationError::new(
                                &ctx,
                                format!(
                                    "`{from_link}` must be a strict ancestor of `{to_link}` so the span crosses at least one joint"
                                ),
                            ));
                        }
                        let skip = self.link_path[from].len();
                        let crossed = self.link_path[to][skip..].to_vec();
                        debug_assert!(!crossed.is_empty());
                        segs.push(ResolvedSegment::Linear {
                            from_link: from,
                            from_point: *from_point,
                            to_link: to,
                            to_point: *to_point,
                            crossed,
                        });
                    }
                    Segment::CircularWrap { joint, radius, sign, arc_offset } => {
                        let j = self.joint_index(joint).ok_or_else(|| {
                            ValidationError::new(&ctx, format!("unknown joint `{joint}`"))
                        })?;
                        segs.push(ResolvedSegment::Wrap {
                            joint: j,
                            radius: *radius,
                            sign: *sign,
                            arc_offset: *arc_offset,
                        });
                    }
                }
            }
            self.resolved.push(segs);
        }
        Ok(())
    }

    fn validate(&self) -> Result<(), ValidationError> {
        for link in &self.links {
            let ctx = format!("link.{}", link.name);
            if !(link.mass.is_finite() && link.mass >= 0.0) {
                return Err(ValidationError::new(
                    format!("{ctx}.mass"),
                    format!("must be non-negative and finite, got {}", link.mass),
                ));
            }
            if !link.com.iter().all(|x| x.is_finite()) {
                return Err(ValidationError::new(format!("{ctx}.com"), "must be finite"));
            }
            validate_inertia(&ctx, &link.inertia)?;
        }

        for joint in &self.joints {
            let ctx = format!("joint.{}", joint.name);
            let norm_dev = (joint.axis.as_ref().norm() - 1.0).abs();
            if !joint.axis.iter().all(|x| x.is_finite()) || norm_dev > 1e-6 {
                return Err(ValidationError::new(
                    format!("{ctx}.axis"),
                    "must be a unit vector",
                ));
            }
            let (lo, hi) = joint.limits;
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(ValidationError::new(
                    format!("{ctx}.limits"),
                    format!("lower bound must be finite and below the upper bound, got [{lo}, {hi}]"),
                ));
            }
        }

        for route in &self.routes {
            let ctx = format!("route.{}", route.name);
            if route.segments.is_empty() {
                return Err(ValidationError::new(&ctx, "route needs at least one segment"));
            }
            if !(route.f_min.is_finite() && route.f_min >= 0.0 && route.f_max.is_finite() && route.f_min <= route.f_max)
            {
                return Err(ValidationError::new(
                    format!("{ctx}.f_min"),
                    format!("need 0 ≤ f_min ≤ f_max, got [{}, {}]", route.f_min, route.f_max),
                ));
            }
            if let Some(ceiling) = self.tension_ceiling {
                if route.f_max > ceiling + 1e-12 {
                    return Err(ValidationError::new(
                        format!("{ctx}.f_max"),
                        format!("{} exceeds the model tension ceiling {}", route.f_max, ceiling),
                    ));
                }
            }
            if !(route.elasticity.is_finite() && route.elasticity > 0.0) {
                return Err(ValidationError::new(
                    format!("{ctx}.elasticity"),
                    format!("EA must be positive, got {}", route.elasticity),
                ));
            }
            let motor = &route.motor;
            if !(motor.pulley_radius.is_finite() && motor.pulley_radius > 0.0) {
                return Err(ValidationError::new(
                    format!("{ctx}.pulley_radius"),
                    format!("must be positive, got {}", motor.pulley_radius),
                ));
            }
            if !(motor.torque_constant.is_finite() && motor.torque_constant > 0.0) {
                return Err(ValidationError::new(
                    format!("{ctx}.torque_constant"),
                    format!("must be positive, got {}", motor.torque_constant),
                ));
            }
            if motor.winding_sign != 1.0 && motor.winding_sign != -1.0 {
                return Err(ValidationError::new(
                    format!("{ctx}.winding_sign"),
                    format!("must be +1 or -1, got {}", motor.winding_sign),
                ));
            }
            for (k, seg) in route.segments.iter().enumerate() {
                let sctx = format!("{ctx}.segment.{k}");
                match seg {
                    Segment::LinearSpan { from_point, to_point, .. } => {
                        if !(from_point.iter().all(|x| x.is_finite())
                            && to_point.iter().all(|x| x.is_finite()))
                        {
                            return Err(ValidationError::new(&sctx, "anchor points must be finite"));
                        }
                    }
                    Segment::CircularWrap { radius, sign, arc_offset, .. } => {
                        if !(radius.is_finite() && *radius > 0.0) {
                            return Err(ValidationError::new(
                                format!("{sctx}.radius"),
                                format!("must be positive, got {radius}"),
                            ));
                        }
                        if *sign != 1.0 && *sign != -1.0 {
                            return Err(ValidationError::new(
                                format!("{sctx}.sign"),
                                format!("must be +1 or -1, got {sign}"),
                            ));
                        }
                        if !(arc_offset.is_finite() && *arc_offset >= 0.0) {
                            return Err(ValidationError::new(
                                format!("{sctx}.arc_offset"),
                                format!("must be non-negative, got {arc_offset}"),
                            ));
                        }
                    }
                }
            }
        }

        if !self.gravity.iter().all(|x| x.is_finite()) {
            return Err(ValidationError::new("model.gravity", "must be finite"));
        }
        if let Some(ceiling) = self.tension_ceiling {
            if !(ceiling.is_finite() && ceiling > 0.0) {
                return Err(ValidationError::new(
                    "model.tension_ceiling",
                    format!("must be positive, got {ceiling}"),
                ));
            }
        }
        if self.fully_actuated && self.routes.len() < self.joints.len() + 1 {
            return Err(ValidationError::new(
                "model.fully_actuated",
                format!(
                    "full antagonistic actuation needs at least {} routes, found {}",
                    self.joints.len() + 1,
                    self.routes.len()
                ),
            ));
        }
        Ok(())
    }
}

fn validate_inertia(ctx: &str, inertia: &Matrix3<f64>) -> Result<(), ValidationError> {
    if !inertia.iter().all(|x| x.is_finite()) {
        return Err(ValidationError::new(format!("{ctx}.inertia"), "must be finite"));
    }
    let asym = (inertia - inertia.transpose()).norm();
    if asym > 1e-9 * inertia.norm().max(1.0) {
        return Err(ValidationError::new(format!("{ctx}.inertia"), "must be symmetric"));
    }
    let eig = inertia.symmetric_eigenvalues();
    let mut moments = [eig[0], eig[1], eig[2]];
    moments.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let scale = moments[2].abs().max(1e-12);
    if moments[0] < -1e-9 * scale {
        return Err(ValidationError::new(
            format!("{ctx}.inertia"),
            "must be positive semi-definite",
        ));
    }
    // Principal moments of a real mass distribution satisfy the triangle
    // inequality: each moment is at most the sum of the other two.
    if moments[2] > moments[0] + moments[1] + 1e-9 * scale {
        return Err(ValidationError::new(
            format!("{ctx}.inertia"),
            format!(
                "principal moments violate the triangle inequality ({:.3e} > {:.3e} + {:.3e})",
                moments[2], moments[0], moments[1]
            ),
        ));
    }
    Ok(())
}

// ── file loading ─────────────────────────────────────────────────────────

/// Parses and validates a model from structured text.
pub fn load_model(text: &str) -> Result<RobotModel, ModelError> {
    let doc = Document::parse(text)?;
    Ok(interpret(&doc)?)
}

/// Reads, parses, and validates a model file.
pub fn load_model_file(path: impl AsRef<Path>) -> Result<RobotModel, ModelError> {
    let text = std::fs::read_to_string(path)?;
    load_model(&text)
}

/// The bundled desk-scale 7-DoF reference arm (10 wire routes).
pub fn saqiel_ref_text() -> &'static str {
    include_str!("../../../models/saqiel_ref.model")
}

/// Loads the bundled reference arm.
pub fn saqiel_ref() -> RobotModel {
    load_model(saqiel_ref_text()).expect("bundled reference model must validate")
}

pub(crate) fn interpret(doc: &Document) -> Result<RobotModel, ValidationError> {
    let mut name = "unnamed".to_string();
    let mut gravity = Vector3::new(0.0, 0.0, -9.81);
    let mut fully_actuated = false;
    let mut tension_ceiling = None;

    if let Some(sec) = doc.section("model") {
        check_keys(sec, &["name", "gravity", "fully_actuated", "tension_ceiling"])?;
        if let Some(v) = sec.get("name") {
            name = want_text(sec, "name", v)?.to_string();
        }
        if let Some(v) = sec.get("gravity") {
            gravity = want_vec3(sec, "gravity", v)?;
        }
        if let Some(v) = sec.get("fully_actuated") {
            fully_actuated = want_bool(sec, "fully_actuated", v)?;
        }
        if let Some(v) = sec.get("tension_ceiling") {
            tension_ceiling = Some(want_number(sec, "tension_ceiling", v)?);
        }
    }

    let mut links = Vec::new();
    let mut joints = Vec::new();
    let mut routes = Vec::new();

    for section in &doc.sections {
        match section.path.first().map(String::as_str) {
            Some("model") => {}
            Some("link") if section.path.len() == 2 => {
                links.push(interpret_link(section)?);
            }
            Some("joint") if section.path.len() == 2 => {
                joints.push(interpret_joint(section)?);
            }
            Some("route") if section.path.len() == 2 => {
                routes.push(interpret_route(doc, section)?);
            }
            // Segment sections are consumed by their parent route.
            Some("route") if section.path.len() == 4 && section.path[2] == "segment" => {}
            _ => {
                return Err(ValidationError::new(
                    section.path_string(),
                    "unknown section (expected model, link.*, joint.*, route.* or route.*.segment.*)",
                ));
            }
        }
    }

    RobotModel::from_parts(name, links, joints, routes, gravity, fully_actuated, tension_ceiling)
}

fn interpret_link(sec: &Section) -> Result<LinkSpec, ValidationError> {
    let ctx = sec.path_string();
    check_keys(sec, &["mass", "com", "inertia"])?;
    let name = sec.path[1].clone();
    let mass = match sec.get("mass") {
        Some(v) => want_number(sec, "mass", v)?,
        None => 0.0,
    };
    let com = match sec.get("com") {
        Some(v) => want_vec3(sec, "com", v)?,
        None => Vector3::zeros(),
    };
    let inertia = match sec.get("inertia") {
        Some(v) => {
            let nums = v.as_numbers().ok_or_else(|| {
                ValidationError::new(format!("{ctx}.inertia"), "expected an array of numbers")
            })?;
            match nums.len() {
                3 => Matrix3::from_diagonal(&Vector3::new(nums[0], nums[1], nums[2])),
                6 => {
                    // [ixx, iyy, izz, ixy, ixz, iyz]
                    let (xx, yy, zz, xy, xz, yz) =
                        (nums[0], nums[1], nums[2], nums[3], nums[4], nums[5]);
                    Matrix3::new(xx, xy, xz, xy, yy, yz, xz, yz, zz)
                }
                n => {
                    return Err(ValidationError::new(
                        format!("{ctx}.inertia"),
                        format!("expected 3 (diagonal) or 6 (symmetric) entries, got {n}"),
                    ))
                }
            }
        }
        None => Matrix3::zeros(),
    };
    Ok(LinkSpec { name, mass, com, inertia })
}

fn interpret_joint(sec: &Section) -> Result<JointSpec, ValidationError> {
    let ctx = sec.path_string();
    check_keys(sec, &["parent", "child", "origin", "rpy", "axis", "limits"])?;
    let name = sec.path[1].clone();
    let parent = want_text(sec, "parent", require(sec, "parent")?)?.to_string();
    let child = want_text(sec, "child", require(sec, "child")?)?.to_string();
    let translation = match sec.get("origin") {
        Some(v) => want_vec3(sec, "origin", v)?,
        None => Vector3::zeros(),
    };
    let rotation = match sec.get("rpy") {
        Some(v) => {
            let rpy = want_vec3(sec, "rpy", v)?;
            UnitQuaternion::from_euler_angles(rpy.x, rpy.y, rpy.z)
        }
        None => UnitQuaternion::identity(),
    };
    let axis_raw = want_vec3(sec, "axis", require(sec, "axis")?)?;
    let norm = axis_raw.norm();
    if !(norm.is_finite() && (norm - 1.0).abs() <= 1e-6) {
        return Err(ValidationError::new(
            format!("{ctx}.axis"),
            format!("must be a unit vector, |axis| = {norm}"),
        ));
    }
    let limits_v = require(sec, "limits")?;
    let lims = limits_v.as_numbers().ok_or_else(|| {
        ValidationError::new(format!("{ctx}.limits"), "expected [lower, upper]")
    })?;
    if lims.len() != 2 {
        return Err(ValidationError::new(
            format!("{ctx}.limits"),
            format!("expected 2 entries, got {}", lims.len()),
        ));
    }
    Ok(JointSpec {
        name,
        parent,
        child,
        origin: Isometry3::from_parts(Translation3::from(translation), rotation),
        axis: Unit::new_normalize(axis_raw),
        limits: (lims[0], lims[1]),
    })
}

fn interpret_route(doc: &Document, sec: &Section) -> Result<WireRoute, ValidationError> {
    let ctx = sec.path_string();
    check_keys(
        sec,
        &["f_min", "f_max", "elasticity", "pulley_radius", "torque_constant", "winding_sign"],
    )?;
    let name = sec.path[1].clone();
    let get_num = |key: &str, default: f64| -> Result<f64, ValidationError> {
        match sec.get(key) {
            Some(v) => want_number(sec, key, v),
            None => Ok(default),
        }
    };
    let f_min = get_num("f_min", DEFAULT_F_MIN)?;
    let f_max = get_num("f_max", DEFAULT_F_MAX)?;
    let elasticity = get_num("elasticity", DEFAULT_ELASTICITY)?;
    let motor = MotorSpec {
        pulley_radius: get_num("pulley_radius", DEFAULT_PULLEY_RADIUS)?,
        torque_constant: get_num("torque_constant", DEFAULT_TORQUE_CONSTANT)?,
        winding_sign: get_num("winding_sign", 1.0)?,
    };

    // Child sections route.<name>.segment.<k>, k = 0..n contiguous.
    let prefix = ["route", name.as_str(), "segment"];
    let mut segs: Vec<(usize, &Section)> = doc
        .children(&prefix)
        .map(|(k, s)| {
            k.parse::<usize>().map(|i| (i, s)).map_err(|_| {
                ValidationError::new(s.path_string(), "segment index must be an integer")
            })
        })
        .collect::<Result<_, _>>()?;
    segs.sort_by_key(|(i, _)| *i);
    for (expect, (i, s)) in segs.iter().enumerate() {
        if *i != expect {
            return Err(ValidationError::new(
                s.path_string(),
                format!("segment indices must be contiguous from 0 (expected {expect}, got {i})"),
            ));
        }
    }

    let mut segments = Vec::with_capacity(segs.len());
    for (_, s) in &segs {
        segments.push(interpret_segment(s)?);
    }
    if segments.is_empty() {
        return Err(ValidationError::new(&ctx, "route needs at least one segment"));
    }
    Ok(WireRoute { name, segments, f_min, f_max, elasticity, motor })
}

fn interpret_segment(sec: &Section) -> Result<Segment, ValidationError> {
    let ctx = sec.path_string();
    let kind = want_text(sec, "type", require(sec, "type")?)?;
    match kind {
        "linear" => {
            check_keys(sec, &["type", "from_link", "from_point", "to_link", "to_point"])?;
            Ok(Segment::LinearSpan {
                from_link: want_text(sec, "from_link", require(sec, "from_link")?)?.to_string(),
                from_point: want_vec3(sec, "from_point", require(sec, "from_point")?)?,
                to_link: want_text(sec, "to_link", require(sec, "to_link")?)?.to_string(),
                to_point: want_vec3(sec, "to_point", require(sec, "to_point")?)?,
            })
        }
        "circular" => {
            check_keys(sec, &["type", "joint", "radius", "sign", "arc_offset"])?;
            Ok(Segment::CircularWrap {
                joint: want_text(sec, "joint", require(sec, "joint")?)?.to_string(),
                radius: want_number(sec, "radius", require(sec, "radius")?)?,
                sign: want_number(sec, "sign", require(sec, "sign")?)?,
                arc_offset: match sec.get("arc_offset") {
                    Some(v) => want_number(sec, "arc_offset", v)?,
                    None => 0.0,
                },
            })
        }
        other => Err(ValidationError::new(
            format!("{ctx}.type"),
            format!("unknown segment type `{other}` (expected \"linear\" or \"circular\")"),
        )),
    }
}

// ── serialization ────────────────────────────────────────────────────────

/// Serializes a model to the structured-text dialect. `load_model` on the
/// output reproduces the model field-for-field.
pub fn serialize_model(model: &RobotModel) -> String {
    use std::fmt::Write;
    let mut out = String::new();
    let vec3 = |v: &Vector3<f64>| format!("[{}, {}, {}]", v.x, v.y, v.z);

    writeln!(out, "[model]").unwrap();
    writeln!(out, "name = \"{}\"", model.name).unwrap();
    writeln!(out, "gravity = {}", vec3(&model.gravity)).unwrap();
    writeln!(out, "fully_actuated = {}", model.fully_actuated).unwrap();
    if let Some(c) = model.tension_ceiling {
        writeln!(out, "tension_ceiling = {c}").unwrap();
    }

    for link in &model.links {
        writeln!(out, "\n[link.{}]", link.name).unwrap();
        writeln!(out, "mass = {}", link.mass).unwrap();
        writeln!(out, "com = {}", vec3(&link.com)).unwrap();
        let i = &link.inertia;
        writeln!(
            out,
            "inertia = [{}, {}, {}, {}, {}, {}]",
            i[(0, 0)],
            i[(1, 1)],
            i[(2, 2)],
            i[(0, 1)],
            i[(0, 2)],
            i[(1, 2)]
        )
        .unwrap();
    }

    for joint in &model.joints {
        writeln!(out, "\n[joint.{}]", joint.name).unwrap();
        writeln!(out, "parent = \"{}\"", joint.parent).unwrap();
        writeln!(out, "child = \"{}\"", joint.child).unwrap();
        writeln!(out, "origin = {}", vec3(&joint.origin.translation.vector)).unwrap();
        let (r, p, y) = joint.origin.rotation.euler_angles();
        if r != 0.0 || p != 0.0 || y != 0.0 {
            writeln!(out, "rpy = [{r}, {p}, {y}]").unwrap();
        }
        writeln!(out, "axis = {}", vec3(joint.axis.as_ref())).unwrap();
        writeln!(out, "limits = [{}, {}]", joint.limits.0, joint.limits.1).unwrap();
    }

    for route in &model.routes {
        writeln!(out, "\n[route.{}]", route.name).unwrap();
        writeln!(out, "f_min = {}", route.f_min).unwrap();
        writeln!(out, "f_max = {}", route.f_max).unwrap();
        writeln!(out, "elasticity = {}", route.elasticity).unwrap();
        writeln!(out, "pulley_radius = {}", route.motor.pulley_radius).unwrap();
        writeln!(out, "torque_constant = {}", route.motor.torque_constant).unwrap();
        writeln!(out, "winding_sign = {}", route.motor.winding_sign).unwrap();
        for (k, seg) in route.segments.iter().enumerate() {
            writeln!(out, "\n[route.{}.segment.{}]", route.name, k).unwrap();
            match seg {
                Segment::LinearSpan { from_link, from_point, to_link, to_point } => {
                    writeln!(out, "type = \"linear\"").unwrap();
                    writeln!(out, "from_link = \"{from_link}\"").unwrap();
                    writeln!(out, "from_point = {}", vec3(from_point)).unwrap();
                    writeln!(out, "to_link = \"{to_link}\"").unwrap();
                    writeln!(out, "to_point = {}", vec3(to_point)).unwrap();
                }
                Segment::CircularWrap { joint, radius, sign, arc_offset } => {
                    writeln!(out, "type = \"circular\"").unwrap();
                    writeln!(out, "joint = \"{joint}\"").unwrap();
                    writeln!(out, "radius = {radius}").unwrap();
                    writeln!(out, "sign = {sign}").unwrap();
                    writeln!(out, "arc_offset = {arc_offset}").unwrap();
                }
            }
        }
    }
    out
}

// ── interpretation helpers ───────────────────────────────────────────────

pub(crate) fn check_keys(sec: &Section, allowed: &[&str]) -> Result<(), ValidationError> {
    for key in sec.keys() {
        if !allowed.contains(&key) {
            return Err(ValidationError::new(
                sec.path_string(),
                format!("unknown key `{key}` (allowed: {})", allowed.join(", ")),
            ));
        }
    }
    Ok(())
}

pub(crate) fn require<'a>(sec: &'a Section, key: &str) -> Result<&'a Value, ValidationError> {
    sec.get(key)
        .ok_or_else(|| ValidationError::new(sec.path_string(), format!("missing required key `{key}`")))
}

pub(crate) fn want_number(sec: &Section, key: &str, v: &Value) -> Result<f64, ValidationError> {
    v.as_number().ok_or_else(|| {
        ValidationError::new(
            format!("{}.{key}", sec.path_string()),
            format!("expected a number, got {}", v.type_name()),
        )
    })
}

pub(crate) fn want_bool(sec: &Section, key: &str, v: &Value) -> Result<bool, ValidationError> {
    v.as_bool().ok_or_else(|| {
        ValidationError::new(
            format!("{}.{key}", sec.path_string()),
            format!("expected true or false, got {}", v.type_name()),
        )
    })
}

pub(crate) fn want_text<'a>(sec: &Section, key: &str, v: &'a Value) -> Result<&'a str, ValidationError> {
    v.as_text().ok_or_else(|| {
        ValidationError::new(
            format!("{}.{key}", sec.path_string()),
            format!("expected a quoted string, got {}", v.type_name()),
        )
    })
}

pub(crate) fn want_numbers(sec: &Section, key: &str, v: &Value) -> Result<Vec<f64>, ValidationError> {
    v.as_numbers().ok_or_else(|| {
        ValidationError::new(
            format!("{}.{key}", sec.path_string()),
            format!("expected an array of numbers, got {}", v.type_name()),
        )
    })
}

pub(crate) fn want_vec3(sec: &Section, key: &str, v: &Value) -> Result<Vector3<f64>, ValidationError> {
    let nums = v.as_numbers().ok_or_else(|| {
        ValidationError::new(format!("{}.{key}", sec.path_string()), "expected a 3-element array")
    })?;
    if nums.len() != 3 {
        return Err(ValidationError::new(
            format!("{}.{key}", sec.path_string()),
            format!("expected 3 elements, got {}", nums.len()),
        ));
    }
    Ok(Vector3::new(nums[0], nums[1], nums[2]))
}
