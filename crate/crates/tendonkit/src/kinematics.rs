//! Forward kinematics, point Jacobians, wire lengths, and the muscle
//! Jacobian `G(q) = ∂l/∂q`.
//!
//! `G` is an R×N matrix (R routes, N joints). A positive entry means the
//! wire lengthens as the joint angle increases, so a pulling tension `f ≥ 0`
//! produces joint torque `τ = −Gᵀ f`. Entries for joints a route never
//! crosses are exactly zero (structural sparsity), and rows of pure
//! circular wraps are configuration-independent.

use nalgebra::{DMatrix, DVector, Isometry3, Point3, Vector3};
use thiserror::Error;

use crate::model::{ResolvedSegment, RobotModel};

/// Default step for finite-difference length derivatives [rad].
pub const FD_EPS: f64 = 1e-6;

/// Tolerance added to joint limits by the checked forward kinematics.
pub const LIMIT_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Error)]
pub enum KinematicsError {
    #[error("expected a {expected}-dimensional vector, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("configuration contains a non-finite value")]
    NonFinite,
    #[error("joint `{joint}` position {value} outside limits [{lower}, {upper}]")]
    JointLimitViolation { joint: String, value: f64, lower: f64, upper: f64 },
    #[error("unknown link index {0}")]
    UnknownLink(usize),
    #[error("route `{route}` segment {segment}: span anchor points coincide")]
    DegenerateSpan { route: String, segment: usize },
}

fn check_q(model: &RobotModel, q: &[f64]) -> Result<(), KinematicsError> {
    if q.len() != model.n_joints() {
        return Err(KinematicsError::DimensionMismatch { expected: model.n_joints(), got: q.len() });
    }
    if !q.iter().all(|x| x.is_finite()) {
        return Err(KinematicsError::NonFinite);
    }
    Ok(())
}

/// World transform of every link at configuration `q`, enforcing joint
/// limits (±[`LIMIT_SLACK`] of slack).
pub fn forward_kinematics(
    model: &RobotModel,
    q: &[f64],
) -> Result<Vec<Isometry3<f64>>, KinematicsError> {
    check_q(model, q)?;
    for (j, joint) in model.joints.iter().enumerate() {
        let (lo, hi) = joint.limits;
        if q[j] < lo - LIMIT_SLACK || q[j] > hi + LIMIT_SLACK {
            return Err(KinematicsError::JointLimitViolation {
                joint: joint.name.clone(),
                value: q[j],
                lower: lo,
                upper: hi,
            });
        }
    }
    Ok(fk_inner(model, q))
}

/// World transform of every link without joint-limit enforcement. The
/// simulator uses this variant: a plant knocked past its limits must still
/// have well-defined kinematics.
pub fn forward_kinematics_unchecked(
    model: &RobotModel,
    q: &[f64],
) -> Result<Vec<Isometry3<f64>>, KinematicsError> {
    check_q(model, q)?;
    Ok(fk_inner(model, q))
}

fn fk_inner(model: &RobotModel, q: &[f64]) -> Vec<Isometry3<f64>> {
    let mut fk = vec![Isometry3::identity(); model.n_links()];
    for &link in model.topo_links() {
        if let Some(j) = model.link_parent_joint(link) {
            let joint = &model.joints[j];
            let parent = model.joint_parent_link(j);
            let spin = Isometry3::rotation(joint.axis.as_ref() * q[j]);
            fk[link] = fk[parent] * joint.origin * spin;
        }
    }
    fk
}

/// World position of the joint pivot and world direction of the joint axis,
/// read off precomputed link transforms.
pub(crate) fn joint_frame(
    model: &RobotModel,
    fk: &[Isometry3<f64>],
    joint: usize,
) -> (Vector3<f64>, Vector3<f64>) {
    // The child frame origin coincides with the joint pivot, and the axis is
    // invariant under the joint's own rotation.
    let child = model.joint_child_link(joint);
    let origin = fk[child].translation.vector;
    let axis = fk[child].rotation * model.joints[joint].axis.as_ref();
    (origin, axis)
}

/// Translational Jacobian (3×N) of a point rigidly attached to `link`
/// (`point` in link coordinates): column j is `axis_j × (p − o_j)` for every
/// joint j on the root path of `link`, zero elsewhere.
pub fn point_jacobian(
    model: &RobotModel,
    fk: &[Isometry3<f64>],
    link: usize,
    point: &Vector3<f64>,
) -> Result<DMatrix<f64>, KinematicsError> {
    if link >= model.n_links() {
        return Err(KinematicsError::UnknownLink(link));
    }
    let p = fk[link].transform_point(&Point3::from(*point)).coords;
    let mut jac = DMatrix::zeros(3, model.n_joints());
    for &j in model.path_joints(link) {
        let (origin, axis) = joint_frame(model, fk, j);
        let col = axis.cross(&(p - origin));
        jac.column_mut(j).copy_from(&col);
    }
    Ok(jac)
}

/// Total geometric length of every route [m].
pub fn wire_lengths(model: &RobotModel, q: &[f64]) -> Result<DVector<f64>, KinematicsError> {
    let fk = forward_kinematics_unchecked(model, q)?;
    wire_lengths_with_fk(model, q, &fk)
}

/// As [`wire_lengths`] but reusing link transforms computed by the caller.
pub fn wire_lengths_with_fk(
    model: &RobotModel,
    q: &[f64],
    fk: &[Isometry3<f64>],
) -> Result<DVector<f64>, KinematicsError> {
    let mut lengths = DVector::zeros(model.n_routes());
    for (i, route) in model.routes.iter().enumerate() {
        let mut total = 0.0;
        for (k, seg) in model.resolved_segments(i).iter().enumerate() {
            match seg {
                ResolvedSegment::Linear { from_link, from_point, to_link, to_point, .. } => {
                    let a = fk[*from_link].transform_point(&Point3::from(*from_point)).coords;
                    let b = fk[*to_link].transform_point(&Point3::from(*to_point)).coords;
                    let d = (b - a).norm();
                    if d < 1e-12 {
                        return Err(KinematicsError::DegenerateSpan {
                            route: route.name.clone(),
                            segment: k,
                        });
                    }
                    total += d;
                }
                ResolvedSegment::Wrap { joint, radius, sign, arc_offset } => {
                    total += arc_offset + sign * radius * q[*joint];
                }
            }
        }
        lengths[i] = total;
    }
    Ok(lengths)
}

/// Analytic muscle Jacobian `G(q) = ∂l/∂q` (R×N).
pub fn muscle_jacobian(model: &RobotModel, q: &[f64]) -> Result<DMatrix<f64>, KinematicsError> {
    let fk = forward_kinematics_unchecked(model, q)?;
    muscle_jacobian_with_fk(model, &fk)
}

/// As [`muscle_jacobian`] but reusing link transforms computed by the caller.
pub fn muscle_jacobian_with_fk(
    model: &RobotModel,
    fk: &[Isometry3<f64>],
) -> Result<DMatrix<f64>, KinematicsError> {
    let mut g = DMatrix::zeros(model.n_routes(), model.n_joints());
    for (i, route) in model.routes.iter().enumerate() {
        for (k, seg) in model.resolved_segments(i).iter().enumerate() {
            match seg {
                ResolvedSegment::Linear { from_link, from_point, to_link, to_point, crossed } => {
                    let a = fk[*from_link].transform_point(&Point3::from(*from_point)).coords;
                    let b = fk[*to_link].transform_point(&Point3::from(*to_point)).coords;
                    let d = b - a;
                    let len = d.norm();
                    if len < 1e-12 {
                        return Err(KinematicsError::DegenerateSpan {
                            route: route.name.clone(),
                            segment: k,
                        });
                    }
                    let u = d / len;
                    // Only joints between the two anchor links move the far
                    // anchor relative to the near one; joints above both
                    // rotate the whole span rigidly and change nothing.
                    for &j in crossed {
                        let (origin, axis) = joint_frame(model, fk, j);
                        g[(i, j)] += u.dot(&axis.cross(&(b - origin)));
                    }
                }
                ResolvedSegment::Wrap { joint, radius, sign, .. } => {
                    g[(i, *joint)] += sign * radius;
                }
            }
        }
    }
    Ok(g)
}

/// Central-difference muscle Jacobian: independent oracle for
/// [`muscle_jacobian`]. `eps` defaults to [`FD_EPS`] when non-positive.
pub fn muscle_jacobian_fd(
    model: &RobotModel,
    q: &[f64],
    eps: f64,
) -> Result<DMatrix<f64>, KinematicsError> {
    check_q(model, q)?;
    let eps = if eps > 0.0 { eps } else { FD_EPS };
    let mut g = DMatrix::zeros(model.n_routes(), model.n_joints());
    let mut qp = q.to_vec();
    for j in 0..model.n_joints() {
        qp[j] = q[j] + eps;
        let lp = wire_lengths(model, &qp)?;
        qp[j] = q[j] - eps;
        let lm = wire_lengths(model, &qp)?;
        qp[j] = q[j];
        let col = (lp - lm) / (2.0 * eps);
        g.column_mut(j).copy_from(&col);
    }
    Ok(g)
}
