//! Joint-space and operational-space rigid-body dynamics.
//!
//! Joint-space convention: `M(q)·q̈ + h(q, q̇) + g(q) = τ`, with `h` the
//! Coriolis/centrifugal bias and `g` the gravity load. The inertia matrix
//! comes from a composite-rigid-body pass, `h` and `g` from recursive
//! Newton–Euler passes; both work in world coordinates. Chains here are
//! short (N ≤ 10), so dense factorizations are used throughout.

use nalgebra::{DMatrix, DVector, Isometry3, Matrix2, Matrix3, Point3, Unit, Vector3};
use thiserror::Error;

use crate::kinematics::{self, KinematicsError};
use crate::model::{RobotModel, SafetyParams};

/// Condition-number ceiling beyond which the inertia matrix is reported
/// singular instead of being factorized.
pub const INERTIA_CONDITION_LIMIT: f64 = 1e12;

#[derive(Debug, Clone, Error)]
pub enum DynamicsError {
    #[error(transparent)]
    Kinematics(#[from] KinematicsError),
    #[error("expected a {expected}-dimensional vector, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("inertia matrix is numerically singular (condition estimate {cond:.3e})")]
    SingularInertia { cond: f64 },
    #[error("task point has fewer than 3 independent motion directions at this configuration")]
    SingularConfiguration,
    #[error("direction vector must be non-zero and finite")]
    BadDirection,
}

/// A pure force applied at a point rigidly attached to a link
/// (`point` in link coordinates, `force` in world coordinates).
#[derive(Debug, Clone, PartialEq)]
pub struct ExternalForce {
    pub link: usize,
    pub point: Vector3<f64>,
    pub force: Vector3<f64>,
}

/// Directional effective mass at a task point. When the point cannot move
/// along the queried direction the mass is unbounded: `kg` is `+∞` and
/// `constrained_direction` is set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffectiveMass {
    pub kg: f64,
    pub constrained_direction: bool,
}

/// An orthonormal pair of in-plane directions used by the effective-mass
/// field sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Plane {
    pub u: Unit<Vector3<f64>>,
    pub v: Unit<Vector3<f64>>,
}

impl Plane {
    /// Builds a plane basis, orthonormalizing `v` against `u`.
    pub fn new(u: Vector3<f64>, v: Vector3<f64>) -> Result<Plane, DynamicsError> {
        if !(u.iter().all(|x| x.is_finite()) && u.norm() > 1e-12) {
            return Err(DynamicsError::BadDirection);
        }
        let u = Unit::new_normalize(u);
        let v_perp = v - u.as_ref() * u.dot(&v);
        if !(v_perp.iter().all(|x| x.is_finite()) && v_perp.norm() > 1e-12) {
            return Err(DynamicsError::BadDirection);
        }
        Ok(Plane { u, v: Unit::new_normalize(v_perp) })
    }

    /// The world x–z plane.
    pub fn xz() -> Plane {
        Plane {
            u: Unit::new_unchecked(Vector3::x()),
            v: Unit::new_unchecked(Vector3::z()),
        }
    }
}

/// One sample of the effective-mass field. `coords` is the task-point
/// position expressed in the plane basis. Postures where the point has no
/// in-plane mobility at all are flagged `singular` (with `m_u_max = +∞`)
/// and should be skipped by consumers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldSample {
    pub coords: [f64; 2],
    pub m_u_max: f64,
    pub singular: bool,
}

fn check_vec(model: &RobotModel, v: &[f64]) -> Result<(), DynamicsError> {
    if v.len() != model.n_joints() {
        return Err(DynamicsError::DimensionMismatch { expected: model.n_joints(), got: v.len() });
    }
    if !v.iter().all(|x| x.is_finite()) {
        return Err(DynamicsError::Kinematics(KinematicsError::NonFinite));
    }
    Ok(())
}

// ── composite-rigid-body inertia ─────────────────────────────────────────

/// Per-link world-frame mass data folded into composite subtree quantities:
/// total mass, first moment `h = Σ mᵢcᵢ`, and inertia about the world origin.
#[derive(Clone, Copy)]
struct Composite {
    m: f64,
    h: Vector3<f64>,
    i_o: Matrix3<f64>,
}

impl Composite {
    fn add(&mut self, other: &Composite) {
        self.m += other.m;
        self.h += other.h;
        self.i_o += other.i_o;
    }
}

fn link_composite(model: &RobotModel, fk: &[Isometry3<f64>], link: usize) -> Composite {
    let spec = &model.links[link];
    let c = fk[link].transform_point(&Point3::from(spec.com)).coords;
    let r = fk[link].rotation.to_rotation_matrix();
    let i_c = r * spec.inertia * r.transpose();
    let i_o = i_c + (Matrix3::identity() * c.norm_squared() - c * c.transpose()) * spec.mass;
    Composite { m: spec.mass, h: c * spec.mass, i_o }
}

/// Momentum of a composite body under a unit twist `(ω, v_o)` expressed at
/// the world origin: returns `(linear momentum, angular momentum about O)`.
fn composite_momentum(c: &Composite, omega: &Vector3<f64>, v_o: &Vector3<f64>) -> (Vector3<f64>, Vector3<f64>) {
    let p = v_o * c.m + omega.cross(&c.h);
    let l = c.i_o * omega + c.h.cross(v_o);
    (p, l)
}

/// Joint-space inertia matrix `M(q)` (N×N, symmetric positive definite for
/// models whose moving links all carry mass).
pub fn inertia_matrix(model: &RobotModel, q: &[f64]) -> Result<DMatrix<f64>, DynamicsError> {
    check_vec(model, q)?;
    let fk = kinematics::forward_kinematics_unchecked(model, q)?;
    Ok(inertia_matrix_with_fk(model, &fk))
}

pub(crate) fn inertia_matrix_with_fk(model: &RobotModel, fk: &[Isometry3<f64>]) -> DMatrix<f64> {
    let n = model.n_joints();
    let mut comp: Vec<Composite> = (0..model.n_links())
        .map(|l| link_composite(model, fk, l))
        .collect();
    // Leaf-to-root accumulation turns per-link data into subtree composites.
    for &link in model.topo_links().iter().rev() {
        if let Some(j) = model.link_parent_joint(link) {
            let parent = model.joint_parent_link(j);
            let c = comp[link];
            comp[parent].add(&c);
        }
    }

    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        let child = model.joint_child_link(i);
        let (o_i, a_i) = kinematics::joint_frame(model, fk, i);
        // Unit twist of joint i about its axis, expressed at the origin.
        let v_i = o_i.cross(&a_i);
        let (p, l) = composite_momentum(&comp[child], &a_i, &v_i);
        // Pair the composite momentum with the unit twist of every joint on
        // the root path of joint i (including itself).
        for &j in model.path_joints(child) {
            let (o_j, a_j) = kinematics::joint_frame(model, fk, j);
            let v_j = o_j.cross(&a_j);
            let mij = a_j.dot(&l) + v_j.dot(&p);
            m[(i, j)] = mij;
            m[(j, i)] = mij;
        }
    }
    m
}

// ── recursive Newton–Euler ───────────────────────────────────────────────

/// Inverse dynamics by world-frame Newton–Euler recursion. Gravity enters
/// through a fictitious root acceleration `a_root = −gravity`.
fn rnea(
    model: &RobotModel,
    fk: &[Isometry3<f64>],
    qdot: &[f64],
    qddot: &[f64],
    gravity: Option<&Vector3<f64>>,
) -> DVector<f64> {
    let n_links = model.n_links();
    let mut omega = vec![Vector3::zeros(); n_links];
    let mut alpha = vec![Vector3::zeros(); n_links];
    // Reference material point of each link (its frame origin) and the
    // acceleration of that point.
    let mut r_ref = vec![Vector3::zeros(); n_links];
    let mut a_ref = vec![Vector3::zeros(); n_links];
    a_ref[0] = gravity.map_or(Vector3::zeros(), |g| -g);

    for &link in model.topo_links() {
        let Some(j) = model.link_parent_joint(link) else { continue };
        let parent = model.joint_parent_link(j);
        let (o_j, axis) = kinematics::joint_frame(model, fk, j);
        let (w_p, al_p) = (omega[parent], alpha[parent]);
        let d = o_j - r_ref[parent];
        // Acceleration of the pivot point as a material point of the parent.
        let a_pivot = a_ref[parent] + al_p.cross(&d) + w_p.cross(&w_p.cross(&d));
        omega[link] = w_p + axis * qdot[j];
        alpha[link] = al_p + axis * qddot[j] + w_p.cross(&axis) * qdot[j];
        r_ref[link] = o_j;
        a_ref[link] = a_pivot;
    }

    // Net force and torque (about each link's reference point) transmitted
    // through each link's parent joint, accumulated leaf to root.
    let mut f_acc = vec![Vector3::zeros(); n_links];
    let mut n_acc = vec![Vector3::zeros(); n_links];
    for &link in model.topo_links().iter().rev() {
        let spec = &model.links[link];
        let c = fk[link].transform_point(&Point3::from(spec.com)).coords;
        let dc = c - r_ref[link];
        let a_com = a_ref[link] + alpha[link].cross(&dc) + omega[link].cross(&omega[link].cross(&dc));
        let r = fk[link].rotation.to_rotation_matrix();
        let i_w = r * spec.inertia * r.transpose();
        let force = a_com * spec.mass;
        let torque = i_w * alpha[link] + omega[link].cross(&(i_w * omega[link]));
        f_acc[link] += force;
        n_acc[link] += torque + dc.cross(&force);
        if let Some(j) = model.link_parent_joint(link) {
            let parent = model.joint_parent_link(j);
            let shift = r_ref[link] - r_ref[parent];
            let f = f_acc[link];
            let n = n_acc[link] + shift.cross(&f);
            f_acc[parent] += f;
            n_acc[parent] += n;
        }
    }

    let mut tau = DVector::zeros(model.n_joints());
    for j in 0..model.n_joints() {
        let child = model.joint_child_link(j);
        let (_, axis) = kinematics::joint_frame(model, fk, j);
        tau[j] = axis.dot(&n_acc[child]);
    }
    tau
}

/// Coriolis/centrifugal bias `h(q, q̇)`; zero at `q̇ = 0`.
pub fn bias_forces(model: &RobotModel, q: &[f64], qdot: &[f64]) -> Result<DVector<f64>, DynamicsError> {
    check_vec(model, q)?;
    check_vec(model, qdot)?;
    let fk = kinematics::forward_kinematics_unchecked(model, q)?;
    let zero = vec![0.0; model.n_joints()];
    Ok(rnea(model, &fk, qdot, &zero, None))
}

/// Gravity load `g(q)`: the joint torque that must be applied to hold the
/// configuration statically.
pub fn gravity_vector(model: &RobotModel, q: &[f64]) -> Result<DVector<f64>, DynamicsError> {
    check_vec(model, q)?;
    let fk = kinematics::forward_kinematics_unchecked(model, q)?;
    let zero = vec![0.0; model.n_joints()];
    Ok(rnea(model, &fk, &zero, &zero, Some(&model.gravity)))
}

/// Full inverse dynamics `τ = M(q)q̈ + h(q, q̇) + g(q)`.
pub fn inverse_dynamics(
    model: &RobotModel,
    q: &[f64],
    qdot: &[f64],
    qddot: &[f64],
) -> Result<DVector<f64>, DynamicsError> {
    check_vec(model, q)?;
    check_vec(model, qdot)?;
    check_vec(model, qddot)?;
    let fk = kinematics::forward_kinematics_unchecked(model, q)?;
    Ok(rnea(model, &fk, qdot, qddot, Some(&model.gravity)))
}

/// Forward dynamics: solves `M q̈ = τ + Σ Jᵀf − h − g` for `q̈`.
pub fn forward_dynamics(
    model: &RobotModel,
    q: &[f64],
    qdot: &[f64],
    tau: &DVector<f64>,
    wrenches: &[ExternalForce],
) -> Result<DVector<f64>, DynamicsError> {
    check_vec(model, q)?;
    check_vec(model, qdot)?;
    if tau.len() != model.n_joints() {
        return Err(DynamicsError::DimensionMismatch { expected: model.n_joints(), got: tau.len() });
    }
    let fk = kinematics::forward_kinematics_unchecked(model, q)?;
    let m = inertia_matrix_with_fk(model, &fk);
    // One Newton–Euler pass with zero q̈ yields h + g combined.
    let bias_and_gravity = rnea(model, &fk, qdot, &vec![0.0; model.n_joints()], Some(&model.gravity));
    let mut rhs = tau - bias_and_gravity;
    for w in wrenches {
        if w.link >= model.n_links() {
            return Err(DynamicsError::Kinematics(KinematicsError::UnknownLink(w.link)));
        }
        let jac = kinematics::point_jacobian(model, &fk, w.link, &w.point)?;
        rhs += jac.transpose() * w.force;
    }
    solve_spd(&m, &rhs)
}

/// Cholesky solve with an explicit conditioning guard.
fn solve_spd(m: &DMatrix<f64>, rhs: &DVector<f64>) -> Result<DVector<f64>, DynamicsError> {
    let eig = m.clone().symmetric_eigenvalues();
    let max = eig.max();
    let min = eig.min();
    if !(min > 0.0 && max / min <= INERTIA_CONDITION_LIMIT) {
        return Err(DynamicsError::SingularInertia {
            cond: if min > 0.0 { max / min } else { f64::INFINITY },
        });
    }
    let chol = m.clone().cholesky().ok_or(DynamicsError::SingularInertia { cond: max / min })?;
    Ok(chol.solve(rhs))
}

// ── operational-space quantities ─────────────────────────────────────────

/// Mobility of a task point: `A = J M⁻¹ Jᵀ` (3×3, positive semi-definite).
fn point_mobility(
    model: &RobotModel,
    fk: &[Isometry3<f64>],
    link: usize,
    point: &Vector3<f64>,
) -> Result<Matrix3<f64>, DynamicsError> {
    let jac = kinematics::point_jacobian(model, fk, link, point)?;
    let m = inertia_matrix_with_fk(model, fk);
    let eig = m.clone().symmetric_eigenvalues();
    let (max, min) = (eig.max(), eig.min());
    if !(min > 0.0 && max / min <= INERTIA_CONDITION_LIMIT) {
        return Err(DynamicsError::SingularInertia {
            cond: if min > 0.0 { max / min } else { f64::INFINITY },
        });
    }
    let chol = m.cholesky().ok_or(DynamicsError::SingularInertia { cond: max / min })?;
    let minv_jt = chol.solve(&jac.transpose());
    let a = &jac * minv_jt;
    // Symmetrize against round-off before spectral analysis downstream.
    let a3 = Matrix3::from_fn(|i, j| 0.5 * (a[(i, j)] + a[(j, i)]));
    Ok(a3)
}

/// Operational-space inertia `Λ_v = (J M⁻¹ Jᵀ)⁻¹` of a task point.
/// Errors with [`DynamicsError::SingularConfiguration`] when the point has
/// fewer than three independent motion directions.
pub fn operational_inertia(
    model: &RobotModel,
    q: &[f64],
    link: usize,
    point: &Vector3<f64>,
) -> Result<Matrix3<f64>, DynamicsError> {
    check_vec(model, q)?;
    let fk = kinematics::forward_kinematics_unchecked(model, q)?;
    let a = point_mobility(model, &fk, link, point)?;
    let eig = a.symmetric_eigenvalues();
    let (max, min) = (eig.max(), eig.min());
    if !(min > 1e-12 * max.max(1e-300)) {
        return Err(DynamicsError::SingularConfiguration);
    }
    a.try_inverse().ok_or(DynamicsError::SingularConfiguration)
}

/// Directional effective mass `m_u = 1 / (uᵀ J M⁻¹ Jᵀ u)` at a task point.
/// Unlike [`operational_inertia`] this is defined at reduced-mobility
/// configurations; a direction the point cannot move along yields the `+∞`
/// sentinel with `constrained_direction` set.
pub fn effective_mass(
    model: &RobotModel,
    q: &[f64],
    link: usize,
    point: &Vector3<f64>,
    direction: &Vector3<f64>,
) -> Result<EffectiveMass, DynamicsError> {
    check_vec(model, q)?;
    if !(direction.iter().all(|x| x.is_finite()) && direction.norm() > 1e-12) {
        return Err(DynamicsError::BadDirection);
    }
    let fk = kinematics::forward_kinematics_unchecked(model, q)?;
    let a = point_mobility(model, &fk, link, point)?;
    let u = direction / direction.norm();
    let mobility = (u.transpose() * a * u)[(0, 0)];
    let scale = a.norm().max(1e-300);
    if mobility <= 1e-12 * scale {
        Ok(EffectiveMass { kg: f64::INFINITY, constrained_direction: true })
    } else {
        Ok(EffectiveMass { kg: 1.0 / mobility, constrained_direction: false })
    }
}

/// Sweeps postures and reports, for each, the maximum effective mass over
/// all in-plane directions the point can actually move along (the inverse
/// of the smallest non-degenerate principal mobility of the 2×2 restriction
/// of `J M⁻¹ Jᵀ` to the plane). Runs on the current rayon thread pool.
pub fn effective_mass_field(
    model: &RobotModel,
    postures: &[Vec<f64>],
    link: usize,
    point: &Vector3<f64>,
    plane: &Plane,
) -> Result<Vec<FieldSample>, DynamicsError> {
    use rayon::prelude::*;
    postures
        .par_iter()
        .map(|q| {
            check_vec(model, q)?;
            let fk = kinematics::forward_kinematics_unchecked(model, q)?;
            let a = point_mobility(model, &fk, link, point)?;
            let p = fk[link].transform_point(&Point3::from(*point)).coords;
            let coords = [p.dot(&plane.u), p.dot(&plane.v)];
            let b = Matrix2::new(
                plane.u.dot(&(a * plane.u.as_ref())),
                plane.u.dot(&(a * plane.v.as_ref())),
                plane.v.dot(&(a * plane.u.as_ref())),
                plane.v.dot(&(a * plane.v.as_ref())),
            );
            let b = Matrix2::new(
                b[(0, 0)],
                0.5 * (b[(0, 1)] + b[(1, 0)]),
                0.5 * (b[(0, 1)] + b[(1, 0)]),
                b[(1, 1)],
            );
            let eig = b.symmetric_eigenvalues();
            let (hi, lo) = (eig.max(), eig.min());
            if hi <= 1e-14 {
                // No in-plane mobility at all: posture is singular.
                return Ok(FieldSample { coords, m_u_max: f64::INFINITY, singular: true });
            }
            // A rank-one restriction means the point moves on a line inside
            // the plane; the only meaningful mass is along that line.
            let m_u_max = if lo <= 1e-8 * hi { 1.0 / hi } else { 1.0 / lo };
            Ok(FieldSample { coords, m_u_max, singular: false })
        })
        .collect()
}

/// Kinetic energy `½ q̇ᵀ M(q) q̇`.
pub fn kinetic_energy(model: &RobotModel, q: &[f64], qdot: &[f64]) -> Result<f64, DynamicsError> {
    check_vec(model, q)?;
    check_vec(model, qdot)?;
    let m = inertia_matrix(model, q)?;
    let qd = DVector::from_row_slice(qdot);
    Ok(0.5 * (qd.transpose() * m * qd)[(0, 0)])
}

/// Gravitational potential energy `−Σ mᵢ g·cᵢ` (zero reference at the
/// world origin).
pub fn potential_energy(model: &RobotModel, q: &[f64]) -> Result<f64, DynamicsError> {
    check_vec(model, q)?;
    let fk = kinematics::forward_kinematics_unchecked(model, q)?;
    Ok(model
        .links
        .iter()
        .enumerate()
        .map(|(l, spec)| {
            let c = fk[l].transform_point(&Point3::from(spec.com)).coords;
            -spec.mass * model.gravity.dot(&c)
        })
        .sum())
}

/// Total mechanical energy; conserved by an unforced, undamped chain.
pub fn total_energy(model: &RobotModel, q: &[f64], qdot: &[f64]) -> Result<f64, DynamicsError> {
    Ok(kinetic_energy(model, q, qdot)? + potential_energy(model, q)?)
}

/// Upper bound on the transient contact force between a moving arm of
/// effective mass `m_u` and an obstacle: the two masses join through the
/// contact stiffness, so `F = sqrt(μ K_H)·v` with reduced mass
/// `μ = m_u·M_H / (m_u + M_H)`. Accepts the `+∞` effective-mass sentinel,
/// for which the bound becomes `sqrt(M_H·K_H)·v` exactly.
pub fn max_contact_force(safety: &SafetyParams, m_u: f64) -> Result<f64, DynamicsError> {
    if m_u.is_nan() || m_u <= 0.0 {
        return Err(DynamicsError::BadDirection);
    }
    let reduced = if m_u.is_infinite() {
        safety.m_h
    } else {
        m_u * safety.m_h / (m_u + safety.m_h)
    };
    Ok((reduced * safety.k_h).sqrt() * safety.v_rel)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::model::load_model;
    use approx::assert_relative_eq;
    use nalgebra::Rotation3;

    #[test]
    fn pendulum_inertia_is_ml_squared() {
        let model = load_model(fixtures::PENDULUM).unwrap();
        let m = inertia_matrix(&model, &[0.4]).unwrap();
        assert_relative_eq!(m[(0, 0)], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn planar2_inertia_hand_check() {
        let model = load_model(fixtures::PLANAR2).unwrap();
        let m = inertia_matrix(&model, &[0.0, 0.0]).unwrap();
        assert_relative_eq!(m[(0, 0)], 5.0, epsilon = 1e-12);
        assert_relative_eq!(m[(0, 1)], 2.0, epsilon = 1e-12);
        assert_relative_eq!(m[(1, 0)], 2.0, epsilon = 1e-12);
        assert_relative_eq!(m[(1, 1)], 1.0, epsilon = 1e-12);
    }

    /// Kinetic-energy oracle: q̇ᵀM(q)q̇ must equal 2·KE with link velocities
    /// obtained by finite differences of the forward kinematics.
    #[test]
    fn inertia_matches_kinetic_energy() {
        let model = load_model(fixtures::SPATIAL3).unwrap();
        let q = [0.5, -0.8, 1.1];
        let qdot = [0.7, -0.4, 0.9];
        let m = inertia_matrix(&model, &q).unwrap();
        let qd = DVector::from_row_slice(&qdot);
        let quadratic = (qd.transpose() * &m * &qd)[(0, 0)];

        let eps = 1e-6;
        let shift = |s: f64| -> Vec<f64> {
            q.iter().zip(&qdot).map(|(qi, di)| qi + s * di).collect()
        };
        let fk_p = kinematics::forward_kinematics_unchecked(&model, &shift(eps)).unwrap();
        let fk_m = kinematics::forward_kinematics_unchecked(&model, &shift(-eps)).unwrap();
        let fk_0 = kinematics::forward_kinematics_unchecked(&model, &q).unwrap();
        let mut ke = 0.0;
        for (l, spec) in model.links.iter().enumerate() {
            if spec.mass == 0.0 && spec.inertia.norm() == 0.0 {
                continue;
            }
            let cp = fk_p[l].transform_point(&Point3::from(spec.com)).coords;
            let cm = fk_m[l].transform_point(&Point3::from(spec.com)).coords;
            let v = (cp - cm) / (2.0 * eps);
            let rp = Rotation3::from(fk_p[l].rotation);
            let rm = Rotation3::from(fk_m[l].rotation);
            // ω from the skew part of the rotation increment; the
            // axis-angle route loses half the digits at angles ~1e-6.
            let dr = (rp * rm.inverse()).into_inner();
            let w = Vector3::new(
                dr[(2, 1)] - dr[(1, 2)],
                dr[(0, 2)] - dr[(2, 0)],
                dr[(1, 0)] - dr[(0, 1)],
            ) / (4.0 * eps);
            let r0 = Rotation3::from(fk_0[l].rotation);
            let i_w = r0 * spec.inertia * r0.inverse();
            ke += 0.5 * spec.mass * v.norm_squared() + 0.5 * w.dot(&(i_w * w));
        }
        assert_relative_eq!(quadratic, 2.0 * ke, max_relative = 1e-9);
    }

    #[test]
    fn bias_vanishes_at_rest() {
        let model = load_model(fixtures::SPATIAL3).unwrap();
        let h = bias_forces(&model, &[0.3, -0.5, 0.8], &[0.0, 0.0, 0.0]).unwrap();
        assert!(h.amax() < 1e-14);
    }

    #[test]
    fn single_joint_has_no_bias() {
        let model = load_model(fixtures::PENDULUM).unwrap();
        let h = bias_forces(&model, &[0.7], &[3.0]).unwrap();
        assert!(h.amax() < 1e-12);
    }

    /// Momentum-based oracle: h = Ṁq̇ − ½ ∂(q̇ᵀMq̇)/∂q with Ṁ and the
    /// gradient taken by finite differences of the inertia matrix.
    #[test]
    fn bias_matches_momentum_identity() {
        for (text, q, qdot) in [
            (fixtures::PLANAR2, vec![0.4, -0.9], vec![1.2, -0.7]),
            (fixtures::SPATIAL3, vec![0.5, -0.8, 1.1], vec![0.9, 0.6, -1.3]),
        ] {
            let model = load_model(text).unwrap();
            let n = model.n_joints();
            let h = bias_forces(&model, &q, &qdot).unwrap();
            let qd = DVector::from_row_slice(&qdot);
            let eps = 1e-6;
            let mut mdot = DMatrix::zeros(n, n);
            let mut grad = DVector::zeros(n);
            for k in 0..n {
                let mut qp = q.clone();
                qp[k] += eps;
                let mp = inertia_matrix(&model, &qp).unwrap();
                qp[k] = q[k] - eps;
                let mm = inertia_matrix(&model, &qp).unwrap();
                let dm = (mp - mm) / (2.0 * eps);
                grad[k] = (qd.transpose() * &dm * &qd)[(0, 0)];
                mdot += dm * qdot[k];
            }
            let oracle = &mdot * &qd - 0.5 * grad;
            let scale = oracle.amax().max(1.0);
            assert!((h - oracle).amax() / scale < 1e-5);
        }
    }

    #[test]
    fn gravity_of_horizontal_pendulum() {
        let model = load_model(fixtures::PENDULUM).unwrap();
        let g = gravity_vector(&model, &[std::f64::consts::FRAC_PI_2]).unwrap();
        assert_relative_eq!(g[0], 9.81, epsilon = 1e-12);
        let g0 = gravity_vector(&model, &[0.0]).unwrap();
        assert!(g0.amax() < 1e-12);
    }

    /// Gravity torque is the gradient of potential energy.
    #[test]
    fn gravity_matches_potential_gradient() {
        let model = load_model(fixtures::SPATIAL3).unwrap();
        let q = [0.6, -0.9, 0.4];
        let g = gravity_vector(&model, &q).unwrap();
        let potential = |qq: &[f64]| -> f64 {
            let fk = kinematics::forward_kinematics_unchecked(&model, qq).unwrap();
            model
                .links
                .iter()
                .enumerate()
                .map(|(l, spec)| {
                    let c = fk[l].transform_point(&Point3::from(spec.com)).coords;
                    -spec.mass * model.gravity.dot(&c)
                })
                .sum()
        };
        let eps = 1e-6;
        for j in 0..3 {
            let mut qp = q;
            qp[j] += eps;
            let vp = potential(&qp);
            qp[j] = q[j] - eps;
            let vm = potential(&qp);
            let fd = (vp - vm) / (2.0 * eps);
            assert_relative_eq!(g[j], fd, max_relative = 1e-6, epsilon = 1e-9);
        }
    }

    #[test]
    fn forward_dynamics_pendulum_release() {
        let model = load_model(fixtures::PENDULUM).unwrap();
        let qdd = forward_dynamics(
            &model,
            &[std::f64::consts::FRAC_PI_2],
            &[0.0],
            &DVector::zeros(1),
            &[],
        )
        .unwrap();
        assert_relative_eq!(qdd[0], -9.81, epsilon = 1e-12);
    }

    #[test]
    fn forward_dynamics_balances_inverse_dynamics() {
        let model = load_model(fixtures::SPATIAL3).unwrap();
        let q = [0.5, -0.8, 1.1];
        let qdot = [0.9, 0.6, -1.3];
        let qdd_ref = [1.4, -2.0, 0.7];
        let tau = inverse_dynamics(&model, &q, &qdot, &qdd_ref).unwrap();
        let qdd = forward_dynamics(&model, &q, &qdot, &tau, &[]).unwrap();
        for j in 0..3 {
            assert_relative_eq!(qdd[j], qdd_ref[j], max_relative = 1e-9, epsilon = 1e-10);
        }
    }

    #[test]
    fn forward_dynamics_holds_at_equilibrium_torque() {
        let model = load_model(fixtures::PLANAR2).unwrap();
        let q = [0.7, -0.4];
        let tau = gravity_vector(&model, &q).unwrap();
        let qdd = forward_dynamics(&model, &q, &[0.0, 0.0], &tau, &[]).unwrap();
        assert!(qdd.amax() < 1e-12);
    }

    #[test]
    fn external_force_enters_through_jacobian_transpose() {
        let model = load_model(fixtures::PENDULUM).unwrap();
        let q = [0.0];
        // Horizontal unit force at the bob: torque = L × F = 1 N·m.
        let w = ExternalForce {
            link: 1,
            point: Vector3::new(0.0, 0.0, -1.0),
            force: Vector3::new(1.0, 0.0, 0.0),
        };
        let qdd = forward_dynamics(&model, &q, &[0.0], &DVector::zeros(1), &[w]).unwrap();
        assert_relative_eq!(qdd[0].abs(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn operational_inertia_needs_full_rank() {
        let model = load_model(fixtures::PENDULUM).unwrap();
        let err = operational_inertia(&model, &[0.3], 1, &Vector3::new(0.0, 0.0, -1.0)).unwrap_err();
        assert!(matches!(err, DynamicsError::SingularConfiguration));
    }

    #[test]
    fn operational_inertia_spd_at_generic_posture() {
        let model = load_model(fixtures::SPATIAL3).unwrap();
        let lam = operational_inertia(&model, &[0.5, -0.8, 1.1], 3, &Vector3::new(0.0, 0.0, -0.15))
            .unwrap();
        let eig = lam.symmetric_eigenvalues();
        assert!(eig.min() > 0.0);
        assert_relative_eq!((lam - lam.transpose()).norm(), 0.0, epsilon = 1e-9);
    }

    #[test]
    fn pendulum_effective_mass_along_and_across() {
        let model = load_model(fixtures::PENDULUM).unwrap();
        let tip = Vector3::new(0.0, 0.0, -1.0);
        // Tangent to the swing circle at q = 0 is the x direction.
        let tangent = effective_mass(&model, &[0.0], 1, &tip, &Vector3::x()).unwrap();
        assert!(!tangent.constrained_direction);
        assert_relative_eq!(tangent.kg, 1.0, epsilon = 1e-12);
        // Along the rod the tip cannot move: unbounded mass sentinel.
        let radial = effective_mass(&model, &[0.0], 1, &tip, &Vector3::z()).unwrap();
        assert!(radial.constrained_direction);
        assert!(radial.kg.is_infinite());
    }

    #[test]
    fn effective_mass_is_direction_symmetric() {
        let model = load_model(fixtures::SPATIAL3).unwrap();
        let point = Vector3::new(0.0, 0.0, -0.15);
        let u = Vector3::new(0.3, -0.8, 0.52);
        let a = effective_mass(&model, &[0.5, -0.8, 1.1], 3, &point, &u).unwrap();
        let b = effective_mass(&model, &[0.5, -0.8, 1.1], 3, &point, &(-u)).unwrap();
        assert!((a.kg - b.kg).abs() < 1e-9);
    }

    /// Impulse oracle: a unit impulse along û changes the point velocity by
    /// J M⁻¹ Jᵀ û, so the speed gained along û must be 1/m_u.
    #[test]
    fn effective_mass_matches_impulse_response() {
        let model = load_model(fixtures::PLANAR2).unwrap();
        let q = [0.6, -0.9];
        let point = Vector3::new(0.0, 0.0, -1.0);
        let u = Vector3::new(0.8, 0.0, -0.6);
        let em = effective_mass(&model, &q, 2, &point, &u).unwrap();
        let fk = kinematics::forward_kinematics_unchecked(&model, &q).unwrap();
        let jac = kinematics::point_jacobian(&model, &fk, 2, &point).unwrap();
        let m = inertia_matrix(&model, &q).unwrap();
        let uhat = u / u.norm();
        let impulse = jac.transpose() * uhat;
        let dqd = m.cholesky().unwrap().solve(&impulse);
        let dv = jac * dqd;
        let gained = uhat.dot(&Vector3::new(dv[0], dv[1], dv[2]));
        assert_relative_eq!(em.kg, 1.0 / gained, max_relative = 1e-6);
    }

    #[test]
    fn field_matches_direct_direction_sweep() {
        let model = load_model(fixtures::SPATIAL3).unwrap();
        let q = vec![0.5, -0.8, 1.1];
        let point = Vector3::new(0.0, 0.0, -0.15);
        let plane = Plane::xz();
        let field = effective_mass_field(&model, &[q.clone()], 3, &point, &plane).unwrap();
        assert_eq!(field.len(), 1);
        assert!(!field[0].singular);
        let mut best = 0.0_f64;
        for k in 0..360 {
            let th = (k as f64) * std::f64::consts::PI / 180.0;
            let u = plane.u.as_ref() * th.cos() + plane.v.as_ref() * th.sin();
            let em = effective_mass(&model, &q, 3, &point, &u).unwrap();
            if !em.constrained_direction {
                best = best.max(em.kg);
            }
        }
        assert_relative_eq!(field[0].m_u_max, best, max_relative = 1e-3);
    }

    #[test]
    fn field_reports_line_mass_for_pendulum() {
        let model = load_model(fixtures::PENDULUM).unwrap();
        let tip = Vector3::new(0.0, 0.0, -1.0);
        let postures = vec![vec![-0.4], vec![0.0], vec![0.7]];
        let field = effective_mass_field(&model, &postures, 1, &tip, &Plane::xz()).unwrap();
        for s in &field {
            assert!(!s.singular);
            // The tip moves on a circle: in-plane mobility is rank one and
            // the only physical mass is the point mass itself.
            assert_relative_eq!(s.m_u_max, 1.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn contact_force_symmetric_case() {
        let s = SafetyParams::new(1.0, 1.0, 1.0).unwrap();
        let f = max_contact_force(&s, 1.0).unwrap();
        assert_relative_eq!(f, 0.70711, epsilon = 1e-5);
    }

    #[test]
    fn contact_force_saturates_for_heavy_arm() {
        let s = SafetyParams::new(4.0, 1000.0, 0.5).unwrap();
        let f = max_contact_force(&s, f64::INFINITY).unwrap();
        assert_relative_eq!(f, (4.0 * 1000.0_f64).sqrt() * 0.5, epsilon = 1e-9);
        // Monotone in m_u and bounded by the saturation value.
        let mut prev = 0.0;
        for mu in [0.1, 0.5, 0.94, 2.6, 10.0, 1e6] {
            let fi = max_contact_force(&s, mu).unwrap();
            assert!(fi > prev);
            assert!(fi < f + 1e-12);
            prev = fi;
        }
    }

    #[test]
    fn lighter_arm_allows_faster_motion() {
        // Same obstacle, two arm masses: the lighter arm transmits a
        // strictly smaller peak force at equal approach speed.
        let s = SafetyParams::new(4.0, 2000.0, 1.0).unwrap();
        let light = max_contact_force(&s, 0.94).unwrap();
        let heavy = max_contact_force(&s, 2.6).unwrap();
        let expect_light = (0.94 * 4.0 / (0.94 + 4.0) * 2000.0_f64).sqrt();
        let expect_heavy = (2.6 * 4.0 / (2.6 + 4.0) * 2000.0_f64).sqrt();
        assert_relative_eq!(light, expect_light, epsilon = 1e-9);
        assert_relative_eq!(heavy, expect_heavy, epsilon = 1e-9);
        assert!(light / heavy < 1.0);
    }
}
