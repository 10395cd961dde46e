//! Reference-trajectory realization.
//!
//! Whatever the declaration (posture hold, joint waypoints, task-space
//! circle), the trajectory is materialized as a per-control-tick table of
//! [`Reference`] values before the run starts, so the closed loop just
//! indexes into it. The task-space circle is realized by converging a
//! damped least-squares inverse-kinematics iteration onto the analytic
//! path point at every control tick (warm-started from the previous
//! tick); joint velocities and accelerations come from central
//! differences of the generated joint-position profile.

use nalgebra::{DVector, Matrix3, Vector3};

use crate::controller::Reference;
use crate::kinematics;
use crate::model::RobotModel;
use crate::sim::scenario::ReferenceSpec;
use crate::sim::SimError;

/// Damping of the differential-IK pseudo-inverse (m-equivalent units).
const IK_DAMPING: f64 = 0.05;
/// Per-tick IK polish: stop once the task error is below this (meters).
const IK_TOL: f64 = 1e-10;
/// Per-tick IK polish: iteration cap; joint-limit clamping can leave the
/// target unreachable, in which case the closest clamped posture is kept.
const IK_MAX_ITERS: usize = 60;

/// Quintic smoothstep: C² ramp with zero velocity/acceleration at both
/// ends. Returns (value, first, second derivative) with respect to `s`.
fn smoothstep(s: f64) -> (f64, f64, f64) {
    if s <= 0.0 {
        (0.0, 0.0, 0.0)
    } else if s >= 1.0 {
        (1.0, 0.0, 0.0)
    } else {
        let (s2, s3) = (s * s, s * s * s);
        (
            s3 * (10.0 - 15.0 * s + 6.0 * s2),
            30.0 * s2 * (1.0 - 2.0 * s + s2),
            60.0 * s * (1.0 - 3.0 * s + 2.0 * s2),
        )
    }
}

/// Integral of the quintic smoothstep over `[0, s]`; equals `s − 1/2` for
/// `s ≥ 1`, so a full ramp "loses" exactly half its width of travel.
fn smoothstep_integral(s: f64) -> f64 {
    if s <= 0.0 {
        0.0
    } else if s >= 1.0 {
        s - 0.5
    } else {
        let s4 = s * s * s * s;
        s4 * (2.5 - 3.0 * s + s * s)
    }
}

/// Circle phase profile: ramps from rest over `lead`, holds the nominal
/// rate, then ramps back to rest so that the total phase is exactly
/// `phase_total`. Both ramps are quintic, so the profile is C².
fn circle_phase(t: f64, omega: f64, phase_total: f64, lead: f64) -> f64 {
    if lead <= 0.0 {
        return (omega * t).min(phase_total);
    }
    // A full ramp sweeps ω·lead/2 of phase; shrink the ramps when the arc
    // is too short to fit both.
    let lead = lead.min(phase_total / omega);
    let t_end = phase_total / omega + lead;
    if t <= lead {
        omega * lead * smoothstep_integral(t / lead)
    } else if t < t_end - lead {
        omega * (lead * 0.5 + (t - lead))
    } else if t < t_end {
        phase_total - omega * lead * smoothstep_integral((t_end - t) / lead)
    } else {
        phase_total
    }
}

/// A reference trajectory sampled at the control rate.
#[derive(Debug, Clone)]
pub struct ReferenceTrajectory {
    ticks: Vec<Reference>,
    /// Task-space target per tick: the analytic path point for task-space
    /// references, the end effector's position under `q_ref` otherwise.
    task: Vec<Vector3<f64>>,
}

impl ReferenceTrajectory {
    /// Materializes `spec` over `[0, duration]` at `control_rate` Hz. The
    /// end effector (for task-space references) is `ee = (link, point)`.
    pub fn generate(
        model: &RobotModel,
        spec: &ReferenceSpec,
        ee: (usize, Vector3<f64>),
        duration: f64,
        control_rate: f64,
    ) -> Result<ReferenceTrajectory, SimError> {
        let control_dt = 1.0 / control_rate;
        let n_ticks = (duration * control_rate).ceil() as usize + 2;
        let (ticks, task) = match spec {
            ReferenceSpec::Hold { q } => {
                let ldot = muscle_rates(model, q, &vec![0.0; model.n_joints()])?;
                let r = Reference {
                    q_ref: q.clone(),
                    qdot_ref: vec![0.0; model.n_joints()],
                    qdd_ref: vec![0.0; model.n_joints()],
                    ldot_ref: ldot,
                };
                let p = ee_position(model, q, ee)?;
                (vec![r; n_ticks], vec![p; n_ticks])
            }
            ReferenceSpec::JointKnots { times, knots } => {
                let mut ticks = Vec::with_capacity(n_ticks);
                let mut task = Vec::with_capacity(n_ticks);
                for k in 0..n_ticks {
                    let t = k as f64 * control_dt;
                    let (q, qd, qdd) = knot_state(times, knots, t);
                    let ldot = muscle_rates(model, &q, &qd)?;
                    task.push(ee_position(model, &q, ee)?);
                    ticks.push(Reference { q_ref: q, qdot_ref: qd, qdd_ref: qdd, ldot_ref: ldot });
                }
                (ticks, task)
            }
            ReferenceSpec::TaskCircle { q0, center, normal, diameter, period, laps, lead_in } => {
                circle_table(
                    model, ee, q0, *center, *normal, *diameter, *period, *laps, *lead_in,
                    n_ticks, control_dt,
                )?
            }
        };
        Ok(ReferenceTrajectory { ticks, task })
    }

    /// Reference for control tick `k`, clamped to the final tick.
    pub fn at_tick(&self, k: usize) -> &Reference {
        &self.ticks[k.min(self.ticks.len() - 1)]
    }

    /// Task-space target for control tick `k`, clamped to the final tick.
    pub fn task_position(&self, k: usize) -> [f64; 3] {
        let p = self.task[k.min(self.task.len() - 1)];
        [p.x, p.y, p.z]
    }

    pub fn len(&self) -> usize {
        self.ticks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ticks.is_empty()
    }
}

fn muscle_rates(model: &RobotModel, q: &[f64], qd: &[f64]) -> Result<Vec<f64>, SimError> {
    let g = kinematics::muscle_jacobian(model, q)?;
    let v = g * DVector::from_row_slice(qd);
    Ok(v.as_slice().to_vec())
}

fn ee_position(model: &RobotModel, q: &[f64], ee: (usize, Vector3<f64>)) -> Result<Vector3<f64>, SimError> {
    let fk = kinematics::forward_kinematics_unchecked(model, q)?;
    Ok(fk[ee.0].transform_point(&nalgebra::Point3::from(ee.1)).coords)
}

/// Position/velocity/acceleration of the knot interpolant at time `t`.
fn knot_state(times: &[f64], knots: &[Vec<f64>], t: f64) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let n = knots[0].len();
    let last = times.len() - 1;
    if t <= times[0] || times.len() == 1 {
        return (knots[0].clone(), vec![0.0; n], vec![0.0; n]);
    }
    if t >= times[last] {
        return (knots[last].clone(), vec![0.0; n], vec![0.0; n]);
    }
    let seg = times.windows(2).position(|w| t < w[1]).unwrap();
    let (t0, t1) = (times[seg], times[seg + 1]);
    let dt = t1 - t0;
    let (s, ds, dds) = smoothstep((t - t0) / dt);
    let mut q = vec![0.0; n];
    let mut qd = vec![0.0; n];
    let mut qdd = vec![0.0; n];
    for j in 0..n {
        let delta = knots[seg + 1][j] - knots[seg][j];
        q[j] = knots[seg][j] + s * delta;
        qd[j] = ds / dt * delta;
        qdd[j] = dds / (dt * dt) * delta;
    }
    (q, qd, qdd)
}

#[allow(clippy::too_many_arguments)]
fn circle_table(
    model: &RobotModel,
    ee: (usize, Vector3<f64>),
    q0: &[f64],
    center: Option<Vector3<f64>>,
    normal: Vector3<f64>,
    diameter: f64,
    period: f64,
    laps: f64,
    lead_in: f64,
    n_ticks: usize,
    control_dt: f64,
) -> Result<(Vec<Reference>, Vec<Vector3<f64>>), SimError> {
    let n = model.n_joints();
    let radius = 0.5 * diameter;
    let n_hat = normal / normal.norm();
    let seed = if n_hat.x.abs() < 0.9 { Vector3::x() } else { Vector3::y() };
    let e1 = {
        let v = seed.cross(&n_hat);
        v / v.norm()
    };
    let e2 = n_hat.cross(&e1);

    let fk0 = kinematics::forward_kinematics_unchecked(model, q0)?;
    let p0 = fk0[ee.0].transform_point(&nalgebra::Point3::from(ee.1)).coords;
    // Without an explicit center the circle passes through the initial end
    // effector position at phase zero, so tracking starts error-free.
    let center = center.unwrap_or(p0 - e1 * radius);

    let omega = std::f64::consts::TAU / period; // one lap per period
    let phase_limit = std::f64::consts::TAU * laps;

    let mut q = q0.to_vec();
    let mut positions: Vec<Vec<f64>> = Vec::with_capacity(n_ticks);
    let mut task = Vec::with_capacity(n_ticks);
    for k in 0..n_ticks {
        let t = k as f64 * control_dt;
        let phase = circle_phase(t, omega, phase_limit, lead_in);

        let x_des = center + (e1 * phase.cos() + e2 * phase.sin()) * radius;
        task.push(x_des);

        // Converge the warm-started posture onto the analytic path point:
        // damped least squares Δq = Jᵀ(JJᵀ + λ²I)⁻¹ (x_des − p), clamped to
        // the joint limits each step.
        for _ in 0..IK_MAX_ITERS {
            let fk = kinematics::forward_kinematics_unchecked(model, &q)?;
            let p = fk[ee.0].transform_point(&nalgebra::Point3::from(ee.1)).coords;
            let err = x_des - p;
            if err.norm() < IK_TOL {
                break;
            }
            let jac = kinematics::point_jacobian(model, &fk, ee.0, &ee.1)?;
            let jjt = &jac * jac.transpose();
            let damped =
                Matrix3::from_fn(|i, j| jjt[(i, j)]) + Matrix3::identity() * (IK_DAMPING * IK_DAMPING);
            let w = damped
                .lu()
                .solve(&err)
                .ok_or(crate::dynamics::DynamicsError::SingularConfiguration)?;
            let dq = jac.transpose() * w;
            for j in 0..n {
                let (lo, hi) = model.joints[j].limits;
                q[j] = (q[j] + dq[j]).clamp(lo, hi);
            }
        }

        positions.push(q.clone());
    }

    // Velocities and accelerations by central differences of the posture
    // table; the lead-in ramp keeps both near zero at the start.
    let diff = |table: &[Vec<f64>], k: usize| -> Vec<f64> {
        let prev = &table[k.saturating_sub(1)];
        let next = &table[(k + 1).min(n_ticks - 1)];
        let span = ((k + 1).min(n_ticks - 1) - k.saturating_sub(1)) as f64;
        if span > 0.0 {
            (0..n).map(|j| (next[j] - prev[j]) / (span * control_dt)).collect()
        } else {
            vec![0.0; n]
        }
    };
    let velocities: Vec<Vec<f64>> = (0..n_ticks).map(|k| diff(&positions, k)).collect();
    let mut ticks = Vec::with_capacity(n_ticks);
    for k in 0..n_ticks {
        let qdd = diff(&velocities, k);
        let ldot = muscle_rates(model, &positions[k], &velocities[k])?;
        ticks.push(Reference {
            q_ref: positions[k].clone(),
            qdot_ref: velocities[k].clone(),
            qdd_ref: qdd,
            ldot_ref: ldot,
        });
    }
    Ok((ticks, task))
}
