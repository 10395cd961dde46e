//! Trace recording, CSV serialization, and summary metrics.
//!
//! Traces serialize as CSV with a schema-version line (`# tendonkit-trace
//! v1`) followed by a header row with a fixed column order:
//!
//! ```text
//! t, q0..q{N-1}, qd0..qd{N-1}, f0..f{R-1},
//! ee_x, ee_y, ee_z, ee_vx, ee_vy, ee_vz,
//! refq0..refq{N-1}, ref_x, ref_y, ref_z,
//! qp_kkt, qp_iters, tau_res, events
//! ```
//!
//! Numbers are written with Rust's shortest round-trip float formatting,
//! so writing is deterministic and reading recovers exact values.

use std::fmt::Write as _;

use thiserror::Error;

pub const TRACE_SCHEMA: &str = "# tendonkit-trace v1";

#[derive(Debug, Clone, Error)]
pub enum TraceError {
    #[error("trace schema error: {0}")]
    Schema(String),
    #[error("trace line {line}: {message}")]
    Row { line: usize, message: String },
}

/// One sampled instant of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub t: f64,
    pub q: Vec<f64>,
    pub qdot: Vec<f64>,
    /// Tensions acting on the joints (post-transmission).
    pub f: Vec<f64>,
    pub ee_pos: [f64; 3],
    pub ee_vel: [f64; 3],
    pub q_ref: Vec<f64>,
    /// Task-space position implied by the reference posture.
    pub ref_pos: [f64; 3],
    pub qp_kkt: f64,
    pub qp_iters: usize,
    /// Norm of the QP torque-tracking residual.
    pub tau_res: f64,
    /// Cumulative count of events applied so far.
    pub events: usize,
}

/// A sampled run history with fixed joint/route counts.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trace {
    pub n_joints: usize,
    pub n_routes: usize,
    pub rows: Vec<TraceRow>,
}

impl Trace {
    pub fn new(n_joints: usize, n_routes: usize) -> Trace {
        Trace { n_joints, n_routes, rows: Vec::new() }
    }

    pub fn header(&self) -> String {
        let mut cols = vec!["t".to_string()];
        cols.extend((0..self.n_joints).map(|j| format!("q{j}")));
        cols.extend((0..self.n_joints).map(|j| format!("qd{j}")));
        cols.extend((0..self.n_routes).map(|i| format!("f{i}")));
        cols.extend(["ee_x", "ee_y", "ee_z", "ee_vx", "ee_vy", "ee_vz"].map(String::from));
        cols.extend((0..self.n_joints).map(|j| format!("refq{j}")));
        cols.extend(["ref_x", "ref_y", "ref_z", "qp_kkt", "qp_iters", "tau_res", "events"].map(String::from));
        cols.join(",")
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(TRACE_SCHEMA);
        out.push('\n');
        out.push_str(&self.header());
        out.push('\n');
        for row in &self.rows {
            let mut first = true;
            let mut put = |x: f64| {
                if first {
                    first = false;
                } else {
                    out.push(',');
                }
                let _ = write!(out, "{x}");
            };
            put(row.t);
            row.q.iter().for_each(|&v| put(v));
            row.qdot.iter().for_each(|&v| put(v));
            row.f.iter().for_each(|&v| put(v));
            row.ee_pos.iter().for_each(|&v| put(v));
            row.ee_vel.iter().for_each(|&v| put(v));
            row.q_ref.iter().for_each(|&v| put(v));
            row.ref_pos.iter().for_each(|&v| put(v));
            put(row.qp_kkt);
            put(row.qp_iters as f64);
            put(row.tau_res);
            put(row.events as f64);
            out.push('\n');
        }
        out
    }
}

/// Parses a CSV trace, validating the schema line and the exact header
/// layout (joint and route counts are inferred from the header).
pub fn read_csv(text: &str) -> Result<Trace, TraceError> {
    let mut lines = text.lines().enumerate();
    let (_, schema) = lines
        .next()
        .ok_or_else(|| TraceError::Schema("empty file".into()))?;
    if schema.trim() != TRACE_SCHEMA {
        return Err(TraceError::Schema(format!(
            "expected `{TRACE_SCHEMA}` on the first line, found `{}`",
            schema.trim()
        )));
    }
    let (_, header) = lines
        .next()
        .ok_or_else(|| TraceError::Schema("missing header row".into()))?;
    let cols: Vec<&str> = header.trim().split(',').collect();
    let count_prefixed = |prefix: &str| -> usize {
        cols.iter()
            .filter(|c| {
                c.strip_prefix(prefix)
                    .is_some_and(|rest| !rest.is_empty() && rest.chars().all(|ch| ch.is_ascii_digit()))
            })
            .count()
    };
    let n = count_prefixed("q") ;
    let r = count_prefixed("f");
    let probe = Trace::new(n, r);
    if probe.header() != header.trim() {
        return Err(TraceError::Schema(format!(
            "header does not match the v1 layout for {n} joints / {r} routes"
        )));
    }
    let mut trace = probe;
    let width = 1 + 3 * n + r + 6 + 3 + 4;
    for (idx, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let vals: Result<Vec<f64>, _> = line.trim().split(',').map(str::parse::<f64>).collect();
        let vals = vals.map_err(|e| TraceError::Row { line: idx + 1, message: e.to_string() })?;
        if vals.len() != width {
            return Err(TraceError::Row {
                line: idx + 1,
                message: format!("expected {width} columns, got {}", vals.len()),
            });
        }
        let mut it = vals.into_iter();
        let mut take = |k: usize| -> Vec<f64> { (&mut it).take(k).collect() };
        let t = take(1)[0];
        let q = take(n);
        let qdot = take(n);
        let f = take(r);
        let ee: Vec<f64> = take(6);
        let q_ref = take(n);
        let rest: Vec<f64> = take(7);
        trace.rows.push(TraceRow {
            t,
            q,
            qdot,
            f,
            ee_pos: [ee[0], ee[1], ee[2]],
            ee_vel: [ee[3], ee[4], ee[5]],
            q_ref,
            ref_pos: [rest[0], rest[1], rest[2]],
            qp_kkt: rest[3],
            qp_iters: rest[4] as usize,
            tau_res: rest[5],
            events: rest[6] as usize,
        });
    }
    for w in trace.rows.windows(2) {
        if w[1].t <= w[0].t {
            return Err(TraceError::Schema("time column must be strictly increasing".into()));
        }
    }
    Ok(trace)
}

/// Headline metrics of a trace.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryMetrics {
    pub rows: usize,
    pub duration: f64,
    /// Task-space error: end-effector position vs reference position.
    pub task_err_rms: f64,
    pub task_err_max: f64,
    /// Joint-space error across all joints.
    pub joint_err_rms: f64,
    pub joint_err_max: f64,
    pub ee_speed_max: f64,
    pub tension_min: Option<f64>,
    pub tension_max: Option<f64>,
    pub events: usize,
    pub first_event_t: Option<f64>,
    /// Per joint, after the first event: peak |q − q(at event)| and its
    /// time. Empty when no event fired.
    pub post_event_peak_dq: Vec<(f64, f64)>,
}

/// Computes summary metrics from a trace (must be non-empty).
pub fn summarize(trace: &Trace) -> Result<SummaryMetrics, TraceError> {
    if trace.rows.is_empty() {
        return Err(TraceError::Schema("trace has no rows".into()));
    }
    let n = trace.n_joints;
    let rows = &trace.rows;
    let mut task_sq = 0.0;
    let mut task_max = 0.0_f64;
    let mut joint_sq = 0.0;
    let mut joint_max = 0.0_f64;
    let mut speed_max = 0.0_f64;
    let mut f_min = f64::INFINITY;
    let mut f_max = f64::NEG_INFINITY;
    for row in rows {
        let e: f64 = (0..3)
            .map(|k| (row.ee_pos[k] - row.ref_pos[k]).powi(2))
            .sum::<f64>()
            .sqrt();
        task_sq += e * e;
        task_max = task_max.max(e);
        for j in 0..n {
            let de = (row.q[j] - row.q_ref[j]).abs();
            joint_sq += de * de;
            joint_max = joint_max.max(de);
        }
        let speed = (0..3).map(|k| row.ee_vel[k].powi(2)).sum::<f64>().sqrt();
        speed_max = speed_max.max(speed);
        for &f in &row.f {
            f_min = f_min.min(f);
            f_max = f_max.max(f);
        }
    }
    let count = rows.len();

    // Event bookkeeping: the baseline posture is the last sample at or
    // before the first event, deflections are measured against it.
    let first_event_idx = rows.iter().position(|r| r.events > 0);
    let (first_event_t, post_event_peak_dq) = match first_event_idx {
        Some(idx) => {
            let baseline = &rows[idx.saturating_sub(1)].q;
            let mut peaks = vec![(0.0_f64, rows[idx].t); n];
            for row in &rows[idx..] {
                for j in 0..n {
                    let d = (row.q[j] - baseline[j]).abs();
                    if d > peaks[j].0 {
                        peaks[j] = (d, row.t);
                    }
                }
            }
            (Some(rows[idx].t), peaks)
        }
        None => (None, Vec::new()),
    };

    Ok(SummaryMetrics {
        rows: count,
        duration: rows.last().unwrap().t - rows[0].t,
        task_err_rms: (task_sq / count as f64).sqrt(),
        task_err_max: task_max,
        joint_err_rms: if n > 0 { (joint_sq / (count * n) as f64).sqrt() } else { 0.0 },
        joint_err_max: joint_max,
        ee_speed_max: speed_max,
        tension_min: (trace.n_routes > 0).then_some(f_min),
        tension_max: (trace.n_routes > 0).then_some(f_max),
        events: rows.last().unwrap().events,
        first_event_t,
        post_event_peak_dq,
    })
}

impl SummaryMetrics {
    /// Stable key/value rendering (insertion order is the output order).
    pub fn to_pairs(&self) -> Vec<(String, String)> {
        let mut out: Vec<(String, String)> = vec![
            ("rows".into(), format!("{}", self.rows)),
            ("duration_s".into(), format!("{}", self.duration)),
            ("task_err_rms_m".into(), format!("{}", self.task_err_rms)),
            ("task_err_max_m".into(), format!("{}", self.task_err_max)),
            ("joint_err_rms_rad".into(), format!("{}", self.joint_err_rms)),
            ("joint_err_max_rad".into(), format!("{}", self.joint_err_max)),
            ("ee_speed_max_mps".into(), format!("{}", self.ee_speed_max)),
        ];
        if let (Some(lo), Some(hi)) = (self.tension_min, self.tension_max) {
            out.push(("tension_min_n".into(), format!("{lo}")));
            out.push(("tension_max_n".into(), format!("{hi}")));
        }
        out.push(("events".into(), format!("{}", self.events)));
        if let Some(t) = self.first_event_t {
            out.push(("first_event_t_s".into(), format!("{t}")));
            for (j, (peak, at)) in self.post_event_peak_dq.iter().enumerate() {
                out.push((format!("post_event_peak_dq_j{j}_rad"), format!("{peak}")));
                out.push((format!("post_event_peak_dq_j{j}_t_s"), format!("{at}")));
            }
        }
        out
    }

    /// JSON rendering with numeric values (keys sorted by serde_json).
    pub fn to_json(&self) -> serde_json::Value {
        let mut map = serde_json::Map::new();
        for (k, v) in self.to_pairs() {
            let val = v
                .parse::<f64>()
                .ok()
                .and_then(serde_json::Number::from_f64)
                .map(serde_json::Value::Number)
                .unwrap_or(serde_json::Value::String(v));
            map.insert(k, val);
        }
        serde_json::Value::Object(map)
    }
}
