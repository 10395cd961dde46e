//! Command-line surface.
//!
//! Subcommands: `validate`, `jacobian`, `tension`, `effmass`, `run`,
//! `summarize`. Data goes to files or standard output, diagnostics to
//! standard error as one-line `ERROR <code>: <message>` records. Exit
//! codes: 0 success, 1 validation failure, 2 runtime/numerical failure,
//! 64 usage error. Outputs are pure functions of the inputs and
//! overrides, so reruns are byte-identical. `TENDONKIT_THREADS` caps the
//! worker threads used by grid evaluation.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::{DMatrix, DVector, Vector3};

use crate::controller::ControllerError;
use crate::dynamics::{self, DynamicsError, Plane};
use crate::kinematics;
use crate::model::{self, RobotModel};
use crate::sim::{self, SimError};
use crate::tension::{self, SolveStatus, TensionError, TensionProblem, DEFAULT_LAMBDA};
use crate::textfmt::Document;

/// Entry point used by the binary: parses arguments, runs the chosen
/// subcommand, and maps every failure onto the documented exit codes.
pub fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code =
                if matches!(err.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                    0
                } else {
                    64
                };
            let _ = err.print();
            return code;
        }
    };
    if let Err(e) = configure_threads() {
        eprintln!("ERROR {}: {}", e.code, e.message);
        return e.code;
    }
    match execute(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("ERROR {}: {}", e.code, e.message);
            e.code
        }
    }
}

#[derive(Parser)]
#[command(
    name = "tendonkit",
    version,
    about = "Modeling, tension control, and simulation for coupled wire-driven manipulators"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a model file against all structural invariants.
    Validate(ValidateArgs),
    /// Print the wire-length Jacobian G(q) as CSV.
    Jacobian(JacobianArgs),
    /// Solve a tension-distribution problem file.
    Tension(TensionArgs),
    /// Map the direction-maximal effective mass over a joint sweep.
    Effmass(EffmassArgs),
    /// Run a scenario and record its trace.
    Run(RunArgs),
    /// Compute summary metrics from a recorded trace.
    Summarize(SummarizeArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TextFormat {
    Text,
    Json,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum DataFormat {
    Csv,
    Json,
}

#[derive(Args)]
struct ValidateArgs {
    /// Model file.
    model: PathBuf,
    /// Dotted-key override applied before validation (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[arg(long, value_enum, default_value_t = TextFormat::Text)]
    format: TextFormat,
}

#[derive(Args)]
struct JacobianArgs {
    /// Model file.
    model: PathBuf,
    /// Joint angles in radians, comma separated (defaults to all zero).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    q: Option<Vec<f64>>,
    /// Output file (standard output when omitted).
    #[arg(short, long)]
    output: Option<PathBuf>,
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[arg(long, value_enum, default_value_t = DataFormat::Csv)]
    format: DataFormat,
}

#[derive(Args)]
struct TensionArgs {
    /// Problem file (see docs/tension-format.md).
    problem: PathBuf,
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[arg(long, value_enum, default_value_t = TextFormat::Text)]
    format: TextFormat,
}

#[derive(Args)]
struct EffmassArgs {
    /// Model file.
    model: PathBuf,
    /// Link carrying the probed point.
    #[arg(long)]
    link: String,
    /// Probe point in the link frame, comma separated (default origin).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    point: Option<Vec<f64>>,
    /// Base posture (defaults to all zero).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    q: Option<Vec<f64>>,
    /// Joint sweep `name=lo:hi:count`; repeat to build a grid (the last
    /// sweep varies fastest).
    #[arg(long, value_name = "JOINT=LO:HI:COUNT", required = true)]
    sweep: Vec<String>,
    /// Plane spanning the probed directions.
    #[arg(long, value_enum, default_value_t = PlaneChoice::Xz)]
    plane: PlaneChoice,
    /// Output file (standard output when omitted).
    #[arg(short, long)]
    output: Option<PathBuf>,
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[arg(long, value_enum, default_value_t = DataFormat::Csv)]
    format: DataFormat,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PlaneChoice {
    Xz,
    Xy,
    Yz,
}

impl PlaneChoice {
    fn plane(self) -> Plane {
        match self {
            PlaneChoice::Xz => Plane::xz(),
            PlaneChoice::Xy => Plane::new(Vector3::x(), Vector3::y()).expect("unit axes"),
            PlaneChoice::Yz => Plane::new(Vector3::y(), Vector3::z()).expect("unit axes"),
        }
    }

    fn labels(self) -> (&'static str, &'static str) {
        match self {
            PlaneChoice::Xz => ("x", "z"),
            PlaneChoice::Xy => ("x", "y"),
            PlaneChoice::Yz => ("y", "z"),
        }
    }
}

#[derive(Args)]
struct RunArgs {
    /// Scenario file (see docs/scenario-format.md).
    scenario: PathBuf,
    /// Trace output file (standard output when omitted).
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Dotted-key override applied to the scenario document (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[arg(long, value_enum, default_value_t = DataFormat::Csv)]
    format: DataFormat,
}

#[derive(Args)]
struct SummarizeArgs {
    /// Trace file produced by `run`.
    trace: PathBuf,
    #[arg(long, value_enum, default_value_t = TextFormat::Text)]
    format: TextFormat,
}

#[derive(Debug)]
struct CliError {
    code: i32,
    message: String,
}

fn invalid(message: impl std::fmt::Display) -> CliError {
    CliError { code: 1, message: message.to_string() }
}

fn numerical(message: impl std::fmt::Display) -> CliError {
    CliError { code: 2, message: message.to_string() }
}

impl From<crate::textfmt::ParseError> for CliError {
    fn from(e: crate::textfmt::ParseError) -> CliError {
        invalid(e)
    }
}

impl From<crate::model::ModelError> for CliError {
    fn from(e: crate::model::ModelError) -> CliError {
        invalid(e)
    }
}

impl From<crate::model::ValidationError> for CliError {
    fn from(e: crate::model::ValidationError) -> CliError {
        invalid(e)
    }
}

impl From<crate::kinematics::KinematicsError> for CliError {
    fn from(e: crate::kinematics::KinematicsError) -> CliError {
        invalid(e)
    }
}

impl From<DynamicsError> for CliError {
    fn from(e: DynamicsError) -> CliError {
        match e {
            DynamicsError::SingularInertia { .. } | DynamicsError::SingularConfiguration => {
                numerical(e)
            }
            other => invalid(other),
        }
    }
}

impl From<TensionError> for CliError {
    fn from(e: TensionError) -> CliError {
        match e {
            TensionError::NumericalBreakdown => numerical(e),
            other => invalid(other),
        }
    }
}

impl From<ControllerError> for CliError {
    fn from(e: ControllerError) -> CliError {
        match e {
            ControllerError::Dynamics(d) => d.into(),
            ControllerError::Tension(t) => t.into(),
            other => invalid(other),
        }
    }
}

impl From<sim::TraceError> for CliError {
    fn from(e: sim::TraceError) -> CliError {
        invalid(e)
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> CliError {
        match e {
            SimError::Dynamics(d) => d.into(),
            SimError::Controller(c) => c.into(),
            SimError::NumericalBlowup { .. } => numerical(e),
            other => invalid(other),
        }
    }
}

/// Applies `TENDONKIT_THREADS` to the global worker pool. Silently keeps
/// the existing pool if one was already installed (tests share a process).
fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("TENDONKIT_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n >= 1)
        .ok_or_else(|| invalid(format!("TENDONKIT_THREADS must be a positive integer, got `{raw}`")))?;
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

fn execute(command: Command) -> Result<(), CliError> {
    match command {
        Command::Validate(args) => cmd_validate(args),
        Command::Jacobian(args) => cmd_jacobian(args),
        Command::Tension(args) => cmd_tension(args),
        Command::Effmass(args) => cmd_effmass(args),
        Command::Run(args) => cmd_run(args),
        Command::Summarize(args) => cmd_summarize(args),
    }
}

fn read_file(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path)
        .map_err(|e| invalid(format!("failed to read `{}`: {e}", path.display())))
}

fn emit(output: Option<&Path>, data: &str) -> Result<(), CliError> {
    match output {
        Some(path) => std::fs::write(path, data)
            .map_err(|e| invalid(format!("failed to write `{}`: {e}", path.display()))),
        None => {
            print!("{data}");
            Ok(())
        }
    }
}

fn split_set(kv: &str) -> Result<(String, String), CliError> {
    kv.split_once('=')
        .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
        .ok_or_else(|| invalid(format!("--set expects KEY=VALUE, got `{kv}`")))
}

fn overrides(sets: &[String]) -> Result<Vec<(String, String)>, CliError> {
    sets.iter().map(|kv| split_set(kv)).collect()
}

/// Loads a model file, applying dotted-key overrides first.
fn load_model(path: &Path, sets: &[String]) -> Result<RobotModel, CliError> {
    let text = read_file(path)?;
    let mut doc = Document::parse(&text)?;
    for (key, value) in overrides(sets)? {
        doc.set(&key, &value)?;
    }
    Ok(model::interpret(&doc)?)
}

fn posture(model: &RobotModel, q: Option<Vec<f64>>, what: &str) -> Result<Vec<f64>, CliError> {
    let n = model.n_joints();
    match q {
        None => Ok(vec![0.0; n]),
        Some(q) if q.len() == n => Ok(q),
        Some(q) => Err(invalid(format!("{what} expects {n} joint values, got {}", q.len()))),
    }
}

fn cmd_validate(args: ValidateArgs) -> Result<(), CliError> {
    let model = load_model(&args.model, &args.set)?;
    let (dof, routes, mass) = (model.n_joints(), model.n_routes(), model.moving_part_mass());
    match args.format {
        TextFormat::Text => println!("OK: {dof} DoF, {routes} routes, moving mass {mass:.3} kg"),
        TextFormat::Json => println!(
            "{}",
            serde_json::json!({
                "name": model.name,
                "dof": dof,
                "routes": routes,
                "moving_mass_kg": mass,
            })
        ),
    }
    Ok(())
}

fn cmd_jacobian(args: JacobianArgs) -> Result<(), CliError> {
    let model = load_model(&args.model, &args.set)?;
    let q = posture(&model, args.q, "--q")?;
    let g = kinematics::muscle_jacobian(&model, &q)?;
    let data = match args.format {
        DataFormat::Csv => matrix_csv(&g),
        DataFormat::Json => {
            let rows: Vec<Vec<f64>> =
                (0..g.nrows()).map(|i| g.row(i).iter().copied().collect()).collect();
            let mut out = serde_json::json!({
                "joints": model.joints.iter().map(|j| j.name.clone()).collect::<Vec<_>>(),
                "routes": model.routes.iter().map(|r| r.name.clone()).collect::<Vec<_>>(),
                "g": rows,
            })
            .to_string();
            out.push('\n');
            out
        }
    };
    emit(args.output.as_deref(), &data)
}

fn matrix_csv(g: &DMatrix<f64>) -> String {
    let mut out = String::new();
    for i in 0..g.nrows() {
        let row: Vec<String> = g.row(i).iter().map(|x| format!("{x}")).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

fn cmd_tension(args: TensionArgs) -> Result<(), CliError> {
    let text = read_file(&args.problem)?;
    let mut doc = Document::parse(&text)?;
    for (key, value) in overrides(&args.set)? {
        doc.set(&key, &value)?;
    }
    let problem = parse_tension_problem(&doc)?;
    let solution = tension::solve_tension(&problem)?;
    let status = match solution.status {
        SolveStatus::Optimal => "optimal",
        SolveStatus::MaxIterations => "max_iterations",
    };
    match args.format {
        TextFormat::Text => {
            println!("f = {}", join_floats(solution.f.iter()));
            println!("torque_residual = {}", join_floats(solution.torque_residual.iter()));
            println!("kkt_residual = {}", solution.kkt_residual);
            println!("iterations = {}", solution.iterations);
            println!("status = {status}");
        }
        TextFormat::Json => println!(
            "{}",
            serde_json::json!({
                "f": solution.f.iter().copied().collect::<Vec<_>>(),
                "torque_residual": solution.torque_residual.iter().copied().collect::<Vec<_>>(),
                "kkt_residual": solution.kkt_residual,
                "iterations": solution.iterations,
                "status": status,
            })
        ),
    }
    Ok(())
}

fn join_floats<'a>(vals: impl Iterator<Item = &'a f64>) -> String {
    vals.map(|x| format!("{x}")).collect::<Vec<_>>().join(", ")
}

/// Reads a `[tension]` document: `joints`, `routes`, row-major `g`,
/// `tau_ref`, the tension box, and an optional torque weight.
fn parse_tension_problem(doc: &Document) -> Result<TensionProblem, CliError> {
    let sec = doc
        .section("tension")
        .ok_or_else(|| invalid("tension problem: missing [tension] section"))?;
    let number = |key: &str| -> Result<f64, CliError> {
        sec.get(key)
            .and_then(|v| v.as_number())
            .ok_or_else(|| invalid(format!("tension.{key}: expected a number")))
    };
    let numbers = |key: &str| -> Result<Vec<f64>, CliError> {
        sec.get(key)
            .and_then(|v| v.as_numbers())
            .ok_or_else(|| invalid(format!("tension.{key}: expected a list of numbers")))
    };
    let n = number("joints")? as usize;
    let r = number("routes")? as usize;
    if n == 0 || r == 0 {
        return Err(invalid("tension problem: joints and routes must be positive"));
    }
    let g_flat = numbers("g")?;
    if g_flat.len() != r * n {
        return Err(invalid(format!(
            "tension.g: expected {r}·{n} = {} entries (row-major), got {}",
            r * n,
            g_flat.len()
        )));
    }
    let g = DMatrix::from_row_slice(r, n, &g_flat);
    let tau_ref = numbers("tau_ref")?;
    if tau_ref.len() != n {
        return Err(invalid(format!("tension.tau_ref: expected {n} entries, got {}", tau_ref.len())));
    }
    // Box bounds and weights take a scalar (splat) or a full list.
    let splat = |key: &str, len: usize, default: Option<f64>| -> Result<DVector<f64>, CliError> {
        match sec.get(key) {
            None => default
                .map(|d| DVector::from_element(len, d))
                .ok_or_else(|| invalid(format!("tension.{key}: required key missing"))),
            Some(v) => {
                if let Some(x) = v.as_number() {
                    return Ok(DVector::from_element(len, x));
                }
                let list = v
                    .as_numbers()
                    .ok_or_else(|| invalid(format!("tension.{key}: expected number or list")))?;
                if list.len() != len {
                    return Err(invalid(format!(
                        "tension.{key}: expected {len} entries, got {}",
                        list.len()
                    )));
                }
                Ok(DVector::from_row_slice(&list))
            }
        }
    };
    let problem = TensionProblem {
        g,
        tau_ref: DVector::from_row_slice(&tau_ref),
        f_min: splat("f_min", r, None)?,
        f_max: splat("f_max", r, None)?,
        lambda: splat("lambda", n, Some(DEFAULT_LAMBDA))?,
    };
    let known = ["joints", "routes", "g", "tau_ref", "f_min", "f_max", "lambda"];
    for key in sec.keys() {
        if !known.contains(&key) {
            return Err(invalid(format!("tension.{key}: unknown key")));
        }
    }
    problem.validate()?;
    Ok(problem)
}

fn cmd_effmass(args: EffmassArgs) -> Result<(), CliError> {
    let model = load_model(&args.model, &args.set)?;
    let link = model
        .link_index(&args.link)
        .ok_or_else(|| invalid(format!("unknown link `{}`", args.link)))?;
    let point = match args.point {
        None => Vector3::zeros(),
        Some(p) if p.len() == 3 => Vector3::new(p[0], p[1], p[2]),
        Some(p) => return Err(invalid(format!("--point expects 3 values, got {}", p.len()))),
    };
    let base = posture(&model, args.q, "--q")?;
    let sweeps = args
        .sweep
        .iter()
        .map(|s| parse_sweep(&model, s))
        .collect::<Result<Vec<_>, _>>()?;
    let grid = build_grid(&base, &sweeps);
    let plane = args.plane.plane();
    let samples = dynamics::effective_mass_field(&model, &grid, link, &point, &plane)?;

    let (a, b) = args.plane.labels();
    let mut skipped = 0usize;
    let data = match args.format {
        DataFormat::Csv => {
            let mut out = format!("{a},{b},m_u_max\n");
            for s in &samples {
                if s.singular {
                    skipped += 1;
                    continue;
                }
                let _ = writeln!(out, "{},{},{}", s.coords[0], s.coords[1], s.m_u_max);
            }
            out
        }
        DataFormat::Json => {
            let rows: Vec<serde_json::Value> = samples
                .iter()
                .filter(|s| {
                    if s.singular {
                        skipped += 1;
                    }
                    !s.singular
                })
                .map(|s| {
                    serde_json::json!({
                        a: s.coords[0],
                        b: s.coords[1],
                        "m_u_max": s.m_u_max,
                    })
                })
                .collect();
            let mut out = serde_json::Value::Array(rows).to_string();
            out.push('\n');
            out
        }
    };
    if skipped > 0 {
        eprintln!("WARN: skipped {skipped} singular posture(s) with no in-plane mobility");
    }
    emit(args.output.as_deref(), &data)
}

/// Parses `joint=lo:hi:count` into an index and an inclusive linspace.
fn parse_sweep(model: &RobotModel, s: &str) -> Result<(usize, f64, f64, usize), CliError> {
    let bad = || invalid(format!("--sweep expects JOINT=LO:HI:COUNT, got `{s}`"));
    let (name, range) = s.split_once('=').ok_or_else(bad)?;
    let joint = model
        .joint_index(name.trim())
        .ok_or_else(|| invalid(format!("unknown joint `{}`", name.trim())))?;
    let parts: Vec<&str> = range.split(':').collect();
    if parts.len() != 3 {
        return Err(bad());
    }
    let lo: f64 = parts[0].trim().parse().map_err(|_| bad())?;
    let hi: f64 = parts[1].trim().parse().map_err(|_| bad())?;
    let count: usize = parts[2].trim().parse().map_err(|_| bad())?;
    if count == 0 || !lo.is_finite() || !hi.is_finite() {
        return Err(bad());
    }
    Ok((joint, lo, hi, count))
}

/// Cartesian product of the sweeps over the base posture; the last sweep
/// varies fastest, matching row-major CSV expectations.
fn build_grid(base: &[f64], sweeps: &[(usize, f64, f64, usize)]) -> Vec<Vec<f64>> {
    let mut grid = vec![base.to_vec()];
    for &(joint, lo, hi, count) in sweeps {
        let mut next = Vec::with_capacity(grid.len() * count);
        for q in &grid {
            for i in 0..count {
                let t = if count > 1 { i as f64 / (count - 1) as f64 } else { 0.0 };
                let mut qq = q.clone();
                qq[joint] = lo + t * (hi - lo);
                next.push(qq);
            }
        }
        grid = next;
    }
    grid
}

fn cmd_run(args: RunArgs) -> Result<(), CliError> {
    let sets = overrides(&args.set)?;
    let spec = sim::load_scenario(&args.scenario, &sets)?;
    let output = match sim::run_scenario(&spec) {
        Ok(out) => out,
        Err(SimError::NumericalBlowup { t, trace }) => {
            // The partial trace is still worth keeping for post-mortems.
            let mut message =
                format!("simulation diverged at t = {t:.6} s (state norm exceeded 1e9)");
            if let Some(path) = args.output.as_deref() {
                if std::fs::write(path, trace.to_csv()).is_ok() {
                    let _ = write!(message, "; partial trace written to `{}`", path.display());
                }
            }
            return Err(numerical(message));
        }
        Err(other) => return Err(other.into()),
    };
    let data = match args.format {
        DataFormat::Csv => output.trace.to_csv(),
        DataFormat::Json => {
            let trace = &output.trace;
            let header: Vec<String> = trace.header().split(',').map(String::from).collect();
            let rows: Vec<Vec<f64>> = trace
                .rows
                .iter()
                .map(|r| {
                    let mut row = vec![r.t];
                    row.extend(&r.q);
                    row.extend(&r.qdot);
                    row.extend(&r.f);
                    row.extend(r.ee_pos);
                    row.extend(r.ee_vel);
                    row.extend(&r.q_ref);
                    row.extend(r.ref_pos);
                    row.extend([r.qp_kkt, r.qp_iters as f64, r.tau_res, r.events as f64]);
                    row
                })
                .collect();
            let mut out = serde_json::json!({
                "schema": "tendonkit-trace v1",
                "columns": header,
                "rows": rows,
            })
            .to_string();
            out.push('\n');
            out
        }
    };
    emit(args.output.as_deref(), &data)
}

fn cmd_summarize(args: SummarizeArgs) -> Result<(), CliError> {
    let text = read_file(&args.trace)?;
    let trace = sim::read_csv(&text)?;
    let metrics = sim::summarize(&trace)?;
    match args.format {
        TextFormat::Text => {
            for (key, value) in metrics.to_pairs() {
                println!("{key} = {value}");
            }
        }
        TextFormat::Json => println!("{}", metrics.to_json()),
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn set_overrides_split_on_first_equals() {
        let (k, v) = split_set("scenario.duration=1.5").unwrap();
        assert_eq!((k.as_str(), v.as_str()), ("scenario.duration", "1.5"));
        let (k, v) = split_set("controller.type=\"none\"").unwrap();
        assert_eq!((k.as_str(), v.as_str()), ("controller.type", "\"none\""));
        assert!(split_set("no-equals-here").is_err());
    }

    #[test]
    fn sweep_grid_is_row_major() {
        let model = crate::model::load_model(fixtures::PLANAR2).unwrap();
        let sweeps = vec![
            parse_sweep(&model, "hip=0:1:2").unwrap(),
            parse_sweep(&model, "knee=-1:0:3").unwrap(),
        ];
        let grid = build_grid(&[0.0, 0.0], &sweeps);
        assert_eq!(grid.len(), 6);
        assert_eq!(grid[0], vec![0.0, -1.0]);
        assert_eq!(grid[1], vec![0.0, -0.5]);
        assert_eq!(grid[3], vec![1.0, -1.0]);
        assert!(parse_sweep(&model, "hip=0:1").is_err());
        assert!(parse_sweep(&model, "elbow=0:1:2").is_err(), "unknown joint");
    }

    #[test]
    fn tension_problem_files_parse_and_solve() {
        let doc = Document::parse(
            r#"
[tension]
joints = 1
routes = 2
g = [-0.01, 0.01]
tau_ref = [1.0]
f_min = 5.0
f_max = 490.0
"#,
        )
        .unwrap();
        let problem = parse_tension_problem(&doc).unwrap();
        assert_eq!(problem.lambda[0], DEFAULT_LAMBDA);
        let solution = tension::solve_tension(&problem).unwrap();
        // Known optimum of the antagonistic single-joint instance.
        approx::assert_relative_eq!(solution.f[0], 10_500.0 / 101.0, epsilon = 1e-9);
        approx::assert_relative_eq!(solution.f[1], 5.0, epsilon = 1e-12);
    }

    #[test]
    fn tension_problem_rejects_bad_shapes() {
        let cases = [
            "[tension]\njoints = 1\nroutes = 2\ng = [-0.01]\ntau_ref = [1.0]\nf_min = 0\nf_max = 10\n",
            "[tension]\njoints = 1\nroutes = 2\ng = [-0.01, 0.01]\ntau_ref = [1.0, 2.0]\nf_min = 0\nf_max = 10\n",
            "[tension]\njoints = 1\nroutes = 2\ng = [-0.01, 0.01]\ntau_ref = [1.0]\nf_min = 0\nf_max = 10\nbogus = 1\n",
            "[tension]\njoints = 1\nroutes = 2\ng = [-0.01, 0.01]\ntau_ref = [1.0]\nf_max = 10\n",
        ];
        for text in cases {
            let doc = Document::parse(text).unwrap();
            assert!(parse_tension_problem(&doc).is_err(), "should reject: {text}");
        }
    }

    #[test]
    fn error_classes_map_to_exit_codes() {
        assert_eq!(CliError::from(TensionError::NumericalBreakdown).code, 2);
        assert_eq!(CliError::from(TensionError::BadWeight).code, 1);
        assert_eq!(CliError::from(DynamicsError::SingularConfiguration).code, 2);
        assert_eq!(CliError::from(DynamicsError::BadDirection).code, 1);
        let nested = ControllerError::Dynamics(DynamicsError::SingularInertia { cond: 1e20 });
        assert_eq!(CliError::from(nested).code, 2);
    }
}
