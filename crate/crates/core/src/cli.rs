//! Command-line front end.
//!
//! Exit codes: 0 success, 1 validation failure, 2 no base path, 3 every
//! candidate failed, 4 malformed input.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::clock::Stopwatch;
use crate::opt::GoalSpec;
use crate::pipeline::{
    plan, plan_svg, run_benchmark, trial_request, validate_trajectory, world_svg, BenchmarkSpec, PlanReport, PlanRequest,
    PlanStatus, PlannerConfig, Trial,
};
use crate::robot::RobotModel;
use crate::traj::{Trajectory, TrajectoryExport};
use crate::world::{generate_scenario, Scenario, ScenarioParams};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_NO_PATH: i32 = 2;
pub const EXIT_ALL_FAILED: i32 = 3;
pub const EXIT_BAD_INPUT: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "wbp", version, about = "Whole-body trajectory planner for mobile manipulators")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Plan one request and print the plan report.
    Plan(PlanArgs),
    /// Run a batch of random trials and print aggregate statistics.
    Benchmark(BenchmarkArgs),
    /// Check a trajectory against the true limits and exact geometry.
    Validate(ValidateArgs),
    /// Generate a random scenario.
    GenScenario(GenScenarioArgs),
}

#[derive(Debug, Args)]
pub struct Common {
    /// Planner configuration (JSON); missing fields keep their defaults.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Robot model (JSON); the built-in six-joint manipulator otherwise.
    #[arg(long)]
    pub robot: Option<PathBuf>,
    /// Write the JSON result here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Planning budget per request (ms).
    #[arg(long)]
    pub budget_ms: Option<f64>,
    /// Include wall-clock timings in the output.
    #[arg(long)]
    pub timing: bool,
}

#[derive(Debug, Args)]
pub struct PlanArgs {
    /// Scenario file (JSON).
    #[arg(long, conflicts_with = "random")]
    pub scenario: Option<PathBuf>,
    /// Use a random desk-scale trial derived from this seed.
    #[arg(long)]
    pub random: Option<u64>,
    /// Plan request (JSON). Required with --scenario; with --random it
    /// replaces the sampled start and goal.
    #[arg(long)]
    pub request: Option<PathBuf>,
    /// Overrides the request seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Write a debug drawing here.
    #[arg(long)]
    pub svg: Option<PathBuf>,
    /// Write the scenario that was planned in.
    #[arg(long)]
    pub save_scenario: Option<PathBuf>,
    /// Write the request that was planned.
    #[arg(long)]
    pub save_request: Option<PathBuf>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct BenchmarkArgs {
    /// Benchmark spec (JSON).
    #[arg(long, conflicts_with = "desk_scale")]
    pub spec: Option<PathBuf>,
    /// Use the desk-scale setup with this many trials per interval.
    #[arg(long)]
    pub desk_scale: Option<usize>,
    /// Overrides the spec seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Per-trial rows as CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    /// Trajectory export or plan report (JSON).
    #[arg(long)]
    pub trajectory: PathBuf,
    /// Scenario file (JSON).
    #[arg(long)]
    pub scenario: PathBuf,
    /// Plan request whose goal pose is checked at the end of the trajectory.
    #[arg(long)]
    pub request: Option<PathBuf>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct GenScenarioArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Scenario parameters (JSON); desk-scale otherwise.
    #[arg(long)]
    pub params: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub svg: Option<PathBuf>,
}

/// Input problem reported with exit code 4.
#[derive(Debug)]
struct BadInput(String);

type CliResult<T> = std::result::Result<T, BadInput>;

impl From<crate::Error> for BadInput {
    fn from(e: crate::Error) -> Self {
        BadInput(e.to_string())
    }
}

fn read_json<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = fs::read_to_string(path).map_err(|e| BadInput(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| BadInput(format!("{}: {e}", path.display())))
}

fn write_output(path: Option<&Path>, text: &str) -> CliResult<()> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| BadInput(format!("{}: {e}", p.display()))),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes()).and_then(|_| out.flush()).map_err(|e| BadInput(format!("stdout: {e}")))
        }
    }
}

fn to_json<T: Serialize>(v: &T) -> CliResult<String> {
    let mut s = serde_json::to_string_pretty(v).map_err(|e| BadInput(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

fn load_robot(c: &Common) -> CliResult<RobotModel> {
    match &c.robot {
        Some(p) => {
            let m: RobotModel = read_json(p)?;
            m.validate().map_err(|e| BadInput(format!("{}: {e}", p.display())))?;
            Ok(m)
        }
        None => Ok(RobotModel::default_mobile_manipulator()),
    }
}

fn load_config(c: &Common, robot: &RobotModel) -> CliResult<PlannerConfig> {
    let mut cfg: PlannerConfig = match &c.config {
        Some(p) => read_json(p)?,
        None => PlannerConfig::default(),
    };
    if let Some(b) = c.budget_ms {
        cfg.budget_ms = b;
    }
    cfg.report_timing |= c.timing;
    cfg.validate(robot)?;
    Ok(cfg)
}

/// Runs `f` on a pool of `jobs` workers when given.
fn with_jobs<R: Send>(jobs: Option<usize>, f: impl FnOnce() -> R + Send) -> CliResult<R> {
    match jobs {
        Some(0) => Err(BadInput("--jobs must be at least 1".into())),
        #[cfg(feature = "parallel")]
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(n).build().map_err(|e| BadInput(e.to_string()))?;
            Ok(pool.install(f))
        }
        _ => Ok(f()),
    }
}

fn cmd_plan(a: &PlanArgs) -> CliResult<i32> {
    let robot = load_robot(&a.common)?;
    let cfg = load_config(&a.common, &robot)?;
    let (world, mut req) = match (&a.scenario, a.random) {
        (Some(path), _) => {
            let scenario: Scenario = read_json(path)?;
            let req_path = a.request.as_ref().ok_or_else(|| BadInput("--scenario needs --request".into()))?;
            (cfg.build_world(scenario, &robot), read_json::<PlanRequest>(req_path)?)
        }
        (None, Some(seed)) => {
            let spec = BenchmarkSpec::desk_scale(1, seed);
            let Trial { world, request, .. } = trial_request(&spec, 0, 0, &robot, &cfg)
                .map_err(|stage| BadInput(format!("random trial {seed}: {stage} failed")))?;
            let req = match &a.request {
                Some(p) => read_json(p)?,
                None => request,
            };
            (world, req)
        }
        (None, None) => return Err(BadInput("plan needs --scenario or --random".into())),
    };
    if let Some(s) = a.seed {
        req.seed = s;
    }
    if let Some(p) = &a.save_scenario {
        write_output(Some(p), &to_json(&world.scenario)?)?;
    }
    if let Some(p) = &a.save_request {
        write_output(Some(p), &to_json(&req)?)?;
    }
    let sw = Stopwatch::start();
    let report = with_jobs(a.common.jobs, || plan(&req, &world, &robot, &cfg))??;
    let ms = sw.elapsed_ms();
    if ms > cfg.budget_ms {
        log::warn!(target: "wbp::cli", "planning took {ms:.0} ms, over the {:.0} ms budget", cfg.budget_ms);
    }
    write_output(a.common.out.as_deref(), &to_json(&report)?)?;
    if let Some(p) = &a.svg {
        write_output(Some(p), &plan_svg(&world, &req, &report, &cfg))?;
    }
    Ok(match report.status {
        PlanStatus::Success => EXIT_OK,
        PlanStatus::NoPath => EXIT_NO_PATH,
        PlanStatus::AllCandidatesFailed => EXIT_ALL_FAILED,
    })
}

fn cmd_benchmark(a: &BenchmarkArgs) -> CliResult<i32> {
    let robot = load_robot(&a.common)?;
    let cfg = load_config(&a.common, &robot)?;
    let mut spec = match (&a.spec, a.desk_scale) {
        (Some(p), _) => read_json::<BenchmarkSpec>(p)?,
        (None, Some(n)) => BenchmarkSpec::desk_scale(n, 0),
        (None, None) => return Err(BadInput("benchmark needs --spec or --desk-scale".into())),
    };
    if let Some(s) = a.seed {
        spec.seed = s;
    }
    if let Some(b) = a.common.budget_ms {
        spec.budget_ms = b;
    }
    spec.validate()?;
    let parallel = a.common.jobs.is_some_and(|n| n > 1);
    let (result, rows) = with_jobs(a.common.jobs, || run_benchmark(&spec, &robot, &cfg, parallel))?;
    write_output(a.common.out.as_deref(), &to_json(&result)?)?;
    if let Some(p) = &a.csv {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in &rows {
            w.serialize(r).map_err(|e| BadInput(e.to_string()))?;
        }
        let bytes = w.into_inner().map_err(|e| BadInput(e.to_string()))?;
        fs::write(p, bytes).map_err(|e| BadInput(format!("{}: {e}", p.display())))?;
    }
    Ok(EXIT_OK)
}

/// A trajectory file holds either a bare export or a whole plan report.
fn read_trajectory(path: &Path) -> CliResult<Trajectory> {
    let value: serde_json::Value = read_json(path)?;
    let export: TrajectoryExport = if value.get("status").is_some() {
        let report: PlanReport = serde_json::from_value(value).map_err(|e| BadInput(format!("{}: {e}", path.display())))?;
        report.best.ok_or_else(|| BadInput(format!("{}: plan report has no trajectory", path.display())))?
    } else {
        serde_json::from_value(value).map_err(|e| BadInput(format!("{}: {e}", path.display())))?
    };
    Trajectory::from_export(&export).map_err(|e| BadInput(format!("{}: {e}", path.display())))
}

fn cmd_validate(a: &ValidateArgs) -> CliResult<i32> {
    let robot = load_robot(&a.common)?;
    let cfg = load_config(&a.common, &robot)?;
    let tr = read_trajectory(&a.trajectory)?;
    if tr.joints() != robot.n_joints() {
        return Err(BadInput(format!("trajectory has {} joints, robot has {}", tr.joints(), robot.n_joints())));
    }
    let scenario: Scenario = read_json(&a.scenario)?;
    let goal: Option<GoalSpec> = match &a.request {
        Some(p) => Some(read_json::<PlanRequest>(p)?.goal),
        None => None,
    };
    let world = cfg.build_world(scenario, &robot);
    let report = validate_trajectory(&tr, &world, &robot, &robot.limits, &cfg.validation, goal.as_ref());
    write_output(a.common.out.as_deref(), &to_json(&report)?)?;
    if !report.passed {
        for f in report.flagged(cfg.validation.tol) {
            eprintln!("violated: {f:?}");
        }
    }
    Ok(if report.passed { EXIT_OK } else { EXIT_INVALID })
}

fn cmd_gen_scenario(a: &GenScenarioArgs) -> CliResult<i32> {
    let params = match &a.params {
        Some(p) => read_json(p)?,
        None => ScenarioParams::desk_scale(),
    };
    let scenario = generate_scenario(&params, a.seed)?;
    write_output(a.out.as_deref(), &to_json(&scenario)?)?;
    if let Some(p) = &a.svg {
        let robot = RobotModel::default_mobile_manipulator();
        let world = PlannerConfig::default().build_world(scenario, &robot);
        write_output(Some(p), &world_svg(&world).finish())?;
    }
    Ok(EXIT_OK)
}

/// Parses `args` and runs the subcommand, returning the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_BAD_INPUT } else { EXIT_OK };
        }
    };
    let result = match &cli.command {
        Command::Plan(a) => cmd_plan(a),
        Command::Benchmark(a) => cmd_benchmark(a),
        Command::Validate(a) => cmd_validate(a),
        Command::GenScenario(a) => cmd_gen_scenario(a),
    };
    match result {
        Ok(code) => code,
        Err(BadInput(m)) => {
            eprintln!("error: {m}");
            EXIT_BAD_INPUT
        }
    }
}
