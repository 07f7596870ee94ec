use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::init::{choose_base_goal, sample_arm_path, sample_base_states, wrap_angle};
use super::validate::{validate_trajectory, ValidationReport};
use super::PlannerConfig;
use crate::clock::Stopwatch;
use crate::opt::{alm_solve, AlmStatus, GoalSpec, StartConditions, WholeBodyProblem};
use crate::robot::{RobotModel, WholeBodyState};
use crate::topo::{candidate_paths, Path2D};
use crate::traj::{Trajectory, TrajectoryExport};
use crate::world::{state_is_free, World};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanRequest {
    pub start: StartConditions,
    pub goal: GoalSpec,
    /// Base position at the goal; chosen near the goal when absent.
    #[serde(default)]
    pub base_goal: Option<[f64; 2]>,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlanStatus {
    Success,
    NoPath,
    AllCandidatesFailed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CandidateStatus {
    Success,
    InitFailed,
    SolverFailed,
    NotConverged,
    ValidationFailed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateReport {
    pub index: usize,
    pub status: CandidateStatus,
    pub path_length: f64,
    pub init_success: bool,
    pub segments: usize,
    pub opt_status: Option<AlmStatus>,
    pub outer_iterations: usize,
    pub inner_iterations: usize,
    pub residual_inf: Option<f64>,
    pub cost: Option<f64>,
    /// Jerk cost plus time regularization plus constraint penalty.
    pub objective: Option<f64>,
    pub total_duration: Option<f64>,
    pub failure: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub wall_ms: Option<f64>,
}

impl CandidateReport {
    pub fn new(index: usize, path_length: f64) -> Self {
        Self {
            index,
            status: CandidateStatus::InitFailed,
            path_length,
            init_success: false,
            segments: 0,
            opt_status: None,
            outer_iterations: 0,
            inner_iterations: 0,
            residual_inf: None,
            cost: None,
            objective: None,
            total_duration: None,
            failure: None,
            wall_ms: None,
        }
    }
}

/// A candidate's report plus its trajectory and validation when it got that far.
#[derive(Debug, Clone)]
pub struct CandidateOutcome {
    pub report: CandidateReport,
    pub trajectory: Option<Trajectory>,
    pub validation: Option<ValidationReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanReport {
    pub status: PlanStatus,
    pub message: Option<String>,
    pub base_goal: Option<[f64; 2]>,
    pub best_candidate: Option<usize>,
    pub best: Option<TrajectoryExport>,
    /// `‖T‖₁` of the best trajectory.
    pub total_duration: Option<f64>,
    pub objective: Option<f64>,
    pub validation: Option<ValidationReport>,
    pub candidate_paths: Vec<Path2D>,
    pub candidates: Vec<CandidateReport>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub wall_ms: Option<f64>,
}

impl PlanReport {
    fn failed(status: PlanStatus, message: String, base_goal: Option<[f64; 2]>) -> Self {
        Self {
            status,
            message: Some(message),
            base_goal,
            best_candidate: None,
            best: None,
            total_duration: None,
            objective: None,
            validation: None,
            candidate_paths: Vec::new(),
            candidates: Vec::new(),
            wall_ms: None,
        }
    }

    pub fn best_trajectory(&self) -> Option<Result<Trajectory>> {
        self.best.as_ref().map(Trajectory::from_export)
    }
}

fn lerp(a: &[f64], b: &[f64], u: f64) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + u * (y - x)).collect()
}

/// `[s, θ, q…]` at normalized progress `u` along `init`, by arc length when
/// the base moves and by state index otherwise.
fn interpolate(init: &[WholeBodyState], arc: &[f64], u: f64) -> Vec<f64> {
    let n = init.len();
    let total = arc[n - 1];
    let (i, a) = if total > 1e-9 {
        let s = u * total;
        let i = arc.partition_point(|&v| v <= s).clamp(1, n - 1) - 1;
        let span = arc[i + 1] - arc[i];
        (i, if span > 0.0 { ((s - arc[i]) / span).clamp(0.0, 1.0) } else { 0.0 })
    } else {
        let x = u * (n - 1) as f64;
        let i = (x.floor() as usize).min(n - 2);
        (i, x - i as f64)
    };
    let (p, q) = (&init[i], &init[i + 1]);
    let mut out = vec![arc[i] + a * (arc[i + 1] - arc[i]), p.theta + a * (q.theta - p.theta)];
    out.extend(lerp(&p.q, &q.q, a));
    out
}

/// A piece of the initial base motion: a straight run at constant heading
/// or a turn in place, split into `n` segments.
struct Leg {
    s: [f64; 2],
    th: [f64; 2],
    n: usize,
}

impl Leg {
    fn turn(&self) -> bool {
        self.s[1] - self.s[0] <= 1e-9
    }

    /// Size in units of one nominal segment.
    fn size(&self, segment_length: f64) -> f64 {
        if self.turn() {
            (self.th[1] - self.th[0]).abs() / std::f64::consts::FRAC_PI_2
        } else {
            (self.s[1] - self.s[0]) / segment_length
        }
    }
}

/// Waypoints `[s, θ, q…]` that drive straight along each chord of `init` and
/// turn in place wherever the heading changes, including at the start and
/// the end. Straight runs are split into pieces of about `segment_length`.
/// Returns `None` when the path does not move or the segment count cannot
/// be brought into `[min_segments, max_segments]`.
fn keyframe_points(init: &[WholeBodyState], arc: &[f64], cfg: &PlannerConfig) -> Option<Vec<Vec<f64>>> {
    let n = init.len();
    if arc[n - 1] <= 1e-9 {
        return None;
    }
    let mut legs: Vec<Leg> = Vec::new();
    let mut th = init[0].theta;
    let push_turn = |legs: &mut Vec<Leg>, s: f64, from: f64, to: f64| {
        if (to - from).abs() > 1e-6 {
            legs.push(Leg { s: [s, s], th: [from, to], n: 1 });
        }
    };
    for i in 0..n - 1 {
        let (dx, dy) = (init[i + 1].x - init[i].x, init[i + 1].y - init[i].y);
        if arc[i + 1] - arc[i] <= 1e-9 {
            continue;
        }
        let phi = th + wrap_angle(dy.atan2(dx) - th);
        push_turn(&mut legs, arc[i], th, phi);
        th = phi;
        match legs.last_mut() {
            Some(l) if !l.turn() && (l.th[1] - phi).abs() <= 1e-9 => l.s[1] = arc[i + 1],
            _ => legs.push(Leg { s: [arc[i], arc[i + 1]], th: [phi, phi], n: 1 }),
        }
    }
    let last = init[n - 1].theta;
    push_turn(&mut legs, arc[n - 1], th, th + wrap_angle(last - th));
    let sl = cfg.segment_length;
    for l in legs.iter_mut() {
        l.n = (l.size(sl).ceil() as usize).max(1);
        if l.turn() {
            l.n = 1;
        }
    }
    let total = |legs: &[Leg]| legs.iter().map(|l| l.n).sum::<usize>();
    while total(&legs) < cfg.min_segments {
        let l = legs.iter_mut().max_by(|a, b| (a.size(sl) / a.n as f64).total_cmp(&(b.size(sl) / b.n as f64)))?;
        l.n += 1;
    }
    while total(&legs) > cfg.max_segments {
        let l = legs
            .iter_mut()
            .filter(|l| l.n > 1)
            .min_by(|a, b| (a.size(sl) / (a.n - 1) as f64).total_cmp(&(b.size(sl) / (b.n - 1) as f64)))?;
        l.n -= 1;
    }
    let q_at = |s: f64| interpolate(init, arc, s / arc[n - 1]).split_off(2);
    let mut points = vec![{
        let mut p = vec![0.0, init[0].theta];
        p.extend_from_slice(&init[0].q);
        p
    }];
    for l in &legs {
        for k in 1..=l.n {
            let u = k as f64 / l.n as f64;
            let s = l.s[0] + u * (l.s[1] - l.s[0]);
            let mut p = vec![s, l.th[0] + u * (l.th[1] - l.th[0])];
            p.extend(q_at(s));
            points.push(p);
        }
    }
    // the last state's joints exactly, whatever the final leg is
    let end = points.last_mut().expect("non-empty");
    end.truncate(2);
    end.extend_from_slice(&init[n - 1].q);
    Some(points)
}

/// Optimizes one whole-body initial path and validates the result.
pub fn optimize_candidate(
    init: &[WholeBodyState],
    start: &StartConditions,
    goal: &GoalSpec,
    world: &World,
    robot: &RobotModel,
    cfg: &PlannerConfig,
    report: &mut CandidateReport,
) -> (Option<Trajectory>, Option<ValidationReport>) {
    if init.len() < 2 {
        report.status = CandidateStatus::InitFailed;
        report.failure = Some("initial path needs at least two states".into());
        return (None, None);
    }
    let mut arc = vec![0.0];
    for w in init.windows(2) {
        let d = (w[1].x - w[0].x).hypot(w[1].y - w[0].y);
        arc.push(arc.last().expect("non-empty") + d);
    }
    let points = keyframe_points(init, &arc, cfg).unwrap_or_else(|| {
        let length = *arc.last().expect("non-empty");
        let m = ((length / cfg.segment_length).ceil() as usize).clamp(cfg.min_segments, cfg.max_segments);
        (0..=m).map(|j| interpolate(init, &arc, j as f64 / m as f64)).collect()
    });
    let m = points.len() - 1;
    report.segments = m;

    let lim = &robot.limits;
    let rs = cfg.reference_speed;
    let durations: Vec<f64> = points
        .windows(2)
        .map(|w| {
            let base = ((w[1][0] - w[0][0]).abs() / lim.v_max + (w[1][1] - w[0][1]).abs() / lim.omega_max) / rs;
            let joints = (2..w[0].len()).map(|c| (w[1][c] - w[0][c]).abs() / (rs * lim.dq_max[c - 2])).fold(0.0, f64::max);
            base.max(joints).max(cfg.min_segment_duration)
        })
        .collect();
    let waypoints: Vec<f64> = points[1..m].iter().flatten().copied().collect();
    let end = &points[m];

    let problem = WholeBodyProblem::new(world, robot, &cfg.optimizer, goal, start, m);
    let x0 = match problem.encode(&waypoints, end[0], end[1], &end[2..], &durations) {
        Ok(x) => x,
        Err(e) => {
            report.status = CandidateStatus::SolverFailed;
            report.failure = Some(format!("initial guess outside joint limits: {e}"));
            return (None, None);
        }
    };
    let sol = alm_solve(&problem, &x0, &cfg.optimizer.alm, &cfg.optimizer.lbfgs);
    report.opt_status = Some(sol.status);
    report.outer_iterations = sol.outer_iterations;
    report.inner_iterations = sol.inner_iterations;
    report.residual_inf = Some(sol.residual_inf);
    report.cost = Some(sol.evaluation.cost);
    report.objective = Some(sol.evaluation.value);
    if sol.status == AlmStatus::InvalidStart {
        report.status = CandidateStatus::SolverFailed;
        report.failure = Some("objective not finite at the initial guess".into());
        return (None, None);
    }
    let tr = match problem.trajectory(&sol.x) {
        Ok(t) => t,
        Err(e) => {
            report.status = CandidateStatus::SolverFailed;
            report.failure = Some(e.to_string());
            return (None, None);
        }
    };
    report.total_duration = Some(tr.total_duration());
    let v = validate_trajectory(&tr, world, robot, &robot.limits, &cfg.validation, Some(goal));
    if sol.status != AlmStatus::Converged {
        report.status = CandidateStatus::NotConverged;
        report.failure = Some(format!("goal residual {:.3e} above tolerance", sol.residual_inf));
    } else if !v.passed {
        report.status = CandidateStatus::ValidationFailed;
        let flagged: Vec<String> = v
            .families
            .iter()
            .filter(|f| !(f.max_violation < cfg.validation.tol))
            .map(|f| format!("{} {:.2e} at t={:.2}", f.family.name(), f.max_violation, f.at_time))
            .collect();
        report.failure = Some(if flagged.is_empty() { "goal error above tolerance".into() } else { flagged.join(", ") });
    } else {
        report.status = CandidateStatus::Success;
    }
    (Some(tr), Some(v))
}

fn check_request(req: &PlanRequest, world: &World, robot: &RobotModel, cfg: &PlannerConfig) -> Result<()> {
    cfg.validate(robot)?;
    req.goal.validate()?;
    let s = &req.start;
    let n = robot.n_joints();
    if s.state.q.len() != n {
        return Err(Error::InvalidInput(format!("start.state.q needs {n} joints, got {}", s.state.q.len())));
    }
    if (!s.dq.is_empty() && s.dq.len() != n) || (!s.ddq.is_empty() && s.ddq.len() != n) {
        return Err(Error::InvalidInput(format!("start.dq and start.ddq need {n} entries or none")));
    }
    let all = [s.state.x, s.state.y, s.state.theta, s.v, s.omega, s.a, s.beta];
    if all.iter().chain(&s.state.q).chain(&s.dq).chain(&s.ddq).any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("start contains non-finite values".into()));
    }
    if !s.state.q.iter().zip(&robot.limits.q_max).all(|(q, m)| q.abs() < *m) {
        return Err(Error::InvalidInput("start joints outside their limits".into()));
    }
    if !state_is_free(world, robot, &s.state, 0.0) {
        return Err(Error::InvalidInput("start state is in collision".into()));
    }
    if let Some(b) = req.base_goal {
        if !b.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidInput("base_goal must be finite".into()));
        }
    }
    Ok(())
}

/// Per-candidate generator: the request seed on stream `index + 1`.
fn candidate_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(index as u64 + 1);
    r
}

fn run_candidate(
    index: usize,
    path: &Path2D,
    req: &PlanRequest,
    world: &World,
    robot: &RobotModel,
    cfg: &PlannerConfig,
) -> CandidateOutcome {
    let sw = Stopwatch::start();
    let mut report = CandidateReport::new(index, path.length);
    let mut rng = candidate_rng(req.seed, index);
    let mut base = sample_base_states(path, cfg.init.base_interval);
    base[0][2] = req.start.state.theta;
    for i in 1..base.len() {
        base[i][2] = base[i - 1][2] + wrap_angle(base[i][2] - base[i - 1][2]);
    }
    let (trajectory, validation) = match sample_arm_path(&base, &req.start.state.q, &req.goal, world, robot, &cfg.init, &mut rng) {
        Ok(init) => {
            report.init_success = true;
            optimize_candidate(&init, &req.start, &req.goal, world, robot, cfg, &mut report)
        }
        Err(e) => {
            report.failure = Some(e.to_string());
            (None, None)
        }
    };
    if cfg.report_timing {
        report.wall_ms = Some(sw.elapsed_ms());
    }
    log::info!(
        target: "wbp::plan",
        "candidate {index}: {:?} length {:.2} segments {} outer {} inner {} objective {:?} failure {:?} ({:.0} ms)",
        report.status,
        path.length,
        report.segments,
        report.outer_iterations,
        report.inner_iterations,
        report.objective,
        report.failure,
        sw.elapsed_ms()
    );
    CandidateOutcome { report, trajectory, validation }
}

/// Runs every candidate path and selects the validated one with the lowest
/// objective, ties going to the lower index.
pub fn plan_with_paths(
    req: &PlanRequest,
    world: &World,
    robot: &RobotModel,
    cfg: &PlannerConfig,
    base_goal: [f64; 2],
    paths: Vec<Path2D>,
) -> PlanReport {
    let run = |(i, p): (usize, &Path2D)| run_candidate(i, p, req, world, robot, cfg);
    #[cfg(feature = "parallel")]
    let outcomes: Vec<CandidateOutcome> = {
        use rayon::prelude::*;
        paths.par_iter().enumerate().map(run).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let outcomes: Vec<CandidateOutcome> = paths.iter().enumerate().map(run).collect();

    let mut best: Option<usize> = None;
    for (i, o) in outcomes.iter().enumerate() {
        if o.report.status != CandidateStatus::Success {
            continue;
        }
        let f = o.report.objective.unwrap_or(f64::INFINITY);
        if best.map_or(true, |b| f < outcomes[b].report.objective.unwrap_or(f64::INFINITY)) {
            best = Some(i);
        }
    }
    let candidates: Vec<CandidateReport> = outcomes.iter().map(|o| o.report.clone()).collect();
    let mut report = PlanReport {
        status: PlanStatus::AllCandidatesFailed,
        message: None,
        base_goal: Some(base_goal),
        best_candidate: None,
        best: None,
        total_duration: None,
        objective: None,
        validation: None,
        candidate_paths: paths,
        candidates,
        wall_ms: None,
    };
    match best {
        Some(b) => {
            let o = &outcomes[b];
            let tr = o.trajectory.as_ref().expect("successful candidates carry a trajectory");
            report.status = PlanStatus::Success;
            report.best_candidate = Some(b);
            report.best = Some(tr.to_export());
            report.total_duration = Some(tr.total_duration());
            report.objective = o.report.objective;
            report.validation = o.validation.clone();
        }
        None => report.message = Some("no candidate produced a validated trajectory".into()),
    }
    report
}

/// Plans a whole-body trajectory from the request's start to its goal pose.
///
/// Malformed requests are errors; planning failures are report statuses.
pub fn plan(req: &PlanRequest, world: &World, robot: &RobotModel, cfg: &PlannerConfig) -> Result<PlanReport> {
    check_request(req, world, robot, cfg)?;
    let sw = Stopwatch::start();
    let start_xy = [req.start.state.x, req.start.state.y];
    let base_goal = match req.base_goal {
        Some(b) => b,
        None => {
            let mut rng = candidate_rng(req.seed, usize::MAX - 1);
            let clearance = cfg.topo.clearance_min.max(robot.collision.base_threshold + cfg.init.margin);
            match choose_base_goal(world, robot, &req.goal, start_xy, &req.start.state.q, clearance, &cfg.init, &mut rng) {
                Some(s) => [s.state.x, s.state.y],
                None => {
                    return Ok(PlanReport::failed(
                        PlanStatus::AllCandidatesFailed,
                        "goal pose is not reachable from any collision-free base position".into(),
                        None,
                    ))
                }
            }
        }
    };
    let mut report = match candidate_paths(&world.esdf, start_xy, base_goal, &cfg.topo, req.seed) {
        Ok((_, paths)) if !paths.is_empty() => plan_with_paths(req, world, robot, cfg, base_goal, paths),
        Ok(_) | Err(Error::DisconnectedRoadmap) => {
            PlanReport::failed(PlanStatus::NoPath, "no base path between start and goal".into(), Some(base_goal))
        }
        Err(Error::InvalidInput(m)) => PlanReport::failed(PlanStatus::NoPath, m, Some(base_goal)),
        Err(e) => return Err(e),
    };
    if cfg.report_timing {
        report.wall_ms = Some(sw.elapsed_ms());
    }
    Ok(report)
}
