//! Whole-body initial paths along a base path.

use std::f64::consts::PI;

use nalgebra::Vector3;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::opt::{accumulate_goal_gradient, hinge, lbfgs_minimize, residual_of, GoalSpec, LbfgsParams};
use crate::robot::{accumulate_pair_gradient, collision_centers, pair_clearance, ChainPose, RobotModel, WholeBodyState};
use crate::topo::Path2D;
use crate::traj::joint_unsquash;
use crate::world::{state_is_free, World};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct InitConfig {
    /// Arc-length spacing of base states along a candidate path.
    pub base_interval: f64,
    /// Largest joint change between consecutive states.
    pub dq_step: f64,
    /// Clearance every initial state keeps from obstacles and itself.
    pub margin: f64,
    pub ik_restarts: usize,
    pub ik_iterations: usize,
    /// Joints stay inside this fraction of their limits during IK.
    pub ik_joint_fraction: f64,
    /// Coarse goal tolerance accepted from IK.
    pub goal_position_tol: f64,
    pub goal_rotation_tol: f64,
    /// Perturbation attempts per state before backtracking.
    pub repair_attempts: usize,
    /// Total perturbation attempts per arm path.
    pub budget: usize,
    /// Rings around the goal searched for a base goal when none is given.
    pub base_goal_radii: Vec<f64>,
    pub base_goal_angles: usize,
}

impl Default for InitConfig {
    fn default() -> Self {
        Self {
            base_interval: 0.5,
            dq_step: 0.5,
            margin: 0.02,
            ik_restarts: 8,
            ik_iterations: 200,
            ik_joint_fraction: 0.9,
            goal_position_tol: 0.1,
            goal_rotation_tol: 0.3,
            repair_attempts: 40,
            budget: 2000,
            base_goal_radii: vec![0.4, 0.55, 0.7, 0.85],
            base_goal_angles: 16,
        }
    }
}

/// Wraps an angle into `(-π, π]`.
pub fn wrap_angle(a: f64) -> f64 {
    let r = (a + PI).rem_euclid(2.0 * PI) - PI;
    if r == -PI {
        PI
    } else {
        r
    }
}

/// Arc-length-uniform base poses along `path`, both endpoints included,
/// plus every interior corner of the polyline so that straight moves between
/// consecutive poses stay on the path. Poses are headed along the path
/// tangent (the outgoing one at corners) and headings are unwrapped so
/// consecutive values differ by at most π.
pub fn sample_base_states(path: &Path2D, interval: f64) -> Vec<[f64; 3]> {
    assert!(interval > 0.0, "interval must be positive");
    let n = (path.length / interval).ceil().max(1.0) as usize;
    let mut at: Vec<(f64, [f64; 2])> = (0..=n)
        .map(|i| {
            let s = if i == n { path.length } else { i as f64 * interval };
            (s, path.point_at(s))
        })
        .collect();
    let w = &path.waypoints;
    let mut s = 0.0;
    for i in 1..w.len().saturating_sub(1) {
        s += (w[i][0] - w[i - 1][0]).hypot(w[i][1] - w[i - 1][1]);
        at.push((s, w[i]));
    }
    at.sort_by(|a, b| a.0.total_cmp(&b.0));
    at.dedup_by(|b, a| b.0 - a.0 <= 1e-9);
    let mut out: Vec<[f64; 3]> = Vec::with_capacity(at.len());
    for (s, p) in at {
        let t = path.tangent_at(s);
        let mut th = t[1].atan2(t[0]);
        if let Some(prev) = out.last() {
            th = prev[2] + wrap_angle(th - prev[2]);
        }
        out.push([p[0], p[1], th]);
    }
    out
}

/// Result of one IK solve with the base position held fixed.
#[derive(Debug, Clone, PartialEq)]
pub struct IkSolution {
    pub state: WholeBodyState,
    pub position_error: f64,
    pub rotation_error: f64,
}

struct IkProblem<'a> {
    world: &'a World,
    robot: &'a RobotModel,
    goal: &'a GoalSpec,
    xy: [f64; 2],
    bounds: Vec<f64>,
    margin: f64,
}

const IK_COLLISION_WEIGHT: f64 = 1e3;

impl IkProblem<'_> {
    fn unpack(&self, v: &[f64]) -> (f64, Vec<f64>, Vec<f64>) {
        let (q, jac) = v[1..].iter().zip(&self.bounds).map(|(&x, &b)| joint_unsquash(x, b)).unzip();
        (v[0], q, jac)
    }

    fn eval(&self, v: &[f64], g: &mut [f64]) -> f64 {
        let (th, q, jac) = self.unpack(v);
        let n = q.len();
        let chain = ChainPose::new(self.robot, [self.xy[0], self.xy[1], th], &q);
        let r = residual_of(&chain, self.goal);
        let mut f = 0.5 * r.iter().map(|x| x * x).sum::<f64>();
        let mut gs = vec![0.0; 3 + n];
        accumulate_goal_gradient(&chain, self.goal, &r, &mut gs);
        let col = &self.robot.collision;
        let centers = collision_centers(self.robot, &chain);
        for (i, s) in col.spheres.iter().enumerate() {
            let c = centers[i + 1];
            let sd = self.world.sdf.query([c.x, c.y, c.z]);
            let (h, d) = hinge(s.radius + self.margin - sd.distance);
            if d > 0.0 {
                f += IK_COLLISION_WEIGHT * h;
                let dp = -Vector3::from(sd.gradient) * (IK_COLLISION_WEIGHT * d);
                chain.accumulate_point_gradient(Some(s.link), &c, &dp, &mut gs);
            }
        }
        for &pair in &col.self_pairs {
            let cl = pair_clearance(self.robot, &centers, pair).clearance;
            let (h, d) = hinge(self.margin - cl);
            if d > 0.0 {
                f += IK_COLLISION_WEIGHT * h;
                accumulate_pair_gradient(self.robot, &chain, &centers, pair, -IK_COLLISION_WEIGHT * d, &mut gs);
            }
        }
        g[0] = gs[2];
        for i in 0..n {
            g[1 + i] = gs[3 + i] * jac[i];
        }
        f
    }
}

fn squash_clamped(q: f64, bound: f64) -> f64 {
    let v = (q / bound).clamp(-0.999, 0.999);
    crate::traj::joint_squash(v * bound, bound).unwrap_or(0.0)
}

/// Random-restart IK over heading and joints with `(x, y)` fixed.
///
/// The first restart starts from `(heading, q_seed)`. Solutions within the
/// coarse tolerance whose state is collision free are kept; the one with the
/// smallest largest joint change from `q_seed` wins.
pub fn solve_ik<R: Rng>(
    world: &World,
    robot: &RobotModel,
    goal: &GoalSpec,
    xy: [f64; 2],
    heading: f64,
    q_seed: &[f64],
    cfg: &InitConfig,
    rng: &mut R,
) -> Option<IkSolution> {
    let bounds: Vec<f64> = robot.limits.q_max.iter().map(|m| m * cfg.ik_joint_fraction).collect();
    let prob = IkProblem { world, robot, goal, xy, bounds: bounds.clone(), margin: cfg.margin + 0.01 };
    let params = LbfgsParams { max_iterations: cfg.ik_iterations, g_tol: 1e-9, rel_tol: 1e-10, ..LbfgsParams::default() };
    let mut best: Option<(f64, IkSolution)> = None;
    for restart in 0..cfg.ik_restarts.max(1) {
        let mut v0 = Vec::with_capacity(1 + bounds.len());
        if restart == 0 {
            v0.push(heading);
            v0.extend(q_seed.iter().zip(&bounds).map(|(&q, &b)| squash_clamped(q, b)));
        } else {
            v0.push(heading + rng.gen_range(-PI..PI));
            v0.extend(bounds.iter().map(|&b| squash_clamped(rng.gen_range(-0.8..0.8) * b, b)));
        }
        let res = lbfgs_minimize(|v, g| prob.eval(v, g), &v0, &params);
        let (th, q, _) = prob.unpack(&res.x);
        let chain = ChainPose::new(robot, [xy[0], xy[1], th], &q);
        let r = residual_of(&chain, goal);
        let pe = Vector3::new(r[0], r[1], r[2]).norm() / goal.position_weight;
        let re = r[3..].iter().map(|x| x * x).sum::<f64>().sqrt() / goal.rotation_weight;
        if !(pe <= cfg.goal_position_tol && re <= cfg.goal_rotation_tol) {
            continue;
        }
        let state = WholeBodyState { x: xy[0], y: xy[1], theta: th, q };
        if !state_is_free(world, robot, &state, cfg.margin) {
            continue;
        }
        let change = state.q.iter().zip(q_seed).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        let score = change + 10.0 * pe + re;
        if best.as_ref().map_or(true, |(s, _)| score < *s) {
            best = Some((score, IkSolution { state, position_error: pe, rotation_error: re }));
        }
    }
    best.map(|(_, s)| s)
}

/// Base position for the goal when none is supplied: the first point on rings
/// around the goal's ground projection, nearest to `from` first, where a
/// collision-free IK solution exists.
pub fn choose_base_goal<R: Rng>(
    world: &World,
    robot: &RobotModel,
    goal: &GoalSpec,
    from: [f64; 2],
    q_seed: &[f64],
    clearance: f64,
    cfg: &InitConfig,
    rng: &mut R,
) -> Option<IkSolution> {
    let g = [goal.position[0], goal.position[1]];
    let mut cands = Vec::new();
    for &r in &cfg.base_goal_radii {
        for k in 0..cfg.base_goal_angles.max(1) {
            let a = 2.0 * PI * k as f64 / cfg.base_goal_angles.max(1) as f64;
            let p = [g[0] + r * a.cos(), g[1] + r * a.sin()];
            let e = world.esdf.query(p);
            if e.clamped || e.distance < clearance {
                continue;
            }
            let d = (p[0] - from[0]).hypot(p[1] - from[1]);
            cands.push((d, cands.len(), p));
        }
    }
    cands.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let few = InitConfig { ik_restarts: cfg.ik_restarts.min(4), ..cfg.clone() };
    for (_, _, p) in cands {
        let heading = (g[1] - p[1]).atan2(g[0] - p[0]);
        if let Some(s) = solve_ik(world, robot, goal, p, heading, q_seed, &few, rng) {
            return Some(s);
        }
    }
    None
}

fn lerp(a: &[f64], b: &[f64], u: f64) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + u * (y - x)).collect()
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

/// Inserts interpolated base states until no consecutive pair needs a joint
/// step above `dq_step` when joints move linearly from `q0` to `qf`.
fn densify(base: &[[f64; 3]], q0: &[f64], qf: &[f64], dq_step: f64) -> Vec<[f64; 3]> {
    let steps = base.len().saturating_sub(1).max(1);
    let need = (max_diff(q0, qf) / dq_step).ceil() as usize;
    if need <= steps || base.len() < 2 {
        return base.to_vec();
    }
    let per = need.div_ceil(steps);
    let mut out = Vec::with_capacity(steps * per + 1);
    for w in base.windows(2) {
        for k in 0..per {
            let u = k as f64 / per as f64;
            out.push([w[0][0] + u * (w[1][0] - w[0][0]), w[0][1] + u * (w[1][1] - w[0][1]), w[0][2] + u * (w[1][2] - w[0][2])]);
        }
    }
    out.push(*base.last().expect("non-empty"));
    out
}

/// Collision-free whole-body states over `base_states`.
///
/// The final joints come from IK at the last base position (the final heading
/// is solved along with them). Intermediate joints interpolate linearly from
/// `start_q` and are repaired by random perturbation, backtracking one state
/// when a state cannot be repaired. The first base state keeps its heading.
pub fn sample_arm_path<R: Rng>(
    base_states: &[[f64; 3]],
    start_q: &[f64],
    goal: &GoalSpec,
    world: &World,
    robot: &RobotModel,
    cfg: &InitConfig,
    rng: &mut R,
) -> Result<Vec<WholeBodyState>> {
    let fail = |m: &str| Err(Error::InitFailure(m.to_string()));
    let Some(&last) = base_states.last() else {
        return fail("no base states");
    };
    let Some(ik) = solve_ik(world, robot, goal, [last[0], last[1]], last[2], start_q, cfg, rng) else {
        return fail("no collision-free IK solution at the goal base position");
    };
    if base_states.len() < 2 {
        return fail("a base path needs at least two states");
    }
    let qf = ik.state.q.clone();
    let theta_f = last[2] + wrap_angle(ik.state.theta - last[2]);
    let mut base = base_states.to_vec();
    *base.last_mut().expect("non-empty") = [last[0], last[1], theta_f];
    let base = densify(&base, start_q, &qf, cfg.dq_step);
    let n = base.len();
    let q_lim: Vec<f64> = robot.limits.q_max.iter().map(|m| m * cfg.ik_joint_fraction).collect();

    let mut qs: Vec<Vec<f64>> = vec![start_q.to_vec()];
    let mut visits = vec![0usize; n];
    let mut spent = 0usize;
    let mut i = 1;
    while i + 1 < n {
        let u = i as f64 / (n - 1) as f64;
        let target = lerp(start_q, &qf, u);
        let remaining = (n - 1 - i) as f64;
        let prev = &qs[i - 1];
        let mut found = None;
        let first = usize::from(visits[i] > 0);
        visits[i] += 1;
        for a in first..=cfg.repair_attempts {
            let q: Vec<f64> = if a == 0 {
                target.clone()
            } else {
                spent += 1;
                let sigma = cfg.dq_step * (a as f64 / cfg.repair_attempts.max(1) as f64).sqrt();
                target.iter().zip(&q_lim).map(|(&t, &l)| (t + rng.gen_range(-sigma..=sigma)).clamp(-l, l)).collect()
            };
            if max_diff(&q, prev) > cfg.dq_step + 1e-12 || max_diff(&q, &qf) > cfg.dq_step * remaining + 1e-12 {
                continue;
            }
            let s = WholeBodyState { x: base[i][0], y: base[i][1], theta: base[i][2], q: q.clone() };
            if state_is_free(world, robot, &s, cfg.margin) {
                found = Some(q);
                break;
            }
        }
        match found {
            Some(q) => {
                qs.truncate(i);
                qs.push(q);
                i += 1;
            }
            None if spent >= cfg.budget => return fail("arm path repair budget exhausted"),
            None => {
                if i > 1 {
                    qs.truncate(i - 1);
                    i -= 1;
                }
            }
        }
        if spent >= cfg.budget {
            return fail("arm path repair budget exhausted");
        }
    }
    qs.push(qf);
    Ok(qs
        .into_iter()
        .zip(&base)
        .map(|(q, b)| WholeBodyState { x: b[0], y: b[1], theta: b[2], q })
        .collect())
}
