//! Independent trajectory checker.
//!
//! Constraints are evaluated directly at dense sample times against the true
//! limits and exact obstacle geometry. Base positions come from a separate
//! fine composite Simpson integration, not from the optimizer's quadrature.

use serde::{Deserialize, Serialize};

use crate::opt::{goal_residual, ConstraintFamily, GoalSpec};
use crate::robot::{collision_points, self_collision_distances, DynamicLimits, RobotModel, WholeBodyState};
use crate::traj::{Trajectory, Q0, S, YAW};
use crate::world::{sdf3_query, World};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ValidationConfig {
    /// Samples per segment.
    pub samples_per_segment: usize,
    /// Simpson sub-intervals between consecutive samples (rounded up to even).
    pub substeps: usize,
    /// Largest normalized violation accepted per family.
    pub tol: f64,
    pub goal_position_tol: f64,
    pub goal_rotation_tol: f64,
}

impl Default for ValidationConfig {
    fn default() -> Self {
        Self { samples_per_segment: 160, substeps: 4, tol: 1e-3, goal_position_tol: 1e-3, goal_rotation_tol: 1e-2 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyViolation {
    pub family: ConstraintFamily,
    /// Largest violation, zero when satisfied everywhere. Dynamic families
    /// are relative to their bound; collision families are in meters.
    pub max_violation: f64,
    /// Time of the largest violation.
    pub at_time: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub passed: bool,
    pub samples: usize,
    pub families: Vec<FamilyViolation>,
    pub end_state: WholeBodyState,
    pub total_duration: f64,
    pub goal_position_error: Option<f64>,
    pub goal_rotation_error: Option<f64>,
}

impl ValidationReport {
    pub fn violation(&self, f: ConstraintFamily) -> f64 {
        self.families.iter().find(|v| v.family == f).map_or(0.0, |v| v.max_violation)
    }

    /// Families whose violation exceeds `tol`.
    pub fn flagged(&self, tol: f64) -> Vec<ConstraintFamily> {
        self.families.iter().filter(|v| !(v.max_violation < tol)).map(|v| v.family).collect()
    }
}

/// `ṡ cos θ`, `ṡ sin θ` at local time `t` of `seg`.
fn velocity(tr: &Trajectory, seg: usize, t: f64) -> [f64; 2] {
    let v = tr.eval_channel(seg, t, S, 1);
    let th = tr.eval_channel(seg, t, YAW, 0);
    [v * th.cos(), v * th.sin()]
}

fn simpson(tr: &Trajectory, seg: usize, a: f64, b: f64, n: usize) -> [f64; 2] {
    let h = (b - a) / n as f64;
    let mut acc = [0.0; 2];
    for i in 0..=n {
        let w = if i == 0 || i == n {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        };
        let f = velocity(tr, seg, a + i as f64 * h);
        acc[0] += w * f[0];
        acc[1] += w * f[1];
    }
    [acc[0] * h / 3.0, acc[1] * h / 3.0]
}

/// Sample times `(segment, local time, global time)` and base positions.
pub fn dense_positions(tr: &Trajectory, per_segment: usize, substeps: usize) -> Vec<(usize, f64, f64, [f64; 2])> {
    let sub = substeps.max(2).next_multiple_of(2);
    let per = per_segment.max(1);
    let m = tr.segments();
    let mut out = Vec::with_capacity(m * per + 1);
    let mut p = [tr.x0, tr.y0];
    let mut t0 = 0.0;
    for j in 0..m {
        let tj = tr.durations[j];
        let h = tj / per as f64;
        let last = if j + 1 == m { per } else { per - 1 };
        for l in 0..=last {
            let t = l as f64 * h;
            out.push((j, t, t0 + t, p));
            if l < per {
                let d = simpson(tr, j, t, t + h, sub);
                p[0] += d[0];
                p[1] += d[1];
            }
        }
        t0 += tj;
    }
    out
}

/// Checks every constraint family at dense samples against `limits`, and the
/// end-effector goal when given.
pub fn validate_trajectory(
    tr: &Trajectory,
    world: &World,
    robot: &RobotModel,
    limits: &DynamicLimits,
    cfg: &ValidationConfig,
    goal: Option<&GoalSpec>,
) -> ValidationReport {
    let n = tr.joints();
    let col = &robot.collision;
    let mut worst = [(0.0f64, 0.0f64); 6];
    let mut note = |f: ConstraintFamily, v: f64, t: f64| {
        let w = &mut worst[f as usize];
        // NaN must register as a violation
        if !(v <= w.0) {
            *w = (if v.is_nan() { f64::INFINITY } else { v }, t);
        }
    };
    let finite = tr.coeffs.iter().all(|c| c.is_finite()) && tr.durations.iter().all(|t| t.is_finite() && *t > 0.0);
    let samples = if finite { dense_positions(tr, cfg.samples_per_segment, cfg.substeps) } else { Vec::new() };
    let mut vals = [vec![0.0; tr.dim], vec![0.0; tr.dim], vec![0.0; tr.dim]];
    for &(j, t, tg, p) in &samples {
        for (o, v) in vals.iter_mut().enumerate() {
            tr.eval_segment(j, t, o, v);
        }
        let (v, om) = (vals[1][S], vals[1][YAW]);
        let vw = limits.v_max * limits.omega_max;
        let diamond = (limits.v_max * om + limits.omega_max * v).abs().max((limits.v_max * om - limits.omega_max * v).abs());
        note(ConstraintFamily::Diamond, diamond / vw - 1.0, tg);
        let acc = (vals[2][S].abs() / limits.a_max).max(vals[2][YAW].abs() / limits.beta_max);
        note(ConstraintFamily::BaseAccel, acc - 1.0, tg);
        for i in 0..n {
            let pv = (vals[0][Q0 + i].abs() / limits.q_max[i]).max(vals[1][Q0 + i].abs() / limits.dq_max[i]);
            note(ConstraintFamily::JointPosVel, pv - 1.0, tg);
            note(ConstraintFamily::JointAcc, vals[2][Q0 + i].abs() / limits.ddq_max[i] - 1.0, tg);
        }
        let esdf = world.esdf.query(p);
        let base_grid = col.base_threshold - esdf.distance;
        let base_exact = -world.base_clearance(p, col.cylinder.radius);
        let mut env = if esdf.clamped { f64::INFINITY } else { base_grid.max(base_exact) };
        let q = &vals[0][Q0..];
        let pts = collision_points(robot, [p[0], p[1], vals[0][YAW]], q);
        for (c, r) in pts.iter().skip(1) {
            // the index is exact wherever a sphere of radius below its cutoff can touch
            let d = if *r < world.sdf.cutoff { world.sdf.query(*c).distance } else { sdf3_query(&world.scenario, *c).distance };
            env = env.max(r - d);
        }
        note(ConstraintFamily::EnvCollision, env, tg);
        let selfmin = self_collision_distances(robot, q).into_iter().fold(f64::INFINITY, f64::min);
        note(ConstraintFamily::SelfCollision, -selfmin, tg);
    }

    let total_duration = tr.total_duration();
    let end_state = match samples.last() {
        Some(&(j, t, _, p)) => {
            tr.eval_segment(j, t, 0, &mut vals[0]);
            WholeBodyState { x: p[0], y: p[1], theta: vals[0][YAW], q: vals[0][Q0..].to_vec() }
        }
        None => WholeBodyState { x: f64::NAN, y: f64::NAN, theta: f64::NAN, q: vec![f64::NAN; n] },
    };
    let (gp, gr) = match goal {
        Some(g) => {
            let r = goal_residual(robot, end_state.base(), &end_state.q, g);
            (Some(r.position_error() / g.position_weight), Some(r.rotation_error() / g.rotation_weight))
        }
        None => (None, None),
    };
    let families: Vec<FamilyViolation> = ConstraintFamily::ALL
        .iter()
        .map(|&f| {
            let (v, t) = worst[f as usize];
            FamilyViolation { family: f, max_violation: v.max(0.0), at_time: t }
        })
        .collect();
    let goal_ok = gp.map_or(true, |e| e < cfg.goal_position_tol) && gr.map_or(true, |e| e < cfg.goal_rotation_tol);
    let passed = finite && goal_ok && families.iter().all(|f| f.max_violation < cfg.tol);
    ValidationReport {
        passed,
        samples: samples.len(),
        families,
        end_state,
        total_duration,
        goal_position_error: gp,
        goal_rotation_error: gr,
    }
}
