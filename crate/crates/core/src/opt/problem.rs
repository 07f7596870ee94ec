//! Decision-variable layout and the full objective of the whole-body problem.
//!
//! `x = [P, s_f, θ_f, 𝔮_f, τ]` where `P` holds the `M − 1` interior waypoints
//! (`s, θ, 𝔮₁…𝔮_N` per junction, joints squashed), `𝔮_f` the squashed final
//! joints and `τ` the transformed durations.

use serde::{Deserialize, Serialize};

use super::alm::{EqualityProblem, Evaluation};
use super::goal::{accumulate_goal_gradient, residual_of};
use super::penalty::{accumulate_penalty, PenaltySetup};
use super::{jerk_cost, GoalSpec, OptimizerConfig};
use crate::robot::{backprop_positions, sample_positions, ChainPose, DynamicLimits, RobotModel, WholeBodyState};
use crate::traj::{joint_squash, joint_unsquash, time_transform, time_transform_inv, Boundary, Minco, Trajectory, Q0, S, YAW};
use crate::world::World;
use crate::Result;

/// Start state with its first and second derivatives.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StartConditions {
    pub state: WholeBodyState,
    #[serde(default)]
    pub v: f64,
    #[serde(default)]
    pub omega: f64,
    #[serde(default)]
    pub a: f64,
    #[serde(default)]
    pub beta: f64,
    /// Joint rates; empty means zeros.
    #[serde(default)]
    pub dq: Vec<f64>,
    #[serde(default)]
    pub ddq: Vec<f64>,
}

impl StartConditions {
    pub fn at_rest(state: WholeBodyState) -> Self {
        Self { state, v: 0.0, omega: 0.0, a: 0.0, beta: 0.0, dq: Vec::new(), ddq: Vec::new() }
    }

    /// `[value, rate, acceleration]` per channel.
    pub fn head(&self) -> Vec<[f64; 3]> {
        let n = self.state.q.len();
        let at = |v: &Vec<f64>, i: usize| v.get(i).copied().unwrap_or(0.0);
        let mut h = vec![[0.0, self.v, self.a], [self.state.theta, self.omega, self.beta]];
        h.extend((0..n).map(|i| [self.state.q[i], at(&self.dq, i), at(&self.ddq, i)]));
        h
    }
}

/// Physical values behind a decision vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Decoded {
    /// Interior waypoints, `(M − 1) × (N + 2)` row-major.
    pub waypoints: Vec<f64>,
    /// `∂(physical)/∂x` for each waypoint entry.
    pub waypoint_jac: Vec<f64>,
    pub s_f: f64,
    pub theta_f: f64,
    pub q_f: Vec<f64>,
    pub q_f_jac: Vec<f64>,
    pub durations: Vec<f64>,
    pub durations_jac: Vec<f64>,
}

/// Problem data for one candidate with `M` segments.
pub struct WholeBodyProblem<'a> {
    pub world: &'a World,
    pub robot: &'a RobotModel,
    pub cfg: &'a OptimizerConfig,
    pub goal: &'a GoalSpec,
    pub head: Vec<[f64; 3]>,
    pub x0: f64,
    pub y0: f64,
    pub segments: usize,
    limits: DynamicLimits,
    weights: Vec<f64>,
}

impl<'a> WholeBodyProblem<'a> {
    pub fn new(
        world: &'a World,
        robot: &'a RobotModel,
        cfg: &'a OptimizerConfig,
        goal: &'a GoalSpec,
        start: &StartConditions,
        segments: usize,
    ) -> Self {
        Self {
            world,
            robot,
            cfg,
            goal,
            head: start.head(),
            x0: start.state.x,
            y0: start.state.y,
            segments,
            limits: robot.limits.scaled(cfg.limit_scale),
            weights: cfg.channel_weights(robot.n_joints()),
        }
    }

    /// Limits enforced by the penalties.
    pub fn limits(&self) -> &DynamicLimits {
        &self.limits
    }

    pub fn dim(&self) -> usize {
        self.robot.n_joints() + 2
    }

    pub fn n_vars(&self) -> usize {
        (self.segments - 1) * self.dim() + self.dim() + self.segments
    }

    fn q_max(&self, i: usize) -> f64 {
        self.robot.limits.q_max[i]
    }

    /// Builds `x` from physical waypoints (`(M − 1) × (N + 2)`), end state and durations.
    pub fn encode(&self, waypoints: &[f64], s_f: f64, theta_f: f64, q_f: &[f64], durations: &[f64]) -> Result<Vec<f64>> {
        let dim = self.dim();
        let n = self.robot.n_joints();
        let mut x = Vec::with_capacity(self.n_vars());
        for (k, &v) in waypoints.iter().enumerate() {
            let ch = k % dim;
            x.push(if ch >= Q0 { joint_squash(v, self.q_max(ch - Q0))? } else { v });
        }
        x.push(s_f);
        x.push(theta_f);
        for i in 0..n {
            x.push(joint_squash(q_f[i], self.q_max(i))?);
        }
        x.extend(durations.iter().map(|&t| time_transform_inv(t)));
        debug_assert_eq!(x.len(), self.n_vars());
        Ok(x)
    }

    pub fn decode(&self, x: &[f64]) -> Decoded {
        let dim = self.dim();
        let n = self.robot.n_joints();
        let nw = (self.segments - 1) * dim;
        let mut waypoints = Vec::with_capacity(nw);
        let mut waypoint_jac = Vec::with_capacity(nw);
        for (k, &v) in x[..nw].iter().enumerate() {
            let ch = k % dim;
            let (p, d) = if ch >= Q0 { joint_unsquash(v, self.q_max(ch - Q0)) } else { (v, 1.0) };
            waypoints.push(p);
            waypoint_jac.push(d);
        }
        let (q_f, q_f_jac) = (0..n).map(|i| joint_unsquash(x[nw + 2 + i], self.q_max(i))).unzip();
        let (durations, durations_jac) = x[nw + 2 + n..].iter().map(|&tau| time_transform(tau)).unzip();
        Decoded { waypoints, waypoint_jac, s_f: x[nw], theta_f: x[nw + 1], q_f, q_f_jac, durations, durations_jac }
    }

    fn boundary(&self, d: &Decoded) -> Boundary {
        let mut tail = vec![[d.s_f, 0.0, 0.0], [d.theta_f, 0.0, 0.0]];
        tail.extend(d.q_f.iter().map(|&q| [q, 0.0, 0.0]));
        Boundary { head: self.head.clone(), tail }
    }

    pub fn trajectory(&self, x: &[f64]) -> Result<Trajectory> {
        let d = self.decode(x);
        Ok(Minco::solve(&self.boundary(&d), &d.waypoints, &d.durations, self.x0, self.y0)?.into_trajectory())
    }

    /// Final whole-body state reached by `x`, integrating the base position.
    pub fn end_state(&self, x: &[f64]) -> Result<WholeBodyState> {
        let tr = self.trajectory(x)?;
        let d = self.decode(x);
        let p = *sample_positions(&tr, self.cfg.k).last().expect("at least one sample");
        Ok(WholeBodyState { x: p[0], y: p[1], theta: d.theta_f, q: d.q_f })
    }

    fn infinite(&self) -> Evaluation {
        Evaluation { value: f64::INFINITY, cost: f64::INFINITY, penalty: f64::INFINITY, residual: vec![f64::INFINITY; 9] }
    }
}

impl EqualityProblem for WholeBodyProblem<'_> {
    fn n_eq(&self) -> usize {
        9
    }

    fn evaluate(&self, x: &[f64], lambda: &[f64], sigma: f64, grad: Option<&mut [f64]>) -> Evaluation {
        if x.iter().any(|v| !v.is_finite()) {
            return self.infinite();
        }
        let d = self.decode(x);
        let Ok(minco) = Minco::solve(&self.boundary(&d), &d.waypoints, &d.durations, self.x0, self.y0) else {
            return self.infinite();
        };
        let tr = minco.trajectory();
        let k = self.cfg.k;
        let m = self.segments;
        let n = self.robot.n_joints();
        let dim = self.dim();

        let jc = jerk_cost(tr, &self.weights, self.cfg.rho);
        let mut grad_c = jc.grad_c;
        let mut grad_t = jc.grad_t;
        let positions = sample_positions(tr, k);
        let mut grad_pos = vec![[0.0; 2]; positions.len()];

        // penalties are accumulated unweighted into scratch gradients, then scaled
        let setup = PenaltySetup {
            world: self.world,
            robot: self.robot,
            limits: &self.limits,
            k,
            collision_margin: self.cfg.collision_margin,
            self_margin: self.cfg.self_margin,
        };
        let mut pc = vec![0.0; grad_c.len()];
        let mut pt = vec![0.0; m];
        let (pen, _) = accumulate_penalty(tr, &positions, &setup, &mut pc, &mut pt, &mut grad_pos);
        let rc = self.cfg.rho_c;
        let penalty = rc * pen;

        let end = positions[m * k];
        let chain = ChainPose::new(self.robot, [end[0], end[1], d.theta_f], &d.q_f);
        let r = residual_of(&chain, self.goal).to_vec();
        let eval = Evaluation { value: jc.value + penalty, cost: jc.value, penalty, residual: r };

        let Some(grad) = grad else { return eval };

        grad_c.iter_mut().zip(&pc).for_each(|(g, p)| *g += rc * p);
        grad_t.iter_mut().zip(&pt).for_each(|(g, p)| *g += rc * p);
        grad_pos.iter_mut().for_each(|g| {
            g[0] *= rc;
            g[1] *= rc;
        });

        let gr: Vec<f64> = lambda.iter().zip(&eval.residual).map(|(l, r)| l + sigma * r).collect();
        let mut g_end = vec![0.0; 3 + n];
        accumulate_goal_gradient(&chain, self.goal, &gr, &mut g_end);
        grad_pos[m * k][0] += g_end[0];
        grad_pos[m * k][1] += g_end[1];
        backprop_positions(tr, k, &grad_pos, &mut grad_c, &mut grad_t);

        let mg = minco.propagate_gradients(&grad_c, &grad_t);
        let nw = (m - 1) * dim;
        for i in 0..nw {
            grad[i] = mg.waypoints[i] * d.waypoint_jac[i];
        }
        grad[nw] = mg.tail[S][0];
        grad[nw + 1] = mg.tail[YAW][0] + g_end[2];
        for i in 0..n {
            grad[nw + 2 + i] = (mg.tail[Q0 + i][0] + g_end[3 + i]) * d.q_f_jac[i];
        }
        for j in 0..m {
            grad[nw + 2 + n + j] = mg.durations[j] * d.durations_jac[j];
        }
        eval
    }
}
