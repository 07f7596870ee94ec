//! Sampled inequality constraints turned into cubic-hinge penalties.

use serde::{Deserialize, Serialize};

use super::OptimizerConfig;
use crate::robot::{
    accumulate_pair_gradient, collision_centers, pair_clearance, sample_positions, ChainPose, DynamicLimits,
    RobotModel,
};
use crate::traj::{basis, Trajectory, Q0, S, YAW};
use crate::world::World;

/// Constraint families, in reporting order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstraintFamily {
    Diamond,
    BaseAccel,
    JointPosVel,
    JointAcc,
    EnvCollision,
    SelfCollision,
}

impl ConstraintFamily {
    pub const ALL: [ConstraintFamily; 6] = [
        Self::Diamond,
        Self::BaseAccel,
        Self::JointPosVel,
        Self::JointAcc,
        Self::EnvCollision,
        Self::SelfCollision,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Diamond => "diamond",
            Self::BaseAccel => "base_accel",
            Self::JointPosVel => "joint_pos_vel",
            Self::JointAcc => "joint_acc",
            Self::EnvCollision => "env_collision",
            Self::SelfCollision => "self_collision",
        }
    }
}

/// Cubic hinge `ℒ(x) = max(0, x)³` and its derivative.
#[inline]
pub fn hinge(x: f64) -> (f64, f64) {
    if x > 0.0 {
        (x * x * x, 3.0 * x * x)
    } else {
        (0.0, 0.0)
    }
}

/// Unweighted penalty with gradients.
#[derive(Debug, Clone, PartialEq)]
pub struct PenaltyValue {
    pub value: f64,
    pub grad_c: Vec<f64>,
    pub grad_t: Vec<f64>,
    /// Contribution of each family, indexed like [`ConstraintFamily::ALL`].
    pub families: [f64; 6],
}

/// Everything the sampled constraints depend on besides the trajectory.
#[derive(Debug, Clone, Copy)]
pub(crate) struct PenaltySetup<'a> {
    pub world: &'a World,
    pub robot: &'a RobotModel,
    pub limits: &'a DynamicLimits,
    pub k: usize,
    pub collision_margin: f64,
    pub self_margin: f64,
}

/// Per-sample gradient collector: `g[ch][order]` is `∂P/∂(order-th derivative of ch)`.
struct SampleGrad {
    g: Vec<[f64; 3]>,
    pos: [f64; 2],
    state: Vec<f64>,
    value: f64,
    active: bool,
}

impl SampleGrad {
    fn new(dim: usize, n: usize) -> Self {
        Self { g: vec![[0.0; 3]; dim], pos: [0.0; 2], state: vec![0.0; 3 + n], value: 0.0, active: false }
    }

    fn reset(&mut self) {
        self.g.iter_mut().for_each(|v| *v = [0.0; 3]);
        self.pos = [0.0; 2];
        self.state.iter_mut().for_each(|v| *v = 0.0);
        self.value = 0.0;
        self.active = false;
    }

    /// Records `w·ℒ(c)` and returns `w·ℒ'(c)` (zero when inactive).
    fn add(&mut self, c: f64, w: f64, families: &mut [f64; 6], fam: ConstraintFamily) -> f64 {
        let (v, d) = hinge(c);
        if d == 0.0 {
            return 0.0;
        }
        self.value += w * v;
        families[fam as usize] += w * v;
        self.active = true;
        w * d
    }
}

/// Accumulates the penalty for `tr` whose constraint-sample base positions
/// are `positions` (from [`sample_positions`] with the same `k`).
///
/// Samples are taken at `t = l·T_j/K` for `l = 0..K` on every segment plus the
/// final instant, each weighted by `T_j/K`.
pub(crate) fn accumulate_penalty(
    tr: &Trajectory,
    positions: &[[f64; 2]],
    setup: &PenaltySetup,
    grad_c: &mut [f64],
    grad_t: &mut [f64],
    grad_pos: &mut [[f64; 2]],
) -> (f64, [f64; 6]) {
    let PenaltySetup { world, robot, limits: lim, k, collision_margin, self_margin } = *setup;
    let dim = tr.dim;
    let n = tr.joints();
    let m = tr.segments();
    let kf = k as f64;
    let col = &robot.collision;
    let r_thr = col.r_thr();
    let vw = lim.v_max * lim.omega_max;

    let mut families = [0.0; 6];
    let mut total = 0.0;
    let mut sg = SampleGrad::new(dim, n);
    let mut vals = vec![[0.0f64; 4]; dim];
    let mut q = vec![0.0; n];

    for j in 0..m {
        let tj = tr.durations[j];
        let w = tj / kf;
        let last_l = if j + 1 == m { k } else { k - 1 };
        let coeffs: Vec<[f64; 6]> = (0..dim).map(|ch| tr.channel_coeffs(j, ch)).collect();
        for l in 0..=last_l {
            let t = l as f64 / kf * tj;
            let idx = j * k + l;
            let b: [[f64; 6]; 4] = std::array::from_fn(|o| basis(t, o));
            for ch in 0..dim {
                for o in 0..4 {
                    vals[ch][o] = (0..6).map(|i| coeffs[ch][i] * b[o][i]).sum();
                }
            }
            sg.reset();

            // (9) coupled velocity diamond
            let (v, om) = (vals[S][1], vals[YAW][1]);
            for sign in [1.0, -1.0] {
                let inner = lim.v_max * om + sign * lim.omega_max * v;
                let d = sg.add(inner.abs() - vw, w, &mut families, ConstraintFamily::Diamond);
                if d != 0.0 {
                    let sg_in = inner.signum();
                    sg.g[YAW][1] += d * sg_in * lim.v_max;
                    sg.g[S][1] += d * sg_in * sign * lim.omega_max;
                }
            }
            // (10) base accelerations
            let a = vals[S][2];
            let d = sg.add(a * a - lim.a_max * lim.a_max, w, &mut families, ConstraintFamily::BaseAccel);
            sg.g[S][2] += d * 2.0 * a;
            let beta = vals[YAW][2];
            let d = sg.add(beta * beta - lim.beta_max * lim.beta_max, w, &mut families, ConstraintFamily::BaseAccel);
            sg.g[YAW][2] += d * 2.0 * beta;
            // (11), (12) joint position, velocity, acceleration
            for i in 0..n {
                let ch = Q0 + i;
                for (o, bound, fam) in [
                    (0, lim.q_max[i], ConstraintFamily::JointPosVel),
                    (1, lim.dq_max[i], ConstraintFamily::JointPosVel),
                    (2, lim.ddq_max[i], ConstraintFamily::JointAcc),
                ] {
                    let x = vals[ch][o];
                    let d = sg.add(x * x - bound * bound, w, &mut families, fam);
                    sg.g[ch][o] += d * 2.0 * x;
                }
            }
            // (13) environment
            let p = positions[idx];
            let e = world.esdf.query(p);
            let d = sg.add(r_thr[0] + collision_margin - e.distance, w, &mut families, ConstraintFamily::EnvCollision);
            sg.pos[0] -= d * e.gradient[0];
            sg.pos[1] -= d * e.gradient[1];
            for (i, qi) in q.iter_mut().enumerate() {
                *qi = vals[Q0 + i][0];
            }
            let chain = ChainPose::new(robot, [p[0], p[1], vals[YAW][0]], &q);
            let centers = collision_centers(robot, &chain);
            for (i, s) in col.spheres.iter().enumerate() {
                let c = centers[i + 1];
                let sd = world.sdf.query([c.x, c.y, c.z]);
                let d = sg.add(r_thr[i + 1] + collision_margin - sd.distance, w, &mut families, ConstraintFamily::EnvCollision);
                if d != 0.0 {
                    let dp = -nalgebra::Vector3::from(sd.gradient) * d;
                    chain.accumulate_point_gradient(Some(s.link), &c, &dp, &mut sg.state);
                }
            }
            // (14) self collision
            for &pair in &col.self_pairs {
                let cl = pair_clearance(robot, &centers, pair).clearance;
                let d = sg.add(self_margin - cl, w, &mut families, ConstraintFamily::SelfCollision);
                if d != 0.0 {
                    accumulate_pair_gradient(robot, &chain, &centers, pair, -d, &mut sg.state);
                }
            }

            if !sg.active {
                continue;
            }
            total += sg.value;
            sg.pos[0] += sg.state[0];
            sg.pos[1] += sg.state[1];
            sg.g[YAW][0] += sg.state[2];
            for i in 0..n {
                sg.g[Q0 + i][0] += sg.state[3 + i];
            }
            grad_pos[idx][0] += sg.pos[0];
            grad_pos[idx][1] += sg.pos[1];
            // weight w = T_j/K and sample time l·T_j/K both move with T_j
            let mut dt = sg.value / tj;
            for ch in 0..dim {
                for o in 0..3 {
                    let gco = sg.g[ch][o];
                    if gco == 0.0 {
                        continue;
                    }
                    dt += l as f64 / kf * gco * vals[ch][o + 1];
                    for i in 0..6 {
                        grad_c[(6 * j + i) * dim + ch] += gco * b[o][i];
                    }
                }
            }
            grad_t[j] += dt;
        }
    }
    (total, families)
}

/// Penalty of all sampled constraints against `limits`, with the margins
/// from `cfg`, and its gradients with respect to coefficients and durations.
pub fn penalty_terms(
    tr: &Trajectory,
    limits: &DynamicLimits,
    world: &World,
    robot: &RobotModel,
    cfg: &OptimizerConfig,
) -> PenaltyValue {
    let k = cfg.k;
    let setup = PenaltySetup {
        world,
        robot,
        limits,
        k,
        collision_margin: cfg.collision_margin,
        self_margin: cfg.self_margin,
    };
    let positions = sample_positions(tr, k);
    let mut grad_c = vec![0.0; tr.coeffs.len()];
    let mut grad_t = vec![0.0; tr.segments()];
    let mut grad_pos = vec![[0.0; 2]; positions.len()];
    let (value, families) = accumulate_penalty(tr, &positions, &setup, &mut grad_c, &mut grad_t, &mut grad_pos);
    crate::robot::backprop_positions(tr, k, &grad_pos, &mut grad_c, &mut grad_t);
    PenaltyValue { value, grad_c, grad_t, families }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::{BoxObstacle, ObstacleKind, Scenario};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn empty_world() -> World {
        World::new(Scenario::empty([-10.0, -10.0, 10.0, 10.0]), 0.1, 0.3, 1.0)
    }

    fn cluttered_world() -> World {
        let mut s = Scenario::empty([-5.0, -5.0, 5.0, 5.0]);
        let b = |c: [f64; 3], h: [f64; 3], yaw: f64| BoxObstacle { center: c, half_extents: h, yaw, kind: ObstacleKind::Cuboid };
        s.obstacles.push(b([1.5, 0.9, 0.5], [0.4, 0.3, 0.5], 0.3));
        s.obstacles.push(b([0.8, -1.0, 0.7], [0.3, 0.5, 0.7], -0.6));
        s.obstacles.push(b([0.6, 0.4, 1.1], [0.3, 0.3, 0.05], 0.1));
        World::new(s, 0.05, 0.3, 1.0)
    }

    #[test]
    fn rest_far_from_obstacles_is_free() {
        let w = empty_world();
        let robot = RobotModel::default_mobile_manipulator();
        let mut tr = Trajectory::zeros(8, vec![1.0, 2.0], 0.0, 0.0);
        for j in 0..2 {
            *tr.coeff_mut(j, 0, Q0 + 1) = 0.3;
        }
        let p = penalty_terms(&tr, &robot.limits, &w, &robot, &OptimizerConfig::default());
        assert_eq!(p.value, 0.0);
        assert!(p.grad_c.iter().chain(&p.grad_t).all(|&g| g == 0.0));
    }

    #[test]
    fn constant_twist_violates_diamond() {
        let w = empty_world();
        let robot = RobotModel::default_mobile_manipulator();
        let l = &robot.limits;
        let mut tr = Trajectory::zeros(8, vec![1.0], 0.0, 0.0);
        *tr.coeff_mut(0, 1, S) = 0.6 * l.v_max;
        *tr.coeff_mut(0, 1, YAW) = 0.6 * l.omega_max;
        let cfg = OptimizerConfig { k: 4, ..Default::default() };
        let p = penalty_terms(&tr, l, &w, &robot, &cfg);
        // |v_max ω + ω_max v| = 1.2 v_max ω_max, active at all K + 1 samples
        let c = 0.2 * l.v_max * l.omega_max;
        let expect = 5.0 * (1.0 / 4.0) * c * c * c;
        assert!((p.families[ConstraintFamily::Diamond as usize] - expect).abs() < 1e-12);
        assert_eq!(p.value, p.families[0]);
    }

    fn random_traj(rng: &mut ChaCha8Rng, robot: &RobotModel) -> Trajectory {
        let m = rng.gen_range(1..=3);
        let dim = 2 + robot.n_joints();
        let t: Vec<f64> = (0..m).map(|_| rng.gen_range(0.7..1.6)).collect();
        let mut tr = Trajectory::zeros(dim, t, rng.gen_range(-0.3..0.3), rng.gen_range(-0.3..0.3));
        for j in 0..m {
            for p in 0..6 {
                for ch in 0..dim {
                    let scale = [1.0, 0.8, 0.4, 0.2, 0.1, 0.05][p];
                    *tr.coeff_mut(j, p, ch) = rng.gen_range(-1.2..1.2) * scale;
                }
            }
        }
        tr
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let w = cluttered_world();
        let robot = RobotModel::default_mobile_manipulator();
        let cfg = OptimizerConfig { k: 6, ..Default::default() };
        let lim = robot.limits.scaled(0.8);
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let mut checked = 0;
        while checked < 4 {
            let tr = random_traj(&mut rng, &robot);
            let p = penalty_terms(&tr, &lim, &w, &robot, &cfg);
            if p.families[ConstraintFamily::EnvCollision as usize] == 0.0 {
                continue;
            }
            checked += 1;
            let f = |t: &Trajectory| penalty_terms(t, &lim, &w, &robot, &cfg).value;
            let h = 1e-6;
            let mut worst: f64 = 0.0;
            for i in 0..tr.coeffs.len() {
                let mut a = tr.clone();
                let mut b = tr.clone();
                a.coeffs[i] += h;
                b.coeffs[i] -= h;
                let fd = (f(&a) - f(&b)) / (2.0 * h);
                worst = worst.max((fd - p.grad_c[i]).abs() / fd.abs().max(p.grad_c[i].abs()).max(1.0));
            }
            for j in 0..tr.segments() {
                let mut a = tr.clone();
                let mut b = tr.clone();
                a.durations[j] += h;
                b.durations[j] -= h;
                let fd = (f(&a) - f(&b)) / (2.0 * h);
                worst = worst.max((fd - p.grad_t[j]).abs() / fd.abs().max(p.grad_t[j].abs()).max(1.0));
            }
            assert!(worst < 1e-4, "worst relative error {worst}");
        }
    }
}
