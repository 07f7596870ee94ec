use nalgebra::{Isometry3, Matrix3, Rotation3, Translation3, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

use crate::robot::{ChainPose, RobotModel};
use crate::{Error, Result};

/// Target end-effector pose.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoalSpec {
    pub position: [f64; 3],
    /// Rotation matrix, row-major.
    pub rotation: [[f64; 3]; 3],
    #[serde(default = "one")]
    pub position_weight: f64,
    #[serde(default = "one")]
    pub rotation_weight: f64,
}

fn one() -> f64 {
    1.0
}

impl GoalSpec {
    pub fn from_isometry(pose: &Isometry3<f64>) -> Self {
        let r = pose.rotation.to_rotation_matrix().into_inner();
        let t = pose.translation.vector;
        Self {
            position: [t.x, t.y, t.z],
            rotation: std::array::from_fn(|i| std::array::from_fn(|j| r[(i, j)])),
            position_weight: 1.0,
            rotation_weight: 1.0,
        }
    }

    pub fn rotation_matrix(&self) -> Matrix3<f64> {
        Matrix3::from_fn(|i, j| self.rotation[i][j])
    }

    pub fn isometry(&self) -> Isometry3<f64> {
        let r = Rotation3::from_matrix_unchecked(self.rotation_matrix());
        Isometry3::from_parts(
            Translation3::new(self.position[0], self.position[1], self.position[2]),
            UnitQuaternion::from_rotation_matrix(&r),
        )
    }

    /// Rejects non-orthonormal rotations, reflections and bad weights.
    pub fn validate(&self) -> Result<()> {
        let r = self.rotation_matrix();
        let err = (r.transpose() * r - Matrix3::identity()).abs().max();
        if !(err < 1e-6) || !((r.determinant() - 1.0).abs() < 1e-6) {
            return Err(Error::InvalidInput("goal rotation must be orthonormal with det +1".into()));
        }
        if self.position.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("goal position must be finite".into()));
        }
        if !(self.position_weight > 0.0 && self.rotation_weight > 0.0) {
            return Err(Error::InvalidInput("goal weights must be positive".into()));
        }
        Ok(())
    }
}

/// Goal residual and its Jacobian with respect to `(x, y, θ, q)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GoalResidual {
    /// Position error then the errors of the first two rotation columns.
    pub r: [f64; 9],
    /// Row-major `9 × (3 + N)`.
    pub jacobian: Vec<f64>,
}

impl GoalResidual {
    pub fn position_error(&self) -> f64 {
        Vector3::new(self.r[0], self.r[1], self.r[2]).norm()
    }

    pub fn rotation_error(&self) -> f64 {
        self.r[3..].iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

pub(crate) fn residual_of(chain: &ChainPose, goal: &GoalSpec) -> [f64; 9] {
    let p = chain.ee.translation.vector;
    let r = chain.ee.rotation.to_rotation_matrix().into_inner();
    let rg = goal.rotation_matrix();
    let (wp, wr) = (goal.position_weight, goal.rotation_weight);
    let mut out = [0.0; 9];
    for k in 0..3 {
        out[k] = wp * (p[k] - goal.position[k]);
        out[3 + k] = wr * (r[(k, 0)] - rg[(k, 0)]);
        out[6 + k] = wr * (r[(k, 1)] - rg[(k, 1)]);
    }
    out
}

/// Adds `gᵀ ∂r/∂(x, y, θ, q)` into `grad` for a residual weight vector `g`.
pub(crate) fn accumulate_goal_gradient(chain: &ChainPose, goal: &GoalSpec, g: &[f64], grad: &mut [f64]) {
    let (wp, wr) = (goal.position_weight, goal.rotation_weight);
    let dp = Vector3::new(g[0], g[1], g[2]) * wp;
    let mut d_rot = Matrix3::zeros();
    for k in 0..3 {
        d_rot[(k, 0)] = wr * g[3 + k];
        d_rot[(k, 1)] = wr * g[6 + k];
    }
    chain.accumulate_ee_gradient(&dp, &d_rot, grad);
}

/// Residual of the end state `(x, y, θ, q)` against the goal pose; zero iff
/// the forward kinematics reach it.
pub fn goal_residual(robot: &RobotModel, base: [f64; 3], q: &[f64], goal: &GoalSpec) -> GoalResidual {
    let chain = ChainPose::new(robot, base, q);
    let r = residual_of(&chain, goal);
    let n = 3 + q.len();
    let mut jacobian = vec![0.0; 9 * n];
    for i in 0..9 {
        let mut e = [0.0; 9];
        e[i] = 1.0;
        accumulate_goal_gradient(&chain, goal, &e, &mut jacobian[i * n..(i + 1) * n]);
    }
    GoalResidual { r, jacobian }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::robot::forward_kinematics;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_at_attained_goal_and_pure_offset() {
        let m = RobotModel::default_mobile_manipulator();
        let q = [0.2, -0.3, 0.5, 0.1, 0.4, -0.2];
        let base = [1.0, 2.0, 0.3];
        let goal = GoalSpec::from_isometry(&forward_kinematics(&m, base, &q));
        goal.validate().unwrap();
        let r = goal_residual(&m, base, &q, &goal);
        assert!(r.r.iter().all(|v| v.abs() < 1e-12));
        let mut shifted = goal.clone();
        shifted.position[0] -= 0.1;
        let r = goal_residual(&m, base, &q, &shifted);
        assert!((r.r[0] - 0.1).abs() < 1e-12);
        assert!(r.r[1..].iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn isometry_round_trip() {
        let pose = Isometry3::new(Vector3::new(0.1, 0.2, 0.3), Vector3::new(0.4, -0.5, 0.6));
        let g = GoalSpec::from_isometry(&pose);
        let back = g.isometry();
        assert!((back.translation.vector - pose.translation.vector).norm() < 1e-12);
        assert!(back.rotation.angle_to(&pose.rotation) < 1e-9);
    }

    #[test]
    fn rejects_reflection() {
        let mut g = GoalSpec::from_isometry(&Isometry3::identity());
        g.rotation[2][2] = -1.0;
        assert!(g.validate().is_err());
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let m = RobotModel::default_mobile_manipulator();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let goal = GoalSpec::from_isometry(&Isometry3::new(Vector3::new(1.0, 0.5, 0.8), Vector3::new(0.3, 0.2, -0.1)));
        for _ in 0..10 {
            let s: Vec<f64> = (0..9).map(|_| rng.gen_range(-1.5..1.5)).collect();
            let r = goal_residual(&m, [s[0], s[1], s[2]], &s[3..], &goal);
            for k in 0..9 {
                let mut a = s.clone();
                let mut b = s.clone();
                a[k] += 1e-6;
                b[k] -= 1e-6;
                let ra = goal_residual(&m, [a[0], a[1], a[2]], &a[3..], &goal).r;
                let rb = goal_residual(&m, [b[0], b[1], b[2]], &b[3..], &goal).r;
                for i in 0..9 {
                    let fd = (ra[i] - rb[i]) / 2e-6;
                    let an = r.jacobian[i * 9 + k];
                    assert!((fd - an).abs() < 1e-4 * fd.abs().max(1.0), "r{i}/x{k}: {fd} vs {an}");
                }
            }
        }
    }
}
