use nalgebra::{Isometry3, Matrix3, Point3, Translation3, UnitQuaternion, Vector3};

use super::model::RobotModel;

/// Lift of a planar base pose `(x, y, θ)` into SE(3).
pub fn base_isometry(base: [f64; 3]) -> Isometry3<f64> {
    Isometry3::from_parts(
        Translation3::new(base[0], base[1], 0.0),
        UnitQuaternion::from_axis_angle(&Vector3::z_axis(), base[2]),
    )
}

/// World-frame kinematic state of the whole chain for one configuration.
///
/// Holds what is needed to differentiate any point fixed to a link with
/// respect to `(x, y, θ, q)`.
#[derive(Debug, Clone)]
pub struct ChainPose {
    pub base: [f64; 3],
    /// World pose of each joint's child link.
    pub links: Vec<Isometry3<f64>>,
    /// World position and axis of each joint.
    pub joint_origins: Vec<Vector3<f64>>,
    pub joint_axes: Vec<Vector3<f64>>,
    pub ee: Isometry3<f64>,
}

impl ChainPose {
    pub fn new(model: &RobotModel, base: [f64; 3], q: &[f64]) -> Self {
        let n = model.n_joints();
        assert_eq!(q.len(), n, "joint vector length");
        let mut t = base_isometry(base) * model.mount.isometry();
        let mut links = Vec::with_capacity(n);
        let mut joint_origins = Vec::with_capacity(n);
        let mut joint_axes = Vec::with_capacity(n);
        for (j, qj) in model.joints.iter().zip(q) {
            let origin = Isometry3::from_parts(
                Translation3::new(j.origin_xyz[0], j.origin_xyz[1], j.origin_xyz[2]),
                UnitQuaternion::from_euler_angles(j.origin_rpy[0], j.origin_rpy[1], j.origin_rpy[2]),
            );
            t *= origin;
            let axis = Vector3::from(j.axis);
            joint_origins.push(t.translation.vector);
            joint_axes.push(t.rotation * axis);
            t *= Isometry3::from_parts(
                Translation3::identity(),
                UnitQuaternion::from_scaled_axis(axis * *qj),
            );
            links.push(t);
        }
        let ee = t * model.ee_offset.isometry();
        Self { base, links, joint_origins, joint_axes, ee }
    }

    /// World point of `local` on link `link`.
    pub fn link_point(&self, link: usize, local: [f64; 3]) -> Vector3<f64> {
        (self.links[link] * Point3::from(local)).coords
    }

    /// Chain-rule helper: given `∂J/∂p` for a world point `p` carried by link
    /// `link` (or by the base when `link` is `None`), accumulates `∂J/∂x`,
    /// `∂J/∂y`, `∂J/∂θ` and `∂J/∂q` into `grad` (`3 + N` entries).
    pub fn accumulate_point_gradient(&self, link: Option<usize>, p: &Vector3<f64>, dp: &Vector3<f64>, grad: &mut [f64]) {
        grad[0] += dp.x;
        grad[1] += dp.y;
        // d p / dθ = e_z × (p - base)
        let rx = p.x - self.base[0];
        let ry = p.y - self.base[1];
        grad[2] += dp.x * (-ry) + dp.y * rx;
        if let Some(link) = link {
            for k in 0..=link {
                let d = self.joint_axes[k].cross(&(p - self.joint_origins[k]));
                grad[3 + k] += dp.dot(&d);
            }
        }
    }

    /// Gradient of `J` with respect to `(x, y, θ, q)` given `∂J/∂R` for the
    /// end-effector rotation (as a full matrix) and `∂J/∂p` for its position.
    pub fn accumulate_ee_gradient(&self, dp: &Vector3<f64>, d_rot: &Matrix3<f64>, grad: &mut [f64]) {
        let n = self.links.len();
        self.accumulate_point_gradient(Some(n - 1), &self.ee.translation.vector, dp, grad);
        let r = self.ee.rotation.to_rotation_matrix().into_inner();
        // dR/dα = [a]× R for a rotation about world axis a
        let z = Vector3::z();
        grad[2] += d_rot.dot(&(skew(&z) * r));
        for k in 0..n {
            grad[3 + k] += d_rot.dot(&(skew(&self.joint_axes[k]) * r));
        }
    }
}

pub fn skew(a: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -a.z, a.y, a.z, 0.0, -a.x, -a.y, a.x, 0.0)
}

/// End-effector pose for base pose `base` and joint vector `q`.
pub fn forward_kinematics(model: &RobotModel, base: [f64; 3], q: &[f64]) -> Isometry3<f64> {
    ChainPose::new(model, base, q).ee
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::robot::model::{FrameSpec, JointSpec};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::FRAC_PI_2;

    fn planar_two_link() -> RobotModel {
        let mut m = RobotModel::default_mobile_manipulator();
        let z = [0.0, 0.0, 1.0];
        m.joints = vec![
            JointSpec { axis: z, origin_xyz: [0.0; 3], origin_rpy: [0.0; 3] },
            JointSpec { axis: z, origin_xyz: [0.5, 0.0, 0.0], origin_rpy: [0.0; 3] },
        ];
        m.mount = FrameSpec::new([0.0, 0.0, 0.3]);
        m.ee_offset = FrameSpec::new([0.5, 0.0, 0.0]);
        m.limits.q_max = vec![3.0; 2];
        m.limits.dq_max = vec![1.0; 2];
        m.limits.ddq_max = vec![1.0; 2];
        m.collision.spheres.clear();
        m.collision.self_pairs.clear();
        m
    }

    #[test]
    fn planar_chain() {
        let m = planar_two_link();
        let ee = forward_kinematics(&m, [0.0; 3], &[FRAC_PI_2, 0.0]);
        let p = ee.translation.vector;
        assert!((p - Vector3::new(0.0, 1.0, 0.3)).norm() < 1e-12, "{p}");
    }

    #[test]
    fn home_pose_is_product_of_fixed_frames() {
        let m = RobotModel::default_mobile_manipulator();
        let ee = forward_kinematics(&m, [0.0; 3], &[0.0; 6]);
        let h: f64 = 0.4 + m.joints.iter().map(|j| j.origin_xyz[2]).sum::<f64>() + 0.08;
        assert!((ee.translation.vector - Vector3::new(0.0, 0.0, h)).norm() < 1e-12);
        assert!(ee.rotation.angle() < 1e-12);
    }

    #[test]
    fn base_equivariance() {
        let m = RobotModel::default_mobile_manipulator();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let q: Vec<f64> = (0..6).map(|_| rng.gen_range(-1.5..1.5)).collect();
            let base = [rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)];
            let a = forward_kinematics(&m, [0.0; 3], &q);
            let b = forward_kinematics(&m, base, &q);
            let expect = base_isometry(base) * a;
            assert!((expect.translation.vector - b.translation.vector).norm() < 1e-12);
            assert!(expect.rotation.angle_to(&b.rotation) < 1e-9);
            // pure translation shifts the ee by the same amount
            let c = forward_kinematics(&m, [1.5, -2.0, 0.0], &q);
            assert!((c.translation.vector - a.translation.vector - Vector3::new(1.5, -2.0, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn point_and_rotation_gradients() {
        let m = RobotModel::default_mobile_manipulator();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let w = Vector3::new(0.3, -1.1, 0.7);
        let wr = Matrix3::from_fn(|i, j| ((i * 3 + j) as f64 * 0.37).sin());
        let f = |s: &[f64]| {
            let c = ChainPose::new(&m, [s[0], s[1], s[2]], &s[3..]);
            let p = c.link_point(3, [0.02, 0.01, 0.05]);
            let r = c.ee.rotation.to_rotation_matrix().into_inner();
            w.dot(&p) + wr.dot(&r) + w.dot(&c.ee.translation.vector)
        };
        for _ in 0..10 {
            let s: Vec<f64> = (0..9).map(|_| rng.gen_range(-1.5..1.5)).collect();
            let c = ChainPose::new(&m, [s[0], s[1], s[2]], &s[3..]);
            let mut g = vec![0.0; 9];
            let p = c.link_point(3, [0.02, 0.01, 0.05]);
            c.accumulate_point_gradient(Some(3), &p, &w, &mut g);
            c.accumulate_ee_gradient(&w, &wr, &mut g);
            for k in 0..9 {
                let mut a = s.clone();
                let mut b = s.clone();
                a[k] += 1e-6;
                b[k] -= 1e-6;
                let fd = (f(&a) - f(&b)) / 2e-6;
                assert!((fd - g[k]).abs() / fd.abs().max(1.0) < 1e-6, "k={k}: {fd} vs {}", g[k]);
            }
        }
    }
}
