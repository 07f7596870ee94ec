use nalgebra::{Isometry3, Translation3, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Fixed transform given as translation plus roll-pitch-yaw.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameSpec {
    #[serde(default)]
    pub xyz: [f64; 3],
    #[serde(default)]
    pub rpy: [f64; 3],
}

impl FrameSpec {
    pub fn new(xyz: [f64; 3]) -> Self {
        Self { xyz, rpy: [0.0; 3] }
    }

    pub fn isometry(&self) -> Isometry3<f64> {
        Isometry3::from_parts(
            Translation3::new(self.xyz[0], self.xyz[1], self.xyz[2]),
            UnitQuaternion::from_euler_angles(self.rpy[0], self.rpy[1], self.rpy[2]),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointSpec {
    pub axis: [f64; 3],
    pub origin_xyz: [f64; 3],
    #[serde(default)]
    pub origin_rpy: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DynamicLimits {
    pub v_max: f64,
    pub omega_max: f64,
    pub a_max: f64,
    pub beta_max: f64,
    pub q_max: Vec<f64>,
    pub dq_max: Vec<f64>,
    pub ddq_max: Vec<f64>,
}

impl DynamicLimits {
    /// Copy with every bound multiplied by `f`.
    pub fn scaled(&self, f: f64) -> Self {
        let s = |v: &Vec<f64>| v.iter().map(|x| x * f).collect();
        Self {
            v_max: self.v_max * f,
            omega_max: self.omega_max * f,
            a_max: self.a_max * f,
            beta_max: self.beta_max * f,
            q_max: s(&self.q_max),
            dq_max: s(&self.dq_max),
            ddq_max: s(&self.ddq_max),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cylinder {
    pub radius: f64,
    pub height: f64,
    /// Cylinder center in the base frame.
    pub offset: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sphere {
    /// Index of the joint whose child link carries the sphere.
    pub link: usize,
    pub offset: [f64; 3],
    pub radius: f64,
}

/// Collision geometry. Collision point 0 is the base cylinder, points
/// `1..` are the arm spheres in order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollisionModel {
    pub cylinder: Cylinder,
    pub spheres: Vec<Sphere>,
    /// Pairs of collision point indices checked for self collision.
    pub self_pairs: Vec<[usize; 2]>,
    /// Required ESDF value at the base center. The grid is already inflated
    /// by the cylinder radius, so this is a pure margin.
    pub base_threshold: f64,
}

impl CollisionModel {
    pub fn n_points(&self) -> usize {
        1 + self.spheres.len()
    }

    /// Threshold per collision point: base margin then sphere radii.
    pub fn r_thr(&self) -> Vec<f64> {
        std::iter::once(self.base_threshold).chain(self.spheres.iter().map(|s| s.radius)).collect()
    }

    pub fn radius(&self, point: usize) -> f64 {
        if point == 0 {
            self.cylinder.radius
        } else {
            self.spheres[point - 1].radius
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobotModel {
    pub joints: Vec<JointSpec>,
    pub mount: FrameSpec,
    pub ee_offset: FrameSpec,
    pub limits: DynamicLimits,
    pub collision: CollisionModel,
}

impl RobotModel {
    pub fn n_joints(&self) -> usize {
        self.joints.len()
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let m: RobotModel = serde_json::from_str(s)?;
        m.validate()?;
        Ok(m)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n_joints();
        let bad = |m: &str| Err(Error::InvalidInput(m.to_string()));
        if n == 0 {
            return bad("robot needs at least one joint");
        }
        let l = &self.limits;
        if [l.q_max.len(), l.dq_max.len(), l.ddq_max.len()].iter().any(|&k| k != n) {
            return bad("joint limit vectors must have one entry per joint");
        }
        let all = [l.v_max, l.omega_max, l.a_max, l.beta_max];
        if all.iter().chain(&l.q_max).chain(&l.dq_max).chain(&l.ddq_max).any(|&v| !(v > 0.0)) {
            return bad("all limits must be strictly positive");
        }
        for (i, j) in self.joints.iter().enumerate() {
            let a = Vector3::from(j.axis);
            if (a.norm() - 1.0).abs() > 1e-6 {
                return Err(Error::InvalidInput(format!("joints[{i}].axis must be a unit vector")));
            }
        }
        let c = &self.collision;
        if !(c.cylinder.radius > 0.0 && c.cylinder.height > 0.0) || c.spheres.iter().any(|s| !(s.radius > 0.0)) {
            return bad("collision radii must be positive");
        }
        if c.spheres.iter().any(|s| s.link >= n) {
            return bad("sphere link index out of range");
        }
        let link_of = |p: usize| if p == 0 { -1 } else { c.spheres[p - 1].link as i64 };
        for (k, &[a, b]) in c.self_pairs.iter().enumerate() {
            if a >= c.n_points() || b >= c.n_points() || a == b {
                return Err(Error::InvalidInput(format!("self_pairs[{k}] out of range")));
            }
            if (link_of(a) - link_of(b)).abs() < 2 {
                return Err(Error::InvalidInput(format!("self_pairs[{k}] joins adjacent links")));
            }
        }
        Ok(())
    }

    /// Six-joint arm on a cylindrical differential-drive base.
    pub fn default_mobile_manipulator() -> Self {
        let y = [0.0, 1.0, 0.0];
        let z = [0.0, 0.0, 1.0];
        let joint = |axis: [f64; 3], dz: f64| JointSpec { axis, origin_xyz: [0.0, 0.0, dz], origin_rpy: [0.0; 3] };
        let joints = vec![joint(z, 0.1), joint(y, 0.1), joint(y, 0.4), joint(z, 0.2), joint(y, 0.15), joint(z, 0.1)];
        let sphere = |link: usize, dz: f64, radius: f64| Sphere { link, offset: [0.0, 0.0, dz], radius };
        let spheres = vec![
            sphere(0, 0.02, 0.08),
            sphere(0, 0.1, 0.08),
            sphere(1, 0.12, 0.07),
            sphere(1, 0.28, 0.07),
            sphere(2, 0.05, 0.06),
            sphere(2, 0.15, 0.06),
            sphere(3, 0.03, 0.055),
            sphere(3, 0.12, 0.055),
            sphere(4, 0.03, 0.05),
            sphere(4, 0.09, 0.05),
            sphere(5, 0.04, 0.05),
            sphere(5, 0.1, 0.04),
        ];
        let link_points = |link: usize| -> Vec<usize> {
            spheres.iter().enumerate().filter(|(_, s)| s.link == link).map(|(i, _)| i + 1).collect()
        };
        let mut self_pairs = Vec::new();
        for (a, bs) in [(0usize, vec![3usize, 4, 5]), (1, vec![4, 5]), (2, vec![5])] {
            for b in bs {
                for pa in link_points(a) {
                    for pb in link_points(b) {
                        self_pairs.push([pa, pb]);
                    }
                }
            }
        }
        for link in 2..6 {
            for p in link_points(link) {
                self_pairs.push([0, p]);
            }
        }
        Self {
            joints,
            mount: FrameSpec::new([0.0, 0.0, 0.4]),
            ee_offset: FrameSpec::new([0.0, 0.0, 0.08]),
            limits: DynamicLimits {
                v_max: 1.0,
                omega_max: 1.0,
                a_max: 1.0,
                beta_max: 1.5,
                q_max: vec![3.0, 2.0, 2.5, 3.0, 2.0, 3.0],
                dq_max: vec![1.0; 6],
                ddq_max: vec![2.0; 6],
            },
            collision: CollisionModel {
                cylinder: Cylinder { radius: 0.3, height: 0.4, offset: [0.0, 0.0, 0.2] },
                spheres,
                self_pairs,
                base_threshold: 0.15,
            },
        }
    }
}

/// Base pose plus joint angles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WholeBodyState {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
    pub q: Vec<f64>,
}

impl WholeBodyState {
    pub fn base(&self) -> [f64; 3] {
        [self.x, self.y, self.theta]
    }

    pub fn within_limits(&self, limits: &DynamicLimits) -> bool {
        self.q.iter().zip(&limits.q_max).all(|(q, m)| q.abs() <= *m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_model_is_valid_and_round_trips() {
        let m = RobotModel::default_mobile_manipulator();
        m.validate().unwrap();
        assert_eq!(m.collision.r_thr().len(), m.collision.n_points());
        let back = RobotModel::from_json(&m.to_json().unwrap()).unwrap();
        assert_eq!(m, back);
    }

    #[test]
    fn adjacent_self_pair_rejected() {
        let mut m = RobotModel::default_mobile_manipulator();
        m.collision.self_pairs.push([1, 3]);
        assert!(m.validate().is_err());
        let mut m = RobotModel::default_mobile_manipulator();
        m.limits.q_max[2] = 0.0;
        assert!(m.validate().is_err());
    }
}
