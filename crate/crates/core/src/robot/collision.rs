use nalgebra::{Point3, Vector3};

use super::kinematics::{base_isometry, ChainPose};
use super::model::RobotModel;

/// World centers of all collision points, base cylinder first.
pub fn collision_centers(model: &RobotModel, chain: &ChainPose) -> Vec<Vector3<f64>> {
    let c = &model.collision;
    let base = (base_isometry(chain.base) * Point3::from(c.cylinder.offset)).coords;
    std::iter::once(base).chain(c.spheres.iter().map(|s| chain.link_point(s.link, s.offset))).collect()
}

/// Collision point centers with their radii.
pub fn collision_points(model: &RobotModel, base: [f64; 3], q: &[f64]) -> Vec<([f64; 3], f64)> {
    let chain = ChainPose::new(model, base, q);
    collision_centers(model, &chain)
        .into_iter()
        .enumerate()
        .map(|(i, c)| ([c.x, c.y, c.z], model.collision.radius(i)))
        .collect()
}

/// Closest point on the base cylinder's vertical axis segment to `p`.
fn axis_closest(model: &RobotModel, base_center: &Vector3<f64>, p: &Vector3<f64>) -> Vector3<f64> {
    let h = model.collision.cylinder.height / 2.0;
    let z = p.z.clamp(base_center.z - h, base_center.z + h);
    Vector3::new(base_center.x, base_center.y, z)
}

/// Clearance of each self-collision pair and the unit direction that
/// increases it, expressed at both points.
pub(crate) struct PairClearance {
    pub clearance: f64,
    /// `∂clearance/∂(first point)`; the second point gets the negation.
    pub normal: Vector3<f64>,
    /// Witness point on the first primitive (the axis point for the base).
    pub witness: Vector3<f64>,
}

pub(crate) fn pair_clearance(model: &RobotModel, centers: &[Vector3<f64>], pair: [usize; 2]) -> PairClearance {
    let [a, b] = pair;
    let ra = model.collision.radius(a);
    let rb = model.collision.radius(b);
    let pa = if a == 0 { axis_closest(model, &centers[0], &centers[b]) } else { centers[a] };
    let pb = if b == 0 { axis_closest(model, &centers[0], &centers[a]) } else { centers[b] };
    let d = pa - pb;
    let n = d.norm();
    let normal = if n > 1e-12 { d / n } else { Vector3::z() };
    PairClearance { clearance: n - ra - rb, normal, witness: pa }
}

/// Clearance of every configured self-collision pair; positive means clear.
pub fn self_collision_distances(model: &RobotModel, q: &[f64]) -> Vec<f64> {
    let chain = ChainPose::new(model, [0.0; 3], q);
    let centers = collision_centers(model, &chain);
    model.collision.self_pairs.iter().map(|&p| pair_clearance(model, &centers, p).clearance).collect()
}

/// Adds `w · ∂clearance/∂(x, y, θ, q)` for pair `pair` into `grad`.
pub(crate) fn accumulate_pair_gradient(
    model: &RobotModel,
    chain: &ChainPose,
    centers: &[Vector3<f64>],
    pair: [usize; 2],
    w: f64,
    grad: &mut [f64],
) {
    let pc = pair_clearance(model, centers, pair);
    let [a, b] = pair;
    let link = |i: usize| if i == 0 { None } else { Some(model.collision.spheres[i - 1].link) };
    let pa = if a == 0 { pc.witness } else { centers[a] };
    let pb = if b == 0 { axis_closest(model, &centers[0], &centers[a]) } else { centers[b] };
    chain.accumulate_point_gradient(link(a), &pa, &(pc.normal * w), grad);
    chain.accumulate_point_gradient(link(b), &pb, &(-pc.normal * w), grad);
}
