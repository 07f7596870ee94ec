//! Differential-drive base plus serial arm: kinematics, collision geometry
//! and flat-output integration.

mod collision;
mod flat;
mod kinematics;
mod model;

pub(crate) use collision::{accumulate_pair_gradient, pair_clearance};
pub use collision::{collision_centers, collision_points, self_collision_distances};
pub use flat::{backprop_positions, flat_position, sample_positions, FlatPosition};
pub use kinematics::{base_isometry, forward_kinematics, skew, ChainPose};
pub use model::{
    CollisionModel, Cylinder, DynamicLimits, FrameSpec, JointSpec, RobotModel, Sphere, WholeBodyState,
};
