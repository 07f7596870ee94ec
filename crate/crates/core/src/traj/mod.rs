//! Piecewise quintic trajectories in arc length, yaw and joint angles.

mod band;
mod minco;
mod poly;
mod transforms;

pub use band::{BandLu, BandMatrix};
pub use minco::{Boundary, ExportChannels, Minco, MincoGradients, Trajectory, TrajectoryExport, Q0, S, YAW};
pub use poly::{basis, eval as poly_eval};
pub use transforms::{joint_squash, joint_unsquash, time_transform, time_transform_inv};
