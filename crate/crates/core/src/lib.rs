//! Whole-body trajectory planning for differential-drive mobile manipulators.
//!
//! The planner searches several homotopy-distinct base paths over a 2D
//! signed distance field, lifts each one into a whole-body initial path, and
//! refines every candidate with an augmented-Lagrangian optimizer over
//! piecewise quintic polynomials in arc length, yaw and joint angles.
//!
//! Module map:
//!
//! * [`world`]: scenario generation, grid ESDF for the base, analytic box SDF for the arm.
//! * [`topo`]: roadmap construction, topological path search, shortening and pruning.
//! * [`robot`]: kinematics, collision geometry, flat-output integration.
//! * [`traj`]: minimum-jerk piecewise quintic representation and variable transforms.
//! * [`opt`]: objective assembly, L-BFGS and the PHR augmented Lagrangian loop.
//! * [`pipeline`]: the end-to-end planner and the independent trajectory validator.
//! * [`cli`]: command-line front end (`wbp`).

pub mod clock;
#[cfg(feature = "cli")]
pub mod cli;
mod error;
pub mod opt;
pub mod pipeline;
pub mod robot;
pub mod topo;
pub mod traj;
pub mod world;

pub use error::{Error, Result};
