//! Objective assembly and solvers: closed-form jerk cost, sampled
//! cubic-hinge constraint penalties, the end-effector goal residual, L-BFGS
//! and the augmented Lagrangian outer loop.

mod alm;
mod config;
mod cost;
mod goal;
mod lbfgs;
mod penalty;
mod problem;

pub use alm::{alm_solve, AlmIterate, AlmSolution, AlmStatus, EqualityProblem, Evaluation};
pub use config::{AlmParams, OptimizerConfig};
pub use cost::{jerk_cost, CostValue};
pub(crate) use goal::{accumulate_goal_gradient, residual_of};
pub use goal::{goal_residual, GoalResidual, GoalSpec};
pub use lbfgs::{lbfgs_minimize, LbfgsParams, LbfgsResult, LbfgsStatus};
pub use penalty::{hinge, penalty_terms, ConstraintFamily, PenaltyValue};
pub use problem::{Decoded, StartConditions, WholeBodyProblem};
