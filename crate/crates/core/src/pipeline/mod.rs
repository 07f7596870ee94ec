//! End-to-end planner and the independent trajectory validator.
//!
//! Candidate base paths from the topological search are lifted into
//! whole-body initial paths, optimized concurrently, validated, and the
//! validated candidate with the lowest objective is returned.

mod benchmark;
mod draw;
mod init;
mod plan;
mod validate;

use serde::{Deserialize, Serialize};

pub use benchmark::{
    run_benchmark, run_trial, trial_request, trial_seed, BenchmarkResult, BenchmarkSpec, IntervalResult, Trial, TrialRecord,
};
pub use draw::{footprints, plan_svg, world_svg};
pub use init::{choose_base_goal, sample_arm_path, sample_base_states, solve_ik, wrap_angle, IkSolution, InitConfig};
pub use plan::{
    optimize_candidate, plan, plan_with_paths, CandidateOutcome, CandidateReport, CandidateStatus, PlanReport, PlanRequest,
    PlanStatus,
};
pub use validate::{dense_positions, validate_trajectory, FamilyViolation, ValidationConfig, ValidationReport};

use crate::opt::OptimizerConfig;
use crate::robot::RobotModel;
use crate::topo::TopoConfig;
use crate::world::{Scenario, World};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlannerConfig {
    /// ESDF cell size (m).
    pub resolution: f64,
    /// Arm SDF queries farther than this from every box return the cutoff.
    pub sdf_cutoff: f64,
    /// Target trajectory length per segment (m).
    pub segment_length: f64,
    pub min_segments: usize,
    pub max_segments: usize,
    /// Fraction of `v_max`, `ω_max` and joint rate limits used for initial durations.
    pub reference_speed: f64,
    /// Shortest initial segment duration (s).
    pub min_segment_duration: f64,
    /// Planning time budget (ms), checked after planning.
    pub budget_ms: f64,
    /// Include wall-clock timings in reports. Timings differ between runs.
    pub report_timing: bool,
    pub topo: TopoConfig,
    pub init: InitConfig,
    pub optimizer: OptimizerConfig,
    pub validation: ValidationConfig,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self {
            resolution: 0.1,
            sdf_cutoff: 0.5,
            segment_length: 1.0,
            min_segments: 3,
            max_segments: 30,
            reference_speed: 0.5,
            min_segment_duration: 1.0,
            budget_ms: 5000.0,
            report_timing: false,
            topo: TopoConfig::default(),
            init: InitConfig::default(),
            optimizer: OptimizerConfig::default(),
            validation: ValidationConfig::default(),
        }
    }
}

impl PlannerConfig {
    pub fn from_json(s: &str) -> Result<Self> {
        let c: Self = serde_json::from_str(s)?;
        Ok(c)
    }

    pub fn validate(&self, robot: &RobotModel) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidInput(m.to_string()));
        if !(self.resolution > 0.0) || !(self.sdf_cutoff > 0.0) {
            return bad("resolution and sdf_cutoff must be positive");
        }
        if !(self.segment_length > 0.0) || self.min_segments < 1 || self.max_segments < self.min_segments {
            return bad("segment_length must be positive and 1 <= min_segments <= max_segments");
        }
        if !(self.reference_speed > 0.0) || !(self.min_segment_duration > 0.0) {
            return bad("reference_speed and min_segment_duration must be positive");
        }
        if !(self.init.base_interval > 0.0) || !(self.init.dq_step > 0.0) {
            return bad("init.base_interval and init.dq_step must be positive");
        }
        if !(self.init.ik_joint_fraction > 0.0 && self.init.ik_joint_fraction < 1.0) {
            return bad("init.ik_joint_fraction must lie in (0, 1)");
        }
        if self.topo.max_candidates == 0 || self.topo.n_checks == 0 || !(self.topo.detour_ratio >= 1.0) {
            return bad("topo needs max_candidates >= 1, n_checks >= 1, detour_ratio >= 1");
        }
        if self.validation.samples_per_segment == 0 {
            return bad("validation.samples_per_segment must be positive");
        }
        self.optimizer.validate(robot.n_joints())
    }

    /// Collision structures for `scenario`, with the grid inflated by the base radius.
    pub fn build_world(&self, scenario: Scenario, robot: &RobotModel) -> World {
        World::new(scenario, self.resolution, robot.collision.cylinder.radius, self.sdf_cutoff)
    }
}
