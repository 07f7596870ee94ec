//! Environment representation.
//!
//! Obstacles are yaw-rotated boxes. The base is checked against a 2D grid
//! ESDF of the inflated obstacle footprints; arm collision spheres are checked
//! against the exact box SDF.

mod esdf;
mod sampling;
mod scenario;
mod sdf3;

pub use esdf::{build_grid_esdf, footprint_occupancy, EsdfSample, GridEsdf};
pub use sampling::{sample_free_state, state_is_free, FreeStateConfig};
pub use scenario::{generate_scenario, BoxObstacle, Footprint, ObstacleKind, Scenario, ScenarioParams};
pub use sdf3::{box_sdf, sdf3_query, SdfIndex, SdfSample};

/// Scenario plus derived collision structures, shared read-only by workers.
#[derive(Debug, Clone)]
pub struct World {
    pub scenario: Scenario,
    pub esdf: GridEsdf,
    pub sdf: SdfIndex,
}

impl World {
    pub fn new(scenario: Scenario, resolution: f64, inflation: f64, sdf_cutoff: f64) -> Self {
        let esdf = build_grid_esdf(&scenario, resolution, inflation);
        let sdf = SdfIndex::new(&scenario, sdf_cutoff);
        Self { scenario, esdf, sdf }
    }

    /// Exact clearance of a base disc of `radius` against every obstacle footprint.
    pub fn base_clearance(&self, p: [f64; 2], radius: f64) -> f64 {
        self.scenario
            .obstacles
            .iter()
            .map(|o| o.footprint().signed_distance(p))
            .fold(f64::INFINITY, f64::min)
            - radius
    }
}
