//! Topological base-path search over the 2D ESDF.
//!
//! A visibility roadmap (guards plus connectors) captures the free space,
//! loop-free start–goal paths are enumerated shortest first, shortened by
//! line-of-sight shortcuts and pruned to one representative per uniform
//! visibility deformation class.

mod grid;
mod path;
mod roadmap;
mod search;
mod shorten;
mod svg;

use serde::{Deserialize, Serialize};

pub use path::Path2D;
pub use grid::{grid_connected, grid_path};
pub use roadmap::{build_roadmap, segment_clear, Roadmap};
pub use search::search_topo_paths;
pub use shorten::{prune_paths, shorten_path, uvd_equivalent};
pub use svg::SvgCanvas;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TopoConfig {
    /// Random samples drawn while building the roadmap.
    pub max_samples: usize,
    /// ESDF value every roadmap edge and path must keep.
    pub clearance_min: f64,
    /// Samples are drawn in the start–goal bounding box grown by this much.
    pub sample_inflation: f64,
    /// Share of samples moved onto the distance-field ridge before use.
    pub retract_fraction: f64,
    /// Raw paths returned by the search, before pruning.
    pub search_paths: usize,
    /// Cap on shortest-path computations spent by the search.
    pub search_budget: usize,
    /// Candidates kept after pruning.
    pub max_candidates: usize,
    pub detour_ratio: f64,
    pub n_checks: usize,
}

impl Default for TopoConfig {
    fn default() -> Self {
        Self {
            max_samples: 1500,
            clearance_min: 0.18,
            sample_inflation: 3.0,
            retract_fraction: 0.5,
            search_paths: 32,
            search_budget: 2000,
            max_candidates: 5,
            detour_ratio: 2.0,
            n_checks: 32,
        }
    }
}

/// Build, search, shorten and prune in one call.
///
/// When sampling leaves start and goal disconnected, the shortest grid chain
/// at `clearance_min` stands in as a single-path roadmap.
pub fn candidate_paths(
    esdf: &crate::world::GridEsdf,
    start: [f64; 2],
    goal: [f64; 2],
    cfg: &TopoConfig,
    seed: u64,
) -> crate::Result<(Roadmap, Vec<Path2D>)> {
    let rm = match build_roadmap(esdf, start, goal, cfg, seed) {
        Err(crate::Error::DisconnectedRoadmap) => {
            let p = grid_path(esdf, start, goal, cfg.clearance_min).ok_or(crate::Error::DisconnectedRoadmap)?;
            let n = p.waypoints.len();
            // start and goal keep ids 0 and 1
            let mut nodes = vec![start, goal];
            nodes.extend_from_slice(&p.waypoints[1..n - 1]);
            let ids: Vec<usize> = std::iter::once(0).chain(2..n).chain(std::iter::once(1)).collect();
            let pairs: Vec<(usize, usize)> = ids.windows(2).map(|w| (w[0], w[1])).collect();
            Roadmap::from_edges(nodes, &pairs, 0, 1)
        }
        r => r?,
    };
    let raw = search_topo_paths(&rm, cfg.search_paths, cfg.search_budget);
    let mut short: Vec<Path2D> = raw.iter().map(|p| shorten_path(p, esdf, cfg)).collect();
    short.sort_by(|a, b| a.length.total_cmp(&b.length));
    let pruned = prune_paths(&short, esdf, cfg);
    Ok((rm, pruned))
}
