//! Debug drawings of worlds and plans.

use super::{dense_positions, PlanReport, PlanRequest, PlannerConfig};
use crate::topo::{candidate_paths, SvgCanvas};
use crate::world::{Scenario, World};

fn base_path(report: &PlanReport) -> Option<Vec<[f64; 2]>> {
    let tr = report.best_trajectory()?.ok()?;
    Some(dense_positions(&tr, 20, 4).into_iter().map(|s| s.3).collect())
}

/// Corners of every obstacle footprint.
pub fn footprints(s: &Scenario) -> Vec<[[f64; 2]; 4]> {
    s.obstacles
        .iter()
        .map(|o| {
            let f = o.footprint();
            let (sn, cs) = f.yaw.sin_cos();
            [[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]].map(|k: [f64; 2]| {
                let (lx, ly) = (k[0] * f.half[0], k[1] * f.half[1]);
                [f.center[0] + cs * lx - sn * ly, f.center[1] + sn * lx + cs * ly]
            })
        })
        .collect()
}

/// ESDF heatmap with obstacle outlines.
pub fn world_svg(world: &World) -> SvgCanvas {
    let mut c = SvgCanvas::new(world.esdf.bounds());
    c.esdf(&world.esdf);
    for f in footprints(&world.scenario) {
        c.polygon(&f, "#111111");
    }
    c
}

/// ESDF heatmap, obstacles, roadmap, candidates and the optimized base path.
pub fn plan_svg(world: &World, req: &PlanRequest, report: &PlanReport, cfg: &PlannerConfig) -> String {
    const COLORS: [&str; 5] = ["#f59e0b", "#10b981", "#ec4899", "#06b6d4", "#84cc16"];
    let mut c = world_svg(world);
    let start = [req.start.state.x, req.start.state.y];
    if let Some(goal) = report.base_goal {
        if let Ok((rm, _)) = candidate_paths(&world.esdf, start, goal, &cfg.topo, req.seed) {
            c.roadmap(&rm);
        }
        c.circle(goal, 0.15, "#dc2626");
    }
    for (i, p) in report.candidate_paths.iter().enumerate() {
        c.path(p, COLORS[i % COLORS.len()], 2.0);
    }
    if let Some(p) = base_path(report) {
        c.polyline(&p, "#dc2626", 3.0);
    }
    c.circle(start, 0.15, "#16a34a");
    c.finish()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::{BoxObstacle, ObstacleKind};

    #[test]
    fn rotated_footprint_corners() {
        let mut s = Scenario { room: [0.0, 0.0, 4.0, 4.0], obstacles: Vec::new(), seed: 0 };
        let yaw = std::f64::consts::FRAC_PI_2;
        s.obstacles.push(BoxObstacle { center: [2.0, 1.0, 0.5], half_extents: [1.0, 0.5, 0.5], yaw, kind: ObstacleKind::Cuboid });
        let f = footprints(&s)[0];
        let expect = [[2.5, 0.0], [2.5, 2.0], [1.5, 2.0], [1.5, 0.0]];
        for (a, b) in f.iter().zip(&expect) {
            assert!((a[0] - b[0]).abs() < 1e-12 && (a[1] - b[1]).abs() < 1e-12, "{a:?}");
        }
    }
}
