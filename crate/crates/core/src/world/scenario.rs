use std::f64::consts::PI;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObstacleKind {
    DeskTop,
    DeskLeg,
    Cuboid,
    Wall,
}

/// Yaw-rotated box resting in the world.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxObstacle {
    pub center: [f64; 3],
    pub half_extents: [f64; 3],
    pub yaw: f64,
    pub kind: ObstacleKind,
}

impl BoxObstacle {
    /// Point expressed in the box frame.
    pub fn to_local(&self, p: [f64; 3]) -> [f64; 3] {
        let (s, c) = self.yaw.sin_cos();
        let dx = p[0] - self.center[0];
        let dy = p[1] - self.center[1];
        [c * dx + s * dy, -s * dx + c * dy, p[2] - self.center[2]]
    }

    /// Vector in the box frame rotated back into the world frame.
    pub fn to_world_dir(&self, v: [f64; 3]) -> [f64; 3] {
        let (s, c) = self.yaw.sin_cos();
        [c * v[0] - s * v[1], s * v[0] + c * v[1], v[2]]
    }

    pub fn footprint(&self) -> Footprint {
        Footprint {
            center: [self.center[0], self.center[1]],
            half: [self.half_extents[0], self.half_extents[1]],
            yaw: self.yaw,
        }
    }
}

/// Rotated rectangle in the ground plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Footprint {
    pub center: [f64; 2],
    pub half: [f64; 2],
    pub yaw: f64,
}

impl Footprint {
    fn axes(&self) -> [[f64; 2]; 2] {
        let (s, c) = self.yaw.sin_cos();
        [[c, s], [-s, c]]
    }

    /// Exact signed distance from `p` to the rectangle, negative inside.
    pub fn signed_distance(&self, p: [f64; 2]) -> f64 {
        let [ax, ay] = self.axes();
        let d = [p[0] - self.center[0], p[1] - self.center[1]];
        let lx = (d[0] * ax[0] + d[1] * ax[1]).abs() - self.half[0];
        let ly = (d[0] * ay[0] + d[1] * ay[1]).abs() - self.half[1];
        let ox = lx.max(0.0);
        let oy = ly.max(0.0);
        (ox * ox + oy * oy).sqrt() + lx.max(ly).min(0.0)
    }

    fn corners(&self) -> [[f64; 2]; 4] {
        let [ax, ay] = self.axes();
        let mut out = [[0.0; 2]; 4];
        for (k, (sx, sy)) in [(1.0, 1.0), (-1.0, 1.0), (-1.0, -1.0), (1.0, -1.0)].iter().enumerate() {
            out[k] = [
                self.center[0] + sx * self.half[0] * ax[0] + sy * self.half[1] * ay[0],
                self.center[1] + sx * self.half[0] * ax[1] + sy * self.half[1] * ay[1],
            ];
        }
        out
    }

    /// Separating-axis overlap test, with an optional gap that must be kept
    /// between the two rectangles.
    pub fn overlaps(&self, other: &Footprint, gap: f64) -> bool {
        let ca = self.corners();
        let cb = other.corners();
        for axis in self.axes().iter().chain(other.axes().iter()) {
            let project = |cs: &[[f64; 2]; 4]| {
                cs.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), c| {
                    let v = c[0] * axis[0] + c[1] * axis[1];
                    (lo.min(v), hi.max(v))
                })
            };
            let (alo, ahi) = project(&ca);
            let (blo, bhi) = project(&cb);
            if ahi + gap <= blo || bhi + gap <= alo {
                return false;
            }
        }
        true
    }

    /// Axis-aligned bounds `[xmin, ymin, xmax, ymax]`.
    pub fn aabb(&self) -> [f64; 4] {
        let cs = self.corners();
        let mut b = [f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY];
        for c in cs {
            b[0] = b[0].min(c[0]);
            b[1] = b[1].min(c[1]);
            b[2] = b[2].max(c[0]);
            b[3] = b[3].max(c[1]);
        }
        b
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    /// `[xmin, ymin, xmax, ymax]`
    pub room: [f64; 4],
    pub obstacles: Vec<BoxObstacle>,
    pub seed: u64,
}

impl Scenario {
    pub fn empty(room: [f64; 4]) -> Self {
        let mut s = Scenario { room, obstacles: Vec::new(), seed: 0 };
        s.obstacles.extend(walls(room, 0.2, 2.0));
        s
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let sc: Scenario = serde_json::from_str(s)?;
        sc.check()?;
        Ok(sc)
    }

    fn check(&self) -> Result<()> {
        let [x0, y0, x1, y1] = self.room;
        if !(x1 > x0 && y1 > y0) {
            return Err(Error::InvalidInput(format!("room bounds {:?} are empty", self.room)));
        }
        for (i, o) in self.obstacles.iter().enumerate() {
            if o.half_extents.iter().any(|&h| !(h > 0.0)) {
                return Err(Error::InvalidInput(format!("obstacles[{i}].half_extents must be positive")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenarioParams {
    pub room_size: [f64; 2],
    pub wall_thickness: f64,
    pub wall_height: f64,
    pub desk_grids: usize,
    /// Desk top size range (m), applied to both horizontal dimensions.
    pub desk_size: [f64; 2],
    pub desk_height: [f64; 2],
    /// Desks per row or column inside one grid.
    pub desks_per_line: [usize; 2],
    pub desk_top_thickness: f64,
    pub desk_leg_size: f64,
    pub cuboids: usize,
    pub cuboid_size: [f64; 2],
    pub cuboid_height: [f64; 2],
    /// Free margin kept between sampled obstacles and the walls.
    pub wall_margin: f64,
    pub max_retries: usize,
}

impl Default for ScenarioParams {
    fn default() -> Self {
        Self {
            room_size: [35.0, 15.0],
            wall_thickness: 0.2,
            wall_height: 2.0,
            desk_grids: 30,
            desk_size: [0.75, 1.25],
            desk_height: [0.5, 1.5],
            desks_per_line: [1, 3],
            desk_top_thickness: 0.04,
            desk_leg_size: 0.05,
            cuboids: 60,
            cuboid_size: [0.2, 0.8],
            cuboid_height: [0.4, 1.5],
            wall_margin: 0.3,
            max_retries: 10_000,
        }
    }
}

impl ScenarioParams {
    /// Scaled-down room used by the desk-scale benchmark.
    pub fn desk_scale() -> Self {
        Self { room_size: [20.0, 10.0], desk_grids: 10, cuboids: 20, ..Self::default() }
    }

    pub fn empty(room_size: [f64; 2]) -> Self {
        Self { room_size, desk_grids: 0, cuboids: 0, ..Self::default() }
    }
}

fn walls(room: [f64; 4], thickness: f64, height: f64) -> Vec<BoxObstacle> {
    let [x0, y0, x1, y1] = room;
    let (cx, cy) = ((x0 + x1) / 2.0, (y0 + y1) / 2.0);
    let (hx, hy) = ((x1 - x0) / 2.0, (y1 - y0) / 2.0);
    let t = thickness / 2.0;
    let hz = height / 2.0;
    let wall = |c: [f64; 2], h: [f64; 2]| BoxObstacle {
        center: [c[0], c[1], hz],
        half_extents: [h[0], h[1], hz],
        yaw: 0.0,
        kind: ObstacleKind::Wall,
    };
    vec![
        wall([x0, cy], [t, hy + thickness]),
        wall([x1, cy], [t, hy + thickness]),
        wall([cx, y0], [hx + thickness, t]),
        wall([cx, y1], [hx + thickness, t]),
    ]
}

fn uniform(rng: &mut ChaCha8Rng, range: [f64; 2]) -> f64 {
    if range[1] > range[0] {
        rng.gen_range(range[0]..range[1])
    } else {
        range[0]
    }
}

fn desk(center: [f64; 2], size: [f64; 2], height: f64, yaw: f64, p: &ScenarioParams) -> Vec<BoxObstacle> {
    let t = p.desk_top_thickness;
    let leg = p.desk_leg_size.min(size[0] / 2.0).min(size[1] / 2.0);
    let mut out = vec![BoxObstacle {
        center: [center[0], center[1], height - t / 2.0],
        half_extents: [size[0] / 2.0, size[1] / 2.0, t / 2.0],
        yaw,
        kind: ObstacleKind::DeskTop,
    }];
    let (s, c) = yaw.sin_cos();
    let leg_h = (height - t) / 2.0;
    for (sx, sy) in [(1.0, 1.0), (-1.0, 1.0), (-1.0, -1.0), (1.0, -1.0)] {
        let lx = sx * (size[0] / 2.0 - leg / 2.0);
        let ly = sy * (size[1] / 2.0 - leg / 2.0);
        out.push(BoxObstacle {
            center: [center[0] + c * lx - s * ly, center[1] + s * lx + c * ly, leg_h],
            half_extents: [leg / 2.0, leg / 2.0, leg_h],
            yaw,
            kind: ObstacleKind::DeskLeg,
        });
    }
    out
}

/// Procedurally fills a walled room with desk grids and cuboids.
///
/// Each desk grid is one or two rows (or columns) of identical desks placed
/// side by side; its outer footprint is rejection-sampled against everything
/// placed before it. Cuboids are placed afterwards with the same test, so no
/// cuboid ends up under a desk.
pub fn generate_scenario(params: &ScenarioParams, seed: u64) -> Result<Scenario> {
    let room = [0.0, 0.0, params.room_size[0], params.room_size[1]];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut obstacles = walls(room, params.wall_thickness, params.wall_height);
    let mut placed: Vec<Footprint> = Vec::new();
    let margin = params.wall_margin;

    let mut attempts = 0usize;
    let sample_center = |rng: &mut ChaCha8Rng, half_diag: f64| -> Option<[f64; 2]> {
        let lo = [room[0] + margin + half_diag, room[1] + margin + half_diag];
        let hi = [room[2] - margin - half_diag, room[3] - margin - half_diag];
        if hi[0] <= lo[0] || hi[1] <= lo[1] {
            return None;
        }
        Some([rng.gen_range(lo[0]..hi[0]), rng.gen_range(lo[1]..hi[1])])
    };

    for g in 0..params.desk_grids {
        loop {
            attempts += 1;
            if attempts > params.max_retries {
                return Err(Error::Placement(format!("desk grid {g} after {} retries", params.max_retries)));
            }
            let size = [uniform(&mut rng, params.desk_size), uniform(&mut rng, params.desk_size)];
            let height = uniform(&mut rng, params.desk_height);
            let lines = rng.gen_range(1..=2usize);
            let per_line = rng.gen_range(params.desks_per_line[0]..=params.desks_per_line[1].max(params.desks_per_line[0]));
            let columns = rng.gen_bool(0.5);
            let yaw = rng.gen_range(-PI..PI);
            let (nx, ny) = if columns { (lines, per_line) } else { (per_line, lines) };
            let half = [nx as f64 * size[0] / 2.0, ny as f64 * size[1] / 2.0];
            let Some(center) = sample_center(&mut rng, half[0].hypot(half[1])) else { continue };
            let fp = Footprint { center, half, yaw };
            if placed.iter().any(|o| o.overlaps(&fp, 0.0)) {
                continue;
            }
            placed.push(fp);
            let (s, c) = yaw.sin_cos();
            for ix in 0..nx {
                for iy in 0..ny {
                    let lx = -half[0] + (ix as f64 + 0.5) * size[0];
                    let ly = -half[1] + (iy as f64 + 0.5) * size[1];
                    let dc = [center[0] + c * lx - s * ly, center[1] + s * lx + c * ly];
                    obstacles.extend(desk(dc, size, height, yaw, params));
                }
            }
            break;
        }
    }

    for k in 0..params.cuboids {
        loop {
            attempts += 1;
            if attempts > params.max_retries {
                return Err(Error::Placement(format!("cuboid {k} after {} retries", params.max_retries)));
            }
            let size = [uniform(&mut rng, params.cuboid_size), uniform(&mut rng, params.cuboid_size)];
            let height = uniform(&mut rng, params.cuboid_height);
            let yaw = rng.gen_range(-PI..PI);
            let half = [size[0] / 2.0, size[1] / 2.0];
            let Some(center) = sample_center(&mut rng, half[0].hypot(half[1])) else { continue };
            let fp = Footprint { center, half, yaw };
            if placed.iter().any(|o| o.overlaps(&fp, 0.0)) {
                continue;
            }
            placed.push(fp);
            obstacles.push(BoxObstacle {
                center: [center[0], center[1], height / 2.0],
                half_extents: [half[0], half[1], height / 2.0],
                yaw,
                kind: ObstacleKind::Cuboid,
            });
            break;
        }
    }

    Ok(Scenario { room, obstacles, seed })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_params_give_four_walls() {
        for seed in [0, 7, 99] {
            let s = generate_scenario(&ScenarioParams::empty([10.0, 6.0]), seed).unwrap();
            assert_eq!(s.obstacles.len(), 4);
            assert!(s.obstacles.iter().all(|o| o.kind == ObstacleKind::Wall));
        }
    }

    #[test]
    fn full_scale_room_is_valid() {
        let p = ScenarioParams::default();
        let s = generate_scenario(&p, 1).unwrap();
        let desks = s.obstacles.iter().filter(|o| o.kind == ObstacleKind::DeskTop).count();
        let cuboids = s.obstacles.iter().filter(|o| o.kind == ObstacleKind::Cuboid).count();
        assert!(desks >= 30);
        assert_eq!(cuboids, 60);
        for o in &s.obstacles {
            assert!(o.half_extents.iter().all(|&h| h > 0.0));
            assert!(o.yaw >= -PI && o.yaw < PI);
            let [x0, y0, x1, y1] = o.footprint().aabb();
            assert!(x1 > s.room[0] && x0 < s.room[2] && y1 > s.room[1] && y0 < s.room[3]);
        }
        // cuboids never overlap desk tops or each other
        let fps: Vec<_> = s
            .obstacles
            .iter()
            .filter(|o| matches!(o.kind, ObstacleKind::Cuboid))
            .map(|o| o.footprint())
            .collect();
        let tops: Vec<_> = s
            .obstacles
            .iter()
            .filter(|o| matches!(o.kind, ObstacleKind::DeskTop))
            .map(|o| o.footprint())
            .collect();
        for (i, a) in fps.iter().enumerate() {
            for b in fps.iter().skip(i + 1).chain(tops.iter()) {
                assert!(!a.overlaps(b, 0.0));
            }
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let p = ScenarioParams::desk_scale();
        let a = generate_scenario(&p, 42).unwrap().to_json().unwrap();
        let b = generate_scenario(&p, 42).unwrap().to_json().unwrap();
        let c = generate_scenario(&p, 43).unwrap().to_json().unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn overcrowded_room_reports_placement_failure() {
        let p = ScenarioParams { room_size: [3.0, 3.0], cuboids: 500, max_retries: 2000, ..ScenarioParams::empty([3.0, 3.0]) };
        assert!(matches!(generate_scenario(&p, 3), Err(Error::Placement(_))));
    }

    #[test]
    fn footprint_distance() {
        let f = Footprint { center: [1.0, 1.0], half: [0.5, 0.25], yaw: 0.0 };
        assert!((f.signed_distance([1.0, 1.0]) + 0.25).abs() < 1e-12);
        assert!((f.signed_distance([2.5, 1.0]) - 1.0).abs() < 1e-12);
        let r = Footprint { yaw: PI / 2.0, ..f };
        assert!((r.signed_distance([1.0, 2.5]) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn json_round_trip() {
        let s = generate_scenario(&ScenarioParams::desk_scale(), 5).unwrap();
        let back = Scenario::from_json(&s.to_json().unwrap()).unwrap();
        assert_eq!(s, back);
    }
}
