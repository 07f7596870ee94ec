use std::fmt::Write as _;

use super::scenario::{Footprint, Scenario};

/// Signed Euclidean distance field over the ground plane.
///
/// Cell `(i, j)` has its center at `origin + ((i + 0.5) * res, (j + 0.5) * res)`.
/// Values are `outside - inside` distances measured between cell centers.
#[derive(Debug, Clone, PartialEq)]
pub struct GridEsdf {
    pub origin: [f64; 2],
    pub resolution: f64,
    pub width: usize,
    pub height: usize,
    pub dist: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EsdfSample {
    pub distance: f64,
    pub gradient: [f64; 2],
    /// Query point fell outside the grid and was clamped to the border.
    pub clamped: bool,
}

/// Squared 1-D distance transform (lower envelope of parabolas).
fn edt_1d(f: &[f64], out: &mut [f64], v: &mut [usize], z: &mut [f64]) {
    let n = f.len();
    let mut k = 0usize;
    v[0] = 0;
    z[0] = f64::NEG_INFINITY;
    z[1] = f64::INFINITY;
    for q in 1..n {
        if f[q] == f64::INFINITY {
            continue;
        }
        if f[v[0]] == f64::INFINITY {
            v[0] = q;
            continue;
        }
        loop {
            let p = v[k];
            let s = ((f[q] + (q * q) as f64) - (f[p] + (p * p) as f64)) / (2.0 * (q as f64 - p as f64));
            if k > 0 && s <= z[k] {
                k -= 1;
            } else {
                k += 1;
                v[k] = q;
                z[k] = s;
                z[k + 1] = f64::INFINITY;
                break;
            }
        }
    }
    if f[v[0]] == f64::INFINITY {
        out.iter_mut().for_each(|o| *o = f64::INFINITY);
        return;
    }
    let mut k = 0usize;
    for (q, o) in out.iter_mut().enumerate() {
        while z[k + 1] < q as f64 {
            k += 1;
        }
        let d = q as f64 - v[k] as f64;
        *o = d * d + f[v[k]];
    }
}

/// Exact squared distance (in cells) from every cell to the nearest cell
/// where `feature` is true.
fn squared_edt(feature: &[bool], width: usize, height: usize) -> Vec<f64> {
    let n = width.max(height);
    let mut f = vec![0.0; n];
    let mut out = vec![0.0; n];
    let mut v = vec![0usize; n];
    let mut z = vec![0.0; n + 1];
    let mut grid: Vec<f64> = feature.iter().map(|&b| if b { 0.0 } else { f64::INFINITY }).collect();
    for x in 0..width {
        for y in 0..height {
            f[y] = grid[y * width + x];
        }
        edt_1d(&f[..height], &mut out[..height], &mut v, &mut z);
        for y in 0..height {
            grid[y * width + x] = out[y];
        }
    }
    for y in 0..height {
        f[..width].copy_from_slice(&grid[y * width..(y + 1) * width]);
        edt_1d(&f[..width], &mut out[..width], &mut v, &mut z);
        grid[y * width..(y + 1) * width].copy_from_slice(&out[..width]);
    }
    grid
}

impl GridEsdf {
    /// Builds the field from an occupancy mask (row-major, `y * width + x`).
    pub fn from_occupancy(origin: [f64; 2], resolution: f64, width: usize, height: usize, occupied: &[bool]) -> Self {
        assert_eq!(occupied.len(), width * height);
        let free: Vec<bool> = occupied.iter().map(|o| !o).collect();
        let outside = squared_edt(occupied, width, height);
        let inside = squared_edt(&free, width, height);
        let cap = ((width * width + height * height) as f64).sqrt() + 1.0;
        let dist = outside
            .iter()
            .zip(&inside)
            .map(|(&o, &i)| {
                let o = if o.is_finite() { o.sqrt() } else { cap };
                let i = if i.is_finite() { i.sqrt() } else { cap };
                (o - i) * resolution
            })
            .collect();
        Self { origin, resolution, width, height, dist }
    }

    pub fn cell_center(&self, ix: usize, iy: usize) -> [f64; 2] {
        [
            self.origin[0] + (ix as f64 + 0.5) * self.resolution,
            self.origin[1] + (iy as f64 + 0.5) * self.resolution,
        ]
    }

    pub fn at(&self, ix: usize, iy: usize) -> f64 {
        self.dist[iy * self.width + ix]
    }

    pub fn bounds(&self) -> [f64; 4] {
        [
            self.origin[0],
            self.origin[1],
            self.origin[0] + self.width as f64 * self.resolution,
            self.origin[1] + self.height as f64 * self.resolution,
        ]
    }

    /// Bilinear interpolation between cell centers with the analytic gradient
    /// of the interpolating patch.
    pub fn query(&self, p: [f64; 2]) -> EsdfSample {
        let res = self.resolution;
        let mut clamped = false;
        let mut axis = |v: f64, o: f64, n: usize| -> (usize, f64, bool) {
            let u = (v - o) / res - 0.5;
            let max = (n - 1) as f64;
            let uc = if u < 0.0 || u > max {
                clamped = clamped || u < -0.5 || u > max + 0.5;
                u.clamp(0.0, max)
            } else {
                u
            };
            if n == 1 {
                return (0, 0.0, true);
            }
            let i = (uc.floor() as usize).min(n - 2);
            (i, uc - i as f64, u >= 0.0 && u <= max)
        };
        let (ix, fx, inx) = axis(p[0], self.origin[0], self.width);
        let (iy, fy, iny) = axis(p[1], self.origin[1], self.height);
        let ix1 = (ix + 1).min(self.width - 1);
        let iy1 = (iy + 1).min(self.height - 1);
        let d00 = self.at(ix, iy);
        let d10 = self.at(ix1, iy);
        let d01 = self.at(ix, iy1);
        let d11 = self.at(ix1, iy1);
        let d0 = d00 + fx * (d10 - d00);
        let d1 = d01 + fx * (d11 - d01);
        let distance = d0 + fy * (d1 - d0);
        let gx = if inx { ((1.0 - fy) * (d10 - d00) + fy * (d11 - d01)) / res } else { 0.0 };
        let gy = if iny { (d1 - d0) / res } else { 0.0 };
        EsdfSample { distance, gradient: [gx, gy], clamped }
    }

    /// Comma-separated dump, one grid row per line, bottom row first.
    pub fn to_csv(&self) -> String {
        let mut s = String::with_capacity(self.dist.len() * 8);
        for y in 0..self.height {
            for x in 0..self.width {
                if x > 0 {
                    s.push(',');
                }
                let _ = write!(s, "{:.4}", self.at(x, y));
            }
            s.push('\n');
        }
        s
    }
}

/// Occupancy of every cell center against the obstacle footprints inflated
/// by `inflation`.
pub fn footprint_occupancy(
    footprints: &[Footprint],
    origin: [f64; 2],
    resolution: f64,
    width: usize,
    height: usize,
    inflation: f64,
) -> Vec<bool> {
    let mut occ = vec![false; width * height];
    for fp in footprints {
        let b = fp.aabb();
        let lo_x = (((b[0] - inflation - origin[0]) / resolution - 0.5).floor().max(0.0)) as usize;
        let lo_y = (((b[1] - inflation - origin[1]) / resolution - 0.5).floor().max(0.0)) as usize;
        let hi_x = (((b[2] + inflation - origin[0]) / resolution - 0.5).ceil().max(0.0) as usize).min(width.saturating_sub(1));
        let hi_y = (((b[3] + inflation - origin[1]) / resolution - 0.5).ceil().max(0.0) as usize).min(height.saturating_sub(1));
        for iy in lo_y..=hi_y {
            for ix in lo_x..=hi_x {
                let c = [origin[0] + (ix as f64 + 0.5) * resolution, origin[1] + (iy as f64 + 0.5) * resolution];
                if fp.signed_distance(c) <= inflation {
                    occ[iy * width + ix] = true;
                }
            }
        }
    }
    occ
}

/// Grid ESDF of the scenario footprints over the room bounds.
pub fn build_grid_esdf(scenario: &Scenario, resolution: f64, inflation: f64) -> GridEsdf {
    assert!(resolution > 0.0, "resolution must be positive");
    let [x0, y0, x1, y1] = scenario.room;
    let width = (((x1 - x0) / resolution).ceil() as usize).max(1);
    let height = (((y1 - y0) / resolution).ceil() as usize).max(1);
    let fps: Vec<Footprint> = scenario.obstacles.iter().map(|o| o.footprint()).collect();
    let occ = footprint_occupancy(&fps, [x0, y0], resolution, width, height, inflation);
    GridEsdf::from_occupancy([x0, y0], resolution, width, height, &occ)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::scenario::{BoxObstacle, ObstacleKind};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// O(n^2) signed transform used as the oracle.
    fn brute_force(origin: [f64; 2], res: f64, w: usize, h: usize, occ: &[bool]) -> Vec<f64> {
        let cells: Vec<(usize, usize)> = (0..h).flat_map(|y| (0..w).map(move |x| (x, y))).collect();
        let nearest = |x: usize, y: usize, want: bool| -> f64 {
            cells
                .iter()
                .filter(|&&(a, b)| occ[b * w + a] == want)
                .map(|&(a, b)| {
                    let dx = a as f64 - x as f64;
                    let dy = b as f64 - y as f64;
                    (dx * dx + dy * dy).sqrt()
                })
                .fold(f64::INFINITY, f64::min)
        };
        let _ = origin;
        cells
            .iter()
            .map(|&(x, y)| {
                if occ[y * w + x] {
                    -nearest(x, y, false) * res
                } else {
                    nearest(x, y, true) * res
                }
            })
            .collect()
    }

    #[test]
    fn matches_brute_force_on_random_masks() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let w = rng.gen_range(1..=30);
            let h = rng.gen_range(1..=30);
            let mut occ: Vec<bool> = (0..w * h).map(|_| rng.gen_bool(0.2)).collect();
            if !occ.iter().any(|&o| o) {
                occ[0] = true;
            }
            if occ.iter().all(|&o| o) {
                occ[0] = false;
            }
            let g = GridEsdf::from_occupancy([0.0, 0.0], 0.1, w, h, &occ);
            let bf = brute_force([0.0, 0.0], 0.1, w, h, &occ);
            for (a, b) in g.dist.iter().zip(&bf) {
                assert!((a - b).abs() < 1e-12, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn cuboid_center_and_boundary() {
        let mut s = Scenario::empty([0.0, 0.0, 5.0, 5.0]);
        s.obstacles.push(BoxObstacle {
            center: [2.5, 2.5, 0.5],
            half_extents: [0.5, 0.5, 0.5],
            yaw: 0.0,
            kind: ObstacleKind::Cuboid,
        });
        let res = 0.1;
        let g = build_grid_esdf(&s, res, 0.0);
        assert!(g.width <= 50 && g.height <= 50);
        let c = g.query([2.55, 2.55]).distance;
        assert!((c + 0.5).abs() <= res, "center {c}");
        // first free cell outside the right face
        let d = g.query([3.05, 2.55]).distance;
        assert!(d.abs() <= res * 2f64.sqrt(), "boundary {d}");
        // interior point far from walls
        let e = Scenario::empty([0.0, 0.0, 5.0, 5.0]);
        let g = build_grid_esdf(&e, res, 0.0);
        let q = g.query([1.25, 2.55]).distance;
        assert!((q - 1.25).abs() <= 2.0 * res, "wall distance {q}");
    }

    #[test]
    fn interpolation_and_gradient() {
        let occ = vec![false, false, false, true];
        let mut g = GridEsdf::from_occupancy([0.0, 0.0], 1.0, 2, 2, &occ);
        g.dist = vec![1.0, 2.0, 3.0, 5.0];
        assert_eq!(g.query([0.5, 0.5]).distance, 1.0);
        assert!((g.query([1.0, 0.5]).distance - 1.5).abs() < 1e-15);
        let s = g.query([1.0, 1.0]);
        assert!((s.distance - 2.75).abs() < 1e-12);
        assert!((s.gradient[0] - 1.5).abs() < 1e-12);
        assert!((s.gradient[1] - 2.5).abs() < 1e-12);
        let out = g.query([-3.0, 0.5]);
        assert!(out.clamped);
        assert_eq!(out.distance, 1.0);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let s = crate::world::generate_scenario(&crate::world::ScenarioParams::desk_scale(), 4).unwrap();
        let g = build_grid_esdf(&s, 0.1, 0.3);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut checked = 0;
        while checked < 200 {
            let p = [rng.gen_range(0.5..19.5), rng.gen_range(0.5..9.5)];
            let u = [(p[0] - g.origin[0]) / g.resolution - 0.5, (p[1] - g.origin[1]) / g.resolution - 0.5];
            let frac = |v: f64| (v - v.round()).abs();
            if frac(u[0]) < 0.1 || frac(u[1]) < 0.1 {
                continue;
            }
            checked += 1;
            let q = g.query(p);
            let h = 1e-6;
            for k in 0..2 {
                let mut a = p;
                let mut b = p;
                a[k] += h;
                b[k] -= h;
                let fd = (g.query(a).distance - g.query(b).distance) / (2.0 * h);
                let err = (fd - q.gradient[k]).abs() / fd.abs().max(1.0);
                assert!(err < 1e-6, "{fd} vs {}", q.gradient[k]);
            }
        }
    }
}
