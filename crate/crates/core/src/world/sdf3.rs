use super::scenario::{BoxObstacle, Scenario};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SdfSample {
    pub distance: f64,
    pub gradient: [f64; 3],
}

/// Exact signed distance to one yaw-rotated box and its gradient.
pub fn box_sdf(b: &BoxObstacle, p: [f64; 3]) -> SdfSample {
    box_sdf_rotated(b, b.yaw.sin_cos(), p)
}

/// [`box_sdf`] with the box's `(sin, cos)` of yaw supplied.
fn box_sdf_rotated(b: &BoxObstacle, (sn, cs): (f64, f64), p: [f64; 3]) -> SdfSample {
    let (dx, dy) = (p[0] - b.center[0], p[1] - b.center[1]);
    let l = [cs * dx + sn * dy, -sn * dx + cs * dy, p[2] - b.center[2]];
    let to_world = |v: [f64; 3]| [cs * v[0] - sn * v[1], sn * v[0] + cs * v[1], v[2]];
    let q = [
        l[0].abs() - b.half_extents[0],
        l[1].abs() - b.half_extents[1],
        l[2].abs() - b.half_extents[2],
    ];
    let o = [q[0].max(0.0), q[1].max(0.0), q[2].max(0.0)];
    let outside = (o[0] * o[0] + o[1] * o[1] + o[2] * o[2]).sqrt();
    let sign = |v: f64| if v < 0.0 { -1.0 } else { 1.0 };
    if outside > 0.0 {
        let g = [
            sign(l[0]) * o[0] / outside,
            sign(l[1]) * o[1] / outside,
            sign(l[2]) * o[2] / outside,
        ];
        SdfSample { distance: outside, gradient: to_world(g) }
    } else {
        let mut axis = 0;
        for k in 1..3 {
            if q[k] > q[axis] {
                axis = k;
            }
        }
        let mut g = [0.0; 3];
        g[axis] = sign(l[axis]);
        SdfSample { distance: q[axis], gradient: to_world(g) }
    }
}

/// Minimum signed distance over all obstacles; ties go to the lowest index.
pub fn sdf3_query(scenario: &Scenario, p: [f64; 3]) -> SdfSample {
    let mut best = SdfSample { distance: f64::INFINITY, gradient: [0.0; 3] };
    for o in &scenario.obstacles {
        let s = box_sdf(o, p);
        if s.distance < best.distance {
            best = s;
        }
    }
    best
}

/// Bucketed obstacle lookup that returns exact distances below a cutoff.
///
/// Every box is registered in each bucket its footprint bounds touch after
/// growing them by `cutoff`, so any box within `cutoff` of a query point is
/// in that point's bucket. Results at or above the cutoff are reported as
/// `cutoff` with a zero gradient.
#[derive(Debug, Clone)]
pub struct SdfIndex {
    obstacles: Vec<BoxObstacle>,
    /// `(sin, cos)` of each yaw.
    rotations: Vec<(f64, f64)>,
    /// Circumscribed radius of each box.
    radii: Vec<f64>,
    origin: [f64; 2],
    cell: f64,
    nx: usize,
    ny: usize,
    buckets: Vec<Vec<u32>>,
    pub cutoff: f64,
}

impl SdfIndex {
    pub fn new(scenario: &Scenario, cutoff: f64) -> Self {
        let cell = 1.0;
        let [x0, y0, x1, y1] = scenario.room;
        let pad = cutoff + 1.0;
        let origin = [x0 - pad, y0 - pad];
        let nx = ((x1 - x0 + 2.0 * pad) / cell).ceil() as usize + 1;
        let ny = ((y1 - y0 + 2.0 * pad) / cell).ceil() as usize + 1;
        let mut buckets = vec![Vec::new(); nx * ny];
        for (i, o) in scenario.obstacles.iter().enumerate() {
            let b = o.footprint().aabb();
            let cx = |v: f64| (((v - origin[0]) / cell).floor().max(0.0) as usize).min(nx - 1);
            let cy = |v: f64| (((v - origin[1]) / cell).floor().max(0.0) as usize).min(ny - 1);
            for iy in cy(b[1] - cutoff)..=cy(b[3] + cutoff) {
                for ix in cx(b[0] - cutoff)..=cx(b[2] + cutoff) {
                    buckets[iy * nx + ix].push(i as u32);
                }
            }
        }
        let rotations = scenario.obstacles.iter().map(|o| o.yaw.sin_cos()).collect();
        let radii = scenario.obstacles.iter().map(|o| o.half_extents.iter().map(|h| h * h).sum::<f64>().sqrt()).collect();
        Self { obstacles: scenario.obstacles.clone(), rotations, radii, origin, cell, nx, ny, buckets, cutoff }
    }

    pub fn query(&self, p: [f64; 3]) -> SdfSample {
        let fx = ((p[0] - self.origin[0]) / self.cell).floor();
        let fy = ((p[1] - self.origin[1]) / self.cell).floor();
        let mut best = SdfSample { distance: self.cutoff, gradient: [0.0; 3] };
        if fx < 0.0 || fy < 0.0 || fx as usize >= self.nx || fy as usize >= self.ny {
            return best;
        }
        for &i in &self.buckets[fy as usize * self.nx + fx as usize] {
            let (o, r) = (&self.obstacles[i as usize], self.radii[i as usize]);
            // skip boxes whose bounding sphere is already farther than the best
            let reach = best.distance + r;
            let d2 = (p[0] - o.center[0]).powi(2) + (p[1] - o.center[1]).powi(2) + (p[2] - o.center[2]).powi(2);
            if reach > 0.0 && d2 > reach * reach {
                continue;
            }
            let s = box_sdf_rotated(o, self.rotations[i as usize], p);
            if s.distance < best.distance {
                best = s;
            }
        }
        best
    }
}
