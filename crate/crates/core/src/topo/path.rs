use serde::{Deserialize, Serialize};

/// Polyline base path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Path2D {
    pub waypoints: Vec<[f64; 2]>,
    pub length: f64,
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

impl Path2D {
    pub fn new(waypoints: Vec<[f64; 2]>) -> Self {
        let length = waypoints.windows(2).map(|w| dist(w[0], w[1])).sum();
        Self { waypoints, length }
    }

    pub fn start(&self) -> [f64; 2] {
        self.waypoints[0]
    }

    pub fn end(&self) -> [f64; 2] {
        *self.waypoints.last().expect("non-empty path")
    }

    /// Point at arc length `s`, clamped to the path.
    pub fn point_at(&self, s: f64) -> [f64; 2] {
        let mut rem = s.max(0.0);
        for w in self.waypoints.windows(2) {
            let l = dist(w[0], w[1]);
            if rem <= l && l > 0.0 {
                let a = rem / l;
                return [w[0][0] + a * (w[1][0] - w[0][0]), w[0][1] + a * (w[1][1] - w[0][1])];
            }
            rem -= l;
        }
        self.end()
    }

    /// Point at normalized arc length `u ∈ [0, 1]`.
    pub fn point_at_fraction(&self, u: f64) -> [f64; 2] {
        self.point_at(u * self.length)
    }

    /// Unit tangent at arc length `s`; at a vertex the outgoing segment is used.
    pub fn tangent_at(&self, s: f64) -> [f64; 2] {
        let mut rem = s.max(0.0);
        let n = self.waypoints.len();
        let mut last = [1.0, 0.0];
        for (i, w) in self.waypoints.windows(2).enumerate() {
            let l = dist(w[0], w[1]);
            if l <= 0.0 {
                continue;
            }
            last = [(w[1][0] - w[0][0]) / l, (w[1][1] - w[0][1]) / l];
            if rem < l || i + 2 == n {
                return last;
            }
            rem -= l;
        }
        last
    }
}
