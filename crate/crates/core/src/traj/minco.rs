use serde::{Deserialize, Serialize};

use super::band::{BandLu, BandMatrix};
use super::poly::{basis, eval as poly_eval};
use crate::{Error, Result};

/// Channel index of the base arc length.
pub const S: usize = 0;
/// Channel index of the base yaw.
pub const YAW: usize = 1;
/// First joint channel.
pub const Q0: usize = 2;

/// Piecewise quintic trajectory over `dim` channels (`s`, `θ`, `q₁…q_N`).
///
/// Coefficients are stored row-major as `(6 * segment + power, channel)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub dim: usize,
    pub durations: Vec<f64>,
    pub coeffs: Vec<f64>,
    pub x0: f64,
    pub y0: f64,
}

impl Trajectory {
    pub fn zeros(dim: usize, durations: Vec<f64>, x0: f64, y0: f64) -> Self {
        let coeffs = vec![0.0; 6 * durations.len() * dim];
        Self { dim, durations, coeffs, x0, y0 }
    }

    pub fn segments(&self) -> usize {
        self.durations.len()
    }

    pub fn joints(&self) -> usize {
        self.dim - Q0
    }

    pub fn total_duration(&self) -> f64 {
        self.durations.iter().sum()
    }

    #[inline]
    pub fn coeff(&self, seg: usize, power: usize, ch: usize) -> f64 {
        self.coeffs[(6 * seg + power) * self.dim + ch]
    }

    pub fn coeff_mut(&mut self, seg: usize, power: usize, ch: usize) -> &mut f64 {
        &mut self.coeffs[(6 * seg + power) * self.dim + ch]
    }

    pub fn channel_coeffs(&self, seg: usize, ch: usize) -> [f64; 6] {
        std::array::from_fn(|i| self.coeff(seg, i, ch))
    }

    /// Channel `ch` of segment `seg` at local time `t`.
    #[inline]
    pub fn eval_channel(&self, seg: usize, t: f64, ch: usize, order: usize) -> f64 {
        let b = basis(t, order);
        let base = 6 * seg * self.dim + ch;
        (0..6).map(|i| self.coeffs[base + i * self.dim] * b[i]).sum()
    }

    /// All channels of segment `seg` at local time `t`.
    pub fn eval_segment(&self, seg: usize, t: f64, order: usize, out: &mut [f64]) {
        let b = basis(t, order);
        out.iter_mut().for_each(|v| *v = 0.0);
        for (i, bi) in b.iter().enumerate() {
            if *bi == 0.0 {
                continue;
            }
            let row = &self.coeffs[(6 * seg + i) * self.dim..(6 * seg + i + 1) * self.dim];
            for (o, c) in out.iter_mut().zip(row) {
                *o += c * bi;
            }
        }
    }

    /// Segment index and local time for global time `t`, with a clamp flag.
    pub fn locate(&self, t: f64) -> (usize, f64, bool) {
        let clamped = t < 0.0 || t > self.total_duration();
        let mut t = t.max(0.0);
        let last = self.segments() - 1;
        for (j, &d) in self.durations.iter().enumerate() {
            if t <= d || j == last {
                return (j, t.min(d), clamped);
            }
            t -= d;
        }
        unreachable!()
    }

    /// Value (`order = 0`) or derivative of every channel at global time `t`.
    /// Out-of-range times are clamped; the flag reports it.
    pub fn eval(&self, t: f64, order: usize) -> (Vec<f64>, bool) {
        let (j, tl, clamped) = self.locate(t);
        let mut out = vec![0.0; self.dim];
        self.eval_segment(j, tl, order, &mut out);
        (out, clamped)
    }

    pub fn to_export(&self) -> TrajectoryExport {
        let m = self.segments();
        let chan = |ch: usize| (0..m).map(|j| self.channel_coeffs(j, ch)).collect::<Vec<_>>();
        TrajectoryExport {
            durations: self.durations.clone(),
            channels: ExportChannels { s: chan(S), theta: chan(YAW), q: (Q0..self.dim).map(chan).collect() },
            x0: self.x0,
            y0: self.y0,
        }
    }

    pub fn from_export(e: &TrajectoryExport) -> Result<Self> {
        let m = e.durations.len();
        if m == 0 {
            return Err(Error::InvalidInput("trajectory has no segments".into()));
        }
        if e.durations.iter().any(|&t| !(t > 0.0)) {
            return Err(Error::InvalidInput("trajectory durations must be positive".into()));
        }
        let all: Vec<&Vec<[f64; 6]>> =
            [&e.channels.s, &e.channels.theta].into_iter().chain(e.channels.q.iter()).collect();
        if all.iter().any(|c| c.len() != m) {
            return Err(Error::InvalidInput("every channel needs one coefficient row per segment".into()));
        }
        let dim = all.len();
        let mut t = Trajectory::zeros(dim, e.durations.clone(), e.x0, e.y0);
        for (ch, rows) in all.iter().enumerate() {
            for (j, c) in rows.iter().enumerate() {
                for (i, v) in c.iter().enumerate() {
                    *t.coeff_mut(j, i, ch) = *v;
                }
            }
        }
        Ok(t)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExportChannels {
    pub s: Vec<[f64; 6]>,
    pub theta: Vec<[f64; 6]>,
    pub q: Vec<Vec<[f64; 6]>>,
}

/// JSON layout of a trajectory file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryExport {
    #[serde(rename = "T")]
    pub durations: Vec<f64>,
    pub channels: ExportChannels,
    pub x0: f64,
    pub y0: f64,
}

/// Start and end conditions per channel: `[value, rate, acceleration]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Boundary {
    pub head: Vec<[f64; 3]>,
    pub tail: Vec<[f64; 3]>,
}

/// Gradients with respect to the inputs of [`Minco::solve`].
#[derive(Debug, Clone, PartialEq)]
pub struct MincoGradients {
    /// Row-major `(junction, channel)`.
    pub waypoints: Vec<f64>,
    pub head: Vec<[f64; 3]>,
    pub tail: Vec<[f64; 3]>,
    pub durations: Vec<f64>,
}

/// Minimum-jerk piecewise quintic solved from waypoints, boundary conditions
/// and durations. The factorization is kept for the adjoint solve.
#[derive(Debug, Clone)]
pub struct Minco {
    traj: Trajectory,
    lu: BandLu,
}

const KL: usize = 8;
const KU: usize = 2;

fn factorial(k: usize) -> f64 {
    (1..=k).product::<usize>() as f64
}

impl Minco {
    /// Builds and solves the `6M x 6M` system, one right-hand side per channel.
    ///
    /// Rows: three head rows, then six rows per junction (waypoint followed by
    /// continuity of derivatives 0–4), then three tail rows.
    pub fn solve(boundary: &Boundary, waypoints: &[f64], durations: &[f64], x0: f64, y0: f64) -> Result<Self> {
        let m = durations.len();
        let dim = boundary.head.len();
        if m == 0 || boundary.tail.len() != dim {
            return Err(Error::InvalidInput("boundary/duration shape mismatch".into()));
        }
        if waypoints.len() != (m - 1) * dim {
            return Err(Error::InvalidInput(format!(
                "expected {} waypoint entries, got {}",
                (m - 1) * dim,
                waypoints.len()
            )));
        }
        if let Some(t) = durations.iter().find(|&&t| !(t > 0.0) || !t.is_finite()) {
            return Err(Error::Singular(format!("segment duration {t} is not positive")));
        }
        let n = 6 * m;
        let mut a = BandMatrix::zeros(n, KL, KU);
        let mut b = vec![0.0; n * dim];
        for k in 0..3 {
            a.set(k, k, factorial(k));
            for ch in 0..dim {
                b[k * dim + ch] = boundary.head[ch][k];
            }
        }
        for j in 0..m - 1 {
            let r0 = 3 + 6 * j;
            let t = durations[j];
            let b0 = basis(t, 0);
            for i in 0..6 {
                a.set(r0, 6 * j + i, b0[i]);
            }
            for ch in 0..dim {
                b[r0 * dim + ch] = waypoints[j * dim + ch];
            }
            for k in 0..5 {
                let row = r0 + 1 + k;
                let bk = basis(t, k);
                for i in 0..6 {
                    a.set(row, 6 * j + i, bk[i]);
                }
                a.set(row, 6 * (j + 1) + k, -factorial(k));
            }
        }
        let t = durations[m - 1];
        for k in 0..3 {
            let row = n - 3 + k;
            let bk = basis(t, k);
            for i in 0..6 {
                a.set(row, 6 * (m - 1) + i, bk[i]);
            }
            for ch in 0..dim {
                b[row * dim + ch] = boundary.tail[ch][k];
            }
        }
        let lu = a.factorize()?;
        lu.solve(&mut b, dim);
        let traj = Trajectory { dim, durations: durations.to_vec(), coeffs: b, x0, y0 };
        Ok(Self { traj, lu })
    }

    pub fn trajectory(&self) -> &Trajectory {
        &self.traj
    }

    pub fn into_trajectory(self) -> Trajectory {
        self.traj
    }

    /// Adjoint pass: maps `∂J/∂c` and the explicit `∂J/∂T` onto waypoints,
    /// boundary values and total duration gradients.
    pub fn propagate_gradients(&self, grad_c: &[f64], grad_t_direct: &[f64]) -> MincoGradients {
        let dim = self.traj.dim;
        let m = self.traj.segments();
        let n = 6 * m;
        assert_eq!(grad_c.len(), n * dim);
        assert_eq!(grad_t_direct.len(), m);
        let mut g = grad_c.to_vec();
        self.lu.solve_transposed(&mut g, dim);

        let head = (0..dim).map(|ch| std::array::from_fn(|k| g[k * dim + ch])).collect();
        let tail = (0..dim).map(|ch| std::array::from_fn(|k| g[(n - 3 + k) * dim + ch])).collect();
        let mut waypoints = vec![0.0; (m - 1) * dim];
        let mut durations = grad_t_direct.to_vec();
        for j in 0..m {
            let t = self.traj.durations[j];
            // rows evaluating segment j at its end time, with their derivative order
            let rows: Vec<(usize, usize)> = if j + 1 < m {
                let r0 = 3 + 6 * j;
                std::iter::once((r0, 0)).chain((0..5).map(|k| (r0 + 1 + k, k))).collect()
            } else {
                (0..3).map(|k| (n - 3 + k, k)).collect()
            };
            if j + 1 < m {
                let r0 = 3 + 6 * j;
                waypoints[j * dim..(j + 1) * dim].copy_from_slice(&g[r0 * dim..(r0 + 1) * dim]);
            }
            let mut acc = 0.0;
            for (row, order) in rows {
                for ch in 0..dim {
                    let gr = g[row * dim + ch];
                    if gr != 0.0 {
                        acc += gr * poly_eval(&self.traj.channel_coeffs(j, ch), t, order + 1);
                    }
                }
            }
            durations[j] -= acc;
        }
        MincoGradients { waypoints, head, tail, durations }
    }
}
