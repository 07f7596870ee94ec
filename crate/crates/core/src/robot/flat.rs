//! Base position from the flat outputs: `x(t) = x0 + ∫ ṡ cos θ`,
//! `y(t) = y0 + ∫ ṡ sin θ`, integrated with composite Simpson rules whose
//! derivatives with respect to coefficients and durations are exact for the
//! discretized integral.

use crate::traj::{basis, Trajectory, S, YAW};

/// Integrand values and their time derivatives at local time `t` of `seg`.
#[derive(Debug, Clone, Copy)]
struct Integrand {
    fx: f64,
    fy: f64,
    dfx: f64,
    dfy: f64,
}

#[inline]
fn integrand(tr: &Trajectory, seg: usize, t: f64) -> Integrand {
    let v = tr.eval_channel(seg, t, S, 1);
    let a = tr.eval_channel(seg, t, S, 2);
    let th = tr.eval_channel(seg, t, YAW, 0);
    let w = tr.eval_channel(seg, t, YAW, 1);
    let (s, c) = th.sin_cos();
    Integrand { fx: v * c, fy: v * s, dfx: a * c - v * w * s, dfy: a * s + v * w * c }
}

/// Adds `∂(wx·fx + wy·fy)/∂c` at local time `t` of `seg` into `grad_c`.
#[inline]
fn integrand_coeff_grad(tr: &Trajectory, seg: usize, t: f64, wx: f64, wy: f64, grad_c: &mut [f64]) {
    let v = tr.eval_channel(seg, t, S, 1);
    let th = tr.eval_channel(seg, t, YAW, 0);
    let (s, c) = th.sin_cos();
    let b0 = basis(t, 0);
    let b1 = basis(t, 1);
    let gs = wx * c + wy * s;
    let gth = v * (-wx * s + wy * c);
    let dim = tr.dim;
    for i in 0..6 {
        let row = (6 * seg + i) * dim;
        grad_c[row + S] += b1[i] * gs;
        grad_c[row + YAW] += b0[i] * gth;
    }
}

/// Position and exact gradients of the quadrature with respect to the
/// trajectory data.
#[derive(Debug, Clone, PartialEq)]
pub struct FlatPosition {
    pub x: f64,
    pub y: f64,
    /// `∂x/∂c` in the trajectory's coefficient layout.
    pub dx_dc: Vec<f64>,
    pub dy_dc: Vec<f64>,
    pub dx_dt: Vec<f64>,
    pub dy_dt: Vec<f64>,
}

/// Simpson integral of segment `seg` over `[0, len]` with `k` sub-intervals,
/// returning the integral and accumulating gradients scaled by `(wx, wy)`.
/// Returns `(Ix, Iy, dIx/dlen, dIy/dlen)`.
fn simpson_segment(
    tr: &Trajectory,
    seg: usize,
    len: f64,
    k: usize,
    grads: Option<(&mut [f64], &mut [f64])>,
) -> (f64, f64, f64, f64) {
    let nodes = 2 * k;
    let mut ix = 0.0;
    let mut iy = 0.0;
    let mut dlx = 0.0;
    let mut dly = 0.0;
    let mut grads = grads;
    for m in 0..=nodes {
        let omega = if m == 0 || m == nodes {
            1.0
        } else if m % 2 == 1 {
            4.0
        } else {
            2.0
        };
        let alpha = m as f64 / nodes as f64;
        let t = alpha * len;
        let f = integrand(tr, seg, t);
        let w = omega * len / (6.0 * k as f64);
        ix += w * f.fx;
        iy += w * f.fy;
        dlx += omega / (6.0 * k as f64) * (f.fx + len * alpha * f.dfx);
        dly += omega / (6.0 * k as f64) * (f.fy + len * alpha * f.dfy);
        if let Some((gx, gy)) = grads.as_mut() {
            integrand_coeff_grad(tr, seg, t, w, 0.0, gx);
            integrand_coeff_grad(tr, seg, t, 0.0, w, gy);
        }
    }
    (ix, iy, dlx, dly)
}

/// `(x(t), y(t))` using `k` Simpson sub-intervals per full segment and `k`
/// over the partial span of the segment containing `t`.
pub fn flat_position(tr: &Trajectory, t: f64, k: usize) -> FlatPosition {
    let m = tr.segments();
    let n = tr.coeffs.len();
    let mut out = FlatPosition {
        x: tr.x0,
        y: tr.y0,
        dx_dc: vec![0.0; n],
        dy_dc: vec![0.0; n],
        dx_dt: vec![0.0; m],
        dy_dt: vec![0.0; m],
    };
    let (seg, mut local, _) = tr.locate(t);
    // summing durations can leave the horizon end a few ulps short of it
    let at_end = local >= tr.durations[seg] * (1.0 - 1e-12);
    if at_end {
        local = tr.durations[seg];
    }
    for j in 0..seg {
        let (ix, iy, dlx, dly) =
            simpson_segment(tr, j, tr.durations[j], k, Some((&mut out.dx_dc, &mut out.dy_dc)));
        out.x += ix;
        out.y += iy;
        out.dx_dt[j] += dlx;
        out.dy_dt[j] += dly;
    }
    if local > 0.0 {
        let (ix, iy, dlx, dly) = simpson_segment(tr, seg, local, k, Some((&mut out.dx_dc, &mut out.dy_dc)));
        out.x += ix;
        out.y += iy;
        if !at_end {
            // local = t - Σ_{i<seg} T_i
            for j in 0..seg {
                out.dx_dt[j] -= dlx;
                out.dy_dt[j] -= dly;
            }
        } else {
            // t sits on the segment end and moves with it
            out.dx_dt[seg] += dlx;
            out.dy_dt[seg] += dly;
        }
    }
    out
}

/// Base positions at the constraint samples `t = l·T_j/K`, `l = 0..K`, of every
/// segment, followed by the final position. Each gap between consecutive
/// samples is one Simpson interval, so entry `M·K` is the full integral.
pub fn sample_positions(tr: &Trajectory, k: usize) -> Vec<[f64; 2]> {
    let m = tr.segments();
    let mut out = Vec::with_capacity(m * k + 1);
    let mut p = [tr.x0, tr.y0];
    for j in 0..m {
        let h = tr.durations[j] / k as f64;
        let mut fa = integrand(tr, j, 0.0);
        for l in 0..k {
            out.push(p);
            let fm = integrand(tr, j, (l as f64 + 0.5) * h);
            let fb = integrand(tr, j, (l + 1) as f64 * h);
            p[0] += h / 6.0 * (fa.fx + 4.0 * fm.fx + fb.fx);
            p[1] += h / 6.0 * (fa.fy + 4.0 * fm.fy + fb.fy);
            fa = fb;
        }
    }
    out.push(p);
    out
}

/// Reverse pass of [`sample_positions`]: given `∂J/∂p` for every returned
/// position, accumulates `∂J/∂c` and `∂J/∂T`.
pub fn backprop_positions(tr: &Trajectory, k: usize, grad_pos: &[[f64; 2]], grad_c: &mut [f64], grad_t: &mut [f64]) {
    let m = tr.segments();
    assert_eq!(grad_pos.len(), m * k + 1);
    let mut acc = [0.0, 0.0];
    for idx in (0..m * k).rev() {
        acc[0] += grad_pos[idx + 1][0];
        acc[1] += grad_pos[idx + 1][1];
        if acc[0] == 0.0 && acc[1] == 0.0 {
            continue;
        }
        let j = idx / k;
        let l = idx % k;
        let tj = tr.durations[j];
        let h = tj / k as f64;
        let kf = k as f64;
        let nodes = [(l as f64, 1.0), (l as f64 + 0.5, 4.0), ((l + 1) as f64, 1.0)];
        let mut dt = 0.0;
        for (pos, omega) in nodes {
            let t = pos * h;
            let f = integrand(tr, j, t);
            // I = h/6 Σ ω f(pos·T/K)
            dt += omega / (6.0 * kf) * (acc[0] * f.fx + acc[1] * f.fy)
                + h / 6.0 * omega * pos / kf * (acc[0] * f.dfx + acc[1] * f.dfy);
            integrand_coeff_grad(tr, j, t, acc[0] * h / 6.0 * omega, acc[1] * h / 6.0 * omega, grad_c);
        }
        grad_t[j] += dt;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::traj::{Boundary, Minco};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Random trajectory with speeds and yaw rates of order one.
    fn random_traj(rng: &mut ChaCha8Rng) -> Trajectory {
        let m = rng.gen_range(1..=5);
        let t: Vec<f64> = (0..m).map(|_| rng.gen_range(0.8..2.5)).collect();
        let mut s = 0.0;
        let mut th = rng.gen_range(-3.0..3.0);
        let head = vec![[0.0, rng.gen_range(0.0..0.8), 0.0], [th, rng.gen_range(-0.5..0.5), 0.0], [0.0; 3]];
        let mut wp = Vec::new();
        for tj in &t[..m - 1] {
            s += tj * rng.gen_range(0.0..0.9);
            th += tj * rng.gen_range(-0.8..0.8);
            wp.extend([s, th, rng.gen_range(-1.0..1.0)]);
        }
        s += t[m - 1] * rng.gen_range(0.0..0.9);
        th += t[m - 1] * rng.gen_range(-0.8..0.8);
        let tail = vec![[s, 0.0, 0.0], [th, 0.0, 0.0], [0.0; 3]];
        let bc = Boundary { head, tail };
        Minco::solve(&bc, &wp, &t, rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)).unwrap().into_trajectory()
    }

    #[test]
    fn straight_line_is_exact() {
        let mut tr = Trajectory::zeros(3, vec![2.0, 1.5], 1.0, -2.0);
        *tr.coeff_mut(0, 1, S) = 0.7;
        *tr.coeff_mut(1, 0, S) = 1.4;
        *tr.coeff_mut(1, 1, S) = 0.7;
        for t in [0.0, 0.3, 2.0, 2.9, 3.5] {
            let p = flat_position(&tr, t, 3);
            assert!((p.x - (1.0 + 0.7 * t)).abs() < 1e-13);
            assert!((p.y + 2.0).abs() < 1e-13);
        }
    }

    #[test]
    fn circular_arc_matches_closed_form() {
        let (v, w, dur) = (0.8, 0.6, 5.0);
        let mut tr = Trajectory::zeros(3, vec![dur], 0.5, 0.25);
        *tr.coeff_mut(0, 1, S) = v;
        *tr.coeff_mut(0, 1, YAW) = w;
        let k = (16.0 * dur) as usize;
        for t in [1.0, 2.5, 5.0] {
            let p = flat_position(&tr, t, k);
            let ex = 0.5 + v / w * (w * t).sin();
            let ey = 0.25 + v / w * (1.0 - (w * t).cos());
            assert!((p.x - ex).abs() < 1e-6 && (p.y - ey).abs() < 1e-6);
        }
    }

    #[test]
    fn additive_over_segments() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..10 {
            let tr = random_traj(&mut rng);
            let k = 8;
            let t1 = tr.durations[0];
            let first = flat_position(&tr, t1, k);
            let total = tr.total_duration();
            let whole = flat_position(&tr, total, k);
            // integrate the remaining full segments separately
            let mut x = first.x;
            let mut y = first.y;
            for j in 1..tr.segments() {
                let (ix, iy, _, _) = simpson_segment(&tr, j, tr.durations[j], k, None);
                x += ix;
                y += iy;
            }
            assert!((x - whole.x).abs() < 1e-12 && (y - whole.y).abs() < 1e-12);
        }
    }

    /// Composite Simpson at a much higher node density.
    fn fine_position(tr: &Trajectory, t: f64, per_segment: usize) -> [f64; 2] {
        let (seg, local, _) = tr.locate(t);
        let mut p = [tr.x0, tr.y0];
        for j in 0..=seg {
            let len = if j < seg { tr.durations[j] } else { local };
            let (ix, iy, _, _) = simpson_segment(tr, j, len, per_segment, None);
            p[0] += ix;
            p[1] += iy;
        }
        p
    }

    #[test]
    fn simpson_agrees_with_dense_quadrature() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..20 {
            let tr = random_traj(&mut rng);
            let t = rng.gen_range(0.0..tr.total_duration());
            let p = flat_position(&tr, t, 16);
            let f = fine_position(&tr, t, 1600);
            let err = ((p.x - f[0]).powi(2) + (p.y - f[1]).powi(2)).sqrt();
            let scale = f[0].abs().max(f[1].abs()).max(1.0);
            assert!(err / scale < 1e-5, "err {err}");
        }
    }

    #[test]
    fn flat_gradients_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..6 {
            let tr = random_traj(&mut rng);
            let k = 6;
            for t in [0.37 * tr.total_duration(), tr.total_duration()] {
                let p = flat_position(&tr, t, k);
                let h = 1e-6;
                for i in 0..tr.coeffs.len() {
                    let mut a = tr.clone();
                    let mut b = tr.clone();
                    a.coeffs[i] += h;
                    b.coeffs[i] -= h;
                    let fx = (flat_position(&a, t, k).x - flat_position(&b, t, k).x) / (2.0 * h);
                    let fy = (flat_position(&a, t, k).y - flat_position(&b, t, k).y) / (2.0 * h);
                    assert!((fx - p.dx_dc[i]).abs() / fx.abs().max(1.0) < 1e-5);
                    assert!((fy - p.dy_dc[i]).abs() / fy.abs().max(1.0) < 1e-5);
                }
                for j in 0..tr.segments() {
                    let mut a = tr.clone();
                    let mut b = tr.clone();
                    a.durations[j] += h;
                    b.durations[j] -= h;
                    // keep t at the same relative place when it is the horizon end
                    let (ta, tb) = if t == tr.total_duration() { (t + h, t - h) } else { (t, t) };
                    let fx = (flat_position(&a, ta, k).x - flat_position(&b, tb, k).x) / (2.0 * h);
                    let fy = (flat_position(&a, ta, k).y - flat_position(&b, tb, k).y) / (2.0 * h);
                    assert!((fx - p.dx_dt[j]).abs() / fx.abs().max(1.0) < 1e-5, "dx/dT{j}: {fx} vs {}", p.dx_dt[j]);
                    assert!((fy - p.dy_dt[j]).abs() / fy.abs().max(1.0) < 1e-5);
                }
            }
        }
    }

    #[test]
    fn sampled_positions_backprop() {
        let mut rng = ChaCha8Rng::seed_from_u64(44);
        for _ in 0..5 {
            let tr = random_traj(&mut rng);
            let k = 5;
            let n = tr.segments() * k + 1;
            let w: Vec<[f64; 2]> = (0..n).map(|_| [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)]).collect();
            let f = |tr: &Trajectory| -> f64 {
                sample_positions(tr, k).iter().zip(&w).map(|(p, w)| p[0] * w[0] + p[1] * w[1]).sum()
            };
            let mut gc = vec![0.0; tr.coeffs.len()];
            let mut gt = vec![0.0; tr.segments()];
            backprop_positions(&tr, k, &w, &mut gc, &mut gt);
            let h = 1e-6;
            for i in 0..tr.coeffs.len() {
                let mut a = tr.clone();
                let mut b = tr.clone();
                a.coeffs[i] += h;
                b.coeffs[i] -= h;
                let fd = (f(&a) - f(&b)) / (2.0 * h);
                assert!((fd - gc[i]).abs() / fd.abs().max(1.0) < 1e-5);
            }
            for j in 0..tr.segments() {
                let mut a = tr.clone();
                let mut b = tr.clone();
                a.durations[j] += h;
                b.durations[j] -= h;
                let fd = (f(&a) - f(&b)) / (2.0 * h);
                assert!((fd - gt[j]).abs() / fd.abs().max(1.0) < 1e-5, "{fd} vs {}", gt[j]);
            }
            // final sample equals the full-horizon flat position
            let end = *sample_positions(&tr, k).last().unwrap();
            let p = flat_position(&tr, tr.total_duration(), k);
            assert!((end[0] - p.x).abs() < 1e-12 && (end[1] - p.y).abs() < 1e-12);
        }
    }
}
