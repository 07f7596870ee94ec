//! Limited-memory BFGS with a weak-Wolfe bisection line search.
//!
//! The weak Wolfe conditions only need the objective to be continuously
//! differentiable, which is all the cubic-hinge penalties guarantee at their
//! activation boundaries.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LbfgsParams {
    pub memory: usize,
    pub max_iterations: usize,
    /// Stop when `‖g‖∞ ≤ g_tol · max(1, ‖x‖∞)`.
    pub g_tol: f64,
    /// Stop when the objective decreases by less than `rel_tol · max(1, |f|)`
    /// over `past` iterations.
    pub rel_tol: f64,
    pub past: usize,
    /// Armijo constant.
    pub c1: f64,
    /// Curvature constant.
    pub c2: f64,
    pub max_line_search: usize,
    /// Largest step along the search direction, in units of `‖x‖∞ + 1`.
    pub max_step: f64,
}

impl Default for LbfgsParams {
    fn default() -> Self {
        Self {
            memory: 16,
            max_iterations: 80,
            g_tol: 1e-6,
            rel_tol: 1e-6,
            past: 3,
            c1: 1e-4,
            c2: 0.9,
            max_line_search: 60,
            max_step: 1e20,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LbfgsStatus {
    GradientTolerance,
    RelativeDecrease,
    MaxIterations,
    LineSearchFailure,
}

impl LbfgsStatus {
    pub fn converged(self) -> bool {
        matches!(self, Self::GradientTolerance | Self::RelativeDecrease)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LbfgsResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub status: LbfgsStatus,
    pub iterations: usize,
    pub evaluations: usize,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn inf_norm(a: &[f64]) -> f64 {
    a.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

/// Minimizes `f`, which writes the gradient into its second argument and
/// returns the value. On line-search failure the best iterate is returned.
pub fn lbfgs_minimize<F>(mut f: F, x0: &[f64], params: &LbfgsParams) -> LbfgsResult
where
    F: FnMut(&[f64], &mut [f64]) -> f64,
{
    let n = x0.len();
    let mut x = x0.to_vec();
    let mut g = vec![0.0; n];
    let mut fx = f(&x, &mut g);
    let mut evaluations = 1;
    let mut history: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::with_capacity(params.memory);
    let mut past_f: VecDeque<f64> = VecDeque::new();
    past_f.push_back(fx);

    let mut d = vec![0.0; n];
    let mut xn = vec![0.0; n];
    let mut gn = vec![0.0; n];
    let mut alpha_buf = vec![0.0; params.memory.max(1)];

    if !fx.is_finite() {
        return LbfgsResult { x, value: fx, status: LbfgsStatus::LineSearchFailure, iterations: 0, evaluations };
    }

    for iter in 0..params.max_iterations {
        if inf_norm(&g) <= params.g_tol * inf_norm(&x).max(1.0) {
            return LbfgsResult { x, value: fx, status: LbfgsStatus::GradientTolerance, iterations: iter, evaluations };
        }

        // two-loop recursion
        d.iter_mut().zip(&g).for_each(|(d, g)| *d = -g);
        for (i, (s, y, rho)) in history.iter().enumerate().rev() {
            let a = rho * dot(s, &d);
            alpha_buf[i] = a;
            d.iter_mut().zip(y).for_each(|(d, y)| *d -= a * y);
        }
        if let Some((s, y, _)) = history.back() {
            let gamma = dot(s, y) / dot(y, y);
            d.iter_mut().for_each(|v| *v *= gamma);
        }
        for (i, (s, y, rho)) in history.iter().enumerate() {
            let b = rho * dot(y, &d);
            let a = alpha_buf[i];
            d.iter_mut().zip(s).for_each(|(d, s)| *d += (a - b) * s);
        }
        let mut slope = dot(&g, &d);
        if !(slope < 0.0) {
            // not a descent direction: restart from steepest descent
            history.clear();
            d.iter_mut().zip(&g).for_each(|(d, g)| *d = -g);
            slope = dot(&g, &d);
        }

        let dnorm = inf_norm(&d);
        let mut step = if history.is_empty() { (1.0 / dnorm).min(1.0) } else { 1.0 };
        let cap = params.max_step * (inf_norm(&x) + 1.0) / dnorm.max(f64::MIN_POSITIVE);
        step = step.min(cap);

        // Lewis–Overton weak Wolfe bracketing
        let mut lo = 0.0;
        let mut hi = f64::INFINITY;
        let mut accepted = false;
        let mut fnew = fx;
        for _ in 0..params.max_line_search {
            xn.iter_mut().zip(&x).zip(&d).for_each(|((xn, x), d)| *xn = x + step * d);
            fnew = f(&xn, &mut gn);
            evaluations += 1;
            if !fnew.is_finite() || fnew > fx + params.c1 * step * slope {
                hi = step;
            } else if dot(&gn, &d) < params.c2 * slope {
                lo = step;
            } else {
                accepted = true;
                break;
            }
            step = if hi.is_finite() { 0.5 * (lo + hi) } else { 2.0 * lo };
            if hi.is_finite() && (hi - lo) <= 1e-16 * hi.max(1.0) {
                break;
            }
        }
        if !accepted {
            // keep a sufficient-decrease point if the curvature test never passed
            if lo > 0.0 {
                xn.iter_mut().zip(&x).zip(&d).for_each(|((xn, x), d)| *xn = x + lo * d);
                fnew = f(&xn, &mut gn);
                evaluations += 1;
                if !(fnew < fx) {
                    return LbfgsResult { x, value: fx, status: LbfgsStatus::LineSearchFailure, iterations: iter, evaluations };
                }
                step = lo;
            } else {
                return LbfgsResult { x, value: fx, status: LbfgsStatus::LineSearchFailure, iterations: iter, evaluations };
            }
        }

        let s: Vec<f64> = d.iter().map(|d| d * step).collect();
        let y: Vec<f64> = gn.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * dot(&y, &y).sqrt() * dot(&s, &s).sqrt() && sy > 0.0 {
            if history.len() == params.memory {
                history.pop_front();
            }
            history.push_back((s, y, 1.0 / sy));
        }
        std::mem::swap(&mut x, &mut xn);
        std::mem::swap(&mut g, &mut gn);
        fx = fnew;

        past_f.push_back(fx);
        if past_f.len() > params.past {
            let old = past_f.pop_front().unwrap();
            if (old - fx).abs() <= params.rel_tol * fx.abs().max(1.0) {
                return LbfgsResult { x, value: fx, status: LbfgsStatus::RelativeDecrease, iterations: iter + 1, evaluations };
            }
        }
    }
    LbfgsResult { x, value: fx, status: LbfgsStatus::MaxIterations, iterations: params.max_iterations, evaluations }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic() {
        let a = [1.0, -2.0, 3.5, 0.25];
        let r = lbfgs_minimize(
            |x, g| {
                let mut v = 0.0;
                for i in 0..4 {
                    g[i] = 2.0 * (x[i] - a[i]);
                    v += (x[i] - a[i]).powi(2);
                }
                v
            },
            &[0.0; 4],
            &LbfgsParams { g_tol: 1e-10, rel_tol: 1e-12, max_iterations: 400, ..Default::default() },
        );
        assert!(r.iterations <= 10, "{} iterations", r.iterations);
        for i in 0..4 {
            assert!((r.x[i] - a[i]).abs() < 1e-8);
        }
    }

    #[test]
    fn rosenbrock() {
        let r = lbfgs_minimize(
            |x, g| {
                let (a, b) = (x[0], x[1]);
                g[0] = -2.0 * (1.0 - a) - 400.0 * a * (b - a * a);
                g[1] = 200.0 * (b - a * a);
                (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2)
            },
            &[-1.2, 1.0],
            &LbfgsParams { g_tol: 1e-9, rel_tol: 0.0, max_iterations: 400, ..Default::default() },
        );
        assert!((r.x[0] - 1.0).abs() < 1e-5 && (r.x[1] - 1.0).abs() < 1e-5, "{:?} {:?}", r.x, r.status);
    }

    #[test]
    fn cubic_hinge_boundary_minimum() {
        // f(x) = (x - 2)² + 50·max(0, x - 1)³, minimizer where 2(x-2) + 150(x-1)² = 0
        let r = lbfgs_minimize(
            |x, g| {
                let h = (x[0] - 1.0).max(0.0);
                g[0] = 2.0 * (x[0] - 2.0) + 150.0 * h * h;
                (x[0] - 2.0).powi(2) + 50.0 * h.powi(3)
            },
            &[-3.0],
            &LbfgsParams { g_tol: 1e-9, rel_tol: 0.0, max_iterations: 400, ..Default::default() },
        );
        let expect = 1.0 + (-2.0 + (4.0f64 + 1200.0).sqrt()) / 300.0;
        assert_eq!(r.status, LbfgsStatus::GradientTolerance);
        assert!((r.x[0] - expect).abs() < 1e-8, "{} vs {expect}", r.x[0]);
    }

    #[test]
    fn non_finite_start_reports_failure() {
        let r = lbfgs_minimize(|_, _| f64::NAN, &[0.0], &LbfgsParams::default());
        assert_eq!(r.status, LbfgsStatus::LineSearchFailure);
    }
}
