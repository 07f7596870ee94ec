//! Powell–Hestenes–Rockafellar augmented Lagrangian loop around L-BFGS.

use serde::{Deserialize, Serialize};

use super::{lbfgs_minimize, AlmParams, LbfgsParams, LbfgsStatus};

/// Objective value split plus equality residuals at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    /// `f = cost + penalty`.
    pub value: f64,
    pub cost: f64,
    pub penalty: f64,
    pub residual: Vec<f64>,
}

/// Smooth objective with equality constraints `r(x) = 0`.
pub trait EqualityProblem {
    fn n_eq(&self) -> usize;

    /// Evaluates `f` and `r` at `x`. When `grad` is present it receives
    /// `∇f + Jᵣᵀ (λ + σ r)`.
    fn evaluate(&self, x: &[f64], lambda: &[f64], sigma: f64, grad: Option<&mut [f64]>) -> Evaluation;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlmStatus {
    Converged,
    MaxOuterIterations,
    /// The objective was not finite at the initial point.
    InvalidStart,
}

/// One outer iteration, emitted as a JSON line on the `wbp::alm` log target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlmIterate {
    pub outer: usize,
    pub inner_iterations: usize,
    pub inner_status: LbfgsStatus,
    pub objective: f64,
    pub cost: f64,
    pub penalty: f64,
    pub residual_inf: f64,
    pub sigma: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlmSolution {
    pub x: Vec<f64>,
    pub status: AlmStatus,
    pub lambda: Vec<f64>,
    pub sigma: f64,
    pub evaluation: Evaluation,
    pub residual_inf: f64,
    pub outer_iterations: usize,
    pub inner_iterations: usize,
    pub evaluations: usize,
    pub history: Vec<AlmIterate>,
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// Minimizes `f` subject to `r = 0` from `x0`.
pub fn alm_solve<P: EqualityProblem + ?Sized>(problem: &P, x0: &[f64], alm: &AlmParams, lbfgs: &LbfgsParams) -> AlmSolution {
    let ne = problem.n_eq();
    let mut lambda = if alm.lambda0.len() == ne { alm.lambda0.clone() } else { vec![0.0; ne] };
    let mut sigma = alm.sigma0;
    let mut x = x0.to_vec();
    let mut history = Vec::new();
    let mut inner_total = 0;
    let mut evaluations = 0;
    let mut eval = problem.evaluate(&x, &lambda, sigma, None);
    let mut prev = inf_norm(&eval.residual);
    if !eval.value.is_finite() {
        return AlmSolution {
            x,
            status: AlmStatus::InvalidStart,
            lambda,
            sigma,
            evaluation: eval,
            residual_inf: prev,
            outer_iterations: 0,
            inner_iterations: 0,
            evaluations: 1,
            history,
        };
    }
    let mut tol = alm.inner_tol_initial.max(alm.inner_tol_final);
    for outer in 0..alm.max_outer {
        let params = LbfgsParams { g_tol: tol, ..lbfgs.clone() };
        let res = lbfgs_minimize(
            |x, g| {
                let e = problem.evaluate(x, &lambda, sigma, Some(g));
                let lr: f64 = lambda.iter().zip(&e.residual).map(|(l, r)| l * r).sum();
                let rr: f64 = e.residual.iter().map(|r| r * r).sum();
                e.value + lr + 0.5 * sigma * rr
            },
            &x,
            &params,
        );
        inner_total += res.iterations;
        evaluations += res.evaluations;
        x = res.x;
        eval = problem.evaluate(&x, &lambda, sigma, None);
        let norm = inf_norm(&eval.residual);
        let it = AlmIterate {
            outer,
            inner_iterations: res.iterations,
            inner_status: res.status,
            objective: eval.value,
            cost: eval.cost,
            penalty: eval.penalty,
            residual_inf: norm,
            sigma,
        };
        if log::log_enabled!(target: "wbp::alm", log::Level::Debug) {
            if let Ok(line) = serde_json::to_string(&it) {
                log::debug!(target: "wbp::alm", "{line}");
            }
        }
        history.push(it);
        let inner_ok = res.status != LbfgsStatus::MaxIterations;
        if norm < alm.eps_eq && inner_ok {
            return AlmSolution {
                x,
                status: AlmStatus::Converged,
                lambda,
                sigma,
                evaluation: eval,
                residual_inf: norm,
                outer_iterations: outer + 1,
                inner_iterations: inner_total,
                evaluations,
                history,
            };
        }
        for (l, r) in lambda.iter_mut().zip(&eval.residual) {
            *l += sigma * r;
        }
        if norm > 0.5 * prev {
            sigma = (sigma * alm.gamma).min(alm.sigma_max);
        }
        prev = norm;
        tol = (tol * alm.inner_tol_decay).max(alm.inner_tol_final);
    }
    let residual_inf = inf_norm(&eval.residual);
    AlmSolution {
        x,
        status: AlmStatus::MaxOuterIterations,
        lambda,
        sigma,
        evaluation: eval,
        residual_inf,
        outer_iterations: alm.max_outer,
        inner_iterations: inner_total,
        evaluations,
        history,
    }
}
