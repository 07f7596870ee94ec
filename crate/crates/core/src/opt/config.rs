use serde::{Deserialize, Serialize};

use super::LbfgsParams;
use crate::{Error, Result};

/// Augmented Lagrangian schedule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AlmParams {
    /// Initial multipliers; empty means zeros.
    pub lambda0: Vec<f64>,
    pub sigma0: f64,
    pub gamma: f64,
    pub sigma_max: f64,
    /// Equality tolerance on `‖r‖∞`.
    pub eps_eq: f64,
    pub max_outer: usize,
    /// Inner gradient tolerance for the first outer iteration.
    pub inner_tol_initial: f64,
    /// Inner gradient tolerance is multiplied by this after each outer iteration.
    pub inner_tol_decay: f64,
    pub inner_tol_final: f64,
}

impl Default for AlmParams {
    fn default() -> Self {
        Self {
            lambda0: Vec::new(),
            sigma0: 1e2,
            gamma: 5.0,
            sigma_max: 1e9,
            eps_eq: 1e-4,
            max_outer: 25,
            inner_tol_initial: 1e-2,
            inner_tol_decay: 0.1,
            inner_tol_final: 1e-3,
        }
    }
}

/// Objective weights, constraint sampling and solver settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizerConfig {
    /// Jerk weight per channel `(s, θ, q₁…q_N)`; empty means all ones.
    pub weights: Vec<f64>,
    /// Time regularization `ρ`.
    pub rho: f64,
    /// Penalty weight `ρ_c`.
    pub rho_c: f64,
    /// Constraint samples per segment.
    pub k: usize,
    /// Dynamic limits are multiplied by this inside the optimizer.
    pub limit_scale: f64,
    /// Extra clearance demanded from the environment beyond the thresholds.
    pub collision_margin: f64,
    /// Clearance demanded between self-collision pairs.
    pub self_margin: f64,
    pub alm: AlmParams,
    pub lbfgs: LbfgsParams,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            weights: Vec::new(),
            rho: 1.0,
            rho_c: 1e6,
            k: 12,
            limit_scale: 0.95,
            collision_margin: 0.03,
            self_margin: 0.03,
            alm: AlmParams::default(),
            lbfgs: LbfgsParams::default(),
        }
    }
}

impl OptimizerConfig {
    pub fn from_json(s: &str) -> Result<Self> {
        let c: Self = serde_json::from_str(s)?;
        Ok(c)
    }

    /// Channel weights for `n_joints` joints.
    pub fn channel_weights(&self, n_joints: usize) -> Vec<f64> {
        if self.weights.is_empty() {
            vec![1.0; n_joints + 2]
        } else {
            self.weights.clone()
        }
    }

    pub fn validate(&self, n_joints: usize) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidInput(m.to_string()));
        if !self.weights.is_empty() && self.weights.len() != n_joints + 2 {
            return bad("optimizer.weights needs one entry per channel (s, theta, joints)");
        }
        if self.weights.iter().any(|w| !(*w >= 0.0)) {
            return bad("optimizer.weights must be non-negative");
        }
        if !(self.rho > 0.0) || !(self.rho_c > 0.0) {
            return bad("optimizer.rho and optimizer.rho_c must be positive");
        }
        if self.k < 4 {
            return bad("optimizer.k must be at least 4");
        }
        if !(self.limit_scale > 0.0 && self.limit_scale <= 1.0) {
            return bad("optimizer.limit_scale must lie in (0, 1]");
        }
        if !(self.collision_margin >= 0.0 && self.self_margin >= 0.0) {
            return bad("optimizer margins must be non-negative");
        }
        let a = &self.alm;
        if !(a.sigma0 > 0.0 && a.gamma >= 1.0 && a.eps_eq > 0.0) {
            return bad("optimizer.alm needs sigma0 > 0, gamma >= 1, eps_eq > 0");
        }
        if !a.lambda0.is_empty() && a.lambda0.len() != 9 {
            return bad("optimizer.alm.lambda0 must be empty or have 9 entries");
        }
        if self.lbfgs.memory == 0 {
            return bad("optimizer.lbfgs.memory must be positive");
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_json_keeps_defaults() {
        let c = OptimizerConfig::from_json(r#"{"rho": 3.0, "alm": {"gamma": 10.0}}"#).unwrap();
        assert_eq!(c.rho, 3.0);
        assert_eq!(c.alm.gamma, 10.0);
        assert_eq!(c.alm.sigma0, 1e2);
        assert_eq!(c.k, 12);
        c.validate(6).unwrap();
    }

    #[test]
    fn invariants_enforced() {
        let mut c = OptimizerConfig::default();
        c.k = 3;
        assert!(c.validate(6).is_err());
        let mut c = OptimizerConfig::default();
        c.weights = vec![1.0; 5];
        assert!(c.validate(6).is_err());
        let mut c = OptimizerConfig::default();
        c.rho = 0.0;
        assert!(c.validate(6).is_err());
    }
}
