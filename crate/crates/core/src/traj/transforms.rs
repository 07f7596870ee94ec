//! Diffeomorphisms between bounded physical quantities and unconstrained
//! optimizer variables.
//!
//! Durations use the C¹ map `T(τ) = ((τ+1)² + 1) / 2` for `τ > 0` and
//! `T(τ) = 2 / ((1-τ)² + 1)` otherwise. Joint angles go through the same map
//! after the ratio `(q_max + q) / (q_max - q)`.

use crate::{Error, Result};

/// Unconstrained `τ` to positive duration, with `dT/dτ`.
#[inline]
pub fn time_transform(tau: f64) -> (f64, f64) {
    if tau > 0.0 {
        let a = tau + 1.0;
        ((a * a + 1.0) / 2.0, a)
    } else {
        let a = 1.0 - tau;
        let den = a * a + 1.0;
        (2.0 / den, 4.0 * a / (den * den))
    }
}

/// Positive duration to `τ`.
#[inline]
pub fn time_transform_inv(t: f64) -> f64 {
    if t > 1.0 {
        (2.0 * t - 1.0).sqrt() - 1.0
    } else {
        1.0 - (2.0 / t - 1.0).sqrt()
    }
}

/// Joint angle to the unconstrained variable. `|q| < q_max` is required.
pub fn joint_squash(q: f64, q_max: f64) -> Result<f64> {
    if !(q.abs() < q_max) {
        return Err(Error::Domain { value: q, limit: q_max });
    }
    Ok(time_transform_inv((q_max + q) / (q_max - q)))
}

/// Unconstrained variable to a joint angle strictly inside `(-q_max, q_max)`,
/// with `dq/d𝔮`.
#[inline]
pub fn joint_unsquash(v: f64, q_max: f64) -> (f64, f64) {
    let (r, dr) = time_transform(v);
    let q = q_max * (r - 1.0) / (r + 1.0);
    let dq = q_max * 2.0 / ((r + 1.0) * (r + 1.0)) * dr;
    (q, dq)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixed_points() {
        assert_eq!(time_transform_inv(1.0), 0.0);
        assert_eq!(time_transform(0.0).0, 1.0);
        assert_eq!(time_transform_inv(2.5), 1.0);
        assert_eq!(time_transform(1.0).0, 2.5);
        assert_eq!(joint_squash(0.0, 2.0).unwrap(), 0.0);
    }

    #[test]
    fn round_trips() {
        for t in [0.01, 0.5, 1.0, 3.0, 100.0] {
            let back = time_transform(time_transform_inv(t)).0;
            assert!((back - t).abs() < 1e-12, "{t} -> {back}");
        }
        for qm in [0.5, 2.0, 3.1] {
            for q in [-0.999 * qm, 0.999 * qm, 0.3 * qm, 0.0] {
                let back = joint_unsquash(joint_squash(q, qm).unwrap(), qm).0;
                assert!((back - q).abs() < 1e-12, "{q} -> {back}");
            }
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        for tau in [-3.0, -0.7, -1e-3, 1e-3, 0.4, 2.0] {
            let h = 1e-6;
            let fd = (time_transform(tau + h).0 - time_transform(tau - h).0) / (2.0 * h);
            let d = time_transform(tau).1;
            assert!((fd - d).abs() / d.abs().max(1e-3) < 1e-6);
            let fd = (joint_unsquash(tau + h, 1.7).0 - joint_unsquash(tau - h, 1.7).0) / (2.0 * h);
            let d = joint_unsquash(tau, 1.7).1;
            assert!((fd - d).abs() / d.abs().max(1e-3) < 1e-6);
        }
        // C¹ at the junction
        assert_eq!(time_transform(0.0).1, 1.0);
        assert!((time_transform(1e-12).1 - 1.0).abs() < 1e-9);
    }

    #[test]
    fn squash_domain_and_monotonicity() {
        assert!(joint_squash(2.0, 2.0).is_err());
        assert!(joint_squash(-2.5, 2.0).is_err());
        let a = joint_unsquash(5.0, 1.0).0;
        let b = joint_unsquash(10.0, 1.0).0;
        assert!(b > a && b < 1.0);
        assert!(joint_unsquash(-1e6, 1.0).0 > -1.0);
        assert!(joint_unsquash(1e6, 1.0).0 < 1.0);
    }
}
