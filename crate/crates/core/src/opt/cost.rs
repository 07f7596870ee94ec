use crate::traj::Trajectory;

/// Value of `∫ jᵀ W j dt + ρ‖T‖₁` with exact gradients.
#[derive(Debug, Clone, PartialEq)]
pub struct CostValue {
    pub value: f64,
    pub grad_c: Vec<f64>,
    pub grad_t: Vec<f64>,
}

/// Minimum-jerk energy of every channel plus the time regularizer.
///
/// With `j(t) = a + b t + e t²`, `a = 6c₃`, `b = 24c₄`, `e = 60c₅`, the
/// segment integral is
/// `a²T + abT² + (b² + 2ae)T³/3 + beT⁴/2 + e²T⁵/5`.
pub fn jerk_cost(tr: &Trajectory, weights: &[f64], rho: f64) -> CostValue {
    let dim = tr.dim;
    assert_eq!(weights.len(), dim, "one weight per channel");
    let m = tr.segments();
    let mut value = 0.0;
    let mut grad_c = vec![0.0; tr.coeffs.len()];
    let mut grad_t = vec![rho; m];
    for j in 0..m {
        let t = tr.durations[j];
        let (t2, t3, t4, t5) = (t * t, t * t * t, t * t * t * t, t * t * t * t * t);
        value += rho * t;
        for ch in 0..dim {
            let w = weights[ch];
            if w == 0.0 {
                continue;
            }
            let a = 6.0 * tr.coeff(j, 3, ch);
            let b = 24.0 * tr.coeff(j, 4, ch);
            let e = 60.0 * tr.coeff(j, 5, ch);
            value += w * (a * a * t + a * b * t2 + (b * b + 2.0 * a * e) * t3 / 3.0 + b * e * t4 / 2.0 + e * e * t5 / 5.0);
            let da = 2.0 * a * t + b * t2 + 2.0 * e * t3 / 3.0;
            let db = a * t2 + 2.0 * b * t3 / 3.0 + e * t4 / 2.0;
            let de = 2.0 * a * t3 / 3.0 + b * t4 / 2.0 + 2.0 * e * t5 / 5.0;
            grad_c[(6 * j + 3) * dim + ch] += w * 6.0 * da;
            grad_c[(6 * j + 4) * dim + ch] += w * 24.0 * db;
            grad_c[(6 * j + 5) * dim + ch] += w * 60.0 * de;
            let jt = a + b * t + e * t2;
            grad_t[j] += w * jt * jt;
        }
    }
    CostValue { value, grad_c, grad_t }
}
