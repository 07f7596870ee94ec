//! Quintic natural basis `[1, t, ..., t^5]` and its derivatives.

/// `d^order/dt^order` of each basis monomial at `t`.
#[inline]
pub fn basis(t: f64, order: usize) -> [f64; 6] {
    let mut out = [0.0; 6];
    let mut pw = [1.0; 6];
    for i in 1..6 {
        pw[i] = pw[i - 1] * t;
    }
    for i in order..6 {
        let mut f = 1.0;
        for k in 0..order {
            f *= (i - k) as f64;
        }
        out[i] = f * pw[i - order];
    }
    out
}

/// Value of `Σ c_i d^order/dt^order t^i`.
#[inline]
pub fn eval(c: &[f64; 6], t: f64, order: usize) -> f64 {
    let b = basis(t, order);
    (0..6).map(|i| c[i] * b[i]).sum()
}
