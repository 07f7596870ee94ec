//! Banded LU factorization with partial pivoting.
//!
//! Storage is row-major over the band: entry `(i, j)` lives at
//! `data[i * w + (j + kl - i)]` with `w = 2 * kl + ku + 1`, leaving `kl`
//! extra super-diagonals for pivot fill-in.

use crate::{Error, Result};

#[derive(Debug, Clone)]
pub struct BandMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    data: Vec<f64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        Self { n, kl, ku, data: vec![0.0; n * (2 * kl + ku + 1)] }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    fn width(&self) -> usize {
        2 * self.kl + self.ku + 1
    }

    fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(j + self.kl >= i && j <= i + self.ku + self.kl, "({i},{j}) outside band");
        i * self.width() + (j + self.kl - i)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if j + self.kl < i || j > i + self.ku + self.kl {
            0.0
        } else {
            self.data[self.idx(i, j)]
        }
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        assert!(j + self.kl >= i && j <= i + self.ku, "({i},{j}) outside declared band");
        let k = self.idx(i, j);
        self.data[k] = v;
    }

    /// Factorizes in place, consuming the matrix.
    pub fn factorize(mut self) -> Result<BandLu> {
        let (n, kl) = (self.n, self.kl);
        let reach = self.kl + self.ku;
        let mut piv = vec![0usize; n];
        let mut lower = vec![0.0; n * kl.max(1)];
        let scale = self.data.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
        for k in 0..n {
            let last_row = (k + kl).min(n - 1);
            let mut p = k;
            let mut best = self.get(k, k).abs();
            for i in k + 1..=last_row {
                let v = self.get(i, k).abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best <= scale * 1e-14 {
                return Err(Error::Singular(format!("zero pivot at row {k}")));
            }
            piv[k] = p;
            let last_col = (k + reach).min(n - 1);
            if p != k {
                for j in k..=last_col {
                    let a = self.idx(k, j);
                    let b = self.idx(p, j);
                    self.data.swap(a, b);
                }
            }
            let pivot = self.get(k, k);
            for i in k + 1..=last_row {
                let ik = self.idx(i, k);
                let f = self.data[ik] / pivot;
                self.data[ik] = 0.0;
                lower[k * kl + (i - k - 1)] = f;
                if f != 0.0 {
                    for j in k + 1..=last_col {
                        let kj = self.data[self.idx(k, j)];
                        let ij = self.idx(i, j);
                        self.data[ij] -= f * kj;
                    }
                }
            }
        }
        Ok(BandLu { u: self, lower, piv })
    }
}

#[derive(Debug, Clone)]
pub struct BandLu {
    u: BandMatrix,
    lower: Vec<f64>,
    piv: Vec<usize>,
}

impl BandLu {
    pub fn dim(&self) -> usize {
        self.u.n
    }

    /// Solves `A X = B` in place; `b` is row-major `n x cols`.
    pub fn solve(&self, b: &mut [f64], cols: usize) {
        let (n, kl) = (self.u.n, self.u.kl);
        let reach = self.u.kl + self.u.ku;
        assert_eq!(b.len(), n * cols);
        for k in 0..n {
            let p = self.piv[k];
            if p != k {
                for c in 0..cols {
                    b.swap(k * cols + c, p * cols + c);
                }
            }
            for i in k + 1..=(k + kl).min(n - 1) {
                let f = self.lower[k * kl + (i - k - 1)];
                if f != 0.0 {
                    for c in 0..cols {
                        b[i * cols + c] -= f * b[k * cols + c];
                    }
                }
            }
        }
        for i in (0..n).rev() {
            for j in i + 1..=(i + reach).min(n - 1) {
                let u = self.u.get(i, j);
                if u != 0.0 {
                    for c in 0..cols {
                        b[i * cols + c] -= u * b[j * cols + c];
                    }
                }
            }
            let d = self.u.get(i, i);
            for c in 0..cols {
                b[i * cols + c] /= d;
            }
        }
    }

    /// Solves `Aᵀ X = B` in place.
    pub fn solve_transposed(&self, b: &mut [f64], cols: usize) {
        let (n, kl) = (self.u.n, self.u.kl);
        let reach = self.u.kl + self.u.ku;
        assert_eq!(b.len(), n * cols);
        // Uᵀ y = b
        for i in 0..n {
            let lo = i.saturating_sub(reach);
            for j in lo..i {
                let u = self.u.get(j, i);
                if u != 0.0 {
                    for c in 0..cols {
                        b[i * cols + c] -= u * b[j * cols + c];
                    }
                }
            }
            let d = self.u.get(i, i);
            for c in 0..cols {
                b[i * cols + c] /= d;
            }
        }
        // undo the elimination steps in reverse
        for k in (0..n).rev() {
            for i in k + 1..=(k + kl).min(n - 1) {
                let f = self.lower[k * kl + (i - k - 1)];
                if f != 0.0 {
                    for c in 0..cols {
                        b[k * cols + c] -= f * b[i * cols + c];
                    }
                }
            }
            let p = self.piv[k];
            if p != k {
                for c in 0..cols {
                    b.swap(k * cols + c, p * cols + c);
                }
            }
        }
    }
}
