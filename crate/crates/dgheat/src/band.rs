//! Banded matrices with an in-place LU factorization.
//!
//! Every linear system the stepper produces (mass solves, backward-Euler
//! style blocks, the dG(q) space-time blocks) is banded once interior
//! degrees of freedom are numbered along the grid. The blocks have positive
//! definite symmetric part, so LU without pivoting is well defined; the
//! stepper checks residuals after every solve.

use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone)]
pub struct BandMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    /// Row-major: entry `(i, j)` lives at `i * (kl + ku + 1) + (j + kl - i)`.
    data: Vec<f64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        BandMatrix {
            n,
            kl,
            ku,
            data: vec![0.0; n * (kl + ku + 1)],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn bandwidths(&self) -> (usize, usize) {
        (self.kl, self.ku)
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> Option<usize> {
        let lo = i.saturating_sub(self.kl);
        let hi = (i + self.ku).min(self.n - 1);
        if j < lo || j > hi {
            None
        } else {
            Some(i * (self.kl + self.ku + 1) + (j + self.kl - i))
        }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.idx(i, j).map_or(0.0, |k| self.data[k])
    }

    pub fn add_to(&mut self, i: usize, j: usize, v: f64) {
        let k = self
            .idx(i, j)
            .unwrap_or_else(|| panic!("entry ({i}, {j}) outside band (kl={}, ku={})", self.kl, self.ku));
        self.data[k] += v;
    }

    pub fn matvec(&self, x: &DVector<f64>) -> DVector<f64> {
        assert_eq!(x.len(), self.n);
        let mut y = DVector::zeros(self.n);
        for i in 0..self.n {
            let lo = i.saturating_sub(self.kl);
            let hi = (i + self.ku).min(self.n - 1);
            let mut acc = 0.0;
            for j in lo..=hi {
                acc += self.data[i * (self.kl + self.ku + 1) + (j + self.kl - i)] * x[j];
            }
            y[i] = acc;
        }
        y
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            let lo = i.saturating_sub(self.kl);
            let hi = (i + self.ku).min(self.n - 1);
            for j in lo..=hi {
                m[(i, j)] = self.get(i, j);
            }
        }
        m
    }

    /// Nonzero entries in coordinate form `(row, col, value)`.
    pub fn triplets(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::new();
        for i in 0..self.n {
            let lo = i.saturating_sub(self.kl);
            let hi = (i + self.ku).min(self.n - 1);
            for j in lo..=hi {
                let v = self.get(i, j);
                if v != 0.0 {
                    out.push((i, j, v));
                }
            }
        }
        out
    }

    /// Row sums (used as lumped quadrature weights when `self` is a mass matrix).
    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.n)
            .map(|i| {
                let lo = i.saturating_sub(self.kl);
                let hi = (i + self.ku).min(self.n - 1);
                (lo..=hi).map(|j| self.get(i, j)).sum()
            })
            .collect()
    }

    pub fn factorize(&self) -> Result<BandLu> {
        let mut f = self.clone();
        let w = f.kl + f.ku + 1;
        let scale = f
            .data
            .iter()
            .fold(0.0f64, |acc, v| acc.max(v.abs()))
            .max(f64::MIN_POSITIVE);
        for k in 0..f.n {
            let pivot = f.data[k * w + f.kl];
            if pivot.abs() < 1e-14 * scale {
                return Err(Error::Solver(format!(
                    "near-zero pivot {pivot:.3e} at row {k} in banded LU"
                )));
            }
            let i_max = (k + f.kl).min(f.n - 1);
            for i in (k + 1)..=i_max {
                let lidx = i * w + (k + f.kl - i);
                let lik = f.data[lidx] / pivot;
                f.data[lidx] = lik;
                if lik != 0.0 {
                    let j_max = (k + f.ku).min(f.n - 1);
                    for j in (k + 1)..=j_max {
                        let ukj = f.data[k * w + (j + f.kl - k)];
                        f.data[i * w + (j + f.kl - i)] -= lik * ukj;
                    }
                }
            }
        }
        Ok(BandLu { factors: f })
    }
}

#[derive(Debug, Clone)]
pub struct BandLu {
    factors: BandMatrix,
}

impl BandLu {
    pub fn solve(&self, b: &DVector<f64>) -> DVector<f64> {
        let f = &self.factors;
        let w = f.kl + f.ku + 1;
        let n = f.n;
        assert_eq!(b.len(), n);
        let mut x = b.clone();
        for i in 0..n {
            let lo = i.saturating_sub(f.kl);
            let mut acc = x[i];
            for j in lo..i {
                acc -= f.data[i * w + (j + f.kl - i)] * x[j];
            }
            x[i] = acc;
        }
        for i in (0..n).rev() {
            let hi = (i + f.ku).min(n - 1);
            let mut acc = x[i];
            for j in (i + 1)..=hi {
                acc -= f.data[i * w + (j + f.kl - i)] * x[j];
            }
            x[i] = acc / f.data[i * w + f.kl];
        }
        x
    }
}
