//! Exact rational polynomial arithmetic.
//!
//! The one-step kernels of the time stepper are rational functions whose
//! coefficients come from inverting a small matrix of degree-one polynomials.
//! Doing that derivation over arbitrary-precision fractions keeps every
//! downstream oracle free of derivation round-off; conversion to `f64`
//! happens only at evaluation time.

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub type Q = BigRational;

pub fn q_int(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

pub fn q_ratio(num: i64, den: i64) -> Q {
    Q::new(BigInt::from(num), BigInt::from(den))
}

/// Polynomial over the rationals, constant coefficient first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QPoly {
    coeffs: Vec<Q>,
}

impl QPoly {
    pub fn new(coeffs: Vec<Q>) -> Self {
        let mut p = QPoly { coeffs };
        p.trim();
        p
    }

    pub fn zero() -> Self {
        QPoly { coeffs: vec![] }
    }

    pub fn constant(c: Q) -> Self {
        QPoly::new(vec![c])
    }

    pub fn one() -> Self {
        QPoly::constant(Q::one())
    }

    /// The monomial `x`.
    pub fn x() -> Self {
        QPoly::new(vec![Q::zero(), Q::one()])
    }

    fn trim(&mut self) {
        while self.coeffs.last().map_or(false, |c| c.is_zero()) {
            self.coeffs.pop();
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn coeff(&self, i: usize) -> Q {
        self.coeffs.get(i).cloned().unwrap_or_else(Q::zero)
    }

    pub fn coeffs(&self) -> &[Q] {
        &self.coeffs
    }

    pub fn add(&self, other: &QPoly) -> QPoly {
        let n = self.coeffs.len().max(other.coeffs.len());
        let coeffs = (0..n).map(|i| self.coeff(i) + other.coeff(i)).collect();
        QPoly::new(coeffs)
    }

    pub fn sub(&self, other: &QPoly) -> QPoly {
        let n = self.coeffs.len().max(other.coeffs.len());
        let coeffs = (0..n).map(|i| self.coeff(i) - other.coeff(i)).collect();
        QPoly::new(coeffs)
    }

    pub fn mul(&self, other: &QPoly) -> QPoly {
        if self.is_zero() || other.is_zero() {
            return QPoly::zero();
        }
        let mut coeffs = vec![Q::zero(); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                coeffs[i + j] += a * b;
            }
        }
        QPoly::new(coeffs)
    }

    pub fn scale(&self, c: &Q) -> QPoly {
        QPoly::new(self.coeffs.iter().map(|a| a * c).collect())
    }

    pub fn derivative(&self) -> QPoly {
        if self.coeffs.len() <= 1 {
            return QPoly::zero();
        }
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(i, a)| a * q_int(i as i64))
            .collect();
        QPoly::new(coeffs)
    }

    /// Definite integral over `[0, 1]`.
    pub fn integral_01(&self) -> Q {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(i, a)| a / q_int(i as i64 + 1))
            .sum()
    }

    pub fn eval_q(&self, x: &Q) -> Q {
        let mut acc = Q::zero();
        for c in self.coeffs.iter().rev() {
            acc = acc * x + c;
        }
        acc
    }

    pub fn eval_f64(&self, x: f64) -> f64 {
        let mut acc = 0.0;
        for c in self.coeffs.iter().rev() {
            acc = acc * x + c.to_f64().unwrap_or(f64::NAN);
        }
        acc
    }

    pub fn eval_complex(&self, z: Complex64) -> Complex64 {
        let mut acc = Complex64::ZERO;
        for c in self.coeffs.iter().rev() {
            acc = acc * z + c.to_f64().unwrap_or(f64::NAN);
        }
        acc
    }

    pub fn to_f64_coeffs(&self) -> Vec<f64> {
        self.coeffs
            .iter()
            .map(|c| c.to_f64().unwrap_or(f64::NAN))
            .collect()
    }

    /// Render as e.g. `1 + 2/3*z + 1/6*z^2`.
    pub fn pretty(&self, var: &str) -> String {
        if self.is_zero() {
            return "0".to_string();
        }
        let mut parts = Vec::new();
        for (i, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let mag = c.abs();
            let mag_str = if mag.is_integer() {
                mag.numer().to_string()
            } else {
                format!("{}/{}", mag.numer(), mag.denom())
            };
            let term = match i {
                0 => mag_str,
                1 if mag.is_one() => var.to_string(),
                1 => format!("{mag_str}*{var}"),
                _ if mag.is_one() => format!("{var}^{i}"),
                _ => format!("{mag_str}*{var}^{i}"),
            };
            if parts.is_empty() {
                parts.push(if c.is_negative() {
                    format!("-{term}")
                } else {
                    term
                });
            } else if c.is_negative() {
                parts.push(format!("- {term}"));
            } else {
                parts.push(format!("+ {term}"));
            }
        }
        parts.join(" ")
    }
}

/// Lagrange basis on `[0, 1]` with nodes `j/q`; for `q = 0` the single basis
/// function is the constant 1 (node pinned at `s = 1`).
pub fn lagrange_basis(q: usize) -> Vec<QPoly> {
    if q == 0 {
        return vec![QPoly::one()];
    }
    let nodes: Vec<Q> = (0..=q).map(|j| q_ratio(j as i64, q as i64)).collect();
    nodes
        .iter()
        .enumerate()
        .map(|(l, xl)| {
            let mut p = QPoly::one();
            for (j, xj) in nodes.iter().enumerate() {
                if j == l {
                    continue;
                }
                // (x - xj) / (xl - xj)
                let denom = xl - xj;
                let factor = QPoly::new(vec![-xj / &denom, Q::one() / &denom]);
                p = p.mul(&factor);
            }
            p
        })
        .collect()
}

/// Exact local-in-time tables for degree `q`: the Lagrange basis, its
/// derivatives, and the matrices
/// `D[j][l] = int_0^1 psi_l'(s) psi_j(s) ds`,
/// `Q[j][l] = int_0^1 psi_l(s) psi_j(s) ds`,
/// with endpoint vectors `e0[j] = psi_j(0)`, `e1[j] = psi_j(1)`.
pub struct TemporalTables {
    pub q: usize,
    pub psi: Vec<QPoly>,
    pub dpsi: Vec<QPoly>,
    pub d: Vec<Vec<Q>>,
    pub q_mat: Vec<Vec<Q>>,
    pub e0: Vec<Q>,
    pub e1: Vec<Q>,
}

pub fn temporal_tables(q: usize) -> TemporalTables {
    let psi = lagrange_basis(q);
    let dpsi: Vec<QPoly> = psi.iter().map(|p| p.derivative()).collect();
    let n = q + 1;
    let mut d = vec![vec![Q::zero(); n]; n];
    let mut q_mat = vec![vec![Q::zero(); n]; n];
    for j in 0..n {
        for l in 0..n {
            d[j][l] = dpsi[l].mul(&psi[j]).integral_01();
            q_mat[j][l] = psi[l].mul(&psi[j]).integral_01();
        }
    }
    let e0 = psi.iter().map(|p| p.eval_q(&Q::zero())).collect();
    let e1 = psi.iter().map(|p| p.eval_q(&Q::one())).collect();
    TemporalTables {
        q,
        psi,
        dpsi,
        d,
        q_mat,
        e0,
        e1,
    }
}

/// Determinant of a square matrix of polynomials by cofactor expansion.
/// Sizes here are at most 4x4.
pub fn poly_det(m: &[Vec<QPoly>]) -> QPoly {
    let n = m.len();
    if n == 1 {
        return m[0][0].clone();
    }
    let mut det = QPoly::zero();
    for (col, entry) in m[0].iter().enumerate() {
        if entry.is_zero() {
            continue;
        }
        let minor: Vec<Vec<QPoly>> = m[1..]
            .iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .filter(|(j, _)| *j != col)
                    .map(|(_, p)| p.clone())
                    .collect()
            })
            .collect();
        let term = entry.mul(&poly_det(&minor));
        det = if col % 2 == 0 {
            det.add(&term)
        } else {
            det.sub(&term)
        };
    }
    det
}

/// Adjugate: `adj[l][j]` is the `(j, l)` cofactor, so `M^-1 = adj / det(M)`.
pub fn poly_adjugate(m: &[Vec<QPoly>]) -> Vec<Vec<QPoly>> {
    let n = m.len();
    if n == 1 {
        return vec![vec![QPoly::one()]];
    }
    let mut adj = vec![vec![QPoly::zero(); n]; n];
    for j in 0..n {
        for l in 0..n {
            let minor: Vec<Vec<QPoly>> = (0..n)
                .filter(|&r| r != j)
                .map(|r| {
                    (0..n)
                        .filter(|&c| c != l)
                        .map(|c| m[r][c].clone())
                        .collect()
                })
                .collect();
            let cof = poly_det(&minor);
            adj[l][j] = if (j + l) % 2 == 0 {
                cof
            } else {
                QPoly::zero().sub(&cof)
            };
        }
    }
    adj
}

/// Truncated Taylor polynomial of `exp(x)` with enough terms that the tail
/// is below `tail_bound` for `|x| <= x_max`.
pub fn exp_taylor(x: &Q, x_max: f64, tail_bound: f64) -> Q {
    let mut terms = 3usize;
    let mut fact = 1.0;
    loop {
        fact *= terms as f64;
        if x_max.powi(terms as i32) / fact < tail_bound || terms > 200 {
            break;
        }
        terms += 1;
    }
    let mut acc = Q::one();
    let mut term = Q::one();
    for n in 1..=terms {
        term = term * x / q_int(n as i64);
        acc += &term;
    }
    acc
}
