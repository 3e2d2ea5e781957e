//! The fully discrete dG(q)cG(r) solver.
//!
//! On each interval `I_m = (t_{m-1}, t_m]` the solution is
//! `u|_{I_m} = sum_l U^m_l psi_l((t - t_{m-1}) / k_m)` with Lagrange nodes at
//! `j/q` (for `q = 0` a single constant with its node at `s = 1`, so the
//! stored coefficient is the left limit at `t_m`). Testing against
//! `psi_j(s) chi` turns the weak formulation on one interval into the block
//! system
//!
//! `sum_l [(D_jl + e0_l e0_j) M + k_m Q_jl A] U_l = e0_j M U_in + k_m F_j`,
//!
//! which for `q = 0` is exactly the backward Euler step
//! `(M + k A) U = M U_in + k F_0`.

use crate::band::{BandLu, BandMatrix};
use crate::error::{Error, Result};
use crate::exact;
use crate::rational::q_to_f64;
use crate::spatial::{ops, DiscreteFunction, FeSpace, Point};
use crate::time_partition::TimePartition;
use nalgebra::{DMatrix, DVector};
use std::sync::Arc;

pub type SpaceTimeFn = dyn Fn(f64, Point) -> f64 + Sync;

/// f64 view of the exact local-in-time tables.
#[derive(Debug, Clone)]
pub struct TemporalBasis {
    pub q: usize,
    /// `D[j][l] = int psi_l' psi_j`
    pub d: DMatrix<f64>,
    /// `Q[j][l] = int psi_l psi_j`
    pub q_mat: DMatrix<f64>,
    pub e0: DVector<f64>,
    pub e1: DVector<f64>,
    psi: Vec<Vec<f64>>,
    dpsi: Vec<Vec<f64>>,
}

impl TemporalBasis {
    pub fn new(q: usize) -> Self {
        let tabs = exact::temporal_tables(q);
        let n = q + 1;
        TemporalBasis {
            q,
            d: DMatrix::from_fn(n, n, |j, l| q_to_f64(&tabs.d[j][l])),
            q_mat: DMatrix::from_fn(n, n, |j, l| q_to_f64(&tabs.q_mat[j][l])),
            e0: DVector::from_fn(n, |j, _| q_to_f64(&tabs.e0[j])),
            e1: DVector::from_fn(n, |j, _| q_to_f64(&tabs.e1[j])),
            psi: tabs.psi.iter().map(|p| p.to_f64_coeffs()).collect(),
            dpsi: tabs.dpsi.iter().map(|p| p.to_f64_coeffs()).collect(),
        }
    }

    pub fn psi_at(&self, l: usize, s: f64) -> f64 {
        horner(&self.psi[l], s)
    }

    pub fn dpsi_at(&self, l: usize, s: f64) -> f64 {
        horner(&self.dpsi[l], s)
    }
}

fn horner(coeffs: &[f64], x: f64) -> f64 {
    let mut acc = 0.0;
    for c in coeffs.iter().rev() {
        acc = acc * x + c;
    }
    acc
}

/// `local_temporal_matrices` in operation terms.
pub fn local_temporal_matrices(q: usize) -> TemporalBasis {
    TemporalBasis::new(q)
}

/// Interval moments of the forcing: load vectors of
/// `f^m_j = (1/k_m) int_{I_m} f(t, .) psi_j((t - t_{m-1})/k_m) dt`,
/// with a `(q + 3)`-point Gauss rule in time.
pub fn rhs_moments(
    space: &FeSpace,
    f: &SpaceTimeFn,
    m: usize,
    part: &TimePartition,
    basis: &TemporalBasis,
) -> Vec<DVector<f64>> {
    let k = part.step(m);
    let t0 = part.node(m - 1);
    let rule = crate::spatial::quadrature::gauss_legendre_01(basis.q + 3);
    let mut moments = vec![DVector::zeros(space.num_interior()); basis.q + 1];
    for &(s, w) in rule {
        let t = t0 + k * s;
        let load = space.load_vector(&|x| f(t, x));
        for (j, mom) in moments.iter_mut().enumerate() {
            // the 1/k_m in f^m_j cancels against dt = k_m ds
            mom.axpy(w * basis.psi_at(j, s), &load, 1.0);
        }
    }
    moments
}

/// Assembled and factorized block operator for one step size.
pub struct StepOperator {
    pub k: f64,
    matrix: BandMatrix,
    lu: BandLu,
    q: usize,
}

impl StepOperator {
    pub fn new(space: &FeSpace, basis: &TemporalBasis, k: f64) -> Result<Self> {
        if !(k > 0.0) {
            return Err(Error::Domain {
                name: "k",
                detail: format!("step must be positive, got {k}"),
            });
        }
        let q = basis.q;
        let nb = q + 1;
        let n = space.num_interior();
        let (bw, _) = space.mass.bandwidths();
        let block_bw = nb * bw + q;
        let mut matrix = BandMatrix::zeros(nb * n, block_bw, block_bw);
        for i in 0..n {
            let lo = i.saturating_sub(bw);
            let hi = (i + bw).min(n - 1);
            for ip in lo..=hi {
                let vm = space.mass.get(i, ip);
                let va = space.stiffness.get(i, ip);
                if vm == 0.0 && va == 0.0 {
                    continue;
                }
                for j in 0..nb {
                    for l in 0..nb {
                        let c = (basis.d[(j, l)] + basis.e0[l] * basis.e0[j]) * vm
                            + k * basis.q_mat[(j, l)] * va;
                        if c != 0.0 {
                            matrix.add_to(i * nb + j, ip * nb + l, c);
                        }
                    }
                }
            }
        }
        let lu = matrix.factorize()?;
        Ok(StepOperator { k, matrix, lu, q })
    }

    /// One interval: incoming trace `u_in` (coefficients) and forcing load
    /// moments `f_loads` (may be empty for the homogeneous problem).
    pub fn step(
        &self,
        space: &FeSpace,
        basis: &TemporalBasis,
        u_in: &DVector<f64>,
        f_loads: &[DVector<f64>],
    ) -> Result<Vec<DVector<f64>>> {
        let nb = self.q + 1;
        let n = space.num_interior();
        let m_u_in = space.mass.matvec(u_in);
        let mut rhs = DVector::zeros(nb * n);
        for i in 0..n {
            for j in 0..nb {
                let mut v = basis.e0[j] * m_u_in[i];
                if !f_loads.is_empty() {
                    v += self.k * f_loads[j][i];
                }
                rhs[i * nb + j] = v;
            }
        }
        let x = self.lu.solve(&rhs);
        let residual = (&self.matrix.matvec(&x) - &rhs).amax();
        let scale = rhs.amax().max(f64::MIN_POSITIVE);
        if residual > 1e-10 * scale {
            return Err(Error::Solver(format!(
                "block residual {residual:.3e} above 1e-10 relative (k = {})",
                self.k
            )));
        }
        Ok((0..nb)
            .map(|l| DVector::from_fn(n, |i, _| x[i * nb + l]))
            .collect())
    }
}

/// One-shot step operation.
pub fn dg_step(
    space: &FeSpace,
    basis: &TemporalBasis,
    k: f64,
    u_in: &DVector<f64>,
    f_loads: &[DVector<f64>],
) -> Result<Vec<DVector<f64>>> {
    StepOperator::new(space, basis, k)?.step(space, basis, u_in, f_loads)
}

/// Which quantity to evaluate from a solution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quantity {
    Value,
    TimeDerivative,
}

/// Jump convention at `m = 1`: with initial data the jump is
/// `U^1_0 - P_h u_0`; for the forced problem with `u_0 = 0` it is `U^1_0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JumpConvention {
    Homogeneous,
    Inhomogeneous,
}

pub struct DgSolution {
    space: Arc<FeSpace>,
    part: TimePartition,
    basis: TemporalBasis,
    /// `coeffs[m - 1][l]` over interior dofs.
    coeffs: Vec<Vec<DVector<f64>>>,
    /// `P_h u_0` (zero vector when no initial datum was given).
    initial: DVector<f64>,
}

impl DgSolution {
    pub fn from_parts(
        space: Arc<FeSpace>,
        part: TimePartition,
        basis: TemporalBasis,
        coeffs: Vec<Vec<DVector<f64>>>,
        initial: DVector<f64>,
    ) -> Result<Self> {
        if coeffs.len() != part.num_intervals() {
            return Err(Error::Domain {
                name: "coeffs",
                detail: format!(
                    "expected {} intervals, got {}",
                    part.num_intervals(),
                    coeffs.len()
                ),
            });
        }
        Ok(DgSolution {
            space,
            part,
            basis,
            coeffs,
            initial,
        })
    }

    pub fn space(&self) -> &Arc<FeSpace> {
        &self.space
    }

    pub fn partition(&self) -> &TimePartition {
        &self.part
    }

    pub fn basis(&self) -> &TemporalBasis {
        &self.basis
    }

    pub fn q(&self) -> usize {
        self.basis.q
    }

    pub fn initial(&self) -> &DVector<f64> {
        &self.initial
    }

    /// Coefficients `U^m_l`, `m` 1-based.
    pub fn interval_coeffs(&self, m: usize) -> &[DVector<f64>] {
        &self.coeffs[m - 1]
    }

    /// Evaluate at local coordinate `s` in `[0, 1]` of interval `m` using the
    /// `I_m` polynomial (so `s = 0` is the right limit at `t_{m-1}`).
    pub fn eval_interval(&self, m: usize, s: f64, what: Quantity) -> DVector<f64> {
        let k = self.part.step(m);
        let mut acc = DVector::zeros(self.space.num_interior());
        for (l, u) in self.coeffs[m - 1].iter().enumerate() {
            let w = match what {
                Quantity::Value => self.basis.psi_at(l, s),
                Quantity::TimeDerivative => self.basis.dpsi_at(l, s) / k,
            };
            if w != 0.0 {
                acc.axpy(w, u, 1.0);
            }
        }
        acc
    }

    /// Evaluate at a time `t` in `(0, T]`, assigned right-continuously to its
    /// interval.
    pub fn evaluate(&self, t: f64, what: Quantity) -> Result<DiscreteFunction> {
        let m = self.part.interval_of(t)?;
        let s = (t - self.part.node(m - 1)) / self.part.step(m);
        Ok(DiscreteFunction {
            values: self.eval_interval(m, s, what),
        })
    }

    /// Jump `[u]_{m-1} = u^+_{m-1} - u^-_{m-1}` (coefficients), `m >= 1`.
    pub fn jump(&self, m: usize, convention: JumpConvention) -> Result<DiscreteFunction> {
        if m < 1 || m > self.part.num_intervals() {
            return Err(Error::Domain {
                name: "m",
                detail: format!("jump index must be 1..={}, got {m}", self.part.num_intervals()),
            });
        }
        let plus = self.trace_plus(m);
        let minus = if m == 1 {
            match convention {
                JumpConvention::Homogeneous => self.initial.clone(),
                JumpConvention::Inhomogeneous => {
                    if self.initial.amax() != 0.0 {
                        return Err(Error::Usage(
                            "inhomogeneous jump convention requires u_0 = 0".to_string(),
                        ));
                    }
                    DVector::zeros(self.space.num_interior())
                }
            }
        } else {
            self.trace_minus(m - 1)
        };
        Ok(DiscreteFunction {
            values: plus - minus,
        })
    }

    /// Right limit `u^+_{m-1}` of interval `m`.
    pub fn trace_plus(&self, m: usize) -> DVector<f64> {
        self.eval_interval(m, 0.0, Quantity::Value)
    }

    /// Left limit `u^-_m`.
    pub fn trace_minus(&self, m: usize) -> DVector<f64> {
        self.eval_interval(m, 1.0, Quantity::Value)
    }
}

/// Full sweep with the initial datum given directly as `P_h u_0`
/// coefficients.
pub fn dg_solve_coeffs(
    space: &Arc<FeSpace>,
    part: &TimePartition,
    q: usize,
    u0: DVector<f64>,
    f: Option<&SpaceTimeFn>,
) -> Result<DgSolution> {
    let basis = TemporalBasis::new(q);
    let m_count = part.num_intervals();
    let mut coeffs = Vec::with_capacity(m_count);
    let mut u_in = u0.clone();
    let mut cached: Option<StepOperator> = None;
    for m in 1..=m_count {
        let k = part.step(m);
        if cached.as_ref().map(|op| op.k.to_bits()) != Some(k.to_bits()) {
            cached = Some(StepOperator::new(space, &basis, k)?);
        }
        let op = cached.as_ref().unwrap();
        let loads = match f {
            Some(func) => rhs_moments(space, func, m, part, &basis),
            None => Vec::new(),
        };
        let u_l = op.step(space, &basis, &u_in, &loads)?;
        u_in = DVector::zeros(space.num_interior());
        for (l, u) in u_l.iter().enumerate() {
            u_in.axpy(basis.e1[l], u, 1.0);
        }
        coeffs.push(u_l);
    }
    DgSolution::from_parts(space.clone(), part.clone(), basis, coeffs, u0)
}

/// Full sweep; the initial datum (when present) enters through its `L^2`
/// projection.
pub fn dg_solve(
    space: &Arc<FeSpace>,
    part: &TimePartition,
    q: usize,
    u0: Option<&(dyn Fn(Point) -> f64 + Sync)>,
    f: Option<&SpaceTimeFn>,
) -> Result<DgSolution> {
    let initial = match u0 {
        Some(func) => ops::l2_project(space, func).values,
        None => DVector::zeros(space.num_interior()),
    };
    dg_solve_coeffs(space, part, q, initial, f)
}

/// Free space-time coefficient bundle (for testing the bilinear form on
/// arbitrary discrete functions).
pub struct SpaceTimeCoeffs {
    pub coeffs: Vec<Vec<DVector<f64>>>,
}

impl SpaceTimeCoeffs {
    pub fn trace(&self, basis: &TemporalBasis, m: usize, at_start: bool) -> DVector<f64> {
        let w = if at_start { &basis.e0 } else { &basis.e1 };
        let mut acc = DVector::zeros(self.coeffs[0][0].len());
        for (l, u) in self.coeffs[m - 1].iter().enumerate() {
            acc.axpy(w[l], u, 1.0);
        }
        acc
    }
}

/// Primal form:
/// `B(u, phi) = sum_m [ (d_t u, phi)_{I_m} + (grad u, grad phi)_{I_m} ]
///  + sum_{m >= 2} ([u]_{m-1}, phi^+_{m-1}) + (u^+_0, phi^+_0)`.
pub fn bilinear_primal(
    space: &FeSpace,
    part: &TimePartition,
    basis: &TemporalBasis,
    u: &SpaceTimeCoeffs,
    phi: &SpaceTimeCoeffs,
) -> f64 {
    let nb = basis.q + 1;
    let mut total = 0.0;
    for m in 1..=part.num_intervals() {
        let k = part.step(m);
        let us = &u.coeffs[m - 1];
        let ps = &phi.coeffs[m - 1];
        let m_phi: Vec<DVector<f64>> = ps.iter().map(|p| space.mass.matvec(p)).collect();
        let a_phi: Vec<DVector<f64>> = ps.iter().map(|p| space.stiffness.matvec(p)).collect();
        for j in 0..nb {
            for l in 0..nb {
                total += basis.d[(j, l)] * us[l].dot(&m_phi[j]);
                total += k * basis.q_mat[(j, l)] * us[l].dot(&a_phi[j]);
            }
        }
        let phi_plus = phi.trace(basis, m, true);
        let m_phi_plus = space.mass.matvec(&phi_plus);
        if m >= 2 {
            let jump = u.trace(basis, m, true) - u.trace(basis, m - 1, false);
            total += jump.dot(&m_phi_plus);
        } else {
            total += u.trace(basis, 1, true).dot(&m_phi_plus);
        }
    }
    total
}

/// Dual form of the same bilinear form:
/// `B(u, phi) = sum_m [ -(u, d_t phi)_{I_m} + (grad u, grad phi)_{I_m} ]
///  - sum_{m <= M-1} (u^-_m, [phi]_m) + (u^-_M, phi^-_M)`.
pub fn bilinear_dual(
    space: &FeSpace,
    part: &TimePartition,
    basis: &TemporalBasis,
    u: &SpaceTimeCoeffs,
    phi: &SpaceTimeCoeffs,
) -> f64 {
    let nb = basis.q + 1;
    let m_count = part.num_intervals();
    let mut total = 0.0;
    for m in 1..=m_count {
        let k = part.step(m);
        let us = &u.coeffs[m - 1];
        let ps = &phi.coeffs[m - 1];
        let m_phi: Vec<DVector<f64>> = ps.iter().map(|p| space.mass.matvec(p)).collect();
        let a_phi: Vec<DVector<f64>> = ps.iter().map(|p| space.stiffness.matvec(p)).collect();
        for j in 0..nb {
            for l in 0..nb {
                // (u, d_t phi): int psi_l psi_j' = D[l][j]
                total -= basis.d[(l, j)] * us[l].dot(&m_phi[j]);
                total += k * basis.q_mat[(j, l)] * us[l].dot(&a_phi[j]);
            }
        }
        let u_minus = u.trace(basis, m, false);
        if m <= m_count - 1 {
            let phi_jump = phi.trace(basis, m + 1, true) - phi.trace(basis, m, false);
            total -= u_minus.dot(&space.mass.matvec(&phi_jump));
        } else {
            let phi_minus = phi.trace(basis, m_count, false);
            total += u_minus.dot(&space.mass.matvec(&phi_minus));
        }
    }
    total
}

/// Right-hand side functional `(f, phi)_{I x Omega} + (u_0, phi^+_0)`.
pub fn rhs_functional(
    space: &FeSpace,
    part: &TimePartition,
    basis: &TemporalBasis,
    f_loads: &[Vec<DVector<f64>>],
    u0_coeffs: &DVector<f64>,
    phi: &SpaceTimeCoeffs,
) -> f64 {
    let mut total = 0.0;
    for m in 1..=part.num_intervals() {
        let k = part.step(m);
        if !f_loads.is_empty() {
            for (j, load) in f_loads[m - 1].iter().enumerate() {
                total += k * load.dot(&phi.coeffs[m - 1][j]);
            }
        }
    }
    let phi_plus = phi.trace(basis, 1, true);
    total += space.mass.matvec(u0_coeffs).dot(&phi_plus);
    total
}

/// Max relative Galerkin defect of `sol` over random discrete test functions.
pub fn verify_galerkin(
    sol: &DgSolution,
    f: Option<&SpaceTimeFn>,
    trials: usize,
    seed: u64,
) -> f64 {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let space = sol.space();
    let part = sol.partition();
    let basis = sol.basis();
    let n = space.num_interior();
    let f_loads: Vec<Vec<DVector<f64>>> = match f {
        Some(func) => (1..=part.num_intervals())
            .map(|m| rhs_moments(space, func, m, part, basis))
            .collect(),
        None => Vec::new(),
    };
    let u = SpaceTimeCoeffs {
        coeffs: sol.coeffs.clone(),
    };
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let phi = SpaceTimeCoeffs {
            coeffs: (0..part.num_intervals())
                .map(|_| {
                    (0..=basis.q)
                        .map(|_| DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0)))
                        .collect()
                })
                .collect(),
        };
        let b = bilinear_primal(space, part, basis, &u, &phi);
        let r = rhs_functional(space, part, basis, &f_loads, sol.initial(), &phi);
        let scale = b.abs().max(r.abs()).max(1e-300);
        worst = worst.max((b - r).abs() / scale);
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spatial::{build_space, DomainKind};
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use std::f64::consts::PI;

    fn space_1d(n: usize) -> Arc<FeSpace> {
        Arc::new(build_space(DomainKind::UnitInterval, n, 1).unwrap())
    }

    #[test]
    fn temporal_basis_hand_values() {
        let b0 = TemporalBasis::new(0);
        assert_eq!(b0.d[(0, 0)], 0.0);
        assert_eq!(b0.q_mat[(0, 0)], 1.0);
        assert_eq!(b0.e0[0], 1.0);

        let b1 = TemporalBasis::new(1);
        assert_eq!(b1.q_mat[(0, 0)], 1.0 / 3.0);
        assert_eq!(b1.q_mat[(0, 1)], 1.0 / 6.0);
        assert_eq!(b1.d[(0, 0)], -0.5);
        assert_eq!(b1.d[(0, 1)], 0.5);
        assert_eq!(b1.e0[0], 1.0);
        assert_eq!(b1.e0[1], 0.0);

        for q in 0..=3 {
            let b = TemporalBasis::new(q);
            for j in 0..=q {
                let row: f64 = (0..=q).map(|l| b.d[(j, l)]).sum();
                assert!(row.abs() < 1e-15, "q={q} j={j}");
            }
        }
    }

    #[test]
    fn dg0_step_is_backward_euler() {
        let space = space_1d(8);
        let basis = TemporalBasis::new(0);
        let k = 0.05;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let n = space.num_interior();
        let u_in = DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
        let load = vec![DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0))];
        let u = dg_step(&space, &basis, k, &u_in, &load).unwrap();

        // direct backward Euler: (M + kA) U = M u_in + k F
        let mut sys = space.mass.to_dense();
        sys += space.stiffness.to_dense() * k;
        let rhs = space.mass.matvec(&u_in) + &load[0] * k;
        let u_ref = sys.lu().solve(&rhs).unwrap();
        assert!((&u[0] - &u_ref).amax() < 1e-12 * u_ref.amax().max(1.0));
    }

    #[test]
    fn scalar_surrogate_matches_kernels() {
        // single-dof space: M = 1/3, A = 4, lambda = 12
        let space = space_1d(2);
        let fam = crate::rational::derive_family(1).unwrap();
        let basis = TemporalBasis::new(1);
        let k = 0.2;
        let u_in = DVector::from_element(1, 1.0);
        let u = dg_step(&space, &basis, k, &u_in, &[]).unwrap();
        let z = k * 12.0;
        assert_relative_eq!(u[1][0], fam.eval_homog_real(1, z), epsilon = 1e-12);
        assert_relative_eq!(u[0][0], fam.eval_homog_real(0, z), epsilon = 1e-12);

        // zero data stays zero
        let zero = dg_step(&space, &basis, k, &DVector::zeros(1), &[]).unwrap();
        assert_eq!(zero[0].amax(), 0.0);
    }

    #[test]
    fn dg0_uniform_decay_closed_form() {
        let space = space_1d(2);
        let part = TimePartition::uniform(1.0, 8).unwrap();
        let sol = dg_solve_coeffs(&space, &part, 0, DVector::from_element(1, 1.0), None).unwrap();
        let k: f64 = 0.125;
        for m in 1..=8 {
            let expect = (1.0 + 12.0 * k).powi(-(m as i32));
            assert_relative_eq!(sol.interval_coeffs(m)[0][0], expect, max_relative = 1e-12);
        }
    }

    #[test]
    fn evaluate_state_and_jump_conventions() {
        let space = space_1d(8);
        let part = TimePartition::uniform(1.0, 4).unwrap();
        let u0 = |x: Point| (PI * x[0]).sin();
        let sol = dg_solve(&space, &part, 1, Some(&u0), None).unwrap();

        // values at nodes: q=1 at t_m equals U^m_1; midpoint is the average
        let v_end = sol.evaluate(0.25, Quantity::Value).unwrap();
        assert!((v_end.values - &sol.interval_coeffs(1)[1]).amax() < 1e-14);
        let v_mid = sol.evaluate(0.125, Quantity::Value).unwrap();
        let expect = (&sol.interval_coeffs(1)[0] + &sol.interval_coeffs(1)[1]) * 0.5;
        assert!((v_mid.values - expect).amax() < 1e-14);

        assert!(sol.evaluate(0.0, Quantity::Value).is_err());
        assert!(sol.evaluate(1.1, Quantity::Value).is_err());

        // m = 1 jump conventions
        let j_hom = sol.jump(1, JumpConvention::Homogeneous).unwrap();
        let expect = &sol.interval_coeffs(1)[0] - sol.initial();
        assert!((j_hom.values - expect).amax() < 1e-14);
        assert!(matches!(
            sol.jump(1, JumpConvention::Inhomogeneous),
            Err(Error::Usage(_))
        ));

        // q = 0: derivative vanishes identically
        let sol0 = dg_solve(&space, &part, 0, Some(&u0), None).unwrap();
        let d = sol0.evaluate(0.6, Quantity::TimeDerivative).unwrap();
        assert_eq!(d.values.amax(), 0.0);
    }

    #[test]
    fn zero_data_gives_zero_solution() {
        let space = space_1d(8);
        let part = TimePartition::uniform(1.0, 4).unwrap();
        let sol = dg_solve(&space, &part, 2, None, None).unwrap();
        for m in 1..=4 {
            for u in sol.interval_coeffs(m) {
                assert_eq!(u.amax(), 0.0);
            }
            assert_eq!(sol.jump(m, JumpConvention::Inhomogeneous).unwrap().values.amax(), 0.0);
        }
    }

    #[test]
    fn galerkin_identity_holds() {
        let space = space_1d(8);
        let part = TimePartition::graded(1.0, 6, 1.3).unwrap();
        let f = |t: f64, x: Point| (1.0 + t) * x[0].cos();
        let u0 = |x: Point| x[0] * (1.0 - x[0]);
        for q in 0..=2 {
            let sol = dg_solve(&space, &part, q, Some(&u0), Some(&f)).unwrap();
            let defect = verify_galerkin(&sol, Some(&f), 20, 99);
            assert!(defect <= 1e-9, "q={q}: defect {defect}");
        }
    }

    #[test]
    fn primal_and_dual_forms_agree() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        let space = space_1d(8);
        let part = TimePartition::uniform(1.0, 5).unwrap();
        let n = space.num_interior();
        for q in 0..=2usize {
            let basis = TemporalBasis::new(q);
            for _ in 0..20 {
                let rand_coeffs = |rng: &mut rand_chacha::ChaCha8Rng| SpaceTimeCoeffs {
                    coeffs: (0..5)
                        .map(|_| {
                            (0..=q)
                                .map(|_| DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0)))
                                .collect()
                        })
                        .collect(),
                };
                let u = rand_coeffs(&mut rng);
                let phi = rand_coeffs(&mut rng);
                let bp = bilinear_primal(&space, &part, &basis, &u, &phi);
                let bd = bilinear_dual(&space, &part, &basis, &u, &phi);
                let scale = bp.abs().max(bd.abs()).max(1e-300);
                assert!((bp - bd).abs() <= 1e-10 * scale, "q={q}: {bp} vs {bd}");
            }
        }
    }

    #[test]
    fn l2_stability_homogeneous() {
        let space = space_1d(16);
        let part = TimePartition::uniform(1.0, 8).unwrap();
        for q in 0..=2 {
            let sol = dg_solve(&space, &part, q, Some(&|x: Point| (3.0 * PI * x[0]).sin()), None)
                .unwrap();
            let norm0 = ops::m_norm(&space, sol.initial());
            for m in 1..=8 {
                let norm_m = ops::m_norm(&space, &sol.trace_minus(m));
                assert!(norm_m <= norm0 * (1.0 + 1e-12), "q={q} m={m}");
            }
        }
    }

    #[test]
    fn jump_norms_decrease_for_single_mode_decay() {
        let space = space_1d(16);
        let part = TimePartition::uniform(1.0, 8).unwrap();
        let pairs = ops::generalized_eigenpairs(&space, 1).unwrap();
        let sol = dg_solve_coeffs(&space, &part, 0, pairs[0].1.values.clone(), None).unwrap();
        let mut prev = f64::INFINITY;
        for m in 1..=8 {
            let j = sol.jump(m, JumpConvention::Homogeneous).unwrap();
            let norm = ops::m_norm(&space, &j.values);
            assert!(norm < prev, "m={m}: {norm} !< {prev}");
            prev = norm;
        }
    }

    #[test]
    fn rhs_moments_match_hand_values() {
        let space = space_1d(8);
        let part = TimePartition::uniform(1.0, 4).unwrap();
        // f == 1 in time: both q=1 moments are half of the spatial load
        let basis = TemporalBasis::new(1);
        let g = |x: Point| 1.0 + x[0];
        let moments = rhs_moments(&space, &move |_t, x| g(x), 2, &part, &basis);
        let load = space.load_vector(&g);
        for mom in &moments {
            assert!((mom - &load * 0.5).amax() < 1e-14);
        }
        // f(t, x) = t * g(x) on I_1 = (0, k], q = 0: moment is (k/2) g
        let basis0 = TemporalBasis::new(0);
        let moments0 = rhs_moments(&space, &move |t, x| t * g(x), 1, &part, &basis0);
        assert!((&moments0[0] - &load * (0.25 / 2.0)).amax() < 1e-14);
        // f == 0
        let z = rhs_moments(&space, &|_, _| 0.0, 1, &part, &basis0);
        assert_eq!(z[0].amax(), 0.0);
    }
}
