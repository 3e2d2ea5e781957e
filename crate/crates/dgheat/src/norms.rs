//! Space-time norms `L^s(I; L^p(Omega))`, per-interval sup norms, jump
//! functionals, error norms against an exact solution, and the temporal
//! projection that matches the left endpoint value plus `q` moments per
//! interval.

use crate::error::Result;
use crate::exact::{self, q_int, QPoly};
use crate::rational::q_to_f64;
use crate::spatial::ops::{self, Exponent, NormMode};
use crate::spatial::{DiscreteFunction, FeSpace, Point};
use crate::stepper::{DgSolution, JumpConvention, SpaceTimeFn, TemporalBasis};
use crate::time_partition::TimePartition;
use nalgebra::{DMatrix, DVector};

/// A space-time norm specification. `time_points` defaults to `q + 3` Gauss
/// points per interval; the spatial norm is evaluated per `spatial::ops`.
#[derive(Debug, Clone, Copy)]
pub struct NormSpec {
    pub s: Exponent,
    pub p: Exponent,
    pub time_points: Option<usize>,
    pub mode: NormMode,
}

impl NormSpec {
    pub fn new(s: Exponent, p: Exponent) -> Self {
        NormSpec {
            s,
            p,
            time_points: None,
            mode: NormMode::Quadrature,
        }
    }

    pub fn with_time_points(mut self, n: usize) -> Self {
        self.time_points = Some(n);
        self
    }

    pub fn with_mode(mut self, mode: NormMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.s.validate()?;
        self.p.validate()?;
        Ok(())
    }

    fn points(&self, q: usize) -> usize {
        self.time_points.unwrap_or(q + 3)
    }
}

/// Adaptive Gauss integration of `f` over `[a, b]`: compare the `n`-point
/// rule against the `2n`-point rule; on disagreement beyond 1e-6 relative,
/// bisect (up to 3 levels). `|.|^s` of a polynomial is not a polynomial for
/// odd `s` or sign changes, so the doubling check controls the error where
/// no exact rule exists.
fn integrate_adaptive(a: f64, b: f64, n: usize, f: &dyn Fn(f64) -> f64, depth: usize) -> f64 {
    let coarse: f64 = crate::spatial::quadrature::gauss_legendre(n, a, b)
        .into_iter()
        .map(|(x, w)| w * f(x))
        .sum();
    let fine: f64 = crate::spatial::quadrature::gauss_legendre(2 * n, a, b)
        .into_iter()
        .map(|(x, w)| w * f(x))
        .sum();
    if (coarse - fine).abs() <= 1e-6 * fine.abs().max(1e-300) || depth >= 3 {
        fine
    } else {
        let mid = 0.5 * (a + b);
        integrate_adaptive(a, mid, n, f, depth + 1) + integrate_adaptive(mid, b, n, f, depth + 1)
    }
}

/// `L^s` aggregation in time of a slice-norm function `slice(m, s_local, t)`
/// returning the spatial norm of the right-continuous interval polynomial.
/// For `s = inf` the sup is taken over Gauss nodes plus both interval
/// endpoints (`s = 0` and `s = 1` of each interval polynomial).
pub fn spacetime_norm_of(
    part: &TimePartition,
    n_pts: usize,
    s: Exponent,
    slice: &dyn Fn(usize, f64, f64) -> f64,
) -> f64 {
    match s {
        Exponent::Inf => {
            let mut best = 0.0f64;
            for m in 1..=part.num_intervals() {
                best = best.max(interval_sup_of(part, n_pts, m, slice));
            }
            best
        }
        Exponent::Finite(se) => {
            let mut total = 0.0;
            for m in 1..=part.num_intervals() {
                let (a, b) = (part.node(m - 1), part.node(m));
                let k = b - a;
                total += integrate_adaptive(
                    a,
                    b,
                    n_pts,
                    &|t| slice(m, (t - a) / k, t).powf(se),
                    0,
                );
            }
            total.max(0.0).powf(1.0 / se)
        }
    }
}

/// Sup over the endpoint-augmented Gauss sampling set of one interval.
pub fn interval_sup_of(
    part: &TimePartition,
    n_pts: usize,
    m: usize,
    slice: &dyn Fn(usize, f64, f64) -> f64,
) -> f64 {
    let (a, b) = (part.node(m - 1), part.node(m));
    let k = b - a;
    let mut best = slice(m, 0.0, a).max(slice(m, 1.0, b));
    for &(sx, _) in crate::spatial::quadrature::gauss_legendre_01(n_pts) {
        best = best.max(slice(m, sx, a + k * sx));
    }
    best
}

/// Which derived field of a solution a norm applies to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolQuantity {
    Value,
    TimeDerivative,
    /// `Delta_h u`, applied coefficient-wise per interval.
    Laplacian,
}

/// Per-interval coefficient bundles of the requested quantity.
fn quantity_coeffs(sol: &DgSolution, m: usize, quant: SolQuantity) -> Vec<DVector<f64>> {
    match quant {
        SolQuantity::Value | SolQuantity::TimeDerivative => {
            sol.interval_coeffs(m).to_vec()
        }
        SolQuantity::Laplacian => sol
            .interval_coeffs(m)
            .iter()
            .map(|u| ops::apply_discrete_laplacian_vec(sol.space(), u))
            .collect(),
    }
}

fn combine(
    basis: &TemporalBasis,
    coeffs: &[DVector<f64>],
    s: f64,
    k: f64,
    derivative: bool,
) -> DVector<f64> {
    let mut acc = DVector::zeros(coeffs[0].len());
    for (l, u) in coeffs.iter().enumerate() {
        let w = if derivative {
            basis.dpsi_at(l, s) / k
        } else {
            basis.psi_at(l, s)
        };
        if w != 0.0 {
            acc.axpy(w, u, 1.0);
        }
    }
    acc
}

/// `L^s(I; L^p)` norm of a solution quantity.
pub fn solution_norm(sol: &DgSolution, spec: &NormSpec, quant: SolQuantity) -> Result<f64> {
    spec.validate()?;
    let part = sol.partition();
    let space = sol.space().clone();
    let basis = sol.basis().clone();
    let n_pts = spec.points(sol.q());
    let per_interval: Vec<Vec<DVector<f64>>> = (1..=part.num_intervals())
        .map(|m| quantity_coeffs(sol, m, quant))
        .collect();
    let derivative = quant == SolQuantity::TimeDerivative;
    let p = spec.p;
    let mode = spec.mode;
    let slice = move |m: usize, s: f64, _t: f64| {
        let v = combine(&basis, &per_interval[m - 1], s, part.step(m), derivative);
        ops::lp_norm(&space, &DiscreteFunction { values: v }, p, mode).unwrap_or(f64::NAN)
    };
    Ok(spacetime_norm_of(part, n_pts, spec.s, &slice))
}

/// `L^inf(I_m; L^p)` of a solution quantity on one interval.
pub fn solution_interval_sup(
    sol: &DgSolution,
    m: usize,
    spec: &NormSpec,
    quant: SolQuantity,
) -> Result<f64> {
    spec.validate()?;
    let part = sol.partition();
    let space = sol.space().clone();
    let basis = sol.basis().clone();
    let coeffs = quantity_coeffs(sol, m, quant);
    let derivative = quant == SolQuantity::TimeDerivative;
    let p = spec.p;
    let mode = spec.mode;
    let slice = move |mm: usize, s: f64, _t: f64| {
        let v = combine(&basis, &coeffs, s, part.step(mm), derivative);
        ops::lp_norm(&space, &DiscreteFunction { values: v }, p, mode).unwrap_or(f64::NAN)
    };
    Ok(interval_sup_of(part, spec.points(sol.q()), m, &slice))
}

/// `L^s(I; L^p)` norm of an arbitrary space-time callable.
pub fn callable_norm(
    space: &FeSpace,
    part: &TimePartition,
    spec: &NormSpec,
    q_hint: usize,
    f: &SpaceTimeFn,
) -> Result<f64> {
    spec.validate()?;
    let slice = |_m: usize, _s: f64, t: f64| {
        ops::lp_norm_callable(space, &|x| f(t, x), spec.p).unwrap_or(f64::NAN)
    };
    Ok(spacetime_norm_of(part, spec.points(q_hint), spec.s, &slice))
}

/// `|| u - u_kh ||_{L^s(I; L^p)}`: the exact solution is sampled at the
/// spatial quadrature points, the discrete one interpolated there.
pub fn error_norm(u_exact: &SpaceTimeFn, sol: &DgSolution, spec: &NormSpec) -> Result<f64> {
    spec.validate()?;
    let part = sol.partition();
    let space = sol.space().clone();
    let basis = sol.basis().clone();
    let slice = move |m: usize, s: f64, t: f64| {
        let v = combine(&basis, sol.interval_coeffs(m), s, part.step(m), false);
        diff_lp_norm(&space, &v, &|x| u_exact(t, x), spec.p)
    };
    Ok(spacetime_norm_of(part, spec.points(sol.q()), spec.s, &slice))
}

/// Spatial `L^p` norm of `(f - v_h)` by per-cell quadrature.
fn diff_lp_norm(
    space: &FeSpace,
    v: &DVector<f64>,
    f: &dyn Fn(Point) -> f64,
    p: Exponent,
) -> f64 {
    let q = space.quad();
    match p {
        Exponent::Inf => {
            let mut best = 0.0f64;
            for cell in 0..space.num_cells() {
                for j in 0..q.per_cell {
                    best = best
                        .max((f(q.phys(cell, j)) - space.eval_at_qp(v, cell, j)).abs());
                }
            }
            // dof points as well
            for (i, x) in space.interior_coords().enumerate() {
                best = best.max((f(x) - v[i]).abs());
            }
            best
        }
        Exponent::Finite(pe) => {
            let mut sum = 0.0;
            for cell in 0..space.num_cells() {
                for j in 0..q.per_cell {
                    sum += q.weight(cell, j)
                        * (f(q.phys(cell, j)) - space.eval_at_qp(v, cell, j))
                            .abs()
                            .powf(pe);
                }
            }
            sum.powf(1.0 / pe)
        }
    }
}

/// Jump functional `(sum_m k_m || [u]_{m-1} / k_m ||_p^s)^{1/s}` (max over
/// `m` for `s = inf`).
pub fn jump_functional(
    sol: &DgSolution,
    spec: &NormSpec,
    convention: JumpConvention,
) -> Result<f64> {
    spec.validate()?;
    let part = sol.partition();
    let mut terms = Vec::with_capacity(part.num_intervals());
    for m in 1..=part.num_intervals() {
        let jump = sol.jump(m, convention)?;
        let norm = ops::lp_norm(sol.space(), &jump, spec.p, spec.mode)?;
        terms.push((part.step(m), norm / part.step(m)));
    }
    Ok(match spec.s {
        Exponent::Inf => terms.iter().map(|(_, v)| *v).fold(0.0, f64::max),
        Exponent::Finite(se) => terms
            .iter()
            .map(|(k, v)| k * v.powf(se))
            .sum::<f64>()
            .powf(1.0 / se),
    })
}

/// Values that piecewise time polynomials can carry.
pub trait LinearValue: Clone {
    fn lin_comb(terms: &[(f64, &Self)]) -> Self;
}

impl LinearValue for f64 {
    fn lin_comb(terms: &[(f64, &Self)]) -> f64 {
        terms.iter().map(|(w, v)| w * **v).sum()
    }
}

impl LinearValue for DiscreteFunction {
    fn lin_comb(terms: &[(f64, &Self)]) -> DiscreteFunction {
        let mut acc = DVector::zeros(terms[0].1.values.len());
        for (w, v) in terms {
            acc.axpy(*w, &v.values, 1.0);
        }
        DiscreteFunction { values: acc }
    }
}

/// A piecewise polynomial in time of degree `q`, stored as Lagrange nodal
/// values per interval.
pub struct PiecewiseTimePoly<V: LinearValue> {
    pub part: TimePartition,
    pub basis: TemporalBasis,
    /// `values[m - 1][l]`
    pub values: Vec<Vec<V>>,
}

impl<V: LinearValue> PiecewiseTimePoly<V> {
    pub fn eval_interval(&self, m: usize, s: f64) -> V {
        let terms: Vec<(f64, &V)> = self.values[m - 1]
            .iter()
            .enumerate()
            .map(|(l, v)| (self.basis.psi_at(l, s), v))
            .collect();
        V::lin_comb(&terms)
    }

    pub fn eval(&self, t: f64) -> Result<V> {
        let m = self.part.interval_of(t)?;
        let s = (t - self.part.node(m - 1)) / self.part.step(m);
        Ok(self.eval_interval(m, s))
    }
}

impl PiecewiseTimePoly<f64> {
    /// `L^s(I)` norm of a scalar piecewise polynomial (`p` plays no role).
    pub fn ls_norm(&self, s: Exponent, n_pts: usize) -> f64 {
        let slice = |m: usize, sl: f64, _t: f64| self.eval_interval(m, sl).abs();
        spacetime_norm_of(&self.part, n_pts, s, &slice)
    }
}

/// The linear stencil defining the temporal projection on one interval in
/// local coordinates: nodal values are `W * [u(s_g_1), .., u(s_g_G), u(1)]`.
/// Row `q` of the defining system is endpoint interpolation at `s = 1`; rows
/// `0..q` are moment conditions against `s^j`. For `q = 0` the projection is
/// the left-limit endpoint value alone.
pub struct PiKStencil {
    pub q: usize,
    /// Gauss nodes in `(0, 1)`, then the endpoint `1.0`.
    pub sample_s: Vec<f64>,
    /// `(q + 1) x (G + 1)`: maps samples to Lagrange nodal values.
    pub weights: DMatrix<f64>,
}

pub fn pi_k_stencil(q: usize, n_gauss: usize) -> PiKStencil {
    let tabs = exact::temporal_tables(q);
    let nb = q + 1;
    // G[j][l] = int psi_l s^j for j < q; G[q][l] = psi_l(1)
    let mut g = DMatrix::<f64>::zeros(nb, nb);
    for j in 0..q {
        let monomial = QPoly::new(
            std::iter::repeat(q_int(0))
                .take(j)
                .chain(std::iter::once(q_int(1)))
                .collect(),
        );
        for l in 0..nb {
            g[(j, l)] = q_to_f64(&tabs.psi[l].mul(&monomial).integral_01());
        }
    }
    for l in 0..nb {
        g[(q, l)] = q_to_f64(&tabs.e1[l]);
    }
    let rule = crate::spatial::quadrature::gauss_legendre_01(n_gauss);
    let n_samples = rule.len() + 1;
    let mut s_mat = DMatrix::<f64>::zeros(nb, n_samples);
    for j in 0..q {
        for (gidx, (sx, w)) in rule.iter().enumerate() {
            s_mat[(j, gidx)] = w * sx.powi(j as i32);
        }
    }
    s_mat[(q, n_samples - 1)] = 1.0;
    let g_inv = g
        .lu()
        .solve(&s_mat)
        .expect("pi_k system is uniquely solvable");
    let mut sample_s: Vec<f64> = rule.iter().map(|(sx, _)| *sx).collect();
    sample_s.push(1.0);
    PiKStencil {
        q,
        sample_s,
        weights: g_inv,
    }
}

impl PiKStencil {
    /// Weights of `pi_k u(s)` as a linear combination of the samples.
    pub fn eval_weights(&self, basis: &TemporalBasis, s: f64) -> Vec<f64> {
        let nb = self.q + 1;
        (0..self.sample_s.len())
            .map(|a| {
                (0..nb)
                    .map(|l| basis.psi_at(l, s) * self.weights[(l, a)])
                    .sum()
            })
            .collect()
    }
}

/// Temporal projection of a scalar callable: per interval, `q` moment
/// conditions against polynomials of degree `< q` plus interpolation of the
/// left limit at the right endpoint.
pub fn project_pi_k(
    u: &(dyn Fn(f64) -> f64 + Sync),
    part: &TimePartition,
    q: usize,
) -> PiecewiseTimePoly<f64> {
    let stencil = pi_k_stencil(q, q + 3);
    let basis = TemporalBasis::new(q);
    let values = (1..=part.num_intervals())
        .map(|m| {
            let (a, b) = (part.node(m - 1), part.node(m));
            let samples: Vec<f64> = stencil
                .sample_s
                .iter()
                .map(|&sx| u(a + (b - a) * sx))
                .collect();
            (0..=q)
                .map(|l| {
                    (0..samples.len())
                        .map(|g| stencil.weights[(l, g)] * samples[g])
                        .sum()
                })
                .collect()
        })
        .collect();
    PiecewiseTimePoly {
        part: part.clone(),
        basis,
        values,
    }
}

/// `|| u - pi_k u ||_{L^s(I; L^p(Omega))}` for a space-time callable,
/// evaluated pointwise through the projection stencil (the spatial variable
/// is a passenger of the temporal projection).
pub fn pik_defect_norm(
    u: &SpaceTimeFn,
    space: &FeSpace,
    part: &TimePartition,
    q: usize,
    spec: &NormSpec,
) -> Result<f64> {
    spec.validate()?;
    let stencil = pi_k_stencil(q, q + 3);
    let basis = TemporalBasis::new(q);
    let slice = |m: usize, s: f64, t: f64| {
        let (a, b) = (part.node(m - 1), part.node(m));
        let w = stencil.eval_weights(&basis, s);
        let taus: Vec<f64> = stencil.sample_s.iter().map(|&sx| a + (b - a) * sx).collect();
        ops::lp_norm_callable(
            space,
            &|x| {
                let projected: f64 = w
                    .iter()
                    .zip(taus.iter())
                    .map(|(wi, &tau)| wi * u(tau, x))
                    .sum();
                u(t, x) - projected
            },
            spec.p,
        )
        .unwrap_or(f64::NAN)
    };
    Ok(spacetime_norm_of(part, spec.points(q), spec.s, &slice))
}

/// `|| u - P_h u ||_{L^s(I; L^p)}`.
pub fn ph_defect_norm(
    u: &SpaceTimeFn,
    space: &FeSpace,
    part: &TimePartition,
    q: usize,
    spec: &NormSpec,
) -> Result<f64> {
    spec.validate()?;
    let slice = |_m: usize, _s: f64, t: f64| {
        let ph = ops::l2_project(space, &|x| u(t, x));
        diff_lp_norm(space, &ph.values, &|x| u(t, x), spec.p)
    };
    Ok(spacetime_norm_of(part, spec.points(q), spec.s, &slice))
}

/// `|| u - R_h u ||_{L^s(I; L^p)}`; needs the spatial gradient of `u`.
pub fn rh_defect_norm(
    u: &SpaceTimeFn,
    grad_u: &(dyn Fn(f64, Point) -> Point + Sync),
    space: &FeSpace,
    part: &TimePartition,
    q: usize,
    spec: &NormSpec,
) -> Result<f64> {
    spec.validate()?;
    let slice = |_m: usize, _s: f64, t: f64| {
        let gr = |x: Point| grad_u(t, x);
        let uf = crate::spatial::SpatialFn {
            value: &|x| u(t, x),
            gradient: Some(&gr),
        };
        match ops::ritz_project(space, &uf) {
            Ok(rh) => diff_lp_norm(space, &rh.values, &|x| u(t, x), spec.p),
            Err(_) => f64::NAN,
        }
    };
    Ok(spacetime_norm_of(part, spec.points(q), spec.s, &slice))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spatial::{build_space, DomainKind};
    use crate::stepper::{dg_solve, Quantity};
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use std::f64::consts::PI;
    use std::sync::Arc;

    #[test]
    fn pi_k_reproduces_polynomials() {
        let part = TimePartition::graded(1.0, 8, 1.4).unwrap();
        for q in 0..=3usize {
            let u = |t: f64| {
                (0..=q).map(|j| (j as f64 + 0.3) * t.powi(j as i32)).sum::<f64>()
            };
            let p = project_pi_k(&u, &part, q);
            for m in 1..=8 {
                for i in 0..=6 {
                    let s = i as f64 / 6.0;
                    let t = part.node(m - 1) + part.step(m) * s;
                    assert!(
                        (p.eval_interval(m, s) - u(t)).abs() < 1e-12,
                        "q={q} m={m} s={s}"
                    );
                }
            }
        }
    }

    #[test]
    fn pi_k_q0_is_right_endpoint_value() {
        let part = TimePartition::uniform(1.0, 4).unwrap();
        let u = |t: f64| (3.0 * t).sin();
        let p = project_pi_k(&u, &part, 0);
        for m in 1..=4 {
            assert_relative_eq!(p.values[m - 1][0], u(part.node(m)), epsilon = 1e-14);
        }
    }

    #[test]
    fn pi_k_q1_of_t_squared() {
        // on (0, 1]: pi_k t^2 = -1/3 + 4t/3
        let part = TimePartition::uniform(4.0, 4).unwrap();
        let p = project_pi_k(&|t| t * t, &part, 1);
        // first interval is (0, 1]
        assert_relative_eq!(p.eval_interval(1, 0.0), -1.0 / 3.0, epsilon = 1e-12);
        assert_relative_eq!(p.eval_interval(1, 1.0), 1.0, epsilon = 1e-12);
        assert_relative_eq!(p.eval_interval(1, 0.5), -1.0 / 3.0 + 4.0 / 3.0 * 0.5, epsilon = 1e-12);
    }

    #[test]
    fn pi_k_idempotent_and_moment_conditions() {
        let part = TimePartition::uniform(1.0, 5).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        for q in 1..=3usize {
            let coeffs: Vec<f64> = (0..q + 4).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let u = move |t: f64| {
                coeffs
                    .iter()
                    .enumerate()
                    .map(|(i, c)| c * t.powi(i as i32))
                    .sum::<f64>()
            };
            let p1 = project_pi_k(&u, &part, q);
            // idempotence
            let p1c = &p1;
            let p2 = project_pi_k(&move |t: f64| p1c.eval(t).unwrap(), &part, q);
            for m in 1..=5 {
                for l in 0..=q {
                    assert!(
                        (p1.values[m - 1][l] - p2.values[m - 1][l]).abs() < 1e-12,
                        "q={q} m={m} l={l}"
                    );
                }
            }
            // moment conditions against t^j, j < q
            for m in 1..=5usize {
                let (a, b) = (part.node(m - 1), part.node(m));
                for j in 0..q {
                    let integral: f64 = crate::spatial::quadrature::gauss_legendre(q + 5, a, b)
                        .into_iter()
                        .map(|(t, w)| {
                            let s = (t - a) / (b - a);
                            w * (p1.eval_interval(m, s) - u(t)) * t.powi(j as i32)
                        })
                        .sum();
                    assert!(integral.abs() < 1e-10, "q={q} m={m} j={j}: {integral}");
                }
            }
        }
    }

    #[test]
    fn scalar_time_norms() {
        let part = TimePartition::uniform(1.0, 4).unwrap();
        // g(t) = t: L^2 norm = 1/sqrt(3)
        let g = project_pi_k(&|t| t, &part, 1);
        let n2 = g.ls_norm(Exponent::Finite(2.0), 4);
        assert_relative_eq!(n2, 1.0 / 3f64.sqrt(), epsilon = 1e-12);
        // constant in time: all s give |v| T^(1/s), here with T = 2
        let part2 = TimePartition::uniform(2.0, 4).unwrap();
        let c = project_pi_k(&|_| 2.5, &part2, 1);
        for s in [1.0, 2.0, 3.0] {
            assert_relative_eq!(
                c.ls_norm(Exponent::Finite(s), 4),
                2.5 * 2f64.powf(1.0 / s),
                epsilon = 1e-12
            );
        }
        assert_relative_eq!(c.ls_norm(Exponent::Inf, 4), 2.5, epsilon = 1e-14);
    }

    #[test]
    fn hoelder_consistency() {
        let part = TimePartition::uniform(2.0, 5).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(12);
        for _ in 0..20 {
            let vals: Vec<Vec<f64>> = (0..5)
                .map(|_| (0..3).map(|_| rng.gen_range(-2.0..2.0)).collect())
                .collect();
            let g = PiecewiseTimePoly {
                part: part.clone(),
                basis: TemporalBasis::new(2),
                values: vals,
            };
            let n1 = g.ls_norm(Exponent::Finite(1.0), 6);
            let n2 = g.ls_norm(Exponent::Finite(2.0), 6);
            assert!(n1 <= 2f64.sqrt() * n2 * (1.0 + 1e-9));
        }
    }

    #[test]
    fn sup_norm_matches_dense_sampling() {
        let space = Arc::new(build_space(DomainKind::UnitInterval, 16, 1).unwrap());
        let part = TimePartition::uniform(1.0, 6).unwrap();
        let u0 = |x: Point| (PI * x[0]).sin() + 0.4 * (3.0 * PI * x[0]).sin();
        for q in 1..=2 {
            let sol = dg_solve(&space, &part, q, Some(&u0), None).unwrap();
            let spec = NormSpec::new(Exponent::Inf, Exponent::Finite(2.0));
            let sampled = solution_norm(&sol, &spec, SolQuantity::Value).unwrap();
            // dense 50-point oracle
            let mut dense = 0.0f64;
            for m in 1..=6 {
                for i in 0..=50 {
                    let s = i as f64 / 50.0;
                    let v = sol.eval_interval(m, s, Quantity::Value);
                    let norm = ops::lp_norm(
                        &space,
                        &DiscreteFunction { values: v },
                        Exponent::Finite(2.0),
                        NormMode::Quadrature,
                    )
                    .unwrap();
                    dense = dense.max(norm);
                }
            }
            assert!(
                (sampled - dense).abs() <= 1e-3 * dense,
                "q={q}: {sampled} vs {dense}"
            );
            assert!(sampled >= dense * (1.0 - 1e-9), "sampler is a lower bound");
        }
    }

    #[test]
    fn error_norm_zero_for_own_interpolant() {
        let space = Arc::new(build_space(DomainKind::UnitInterval, 8, 1).unwrap());
        let part = TimePartition::uniform(1.0, 4).unwrap();
        let sol = dg_solve(&space, &part, 1, Some(&|x: Point| (PI * x[0]).sin()), None).unwrap();
        // evaluate the discrete solution itself as the "exact" function
        let space2 = space.clone();
        let u = move |t: f64, x: Point| {
            let m = part.interval_of(t).unwrap();
            let s = (t - part.node(m - 1)) / part.step(m);
            let v = sol.eval_interval(m, s, Quantity::Value);
            // piecewise-linear evaluation at x
            let n = 8;
            let h = 1.0 / n as f64;
            let cell = ((x[0] / h).floor() as usize).min(n - 1);
            let sx = (x[0] - cell as f64 * h) / h;
            space2.eval_in_cell(&v, cell, [sx, 0.0])
        };
        let part2 = TimePartition::uniform(1.0, 4).unwrap();
        let sol2 = dg_solve(&space, &part2, 1, Some(&|x: Point| (PI * x[0]).sin()), None).unwrap();
        let spec = NormSpec::new(Exponent::Finite(2.0), Exponent::Finite(2.0));
        let err = error_norm(&u, &sol2, &spec).unwrap();
        assert!(err < 1e-11, "self-error {err}");
    }

    #[test]
    fn jump_functional_zero_solution() {
        let space = Arc::new(build_space(DomainKind::UnitInterval, 8, 1).unwrap());
        let part = TimePartition::uniform(1.0, 4).unwrap();
        let sol = dg_solve(&space, &part, 0, None, None).unwrap();
        let spec = NormSpec::new(Exponent::Finite(2.0), Exponent::Finite(2.0));
        assert_eq!(
            jump_functional(&sol, &spec, JumpConvention::Inhomogeneous).unwrap(),
            0.0
        );
    }
}
