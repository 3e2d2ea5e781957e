//! Operator-level functionality on a finite element space: projections,
//! the discrete Laplacian, `L^p` norms, complex resolvent solves, and
//! generalized eigenpairs of the (stiffness, mass) pencil.

use super::{DiscreteFunction, FeSpace, Point, SpatialFn};
use crate::error::{Error, Result};
use nalgebra::{Complex, DMatrix, DVector};
use num_complex::Complex64;

/// Spatial exponent or `infinity`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Exponent {
    Finite(f64),
    Inf,
}

impl Exponent {
    pub fn validate(self) -> Result<Self> {
        match self {
            Exponent::Finite(p) if !(p >= 1.0) || !p.is_finite() => Err(Error::Domain {
                name: "exponent",
                detail: format!("need 1 <= p <= inf, got {p}"),
            }),
            other => Ok(other),
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("inf") || s.eq_ignore_ascii_case("infinity") {
            return Ok(Exponent::Inf);
        }
        s.parse::<f64>()
            .map_err(|e| Error::Domain {
                name: "exponent",
                detail: format!("{s:?}: {e}"),
            })
            .and_then(|p| Exponent::Finite(p).validate())
    }
}

impl std::fmt::Display for Exponent {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Exponent::Finite(p) => write!(f, "{p}"),
            Exponent::Inf => write!(f, "inf"),
        }
    }
}

/// How the spatial `L^p` norm is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormMode {
    /// Per-cell Gauss quadrature of `|v|^p` (for `p = inf`, max over
    /// quadrature and dof points).
    Quadrature,
    /// Weighted dof sums with the mass row sums as weights.
    Lumped,
}

/// `L^2` projection: solves `M c = (f, phi_i)`.
pub fn l2_project(space: &FeSpace, f: &(dyn Fn(Point) -> f64 + Sync)) -> DiscreteFunction {
    let load = space.load_vector(f);
    DiscreteFunction {
        values: space.mass_factor().solve(&load),
    }
}

/// Ritz projection: solves `A c = (grad u, grad phi_i)`; `u` must vanish on
/// the boundary and carry an analytic gradient.
pub fn ritz_project(space: &FeSpace, u: &SpatialFn) -> Result<DiscreteFunction> {
    let grad = u.gradient.ok_or_else(|| {
        Error::Usage("ritz_project needs an analytic gradient".to_string())
    })?;
    let mut load = DVector::zeros(space.num_interior());
    for cell in 0..space.num_cells() {
        for (x, w, r) in space.cell_quadrature(cell) {
            let g = grad(x);
            let grads = space.shape_gradients(cell, r);
            for (a, &gl) in space.cell_dofs(cell).iter().enumerate() {
                if let Some(i) = space.interior_index(gl) {
                    load[i] += w * (g[0] * grads[a][0] + g[1] * grads[a][1]);
                }
            }
        }
    }
    let lu = space.stiffness.factorize()?;
    Ok(DiscreteFunction {
        values: lu.solve(&load),
    })
}

/// `Delta_h v = -M^-1 A v`.
pub fn apply_discrete_laplacian(space: &FeSpace, v: &DiscreteFunction) -> DiscreteFunction {
    DiscreteFunction {
        values: apply_discrete_laplacian_vec(space, &v.values),
    }
}

pub fn apply_discrete_laplacian_vec(space: &FeSpace, v: &DVector<f64>) -> DVector<f64> {
    -space.mass_factor().solve(&space.stiffness.matvec(v))
}

/// `L^p` norm of a finite element function.
pub fn lp_norm(space: &FeSpace, v: &DiscreteFunction, p: Exponent, mode: NormMode) -> Result<f64> {
    let p = p.validate()?;
    assert_eq!(v.values.len(), space.num_interior());
    match (p, mode) {
        (Exponent::Inf, NormMode::Lumped) => Ok(v.values.amax()),
        (Exponent::Finite(p), NormMode::Lumped) => {
            let sum: f64 = space
                .lumped
                .iter()
                .zip(v.values.iter())
                .map(|(w, x)| w * x.abs().powf(p))
                .sum();
            Ok(sum.powf(1.0 / p))
        }
        (Exponent::Inf, NormMode::Quadrature) => {
            let mut best = v.values.amax(); // dof points
            let q = space.quad();
            for cell in 0..space.num_cells() {
                for j in 0..q.per_cell {
                    best = best.max(space.eval_at_qp(&v.values, cell, j).abs());
                }
            }
            Ok(best)
        }
        (Exponent::Finite(p), NormMode::Quadrature) => {
            let mut sum = 0.0;
            let q = space.quad();
            for cell in 0..space.num_cells() {
                for j in 0..q.per_cell {
                    sum += q.weight(cell, j) * space.eval_at_qp(&v.values, cell, j).abs().powf(p);
                }
            }
            Ok(sum.powf(1.0 / p))
        }
    }
}

/// `L^p` norm of an arbitrary spatial callable by quadrature (for `p = inf`,
/// max over quadrature points and interior dof coordinates).
pub fn lp_norm_callable(
    space: &FeSpace,
    f: &(dyn Fn(Point) -> f64 + Sync),
    p: Exponent,
) -> Result<f64> {
    let q = space.quad();
    match p.validate()? {
        Exponent::Inf => {
            let mut best: f64 = 0.0;
            for x in space.interior_coords() {
                best = best.max(f(x).abs());
            }
            for cell in 0..space.num_cells() {
                for j in 0..q.per_cell {
                    best = best.max(f(q.phys(cell, j)).abs());
                }
            }
            Ok(best)
        }
        Exponent::Finite(p) => {
            let mut sum = 0.0;
            for cell in 0..space.num_cells() {
                for j in 0..q.per_cell {
                    sum += q.weight(cell, j) * f(q.phys(cell, j)).abs().powf(p);
                }
            }
            Ok(sum.powf(1.0 / p))
        }
    }
}

/// `sqrt(v' M v)` - the exact `L^2` norm of the FE function.
pub fn m_norm(space: &FeSpace, v: &DVector<f64>) -> f64 {
    v.dot(&space.mass.matvec(v)).max(0.0).sqrt()
}

/// Solve `(z + Delta_h) u = g`, i.e. `(z M - A) u = M g`, for complex `z`.
pub fn solve_resolvent(
    space: &FeSpace,
    z: Complex64,
    g: &DVector<Complex64>,
) -> Result<DVector<Complex64>> {
    let n = space.num_interior();
    assert_eq!(g.len(), n);
    // exact spectrum proximity check at desk scale
    if n <= 2048 {
        for &lambda in space.spectrum() {
            let dist = (z - Complex64::new(lambda, 0.0)).norm();
            if dist < 1e-12 {
                return Err(Error::NearSingular {
                    z,
                    eigenvalue: lambda,
                    distance: dist,
                });
            }
        }
    }
    let sys = resolvent_matrix(space, z);
    let mg = complex_mass_apply(space, g);
    let lu = sys.clone().lu();
    let u = lu
        .solve(&mg)
        .ok_or_else(|| Error::Solver(format!("singular resolvent system at z = {z}")))?;
    let residual = (&sys * &u - &mg).camax();
    let scale = mg.camax().max(f64::MIN_POSITIVE);
    if residual > 1e-10 * scale {
        return Err(Error::Solver(format!(
            "resolvent residual {residual:.3e} above 1e-10 relative at z = {z}"
        )));
    }
    Ok(u)
}

/// Dense `z M - A` as a complex matrix.
pub fn resolvent_matrix(space: &FeSpace, z: Complex64) -> DMatrix<Complex64> {
    let n = space.num_interior();
    let mut sys = DMatrix::<Complex64>::zeros(n, n);
    for (i, j, v) in space.mass.triplets() {
        sys[(i, j)] += z * v;
    }
    for (i, j, v) in space.stiffness.triplets() {
        sys[(i, j)] -= Complex64::new(v, 0.0);
    }
    sys
}

pub fn complex_mass_apply(space: &FeSpace, g: &DVector<Complex64>) -> DVector<Complex64> {
    let re = space.mass.matvec(&g.map(|c| c.re));
    let im = space.mass.matvec(&g.map(|c| c.im));
    DVector::from_fn(g.len(), |i, _| Complex64::new(re[i], im[i]))
}

/// First `count` generalized eigenpairs of `A v = lambda M v`, ascending,
/// `M`-orthonormal. Dense transformation through the Cholesky factor of `M`.
pub fn generalized_eigenpairs(
    space: &FeSpace,
    count: usize,
) -> Result<Vec<(f64, DiscreteFunction)>> {
    let n = space.num_interior();
    if count > n {
        return Err(Error::Domain {
            name: "count",
            detail: format!("asked for {count} eigenpairs, space has {n} interior dofs"),
        });
    }
    let m = space.mass.to_dense();
    let a = space.stiffness.to_dense();
    let chol = m
        .cholesky()
        .ok_or_else(|| Error::Solver("mass matrix not SPD".to_string()))?;
    let l = chol.l();
    // B = L^-1 A L^-T, symmetric
    let y = l
        .solve_lower_triangular(&a)
        .ok_or_else(|| Error::Solver("singular Cholesky factor".to_string()))?;
    let b = l
        .solve_lower_triangular(&y.transpose())
        .ok_or_else(|| Error::Solver("singular Cholesky factor".to_string()))?
        .transpose();
    let b = (&b + b.transpose()) * 0.5;
    let eig = b.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].partial_cmp(&eig.eigenvalues[j]).unwrap());
    let mut pairs = Vec::with_capacity(count);
    for &idx in order.iter().take(count) {
        let y_col = eig.eigenvectors.column(idx).into_owned();
        let mut v = l
            .tr_solve_lower_triangular(&y_col)
            .ok_or_else(|| Error::Solver("singular Cholesky factor".to_string()))?;
        // deterministic sign: first component of magnitude > 1e-8 is positive
        if let Some(first) = v.iter().find(|x| x.abs() > 1e-8) {
            if *first < 0.0 {
                v.neg_mut();
            }
        }
        pairs.push((eig.eigenvalues[idx], DiscreteFunction { values: v }));
    }
    Ok(pairs)
}

/// Operator `p`-norm of `(z + Delta_h)^-1` on the lumped norm, exact via
/// weighted column/row sums of the dense inverse applied to `M`.
pub fn resolvent_opnorm_lumped(space: &FeSpace, z: Complex64, p: Exponent) -> Result<f64> {
    let n = space.num_interior();
    let sys = resolvent_matrix(space, z);
    let lu = sys.lu();
    // R = (zM - A)^-1 M, column by column
    let mut r = DMatrix::<Complex64>::zeros(n, n);
    for j in 0..n {
        let mcol = DVector::from_fn(n, |i, _| Complex::from(space.mass.get(i, j)));
        let col = lu
            .solve(&mcol)
            .ok_or_else(|| Error::Solver(format!("singular resolvent system at z = {z}")))?;
        r.set_column(j, &col);
    }
    match p.validate()? {
        Exponent::Inf => {
            // max_i sum_j |R_ij|
            let mut best: f64 = 0.0;
            for i in 0..n {
                let s: f64 = (0..n).map(|j| r[(i, j)].norm()).sum();
                best = best.max(s);
            }
            Ok(best)
        }
        Exponent::Finite(p) if (p - 1.0).abs() < 1e-12 => {
            // max_j (sum_i w_i |R_ij|) / w_j
            let mut best: f64 = 0.0;
            for j in 0..n {
                let s: f64 = (0..n).map(|i| space.lumped[i] * r[(i, j)].norm()).sum();
                best = best.max(s / space.lumped[j]);
            }
            Ok(best)
        }
        other => Err(Error::Capability(format!(
            "lumped resolvent operator norm implemented for p = 1 and p = inf, got {other}"
        ))),
    }
}

/// Operator 2-norm of `(z + Delta_h)^-1` in the `M`-inner product from the
/// spectral formula `max_i |z - lambda_i|^-1`.
pub fn resolvent_opnorm2_spectral(space: &FeSpace, z: Complex64) -> f64 {
    space
        .spectrum()
        .iter()
        .map(|&l| 1.0 / (z - Complex64::new(l, 0.0)).norm())
        .fold(0.0, f64::max)
}

/// Power iteration on `B* B` (with `B = (z + Delta_h)^-1` and the adjoint
/// taken in the `M`-inner product) for the same operator 2-norm.
pub fn resolvent_opnorm2_power(space: &FeSpace, z: Complex64, seed: u64) -> Result<f64> {
    use rand::{Rng, SeedableRng};
    let n = space.num_interior();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut u = DVector::from_fn(n, |_, _| {
        Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
    });
    let lu = resolvent_matrix(space, z).lu();
    let lu_adj = resolvent_matrix(space, z.conj()).lu();
    let m_inner = |a: &DVector<Complex64>, b: &DVector<Complex64>| -> Complex64 {
        complex_mass_apply(space, a).dot(&b.map(|c| c.conj()))
    };
    let mut prev = 0.0f64;
    for it in 0..100_000 {
        let w = lu
            .solve(&complex_mass_apply(space, &u))
            .ok_or_else(|| Error::Solver("power iteration solve failed".to_string()))?;
        let v = lu_adj
            .solve(&complex_mass_apply(space, &w))
            .ok_or_else(|| Error::Solver("power iteration solve failed".to_string()))?;
        // Rayleigh quotient of B*B: <v, u>_M / <u, u>_M
        let sigma2 = m_inner(&v, &u).re / m_inner(&u, &u).re;
        let sigma = sigma2.max(0.0).sqrt();
        if it > 3 && (sigma - prev).abs() <= 1e-13 * sigma.max(1e-300) {
            return Ok(sigma);
        }
        prev = sigma;
        let scale = m_inner(&v, &v).re.sqrt();
        u = v / Complex64::new(scale.max(f64::MIN_POSITIVE), 0.0);
    }
    Ok(prev)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spatial::{build_space, DomainKind};
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use std::f64::consts::PI;

    #[test]
    fn l2_projection_reproduces_fe_functions() {
        let s = build_space(DomainKind::UnitInterval, 8, 1).unwrap();
        // nodal interpolant of x(1-x) is itself an FE function
        let coeffs: Vec<f64> = s.interior_coords().map(|x| x[0] * (1.0 - x[0])).collect();
        let f = move |x: Point| {
            // piecewise linear interpolant of x(1-x) at the nodes
            let h = 1.0 / 8.0;
            let i = ((x[0] / h).floor() as usize).min(7);
            let (xa, xb) = (i as f64 * h, (i + 1) as f64 * h);
            let (va, vb) = (xa * (1.0 - xa), xb * (1.0 - xb));
            va + (vb - va) * (x[0] - xa) / (xb - xa)
        };
        let p = l2_project(&s, &f);
        for (i, c) in coeffs.iter().enumerate() {
            assert_relative_eq!(p.values[i], *c, epsilon = 1e-12);
        }
        let zero = l2_project(&s, &|_x| 0.0);
        assert_eq!(zero.values.amax(), 0.0);
    }

    #[test]
    fn l2_projection_second_order() {
        let mut pts = Vec::new();
        for n in [16usize, 32, 64, 128] {
            let s = build_space(DomainKind::UnitInterval, n, 1).unwrap();
            let p = l2_project(&s, &|x: Point| (PI * x[0]).sin());
            let h = 1.0 / n as f64;
            let err = lp_norm_callable(
                &s,
                &|x| {
                    let i = ((x[0] / h).floor() as usize).min(n - 1);
                    let sloc = (x[0] - i as f64 * h) / h;
                    s.eval_in_cell(&p.values, i, [sloc, 0.0]) - (PI * x[0]).sin()
                },
                Exponent::Finite(2.0),
            )
            .unwrap();
            pts.push((h.ln(), err.ln()));
        }
        let slope = crate::lab::fit_slope(&pts);
        assert!((slope - 2.0).abs() < 0.1, "slope {slope}");
    }

    #[test]
    fn ritz_projection_is_nodal_interpolant_1d() {
        let s = build_space(DomainKind::UnitInterval, 32, 1).unwrap();
        let u = SpatialFn {
            value: &|x| x[0] * (1.0 - x[0]),
            gradient: Some(&|x| [1.0 - 2.0 * x[0], 0.0]),
        };
        let r = ritz_project(&s, &u).unwrap();
        for (i, x) in s.interior_coords().enumerate() {
            assert_relative_eq!(r.values[i], x[0] * (1.0 - x[0]), epsilon = 1e-12);
        }
    }

    #[test]
    fn laplacian_on_single_dof() {
        let s = build_space(DomainKind::UnitInterval, 2, 1).unwrap();
        let v = DiscreteFunction {
            values: DVector::from_element(1, 1.0),
        };
        let lap = apply_discrete_laplacian(&s, &v);
        assert_relative_eq!(lap.values[0], -12.0, max_relative = 1e-13);
    }

    #[test]
    fn laplacian_matches_eigenpairs() {
        let s = build_space(DomainKind::UnitInterval, 16, 1).unwrap();
        let pairs = generalized_eigenpairs(&s, 5).unwrap();
        for (lambda, v) in &pairs {
            let lap = apply_discrete_laplacian(&s, v);
            let diff = (&lap.values + &v.values * *lambda).amax();
            assert!(diff <= 1e-10 * lambda.max(1.0), "lambda={lambda}");
        }
    }

    #[test]
    fn eigenvalues_match_closed_form_1d() {
        let n = 24;
        let s = build_space(DomainKind::UnitInterval, n, 1).unwrap();
        let h = 1.0 / n as f64;
        let pairs = generalized_eigenpairs(&s, n - 1).unwrap();
        for (i, (lambda, _)) in pairs.iter().enumerate() {
            let th = ((i + 1) as f64 * PI * h).cos();
            let expect = 6.0 / (h * h) * (1.0 - th) / (2.0 + th);
            assert_relative_eq!(*lambda, expect, max_relative = 1e-9);
        }
    }

    #[test]
    fn eigenpairs_m_orthonormal() {
        let s = build_space(DomainKind::UnitSquare, 4, 1).unwrap();
        let pairs = generalized_eigenpairs(&s, s.num_interior()).unwrap();
        for (i, (_, vi)) in pairs.iter().enumerate() {
            for (j, (_, vj)) in pairs.iter().enumerate() {
                let ip = vi.values.dot(&s.mass.matvec(&vj.values));
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((ip - expect).abs() < 1e-10, "({i},{j}): {ip}");
            }
        }
    }

    #[test]
    fn lp_norm_p2_equals_mass_quadratic_form() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for (dom, n, r) in [
            (DomainKind::UnitInterval, 8, 1),
            (DomainKind::UnitInterval, 6, 2),
            (DomainKind::UnitSquare, 4, 1),
        ] {
            let s = build_space(dom, n, r).unwrap();
            let v = DiscreteFunction {
                values: DVector::from_fn(s.num_interior(), |_, _| rng.gen_range(-1.0..1.0)),
            };
            let nq = lp_norm(&s, &v, Exponent::Finite(2.0), NormMode::Quadrature).unwrap();
            assert_relative_eq!(nq, m_norm(&s, &v.values), epsilon = 1e-12);
        }
    }

    #[test]
    fn lp_norm_hat_function_and_sup() {
        let s = build_space(DomainKind::UnitInterval, 8, 1).unwrap();
        let mut v = s.zero_function();
        v.values[3] = 1.0;
        let n1 = lp_norm(&s, &v, Exponent::Finite(1.0), NormMode::Quadrature).unwrap();
        assert_relative_eq!(n1, 1.0 / 8.0, epsilon = 1e-13);
        let ninf = lp_norm(&s, &v, Exponent::Inf, NormMode::Quadrature).unwrap();
        assert_relative_eq!(ninf, 1.0, epsilon = 1e-13);
        assert!(lp_norm(&s, &v, Exponent::Finite(0.5), NormMode::Quadrature).is_err());
    }

    #[test]
    fn resolvent_scalar_case() {
        // single dof: (zM - A) u = M g with M = 1/3, A = 4 at z = -1
        let s = build_space(DomainKind::UnitInterval, 2, 1).unwrap();
        let g = DVector::from_element(1, Complex64::new(1.0, 0.0));
        let u = solve_resolvent(&s, Complex64::new(-1.0, 0.0), &g).unwrap();
        assert_relative_eq!(u[0].re, -1.0 / 13.0, epsilon = 1e-12);
        assert_relative_eq!(u[0].im, 0.0, epsilon = 1e-14);
    }

    #[test]
    fn resolvent_spectral_identity() {
        let s = build_space(DomainKind::UnitInterval, 12, 1).unwrap();
        let pairs = generalized_eigenpairs(&s, 3).unwrap();
        let (lambda, v) = &pairs[1];
        let z = Complex64::new(-2.0, 1.5);
        let g = v.values.map(|x| Complex64::new(x, 0.0));
        let u = solve_resolvent(&s, z, &g).unwrap();
        let expect = g.clone() / (z - Complex64::new(*lambda, 0.0));
        assert!((&u - &expect).camax() < 1e-10);
        // zero data gives zero
        let zero = DVector::from_element(s.num_interior(), Complex64::ZERO);
        let uz = solve_resolvent(&s, z, &zero).unwrap();
        assert_eq!(uz.camax(), 0.0);
    }

    #[test]
    fn resolvent_near_eigenvalue_rejected() {
        let s = build_space(DomainKind::UnitInterval, 8, 1).unwrap();
        let lambda = s.spectrum()[0];
        let g = DVector::from_element(s.num_interior(), Complex64::new(1.0, 0.0));
        let res = solve_resolvent(&s, Complex64::new(lambda, 0.0), &g);
        assert!(matches!(res, Err(Error::NearSingular { .. })));
    }

    #[test]
    fn power_iteration_matches_spectral_formula() {
        let s = build_space(DomainKind::UnitInterval, 16, 1).unwrap();
        for z in [
            Complex64::new(-3.0, 4.0),
            Complex64::new(0.0, 50.0),
            Complex64::new(-100.0, 0.0),
        ] {
            let spectral = resolvent_opnorm2_spectral(&s, z);
            let power = resolvent_opnorm2_power(&s, z, 11).unwrap();
            assert!(
                (spectral - power).abs() <= 1e-8 * spectral,
                "z={z}: {spectral} vs {power}"
            );
        }
    }

    /// Lumped and quadrature norms are uniformly equivalent on the shipped
    /// mesh families; the observed ratio stays well inside [1/3, 3].
    #[test]
    fn lumped_quadrature_equivalence() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for (dom, n, r) in [
            (DomainKind::UnitInterval, 16, 1),
            (DomainKind::UnitInterval, 8, 2),
            (DomainKind::UnitSquare, 6, 1),
        ] {
            let s = build_space(dom, n, r).unwrap();
            for p in [Exponent::Finite(1.0), Exponent::Finite(2.0), Exponent::Inf] {
                let mut lo = f64::INFINITY;
                let mut hi = 0.0f64;
                for _ in 0..100 {
                    let v = DiscreteFunction {
                        values: DVector::from_fn(s.num_interior(), |_, _| {
                            rng.gen_range(-1.0..1.0)
                        }),
                    };
                    let l = lp_norm(&s, &v, p, NormMode::Lumped).unwrap();
                    let q = lp_norm(&s, &v, p, NormMode::Quadrature).unwrap();
                    let ratio = l / q;
                    lo = lo.min(ratio);
                    hi = hi.max(ratio);
                }
                assert!(
                    lo >= 1.0 / 3.0 && hi <= 3.0,
                    "{dom:?} r={r} p={p}: ratio in [{lo}, {hi}]"
                );
            }
        }
    }
}
