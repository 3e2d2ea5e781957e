//! Maximal-regularity scan for the forced problem with `u_0 = 0`: the sum of
//! `||d_t u||`, `||Delta_h u||` and the jump functional in `L^s(I; L^p)` is
//! bounded by `C (1 + ln(T/k)) ||f||_{L^s(I; L^p)}`; the scan records the
//! normalized ratio per level and checks it does not drift.

use super::{boundedness_assertion, realize_forcing, scale_invariance_assertion, Forcing};
use crate::error::Result;
use crate::norms::{
    callable_norm, jump_functional, solution_norm, spacetime_norm_of, NormSpec, SolQuantity,
};
use crate::rational::derive_family;
use crate::report::{Assertion, Cell, ExperimentReport};
use crate::spatial::ops::Exponent;
use crate::spatial::FeSpace;
use crate::stepper::{dg_solve_coeffs, JumpConvention, TemporalBasis};
use crate::time_partition::TimePartition;
use nalgebra::DVector;
use std::sync::Arc;

pub struct MaxregConfig {
    pub q: usize,
    pub grid: Vec<(Exponent, Exponent)>,
    pub forcing: Forcing,
    pub levels: usize,
    pub base_m: usize,
    pub horizon: f64,
    pub seed: u64,
    /// Also record the ratio against the lowered log power
    /// `(1 + ln(T/k))^{|s-2|/s}` when `p = 2` (recorded, never asserted).
    pub lowered_log: bool,
}

impl Default for MaxregConfig {
    fn default() -> Self {
        let es = [Exponent::Finite(1.0), Exponent::Finite(2.0), Exponent::Inf];
        let mut grid = Vec::new();
        for s in es {
            for p in es {
                grid.push((s, p));
            }
        }
        MaxregConfig {
            q: 0,
            grid,
            forcing: Forcing::Polynomial,
            levels: 4,
            base_m: 64,
            horizon: 1.0,
            seed: 0,
            lowered_log: true,
        }
    }
}

pub fn run_maxreg_scan(space: &Arc<FeSpace>, config: &MaxregConfig) -> Result<ExperimentReport> {
    let mut report = ExperimentReport::new(
        "maxreg",
        &[
            "level",
            "M",
            "k",
            "f",
            "s",
            "p",
            "dt_term",
            "laplacian_term",
            "jump_term",
            "f_norm",
            "ratio",
            "lowered_log_ratio",
        ],
    );
    report.meta("seed", config.seed);
    report.meta("q", config.q);
    report.meta("dim", space.mesh.dim);
    report.meta("n", space.n_side);
    report.meta("forcing", config.forcing.label());
    report.meta("horizon", config.horizon);
    report.meta("normalization", "1 + ln(T/k)");
    report.meta("drift_factor", 1.25);
    report.meta("mesh_params", "uniform: c=1, beta=1, kappa=1");

    let mut ratios = vec![Vec::new(); config.grid.len()];
    let mut scale_check: Option<(f64, f64)> = None;

    for level in 0..config.levels {
        let m_count = config.base_m << level;
        let part = TimePartition::uniform(config.horizon, m_count)?;
        let k = part.max_step();
        let log_factor = 1.0 + (config.horizon / k).ln();
        let forcing = realize_forcing(config.forcing, space, &part, config.seed, 1.0)?;
        let zero = DVector::zeros(space.num_interior());
        let sol = dg_solve_coeffs(space, &part, config.q, zero.clone(), Some(forcing.f.as_ref()))?;

        for (gi, (s, p)) in config.grid.iter().enumerate() {
            let spec = NormSpec::new(*s, *p);
            let dt_term = solution_norm(&sol, &spec, SolQuantity::TimeDerivative)?;
            let lap_term = solution_norm(&sol, &spec, SolQuantity::Laplacian)?;
            let jump_term = jump_functional(&sol, &spec, JumpConvention::Inhomogeneous)?;
            let f_norm = callable_norm(space, &part, &spec, config.q, forcing.f.as_ref())?;
            let ratio = (dt_term + lap_term + jump_term) / (log_factor * f_norm);
            ratios[gi].push(ratio);
            let lowered = if config.lowered_log && matches!(p, Exponent::Finite(pe) if (pe - 2.0).abs() < 1e-12)
            {
                let expo = match s {
                    Exponent::Inf => 1.0,
                    Exponent::Finite(se) => (se - 2.0).abs() / se,
                };
                Cell::Float(
                    (dt_term + lap_term + jump_term) / (log_factor.powf(expo) * f_norm),
                )
            } else {
                Cell::Str(String::new())
            };
            report.push_row(vec![
                level.into(),
                m_count.into(),
                k.into(),
                config.forcing.label().into(),
                s.to_string().into(),
                p.to_string().into(),
                dt_term.into(),
                lap_term.into(),
                jump_term.into(),
                f_norm.into(),
                ratio.into(),
                lowered,
            ]);

            if gi == 0 && level == 0 {
                let forcing10 = realize_forcing(config.forcing, space, &part, config.seed, 10.0)?;
                let sol10 =
                    dg_solve_coeffs(space, &part, config.q, zero.clone(), Some(forcing10.f.as_ref()))?;
                let dt10 = solution_norm(&sol10, &spec, SolQuantity::TimeDerivative)?;
                let lap10 = solution_norm(&sol10, &spec, SolQuantity::Laplacian)?;
                let jump10 = jump_functional(&sol10, &spec, JumpConvention::Inhomogeneous)?;
                let f10 = callable_norm(space, &part, &spec, config.q, forcing10.f.as_ref())?;
                scale_check = Some((ratio, (dt10 + lap10 + jump10) / (log_factor * f10)));
            }
        }

        // single-eigenmode constant-in-time forcing admits the scalar oracle;
        // the comparison needs p = 2 so that the M-orthonormal mode has unit
        // spatial norm and the L^p factor drops out of every term
        let oracle_sp = config.grid.iter().find(
            |(_, p)| matches!(p, Exponent::Finite(pe) if (pe - 2.0).abs() < 1e-12),
        );
        if let (Forcing::EigenmodeConstant(_), Some(lambda), Some(&(s, p))) =
            (config.forcing, forcing.eigenvalue, oracle_sp)
        {
            let spec = NormSpec::new(s, p);
            let measured = solution_norm(&sol, &spec, SolQuantity::Laplacian)?
                + solution_norm(&sol, &spec, SolQuantity::TimeDerivative)?
                + jump_functional(&sol, &spec, JumpConvention::Inhomogeneous)?;
            let predicted = scalar_maxreg_sum(config.q, &part, lambda, s)?;
            let diff = (measured - predicted).abs();
            report.assertions.push(Assertion {
                name: format!("scalar_oracle_level{level}"),
                passed: diff <= 1e-8 * predicted.abs().max(1e-8),
                value: diff,
                bound: 1e-8 * predicted.abs().max(1e-8),
                detail: format!("measured {measured}, scalar recursion {predicted}"),
            });
        }
    }

    for (gi, (s, p)) in config.grid.iter().enumerate() {
        report.assertions.push(boundedness_assertion(
            format!("bounded_s{}_p{}", s, p),
            &ratios[gi],
        ));
    }
    if let Some((base, scaled)) = scale_check {
        report
            .assertions
            .push(scale_invariance_assertion("scale_invariance", base, scaled));
    }
    Ok(report)
}

/// Scalar-recursion value of the three-term left-hand side for the forcing
/// `f = v_lambda` (constant in time), normalized the same way as the
/// measured terms; valid because the solve stays in the single mode:
/// `c^m_l = r_{l,0}(z) c^{m-1} + k sum_j r_{l,j}(z) w_j` with
/// `w_j = int_0^1 psi_j`, and the `L^p(Omega)` factor `||v||_p` cancels
/// between the terms and `||f||` in the full ratio (not in this sum, which
/// is compared against a measured solve of the same data).
fn scalar_maxreg_sum(
    q: usize,
    part: &TimePartition,
    lambda: f64,
    s: Exponent,
) -> Result<f64> {
    let fam = derive_family(q)?;
    let basis = TemporalBasis::new(q);
    let tabs = crate::exact::temporal_tables(q);
    let psi_integrals: Vec<f64> = tabs
        .psi
        .iter()
        .map(|p| crate::rational::q_to_f64(&p.integral_01()))
        .collect();
    let m_count = part.num_intervals();
    let mut coeffs: Vec<Vec<f64>> = Vec::with_capacity(m_count);
    let mut prev = 0.0f64;
    for m in 1..=m_count {
        let k = part.step(m);
        let z = k * lambda;
        let c: Vec<f64> = (0..=q)
            .map(|l| {
                let mut v = fam.eval_homog_real(l, z) * prev;
                for j in 0..=q {
                    v += k * fam.eval_force_real(l, j, z) * psi_integrals[j];
                }
                v
            })
            .collect();
        prev = (0..=q).map(|l| c[l] * basis.e1[l]).sum();
        coeffs.push(c);
    }
    let poly = |m: usize, sl: f64| -> f64 {
        (0..=q).map(|l| coeffs[m - 1][l] * basis.psi_at(l, sl)).sum()
    };
    let n_pts = q + 3;
    let lap = spacetime_norm_of(part, n_pts, s, &|m, sl, _t| lambda * poly(m, sl).abs());
    let dt = spacetime_norm_of(part, n_pts, s, &|m, sl, _t| {
        let k = part.step(m);
        ((0..=q).map(|l| coeffs[m - 1][l] * basis.dpsi_at(l, sl)).sum::<f64>() / k).abs()
    });
    let jump = {
        let mut terms = Vec::new();
        for m in 1..=m_count {
            let minus = if m == 1 { 0.0 } else { poly(m - 1, 1.0) };
            let k = part.step(m);
            terms.push((k, (poly(m, 0.0) - minus).abs() / k));
        }
        match s {
            Exponent::Inf => terms.iter().map(|(_, v)| *v).fold(0.0, f64::max),
            Exponent::Finite(se) => terms
                .iter()
                .map(|(k, v)| k * v.powf(se))
                .sum::<f64>()
                .powf(1.0 / se),
        }
    };
    Ok(lap + dt + jump)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spatial::{build_space, DomainKind};

    #[test]
    fn eigenmode_forcing_matches_scalar_recursion() {
        let space = Arc::new(build_space(DomainKind::UnitInterval, 12, 1).unwrap());
        let config = MaxregConfig {
            q: 0,
            grid: vec![(Exponent::Finite(2.0), Exponent::Finite(2.0))],
            forcing: Forcing::EigenmodeConstant(3),
            levels: 2,
            base_m: 8,
            ..Default::default()
        };
        let report = run_maxreg_scan(&space, &config).unwrap();
        let oracle_assertions: Vec<_> = report
            .assertions
            .iter()
            .filter(|a| a.name.starts_with("scalar_oracle"))
            .collect();
        assert_eq!(oracle_assertions.len(), 2);
        for a in oracle_assertions {
            assert!(a.passed, "{}: {}", a.name, a.detail);
        }
    }

    #[test]
    fn zero_forcing_gives_zero_terms() {
        let space = Arc::new(build_space(DomainKind::UnitInterval, 8, 1).unwrap());
        let part = TimePartition::uniform(1.0, 8).unwrap();
        let zero = DVector::zeros(space.num_interior());
        let sol = dg_solve_coeffs(&space, &part, 1, zero, Some(&|_t, _x| 0.0)).unwrap();
        let spec = NormSpec::new(Exponent::Finite(2.0), Exponent::Finite(2.0));
        assert_eq!(solution_norm(&sol, &spec, SolQuantity::Laplacian).unwrap(), 0.0);
        assert_eq!(
            jump_functional(&sol, &spec, JumpConvention::Inhomogeneous).unwrap(),
            0.0
        );
    }

    #[test]
    fn polynomial_forcing_ratios_bounded() {
        let space = Arc::new(build_space(DomainKind::UnitInterval, 12, 1).unwrap());
        let config = MaxregConfig {
            q: 1,
            grid: vec![
                (Exponent::Finite(2.0), Exponent::Finite(2.0)),
                (Exponent::Inf, Exponent::Finite(1.0)),
            ],
            forcing: Forcing::Polynomial,
            levels: 3,
            base_m: 32,
            ..Default::default()
        };
        let report = run_maxreg_scan(&space, &config).unwrap();
        assert!(report.all_passed(), "{}", report.to_json_string());
    }
}
