//! Step-to-step non-growth of the homogeneous dG(0) solution:
//! `||u_m||_p <= ||P_h u_0||_p`. Asserted for `p = 2` (a spectral fact of
//! the backward Euler step in the mass norm); recorded for `p` in {1, inf},
//! where the fully discrete analog is a maximum-principle regime question.

use super::{scale_invariance_assertion, InitialData};
use crate::error::{Error, Result};
use crate::report::{Assertion, Cell, ExperimentReport};
use crate::spatial::ops::{lp_norm, Exponent, NormMode};
use crate::spatial::{DiscreteFunction, FeSpace};
use crate::stepper::dg_solve_coeffs;
use crate::time_partition::TimePartition;
use std::sync::Arc;

pub struct MonotonicityConfig {
    pub q: usize,
    pub ps: Vec<Exponent>,
    pub u0s: Vec<InitialData>,
    pub seed: u64,
}

impl Default for MonotonicityConfig {
    fn default() -> Self {
        MonotonicityConfig {
            q: 0,
            ps: vec![Exponent::Finite(1.0), Exponent::Finite(2.0), Exponent::Inf],
            u0s: vec![
                InitialData::Eigenmode(0),
                InitialData::RandomSigns,
                InitialData::Bump,
            ],
            seed: 0,
        }
    }
}

pub fn run_monotonicity_check(
    space: &Arc<FeSpace>,
    part: &TimePartition,
    config: &MonotonicityConfig,
) -> Result<ExperimentReport> {
    if config.q != 0 {
        return Err(Error::Usage(format!(
            "monotonicity check applies to the piecewise-constant scheme only (q = 0), got q = {}",
            config.q
        )));
    }
    let mut report = ExperimentReport::new(
        "monotonic",
        &["u0", "p", "max_ratio", "worst_m", "status", "k_ge_h2"],
    );
    let params = part.params();
    report.meta("seed", config.seed);
    report.meta("mesh_c", params.c);
    report.meta("mesh_beta", params.beta);
    report.meta("mesh_kappa", params.kappa);
    report.meta("dim", space.mesh.dim);
    report.meta("n", space.n_side);
    report.meta("M", part.num_intervals());
    report.meta("norm_mode", "quadrature");
    let regime = part.min_step() >= space.mesh.h * space.mesh.h;
    report.meta("k_ge_h2_regime", regime);

    let mut first_ratio: Option<(f64, f64)> = None;
    for u0 in &config.u0s {
        let (coeffs, _) = u0.realize(space, config.seed)?;
        if coeffs.amax() == 0.0 {
            for p in &config.ps {
                report.push_row(vec![
                    u0.label().into(),
                    p.to_string().into(),
                    Cell::Float(f64::NAN),
                    0usize.into(),
                    "skipped".into(),
                    regime.into(),
                ]);
            }
            continue;
        }
        let sol = dg_solve_coeffs(space, part, 0, coeffs.clone(), None)?;
        let sol_scaled = dg_solve_coeffs(space, part, 0, coeffs * 10.0, None)?;
        for p in &config.ps {
            let denom = lp_norm(
                space,
                &DiscreteFunction {
                    values: sol.initial().clone(),
                },
                *p,
                NormMode::Quadrature,
            )?;
            let mut max_ratio = 0.0f64;
            let mut worst_m = 0usize;
            for m in 1..=part.num_intervals() {
                let ratio = lp_norm(
                    space,
                    &DiscreteFunction {
                        values: sol.trace_minus(m),
                    },
                    *p,
                    NormMode::Quadrature,
                )? / denom;
                if ratio > max_ratio {
                    max_ratio = ratio;
                    worst_m = m;
                }
            }
            report.push_row(vec![
                u0.label().into(),
                p.to_string().into(),
                max_ratio.into(),
                worst_m.into(),
                "ok".into(),
                regime.into(),
            ]);
            if let Exponent::Finite(pe) = p {
                if (*pe - 2.0).abs() < 1e-12 {
                    report.assertions.push(Assertion::le(
                        format!("monotone_p2_{}", u0.label()),
                        max_ratio,
                        1.0 + 1e-12,
                        "||u_m||_2 / ||P_h u_0||_2 over all m",
                    ));
                }
            }
            if first_ratio.is_none() {
                // rerun ratio with data scaled by 10: must be invariant
                let denom_s = lp_norm(
                    space,
                    &DiscreteFunction {
                        values: sol_scaled.initial().clone(),
                    },
                    *p,
                    NormMode::Quadrature,
                )?;
                let mut scaled_ratio = 0.0f64;
                for m in 1..=part.num_intervals() {
                    let r = lp_norm(
                        space,
                        &DiscreteFunction {
                            values: sol_scaled.trace_minus(m),
                        },
                        *p,
                        NormMode::Quadrature,
                    )? / denom_s;
                    scaled_ratio = scaled_ratio.max(r);
                }
                first_ratio = Some((max_ratio, scaled_ratio));
            }
        }
    }
    if let Some((base, scaled)) = first_ratio {
        report
            .assertions
            .push(scale_invariance_assertion("scale_invariance", base, scaled));
    }
    Ok(report)
}
