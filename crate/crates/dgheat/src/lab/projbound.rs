//! Projection-bound check: the discretization error is controlled by the
//! best-approximation defects,
//! `||u - u_kh|| <= C (1 + ln(T/k)) (||u - pi_k u|| + ||u - P_h u|| + ||u - R_h u||)`
//! in `L^s(I; L^p)` for finite `s, p`; the scan records the ratio per level.

use super::boundedness_assertion;
use crate::error::{Error, Result};
use crate::norms::{error_norm, ph_defect_norm, pik_defect_norm, rh_defect_norm, NormSpec};
use crate::problems::ManufacturedProblem;
use crate::report::ExperimentReport;
use crate::spatial::build_space;
use crate::spatial::ops::Exponent;
use crate::stepper::dg_solve;
use crate::time_partition::TimePartition;
use std::sync::Arc;

pub struct ProjBoundConfig {
    pub q: usize,
    pub r: usize,
    pub grid: Vec<(Exponent, Exponent)>,
    pub levels: usize,
    pub base_m: usize,
    pub n: usize,
    pub horizon: f64,
}

impl Default for ProjBoundConfig {
    fn default() -> Self {
        let es = [Exponent::Finite(1.0), Exponent::Finite(2.0)];
        let mut grid = Vec::new();
        for s in es {
            for p in es {
                grid.push((s, p));
            }
        }
        ProjBoundConfig {
            q: 0,
            r: 1,
            grid,
            levels: 4,
            base_m: 64,
            n: 256,
            horizon: 1.0,
        }
    }
}

pub fn run_projection_bound_check(
    problem: &ManufacturedProblem,
    config: &ProjBoundConfig,
) -> Result<ExperimentReport> {
    for (s, p) in &config.grid {
        if matches!(s, Exponent::Inf) || matches!(p, Exponent::Inf) {
            return Err(Error::Usage(
                "projection bound is stated for finite s, p only".to_string(),
            ));
        }
    }
    let mut report = ExperimentReport::new(
        "projbound",
        &[
            "level", "M", "k", "s", "p", "error", "pik_defect", "ph_defect", "rh_defect", "rho",
        ],
    );
    report.meta("problem", problem.id);
    report.meta("q", config.q);
    report.meta("r", config.r);
    report.meta("n", config.n);
    report.meta("normalization", "1 + ln(T/k)");
    report.meta("drift_factor", 1.25);
    report.meta("mesh_params", "uniform: c=1, beta=1, kappa=1");

    let space = Arc::new(build_space(problem.domain, config.n, config.r)?);
    let mut rhos = vec![Vec::new(); config.grid.len()];
    for level in 0..config.levels {
        let m_count = config.base_m << level;
        let part = TimePartition::uniform(config.horizon, m_count)?;
        let k = part.max_step();
        let log_factor = 1.0 + (config.horizon / k).ln();
        let u0 = problem.u0();
        let sol = dg_solve(&space, &part, config.q, Some(&u0), Some(&problem.f))?;
        for (gi, (s, p)) in config.grid.iter().enumerate() {
            let spec = NormSpec::new(*s, *p);
            let err = error_norm(&problem.u, &sol, &spec)?;
            let pik = pik_defect_norm(&problem.u, &space, &part, config.q, &spec)?;
            let ph = ph_defect_norm(&problem.u, &space, &part, config.q, &spec)?;
            let rh = rh_defect_norm(&problem.u, &problem.grad_u, &space, &part, config.q, &spec)?;
            let denom = log_factor * (pik + ph + rh);
            let rho = if denom > 1e-14 { err / denom } else { f64::NAN };
            if rho.is_finite() {
                rhos[gi].push(rho);
            }
            report.push_row(vec![
                level.into(),
                m_count.into(),
                k.into(),
                s.to_string().into(),
                p.to_string().into(),
                err.into(),
                pik.into(),
                ph.into(),
                rh.into(),
                rho.into(),
            ]);
        }
    }
    for (gi, (s, p)) in config.grid.iter().enumerate() {
        report.assertions.push(boundedness_assertion(
            format!("bounded_s{}_p{}", s, p),
            &rhos[gi],
        ));
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::sin_heat_1d;

    #[test]
    fn rejects_infinite_exponents() {
        let config = ProjBoundConfig {
            grid: vec![(Exponent::Inf, Exponent::Finite(2.0))],
            ..Default::default()
        };
        assert!(matches!(
            run_projection_bound_check(&sin_heat_1d(), &config),
            Err(Error::Usage(_))
        ));
    }

    #[test]
    fn small_scan_is_bounded() {
        let config = ProjBoundConfig {
            q: 0,
            r: 1,
            grid: vec![(Exponent::Finite(2.0), Exponent::Finite(2.0))],
            levels: 3,
            base_m: 32,
            n: 64,
            horizon: 1.0,
        };
        let report = run_projection_bound_check(&sin_heat_1d(), &config).unwrap();
        assert!(report.all_passed(), "{}", report.to_json_string());
    }
}
