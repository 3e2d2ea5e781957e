//! Temporal meshes `0 = t_0 < t_1 < ... < t_M = T` with the step-size
//! conditions the estimates assume:
//!
//! (i)   `k_min >= c * k^beta`,
//! (ii)  `kappa^-1 <= k_m / k_{m+1} <= kappa`,
//! (iii) `k <= T / 4`,
//!
//! where `k` and `k_min` are the largest and smallest steps. Condition (i)
//! is checked on steps normalized by `T` (i.e. `k_min/T >= c * (k/T)^beta`)
//! so that the verdict does not change under rescaling of the horizon.
//! Nodes are the stored representation; steps are always derived, so the
//! two can never drift apart.

use crate::error::{Error, MeshCondition, Result};
use serde::{Deserialize, Serialize};

/// Declared constants for conditions (i) and (ii).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeshParams {
    pub c: f64,
    pub beta: f64,
    pub kappa: f64,
}

impl Default for MeshParams {
    /// Defaults accept graded meshes up to grading exponent 2 at any `M >= 4`:
    /// such meshes have `k_min / k^2 > 1/4` and worst step ratio `1/3`.
    fn default() -> Self {
        MeshParams {
            c: 0.25,
            beta: 2.0,
            kappa: 3.0,
        }
    }
}

/// Relative slack for the condition checks, so meshes sitting exactly on a
/// boundary (uniform with `M = 4`, graded ratios hitting `kappa^-1`) pass.
const COND_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct TimePartition {
    nodes: Vec<f64>,
    params: MeshParams,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConditionReport {
    pub passed: bool,
    /// Interval index (1-based) where the condition is tightest or violated.
    pub worst_index: usize,
    /// The achieved quantity: `k_min / k^beta` for (i), the step ratio
    /// farthest from 1 for (ii), `k / T` for (iii).
    pub achieved: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ValidationReport {
    pub min_step: ConditionReport,
    pub step_ratio: ConditionReport,
    pub max_step: ConditionReport,
}

impl ValidationReport {
    pub fn all_pass(&self) -> bool {
        self.min_step.passed && self.step_ratio.passed && self.max_step.passed
    }
}

impl TimePartition {
    /// Uniform mesh with `M` steps; satisfies all conditions with
    /// `c = 1`, `beta = 1`, `kappa = 1`.
    pub fn uniform(horizon: f64, m: usize) -> Result<Self> {
        if horizon <= 0.0 || !horizon.is_finite() {
            return Err(Error::Domain {
                name: "T",
                detail: format!("horizon must be positive, got {horizon}"),
            });
        }
        let nodes = (0..=m)
            .map(|i| horizon * (i as f64) / (m as f64))
            .collect();
        Self::from_nodes(
            nodes,
            MeshParams {
                c: 1.0,
                beta: 1.0,
                kappa: 1.0,
            },
        )
    }

    /// Graded mesh `t_m = T * (m/M)^alpha`; `alpha = 1` reproduces `uniform`
    /// (with the default condition parameters attached).
    pub fn graded(horizon: f64, m: usize, alpha: f64) -> Result<Self> {
        if horizon <= 0.0 || !horizon.is_finite() {
            return Err(Error::Domain {
                name: "T",
                detail: format!("horizon must be positive, got {horizon}"),
            });
        }
        if alpha < 1.0 || !alpha.is_finite() {
            return Err(Error::Domain {
                name: "alpha",
                detail: format!("grading exponent must be >= 1, got {alpha}"),
            });
        }
        let nodes = (0..=m)
            .map(|i| horizon * ((i as f64) / (m as f64)).powf(alpha))
            .collect();
        Self::from_nodes(nodes, MeshParams::default())
    }

    /// Arbitrary node list; validates shape and all three conditions against
    /// the given parameters. `M >= 4` is implied by condition (iii), since
    /// the largest step is at least the average step `T/M`.
    pub fn from_nodes(nodes: Vec<f64>, params: MeshParams) -> Result<Self> {
        if nodes.len() < 2 {
            return Err(Error::Domain {
                name: "nodes",
                detail: "need at least one interval".to_string(),
            });
        }
        if nodes[0] != 0.0 {
            return Err(Error::Domain {
                name: "nodes",
                detail: format!("t_0 must be 0, got {}", nodes[0]),
            });
        }
        for w in nodes.windows(2) {
            if !(w[1] > w[0]) {
                return Err(Error::Domain {
                    name: "nodes",
                    detail: format!("nodes not strictly increasing at {} -> {}", w[0], w[1]),
                });
            }
        }
        let p = TimePartition { nodes, params };
        let report = p.validate(params.c, params.beta, params.kappa);
        if !report.max_step.passed {
            return Err(Error::MeshCondition {
                condition: MeshCondition::MaxStep,
                index: report.max_step.worst_index,
                detail: format!("k/T = {:.6} > 1/4", report.max_step.achieved),
            });
        }
        if !report.step_ratio.passed {
            return Err(Error::MeshCondition {
                condition: MeshCondition::StepRatio,
                index: report.step_ratio.worst_index,
                detail: format!(
                    "k_m/k_{{m+1}} = {:.6} outside [1/{}, {}]",
                    report.step_ratio.achieved, params.kappa, params.kappa
                ),
            });
        }
        if !report.min_step.passed {
            return Err(Error::MeshCondition {
                condition: MeshCondition::MinStep,
                index: report.min_step.worst_index,
                detail: format!(
                    "k_min/k^beta = {:.6} < c = {}",
                    report.min_step.achieved, params.c
                ),
            });
        }
        Ok(p)
    }

    pub fn horizon(&self) -> f64 {
        *self.nodes.last().unwrap()
    }

    /// Number of intervals `M`.
    pub fn num_intervals(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn params(&self) -> MeshParams {
        self.params
    }

    /// Node `t_m`, `m = 0..=M`.
    pub fn node(&self, m: usize) -> f64 {
        self.nodes[m]
    }

    /// Step `k_m = t_m - t_{m-1}`, `m = 1..=M`.
    pub fn step(&self, m: usize) -> f64 {
        assert!(m >= 1 && m < self.nodes.len());
        self.nodes[m] - self.nodes[m - 1]
    }

    pub fn max_step(&self) -> f64 {
        (1..self.nodes.len())
            .map(|m| self.step(m))
            .fold(0.0, f64::max)
    }

    pub fn min_step(&self) -> f64 {
        (1..self.nodes.len())
            .map(|m| self.step(m))
            .fold(f64::INFINITY, f64::min)
    }

    /// Index `m` of the interval `I_m = (t_{m-1}, t_m]` containing `t`
    /// (right-continuous assignment).
    pub fn interval_of(&self, t: f64) -> Result<usize> {
        let horizon = self.horizon();
        if !(t > 0.0) || t > horizon {
            return Err(Error::TimeRange { t, horizon });
        }
        // first node >= t
        let m = self.nodes.partition_point(|&x| x < t);
        Ok(m.clamp(1, self.num_intervals()))
    }

    /// Check the three mesh conditions against explicit `(c, beta, kappa)`.
    pub fn validate(&self, c: f64, beta: f64, kappa: f64) -> ValidationReport {
        let horizon = self.horizon();
        let m_count = self.num_intervals();
        let k_max = self.max_step();

        // (iii): k <= T/4, report worst step
        let mut worst_step_idx = 1;
        for m in 1..=m_count {
            if self.step(m) == k_max {
                worst_step_idx = m;
                break;
            }
        }
        let max_step = ConditionReport {
            passed: k_max <= 0.25 * horizon * (1.0 + COND_SLACK),
            worst_index: worst_step_idx,
            achieved: k_max / horizon,
        };

        // (ii): ratios k_m / k_{m+1}; worst = farthest from 1 in log scale
        let mut worst_ratio = 1.0f64;
        let mut worst_ratio_idx = 1;
        for m in 1..m_count {
            let r = self.step(m) / self.step(m + 1);
            if r.ln().abs() > worst_ratio.ln().abs() {
                worst_ratio = r;
                worst_ratio_idx = m;
            }
        }
        let ratio_ok = worst_ratio <= kappa * (1.0 + COND_SLACK)
            && worst_ratio >= (1.0 / kappa) * (1.0 - COND_SLACK);
        let step_ratio = ConditionReport {
            passed: ratio_ok,
            worst_index: worst_ratio_idx,
            achieved: worst_ratio,
        };

        // (i): k_min/T >= c * (k/T)^beta
        let mut k_min = f64::INFINITY;
        let mut min_idx = 1;
        for m in 1..=m_count {
            if self.step(m) < k_min {
                k_min = self.step(m);
                min_idx = m;
            }
        }
        let achieved = (k_min / horizon) / (k_max / horizon).powf(beta);
        let min_step = ConditionReport {
            passed: achieved >= c * (1.0 - COND_SLACK),
            worst_index: min_idx,
            achieved,
        };

        ValidationReport {
            min_step,
            step_ratio,
            max_step,
        }
    }
}

impl Serialize for TimePartition {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.nodes.serialize(s)
    }
}

impl<'de> Deserialize<'de> for TimePartition {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let nodes = Vec::<f64>::deserialize(d)?;
        TimePartition::from_nodes(nodes, MeshParams::default()).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn uniform_nodes() {
        let p = TimePartition::uniform(1.0, 4).unwrap();
        assert_eq!(p.nodes(), &[0.0, 0.25, 0.5, 0.75, 1.0]);
        let p2 = TimePartition::uniform(2.0, 8).unwrap();
        for m in 1..=8 {
            assert!((p2.step(m) - 0.25).abs() < 1e-15);
        }
    }

    #[test]
    fn uniform_m2_rejected_with_condition_iii() {
        match TimePartition::uniform(1.0, 2) {
            Err(Error::MeshCondition { condition, .. }) => {
                assert_eq!(condition, MeshCondition::MaxStep)
            }
            other => panic!("expected condition (iii) violation, got {other:?}"),
        }
    }

    #[test]
    fn nonpositive_horizon_rejected() {
        assert!(matches!(
            TimePartition::uniform(0.0, 4),
            Err(Error::Domain { name: "T", .. })
        ));
        assert!(matches!(
            TimePartition::graded(-1.0, 4, 2.0),
            Err(Error::Domain { name: "T", .. })
        ));
    }

    #[test]
    fn graded_alpha1_equals_uniform() {
        let g = TimePartition::graded(1.0, 4, 1.0).unwrap();
        let u = TimePartition::uniform(1.0, 4).unwrap();
        assert_eq!(g.nodes(), u.nodes());
    }

    #[test]
    fn graded_alpha2_nodes() {
        // alpha = 2 needs M >= 8 for condition (iii): k = (2M-1)/M^2 <= 1/4
        let g = TimePartition::graded(1.0, 8, 2.0).unwrap();
        for (m, node) in g.nodes().iter().enumerate() {
            assert!((node - (m * m) as f64 / 64.0).abs() < 1e-15);
        }
        // steps (2m-1)/64, so k_2/k_3 = 3/5 independently of M
        assert!((g.step(2) / g.step(3) - 0.6).abs() < 1e-14);
        // M = 4 with alpha = 2 has k = 7/16 > T/4
        assert!(matches!(
            TimePartition::graded(1.0, 4, 2.0),
            Err(Error::MeshCondition {
                condition: MeshCondition::MaxStep,
                ..
            })
        ));
    }

    #[test]
    fn validate_matches_hand_computation() {
        let u = TimePartition::uniform(1.0, 4).unwrap();
        let r = u.validate(1.0, 1.0, 1.0);
        assert!(r.all_pass());
        assert!((r.step_ratio.achieved - 1.0).abs() < 1e-15);

        let g = TimePartition::graded(1.0, 8, 2.0).unwrap();
        let r1 = g.validate(0.25, 2.0, 1.0);
        assert!(!r1.step_ratio.passed);
        assert_eq!(r1.step_ratio.worst_index, 1);
        assert!((r1.step_ratio.achieved - 1.0 / 3.0).abs() < 1e-14);

        let r3 = g.validate(0.25, 2.0, 3.0);
        assert!(r3.all_pass(), "{r3:?}");
    }

    #[test]
    fn interval_lookup_is_right_continuous() {
        let p = TimePartition::uniform(1.0, 4).unwrap();
        assert_eq!(p.interval_of(0.25).unwrap(), 1);
        assert_eq!(p.interval_of(0.2500001).unwrap(), 2);
        assert_eq!(p.interval_of(1.0).unwrap(), 4);
        assert!(p.interval_of(0.0).is_err());
        assert!(p.interval_of(1.0000001).is_err());
    }

    #[test]
    fn serde_round_trip() {
        let p = TimePartition::graded(1.0, 8, 1.5).unwrap();
        let json = serde_json::to_string(&p).unwrap();
        let q: TimePartition = serde_json::from_str(&json).unwrap();
        assert_eq!(p.nodes(), q.nodes());
    }

    fn kahan_sum(xs: impl Iterator<Item = f64>) -> f64 {
        let (mut s, mut c) = (0.0f64, 0.0f64);
        for x in xs {
            let y = x - c;
            let t = s + y;
            c = (t - s) - y;
            s = t;
        }
        s
    }

    proptest! {
        #[test]
        fn steps_sum_to_horizon(m in 8usize..512, t in 0.1f64..10.0, alpha in 1.0f64..2.0) {
            let p = TimePartition::graded(t, m, alpha).unwrap();
            let total = kahan_sum((1..=p.num_intervals()).map(|i| p.step(i)));
            prop_assert!((total - t).abs() <= 1e-14 * t);
        }

        #[test]
        fn uniform_validates_with_kappa_one(m in 4usize..256, t in 0.1f64..10.0) {
            let p = TimePartition::uniform(t, m).unwrap();
            prop_assert!(p.validate(1.0, 1.0, 1.0).all_pass());
        }

        #[test]
        fn graded_ratio_formula(m in 8usize..64, alpha in 1.0f64..2.0) {
            let p = TimePartition::graded(1.0, m, alpha).unwrap();
            let r = p.validate(0.25, 2.0, 3.0);
            // worst ratio matches ((m)^a - (m-1)^a)/((m+1)^a - m^a) at the reported index
            let i = r.step_ratio.worst_index as f64;
            let expect = (i.powf(alpha) - (i - 1.0).powf(alpha))
                / ((i + 1.0).powf(alpha) - i.powf(alpha));
            prop_assert!((r.step_ratio.achieved - expect).abs() <= 1e-12 * expect.abs() + 1e-14);
        }
    }
}
