//! Evaluation metrics: energy saving, makespan improvement, EDP saving, and
//! per-application performance loss, plus the multi-policy comparison report.
//!
//! All savings are percentage reductions relative to a named baseline and are
//! negative when the policy regresses; nothing is clamped.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sim::SimResult;

fn saving_pct(policy: f64, base: f64, what: &str) -> Result<f64> {
    if base > 0.0 {
        Ok(100.0 * (base - policy) / base)
    } else {
        Err(Error::MetricDomain(format!(
            "baseline {what} must be positive, got {base}"
        )))
    }
}

/// Percentage reduction in total energy relative to a baseline.
pub fn energy_saving(e_policy_j: f64, e_base_j: f64) -> Result<f64> {
    saving_pct(e_policy_j, e_base_j, "energy")
}

/// Percentage reduction in total completion time relative to a baseline.
pub fn makespan_improvement(t_policy_s: f64, t_base_s: f64) -> Result<f64> {
    saving_pct(t_policy_s, t_base_s, "makespan")
}

/// Percentage reduction in end-to-end energy-delay product.
pub fn edp_saving(edp_policy: f64, edp_base: f64) -> Result<f64> {
    saving_pct(edp_policy, edp_base, "EDP")
}

/// Percentage runtime increase over solo execution at the
/// performance-optimal GPU count.
pub fn perf_loss(runtime_coscheduled_s: f64, runtime_solo_optimal_s: f64) -> Result<f64> {
    if runtime_solo_optimal_s > 0.0 {
        Ok(100.0 * (runtime_coscheduled_s - runtime_solo_optimal_s) / runtime_solo_optimal_s)
    } else {
        Err(Error::MetricDomain(format!(
            "solo-optimal runtime must be positive, got {runtime_solo_optimal_s}"
        )))
    }
}

/// Savings of one policy against one baseline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolicyOutcome {
    pub energy_saving_pct: f64,
    pub makespan_improvement_pct: f64,
    pub edp_saving_pct: f64,
}

/// Cross-policy comparison against one named baseline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub baseline_kind: String,
    pub workload_name: String,
    pub total_gpus: u32,
    pub numa_domains: u32,
    pub per_policy: BTreeMap<String, PolicyOutcome>,
    /// policy -> app -> performance loss in percent.
    pub per_app_perf_loss: BTreeMap<String, BTreeMap<String, f64>>,
    /// Free-form annotations (e.g. an incomplete oracle search).
    pub notes: BTreeMap<String, String>,
}

impl ComparisonReport {
    /// Builds the report for `results` against the result named `baseline`.
    pub fn build(baseline: &SimResult, results: &[&SimResult]) -> Result<Self> {
        let mut per_policy = BTreeMap::new();
        let mut per_app_perf_loss = BTreeMap::new();
        for r in results {
            per_policy.insert(
                r.policy.clone(),
                PolicyOutcome {
                    energy_saving_pct: energy_saving(r.total_energy_j, baseline.total_energy_j)?,
                    makespan_improvement_pct: makespan_improvement(
                        r.makespan_s,
                        baseline.makespan_s,
                    )?,
                    edp_saving_pct: edp_saving(r.edp_j_s, baseline.edp_j_s)?,
                },
            );
            per_app_perf_loss.insert(
                r.policy.clone(),
                r.per_app_perf_loss
                    .iter()
                    .map(|(app, frac)| (app.clone(), 100.0 * frac))
                    .collect(),
            );
        }
        Ok(Self {
            baseline_kind: baseline.policy.clone(),
            workload_name: baseline.trace.platform.name.clone(),
            total_gpus: baseline.trace.platform.total_gpus,
            numa_domains: baseline.trace.platform.numa_domains,
            per_policy,
            per_app_perf_loss,
            notes: BTreeMap::new(),
        })
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports always serialize")
    }

    /// Aligned-column plain-text table.
    pub fn to_table_string(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "workload {} (M={}, K={}), baseline: {}\n",
            self.workload_name, self.total_gpus, self.numa_domains, self.baseline_kind
        ));
        out.push_str(&format!(
            "{:<24} {:>14} {:>18} {:>12}\n",
            "policy", "energy_save_%", "makespan_impr_%", "edp_save_%"
        ));
        for (policy, o) in &self.per_policy {
            out.push_str(&format!(
                "{:<24} {:>14.2} {:>18.2} {:>12.2}\n",
                policy, o.energy_saving_pct, o.makespan_improvement_pct, o.edp_saving_pct
            ));
        }
        if !self.notes.is_empty() {
            for (k, note) in &self.notes {
                out.push_str(&format!("note [{k}]: {note}\n"));
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn savings_match_reported_triples() {
        assert!((energy_saving(85.2, 100.0).unwrap() - 14.8).abs() < 1e-9);
        assert!((makespan_improvement(69.9, 100.0).unwrap() - 30.1).abs() < 1e-9);
        assert!((edp_saving(59.6, 100.0).unwrap() - 40.4).abs() < 1e-9);
    }

    #[test]
    fn self_comparison_is_zero_and_regressions_are_negative() {
        assert_eq!(energy_saving(100.0, 100.0).unwrap(), 0.0);
        assert_eq!(energy_saving(110.0, 100.0).unwrap(), -10.0);
        assert_eq!(makespan_improvement(50.0, 200.0).unwrap(), 75.0);
    }

    #[test]
    fn baseline_must_be_positive() {
        assert!(energy_saving(10.0, 0.0).is_err());
        assert!(perf_loss(10.0, 0.0).is_err());
    }

    #[test]
    fn perf_loss_examples() {
        assert!((perf_loss(110.0, 100.0).unwrap() - 10.0).abs() < 1e-12);
        assert_eq!(perf_loss(42.0, 42.0).unwrap(), 0.0);
        assert!((perf_loss(113.4, 100.0).unwrap() - 13.4).abs() < 1e-9);
    }

    #[test]
    fn edp_composition_identity_on_reported_values() {
        // With EDP = E*T, savings compose: 1 - (1-se)(1-st).
        let se: f64 = 14.8;
        let st: f64 = 30.1;
        let composed = 100.0 * (1.0 - (1.0 - se / 100.0) * (1.0 - st / 100.0));
        assert!((composed - 40.44).abs() < 0.01);
    }

    proptest! {
        #[test]
        fn edp_composition_identity(
            e_base in 1.0f64..1e9,
            t_base in 1.0f64..1e6,
            fe in 0.01f64..2.0,
            ft in 0.01f64..2.0,
        ) {
            let e_policy = e_base * fe;
            let t_policy = t_base * ft;
            let se = energy_saving(e_policy, e_base).unwrap();
            let st = makespan_improvement(t_policy, t_base).unwrap();
            let sedp = edp_saving(e_policy * t_policy, e_base * t_base).unwrap();
            let composed = 100.0 * (1.0 - (1.0 - se / 100.0) * (1.0 - st / 100.0));
            prop_assert!((sedp - composed).abs() <= 1e-9 * sedp.abs().max(1.0));
        }

        #[test]
        fn antisymmetry_identity(x in 1.0f64..1e9, y in 1.0f64..1e9) {
            // Swapping the arguments rescales the saving by the ratio of the
            // two baselines: saving(x, y) = -saving(y, x) * (x / y).
            let lhs = energy_saving(x, y).unwrap();
            let rhs = -energy_saving(y, x).unwrap() * (x / y);
            prop_assert!((lhs - rhs).abs() <= 1e-9 * lhs.abs().max(1.0));
        }

        #[test]
        fn metrics_are_scale_invariant(x in 1.0f64..1e6, y in 1.0f64..1e6, s in 0.001f64..1e3) {
            let a = energy_saving(x, y).unwrap();
            let b = energy_saving(x * s, y * s).unwrap();
            prop_assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0));
        }
    }
}
