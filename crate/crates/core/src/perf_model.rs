//! Phase I: online performance modeling.
//!
//! Turns per-mode profiling measurements into predicted normalized runtimes,
//! the busy-power energy proxy, normalized energy, and the tolerance-filtered
//! mode set a policy is allowed to schedule from. Predictions never read
//! `true_runtime_s`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::workload::{Application, ModeProfile, PolicyConfig};

/// Phase-I output for one (application, GPU count) mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeEstimate {
    pub app_id: String,
    pub gpu_count: u32,
    /// Predicted runtime normalized to the fastest predicted mode (>= 1).
    pub t_norm: f64,
    /// Energy proxy: busy power times predicted normalized runtime.
    pub e_proxy_w: f64,
    /// Energy proxy normalized to the cheapest mode (>= 1).
    pub e_norm: f64,
    /// Whether the mode survives the slowdown-tolerance filter.
    pub within_tolerance: bool,
}

/// Maps one profiled mode to a raw runtime proxy (smaller = faster).
///
/// The proxy only needs to rank modes; normalization happens afterwards.
/// Returning `None` marks the mode as unpredictable (no usable signal).
pub trait RuntimeModel {
    fn runtime_proxy(&self, profile: &ModeProfile) -> Option<f64>;
    fn name(&self) -> &'static str;
}

/// Default model: useful memory throughput scales with the number of active
/// GPUs times their mean DRAM utilization, and runtime is inversely
/// proportional to throughput, so `r(g) = 1 / (g * u_g)`.
#[derive(Debug, Clone, Copy, Default)]
pub struct ThroughputProportional;

impl RuntimeModel for ThroughputProportional {
    fn runtime_proxy(&self, profile: &ModeProfile) -> Option<f64> {
        if profile.dram_util > 0.0 {
            Some(1.0 / (profile.gpu_count as f64 * profile.dram_util))
        } else {
            None
        }
    }

    fn name(&self) -> &'static str {
        "throughput_proportional"
    }
}

/// Normalized runtime predictions for one application.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    /// gpu_count -> predicted normalized runtime; the minimum is exactly 1.
    pub t_norm: BTreeMap<u32, f64>,
    /// Modes that had to be skipped for lack of a profiling signal.
    pub excluded: Vec<u32>,
}

/// Predicts normalized runtime across an application's modes with the given model.
pub fn predict_t_norm_with(app: &Application, model: &dyn RuntimeModel) -> Result<Prediction> {
    let mut proxies: Vec<(u32, f64)> = Vec::new();
    let mut excluded = Vec::new();
    for profile in &app.profiles {
        match model.runtime_proxy(profile) {
            Some(r) => proxies.push((profile.gpu_count, r)),
            None => excluded.push(profile.gpu_count),
        }
    }
    if proxies.is_empty() {
        return Err(Error::NoSignal {
            app_id: app.app_id.clone(),
        });
    }
    let r_min = proxies.iter().map(|(_, r)| *r).fold(f64::INFINITY, f64::min);
    let t_norm = proxies.into_iter().map(|(g, r)| (g, r / r_min)).collect();
    Ok(Prediction { t_norm, excluded })
}

/// Predicts normalized runtime with the default throughput-proportional model.
pub fn predict_t_norm(app: &Application) -> Result<Prediction> {
    predict_t_norm_with(app, &ThroughputProportional)
}

/// Builds the full Phase-I estimate set for one application: normalized
/// runtime, energy proxy, normalized energy, and the tolerance flag.
/// The fastest predicted mode always survives the filter.
pub fn estimate_modes(app: &Application, cfg: &PolicyConfig) -> Result<Vec<ModeEstimate>> {
    let prediction = predict_t_norm(app)?;
    let mut estimates: Vec<ModeEstimate> = Vec::with_capacity(prediction.t_norm.len());
    for (&gpu_count, &t_norm) in &prediction.t_norm {
        let profile = app
            .profile(gpu_count)
            .expect("predicted modes come from profiles");
        estimates.push(ModeEstimate {
            app_id: app.app_id.clone(),
            gpu_count,
            t_norm,
            e_proxy_w: profile.busy_power_w * t_norm,
            e_norm: f64::NAN,
            within_tolerance: t_norm <= 1.0 + cfg.tau,
        });
    }
    let e_min = estimates
        .iter()
        .map(|e| e.e_proxy_w)
        .fold(f64::INFINITY, f64::min);
    for est in &mut estimates {
        est.e_norm = est.e_proxy_w / e_min;
    }
    Ok(estimates)
}

/// Time for a power reduction of `power_delta_w` to pay back a one-time
/// profiling cost, in seconds.
pub fn amortization_time(profiling_energy_j: f64, power_delta_w: f64) -> Result<f64> {
    if power_delta_w > 0.0 {
        Ok(profiling_energy_j / power_delta_w)
    } else {
        Err(Error::NoAmortizationPath {
            power_delta_w,
        })
    }
}
