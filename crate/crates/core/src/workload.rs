//! Workload and platform description: the types every other module consumes,
//! plus loading and validation of workload specification files.
//!
//! A workload file is UTF-8 JSON with a fixed schema (unknown keys are
//! rejected):
//!
//! ```json
//! {
//!   "platform": {"total_gpus": 4, "numa_domains": 2,
//!                "idle_power_per_gpu_w": 70.0, "name": "node"},
//!   "window_size": 2,
//!   "applications": [
//!     {"app_id": "a", "corun_slowdown": 1.0, "cross_numa_slowdown": 1.0,
//!      "profiles": [{"gpu_count": 1, "true_runtime_s": 100.0,
//!                    "busy_power_w": 200.0, "dram_util": 0.5,
//!                    "profiling_energy_j": 0.0, "profiling_duration_s": 0.0}]}
//!   ]
//! }
//! ```
//!
//! Durations are seconds, powers watts, energies joules. `true_runtime_s` is
//! simulation ground truth: the engine and the ground-truth baselines may read
//! it, scheduling policies only ever see derived estimates.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One multi-GPU node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Platform {
    /// Total GPUs in the node (the capacity symbol `M`).
    pub total_gpus: u32,
    /// NUMA domains; at most one co-running application per domain.
    pub numa_domains: u32,
    /// Idle draw of one unallocated GPU.
    pub idle_power_per_gpu_w: f64,
    pub name: String,
}

/// Profiled measurements for one (application, GPU count) mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeProfile {
    pub gpu_count: u32,
    /// Ground-truth solo runtime at this GPU count. Hidden from policies.
    pub true_runtime_s: f64,
    /// Mean aggregate active GPU power over the `gpu_count` GPUs.
    pub busy_power_w: f64,
    /// Mean per-GPU DRAM utilization observed while profiling, in [0, 1].
    pub dram_util: f64,
    pub profiling_energy_j: f64,
    pub profiling_duration_s: f64,
}

fn one() -> f64 {
    1.0
}

/// One application in the scheduling window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Application {
    pub app_id: String,
    /// Runtime multiplier applied when the job ever overlaps another job.
    #[serde(default = "one")]
    pub corun_slowdown: f64,
    /// Runtime multiplier applied when the job's GPUs span NUMA domains.
    #[serde(default = "one")]
    pub cross_numa_slowdown: f64,
    pub profiles: Vec<ModeProfile>,
    /// GPU counts this application can run at. Derived from `profiles` when
    /// loading from a file; kept explicit so inconsistencies are detectable.
    #[serde(skip)]
    pub feasible_gpu_counts: BTreeSet<u32>,
}

impl Application {
    /// Builds an application whose feasible counts are exactly the profiled ones.
    pub fn new(
        app_id: impl Into<String>,
        corun_slowdown: f64,
        cross_numa_slowdown: f64,
        profiles: Vec<ModeProfile>,
    ) -> Self {
        let feasible_gpu_counts = profiles.iter().map(|p| p.gpu_count).collect();
        Self {
            app_id: app_id.into(),
            corun_slowdown,
            cross_numa_slowdown,
            profiles,
            feasible_gpu_counts,
        }
    }

    /// The profile for a given GPU count, if one exists.
    pub fn profile(&self, gpu_count: u32) -> Option<&ModeProfile> {
        self.profiles.iter().find(|p| p.gpu_count == gpu_count)
    }

    /// Ground-truth performance-optimal GPU count: the count with the lowest
    /// true runtime, ties broken toward fewer GPUs.
    pub fn solo_optimal_gpu_count(&self) -> u32 {
        let mut best = &self.profiles[0];
        for p in &self.profiles[1..] {
            if p.true_runtime_s < best.true_runtime_s
                || (p.true_runtime_s == best.true_runtime_s && p.gpu_count < best.gpu_count)
            {
                best = p;
            }
        }
        best.gpu_count
    }

    /// Largest profiled GPU count.
    pub fn max_gpu_count(&self) -> u32 {
        self.profiles.iter().map(|p| p.gpu_count).max().unwrap_or(0)
    }

    /// Ground-truth runtime at the solo-optimal count.
    pub fn solo_optimal_runtime(&self) -> f64 {
        self.profiles
            .iter()
            .map(|p| p.true_runtime_s)
            .fold(f64::INFINITY, f64::min)
    }

    /// Total energy spent profiling this application across all modes.
    pub fn profiling_energy_j(&self) -> f64 {
        self.profiles.iter().map(|p| p.profiling_energy_j).sum()
    }
}

/// A full scheduling-window description: platform plus queued applications.
/// The list order is the FCFS queue order used by the sequential baselines.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorkloadSpec {
    pub platform: Platform,
    pub window_size: u32,
    pub applications: Vec<Application>,
}

impl WorkloadSpec {
    pub fn application(&self, app_id: &str) -> Option<&Application> {
        self.applications.iter().find(|a| a.app_id == app_id)
    }

    /// Sum of profiling energy over every application in the window.
    pub fn total_profiling_energy_j(&self) -> f64 {
        self.applications.iter().map(|a| a.profiling_energy_j()).sum()
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("workload specs always serialize")
    }
}

/// Scheduling policies selectable at run time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    /// Two-phase score-based joint GPU-count / co-scheduling selection.
    Ecosched,
    /// Runs the queue one job at a time, each at its maximum profiled count.
    SequentialMaxGpu,
    /// Runs the queue one job at a time, each at its true-runtime-optimal count.
    SequentialOptimalGpu,
    /// Co-scheduling with every job pinned to its true-runtime-optimal count,
    /// packing greedily for GPU utilization.
    MarbleLike,
    /// Replays a precomputed plan (used by the offline oracle).
    OracleReplay,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 5] = [
        PolicyKind::Ecosched,
        PolicyKind::SequentialMaxGpu,
        PolicyKind::SequentialOptimalGpu,
        PolicyKind::MarbleLike,
        PolicyKind::OracleReplay,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            PolicyKind::Ecosched => "ecosched",
            PolicyKind::SequentialMaxGpu => "sequential_max_gpu",
            PolicyKind::SequentialOptimalGpu => "sequential_optimal_gpu",
            PolicyKind::MarbleLike => "marble_like",
            PolicyKind::OracleReplay => "oracle_replay",
        }
    }
}

impl std::fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for PolicyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PolicyKind::ALL
            .iter()
            .copied()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::UnknownPolicy(s.to_string()))
    }
}

/// Tunable policy parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolicyConfig {
    /// Idle-penalty weight in the action score.
    pub lambda: f64,
    /// Predicted-slowdown tolerance for mode filtering.
    pub tau: f64,
    pub policy_kind: PolicyKind,
}

impl PolicyConfig {
    pub const DEFAULT_LAMBDA: f64 = 1.0;
    pub const DEFAULT_TAU: f64 = 0.10;

    pub fn new(policy_kind: PolicyKind) -> Self {
        Self {
            lambda: Self::DEFAULT_LAMBDA,
            tau: Self::DEFAULT_TAU,
            policy_kind,
        }
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = lambda;
        self
    }

    pub fn with_tau(mut self, tau: f64) -> Self {
        self.tau = tau;
        self
    }
}

impl Default for PolicyConfig {
    fn default() -> Self {
        Self::new(PolicyKind::Ecosched)
    }
}

/// Loads, parses, and fully validates a workload file.
pub fn load_workload(path: impl AsRef<Path>) -> Result<WorkloadSpec> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_workload(&text).map_err(|e| match e {
        Error::Parse { message, .. } => Error::Parse {
            path: path.display().to_string(),
            message,
        },
        other => other,
    })
}

/// Parses a workload from a JSON string and validates it.
pub fn parse_workload(text: &str) -> Result<WorkloadSpec> {
    let mut spec: WorkloadSpec = serde_json::from_str(text).map_err(|e| Error::Parse {
        path: String::from("<input>"),
        message: format!("line {}, column {}: {}", e.line(), e.column(), e),
    })?;
    for app in &mut spec.applications {
        app.feasible_gpu_counts = app.profiles.iter().map(|p| p.gpu_count).collect();
    }
    let violations = validate(&spec);
    if violations.is_empty() {
        Ok(spec)
    } else {
        Err(Error::Validation { violations })
    }
}

/// Checks every invariant and returns one description per violation.
/// An empty list means the spec is valid.
// Range checks are written negated so NaN fails them.
#[allow(clippy::neg_cmp_op_on_partial_ord)]
pub fn validate(spec: &WorkloadSpec) -> Vec<String> {
    let mut v = Vec::new();
    let p = &spec.platform;

    if p.total_gpus < 1 {
        v.push("total_gpus must be at least 1".to_string());
    }
    if p.numa_domains < 1 {
        v.push("numa_domains must be at least 1".to_string());
    }
    if p.numa_domains > p.total_gpus {
        v.push("numa_domains exceeds total_gpus".to_string());
    }
    if !(p.idle_power_per_gpu_w >= 0.0) {
        v.push(format!(
            "idle_power_per_gpu_w must be >= 0, got {}",
            p.idle_power_per_gpu_w
        ));
    }

    if spec.window_size < 1 {
        v.push("window_size must be at least 1".to_string());
    }
    if spec.window_size as usize > spec.applications.len() {
        v.push(format!(
            "window_size {} exceeds number of applications {}",
            spec.window_size,
            spec.applications.len()
        ));
    }

    let mut seen_apps = BTreeSet::new();
    for app in &spec.applications {
        if !seen_apps.insert(app.app_id.as_str()) {
            v.push(format!("duplicate app_id '{}'", app.app_id));
        }
        if app.feasible_gpu_counts.is_empty() {
            v.push(format!(
                "application '{}' has no feasible gpu counts",
                app.app_id
            ));
        }
        if !(app.corun_slowdown >= 1.0) {
            v.push(format!(
                "application '{}': corun_slowdown must be >= 1, got {}",
                app.app_id, app.corun_slowdown
            ));
        }
        if !(app.cross_numa_slowdown >= 1.0) {
            v.push(format!(
                "application '{}': cross_numa_slowdown must be >= 1, got {}",
                app.app_id, app.cross_numa_slowdown
            ));
        }

        let mut seen_counts = BTreeSet::new();
        for prof in &app.profiles {
            let ctx = format!("application '{}' gpu_count {}", app.app_id, prof.gpu_count);
            if !seen_counts.insert(prof.gpu_count) {
                v.push(format!(
                    "duplicate profile for application '{}' gpu_count {}",
                    app.app_id, prof.gpu_count
                ));
            }
            if prof.gpu_count < 1 {
                v.push(format!("{ctx}: gpu_count must be at least 1"));
            }
            if prof.gpu_count > p.total_gpus {
                v.push(format!("{ctx}: gpu_count exceeds total_gpus"));
            }
            if !(prof.true_runtime_s > 0.0) {
                v.push(format!(
                    "{ctx}: true_runtime_s must be > 0, got {}",
                    prof.true_runtime_s
                ));
            }
            if !(prof.busy_power_w > 0.0) {
                v.push(format!(
                    "{ctx}: busy_power_w must be > 0, got {}",
                    prof.busy_power_w
                ));
            }
            if !(0.0..=1.0).contains(&prof.dram_util) {
                v.push(format!("{ctx}: dram_util out of [0,1], got {}", prof.dram_util));
            }
            if !(prof.profiling_energy_j >= 0.0) {
                v.push(format!(
                    "{ctx}: profiling_energy_j must be >= 0, got {}",
                    prof.profiling_energy_j
                ));
            }
            if !(prof.profiling_duration_s >= 0.0) {
                v.push(format!(
                    "{ctx}: profiling_duration_s must be >= 0, got {}",
                    prof.profiling_duration_s
                ));
            }
            if !app.feasible_gpu_counts.contains(&prof.gpu_count) {
                v.push(format!(
                    "application '{}' has a profile for gpu_count {} that is not listed as feasible",
                    app.app_id, prof.gpu_count
                ));
            }
        }
        for count in &app.feasible_gpu_counts {
            if !seen_counts.contains(count) {
                v.push(format!(
                    "application '{}' lists feasible gpu_count {} with no profile",
                    app.app_id, count
                ));
            }
        }
    }

    v
}
