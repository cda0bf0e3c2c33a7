//! Phase II: score-based joint GPU-count and co-scheduling selection, plus
//! the baseline policies, all behind one `Policy` interface.
//!
//! An action is a set of (application, GPU count) modes launched together.
//! Feasibility at a scheduling event means the action fits the free GPUs and
//! occupies at most one NUMA domain per application. The score trades the
//! average normalized energy regret of the chosen modes against the fraction
//! of node capacity the action leaves idle:
//!
//! ```text
//! S(a) = R_energy(a) + lambda * I(a)
//! R_energy(a) = (1/|a|) * sum_m (e_norm_m - 1)
//! I(a) = (G_free - G(a)) / M
//! ```
//!
//! The scheduler launches the feasible action with the minimum score and
//! waits only when nothing fits.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::perf_model::{self, ModeEstimate};
use crate::workload::{PolicyConfig, PolicyKind, WorkloadSpec};

/// One (application, GPU count) choice inside an action.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mode {
    pub app_id: String,
    pub gpu_count: u32,
    pub e_norm: f64,
}

/// A feasible set of modes for distinct applications, with its score parts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Action {
    /// Modes sorted by app_id; app_ids are distinct.
    pub modes: Vec<Mode>,
    pub gpus_used: u32,
    pub r_energy: f64,
    pub idle_frac: f64,
    pub score: f64,
}

impl Action {
    pub fn app_ids(&self) -> Vec<&str> {
        self.modes.iter().map(|m| m.app_id.as_str()).collect()
    }

    fn gpu_counts(&self) -> Vec<u32> {
        self.modes.iter().map(|m| m.gpu_count).collect()
    }
}

/// One waiting application as the scheduler sees it.
#[derive(Debug, Clone, PartialEq)]
pub struct WaitingApp {
    pub app_id: String,
    /// Position in the original queue (FCFS order for the baselines).
    pub queue_pos: usize,
    pub estimates: Vec<ModeEstimate>,
}

/// Scheduler-visible system state at a decision point. Policies see
/// estimates, never ground-truth runtimes.
#[derive(Debug, Clone, PartialEq)]
pub struct SchedulerView {
    pub g_free: u32,
    pub free_numa_domains: u32,
    pub total_gpus: u32,
    /// Index of the current scheduling event (0 at time zero, +1 per
    /// completion event). Used by scripted replay policies.
    pub event_index: usize,
    pub waiting: Vec<WaitingApp>,
}

impl SchedulerView {
    /// True when nothing is running (every GPU is free).
    pub fn node_empty(&self) -> bool {
        self.g_free == self.total_gpus
    }
}

/// Computes the score parts (R_energy, I, S) for a candidate mode set.
pub fn score_components(modes: &[Mode], view: &SchedulerView, lambda: f64) -> (f64, f64, f64) {
    let gpus_used: u32 = modes.iter().map(|m| m.gpu_count).sum();
    let regret: f64 = modes.iter().map(|m| m.e_norm - 1.0).sum::<f64>() / modes.len() as f64;
    // Signed arithmetic: infeasible candidates (from scripted replays) may
    // exceed the free count; the engine rejects them at launch.
    let idle_frac = (view.g_free as f64 - gpus_used as f64) / view.total_gpus as f64;
    (regret, idle_frac, regret + lambda * idle_frac)
}

fn make_action(mut modes: Vec<Mode>, view: &SchedulerView, lambda: f64) -> Action {
    modes.sort_by(|a, b| a.app_id.cmp(&b.app_id));
    let gpus_used = modes.iter().map(|m| m.gpu_count).sum();
    let (r_energy, idle_frac, score) = score_components(&modes, view, lambda);
    Action {
        modes,
        gpus_used,
        r_energy,
        idle_frac,
        score,
    }
}

/// Enumerates every feasible action: non-empty app subsets no larger than the
/// free NUMA domains, crossed with each app's tolerance-surviving modes,
/// keeping combinations that fit the free GPUs. Output order is deterministic
/// (sorted by app-id tuple, then gpu-count tuple).
pub fn enumerate_actions(view: &SchedulerView, lambda: f64) -> Vec<Action> {
    let mut apps: Vec<&WaitingApp> = view.waiting.iter().collect();
    apps.sort_by(|a, b| a.app_id.cmp(&b.app_id));

    let tolerated: Vec<(&WaitingApp, Vec<&ModeEstimate>)> = apps
        .iter()
        .map(|a| {
            let modes = a
                .estimates
                .iter()
                .filter(|e| e.within_tolerance)
                .collect::<Vec<_>>();
            (*a, modes)
        })
        .collect();

    let mut actions = Vec::new();
    let n = tolerated.len();
    if n > 0 && view.free_numa_domains > 0 && view.g_free > 0 {
        for mask in 1u64..(1u64 << n) {
            if mask.count_ones() > view.free_numa_domains {
                continue;
            }
            let members: Vec<&(&WaitingApp, Vec<&ModeEstimate>)> = (0..n)
                .filter(|i| mask & (1 << i) != 0)
                .map(|i| &tolerated[i])
                .collect();
            if members.iter().any(|(_, modes)| modes.is_empty()) {
                continue;
            }
            cross_modes(&members, 0, &mut Vec::new(), view, lambda, &mut actions);
        }
    }
    actions.sort_by(|a, b| {
        a.app_ids()
            .cmp(&b.app_ids())
            .then(a.gpu_counts().cmp(&b.gpu_counts()))
    });
    actions
}

fn cross_modes(
    members: &[&(&WaitingApp, Vec<&ModeEstimate>)],
    depth: usize,
    chosen: &mut Vec<Mode>,
    view: &SchedulerView,
    lambda: f64,
    out: &mut Vec<Action>,
) {
    let used: u32 = chosen.iter().map(|m| m.gpu_count).sum();
    if depth == members.len() {
        out.push(make_action(chosen.clone(), view, lambda));
        return;
    }
    let (app, modes) = members[depth];
    for est in modes {
        if used + est.gpu_count <= view.g_free {
            chosen.push(Mode {
                app_id: app.app_id.clone(),
                gpu_count: est.gpu_count,
                e_norm: est.e_norm,
            });
            cross_modes(members, depth + 1, chosen, view, lambda, out);
            chosen.pop();
        }
    }
}

/// Orders candidate actions: lower score, then more GPUs used, then more
/// modes, then lexicographically smallest app-id tuple.
fn preference(a: &Action, b: &Action) -> std::cmp::Ordering {
    a.score
        .total_cmp(&b.score)
        .then(b.gpus_used.cmp(&a.gpus_used))
        .then(b.modes.len().cmp(&a.modes.len()))
        .then(a.app_ids().cmp(&b.app_ids()))
}

/// Picks the minimum-score feasible action, or `None` when nothing fits.
pub fn select_action(view: &SchedulerView, cfg: &PolicyConfig) -> Option<Action> {
    enumerate_actions(view, cfg.lambda)
        .into_iter()
        .min_by(preference)
}

/// A scheduling policy invoked at every event until it declines to launch.
pub trait Policy {
    fn kind(&self) -> PolicyKind;
    /// Returns the next action to launch under the given view, or `None`
    /// to wait for the next completion.
    fn decide(&mut self, view: &SchedulerView) -> Option<Action>;
}

/// The score-based two-phase scheduler.
pub struct EcoSched {
    cfg: PolicyConfig,
}

impl EcoSched {
    pub fn new(cfg: PolicyConfig) -> Self {
        Self { cfg }
    }
}

impl Policy for EcoSched {
    fn kind(&self) -> PolicyKind {
        PolicyKind::Ecosched
    }

    fn decide(&mut self, view: &SchedulerView) -> Option<Action> {
        select_action(view, &self.cfg)
    }
}

fn pinned_mode(view: &SchedulerView, app: &WaitingApp, gpu_count: u32) -> Mode {
    let _ = view;
    // Pinned modes may fall outside the tolerance filter; their e_norm is
    // still reported when an estimate exists.
    let e_norm = app
        .estimates
        .iter()
        .find(|e| e.gpu_count == gpu_count)
        .map(|e| e.e_norm)
        .unwrap_or(1.0);
    Mode {
        app_id: app.app_id.clone(),
        gpu_count,
        e_norm,
    }
}

/// Runs the queue strictly one job at a time at a fixed per-app GPU count.
struct SequentialPinned {
    kind: PolicyKind,
    pinned: BTreeMap<String, u32>,
    lambda: f64,
}

impl Policy for SequentialPinned {
    fn kind(&self) -> PolicyKind {
        self.kind
    }

    fn decide(&mut self, view: &SchedulerView) -> Option<Action> {
        if !view.node_empty() {
            return None;
        }
        let head = view.waiting.iter().min_by_key(|a| a.queue_pos)?;
        let g = self.pinned[&head.app_id];
        let mode = pinned_mode(view, head, g);
        Some(make_action(vec![mode], view, self.lambda))
    }
}

/// Co-scheduling with performance-pinned GPU counts: at each event, launch
/// the feasible pinned-mode set that maximizes GPUs used (ties: more apps,
/// then earliest queue positions).
struct MarbleLike {
    pinned: BTreeMap<String, u32>,
    lambda: f64,
}

impl Policy for MarbleLike {
    fn kind(&self) -> PolicyKind {
        PolicyKind::MarbleLike
    }

    fn decide(&mut self, view: &SchedulerView) -> Option<Action> {
        let apps: Vec<&WaitingApp> = view.waiting.iter().collect();
        let n = apps.len();
        let mut best: Option<(u32, usize, Vec<usize>, Vec<&WaitingApp>)> = None;
        for mask in 1u64..(1u64 << n) {
            if mask.count_ones() > view.free_numa_domains {
                continue;
            }
            let members: Vec<&WaitingApp> = (0..n)
                .filter(|i| mask & (1 << i) != 0)
                .map(|i| apps[i])
                .collect();
            let gpus: u32 = members.iter().map(|a| self.pinned[&a.app_id]).sum();
            if gpus > view.g_free {
                continue;
            }
            let mut order: Vec<usize> = members.iter().map(|a| a.queue_pos).collect();
            order.sort_unstable();
            let candidate = (gpus, members.len(), order, members);
            let replace = match &best {
                None => true,
                Some((bg, bn, border, _)) => {
                    (candidate.0, candidate.1, std::cmp::Reverse(&candidate.2))
                        > (*bg, *bn, std::cmp::Reverse(border))
                }
            };
            if replace {
                best = Some(candidate);
            }
        }
        best.map(|(_, _, _, members)| {
            let modes = members
                .iter()
                .map(|a| pinned_mode(view, a, self.pinned[&a.app_id]))
                .collect();
            make_action(modes, view, self.lambda)
        })
    }
}

/// Emits a scripted launch set at given event indices; used for plan replay.
pub struct ScriptedPolicy {
    steps: BTreeMap<usize, Vec<(String, u32)>>,
    emitted: std::collections::BTreeSet<usize>,
}

impl ScriptedPolicy {
    pub fn new(steps: BTreeMap<usize, Vec<(String, u32)>>) -> Self {
        Self {
            steps,
            emitted: Default::default(),
        }
    }

    /// Event indices the script never got to emit (plan/simulation mismatch).
    pub fn unconsumed(&self) -> Vec<usize> {
        self.steps
            .keys()
            .filter(|e| !self.emitted.contains(e))
            .copied()
            .collect()
    }

    /// The most recent event index the script emitted a launch set for.
    pub fn last_emitted(&self) -> Option<usize> {
        self.emitted.iter().next_back().copied()
    }
}

impl Policy for ScriptedPolicy {
    fn kind(&self) -> PolicyKind {
        PolicyKind::OracleReplay
    }

    fn decide(&mut self, view: &SchedulerView) -> Option<Action> {
        let launches = self.steps.get(&view.event_index)?;
        if self.emitted.contains(&view.event_index) {
            return None;
        }
        self.emitted.insert(view.event_index);
        if launches.is_empty() {
            return None;
        }
        let modes = launches
            .iter()
            .map(|(app_id, gpu_count)| {
                let waiting = view.waiting.iter().find(|a| &a.app_id == app_id);
                match waiting {
                    Some(a) => pinned_mode(view, a, *gpu_count),
                    None => Mode {
                        app_id: app_id.clone(),
                        gpu_count: *gpu_count,
                        e_norm: 1.0,
                    },
                }
            })
            .collect();
        Some(make_action(modes, view, 0.0))
    }
}

/// Builds pinned GPU counts for the ground-truth baselines.
fn pin_counts(spec: &WorkloadSpec, pick: impl Fn(&crate::workload::Application) -> u32) -> BTreeMap<String, u32> {
    spec.applications
        .iter()
        .map(|a| (a.app_id.clone(), pick(a)))
        .collect()
}

/// Instantiates a policy for the given kind. Replay policies are built from
/// a plan instead (see the oracle module).
pub fn build_policy(spec: &WorkloadSpec, cfg: &PolicyConfig) -> Result<Box<dyn Policy>> {
    match cfg.policy_kind {
        PolicyKind::Ecosched => Ok(Box::new(EcoSched::new(*cfg))),
        PolicyKind::SequentialMaxGpu => Ok(Box::new(SequentialPinned {
            kind: PolicyKind::SequentialMaxGpu,
            pinned: pin_counts(spec, |a| a.max_gpu_count()),
            lambda: cfg.lambda,
        })),
        PolicyKind::SequentialOptimalGpu => Ok(Box::new(SequentialPinned {
            kind: PolicyKind::SequentialOptimalGpu,
            pinned: pin_counts(spec, |a| a.solo_optimal_gpu_count()),
            lambda: cfg.lambda,
        })),
        PolicyKind::MarbleLike => Ok(Box::new(MarbleLike {
            pinned: pin_counts(spec, |a| a.solo_optimal_gpu_count()),
            lambda: cfg.lambda,
        })),
        PolicyKind::OracleReplay => Err(Error::Config(
            "oracle_replay requires a plan; use the replay entry point".to_string(),
        )),
    }
}

/// Per-application estimates for every app in the window, keyed by app_id.
pub fn window_estimates(
    spec: &WorkloadSpec,
    cfg: &PolicyConfig,
) -> Result<BTreeMap<String, Vec<ModeEstimate>>> {
    spec.applications
        .iter()
        .take(spec.window_size as usize)
        .map(|a| Ok((a.app_id.clone(), perf_model::estimate_modes(a, cfg)?)))
        .collect()
}
