//! Exact offline scheduler: branch-and-bound over the event-driven decision
//! tree with perfect knowledge of runtimes and powers, minimizing total node
//! energy (active plus idle-GPU energy over the makespan).
//!
//! Decisions are restricted to completion events. With all jobs available at
//! time zero and no preemption, launching strictly between two events is
//! dominated: the free-GPU set is constant there, so the same launch at the
//! earlier event runs the same modes at the same powers while finishing no
//! later, and waiting for the interference-free slot is exactly the
//! next-event branch. The search therefore branches, at every event, on each
//! feasible launch set plus (when something is running) on launching nothing.
//!
//! The search drives the same `NodeSim` transitions as the simulator, so a
//! returned plan replays to its objective bit for bit.

use std::collections::BTreeMap;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::policy::ScriptedPolicy;
use crate::sim::{EventKind, NodeSim, SimOptions, SimResult};
use crate::workload::{PolicyConfig, PolicyKind, WorkloadSpec};

/// One oracle decision: the set launched at a given scheduling event.
/// Events are counted as in the simulator: 0 at time zero, +1 per
/// completion event.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PlanStep {
    pub event_index: usize,
    /// (app_id, gpu_count), sorted by app_id.
    pub launched: Vec<(String, u32)>,
}

/// An offline schedule with its replayed objective.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OraclePlan {
    pub decisions: Vec<PlanStep>,
    pub objective_energy_j: f64,
    pub objective_makespan_s: f64,
    /// True when the search provably explored the whole tree within limits.
    pub complete: bool,
}

impl OraclePlan {
    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("plans always serialize")
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse {
            path: String::from("<plan>"),
            message: format!("line {}, column {}: {}", e.line(), e.column(), e),
        })
    }
}

/// Search limits. The node budget keeps results deterministic; the optional
/// wall-clock budget cuts off long searches at the cost of determinism.
#[derive(Debug, Clone, Copy)]
pub struct OracleLimits {
    pub max_nodes: u64,
    pub time_budget_s: Option<f64>,
}

impl Default for OracleLimits {
    fn default() -> Self {
        Self {
            max_nodes: 2_000_000,
            time_budget_s: None,
        }
    }
}

/// All launch sets feasible under the current free capacity: non-empty app
/// subsets of the waiting set (at most one per free domain) crossed with
/// every profiled mode, within the free GPU budget. Sorted for determinism.
fn feasible_launch_sets(
    spec: &WorkloadSpec,
    waiting: &[usize],
    g_free: u32,
    domains_free: u32,
) -> Vec<Vec<(String, u32)>> {
    let mut apps: Vec<usize> = waiting.to_vec();
    apps.sort_by(|&a, &b| spec.applications[a].app_id.cmp(&spec.applications[b].app_id));
    let n = apps.len();
    let mut sets = Vec::new();
    if g_free == 0 || domains_free == 0 {
        return sets;
    }
    for mask in 1u64..(1u64 << n) {
        if mask.count_ones() > domains_free {
            continue;
        }
        let members: Vec<usize> = (0..n).filter(|i| mask & (1 << i) != 0).map(|i| apps[i]).collect();
        let mut current: Vec<(String, u32)> = Vec::new();
        cross(spec, &members, 0, g_free, &mut current, &mut sets);
    }
    sets.sort();
    sets
}

fn cross(
    spec: &WorkloadSpec,
    members: &[usize],
    depth: usize,
    g_free: u32,
    current: &mut Vec<(String, u32)>,
    out: &mut Vec<Vec<(String, u32)>>,
) {
    if depth == members.len() {
        out.push(current.clone());
        return;
    }
    let app = &spec.applications[members[depth]];
    let used: u32 = current.iter().map(|(_, g)| *g).sum();
    for profile in &app.profiles {
        if used + profile.gpu_count <= g_free {
            current.push((app.app_id.clone(), profile.gpu_count));
            cross(spec, members, depth + 1, g_free, current, out);
            current.pop();
        }
    }
}

struct Search<'a> {
    spec: &'a WorkloadSpec,
    limits: OracleLimits,
    started: Instant,
    nodes: u64,
    budget_hit: bool,
    /// Per-application lower bound on active energy: cheapest mode, no
    /// slowdown multipliers.
    min_active: Vec<f64>,
    best_energy: f64,
    best_plan: Option<Vec<PlanStep>>,
}

impl<'a> Search<'a> {
    fn lower_bound(&self, node: &NodeSim) -> f64 {
        let pending: f64 = node
            .waiting_app_indices()
            .iter()
            .map(|&i| self.min_active[i])
            .sum();
        node.accumulated_energy() + node.committed_running_energy() + pending
    }

    fn out_of_budget(&mut self) -> bool {
        if self.nodes > self.limits.max_nodes {
            self.budget_hit = true;
            return true;
        }
        if let Some(budget) = self.limits.time_budget_s {
            if self.nodes.is_multiple_of(1024) && self.started.elapsed().as_secs_f64() > budget {
                self.budget_hit = true;
                return true;
            }
        }
        false
    }

    fn consider(&mut self, energy: f64, plan: &[PlanStep]) {
        let replace = match &self.best_plan {
            None => true,
            Some(best) => {
                energy < self.best_energy
                    || (energy == self.best_energy && plan < best.as_slice())
            }
        };
        if replace {
            self.best_energy = energy;
            self.best_plan = Some(plan.to_vec());
        }
    }

    fn dfs(&mut self, node: &NodeSim, plan: &mut Vec<PlanStep>) {
        self.nodes += 1;
        if self.out_of_budget() {
            return;
        }
        if node.is_done() {
            let (_, _, total, _) = node.totals();
            self.consider(total, plan);
            return;
        }
        if self.best_plan.is_some() && self.lower_bound(node) > self.best_energy {
            return;
        }

        let sets = feasible_launch_sets(
            self.spec,
            node.waiting_app_indices(),
            node.free_gpu_count(),
            node.free_domain_count(),
        );
        for set in &sets {
            let mut child = node.clone();
            for (app_id, gpu_count) in set {
                child
                    .launch(app_id, *gpu_count)
                    .expect("enumerated sets are feasible");
            }
            child.advance().expect("running jobs advance");
            plan.push(PlanStep {
                event_index: node.event_index(),
                launched: set.clone(),
            });
            self.dfs(&child, plan);
            plan.pop();
        }
        // Holding back is only allowed while something is running.
        if !node.running_is_empty() {
            let mut child = node.clone();
            child.advance().expect("running jobs advance");
            self.dfs(&child, plan);
        }
    }
}

/// Extracts an oracle-format plan from a simulated trace.
pub fn plan_from_result(result: &SimResult) -> Vec<PlanStep> {
    let mut by_event: BTreeMap<usize, Vec<(String, u32)>> = BTreeMap::new();
    for ev in &result.trace.events {
        if ev.kind == EventKind::Launch {
            by_event
                .entry(ev.event_index)
                .or_default()
                .push((ev.app_id.clone(), ev.gpu_count));
        }
    }
    by_event
        .into_iter()
        .map(|(event_index, mut launched)| {
            launched.sort();
            PlanStep { event_index, launched }
        })
        .collect()
}

/// Finds an energy-minimal schedule. Exhaustive (provably optimal) when the
/// search finishes within limits; otherwise returns the best plan found with
/// `complete = false`. The incumbent is seeded with the online policies'
/// schedules, so the result is never worse than any of them.
pub fn solve(spec: &WorkloadSpec, limits: OracleLimits) -> Result<OraclePlan> {
    if spec.window_size == 0 {
        return Ok(OraclePlan {
            decisions: vec![],
            objective_energy_j: 0.0,
            objective_makespan_s: 0.0,
            complete: true,
        });
    }

    let mut search = Search {
        spec,
        limits,
        started: Instant::now(),
        nodes: 0,
        budget_hit: false,
        min_active: spec
            .applications
            .iter()
            .map(|a| {
                a.profiles
                    .iter()
                    .map(|p| p.busy_power_w * p.true_runtime_s)
                    .fold(f64::INFINITY, f64::min)
            })
            .collect(),
        best_energy: f64::INFINITY,
        best_plan: None,
    };

    // Seed the incumbent with every online policy that runs on this spec.
    for kind in [
        PolicyKind::SequentialMaxGpu,
        PolicyKind::SequentialOptimalGpu,
        PolicyKind::MarbleLike,
        PolicyKind::Ecosched,
    ] {
        let cfg = PolicyConfig::new(kind);
        if let Ok(result) = crate::sim::simulate(spec, &cfg, SimOptions::default()) {
            search.consider(result.total_energy_j, &plan_from_result(&result));
        }
    }

    let root = NodeSim::new(spec, false);
    let mut plan = Vec::new();
    search.dfs(&root, &mut plan);

    let decisions = search.best_plan.ok_or_else(|| {
        Error::EngineFault("oracle search found no feasible schedule".to_string())
    })?;
    let complete = !search.budget_hit;
    let replayed = replay(
        &OraclePlan {
            decisions: decisions.clone(),
            objective_energy_j: search.best_energy,
            objective_makespan_s: 0.0,
            complete,
        },
        spec,
    )?;
    debug_assert_eq!(replayed.total_energy_j, search.best_energy);
    Ok(OraclePlan {
        decisions,
        objective_energy_j: replayed.total_energy_j,
        objective_makespan_s: replayed.makespan_s,
        complete,
    })
}

/// Replays a plan through the simulator with a scripted policy and returns
/// the standard simulation result.
pub fn replay(plan: &OraclePlan, spec: &WorkloadSpec) -> Result<SimResult> {
    replay_opts(plan, spec, SimOptions::default())
}

pub fn replay_opts(plan: &OraclePlan, spec: &WorkloadSpec, opts: SimOptions) -> Result<SimResult> {
    let mut steps: BTreeMap<usize, Vec<(String, u32)>> = BTreeMap::new();
    for step in &plan.decisions {
        if steps.insert(step.event_index, step.launched.clone()).is_some() {
            return Err(Error::Replay {
                event_index: step.event_index,
                message: "plan has two decisions for the same event".to_string(),
            });
        }
    }
    let cfg = PolicyConfig::new(PolicyKind::OracleReplay);
    let estimates = crate::sim::window_estimates_for(spec, &cfg)?;
    let mut scripted = ScriptedPolicy::new(steps);
    match crate::sim::simulate_with_policy(spec, &mut scripted, &estimates, opts) {
        Ok(result) => {
            let unconsumed = scripted.unconsumed();
            if let Some(&first) = unconsumed.first() {
                return Err(Error::Replay {
                    event_index: first,
                    message: format!(
                        "plan decision at event {first} was never reachable (simulation ended first)"
                    ),
                });
            }
            Ok(result)
        }
        Err(Error::EngineFault(message)) => Err(Error::Replay {
            event_index: scripted.last_emitted().unwrap_or(0),
            message,
        }),
        Err(other) => Err(other),
    }
}

/// Audit record for the search lower bound (test support).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundAudit {
    pub nodes_checked: u64,
    /// Maximum of (bound - cheapest completion energy under the node) over
    /// all internal nodes; admissible bounds keep this at or below zero.
    pub max_excess: f64,
}

/// Exhaustively walks the decision tree without pruning, checking at every
/// internal node that the lower bound does not exceed the cheapest completion
/// reachable beneath it. Only intended for window-scale instances.
pub fn audit_bound(spec: &WorkloadSpec) -> BoundAudit {
    let min_active: Vec<f64> = spec
        .applications
        .iter()
        .map(|a| {
            a.profiles
                .iter()
                .map(|p| p.busy_power_w * p.true_runtime_s)
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    let mut audit = BoundAudit {
        nodes_checked: 0,
        max_excess: f64::NEG_INFINITY,
    };
    let root = NodeSim::new(spec, false);
    walk(spec, &min_active, &root, &mut audit);
    audit
}

/// Returns the cheapest completion energy under `node`.
fn walk(spec: &WorkloadSpec, min_active: &[f64], node: &NodeSim, audit: &mut BoundAudit) -> f64 {
    if node.is_done() {
        return node.totals().2;
    }
    let pending: f64 = node
        .waiting_app_indices()
        .iter()
        .map(|&i| min_active[i])
        .sum();
    let bound = node.accumulated_energy() + node.committed_running_energy() + pending;

    let mut subtree_min = f64::INFINITY;
    let sets = feasible_launch_sets(
        spec,
        node.waiting_app_indices(),
        node.free_gpu_count(),
        node.free_domain_count(),
    );
    for set in &sets {
        let mut child = node.clone();
        for (app_id, gpu_count) in set {
            child.launch(app_id, *gpu_count).expect("enumerated sets are feasible");
        }
        child.advance().expect("running jobs advance");
        subtree_min = subtree_min.min(walk(spec, min_active, &child, audit));
    }
    if !node.running_is_empty() {
        let mut child = node.clone();
        child.advance().expect("running jobs advance");
        subtree_min = subtree_min.min(walk(spec, min_active, &child, audit));
    }

    audit.nodes_checked += 1;
    audit.max_excess = audit.max_excess.max(bound - subtree_min);
    subtree_min
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::workload::{Application, ModeProfile, Platform};

    fn profile(g: u32, runtime: f64, power: f64, util: f64) -> ModeProfile {
        ModeProfile {
            gpu_count: g,
            true_runtime_s: runtime,
            busy_power_w: power,
            dram_util: util,
            profiling_energy_j: 0.0,
            profiling_duration_s: 0.0,
        }
    }

    fn spec(m: u32, k: u32, idle: f64, apps: Vec<Application>) -> WorkloadSpec {
        let spec = WorkloadSpec {
            platform: Platform {
                total_gpus: m,
                numa_domains: k,
                idle_power_per_gpu_w: idle,
                name: "test".to_string(),
            },
            window_size: apps.len() as u32,
            applications: apps,
        };
        assert!(crate::workload::validate(&spec).is_empty());
        spec
    }

    #[test]
    fn oracle_prefers_the_cheaper_single_app_mode() {
        // 1 GPU for 100 s at 200 W + 1 idle GPU at 50 W -> 25 kJ
        // beats 2 GPUs for 60 s at 450 W -> 27 kJ.
        let s = spec(
            2,
            1,
            50.0,
            vec![Application::new(
                "only",
                1.0,
                1.0,
                vec![profile(1, 100.0, 200.0, 0.9), profile(2, 60.0, 450.0, 0.6)],
            )],
        );
        let plan = solve(&s, OracleLimits::default()).unwrap();
        assert!(plan.complete);
        assert_eq!(plan.objective_energy_j, 25_000.0);
        assert_eq!(plan.decisions.len(), 1);
        assert_eq!(plan.decisions[0].launched, vec![("only".to_string(), 1)]);
        let replayed = replay(&plan, &s).unwrap();
        assert_eq!(replayed.total_energy_j, plan.objective_energy_j);
        assert_eq!(replayed.makespan_s, plan.objective_makespan_s);
    }

    #[test]
    fn all_full_node_modes_match_sequential_max_gpu() {
        let s = spec(
            2,
            1,
            40.0,
            vec![
                Application::new("a", 1.0, 1.0, vec![profile(2, 50.0, 300.0, 0.5)]),
                Application::new("b", 1.0, 1.0, vec![profile(2, 70.0, 320.0, 0.5)]),
            ],
        );
        let plan = solve(&s, OracleLimits::default()).unwrap();
        let seq = crate::sim::simulate(
            &s,
            &PolicyConfig::new(PolicyKind::SequentialMaxGpu),
            SimOptions::default(),
        )
        .unwrap();
        assert_eq!(plan.objective_energy_j, seq.total_energy_j);
        assert_eq!(plan.objective_makespan_s, seq.makespan_s);
    }

    #[test]
    fn empty_window_is_a_trivial_plan() {
        let s = WorkloadSpec {
            platform: Platform {
                total_gpus: 1,
                numa_domains: 1,
                idle_power_per_gpu_w: 10.0,
                name: "t".to_string(),
            },
            window_size: 0,
            applications: vec![],
        };
        let plan = solve(&s, OracleLimits::default()).unwrap();
        assert!(plan.complete);
        assert_eq!(plan.objective_energy_j, 0.0);
        assert!(plan.decisions.is_empty());
    }

    #[test]
    fn infeasible_plan_fails_replay_with_the_event() {
        let s = spec(
            4,
            2,
            10.0,
            vec![Application::new("a", 1.0, 1.0, vec![profile(2, 10.0, 100.0, 0.5)])],
        );
        let plan = OraclePlan {
            decisions: vec![PlanStep {
                event_index: 0,
                launched: vec![("a".to_string(), 5)],
            }],
            objective_energy_j: 0.0,
            objective_makespan_s: 0.0,
            complete: true,
        };
        match replay(&plan, &s) {
            Err(Error::Replay { event_index, .. }) => assert_eq!(event_index, 0),
            other => panic!("expected replay error, got {other:?}"),
        }
    }

    #[test]
    fn unreachable_plan_steps_fail_replay() {
        let s = spec(
            4,
            2,
            10.0,
            vec![Application::new("a", 1.0, 1.0, vec![profile(2, 10.0, 100.0, 0.5)])],
        );
        let plan = OraclePlan {
            decisions: vec![
                PlanStep { event_index: 0, launched: vec![("a".to_string(), 2)] },
                PlanStep { event_index: 7, launched: vec![("a".to_string(), 2)] },
            ],
            objective_energy_j: 0.0,
            objective_makespan_s: 0.0,
            complete: true,
        };
        match replay(&plan, &s) {
            Err(Error::Replay { event_index, .. }) => assert_eq!(event_index, 7),
            other => panic!("expected replay error, got {other:?}"),
        }
    }

    #[test]
    fn bound_is_admissible_on_a_small_instance() {
        let s = spec(
            2,
            2,
            30.0,
            vec![
                Application::new("a", 1.1, 1.0, vec![profile(1, 40.0, 120.0, 0.7), profile(2, 30.0, 260.0, 0.45)]),
                Application::new("b", 1.0, 1.0, vec![profile(1, 60.0, 110.0, 0.8)]),
            ],
        );
        let audit = audit_bound(&s);
        assert!(audit.nodes_checked > 0);
        assert!(audit.max_excess <= 1e-9, "bound overshoots by {}", audit.max_excess);
    }

    #[test]
    fn bound_is_admissible_on_random_small_instances() {
        for seed in 0..25u64 {
            let workload = crate::fixtures::random_workload(
                seed,
                &crate::fixtures::RandomFixtureConfig {
                    apps: 3,
                    total_gpus: 3,
                    numa_domains: 2,
                    idle_power_per_gpu_w: 40.0,
                    max_modes_per_app: 2,
                },
            );
            let audit = audit_bound(&workload);
            assert!(
                audit.max_excess <= 1e-9,
                "seed {seed}: bound overshoots by {}",
                audit.max_excess
            );
        }
    }

    #[test]
    fn plan_serialization_round_trips() {
        let plan = OraclePlan {
            decisions: vec![PlanStep {
                event_index: 0,
                launched: vec![("a".to_string(), 2), ("b".to_string(), 1)],
            }],
            objective_energy_j: 123.0,
            objective_makespan_s: 4.5,
            complete: true,
        };
        let parsed = OraclePlan::from_json_str(&plan.to_json_string()).unwrap();
        assert_eq!(plan, parsed);
    }
}
