//! Energy-aware co-scheduling for multi-GPU NUMA nodes.
//!
//! The crate has three layers:
//!
//! - **Policies**: online performance modeling from DRAM-utilization profiles
//!   ([`perf_model`]) feeding a score-based joint GPU-count/co-scheduling
//!   selector plus sequential and pinned-packing baselines ([`policy`]).
//! - **Simulation**: a deterministic discrete-event engine for one node with
//!   per-interval active/idle energy accounting ([`sim`]), and an exact
//!   offline branch-and-bound scheduler for ground-truth comparison
//!   ([`oracle`]).
//! - **Reporting**: evaluation metrics and comparison reports ([`metrics`]),
//!   Gantt SVG rendering ([`gantt`]), bundled fixtures ([`fixtures`]), and
//!   the command layer used by the CLI ([`commands`]).

pub mod commands;
pub mod error;
pub mod fixtures;
pub mod gantt;
pub mod metrics;
pub mod oracle;
pub mod perf_model;
pub mod policy;
pub mod sim;
pub mod workload;

pub use error::{Error, Result};
pub use workload::{load_workload, validate, PolicyConfig, PolicyKind, WorkloadSpec};
