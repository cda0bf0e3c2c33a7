//! Command-level operations behind the CLI: run one policy, compare all
//! policies, render Gantt charts, validate workloads, solve and replay
//! offline plans, and generate fixtures. The binary is a thin argument
//! parser over these functions, which keeps them callable from tests and
//! bindings.
//!
//! Emitted files contain no timestamps or machine-specific content, so
//! repeated runs over identical inputs are byte-identical.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::fixtures;
use crate::gantt::render_gantt;
use crate::metrics::ComparisonReport;
use crate::oracle::{self, OracleLimits, OraclePlan};
use crate::sim::{simulate, ScheduleTrace, SimOptions, SimResult};
use crate::workload::{load_workload, validate, PolicyConfig, PolicyKind, WorkloadSpec};

/// Artifacts a run command can emit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum EmitKind {
    TraceCsv,
    EventsJson,
    GanttSvg,
    ReportJson,
    ReportTable,
}

impl EmitKind {
    pub const ALL: [EmitKind; 5] = [
        EmitKind::TraceCsv,
        EmitKind::EventsJson,
        EmitKind::GanttSvg,
        EmitKind::ReportJson,
        EmitKind::ReportTable,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            EmitKind::TraceCsv => "trace_csv",
            EmitKind::EventsJson => "events_json",
            EmitKind::GanttSvg => "gantt_svg",
            EmitKind::ReportJson => "report_json",
            EmitKind::ReportTable => "report_table",
        }
    }

    pub fn default_set() -> BTreeSet<EmitKind> {
        [
            EmitKind::TraceCsv,
            EmitKind::EventsJson,
            EmitKind::ReportJson,
            EmitKind::ReportTable,
        ]
        .into_iter()
        .collect()
    }
}

impl std::str::FromStr for EmitKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        EmitKind::ALL
            .iter()
            .copied()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown emit kind '{s}'")))
    }
}

/// Configuration for `simulate` and `replay` runs.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub workload_path: PathBuf,
    pub policy_kind: PolicyKind,
    pub lambda: f64,
    pub tau: f64,
    pub output_dir: PathBuf,
    pub emit: BTreeSet<EmitKind>,
    pub include_profiling_energy: bool,
}

impl RunConfig {
    pub fn new(workload_path: impl Into<PathBuf>, policy_kind: PolicyKind, output_dir: impl Into<PathBuf>) -> Self {
        Self {
            workload_path: workload_path.into(),
            policy_kind,
            lambda: PolicyConfig::DEFAULT_LAMBDA,
            tau: PolicyConfig::DEFAULT_TAU,
            output_dir: output_dir.into(),
            emit: EmitKind::default_set(),
            include_profiling_energy: false,
        }
    }

    fn policy_config(&self) -> PolicyConfig {
        PolicyConfig::new(self.policy_kind)
            .with_lambda(self.lambda)
            .with_tau(self.tau)
    }

    fn sim_options(&self) -> SimOptions {
        SimOptions {
            include_profiling_energy: self.include_profiling_energy,
        }
    }
}

/// What a command produced: files on disk plus a printable summary.
#[derive(Debug, Clone)]
pub struct CommandOutput {
    pub files: Vec<PathBuf>,
    pub summary: String,
}

fn ensure_output_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)
        .map_err(|e| Error::Config(format!("output dir '{}' is not writable: {e}", dir.display())))
}

fn write_file(path: &Path, contents: &str, files: &mut Vec<PathBuf>) -> Result<()> {
    std::fs::write(path, contents)
        .map_err(|e| Error::Config(format!("cannot write '{}': {e}", path.display())))?;
    files.push(path.to_path_buf());
    Ok(())
}

fn summary_line(result: &SimResult) -> String {
    format!(
        "{}: energy {:.1} J, makespan {:.1} s, EDP {:.3e} J*s",
        result.policy, result.total_energy_j, result.makespan_s, result.edp_j_s
    )
}

fn emit_result(result: &SimResult, cfg: &RunConfig) -> Result<CommandOutput> {
    if cfg.emit.is_empty() {
        return Err(Error::Config("emit set must not be empty".to_string()));
    }
    ensure_output_dir(&cfg.output_dir)?;
    let mut files = Vec::new();
    for kind in &cfg.emit {
        match kind {
            EmitKind::TraceCsv => write_file(
                &cfg.output_dir.join("trace.csv"),
                &result.trace.to_csv_string(),
                &mut files,
            )?,
            EmitKind::EventsJson => write_file(
                &cfg.output_dir.join("events.json"),
                &result.trace.to_json_string(),
                &mut files,
            )?,
            EmitKind::GanttSvg => write_file(
                &cfg.output_dir.join("gantt.svg"),
                &render_gantt(&result.trace),
                &mut files,
            )?,
            EmitKind::ReportJson => write_file(
                &cfg.output_dir.join("report.json"),
                &result.to_json_string(),
                &mut files,
            )?,
            EmitKind::ReportTable => {
                let mut table = summary_line(result);
                table.push('\n');
                table.push_str(&format!(
                    "{:<20} {:>12} {:>16} {:>10} {:>12}\n",
                    "app", "gpu_count", "runtime_s", "loss_%", "energy_j"
                ));
                for (app, stats) in &result.trace.per_app {
                    table.push_str(&format!(
                        "{:<20} {:>12} {:>16.2} {:>10.2} {:>12.1}\n",
                        app,
                        stats.gpu_count,
                        stats.runtime_s,
                        100.0 * result.per_app_perf_loss[app],
                        stats.active_energy_j
                    ));
                }
                write_file(&cfg.output_dir.join("report.txt"), &table, &mut files)?
            }
        }
    }
    Ok(CommandOutput {
        files,
        summary: summary_line(result),
    })
}

/// Runs one policy over a workload file and writes the requested artifacts.
pub fn cmd_simulate(cfg: &RunConfig) -> Result<(SimResult, CommandOutput)> {
    let spec = load_workload(&cfg.workload_path)?;
    let result = simulate(&spec, &cfg.policy_config(), cfg.sim_options())?;
    let output = emit_result(&result, cfg)?;
    Ok((result, output))
}

/// Options for the multi-policy comparison.
#[derive(Debug, Clone)]
pub struct CompareConfig {
    pub workload_path: PathBuf,
    pub lambda: f64,
    pub tau: f64,
    pub output_dir: PathBuf,
    pub include_oracle: bool,
    pub oracle_limits: OracleLimits,
    pub include_profiling_energy: bool,
}

impl CompareConfig {
    pub fn new(workload_path: impl Into<PathBuf>, output_dir: impl Into<PathBuf>) -> Self {
        Self {
            workload_path: workload_path.into(),
            lambda: PolicyConfig::DEFAULT_LAMBDA,
            tau: PolicyConfig::DEFAULT_TAU,
            output_dir: output_dir.into(),
            include_oracle: false,
            oracle_limits: OracleLimits::default(),
            include_profiling_energy: false,
        }
    }
}

/// Runs every policy (optionally the oracle) on one workload and writes one
/// comparison report per sequential baseline, mirroring the standard
/// two-baseline layout.
pub fn cmd_compare(cfg: &CompareConfig) -> Result<(Vec<ComparisonReport>, CommandOutput)> {
    let spec = load_workload(&cfg.workload_path)?;
    ensure_output_dir(&cfg.output_dir)?;
    let opts = SimOptions {
        include_profiling_energy: cfg.include_profiling_energy,
    };

    let kinds = [
        PolicyKind::Ecosched,
        PolicyKind::MarbleLike,
        PolicyKind::SequentialOptimalGpu,
        PolicyKind::SequentialMaxGpu,
    ];
    let mut results: Vec<SimResult> = Vec::new();
    for kind in kinds {
        let policy_cfg = PolicyConfig::new(kind).with_lambda(cfg.lambda).with_tau(cfg.tau);
        results.push(simulate(&spec, &policy_cfg, opts)?);
    }

    let mut notes = std::collections::BTreeMap::new();
    let mut files = Vec::new();
    if cfg.include_oracle {
        let plan = oracle::solve(&spec, cfg.oracle_limits)?;
        if !plan.complete {
            notes.insert(
                "oracle_replay".to_string(),
                "search budget exhausted; objective is the best plan found".to_string(),
            );
        }
        write_file(
            &cfg.output_dir.join("oracle_plan.json"),
            &plan.to_json_string(),
            &mut files,
        )?;
        results.push(oracle::replay_opts(&plan, &spec, opts)?);
    }

    for result in &results {
        write_file(
            &cfg.output_dir.join(format!("result_{}.json", result.policy)),
            &result.to_json_string(),
            &mut files,
        )?;
    }

    let refs: Vec<&SimResult> = results.iter().collect();
    let mut reports = Vec::new();
    let mut summary = String::new();
    for baseline_kind in [PolicyKind::SequentialOptimalGpu, PolicyKind::SequentialMaxGpu] {
        let baseline = results
            .iter()
            .find(|r| r.policy == baseline_kind.name())
            .expect("both baselines were simulated");
        let mut report = ComparisonReport::build(baseline, &refs)?;
        report.notes = notes.clone();
        write_file(
            &cfg.output_dir.join(format!("compare_vs_{}.json", baseline_kind.name())),
            &report.to_json_string(),
            &mut files,
        )?;
        write_file(
            &cfg.output_dir.join(format!("compare_vs_{}.txt", baseline_kind.name())),
            &report.to_table_string(),
            &mut files,
        )?;
        summary.push_str(&report.to_table_string());
        summary.push('\n');
        reports.push(report);
    }

    Ok((reports, CommandOutput { files, summary }))
}

/// Renders a trace (the events JSON emitted by a run) to an SVG file.
pub fn cmd_gantt(trace_path: &Path, out_path: &Path) -> Result<CommandOutput> {
    let text = std::fs::read_to_string(trace_path).map_err(|e| Error::Io {
        path: trace_path.display().to_string(),
        source: e,
    })?;
    let trace = ScheduleTrace::from_json_str(&text).map_err(|e| match e {
        Error::Parse { message, .. } => Error::Parse {
            path: trace_path.display().to_string(),
            message,
        },
        other => other,
    })?;
    let mut files = Vec::new();
    if let Some(parent) = out_path.parent() {
        if !parent.as_os_str().is_empty() {
            ensure_output_dir(parent)?;
        }
    }
    write_file(out_path, &render_gantt(&trace), &mut files)?;
    Ok(CommandOutput {
        files,
        summary: format!("wrote {}", out_path.display()),
    })
}

/// Loads and validates a workload, returning all violations.
pub fn cmd_validate(workload_path: &Path) -> Result<Vec<String>> {
    let text = std::fs::read_to_string(workload_path).map_err(|e| Error::Io {
        path: workload_path.display().to_string(),
        source: e,
    })?;
    match crate::workload::parse_workload(&text) {
        Ok(spec) => Ok(validate(&spec)),
        Err(Error::Validation { violations }) => Ok(violations),
        Err(e) => Err(e),
    }
}

/// Solves the offline plan and writes it as JSON.
pub fn cmd_oracle(
    workload_path: &Path,
    out_path: &Path,
    limits: OracleLimits,
) -> Result<(OraclePlan, CommandOutput)> {
    let spec = load_workload(workload_path)?;
    let plan = oracle::solve(&spec, limits)?;
    let mut files = Vec::new();
    if let Some(parent) = out_path.parent() {
        if !parent.as_os_str().is_empty() {
            ensure_output_dir(parent)?;
        }
    }
    write_file(out_path, &plan.to_json_string(), &mut files)?;
    let summary = format!(
        "oracle: energy {:.1} J, makespan {:.1} s{}",
        plan.objective_energy_j,
        plan.objective_makespan_s,
        if plan.complete { "" } else { " (incomplete search)" }
    );
    Ok((plan, CommandOutput { files, summary }))
}

/// Replays a stored plan over a workload and writes the run artifacts.
pub fn cmd_replay(cfg: &RunConfig, plan_path: &Path) -> Result<(SimResult, CommandOutput)> {
    let spec = load_workload(&cfg.workload_path)?;
    let text = std::fs::read_to_string(plan_path).map_err(|e| Error::Io {
        path: plan_path.display().to_string(),
        source: e,
    })?;
    let plan = OraclePlan::from_json_str(&text)?;
    let result = oracle::replay_opts(&plan, &spec, cfg.sim_options())?;
    let output = emit_result(&result, cfg)?;
    Ok((result, output))
}

/// Fixture families the generator can produce.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FixtureKind {
    CaseStudy,
    ComputeBound,
    Random,
}

impl std::str::FromStr for FixtureKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "case-study" => Ok(FixtureKind::CaseStudy),
            "compute-bound" => Ok(FixtureKind::ComputeBound),
            "random" => Ok(FixtureKind::Random),
            other => Err(Error::Config(format!(
                "unknown fixture kind '{other}' (expected case-study, compute-bound, or random)"
            ))),
        }
    }
}

/// Writes one of the bundled fixtures (or a seeded random workload) to disk.
pub fn cmd_gen_fixture(
    kind: FixtureKind,
    seed: u64,
    apps: Option<u32>,
    out_path: &Path,
) -> Result<(WorkloadSpec, CommandOutput)> {
    let spec = match kind {
        FixtureKind::CaseStudy => fixtures::case_study(),
        FixtureKind::ComputeBound => fixtures::compute_bound(),
        FixtureKind::Random => {
            let mut cfg = fixtures::RandomFixtureConfig::default();
            if let Some(n) = apps {
                cfg.apps = n;
            }
            fixtures::random_workload(seed, &cfg)
        }
    };
    let mut files = Vec::new();
    if let Some(parent) = out_path.parent() {
        if !parent.as_os_str().is_empty() {
            ensure_output_dir(parent)?;
        }
    }
    write_file(out_path, &spec.to_json_string(), &mut files)?;
    Ok((
        spec,
        CommandOutput {
            files,
            summary: format!("wrote {}", out_path.display()),
        },
    ))
}

/// Process exit code for an error, following the documented contract:
/// 1 for parse/validation/configuration problems, 2 for engine faults.
pub fn exit_code_for(error: &Error) -> i32 {
    match error {
        Error::EngineFault(_) | Error::Replay { .. } => 2,
        _ => 1,
    }
}
