//! `ecosched` command-line interface.
//!
//! Exit codes: 0 on success, 1 for parse/validation/configuration problems,
//! 2 for engine faults.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use ecosched_core::commands::{
    self, CompareConfig, EmitKind, FixtureKind, RunConfig,
};
use ecosched_core::oracle::OracleLimits;
use ecosched_core::workload::{PolicyConfig, PolicyKind};

#[derive(Parser)]
#[command(
    name = "ecosched",
    about = "Energy-aware co-scheduling policies and a discrete-event node simulator",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct PolicyArgs {
    /// Idle-penalty weight in the action score.
    #[arg(long, default_value_t = PolicyConfig::DEFAULT_LAMBDA)]
    lambda: f64,
    /// Predicted-slowdown tolerance for mode filtering.
    #[arg(long, default_value_t = PolicyConfig::DEFAULT_TAU)]
    tau: f64,
}

#[derive(Args)]
struct EmitArgs {
    /// Output directory for emitted files.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Artifacts to emit (comma separated): trace_csv, events_json,
    /// gantt_svg, report_json, report_table.
    #[arg(long, value_delimiter = ',')]
    emit: Vec<String>,
    /// Fold the one-time profiling energy into the totals.
    #[arg(long)]
    include_profiling_energy: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run one policy over a workload file.
    Simulate {
        #[arg(long)]
        workload: PathBuf,
        /// Policy: ecosched, sequential_max_gpu, sequential_optimal_gpu,
        /// marble_like.
        #[arg(long, default_value = "ecosched")]
        policy: String,
        #[command(flatten)]
        policy_args: PolicyArgs,
        #[command(flatten)]
        emit_args: EmitArgs,
    },
    /// Run every policy on one workload and report against both sequential
    /// baselines.
    Compare {
        #[arg(long)]
        workload: PathBuf,
        #[command(flatten)]
        policy_args: PolicyArgs,
        /// Output directory for results and reports.
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Also solve and replay the offline oracle.
        #[arg(long)]
        oracle: bool,
        /// Wall-clock budget for the oracle search, in seconds.
        #[arg(long)]
        oracle_time_budget: Option<f64>,
        /// Node budget for the oracle search.
        #[arg(long, default_value_t = OracleLimits::default().max_nodes)]
        oracle_max_nodes: u64,
        #[arg(long)]
        include_profiling_energy: bool,
    },
    /// Render a schedule trace (events JSON) as an SVG Gantt chart.
    Gantt {
        #[arg(long)]
        trace: PathBuf,
        #[arg(long, default_value = "gantt.svg")]
        out: PathBuf,
    },
    /// Check a workload file against every invariant.
    Validate {
        #[arg(long)]
        workload: PathBuf,
    },
    /// Compute the offline energy-minimal plan.
    Oracle {
        #[arg(long)]
        workload: PathBuf,
        #[arg(long, default_value = "plan.json")]
        out: PathBuf,
        #[arg(long)]
        oracle_time_budget: Option<f64>,
        #[arg(long, default_value_t = OracleLimits::default().max_nodes)]
        oracle_max_nodes: u64,
    },
    /// Replay a stored plan over a workload.
    Replay {
        #[arg(long)]
        workload: PathBuf,
        #[arg(long)]
        plan: PathBuf,
        #[command(flatten)]
        emit_args: EmitArgs,
    },
    /// Write a bundled or randomly generated workload fixture.
    GenFixture {
        /// case-study, compute-bound, or random.
        #[arg(long)]
        kind: String,
        /// Seed for random generation.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Number of applications (random fixtures only).
        #[arg(long)]
        apps: Option<u32>,
        #[arg(long, default_value = "workload.json")]
        out: PathBuf,
    },
}

fn parse_emit(args: &EmitArgs) -> Result<std::collections::BTreeSet<EmitKind>, ecosched_core::Error> {
    if args.emit.is_empty() {
        return Ok(EmitKind::default_set());
    }
    args.emit.iter().map(|s| s.parse()).collect()
}

fn run() -> Result<(), ecosched_core::Error> {
    match Cli::parse().command {
        Command::Simulate {
            workload,
            policy,
            policy_args,
            emit_args,
        } => {
            let kind: PolicyKind = policy.parse()?;
            let mut cfg = RunConfig::new(workload, kind, &emit_args.out);
            cfg.lambda = policy_args.lambda;
            cfg.tau = policy_args.tau;
            cfg.emit = parse_emit(&emit_args)?;
            cfg.include_profiling_energy = emit_args.include_profiling_energy;
            let (_, output) = commands::cmd_simulate(&cfg)?;
            println!("{}", output.summary);
        }
        Command::Compare {
            workload,
            policy_args,
            out,
            oracle,
            oracle_time_budget,
            oracle_max_nodes,
            include_profiling_energy,
        } => {
            let mut cfg = CompareConfig::new(workload, out);
            cfg.lambda = policy_args.lambda;
            cfg.tau = policy_args.tau;
            cfg.include_oracle = oracle;
            cfg.oracle_limits = OracleLimits {
                max_nodes: oracle_max_nodes,
                time_budget_s: oracle_time_budget,
            };
            cfg.include_profiling_energy = include_profiling_energy;
            let (_, output) = commands::cmd_compare(&cfg)?;
            print!("{}", output.summary);
        }
        Command::Gantt { trace, out } => {
            let output = commands::cmd_gantt(&trace, &out)?;
            println!("{}", output.summary);
        }
        Command::Validate { workload } => {
            let violations = commands::cmd_validate(&workload)?;
            if violations.is_empty() {
                println!("{}: valid", workload.display());
            } else {
                for v in &violations {
                    eprintln!("violation: {v}");
                }
                return Err(ecosched_core::Error::Validation { violations });
            }
        }
        Command::Oracle {
            workload,
            out,
            oracle_time_budget,
            oracle_max_nodes,
        } => {
            let limits = OracleLimits {
                max_nodes: oracle_max_nodes,
                time_budget_s: oracle_time_budget,
            };
            let (_, output) = commands::cmd_oracle(&workload, &out, limits)?;
            println!("{}", output.summary);
        }
        Command::Replay {
            workload,
            plan,
            emit_args,
        } => {
            let mut cfg = RunConfig::new(workload, PolicyKind::OracleReplay, &emit_args.out);
            cfg.emit = parse_emit(&emit_args)?;
            cfg.include_profiling_energy = emit_args.include_profiling_energy;
            let (_, output) = commands::cmd_replay(&cfg, &plan)?;
            println!("{}", output.summary);
        }
        Command::GenFixture {
            kind,
            seed,
            apps,
            out,
        } => {
            let kind: FixtureKind = kind.parse()?;
            let (_, output) = commands::cmd_gen_fixture(kind, seed, apps, &out)?;
            println!("{}", output.summary);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(commands::exit_code_for(&e) as u8)
        }
    }
}
