//! End-to-end checks of the `ecosched` binary: exit codes, summary output,
//! and emitted files.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ecosched"))
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

#[test]
fn simulate_prints_a_summary_and_writes_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let output = run(&[
        "simulate",
        "--workload",
        fixture("case_study.json").to_str().unwrap(),
        "--policy",
        "ecosched",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(output.status.success(), "{output:?}");
    let stdout = String::from_utf8(output.stdout).unwrap();
    assert!(stdout.contains("ecosched: energy"), "{stdout}");
    assert!(stdout.contains("makespan"));
    assert!(stdout.contains("EDP"));
    for name in ["trace.csv", "events.json", "report.json", "report.txt"] {
        assert!(out.join(name).exists(), "{name} missing");
    }
}

#[test]
fn single_full_node_job_has_zero_idle_energy() {
    let dir = tempfile::tempdir().unwrap();
    let workload = dir.path().join("one.json");
    std::fs::write(
        &workload,
        r#"{
            "platform": {"total_gpus": 2, "numa_domains": 1,
                         "idle_power_per_gpu_w": 70.0, "name": "mini"},
            "window_size": 1,
            "applications": [
                {"app_id": "whole",
                 "profiles": [{"gpu_count": 2, "true_runtime_s": 50.0,
                               "busy_power_w": 400.0, "dram_util": 0.5,
                               "profiling_energy_j": 0.0, "profiling_duration_s": 0.0}]}
            ]
        }"#,
    )
    .unwrap();
    let out = dir.path().join("run");
    let output = run(&[
        "simulate",
        "--workload",
        workload.to_str().unwrap(),
        "--policy",
        "sequential_max_gpu",
        "--out",
        out.to_str().unwrap(),
        "--emit",
        "report_json",
    ]);
    assert!(output.status.success());
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["idle_energy_j"], 0.0);
    assert_eq!(report["total_energy_j"], 20_000.0);
}

#[test]
fn bad_json_exits_one_with_line_context() {
    let dir = tempfile::tempdir().unwrap();
    let workload = dir.path().join("bad.json");
    std::fs::write(&workload, "{\n  \"platform\": oops\n}").unwrap();
    let output = run(&[
        "simulate",
        "--workload",
        workload.to_str().unwrap(),
        "--out",
        dir.path().join("o").to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(1));
    let stderr = String::from_utf8(output.stderr).unwrap();
    assert!(stderr.contains("line 2"), "{stderr}");
}

#[test]
fn validate_flags_violations_and_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let workload = dir.path().join("broken.json");
    let text = std::fs::read_to_string(fixture("case_study.json"))
        .unwrap()
        .replace("\"numa_domains\": 2", "\"numa_domains\": 8");
    std::fs::write(&workload, text).unwrap();
    let output = run(&["validate", "--workload", workload.to_str().unwrap()]);
    assert_eq!(output.status.code(), Some(1));
    let stderr = String::from_utf8(output.stderr).unwrap();
    assert!(stderr.contains("numa_domains exceeds total_gpus"), "{stderr}");

    let ok = run(&["validate", "--workload", fixture("case_study.json").to_str().unwrap()]);
    assert!(ok.status.success());
}

#[test]
fn compare_with_oracle_keeps_oracle_on_top() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("cmp");
    let output = run(&[
        "compare",
        "--workload",
        fixture("compute_bound.json").to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--oracle",
    ]);
    assert!(output.status.success(), "{output:?}");
    let report: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(out.join("compare_vs_sequential_optimal_gpu.json")).unwrap(),
    )
    .unwrap();
    let oracle_saving = report["per_policy"]["oracle_replay"]["energy_saving_pct"]
        .as_f64()
        .unwrap();
    for (policy, outcome) in report["per_policy"].as_object().unwrap() {
        let saving = outcome["energy_saving_pct"].as_f64().unwrap();
        assert!(
            oracle_saving >= saving - 1e-9,
            "{policy} saves {saving}% above the oracle's {oracle_saving}%"
        );
    }
    assert!(out.join("oracle_plan.json").exists());
}

#[test]
fn oracle_then_replay_reproduces_the_objective() {
    let dir = tempfile::tempdir().unwrap();
    let plan_path = dir.path().join("plan.json");
    let output = run(&[
        "oracle",
        "--workload",
        fixture("compute_bound.json").to_str().unwrap(),
        "--out",
        plan_path.to_str().unwrap(),
    ]);
    assert!(output.status.success());
    let plan: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&plan_path).unwrap()).unwrap();

    let out = dir.path().join("replay");
    let output = run(&[
        "replay",
        "--workload",
        fixture("compute_bound.json").to_str().unwrap(),
        "--plan",
        plan_path.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--emit",
        "report_json",
    ]);
    assert!(output.status.success(), "{output:?}");
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["total_energy_j"], plan["objective_energy_j"]);
}

#[test]
fn infeasible_plan_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let plan_path = dir.path().join("plan.json");
    std::fs::write(
        &plan_path,
        r#"{"decisions": [{"event_index": 0, "launched": [["pot3d", 9]]}],
            "objective_energy_j": 0.0, "objective_makespan_s": 0.0, "complete": true}"#,
    )
    .unwrap();
    let output = run(&[
        "replay",
        "--workload",
        fixture("case_study.json").to_str().unwrap(),
        "--plan",
        plan_path.to_str().unwrap(),
        "--out",
        dir.path().join("o").to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(2));
    let stderr = String::from_utf8(output.stderr).unwrap();
    assert!(stderr.contains("event 0"), "{stderr}");
}

#[test]
fn gantt_renders_the_emitted_trace() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    run(&[
        "simulate",
        "--workload",
        fixture("case_study.json").to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--emit",
        "events_json",
    ]);
    let svg = dir.path().join("g.svg");
    let output = run(&[
        "gantt",
        "--trace",
        out.join("events.json").to_str().unwrap(),
        "--out",
        svg.to_str().unwrap(),
    ]);
    assert!(output.status.success(), "{output:?}");
    assert!(std::fs::read_to_string(&svg).unwrap().starts_with("<svg"));
}

#[test]
fn gen_fixture_matches_the_shipped_files() {
    let dir = tempfile::tempdir().unwrap();
    for (kind, file) in [("case-study", "case_study.json"), ("compute-bound", "compute_bound.json")] {
        let out = dir.path().join(file);
        let output = run(&["gen-fixture", "--kind", kind, "--out", out.to_str().unwrap()]);
        assert!(output.status.success());
        assert_eq!(
            std::fs::read_to_string(&out).unwrap(),
            std::fs::read_to_string(fixture(file)).unwrap(),
            "{file} drifted from the generator"
        );
    }
}

#[test]
fn unknown_policy_is_rejected() {
    let output = run(&[
        "simulate",
        "--workload",
        fixture("case_study.json").to_str().unwrap(),
        "--policy",
        "warp_speed",
    ]);
    assert_eq!(output.status.code(), Some(1));
    assert!(String::from_utf8(output.stderr).unwrap().contains("unknown policy"));
}
