//! Python bindings: load or generate workloads, run policies and the offline
//! oracle, and pull metrics and artifacts from the results.
//!
//! ```python
//! import ecosched
//! w = ecosched.case_study_fixture()
//! eco = ecosched.simulate(w, policy="ecosched")
//! base = ecosched.simulate(w, policy="marble_like")
//! ecosched.energy_saving(eco.total_energy_j, base.total_energy_j)
//! ```

use std::collections::BTreeMap;

use pyo3::exceptions::{PyIOError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use ecosched_core::error::Error;
use ecosched_core::oracle::{OracleLimits, OraclePlan, PlanStep};
use ecosched_core::sim::{SimOptions, SimResult};
use ecosched_core::workload::{PolicyConfig, PolicyKind, WorkloadSpec};
use ecosched_core::{fixtures, gantt, metrics, oracle, perf_model, sim, workload};

fn to_py_err(e: Error) -> PyErr {
    match &e {
        Error::Io { .. } => PyIOError::new_err(e.to_string()),
        Error::EngineFault(_) | Error::Replay { .. } => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn policy_config(policy: &str, lambda_: f64, tau: f64) -> PyResult<PolicyConfig> {
    let kind: PolicyKind = policy.parse().map_err(to_py_err)?;
    Ok(PolicyConfig::new(kind).with_lambda(lambda_).with_tau(tau))
}

/// A validated scheduling-window description.
#[pyclass(name = "Workload", module = "ecosched", skip_from_py_object)]
#[derive(Clone)]
struct PyWorkload {
    spec: WorkloadSpec,
}

#[pymethods]
impl PyWorkload {
    /// Parses and validates a workload from JSON text.
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Self {
            spec: workload::parse_workload(text).map_err(to_py_err)?,
        })
    }

    fn to_json(&self) -> String {
        self.spec.to_json_string()
    }

    /// Violation descriptions; empty when the workload is valid.
    fn validate(&self) -> Vec<String> {
        workload::validate(&self.spec)
    }

    #[getter]
    fn app_ids(&self) -> Vec<String> {
        self.spec.applications.iter().map(|a| a.app_id.clone()).collect()
    }

    #[getter]
    fn window_size(&self) -> u32 {
        self.spec.window_size
    }

    #[getter]
    fn total_gpus(&self) -> u32 {
        self.spec.platform.total_gpus
    }

    #[getter]
    fn numa_domains(&self) -> u32 {
        self.spec.platform.numa_domains
    }

    #[getter]
    fn platform_name(&self) -> String {
        self.spec.platform.name.clone()
    }

    fn __repr__(&self) -> String {
        format!(
            "Workload('{}', apps={}, M={}, K={})",
            self.spec.platform.name,
            self.spec.applications.len(),
            self.spec.platform.total_gpus,
            self.spec.platform.numa_domains
        )
    }
}

/// One Phase-I mode estimate.
#[pyclass(name = "ModeEstimate", module = "ecosched", get_all, skip_from_py_object)]
#[derive(Clone)]
struct PyModeEstimate {
    app_id: String,
    gpu_count: u32,
    t_norm: f64,
    e_proxy_w: f64,
    e_norm: f64,
    within_tolerance: bool,
}

#[pymethods]
impl PyModeEstimate {
    fn __repr__(&self) -> String {
        format!(
            "ModeEstimate({}@{}, t_norm={:.4}, e_norm={:.4}, within_tolerance={})",
            self.app_id, self.gpu_count, self.t_norm, self.e_norm, self.within_tolerance
        )
    }
}

/// Outcome of one simulated schedule.
#[pyclass(name = "SimOutcome", module = "ecosched")]
struct PySimOutcome {
    result: SimResult,
}

#[pymethods]
impl PySimOutcome {
    #[getter]
    fn policy(&self) -> String {
        self.result.policy.clone()
    }

    #[getter]
    fn total_energy_j(&self) -> f64 {
        self.result.total_energy_j
    }

    #[getter]
    fn active_energy_j(&self) -> f64 {
        self.result.active_energy_j
    }

    #[getter]
    fn idle_energy_j(&self) -> f64 {
        self.result.idle_energy_j
    }

    #[getter]
    fn profiling_energy_j(&self) -> f64 {
        self.result.profiling_energy_j
    }

    #[getter]
    fn makespan_s(&self) -> f64 {
        self.result.makespan_s
    }

    #[getter]
    fn edp_j_s(&self) -> f64 {
        self.result.edp_j_s
    }

    /// app_id -> runtime increase over solo-optimal execution, as a fraction.
    #[getter]
    fn per_app_perf_loss(&self) -> BTreeMap<String, f64> {
        self.result.per_app_perf_loss.clone()
    }

    /// app_id -> GPU count the schedule ran it at.
    #[getter]
    fn gpu_counts(&self) -> BTreeMap<String, u32> {
        self.result
            .trace
            .per_app
            .iter()
            .map(|(app, stats)| (app.clone(), stats.gpu_count))
            .collect()
    }

    fn to_json(&self) -> String {
        self.result.to_json_string()
    }

    fn events_json(&self) -> String {
        self.result.trace.to_json_string()
    }

    fn trace_csv(&self) -> String {
        self.result.trace.to_csv_string()
    }

    fn gantt_svg(&self) -> String {
        gantt::render_gantt(&self.result.trace)
    }

    fn __repr__(&self) -> String {
        format!(
            "SimOutcome({}, energy={:.1} J, makespan={:.1} s)",
            self.result.policy, self.result.total_energy_j, self.result.makespan_s
        )
    }
}

/// An offline oracle plan.
#[pyclass(name = "Plan", module = "ecosched", skip_from_py_object)]
#[derive(Clone)]
struct PyPlan {
    plan: OraclePlan,
}

#[pymethods]
impl PyPlan {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Self {
            plan: OraclePlan::from_json_str(text).map_err(to_py_err)?,
        })
    }

    fn to_json(&self) -> String {
        self.plan.to_json_string()
    }

    #[getter]
    fn objective_energy_j(&self) -> f64 {
        self.plan.objective_energy_j
    }

    #[getter]
    fn objective_makespan_s(&self) -> f64 {
        self.plan.objective_makespan_s
    }

    #[getter]
    fn complete(&self) -> bool {
        self.plan.complete
    }

    /// Decisions as (event_index, [(app_id, gpu_count), ...]) tuples.
    #[getter]
    fn decisions(&self) -> Vec<(usize, Vec<(String, u32)>)> {
        self.plan
            .decisions
            .iter()
            .map(|PlanStep { event_index, launched }| (*event_index, launched.clone()))
            .collect()
    }

    fn __repr__(&self) -> String {
        format!(
            "Plan(energy={:.1} J, makespan={:.1} s, complete={})",
            self.plan.objective_energy_j, self.plan.objective_makespan_s, self.plan.complete
        )
    }
}

/// Loads and validates a workload file.
#[pyfunction]
fn load_workload(path: &str) -> PyResult<PyWorkload> {
    Ok(PyWorkload {
        spec: workload::load_workload(path).map_err(to_py_err)?,
    })
}

/// Runs one policy over a workload window.
#[pyfunction]
#[pyo3(signature = (workload, policy = "ecosched", lambda_ = PolicyConfig::DEFAULT_LAMBDA,
                    tau = PolicyConfig::DEFAULT_TAU, include_profiling_energy = false))]
fn simulate(
    workload: &PyWorkload,
    policy: &str,
    lambda_: f64,
    tau: f64,
    include_profiling_energy: bool,
) -> PyResult<PySimOutcome> {
    let cfg = policy_config(policy, lambda_, tau)?;
    let opts = SimOptions {
        include_profiling_energy,
    };
    Ok(PySimOutcome {
        result: sim::simulate(&workload.spec, &cfg, opts).map_err(to_py_err)?,
    })
}

/// Phase-I estimates for one application under the given tolerance.
#[pyfunction]
#[pyo3(signature = (workload, app_id, tau = PolicyConfig::DEFAULT_TAU))]
fn estimate_modes(workload: &PyWorkload, app_id: &str, tau: f64) -> PyResult<Vec<PyModeEstimate>> {
    let app = workload
        .spec
        .application(app_id)
        .ok_or_else(|| PyValueError::new_err(format!("no application '{app_id}'")))?;
    let cfg = PolicyConfig::default().with_tau(tau);
    let ests = perf_model::estimate_modes(app, &cfg).map_err(to_py_err)?;
    Ok(ests
        .into_iter()
        .map(|e| PyModeEstimate {
            app_id: e.app_id,
            gpu_count: e.gpu_count,
            t_norm: e.t_norm,
            e_proxy_w: e.e_proxy_w,
            e_norm: e.e_norm,
            within_tolerance: e.within_tolerance,
        })
        .collect())
}

/// Finds the offline energy-minimal plan.
#[pyfunction]
#[pyo3(signature = (workload, max_nodes = OracleLimits::default().max_nodes, time_budget_s = None))]
fn solve_oracle(workload: &PyWorkload, max_nodes: u64, time_budget_s: Option<f64>) -> PyResult<PyPlan> {
    let limits = OracleLimits {
        max_nodes,
        time_budget_s,
    };
    Ok(PyPlan {
        plan: oracle::solve(&workload.spec, limits).map_err(to_py_err)?,
    })
}

/// Replays a plan and returns the standard outcome.
#[pyfunction]
#[pyo3(signature = (workload, plan, include_profiling_energy = false))]
fn replay(workload: &PyWorkload, plan: &PyPlan, include_profiling_energy: bool) -> PyResult<PySimOutcome> {
    let opts = SimOptions {
        include_profiling_energy,
    };
    Ok(PySimOutcome {
        result: oracle::replay_opts(&plan.plan, &workload.spec, opts).map_err(to_py_err)?,
    })
}

#[pyfunction]
fn energy_saving(e_policy_j: f64, e_base_j: f64) -> PyResult<f64> {
    metrics::energy_saving(e_policy_j, e_base_j).map_err(to_py_err)
}

#[pyfunction]
fn makespan_improvement(t_policy_s: f64, t_base_s: f64) -> PyResult<f64> {
    metrics::makespan_improvement(t_policy_s, t_base_s).map_err(to_py_err)
}

#[pyfunction]
fn edp_saving(edp_policy: f64, edp_base: f64) -> PyResult<f64> {
    metrics::edp_saving(edp_policy, edp_base).map_err(to_py_err)
}

#[pyfunction]
fn perf_loss(runtime_coscheduled_s: f64, runtime_solo_optimal_s: f64) -> PyResult<f64> {
    metrics::perf_loss(runtime_coscheduled_s, runtime_solo_optimal_s).map_err(to_py_err)
}

/// Seconds until a power reduction pays back a one-time profiling cost.
#[pyfunction]
fn amortization_time(profiling_energy_j: f64, power_delta_w: f64) -> PyResult<f64> {
    perf_model::amortization_time(profiling_energy_j, power_delta_w).map_err(to_py_err)
}

/// Renders an events-JSON trace as an SVG Gantt chart.
#[pyfunction]
fn gantt_svg(events_json: &str) -> PyResult<String> {
    let trace = ecosched_core::sim::ScheduleTrace::from_json_str(events_json).map_err(to_py_err)?;
    Ok(gantt::render_gantt(&trace))
}

/// The bundled six-application downsizing showcase.
#[pyfunction]
fn case_study_fixture() -> PyWorkload {
    PyWorkload {
        spec: fixtures::case_study(),
    }
}

/// The bundled compute-bound (low-slack) workload.
#[pyfunction]
fn compute_bound_fixture() -> PyWorkload {
    PyWorkload {
        spec: fixtures::compute_bound(),
    }
}

/// A seeded random workload.
#[pyfunction]
#[pyo3(signature = (seed, apps = 5, total_gpus = 4, numa_domains = 2,
                    idle_power_per_gpu_w = 70.0, max_modes_per_app = 3))]
fn random_fixture(
    seed: u64,
    apps: u32,
    total_gpus: u32,
    numa_domains: u32,
    idle_power_per_gpu_w: f64,
    max_modes_per_app: u32,
) -> PyWorkload {
    PyWorkload {
        spec: fixtures::random_workload(
            seed,
            &fixtures::RandomFixtureConfig {
                apps,
                total_gpus,
                numa_domains,
                idle_power_per_gpu_w,
                max_modes_per_app,
            },
        ),
    }
}

#[pymodule]
fn ecosched(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyWorkload>()?;
    m.add_class::<PyModeEstimate>()?;
    m.add_class::<PySimOutcome>()?;
    m.add_class::<PyPlan>()?;
    m.add_function(wrap_pyfunction!(load_workload, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_modes, m)?)?;
    m.add_function(wrap_pyfunction!(solve_oracle, m)?)?;
    m.add_function(wrap_pyfunction!(replay, m)?)?;
    m.add_function(wrap_pyfunction!(energy_saving, m)?)?;
    m.add_function(wrap_pyfunction!(makespan_improvement, m)?)?;
    m.add_function(wrap_pyfunction!(edp_saving, m)?)?;
    m.add_function(wrap_pyfunction!(perf_loss, m)?)?;
    m.add_function(wrap_pyfunction!(amortization_time, m)?)?;
    m.add_function(wrap_pyfunction!(gantt_svg, m)?)?;
    m.add_function(wrap_pyfunction!(case_study_fixture, m)?)?;
    m.add_function(wrap_pyfunction!(compute_bound_fixture, m)?)?;
    m.add_function(wrap_pyfunction!(random_fixture, m)?)?;
    m.add("POLICY_KINDS", PolicyKind::ALL.map(|k| k.name()).to_vec())?;
    Ok(())
}
