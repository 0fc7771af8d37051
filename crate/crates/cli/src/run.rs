//! Execution of a single simulation: build the model, integrate, and write
//! the time-series CSV and the summary JSON.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use mesofcs::assemble::AssembledModel;
use mesofcs::dynamics::{
    checkpoint, evolve, CovarianceState, InitialCovariance, IntegratorConfig, WindowPlan,
};
use mesofcs::observables::{limit_cycle_summary, LimitCycleSummary, RunTrace};

use crate::config::{ConfigError, InitialCovarianceConfig, RunConfig, WindowsConfig};

/// Failures after configuration, mapped to the runtime exit code.
#[derive(Debug)]
pub struct RunError(pub String);

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "runtime error: {}", self.0)
    }
}

impl std::error::Error for RunError {}

impl From<mesofcs::Error> for RunError {
    fn from(e: mesofcs::Error) -> Self {
        RunError(e.to_string())
    }
}

impl From<std::io::Error> for RunError {
    fn from(e: std::io::Error) -> Self {
        RunError(e.to_string())
    }
}

/// Everything produced by one simulation, before serialization.
pub struct RunOutcome {
    pub trace: RunTrace,
    pub tau: Option<f64>,
    pub summaries: Vec<LimitCycleSummary>,
}

/// Integrate the configured model and post-process every counting window.
pub fn execute(config: &RunConfig) -> Result<RunOutcome, RunError> {
    let spec = config.to_model_spec()?;
    let model = AssembledModel::from_spec(&spec)?;
    let probes: Vec<usize> = config
        .counting
        .probes
        .iter()
        .map(|label| model.reservoir_index(label))
        .collect::<mesofcs::Result<_>>()?;

    let tau = config.period();
    let windows = match &config.counting.windows {
        WindowsConfig::Starts(starts) => WindowPlan::Explicit(starts.clone()),
        WindowsConfig::Mode(_) => {
            let tau = tau.ok_or_else(|| {
                RunError(
                    "auto windows require a periodic drive or an explicit counting.period".into(),
                )
            })?;
            WindowPlan::AutoLimitCycle { tau, tolerance: config.counting.lc_tolerance }
        }
    };

    let initial = match &config.integration.checkpoint_in {
        Some(path) => {
            let (hash, state) = checkpoint::load(path)?;
            if hash != model.hash() {
                return Err(RunError(format!(
                    "checkpoint {} belongs to a different model (hash {hash}, expected {})",
                    path.display(),
                    model.hash()
                )));
            }
            state
        }
        None => match config.integration.initial_covariance {
            InitialCovarianceConfig::Empty => InitialCovariance::Empty.build(&model)?,
            InitialCovarianceConfig::LeadsThermal => {
                InitialCovariance::LeadsThermal.build(&model)?
            }
        },
    };

    let mut int_config = IntegratorConfig::new(config.integration.dt, config.integration.t_max);
    int_config.windows = windows;
    int_config.store_stride = config.output.stride;
    int_config.resymmetrize_interval = config.integration.resymmetrize_every;

    let trace = evolve(&model, initial, &int_config, &probes)?;

    if let Some(path) = &config.integration.checkpoint_out {
        checkpoint::save(path, model.hash(), &trace.final_state)?;
    }

    let summaries = match tau {
        Some(tau) => (0..trace.windows.len())
            .map(|w| {
                limit_cycle_summary(
                    &trace,
                    w,
                    tau,
                    config.counting.zero_frequency_periods,
                    config.counting.convergence_tolerance,
                )
            })
            .collect::<mesofcs::Result<_>>()?,
        None => Vec::new(),
    };

    Ok(RunOutcome { trace, tau, summaries })
}

/// Full-precision decimal formatting (17 significant digits round-trips
/// every finite f64).
pub fn fmt_full(x: f64) -> String {
    format!("{x:.16e}")
}

/// Write the time-series CSV: `t, J_<label>…, D_<label>@<t1>…`, with empty
/// noise cells before each window opens.
pub fn write_timeseries<W: Write>(out: &mut W, trace: &RunTrace) -> std::io::Result<()> {
    let mut header = vec!["t".to_string()];
    for label in &trace.probe_labels {
        header.push(format!("J_{label}"));
    }
    for w in &trace.windows {
        for label in &trace.probe_labels {
            header.push(format!("D_{label}@{}", w.t_start));
        }
    }
    writeln!(out, "{}", header.join(","))?;
    for (k, &t) in trace.times.iter().enumerate() {
        let mut row = vec![fmt_full(t)];
        for series in &trace.currents {
            row.push(fmt_full(series[k]));
        }
        for w in &trace.windows {
            for probe_noise in &w.noise {
                if k >= w.start_index {
                    row.push(fmt_full(probe_noise[k - w.start_index]));
                } else {
                    row.push(String::new());
                }
            }
        }
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}

#[derive(Debug, Serialize)]
pub struct ProbeSummaryJson {
    pub label: String,
    pub j_bar: f64,
    /// The same average with the opposite sign, for plotting conventions
    /// that show the current leaving this reservoir.
    pub j_bar_negated: f64,
    pub s0: f64,
    pub s_inf_last_period: f64,
    pub s_inf_total_average: f64,
    pub s_inf_relative_difference: f64,
    pub s_inf_periods: usize,
    pub s_inf_converged: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fano: Option<f64>,
}

#[derive(Debug, Serialize)]
pub struct WindowSummaryJson {
    pub t1: f64,
    pub residual: f64,
    pub current_sum: f64,
    pub probes: Vec<ProbeSummaryJson>,
}

#[derive(Debug, Serialize)]
pub struct SummaryJson {
    pub version: String,
    pub model_hash: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detected_t1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detected_residual: Option<f64>,
    pub max_hermiticity_drift: f64,
    pub max_antihermiticity_drift: f64,
    pub windows: Vec<WindowSummaryJson>,
    /// Exact copy of the run configuration, sufficient to reproduce the run.
    pub config: RunConfig,
}

pub fn summary_json(config: &RunConfig, outcome: &RunOutcome) -> SummaryJson {
    let windows = outcome
        .summaries
        .iter()
        .map(|s| WindowSummaryJson {
            t1: s.t1,
            residual: s.residual,
            current_sum: s.current_sum,
            probes: s
                .probes
                .iter()
                .map(|p| ProbeSummaryJson {
                    label: p.label.clone(),
                    j_bar: p.j_bar,
                    j_bar_negated: -p.j_bar,
                    s0: p.s0,
                    s_inf_last_period: p.s_inf.last_period,
                    s_inf_total_average: p.s_inf.total_average,
                    s_inf_relative_difference: p.s_inf.relative_difference,
                    s_inf_periods: p.s_inf.periods,
                    s_inf_converged: p.s_inf.converged,
                    fano: p.fano,
                })
                .collect(),
        })
        .collect();
    SummaryJson {
        version: env!("CARGO_PKG_VERSION").to_string(),
        model_hash: outcome.trace.model_hash.clone(),
        tau: outcome.tau,
        detected_t1: outcome.trace.detected_limit_cycle.map(|d| d.t1),
        detected_residual: outcome.trace.detected_limit_cycle.map(|d| d.residual),
        max_hermiticity_drift: outcome.trace.max_hermiticity_drift,
        max_antihermiticity_drift: outcome.trace.max_antihermiticity_drift,
        windows,
        config: config.clone(),
    }
}

/// Run one simulation and write its outputs under `out_dir`. Returns the
/// paths written.
pub fn simulate(config: &RunConfig, out_dir: &Path) -> Result<(PathBuf, PathBuf), RunError> {
    let outcome = execute(config)?;
    std::fs::create_dir_all(out_dir)?;
    let csv_path = out_dir.join(&config.output.timeseries);
    let mut csv = std::io::BufWriter::new(std::fs::File::create(&csv_path)?);
    write_timeseries(&mut csv, &outcome.trace)?;
    csv.flush()?;
    let summary_path = out_dir.join(&config.output.summary);
    let summary = summary_json(config, &outcome);
    let text = serde_json::to_string_pretty(&summary)
        .map_err(|e| RunError(format!("cannot serialize summary: {e}")))?;
    std::fs::write(&summary_path, text + "\n")?;
    Ok((csv_path, summary_path))
}

/// Validate a restored covariance against the model dimension before use.
pub fn state_dimension_check(model: &AssembledModel, state: &CovarianceState) -> Result<(), ConfigError> {
    if state.c.nrows() != model.dim() {
        return Err(ConfigError(format!(
            "checkpoint dimension {} does not match the model dimension {}",
            state.c.nrows(),
            model.dim()
        )));
    }
    Ok(())
}
