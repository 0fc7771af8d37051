use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use mesofcs::leads::convergence_report;
use mesofcs::model::{ReservoirSpec, SpectralDensity};
use mesofcs_cli::{config, run, sweep};

/// Particle currents and charge-transfer noise in driven conductors coupled
/// to mesoscopic-lead reservoirs.
#[derive(Parser)]
#[command(name = "mesofcs", version, about)]
struct Cli {
    /// Worker threads for sweeps and matrix kernels (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one simulation and write its time-series CSV and summary JSON.
    Simulate {
        /// Run configuration (JSON).
        #[arg(long)]
        config: PathBuf,
        /// Output directory.
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// Override the storage stride from the configuration.
        #[arg(long)]
        stride: Option<usize>,
    },
    /// Run one simulation per sweep value and write the summary table.
    Sweep {
        /// Sweep configuration (JSON).
        #[arg(long)]
        config: PathBuf,
        /// Output directory.
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Run the built-in validation suites.
    Validate {
        /// `quick` or `full`.
        #[arg(long, default_value = "quick")]
        level: String,
        /// Also write the reports as JSON.
        #[arg(long)]
        json: Option<PathBuf>,
        /// Run the full-size (400-mode) variant of the limit-cycle check.
        #[arg(long)]
        heavy: bool,
    },
    /// Report how well the discretized reservoir reproduces a flat spectral
    /// density as the mode count grows.
    LeadsCheck {
        /// Flat-band coupling Γ.
        #[arg(long, default_value_t = 0.5)]
        coupling: f64,
        /// Band half-width W.
        #[arg(long, default_value_t = 100.0)]
        half_bandwidth: f64,
        /// Mode counts to test.
        #[arg(long, value_delimiter = ',', default_values_t = [50usize, 100, 200, 400])]
        modes: Vec<usize>,
        /// Interior probe window as a fraction of W.
        #[arg(long, default_value_t = 0.8)]
        window: f64,
    },
}

const EXIT_VALIDATION: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_RUNTIME: u8 = 3;

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    if cli.threads > 0 {
        if let Err(e) =
            rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global()
        {
            eprintln!("cannot size the thread pool: {e}");
            return ExitCode::from(EXIT_RUNTIME);
        }
    }
    match cli.command {
        Command::Simulate { config: path, out, stride } => {
            let mut config = match config::load_run_config(&path) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("{e}");
                    return ExitCode::from(EXIT_CONFIG);
                }
            };
            if let Some(stride) = stride {
                if stride == 0 {
                    eprintln!("configuration error: --stride must be at least 1");
                    return ExitCode::from(EXIT_CONFIG);
                }
                config.output.stride = stride;
            }
            match run::simulate(&config, &out) {
                Ok((csv, summary)) => {
                    println!("wrote {} and {}", csv.display(), summary.display());
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("{e}");
                    ExitCode::from(EXIT_RUNTIME)
                }
            }
        }
        Command::Sweep { config: path, out } => {
            let config = match config::load_sweep_config(&path) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("{e}");
                    return ExitCode::from(EXIT_CONFIG);
                }
            };
            match sweep::sweep(&config, &out) {
                Ok(table) => {
                    println!("wrote {}", table.display());
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("{e}");
                    ExitCode::from(EXIT_RUNTIME)
                }
            }
        }
        Command::Validate { level, json, heavy } => {
            let reports = match level.as_str() {
                "quick" => mesofcs::validation::run_quick(),
                "full" => mesofcs::validation::run_full(heavy),
                other => {
                    eprintln!("configuration error: unknown level `{other}` (quick|full)");
                    return ExitCode::from(EXIT_CONFIG);
                }
            };
            for report in &reports {
                println!("{}", report.line());
            }
            if let Some(path) = json {
                #[derive(serde::Serialize)]
                struct ReportJson<'a> {
                    id: usize,
                    name: &'a str,
                    passed: bool,
                    seconds: f64,
                    detail: &'a str,
                }
                let rows: Vec<ReportJson<'_>> = reports
                    .iter()
                    .map(|r| ReportJson {
                        id: r.id,
                        name: r.name,
                        passed: r.passed,
                        seconds: r.seconds,
                        detail: &r.detail,
                    })
                    .collect();
                match serde_json::to_string_pretty(&rows) {
                    Ok(text) => {
                        if let Err(e) = std::fs::write(&path, text + "\n") {
                            eprintln!("cannot write {}: {e}", path.display());
                            return ExitCode::from(EXIT_RUNTIME);
                        }
                    }
                    Err(e) => {
                        eprintln!("cannot serialize reports: {e}");
                        return ExitCode::from(EXIT_RUNTIME);
                    }
                }
            }
            if reports.iter().all(|r| r.passed) {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EXIT_VALIDATION)
            }
        }
        Command::LeadsCheck { coupling, half_bandwidth, modes, window } => {
            let spec = ReservoirSpec {
                label: "probe".into(),
                temperature: 1.0,
                chemical_potential: 0.0,
                site: 0,
                modes: modes.iter().copied().max().unwrap_or(2),
                spectral_density: SpectralDensity::Flat { coupling, half_bandwidth },
            };
            match convergence_report(&spec, &modes, window) {
                Ok(rows) => {
                    println!("modes,max_relative_deviation");
                    for row in rows {
                        println!("{},{}", row.modes, run::fmt_full(row.max_deviation));
                    }
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("configuration error: {e}");
                    ExitCode::from(EXIT_CONFIG)
                }
            }
        }
    }
}
