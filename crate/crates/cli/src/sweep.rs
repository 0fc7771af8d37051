//! Parameter sweeps: one run per value, executed on a worker pool, merged
//! into a single CSV table in the order of the sweep values.

use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::config::{apply_sweep_value, RunConfig, SweepConfig};
use crate::run::{execute, fmt_full, RunError};

/// One table row: the swept value plus either a summary or an error.
pub struct SweepRow {
    pub value: f64,
    pub result: Result<RowData, String>,
}

pub struct RowData {
    pub t1: f64,
    pub residual: f64,
    pub current_sum: f64,
    /// Per probe: (j_bar, s0, s_inf_last, s_inf_avg, fano).
    pub probes: Vec<(f64, f64, f64, f64, Option<f64>)>,
}

fn run_point(base: &RunConfig, parameter: &str, value: f64) -> Result<RowData, String> {
    let config = apply_sweep_value(base, parameter, value).map_err(|e| e.to_string())?;
    let outcome = execute(&config).map_err(|e| e.to_string())?;
    let summary = outcome
        .summaries
        .first()
        .ok_or_else(|| "no counting window produced a summary".to_string())?;
    Ok(RowData {
        t1: summary.t1,
        residual: summary.residual,
        current_sum: summary.current_sum,
        probes: summary
            .probes
            .iter()
            .map(|p| (p.j_bar, p.s0, p.s_inf.last_period, p.s_inf.total_average, p.fano))
            .collect(),
    })
}

/// Run every sweep point (in parallel) and collect rows in value order.
pub fn run_sweep(config: &SweepConfig) -> Vec<SweepRow> {
    config
        .values
        .par_iter()
        .map(|&value| SweepRow {
            value,
            result: run_point(&config.base, &config.parameter, value),
        })
        .collect()
}

/// Write the sweep table: one row per value, numeric columns empty on
/// failed points with the error recorded in the trailing column.
pub fn write_table<W: Write>(
    out: &mut W,
    config: &SweepConfig,
    rows: &[SweepRow],
) -> std::io::Result<()> {
    let mut header = vec!["value".to_string(), "t1".into(), "residual".into(), "J_sum".into()];
    for label in &config.base.counting.probes {
        for col in ["J_bar", "S0", "S_inf", "S_inf_avg", "fano"] {
            header.push(format!("{col}_{label}"));
        }
    }
    header.push("error".into());
    writeln!(out, "{}", header.join(","))?;
    let n_probes = config.base.counting.probes.len();
    for row in rows {
        let mut cells = vec![fmt_full(row.value)];
        match &row.result {
            Ok(data) => {
                cells.push(fmt_full(data.t1));
                cells.push(fmt_full(data.residual));
                cells.push(fmt_full(data.current_sum));
                for &(j, s0, sinf, savg, fano) in &data.probes {
                    cells.push(fmt_full(j));
                    cells.push(fmt_full(s0));
                    cells.push(fmt_full(sinf));
                    cells.push(fmt_full(savg));
                    cells.push(fano.map(fmt_full).unwrap_or_default());
                }
                cells.push(String::new());
            }
            Err(message) => {
                cells.extend(std::iter::repeat_n(String::new(), 3 + 5 * n_probes));
                cells.push(message.replace(',', ";"));
            }
        }
        writeln!(out, "{}", cells.join(","))?;
    }
    Ok(())
}

/// Run the sweep and write its table under `out_dir`.
pub fn sweep(config: &SweepConfig, out_dir: &Path) -> Result<PathBuf, RunError> {
    let rows = run_sweep(config);
    std::fs::create_dir_all(out_dir)?;
    let path = out_dir.join(&config.table);
    let mut file = std::io::BufWriter::new(std::fs::File::create(&path)?);
    write_table(&mut file, config, &rows)?;
    file.flush()?;
    Ok(path)
}
