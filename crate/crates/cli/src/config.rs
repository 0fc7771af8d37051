//! Run and sweep configurations: a JSON document with a fixed schema,
//! unknown keys rejected, all energies in units of the system hopping Δ and
//! times in 1/Δ.

use std::path::{Path, PathBuf};

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use mesofcs::model::{DriveWaveform, ModelSpec, ReservoirSpec, SystemSpec};
use mesofcs::C64;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub system: SystemConfig,
    pub reservoirs: Vec<ReservoirSpec>,
    pub integration: IntegrationConfig,
    pub counting: CountingConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    /// `"two-site"` builds the driven two-site bridge with hopping −Δ.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    /// Hopping Δ for the preset (usually 1, fixing the energy unit).
    #[serde(default = "default_hopping")]
    pub hopping: f64,
    /// Explicit real-symmetric system matrix, row by row (alternative to
    /// the preset).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hamiltonian: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub drive: Option<DriveWaveform>,
    /// Per-site drive signs (+1, −1 or 0); required with an explicit
    /// Hamiltonian when a drive is present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub drive_signs: Option<Vec<i8>>,
}

fn default_hopping() -> f64 {
    1.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegrationConfig {
    #[serde(default = "default_dt")]
    pub dt: f64,
    pub t_max: f64,
    #[serde(default)]
    pub initial_covariance: InitialCovarianceConfig,
    /// Resume from a checkpoint file (overrides `initial_covariance`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checkpoint_in: Option<PathBuf>,
    /// Write the final covariance to this path.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checkpoint_out: Option<PathBuf>,
    #[serde(default = "default_resym")]
    pub resymmetrize_every: usize,
}

fn default_dt() -> f64 {
    0.01
}

fn default_resym() -> usize {
    1000
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitialCovarianceConfig {
    #[default]
    Empty,
    LeadsThermal,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CountingConfig {
    /// Reservoir labels whose current and noise are recorded.
    pub probes: Vec<String>,
    /// `"auto"` (detect the limit cycle on line) or explicit window start
    /// times.
    #[serde(default)]
    pub windows: WindowsConfig,
    /// Averaging period τ; defaults to the drive period.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub period: Option<f64>,
    #[serde(default = "default_lc_tolerance")]
    pub lc_tolerance: f64,
    /// Horizon for the zero-frequency noise, in periods after the window
    /// start.
    #[serde(default = "default_zero_frequency_periods")]
    pub zero_frequency_periods: usize,
    /// Relative tolerance on successive-period noise averages for the
    /// convergence flag.
    #[serde(default = "default_convergence_tolerance")]
    pub convergence_tolerance: f64,
}

fn default_lc_tolerance() -> f64 {
    1e-4
}

fn default_zero_frequency_periods() -> usize {
    20
}

fn default_convergence_tolerance() -> f64 {
    0.02
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum WindowsConfig {
    Mode(String),
    Starts(Vec<f64>),
}

impl Default for WindowsConfig {
    fn default() -> Self {
        WindowsConfig::Mode("auto".into())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_stride")]
    pub stride: usize,
    #[serde(default = "default_timeseries")]
    pub timeseries: String,
    #[serde(default = "default_summary")]
    pub summary: String,
}

fn default_stride() -> usize {
    1
}

fn default_timeseries() -> String {
    "timeseries.csv".into()
}

fn default_summary() -> String {
    "summary.json".into()
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            stride: default_stride(),
            timeseries: default_timeseries(),
            summary: default_summary(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub base: RunConfig,
    /// Dotted path to a numeric field of the run config, e.g.
    /// `system.drive.amplitude` or `reservoirs.*.spectral_density.coupling`
    /// (`*` addresses every element of an array).
    pub parameter: String,
    pub values: Vec<f64>,
    /// Worker threads (0 = all cores); the `--threads` flag overrides.
    #[serde(default)]
    pub threads: usize,
    #[serde(default = "default_table")]
    pub table: String,
}

fn default_table() -> String {
    "sweep.csv".into()
}

/// A configuration error, kept separate from runtime errors so the CLI can
/// exit with the dedicated code.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "configuration error: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

fn parse_with_path<T: serde::de::DeserializeOwned>(text: &str) -> Result<T, ConfigError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let inner = e.inner();
        ConfigError(format!(
            "{} (at `{}`, line {}, column {})",
            inner,
            e.path(),
            inner.line(),
            inner.column()
        ))
    })
}

pub fn load_run_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
    let config: RunConfig = parse_with_path(&text)?;
    config.validate()?;
    Ok(config)
}

pub fn load_sweep_config(path: &Path) -> Result<SweepConfig, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
    let config: SweepConfig = parse_with_path(&text)?;
    config.base.validate()?;
    if config.values.iter().any(|v| !v.is_finite()) {
        return Err(ConfigError("sweep values must be finite".into()));
    }
    Ok(config)
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.to_model_spec().map_err(|e| ConfigError(e.to_string()))?;
        if self.reservoirs.is_empty() {
            return Err(ConfigError("at least one reservoir is required".into()));
        }
        for probe in &self.counting.probes {
            if !self.reservoirs.iter().any(|r| &r.label == probe) {
                return Err(ConfigError(format!("unknown probe reservoir `{probe}`")));
            }
        }
        if let WindowsConfig::Mode(mode) = &self.counting.windows {
            if mode != "auto" {
                return Err(ConfigError(format!(
                    "windows must be \"auto\" or a list of start times, got \"{mode}\""
                )));
            }
        }
        if self.output.stride == 0 {
            return Err(ConfigError("output stride must be at least 1".into()));
        }
        if !(self.integration.dt.is_finite() && self.integration.dt > 0.0) {
            return Err(ConfigError(format!("dt must be positive, got {}", self.integration.dt)));
        }
        Ok(())
    }

    /// Averaging period: the explicit `counting.period`, otherwise the drive
    /// period.
    pub fn period(&self) -> Option<f64> {
        self.counting.period.or_else(|| self.system.drive.as_ref().and_then(|d| d.period()))
    }

    pub fn to_model_spec(&self) -> mesofcs::Result<ModelSpec> {
        let system = self.system.to_system_spec()?;
        ModelSpec::new(system, self.reservoirs.clone())
    }
}

impl SystemConfig {
    pub fn to_system_spec(&self) -> mesofcs::Result<SystemSpec> {
        let drive = self.drive.clone().unwrap_or_else(DriveWaveform::off);
        match (&self.preset, &self.hamiltonian) {
            (Some(p), None) if p == "two-site" => SystemSpec::two_site(self.hopping, drive),
            (Some(p), None) => Err(mesofcs::Error::InvalidModel(format!(
                "unknown system preset `{p}` (supported: \"two-site\")"
            ))),
            (None, Some(rows)) => {
                let l = rows.len();
                if rows.iter().any(|r| r.len() != l) {
                    return Err(mesofcs::Error::InvalidModel(
                        "system matrix must be square".into(),
                    ));
                }
                let mut h0 = Array2::<C64>::zeros((l, l));
                for (i, row) in rows.iter().enumerate() {
                    for (j, &v) in row.iter().enumerate() {
                        h0[[i, j]] = C64::new(v, 0.0);
                    }
                }
                let signs = match &self.drive_signs {
                    Some(signs) => {
                        if signs.len() != l {
                            return Err(mesofcs::Error::InvalidModel(format!(
                                "drive_signs must list one sign per site ({l})"
                            )));
                        }
                        signs.iter().enumerate().map(|(j, &s)| (j, s)).collect()
                    }
                    None => Vec::new(),
                };
                SystemSpec::new(h0, drive, signs)
            }
            (Some(_), Some(_)) => Err(mesofcs::Error::InvalidModel(
                "give either a preset or an explicit Hamiltonian, not both".into(),
            )),
            (None, None) => Err(mesofcs::Error::InvalidModel(
                "system requires a preset or an explicit Hamiltonian".into(),
            )),
        }
    }
}

/// Set the numeric field addressed by a dotted path inside a JSON tree.
/// Path segments are object keys, array indices, or `*` for every element
/// of an array.
pub fn set_path(
    tree: &mut serde_json::Value,
    path: &str,
    value: f64,
) -> Result<(), ConfigError> {
    fn apply(
        node: &mut serde_json::Value,
        segments: &[&str],
        value: f64,
        full: &str,
    ) -> Result<(), ConfigError> {
        let Some((head, rest)) = segments.split_first() else {
            return match node {
                serde_json::Value::Number(_) | serde_json::Value::Null => {
                    *node = serde_json::Value::from(value);
                    Ok(())
                }
                _ => Err(ConfigError(format!(
                    "sweep parameter `{full}` does not address a numeric field"
                ))),
            };
        };
        match node {
            serde_json::Value::Object(map) => {
                let child = map.get_mut(*head).ok_or_else(|| {
                    ConfigError(format!("sweep parameter `{full}`: no field `{head}`"))
                })?;
                apply(child, rest, value, full)
            }
            serde_json::Value::Array(items) => {
                if *head == "*" {
                    for item in items {
                        apply(item, rest, value, full)?;
                    }
                    Ok(())
                } else {
                    let idx: usize = head.parse().map_err(|_| {
                        ConfigError(format!(
                            "sweep parameter `{full}`: `{head}` is not an array index"
                        ))
                    })?;
                    let child = items.get_mut(idx).ok_or_else(|| {
                        ConfigError(format!("sweep parameter `{full}`: index {idx} out of range"))
                    })?;
                    apply(child, rest, value, full)
                }
            }
            _ => Err(ConfigError(format!(
                "sweep parameter `{full}`: `{head}` does not address an object or array"
            ))),
        }
    }
    let segments: Vec<&str> = path.split('.').collect();
    apply(tree, &segments, value, path)
}

/// Produce the run config for one sweep point.
pub fn apply_sweep_value(base: &RunConfig, path: &str, value: f64) -> Result<RunConfig, ConfigError> {
    let mut tree = serde_json::to_value(base)
        .map_err(|e| ConfigError(format!("cannot serialize base config: {e}")))?;
    set_path(&mut tree, path, value)?;
    let config: RunConfig = serde_json::from_value(tree)
        .map_err(|e| ConfigError(format!("sweep value {value} at `{path}`: {e}")))?;
    config.validate()?;
    Ok(config)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal_json() -> serde_json::Value {
        serde_json::json!({
            "system": {
                "preset": "two-site",
                "drive": {"type": "cosine", "amplitude": 40.0, "omega": 5.0}
            },
            "reservoirs": [
                {"label": "L", "temperature": 0.1, "chemical_potential": 24.0, "site": 0,
                 "modes": 10,
                 "spectral_density": {"type": "flat", "coupling": 0.5, "half_bandwidth": 100.0}},
                {"label": "R", "temperature": 0.1, "chemical_potential": -24.0, "site": 1,
                 "modes": 10,
                 "spectral_density": {"type": "flat", "coupling": 0.5, "half_bandwidth": 100.0}}
            ],
            "integration": {"t_max": 1.0},
            "counting": {"probes": ["L", "R"], "windows": [0.5]}
        })
    }

    #[test]
    fn minimal_config_parses() {
        let config: RunConfig = serde_json::from_value(minimal_json()).unwrap();
        config.validate().unwrap();
        assert_eq!(config.integration.dt, 0.01);
        assert_eq!(config.counting.zero_frequency_periods, 20);
        assert!((config.period().unwrap() - std::f64::consts::TAU / 5.0).abs() < 1e-12);
    }

    #[test]
    fn unknown_keys_rejected() {
        let mut v = minimal_json();
        v["integration"]["timestep"] = 0.1.into();
        let text = serde_json::to_string(&v).unwrap();
        let err = parse_with_path::<RunConfig>(&text).unwrap_err();
        assert!(err.0.contains("timestep"), "{err}");
    }

    #[test]
    fn missing_reservoirs_is_schema_error() {
        let mut v = minimal_json();
        v.as_object_mut().unwrap().remove("reservoirs");
        let text = serde_json::to_string(&v).unwrap();
        assert!(parse_with_path::<RunConfig>(&text).is_err());
    }

    #[test]
    fn unknown_probe_rejected() {
        let mut v = minimal_json();
        v["counting"]["probes"] = serde_json::json!(["L", "X"]);
        let config: RunConfig = serde_json::from_value(v).unwrap();
        assert!(config.validate().is_err());
    }

    #[test]
    fn sweep_path_with_wildcard() {
        let mut tree = minimal_json();
        set_path(&mut tree, "reservoirs.*.spectral_density.coupling", 2.5).unwrap();
        assert_eq!(tree["reservoirs"][0]["spectral_density"]["coupling"], 2.5);
        assert_eq!(tree["reservoirs"][1]["spectral_density"]["coupling"], 2.5);
        set_path(&mut tree, "system.drive.amplitude", 8.0).unwrap();
        assert_eq!(tree["system"]["drive"]["amplitude"], 8.0);
        assert!(set_path(&mut tree, "system.missing", 1.0).is_err());
        assert!(set_path(&mut tree, "system.preset", 1.0).is_err());
    }

    #[test]
    fn explicit_hamiltonian_system() {
        let config = SystemConfig {
            preset: None,
            hopping: 1.0,
            hamiltonian: Some(vec![vec![0.0, -1.0, 0.0], vec![-1.0, 0.5, -1.0], vec![
                0.0, -1.0, 0.0,
            ]]),
            drive: Some(DriveWaveform::Cosine { amplitude: 2.0, omega: 1.0 }),
            drive_signs: Some(vec![1, 0, -1]),
        };
        let spec = config.to_system_spec().unwrap();
        assert_eq!(spec.modes(), 3);
        let h = spec.hamiltonian(0.0);
        assert_eq!(h[[0, 0]].re, 1.0);
        assert_eq!(h[[2, 2]].re, -1.0);
    }
}
