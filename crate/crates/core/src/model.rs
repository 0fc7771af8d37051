//! Domain types for the system, its drives, and the reservoirs.
//!
//! Units: ħ = k_B = e = 1 throughout, with the system hopping Δ as the
//! default energy scale. All energies are expressed in units of Δ and all
//! times in units of 1/Δ.

use std::fmt;
use std::sync::Arc;

use ndarray::Array2;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Time-dependent scalar drive `E(t)` entering the system Hamiltonian.
///
/// For the cosine variant the amplitude is the full prefactor `eaA`, so the
/// on-site energies of a driven pair of sites are `±eaA cos(ωt)/2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DriveWaveform {
    /// Time-independent value (zero for a static Hamiltonian).
    Constant { value: f64 },
    /// `E(t) = amplitude · cos(omega t)` with `omega > 0`.
    Cosine { amplitude: f64, omega: f64 },
    /// Gaussian pulse `amplitude · exp(−(t−center)²/(2 width²))`.
    Pulse { amplitude: f64, center: f64, width: f64 },
    /// Piecewise-linear interpolation through `(time, value)` samples with
    /// strictly increasing times; constant extension outside the table.
    Tabulated { points: Vec<(f64, f64)> },
}

impl DriveWaveform {
    /// A drive that is identically zero.
    pub fn off() -> Self {
        DriveWaveform::Constant { value: 0.0 }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            DriveWaveform::Constant { value } => {
                finite("constant drive value", *value)?;
            }
            DriveWaveform::Cosine { amplitude, omega } => {
                finite("cosine drive amplitude", *amplitude)?;
                finite("cosine drive omega", *omega)?;
                if *omega <= 0.0 {
                    return Err(Error::InvalidModel(format!(
                        "cosine drive requires omega > 0, got {omega}"
                    )));
                }
            }
            DriveWaveform::Pulse { amplitude, center, width } => {
                finite("pulse amplitude", *amplitude)?;
                finite("pulse center", *center)?;
                finite("pulse width", *width)?;
                if *width <= 0.0 {
                    return Err(Error::InvalidModel(format!(
                        "pulse drive requires width > 0, got {width}"
                    )));
                }
            }
            DriveWaveform::Tabulated { points } => {
                if points.is_empty() {
                    return Err(Error::InvalidModel(
                        "tabulated drive requires at least one point".into(),
                    ));
                }
                for &(t, v) in points {
                    finite("tabulated drive time", t)?;
                    finite("tabulated drive value", v)?;
                }
                if points.windows(2).any(|w| w[1].0 <= w[0].0) {
                    return Err(Error::InvalidModel(
                        "tabulated drive times must be strictly increasing".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Evaluate `E(t)`; defined for all `t`.
    pub fn value(&self, t: f64) -> f64 {
        match self {
            DriveWaveform::Constant { value } => *value,
            DriveWaveform::Cosine { amplitude, omega } => amplitude * (omega * t).cos(),
            DriveWaveform::Pulse { amplitude, center, width } => {
                let u = (t - center) / width;
                amplitude * (-0.5 * u * u).exp()
            }
            DriveWaveform::Tabulated { points } => interpolate_table(points, t),
        }
    }

    /// Drive period, when one exists (cosine only).
    pub fn period(&self) -> Option<f64> {
        match self {
            DriveWaveform::Cosine { omega, .. } => Some(std::f64::consts::TAU / omega),
            _ => None,
        }
    }
}

fn interpolate_table(points: &[(f64, f64)], t: f64) -> f64 {
    let first = points[0];
    let last = points[points.len() - 1];
    if t <= first.0 {
        return first.1;
    }
    if t >= last.0 {
        return last.1;
    }
    let k = points.partition_point(|&(tk, _)| tk <= t);
    let (t0, v0) = points[k - 1];
    let (t1, v1) = points[k];
    v0 + (v1 - v0) * (t - t0) / (t1 - t0)
}

fn finite(what: &str, x: f64) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidModel(format!("{what} must be finite, got {x}")))
    }
}

/// How a drive couples to the system modes: on-site energies `s_j E(t)/2`
/// with signs `s_j ∈ {+1, −1, 0}`.
pub type DriveSigns = Vec<(usize, i8)>;

enum Hamiltonian {
    /// Static Hermitian matrix plus signed on-site drive terms.
    Driven { h0: Array2<C64>, drive: DriveWaveform, signs: DriveSigns },
    /// User-supplied builder producing the full h_S(t).
    Custom(Arc<dyn Fn(f64) -> Array2<C64> + Send + Sync>),
}

impl Clone for Hamiltonian {
    fn clone(&self) -> Self {
        match self {
            Hamiltonian::Driven { h0, drive, signs } => Hamiltonian::Driven {
                h0: h0.clone(),
                drive: drive.clone(),
                signs: signs.clone(),
            },
            Hamiltonian::Custom(f) => Hamiltonian::Custom(Arc::clone(f)),
        }
    }
}

/// The system block: mode count and single-particle Hamiltonian h_S(t).
///
/// Immutable after construction; `hamiltonian(t)` is a pure function of
/// `(spec, t)` and safe to call from multiple threads.
#[derive(Clone)]
pub struct SystemSpec {
    modes: usize,
    hamiltonian: Hamiltonian,
}

impl fmt::Debug for SystemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.hamiltonian {
            Hamiltonian::Driven { drive, signs, .. } => f
                .debug_struct("SystemSpec")
                .field("modes", &self.modes)
                .field("drive", drive)
                .field("signs", signs)
                .finish(),
            Hamiltonian::Custom(_) => f
                .debug_struct("SystemSpec")
                .field("modes", &self.modes)
                .field("hamiltonian", &"<custom builder>")
                .finish(),
        }
    }
}

impl SystemSpec {
    /// Build from a static Hermitian matrix, a drive waveform, and signed
    /// drive-coupling sites.
    pub fn new(h0: Array2<C64>, drive: DriveWaveform, signs: DriveSigns) -> Result<Self> {
        let l = h0.nrows();
        if l == 0 || h0.ncols() != l {
            return Err(Error::InvalidModel(format!(
                "system matrix must be square and non-empty, got {}x{}",
                h0.nrows(),
                h0.ncols()
            )));
        }
        for i in 0..l {
            for j in 0..l {
                let d = h0[[i, j]] - h0[[j, i]].conj();
                if d.norm() > 0.0 {
                    return Err(Error::InvalidModel(format!(
                        "system matrix not Hermitian at ({i}, {j})"
                    )));
                }
                if !h0[[i, j]].re.is_finite() || !h0[[i, j]].im.is_finite() {
                    return Err(Error::InvalidModel("system matrix has non-finite entries".into()));
                }
            }
        }
        drive.validate()?;
        for &(site, sign) in &signs {
            if site >= l {
                return Err(Error::InvalidModel(format!(
                    "drive site {site} out of range for {l} modes"
                )));
            }
            if !matches!(sign, -1 | 0 | 1) {
                return Err(Error::InvalidModel(format!(
                    "drive sign must be -1, 0 or +1, got {sign}"
                )));
            }
        }
        Ok(SystemSpec { modes: l, hamiltonian: Hamiltonian::Driven { h0, drive, signs } })
    }

    /// The driven two-site bridge: hopping `−Δ` between two sites whose
    /// on-site energies are modulated as `±E(t)/2`.
    pub fn two_site(delta: f64, drive: DriveWaveform) -> Result<Self> {
        let mut h0 = Array2::zeros((2, 2));
        h0[[0, 1]] = C64::new(-delta, 0.0);
        h0[[1, 0]] = C64::new(-delta, 0.0);
        SystemSpec::new(h0, drive, vec![(0, 1), (1, -1)])
    }

    /// Fully custom time-dependent Hamiltonian. The builder must return an
    /// `modes × modes` Hermitian matrix for every `t`.
    pub fn custom<F>(modes: usize, builder: F) -> Self
    where
        F: Fn(f64) -> Array2<C64> + Send + Sync + 'static,
    {
        SystemSpec { modes, hamiltonian: Hamiltonian::Custom(Arc::new(builder)) }
    }

    /// Number of system modes L.
    pub fn modes(&self) -> usize {
        self.modes
    }

    /// The drive waveform, when the spec uses the driven-on-site form.
    pub fn drive(&self) -> Option<&DriveWaveform> {
        match &self.hamiltonian {
            Hamiltonian::Driven { drive, .. } => Some(drive),
            Hamiltonian::Custom(_) => None,
        }
    }

    /// Evaluate h_S(t). Hermiticity is exact by construction for the driven
    /// form; custom builders are trusted.
    pub fn hamiltonian(&self, t: f64) -> Array2<C64> {
        match &self.hamiltonian {
            Hamiltonian::Driven { h0, drive, signs } => {
                let mut h = h0.clone();
                let e = drive.value(t);
                for &(site, sign) in signs {
                    h[[site, site]] += C64::new(f64::from(sign) * e / 2.0, 0.0);
                }
                h
            }
            Hamiltonian::Custom(f) => f(t),
        }
    }

    pub(crate) fn hash_into(&self, hasher: &mut sha2::Sha256) {
        use sha2::Digest;
        hasher.update(self.modes.to_le_bytes());
        match &self.hamiltonian {
            Hamiltonian::Driven { h0, drive, signs } => {
                for v in h0.iter() {
                    hasher.update(v.re.to_le_bytes());
                    hasher.update(v.im.to_le_bytes());
                }
                hasher.update(format!("{drive:?}").as_bytes());
                for &(site, sign) in signs {
                    hasher.update(site.to_le_bytes());
                    hasher.update(sign.to_le_bytes());
                }
            }
            Hamiltonian::Custom(_) => {
                // Custom builders cannot be fingerprinted; hash a marker so
                // checkpoints at least distinguish them from driven specs.
                hasher.update(b"custom");
            }
        }
    }
}

/// Reservoir spectral density J(ω) on `[−W, W]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SpectralDensity {
    /// Flat band `J(ω) = coupling` for `|ω| ≤ half_bandwidth` (wide-band limit
    /// with a hard cutoff).
    Flat { coupling: f64, half_bandwidth: f64 },
    /// Non-negative samples `(ω, J(ω))` interpolated linearly; zero outside
    /// `[−half_bandwidth, half_bandwidth]`.
    Tabulated { half_bandwidth: f64, points: Vec<(f64, f64)> },
}

impl SpectralDensity {
    pub fn validate(&self) -> Result<()> {
        match self {
            SpectralDensity::Flat { coupling, half_bandwidth } => {
                finite("spectral coupling", *coupling)?;
                finite("half bandwidth", *half_bandwidth)?;
                if *coupling < 0.0 {
                    return Err(Error::InvalidModel(format!(
                        "spectral coupling must be non-negative, got {coupling}"
                    )));
                }
                if *half_bandwidth <= 0.0 {
                    return Err(Error::InvalidModel(format!(
                        "half bandwidth must be positive, got {half_bandwidth}"
                    )));
                }
            }
            SpectralDensity::Tabulated { half_bandwidth, points } => {
                finite("half bandwidth", *half_bandwidth)?;
                if *half_bandwidth <= 0.0 {
                    return Err(Error::InvalidModel(format!(
                        "half bandwidth must be positive, got {half_bandwidth}"
                    )));
                }
                if points.is_empty() {
                    return Err(Error::InvalidModel(
                        "tabulated spectral density requires at least one point".into(),
                    ));
                }
                for &(w, j) in points {
                    finite("spectral density sample frequency", w)?;
                    finite("spectral density sample value", j)?;
                    if j < 0.0 {
                        return Err(Error::InvalidModel(format!(
                            "spectral density must be non-negative, got {j} at ω = {w}"
                        )));
                    }
                }
                if points.windows(2).any(|p| p[1].0 <= p[0].0) {
                    return Err(Error::InvalidModel(
                        "tabulated spectral density frequencies must be strictly increasing"
                            .into(),
                    ));
                }
            }
        }
        Ok(())
    }

    /// J(ω); zero outside the band.
    pub fn value(&self, omega: f64) -> f64 {
        let w = self.half_bandwidth();
        if omega < -w || omega > w {
            return 0.0;
        }
        match self {
            SpectralDensity::Flat { coupling, .. } => *coupling,
            SpectralDensity::Tabulated { points, .. } => interpolate_table(points, omega),
        }
    }

    pub fn half_bandwidth(&self) -> f64 {
        match self {
            SpectralDensity::Flat { half_bandwidth, .. }
            | SpectralDensity::Tabulated { half_bandwidth, .. } => *half_bandwidth,
        }
    }
}

/// One continuum reservoir: grand-canonical state, coupling site, spectral
/// density, and the number of lead modes used to discretize it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReservoirSpec {
    pub label: String,
    /// Temperature T > 0 (energy units).
    pub temperature: f64,
    /// Chemical potential μ (energy units).
    pub chemical_potential: f64,
    /// Index of the system mode this reservoir couples to.
    pub site: usize,
    /// Number of damped lead modes N ≥ 2.
    pub modes: usize,
    pub spectral_density: SpectralDensity,
}

impl ReservoirSpec {
    pub fn validate(&self) -> Result<()> {
        finite("temperature", self.temperature)?;
        finite("chemical potential", self.chemical_potential)?;
        if self.temperature <= 0.0 {
            return Err(Error::InvalidModel(format!(
                "reservoir `{}`: temperature must be positive, got {}",
                self.label, self.temperature
            )));
        }
        if self.modes < 2 {
            return Err(Error::InvalidModel(format!(
                "reservoir `{}`: at least 2 lead modes required, got {}",
                self.label, self.modes
            )));
        }
        self.spectral_density.validate()
    }
}

/// A complete model: system plus reservoirs.
#[derive(Debug, Clone)]
pub struct ModelSpec {
    pub system: SystemSpec,
    pub reservoirs: Vec<ReservoirSpec>,
}

impl ModelSpec {
    pub fn new(system: SystemSpec, reservoirs: Vec<ReservoirSpec>) -> Result<Self> {
        let spec = ModelSpec { system, reservoirs };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let l = self.system.modes();
        for r in &self.reservoirs {
            r.validate()?;
            if r.site >= l {
                return Err(Error::InvalidModel(format!(
                    "reservoir `{}`: coupling site {} out of range for {} system modes",
                    r.label, r.site, l
                )));
            }
        }
        for (i, a) in self.reservoirs.iter().enumerate() {
            for b in &self.reservoirs[i + 1..] {
                if a.label == b.label {
                    return Err(Error::InvalidModel(format!(
                        "duplicate reservoir label `{}`",
                        a.label
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Fermi-Dirac occupation `1/(exp((ε−μ)/T) + 1)`.
///
/// Saturates to 0 or 1 without overflow for arbitrarily large `|ε−μ|/T`.
pub fn fermi_occupation(energy: f64, temperature: f64, chemical_potential: f64) -> Result<f64> {
    if !energy.is_finite() || !temperature.is_finite() || !chemical_potential.is_finite() {
        return Err(Error::InvalidModel(format!(
            "fermi_occupation requires finite inputs, got ε = {energy}, T = {temperature}, μ = {chemical_potential}"
        )));
    }
    if temperature <= 0.0 {
        return Err(Error::InvalidModel(format!(
            "fermi_occupation requires T > 0, got {temperature}"
        )));
    }
    let x = (energy - chemical_potential) / temperature;
    // Evaluate with the decaying exponential on both branches.
    if x >= 0.0 {
        let z = (-x).exp();
        Ok(z / (1.0 + z))
    } else {
        Ok(1.0 / (1.0 + x.exp()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn fermi_symmetry_point() {
        assert_abs_diff_eq!(fermi_occupation(24.0, 0.1, 24.0).unwrap(), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn fermi_exact_quarter() {
        let f = fermi_occupation(3.0_f64.ln(), 1.0, 0.0).unwrap();
        assert_abs_diff_eq!(f, 0.25, epsilon = 1e-15);
    }

    #[test]
    fn fermi_saturates_without_overflow() {
        let f = fermi_occupation(1000.0, 0.1, 0.0).unwrap();
        assert_eq!(f, 0.0);
        let f = fermi_occupation(-1000.0, 0.1, 0.0).unwrap();
        assert_eq!(f, 1.0);
        // |ε−μ|/T well beyond 700
        assert!(fermi_occupation(1e6, 0.5, 0.0).unwrap() >= 0.0);
    }

    #[test]
    fn fermi_rejects_bad_inputs() {
        assert!(fermi_occupation(f64::NAN, 1.0, 0.0).is_err());
        assert!(fermi_occupation(0.0, 0.0, 0.0).is_err());
        assert!(fermi_occupation(0.0, -1.0, 0.0).is_err());
    }

    #[test]
    fn fermi_monotone_in_energy() {
        let mut prev = 1.0;
        for k in 0..200 {
            let e = -10.0 + 0.1 * k as f64;
            let f = fermi_occupation(e, 0.7, 0.3).unwrap();
            assert!(f <= prev);
            prev = f;
        }
    }

    #[test]
    fn two_site_matches_reference_form() {
        let spec = SystemSpec::two_site(
            1.0,
            DriveWaveform::Cosine { amplitude: 40.0, omega: 5.0 },
        )
        .unwrap();
        // t = 0: diagonal ±eaA/2 = ±20, off-diagonal −Δ
        let h = spec.hamiltonian(0.0);
        assert_abs_diff_eq!(h[[0, 0]].re, 20.0, epsilon = 1e-12);
        assert_abs_diff_eq!(h[[1, 1]].re, -20.0, epsilon = 1e-12);
        assert_abs_diff_eq!(h[[0, 1]].re, -1.0, epsilon = 1e-15);
        // t = π/(2ω): cos = 0, diagonal vanishes
        let h = spec.hamiltonian(std::f64::consts::FRAC_PI_2 / 5.0);
        assert!(h[[0, 0]].norm() < 1e-12);
        assert!(h[[1, 1]].norm() < 1e-12);
        assert_abs_diff_eq!(h[[0, 1]].re, -1.0, epsilon = 1e-15);
    }

    #[test]
    fn zero_drive_two_site() {
        let spec = SystemSpec::two_site(0.7, DriveWaveform::off()).unwrap();
        for t in [0.0, 1.3, 88.8] {
            let h = spec.hamiltonian(t);
            assert_eq!(h[[0, 0]], C64::new(0.0, 0.0));
            assert_eq!(h[[0, 1]], C64::new(-0.7, 0.0));
        }
    }

    #[test]
    fn two_site_periodicity_machine_precision() {
        let omega = 5.0;
        let spec = SystemSpec::two_site(
            1.0,
            DriveWaveform::Cosine { amplitude: 40.0, omega },
        )
        .unwrap();
        let tau = std::f64::consts::TAU / omega;
        for k in 0..20 {
            let t = 0.137 * k as f64;
            let a = spec.hamiltonian(t);
            let b = spec.hamiltonian(t + tau);
            let diff = (&a - &b).iter().map(|z| z.norm()).fold(0.0, f64::max);
            // cos(ωt + 2π) differs from cos(ωt) only through rounding of the
            // argument; the drive amplitude of 40 scales that error.
            assert!(diff < 1e-12, "diff = {diff}");
        }
    }

    #[test]
    fn tabulated_drive_interpolates() {
        let w = DriveWaveform::Tabulated { points: vec![(0.0, 1.0), (2.0, 3.0)] };
        w.validate().unwrap();
        assert_abs_diff_eq!(w.value(1.0), 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(w.value(-5.0), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(w.value(9.0), 3.0, epsilon = 1e-15);
    }

    #[test]
    fn tabulated_drive_rejects_unsorted() {
        let w = DriveWaveform::Tabulated { points: vec![(0.0, 1.0), (0.0, 3.0)] };
        assert!(w.validate().is_err());
    }

    #[test]
    fn cosine_requires_positive_omega() {
        assert!(DriveWaveform::Cosine { amplitude: 1.0, omega: 0.0 }.validate().is_err());
        assert!(DriveWaveform::Cosine { amplitude: 1.0, omega: -2.0 }.validate().is_err());
    }

    #[test]
    fn non_hermitian_system_rejected() {
        let mut h = Array2::<C64>::zeros((2, 2));
        h[[0, 1]] = C64::new(1.0, 0.0);
        assert!(SystemSpec::new(h, DriveWaveform::off(), vec![]).is_err());
    }

    #[test]
    fn duplicate_reservoir_labels_rejected() {
        let sys = SystemSpec::two_site(1.0, DriveWaveform::off()).unwrap();
        let res = ReservoirSpec {
            label: "L".into(),
            temperature: 0.1,
            chemical_potential: 0.0,
            site: 0,
            modes: 4,
            spectral_density: SpectralDensity::Flat { coupling: 0.5, half_bandwidth: 10.0 },
        };
        let err = ModelSpec::new(sys, vec![res.clone(), res]).unwrap_err();
        assert!(matches!(err, Error::InvalidModel(_)));
    }

    #[test]
    fn out_of_range_site_rejected() {
        let sys = SystemSpec::two_site(1.0, DriveWaveform::off()).unwrap();
        let res = ReservoirSpec {
            label: "L".into(),
            temperature: 0.1,
            chemical_potential: 0.0,
            site: 2,
            modes: 4,
            spectral_density: SpectralDensity::Flat { coupling: 0.5, half_bandwidth: 10.0 },
        };
        assert!(ModelSpec::new(sys, vec![res]).is_err());
    }
}
