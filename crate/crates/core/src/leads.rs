//! Mesoscopic-leads discretization: a continuum reservoir becomes a finite
//! set of damped fermionic modes.
//!
//! Each reservoir is sampled homogeneously across its band `[−W, W]` by `N`
//! modes placed at bin midpoints, `ε_k = −W + (k + 1/2)·2W/N`, so that every
//! mode carries the same damping `γ_k = 2W/N`. The system-mode couplings are
//! `κ_k = sqrt(J(ε_k) γ_k / 2π)` and each mode relaxes toward the Fermi-Dirac
//! occupation of its energy.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{fermi_occupation, ReservoirSpec};

/// Per-mode arrays realizing the mesoscopic-leads mapping of one reservoir.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeadDiscretization {
    energies: Vec<f64>,
    gammas: Vec<f64>,
    kappas: Vec<f64>,
    occupations: Vec<f64>,
}

impl LeadDiscretization {
    /// Assemble from explicit per-mode arrays. Used for hand-built small
    /// instances (oracle validation); `discretize` is the continuum route.
    pub fn from_parts(
        energies: Vec<f64>,
        gammas: Vec<f64>,
        kappas: Vec<f64>,
        occupations: Vec<f64>,
    ) -> Result<Self> {
        let n = energies.len();
        if n == 0 {
            return Err(Error::InvalidModel("lead discretization must not be empty".into()));
        }
        if gammas.len() != n || kappas.len() != n || occupations.len() != n {
            return Err(Error::InvalidModel("lead arrays must have equal lengths".into()));
        }
        for k in 0..n {
            if !energies[k].is_finite()
                || !gammas[k].is_finite()
                || !kappas[k].is_finite()
                || !occupations[k].is_finite()
            {
                return Err(Error::InvalidModel("lead arrays must be finite".into()));
            }
            if gammas[k] <= 0.0 {
                return Err(Error::InvalidModel(format!(
                    "lead damping must be positive, got {} at mode {k}",
                    gammas[k]
                )));
            }
            if kappas[k] < 0.0 {
                return Err(Error::InvalidModel(format!(
                    "lead coupling must be non-negative, got {} at mode {k}",
                    kappas[k]
                )));
            }
            if !(0.0..=1.0).contains(&occupations[k]) {
                return Err(Error::InvalidModel(format!(
                    "lead occupation must lie in [0, 1], got {} at mode {k}",
                    occupations[k]
                )));
            }
        }
        Ok(LeadDiscretization { energies, gammas, kappas, occupations })
    }

    pub fn len(&self) -> usize {
        self.energies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.energies.is_empty()
    }

    /// Mode energies ε_k.
    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    /// Mode dampings γ_k.
    pub fn gammas(&self) -> &[f64] {
        &self.gammas
    }

    /// System-mode couplings κ_k.
    pub fn kappas(&self) -> &[f64] {
        &self.kappas
    }

    /// Target occupations f_k.
    pub fn occupations(&self) -> &[f64] {
        &self.occupations
    }
}

/// Discretize a continuum reservoir into `N` damped lead modes.
pub fn discretize(spec: &ReservoirSpec) -> Result<LeadDiscretization> {
    spec.validate()?;
    let n = spec.modes;
    let w = spec.spectral_density.half_bandwidth();
    let gamma = 2.0 * w / n as f64;
    let mut energies = Vec::with_capacity(n);
    let mut kappas = Vec::with_capacity(n);
    let mut occupations = Vec::with_capacity(n);
    for k in 0..n {
        let eps = -w + (k as f64 + 0.5) * gamma;
        energies.push(eps);
        kappas.push((spec.spectral_density.value(eps) * gamma / std::f64::consts::TAU).sqrt());
        occupations.push(fermi_occupation(eps, spec.temperature, spec.chemical_potential)?);
    }
    LeadDiscretization::from_parts(energies, vec![gamma; n], kappas, occupations)
}

/// The effective spectral density realized by a discretization: a sum of
/// Lorentzians `Σ_k κ_k² γ_k / ((ω − ε_k)² + (γ_k/2)²)`.
pub fn effective_spectral_density(leads: &LeadDiscretization, omega: f64) -> f64 {
    leads
        .energies
        .iter()
        .zip(&leads.gammas)
        .zip(&leads.kappas)
        .map(|((&eps, &gamma), &kappa)| {
            let d = omega - eps;
            kappa * kappa * gamma / (d * d + gamma * gamma / 4.0)
        })
        .sum()
}

/// One row of a [`convergence_report`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub modes: usize,
    /// `max_ω |J_eff(ω) − J(ω)| / J(ω)` over the probe window, or the
    /// absolute deviation where `J(ω) = 0`.
    pub max_deviation: f64,
}

/// Measure how well the effective spectral density reproduces the target
/// density for each requested mode count.
///
/// Deviations are taken over `|ω| ≤ window_fraction · W`; the Lorentzian
/// tails cannot reproduce the hard band edge, so the default window (0.8)
/// stays clear of it. The probe grid combines a uniform scan at a quarter of
/// the mode spacing with the mode energies themselves, so both the on-mode
/// peaks and the mid-gap valleys of the Lorentzian comb are sampled.
pub fn convergence_report(
    spec: &ReservoirSpec,
    mode_counts: &[usize],
    window_fraction: f64,
) -> Result<Vec<ConvergenceRow>> {
    if mode_counts.is_empty() {
        return Err(Error::InvalidModel("convergence report requires mode counts".into()));
    }
    if !(0.0..=1.0).contains(&window_fraction) {
        return Err(Error::InvalidModel(format!(
            "window fraction must lie in [0, 1], got {window_fraction}"
        )));
    }
    let w = spec.spectral_density.half_bandwidth();
    let edge = window_fraction * w;
    let mut rows = Vec::with_capacity(mode_counts.len());
    for &n in mode_counts {
        let sub = ReservoirSpec { modes: n, ..spec.clone() };
        let leads = discretize(&sub)?;
        let probes = 4 * n + 1;
        let mut max_dev: f64 = 0.0;
        let mut probe = |omega: f64| {
            let target = spec.spectral_density.value(omega);
            let got = effective_spectral_density(&leads, omega);
            let dev =
                if target > 0.0 { (got - target).abs() / target } else { (got - target).abs() };
            max_dev = max_dev.max(dev);
        };
        for i in 0..probes {
            probe(-edge + 2.0 * edge * i as f64 / (probes - 1) as f64);
        }
        for &eps in leads.energies() {
            if eps.abs() <= edge {
                probe(eps);
            }
        }
        rows.push(ConvergenceRow { modes: n, max_deviation: max_dev });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::SpectralDensity;
    use approx::assert_abs_diff_eq;

    fn flat_reservoir(modes: usize) -> ReservoirSpec {
        ReservoirSpec {
            label: "L".into(),
            temperature: 0.1,
            chemical_potential: 24.0,
            site: 0,
            modes,
            spectral_density: SpectralDensity::Flat { coupling: 0.5, half_bandwidth: 100.0 },
        }
    }

    #[test]
    fn flat_band_reference_values() {
        let leads = discretize(&flat_reservoir(400)).unwrap();
        assert_eq!(leads.len(), 400);
        for &g in leads.gammas() {
            assert_abs_diff_eq!(g, 0.5, epsilon = 1e-15);
        }
        let kappa = (0.25 / std::f64::consts::TAU).sqrt();
        for &k in leads.kappas() {
            assert_abs_diff_eq!(k, kappa, epsilon = 1e-15);
            assert_abs_diff_eq!(k, 0.199471, epsilon = 1e-6);
        }
        // midpoint grid spans the band symmetrically
        assert_abs_diff_eq!(leads.energies()[0], -99.75, epsilon = 1e-12);
        assert_abs_diff_eq!(leads.energies()[399], 99.75, epsilon = 1e-12);
    }

    #[test]
    fn energies_equidistant_and_increasing() {
        let leads = discretize(&flat_reservoir(37)).unwrap();
        let d0 = leads.energies()[1] - leads.energies()[0];
        for w in leads.energies().windows(2) {
            assert!(w[1] > w[0]);
            assert_abs_diff_eq!(w[1] - w[0], d0, epsilon = 1e-12);
        }
        assert_abs_diff_eq!(d0, leads.gammas()[0], epsilon = 1e-12);
    }

    #[test]
    fn occupations_non_increasing() {
        let leads = discretize(&flat_reservoir(100)).unwrap();
        for w in leads.occupations().windows(2) {
            assert!(w[1] <= w[0]);
        }
    }

    #[test]
    fn zero_spectral_density_decouples() {
        let spec = ReservoirSpec {
            spectral_density: SpectralDensity::Tabulated {
                half_bandwidth: 10.0,
                points: vec![(-10.0, 0.0), (10.0, 0.0)],
            },
            ..flat_reservoir(8)
        };
        let leads = discretize(&spec).unwrap();
        assert!(leads.kappas().iter().all(|&k| k == 0.0));
        assert_eq!(effective_spectral_density(&leads, 1.3), 0.0);
        let report = convergence_report(&spec, &[8, 16], 0.8).unwrap();
        for row in report {
            assert_eq!(row.max_deviation, 0.0);
        }
    }

    #[test]
    fn doubling_modes_halves_damping() {
        let a = discretize(&flat_reservoir(100)).unwrap();
        let b = discretize(&flat_reservoir(200)).unwrap();
        assert_abs_diff_eq!(a.gammas()[0], 2.0 * b.gammas()[0], epsilon = 1e-15);
    }

    #[test]
    fn coupling_sum_riemann_exact_for_flat_band() {
        // Σ κ_k² = Γ·2W/(2π) exactly at every N for a flat band.
        for n in [7, 50, 400] {
            let leads = discretize(&flat_reservoir(n)).unwrap();
            let sum: f64 = leads.kappas().iter().map(|k| k * k).sum();
            let expected = 0.5 * 200.0 / std::f64::consts::TAU;
            assert_abs_diff_eq!(sum, expected, epsilon = 1e-10 * expected);
        }
    }

    #[test]
    fn effective_density_near_target_inside_band() {
        let leads = discretize(&flat_reservoir(400)).unwrap();
        // On-mode values overshoot the target by the fixed comb ripple
        // 2 coth(π/2)/π − 1 ≈ 9%, independent of N; see the guide chapter on
        // lead discretization.
        let j = effective_spectral_density(&leads, leads.energies()[200]);
        assert!((j - 0.5).abs() / 0.5 < 0.1, "J_eff = {j}");
    }

    #[test]
    fn convergence_report_monotone_flat_band() {
        let rows = convergence_report(&flat_reservoir(400), &[50, 100, 200, 400], 0.8).unwrap();
        assert_eq!(rows.len(), 4);
        for w in rows.windows(2) {
            assert!(
                w[1].max_deviation < w[0].max_deviation,
                "deviation must decrease with N: {:?}",
                rows
            );
        }
        // Frozen from direct evaluation of the Lorentzian sum: the sup-norm
        // deviation saturates at the comb ripple ≈ 8.8%, approached from
        // above as band-edge losses shrink with N.
        assert_abs_diff_eq!(rows[0].max_deviation, 0.1180, epsilon = 2e-3);
        assert_abs_diff_eq!(rows[3].max_deviation, 0.0888, epsilon = 2e-3);
    }

    #[test]
    fn report_rejects_empty_mode_list() {
        assert!(convergence_report(&flat_reservoir(4), &[], 0.8).is_err());
    }

    #[test]
    fn discretize_rejects_single_mode() {
        assert!(discretize(&flat_reservoir(1)).is_err());
    }
}
