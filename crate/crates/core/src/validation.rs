//! Built-in validation scenarios.
//!
//! Each criterion is a self-contained run with pinned parameters and
//! tolerances, returning a [`CriterionReport`]. The acceptance test suite
//! asserts every report and the CLI `validate` subcommand prints them.
//!
//! Criteria that sweep the paper-scale geometry run by default on a reduced
//! reservoir discretization that preserves the physics; the full-size
//! variant of the limit-cycle criterion is enabled with `heavy = true`.

use std::time::Instant;

use ndarray::Array2;
use num_complex::Complex64 as C64;

use crate::assemble::AssembledModel;
use crate::dynamics::{evolve, CovarianceState, InitialCovariance, IntegratorConfig, WindowPlan};
use crate::error::Result;
use crate::leads::convergence_report;
use crate::leads::LeadDiscretization;
use crate::model::{
    fermi_occupation, DriveWaveform, ModelSpec, ReservoirSpec, SpectralDensity, SystemSpec,
};
use crate::observables::{self, RunTrace};
use crate::oracle::{
    cf_cumulant_path, differentiate_series, distribution, sigma_cumulant_path,
    window_decomposition, FockSpaceModel,
};

/// Outcome of one validation criterion.
#[derive(Debug, Clone)]
pub struct CriterionReport {
    pub id: usize,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

impl CriterionReport {
    fn new(id: usize, name: &'static str, started: Instant, passed: bool, detail: String) -> Self {
        CriterionReport { id, name, passed, detail, seconds: started.elapsed().as_secs_f64() }
    }

    /// One human-readable line, `PASS`/`FAIL` first.
    pub fn line(&self) -> String {
        format!(
            "{} — {:>2} {} ({:.1}s): {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.seconds,
            self.detail
        )
    }
}

fn report_error(
    id: usize,
    name: &'static str,
    started: Instant,
    err: crate::Error,
) -> CriterionReport {
    CriterionReport::new(id, name, started, false, format!("error: {err}"))
}

macro_rules! try_report {
    ($id:expr, $name:expr, $started:expr, $expr:expr) => {
        match $expr {
            Ok(v) => v,
            Err(e) => return report_error($id, $name, $started, e),
        }
    };
}

// ---------------------------------------------------------------------------
// reference instances
// ---------------------------------------------------------------------------

/// Drive cases exercised by the oracle criteria.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DriveCase {
    Static,
    Cosine,
    Pulse,
}

impl DriveCase {
    pub fn waveform(self) -> DriveWaveform {
        match self {
            DriveCase::Static => DriveWaveform::off(),
            DriveCase::Cosine => DriveWaveform::Cosine { amplitude: 1.2, omega: 2.0 },
            DriveCase::Pulse => DriveWaveform::Pulse { amplitude: 1.5, center: 3.0, width: 0.8 },
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            DriveCase::Static => "static",
            DriveCase::Cosine => "cosine",
            DriveCase::Pulse => "pulse",
        }
    }

    pub const ALL: [DriveCase; 3] = [DriveCase::Static, DriveCase::Cosine, DriveCase::Pulse];
}

/// One driven site between two single-mode reservoirs, with couplings of
/// order the system energy scale. Small enough for the exact Fock-space
/// path, strong-coupling enough to be a meaningful test.
pub fn three_mode_model(case: DriveCase) -> Result<AssembledModel> {
    let mut h0 = Array2::<C64>::zeros((1, 1));
    h0[[0, 0]] = C64::new(0.3, 0.0);
    let system = SystemSpec::new(h0, case.waveform(), vec![(0, 1)])?;
    let reservoirs = vec![
        ReservoirSpec {
            label: "A".into(),
            temperature: 1.0,
            chemical_potential: 0.6,
            site: 0,
            modes: 2,
            spectral_density: SpectralDensity::Flat { coupling: 0.5, half_bandwidth: 2.0 },
        },
        ReservoirSpec {
            label: "B".into(),
            temperature: 0.5,
            chemical_potential: -0.4,
            site: 0,
            modes: 2,
            spectral_density: SpectralDensity::Flat { coupling: 0.5, half_bandwidth: 2.0 },
        },
    ];
    let spec = ModelSpec { system, reservoirs };
    let lead_a = LeadDiscretization::from_parts(
        vec![-0.4],
        vec![0.9],
        vec![0.45],
        vec![fermi_occupation(-0.4, 1.0, 0.6)?],
    )?;
    let lead_b = LeadDiscretization::from_parts(
        vec![0.7],
        vec![0.6],
        vec![0.35],
        vec![fermi_occupation(0.7, 0.5, -0.4)?],
    )?;
    crate::assemble::assemble(&spec, vec![lead_a, lead_b])
}

/// The driven two-site bridge between flat-band reservoirs at ±24 bias.
pub fn bridge_model(
    modes: usize,
    half_bandwidth: f64,
    gamma_left: f64,
    gamma_right: f64,
    drive: DriveWaveform,
) -> Result<AssembledModel> {
    let system = SystemSpec::two_site(1.0, drive)?;
    let reservoir = |label: &str, site, mu, coupling| ReservoirSpec {
        label: label.into(),
        temperature: 0.1,
        chemical_potential: mu,
        site,
        modes,
        spectral_density: SpectralDensity::Flat { coupling, half_bandwidth },
    };
    let spec = ModelSpec::new(
        system,
        vec![reservoir("L", 0, 24.0, gamma_left), reservoir("R", 1, -24.0, gamma_right)],
    )?;
    AssembledModel::from_spec(&spec)
}

fn cosine(amplitude: f64, omega: f64) -> DriveWaveform {
    DriveWaveform::Cosine { amplitude, omega }
}

// ---------------------------------------------------------------------------
// series comparison helpers
// ---------------------------------------------------------------------------

/// `sup_t |a − b| / sup_t |b|`.
fn sup_rel_diff(a: &[f64], b: &[f64]) -> f64 {
    let scale = b.iter().fold(0.0_f64, |m, &x| m.max(x.abs())).max(1e-300);
    a.iter().zip(b).map(|(&x, &y)| (x - y).abs()).fold(0.0_f64, f64::max) / scale
}

struct OracleTriple {
    gauss_j: Vec<f64>,
    gauss_d: Vec<f64>,
    sigma_j: Vec<f64>,
    sigma_d: Vec<f64>,
    cf_j: Vec<f64>,
    cf_d: Vec<f64>,
    /// Index range where the time derivatives of the CF path use the
    /// fourth-order interior stencil.
    interior: std::ops::Range<usize>,
}

/// Run all three computational paths on a three-mode instance over
/// `[0, t_end]`, counting into reservoir A.
fn oracle_triple(case: DriveCase, t_end: f64, dt: f64) -> Result<OracleTriple> {
    let model = three_mode_model(case)?;
    let probe = 0;

    let mut config = IntegratorConfig::new(dt, t_end);
    config.windows = WindowPlan::Explicit(vec![0.0]);
    let init = InitialCovariance::Empty.build(&model)?;
    let trace = evolve(&model, init, &config, &[probe])?;
    let gauss_j = trace.currents[0].clone();
    let gauss_d = trace.windows[0].noise[0].clone();

    let fock = FockSpaceModel::new(&model)?;
    let rho0 = fock.vacuum();
    let sigma = sigma_cumulant_path(&fock, &rho0, probe, 0.0, t_end, dt)?;
    let cf = cf_cumulant_path(&fock, &rho0, probe, 1e-3, 0.0, t_end, dt)?;
    let cf_j = differentiate_series(&cf.times, &cf.mean);
    let cf_d = differentiate_series(&cf.times, &cf.variance);

    let n = gauss_j.len();
    Ok(OracleTriple {
        gauss_j,
        gauss_d,
        sigma_j: sigma.current,
        sigma_d: sigma.noise,
        cf_j,
        cf_d,
        interior: 2..n - 2,
    })
}

// ---------------------------------------------------------------------------
// criteria
// ---------------------------------------------------------------------------

/// Gaussian-path current and noise agree with both exact oracle routes on
/// three-mode instances (static, cosine, pulse) to 1e−4 relative.
pub fn criterion_oracle_equivalence() -> CriterionReport {
    let started = Instant::now();
    let (id, name) = (1, "oracle-equivalence");
    let tol = 1e-4;
    let mut detail = String::new();
    let mut passed = true;
    for case in DriveCase::ALL {
        let triple = try_report!(id, name, started, oracle_triple(case, 10.0, 0.01));
        let r = triple.interior.clone();
        let dj_sigma = sup_rel_diff(&triple.gauss_j, &triple.sigma_j);
        let dd_sigma = sup_rel_diff(&triple.gauss_d, &triple.sigma_d);
        let dj_cf = sup_rel_diff(&triple.gauss_j[r.clone()], &triple.cf_j[r.clone()]);
        let dd_cf = sup_rel_diff(&triple.gauss_d[r.clone()], &triple.cf_d[r]);
        let worst = dj_sigma.max(dd_sigma).max(dj_cf).max(dd_cf);
        passed &= worst <= tol;
        detail.push_str(&format!(
            "{}: J,D vs σ-path {:.2e},{:.2e}; vs CF path {:.2e},{:.2e}; ",
            case.label(),
            dj_sigma,
            dd_sigma,
            dj_cf,
            dd_cf
        ));
    }
    detail.push_str(&format!("tolerance {tol:.0e}"));
    CriterionReport::new(id, name, started, passed, detail)
}

/// The two oracle routes (χ-grid CF and σ-ODE) agree with each other to
/// 1e−5 relative.
pub fn criterion_oracle_paths_mutual() -> CriterionReport {
    let started = Instant::now();
    let (id, name) = (2, "oracle-paths-mutual-agreement");
    let tol = 1e-5;
    let mut detail = String::new();
    let mut passed = true;
    for case in DriveCase::ALL {
        let triple = try_report!(id, name, started, oracle_triple(case, 10.0, 0.01));
        let r = triple.interior.clone();
        let dj = sup_rel_diff(&triple.sigma_j[r.clone()], &triple.cf_j[r.clone()]);
        let dd = sup_rel_diff(&triple.sigma_d[r.clone()], &triple.cf_d[r]);
        passed &= dj.max(dd) <= tol;
        detail.push_str(&format!("{}: J {:.2e}, D {:.2e}; ", case.label(), dj, dd));
    }
    detail.push_str(&format!("tolerance {tol:.0e}"));
    CriterionReport::new(id, name, started, passed, detail)
}

/// Variance over a split window decomposes into the window variances plus
/// twice the covariance, all measured by the oracle's joint two-window
/// characteristic function.
///
/// The windows anchored at t₀ are additionally cross-checked against the
/// inverted distributions P(n). The late window [t₁, t₂] has no such
/// counterpart: its single-window P(n) corresponds to a protocol with a
/// projective charge measurement at t₁, which destroys the system-lead
/// coherences present at that time and genuinely shifts the variance (here
/// at the 1e−4 level), whereas the decomposition identity is a statement
/// about uninterrupted counting.
pub fn criterion_window_decomposition() -> CriterionReport {
    let started = Instant::now();
    let (id, name) = (3, "window-variance-decomposition");
    let tol = 1e-6;
    let (t0, t1, t2) = (0.0, 2.0, 5.0);
    let model = try_report!(id, name, started, three_mode_model(DriveCase::Cosine));
    let fock = try_report!(id, name, started, FockSpaceModel::new(&model));
    let rho0 = fock.vacuum();
    let dec = try_report!(
        id,
        name,
        started,
        window_decomposition(&fock, &rho0, 0, t0, t1, t2, 0.01, 1e-3)
    );
    let dist_total =
        try_report!(id, name, started, distribution(&fock, &rho0, 0, 0.0, t0, t2, 0.01, 128));
    let dist_early =
        try_report!(id, name, started, distribution(&fock, &rho0, 0, 0.0, t0, t1, 0.01, 128));
    let p_total_err = (dist_total.variance() - dec.var_total).abs();
    let p_early_err = (dist_early.variance() - dec.var_early).abs();
    let passed = dec.residual.abs() <= tol && p_total_err <= tol && p_early_err <= tol;
    let detail = format!(
        "joint-CF residual {:.2e}; P(n) cross-checks: total {:.2e}, early {:.2e}; cov {:.4e}; \
         tolerance {tol:.0e}",
        dec.residual, p_total_err, p_early_err, dec.covariance
    );
    CriterionReport::new(id, name, started, passed, detail)
}

/// Covariance snapshots stay Hermitian with spectrum in [0, 1], and the
/// auxiliary matrices stay anti-Hermitian, along a reduced paper-scale run
/// at the reference time step.
///
/// Hermiticity and anti-Hermiticity hold to machine precision. The spectrum
/// clause cannot meet its 1e−8 bound at dt = 0.01 under the strong drive:
/// band-edge lead coherences rotate at up to |ε − ε'|·dt ≈ 2 rad per step,
/// where fourth-order Runge-Kutta misrepresents their (exactly cancelling)
/// 1e−5-scale amplitudes, leaving an O(1e−6) eigenvalue spill that is pure
/// time-discretization error — halving the step restores the bound with
/// three orders of margin, which this criterion also measures and reports.
pub fn criterion_state_validity() -> CriterionReport {
    let started = Instant::now();
    let (id, name) = (4, "state-validity");
    let run = |dt: f64| -> Result<(RunTrace, f64, f64, f64)> {
        let model = bridge_model(100, 100.0, 0.5, 0.5, cosine(40.0, 5.0))?;
        let mut config = IntegratorConfig::new(dt, 30.0);
        config.windows = WindowPlan::Explicit(vec![15.0]);
        config.snapshot_stride = Some((10.0 / dt).round() as usize);
        config.store_stride = 5;
        let init = InitialCovariance::Empty.build(&model)?;
        let trace = evolve(&model, init, &config, &[0, 1])?;
        let mut worst_drift: f64 = trace.max_hermiticity_drift;
        let mut min_eig = f64::INFINITY;
        let mut max_eig = f64::NEG_INFINITY;
        for (t, c) in &trace.snapshots {
            let check = CovarianceState { c: c.clone(), t: *t }.check();
            worst_drift = worst_drift.max(check.hermiticity_drift);
            min_eig = min_eig.min(check.min_eigenvalue);
            max_eig = max_eig.max(check.max_eigenvalue);
        }
        Ok((trace, worst_drift, min_eig, max_eig))
    };
    let (trace, worst_drift, min_eig, max_eig) = try_report!(id, name, started, run(0.01));
    let (_, _, min_eig_fine, max_eig_fine) = try_report!(id, name, started, run(0.005));
    let passed = worst_drift <= 1e-10
        && min_eig >= -1e-8
        && max_eig <= 1.0 + 1e-8
        && trace.max_antihermiticity_drift <= 1e-10;
    let detail = format!(
        "dt = 0.01: hermiticity drift {:.2e}, spectrum [{:+.2e}, 1 {:+.2e}] vs bound ±1e-8, \
         auxiliary drift {:.2e}; dt = 0.005 spectrum [{:+.2e}, 1 {:+.2e}] (discretization \
         artifact of the strong drive at the reference step)",
        worst_drift,
        min_eig,
        max_eig - 1.0,
        trace.max_antihermiticity_drift,
        min_eig_fine,
        max_eig_fine - 1.0
    );
    CriterionReport::new(id, name, started, passed, detail)
}

/// With fully symmetric parameters the left and right noise curves
/// coincide pointwise.
///
/// The symmetry behind the equality combines the spatial mirror with a
/// particle-hole conjugation (μ_L = −μ_R maps f ↔ 1−f). An empty initial
/// covariance is not self-conjugate (empty ↔ full), so the equality would
/// only hold up to the decaying transient; starting from the half-filled
/// system with equilibrated leads — which is exactly self-conjugate — makes
/// it hold to rounding at every time after the window opens.
pub fn criterion_symmetric_noise_equality() -> CriterionReport {
    let started = Instant::now();
    let (id, name) = (5, "symmetric-noise-equality");
    let omega = 5.0;
    let tau = std::f64::consts::TAU / omega;
    let t1 = 24.0 * std::f64::consts::PI / omega;
    let model =
        try_report!(id, name, started, bridge_model(100, 100.0, 0.5, 0.5, cosine(40.0, omega)));
    let mut config = IntegratorConfig::new(0.01, t1 + 6.0 * tau);
    config.windows = WindowPlan::Explicit(vec![t1]);
    let mut c0 = try_report!(id, name, started, InitialCovariance::LeadsThermal.build(&model));
    for site in 0..model.system_modes() {
        c0.c[[site, site]] = C64::new(0.5, 0.0);
    }
    let trace = try_report!(id, name, started, evolve(&model, c0, &config, &[0, 1]));
    let w = &trace.windows[0];
    let scale = w.noise[0].iter().fold(0.0_f64, |m, &x| m.max(x.abs()));
    let diff = w.noise[0]
        .iter()
        .zip(&w.noise[1])
        .map(|(&a, &b)| (a - b).abs())
        .fold(0.0_f64, f64::max);
    let passed = diff <= 1e-8 * scale;
    let detail =
        format!("max |D_L − D_R| = {:.2e}, scale {:.2e}, tolerance 1e-8·scale", diff, scale);
    CriterionReport::new(id, name, started, passed, detail)
}

/// LC-averaged currents of the two reservoirs cancel, in symmetric and
/// asymmetric coupling configurations.
pub fn criterion_charge_conservation() -> CriterionReport {
    let started = Instant::now();
    let (id, name) = (6, "charge-conservation");
    let omega = 5.0;
    let tau = std::f64::consts::TAU / omega;
    let t1 = 50.0;
    let mut detail = String::new();
    let mut passed = true;
    for (label, gl, gr) in [("symmetric", 0.5, 0.5), ("asymmetric", 2.0, 0.5)] {
        let model =
            try_report!(id, name, started, bridge_model(100, 100.0, gl, gr, cosine(40.0, omega)));
        let config = IntegratorConfig::new(0.01, t1 + 1.5 * tau);
        let init = try_report!(id, name, started, InitialCovariance::Empty.build(&model));
        let trace = try_report!(id, name, started, evolve(&model, init, &config, &[0, 1]));
        let jl = try_report!(
            id,
            name,
            started,
            observables::lc_average_current(&trace.times, &trace.currents[0], t1, tau)
        );
        let jr = try_report!(
            id,
            name,
            started,
            observables::lc_average_current(&trace.times, &trace.currents[1], t1, tau)
        );
        let sum = (jl + jr).abs();
        passed &= sum <= 1e-6;
        detail.push_str(&format!("{label}: |J̄_L + J̄_R| = {:.2e} (J̄_L = {:.4e}); ", sum, jl));
    }
    detail.push_str("tolerance 1e-6");
    CriterionReport::new(id, name, started, passed, detail)
}

/// The current settles onto the limit cycle no later than 24π/ω at the
/// 1e−4 residual tolerance.
///
/// `heavy` runs the full 400-mode discretization with the reservoirs
/// initially in their own thermal states (the product initial condition the
/// counting statistics are derived for). The default 100-mode proxy opens
/// the drive from the relaxed static steady state instead: its four-times
/// larger per-mode damping makes the product-state correlation transient
/// artificially slow, and pre-relaxing isolates the drive switch-on
/// transient the criterion is actually about.
pub fn criterion_limit_cycle_attainment(heavy: bool) -> CriterionReport {
    let started = Instant::now();
    let (id, name) = (7, "limit-cycle-attainment");
    let omega = 5.0;
    let tau = std::f64::consts::TAU / omega;
    let deadline = 24.0 * std::f64::consts::PI / omega;
    let modes = if heavy { 400 } else { 100 };
    let model =
        try_report!(id, name, started, bridge_model(modes, 100.0, 0.5, 0.5, cosine(40.0, omega)));
    let init = if heavy {
        try_report!(id, name, started, InitialCovariance::LeadsThermal.build(&model))
    } else {
        let quiet =
            try_report!(id, name, started, bridge_model(modes, 100.0, 0.5, 0.5, DriveWaveform::off()));
        let relax = IntegratorConfig::new(0.01, 40.0);
        let thermal = try_report!(id, name, started, InitialCovariance::LeadsThermal.build(&quiet));
        let settled = try_report!(id, name, started, evolve(&quiet, thermal, &relax, &[0]));
        CovarianceState { c: settled.final_state.c, t: 0.0 }
    };
    let mut config = IntegratorConfig::new(0.01, deadline + 2.0 * tau + 0.5);
    config.windows = WindowPlan::AutoLimitCycle { tau, tolerance: 1e-4 };
    let trace = try_report!(id, name, started, evolve(&model, init, &config, &[0, 1]));
    let det = trace.detected_limit_cycle.expect("auto mode detects or errors");
    let passed = det.t1 <= deadline + 1e-9 && det.residual <= 1e-4;
    let detail = format!(
        "N = {modes} ({}): residual {:.2e} at t1 = {:.3} (deadline {:.3})",
        if heavy { "thermal leads" } else { "relaxed static start" },
        det.residual,
        det.t1,
        deadline
    );
    CriterionReport::new(id, name, started, passed, detail)
}

fn noise_ratio_at(omega: f64, periods: usize, t1: f64) -> Result<(f64, f64)> {
    let tau = std::f64::consts::TAU / omega;
    let model = bridge_model(100, 100.0, 0.5, 0.5, cosine(20.0, omega))?;
    let mut config = IntegratorConfig::new(0.01, t1 + (periods as f64 + 0.25) * tau);
    config.windows = WindowPlan::Explicit(vec![t1]);
    config.store_stride = 2;
    let init = InitialCovariance::Empty.build(&model)?;
    let trace = evolve(&model, init, &config, &[0])?;
    let w = &trace.windows[0];
    let wt = trace.window_times(0);
    let s0 = observables::single_period_noise(wt, &w.noise[0], w.t_start, tau)?;
    let sinf =
        observables::zero_frequency_noise(wt, &w.noise[0], w.t_start, tau, periods.min(5), 0.02)?;
    Ok((s0, sinf.last_period))
}

/// The single-period and zero-frequency noise coincide in the slow-driving
/// regime and separate at fast driving.
pub fn criterion_low_frequency_coincidence() -> CriterionReport {
    let started = Instant::now();
    let (id, name) = (8, "low-frequency-noise-coincidence");
    let slow_tau = std::f64::consts::TAU / 0.2;
    let (s0_slow, sinf_slow) =
        try_report!(id, name, started, noise_ratio_at(0.2, 6, 2.0 * slow_tau));
    let (s0_fast, sinf_fast) = try_report!(id, name, started, noise_ratio_at(5.0, 20, 15.0));
    let ratio_slow = s0_slow / sinf_slow;
    let ratio_fast = s0_fast / sinf_fast;
    let passed = (0.95..=1.05).contains(&ratio_slow) && (ratio_fast - 1.0).abs() > 0.10;
    let detail = format!(
        "S0/S∞ = {:.4} at ω = 0.2 (required within [0.95, 1.05]); {:.4} at ω = 5 \
         (required > 10% from 1)",
        ratio_slow, ratio_fast
    );
    CriterionReport::new(id, name, started, passed, detail)
}

/// Sweeping the drive amplitude, the zero-frequency noise develops deep
/// interior minima while the single-period noise stays bounded away from
/// zero.
pub fn criterion_noise_suppression_contrast() -> CriterionReport {
    let started = Instant::now();
    let (id, name) = (9, "noise-suppression-contrast");
    let omega = 5.0;
    let tau = std::f64::consts::TAU / omega;
    let t1 = 24.0 * std::f64::consts::PI / omega;
    let periods = 15usize;
    let amplitudes: Vec<f64> = (0..=10).map(|k| 4.0 * k as f64).collect();
    let run_one = |amplitude: f64| -> Result<(f64, f64)> {
        let model = bridge_model(100, 100.0, 0.5, 0.5, cosine(amplitude, omega))?;
        let mut config = IntegratorConfig::new(0.01, t1 + (periods as f64 + 0.25) * tau);
        config.windows = WindowPlan::Explicit(vec![t1]);
        config.store_stride = 2;
        let init = InitialCovariance::Empty.build(&model)?;
        let trace = evolve(&model, init, &config, &[0])?;
        let w = &trace.windows[0];
        let wt = trace.window_times(0);
        let s0 = observables::single_period_noise(wt, &w.noise[0], w.t_start, tau)?;
        let sinf = observables::zero_frequency_noise(wt, &w.noise[0], w.t_start, tau, 5, 0.02)?;
        Ok((s0, sinf.last_period))
    };
    use rayon::prelude::*;
    let results: Vec<(f64, f64)> =
        try_report!(id, name, started, amplitudes.par_iter().map(|&a| run_one(a)).collect());
    let s0: Vec<f64> = results.iter().map(|r| r.0).collect();
    let sinf: Vec<f64> = results.iter().map(|r| r.1).collect();
    let max_sinf = sinf.iter().fold(f64::NEG_INFINITY, |m, &x| m.max(x));
    let max_s0 = s0.iter().fold(f64::NEG_INFINITY, |m, &x| m.max(x));
    let min_s0 = s0.iter().fold(f64::INFINITY, |m, &x| m.min(x));
    let mut min_interior = f64::INFINITY;
    for k in 1..sinf.len() - 1 {
        if sinf[k] < sinf[k - 1] && sinf[k] < sinf[k + 1] {
            min_interior = min_interior.min(sinf[k]);
        }
    }
    let passed = min_interior < 0.2 * max_sinf && min_s0 > 0.3 * max_s0;
    let detail = format!(
        "S∞ interior minimum {:.3e} vs max {:.3e} (need < 0.2·max); S0 min {:.3e} vs max {:.3e} \
         (need > 0.3·max)",
        min_interior, max_sinf, min_s0, max_s0
    );
    CriterionReport::new(id, name, started, passed, detail)
}

/// Static high-bias transport: the Fano factor approaches 1/2 at weak
/// coupling (double barrier) and 1 at strong coupling (single barrier).
pub fn criterion_fano_regimes() -> CriterionReport {
    let started = Instant::now();
    let (id, name) = (10, "fano-factor-regimes");
    let mut detail = String::new();
    let mut passed = true;
    // Same mode spacing as the full-size geometry, at half the bandwidth;
    // the bias window stays deep inside the band.
    for (gamma, lo, hi, t_relax, horizon) in
        [(0.05, 0.35, 0.65, 160.0, 160.0), (10.0, 0.85, 1.15, 60.0, 60.0)]
    {
        let run = || -> Result<f64> {
            let model = bridge_model(200, 50.0, gamma, gamma, DriveWaveform::off())?;
            let mut config = IntegratorConfig::new(0.02, t_relax + horizon);
            config.windows = WindowPlan::Explicit(vec![t_relax]);
            config.store_stride = 5;
            let init = InitialCovariance::LeadsThermal.build(&model)?;
            let trace = evolve(&model, init, &config, &[0])?;
            let w = &trace.windows[0];
            let wt = trace.window_times(0);
            // static run: the averaging period is arbitrary
            let tau = horizon / 8.0;
            let sinf =
                observables::zero_frequency_noise(wt, &w.noise[0], w.t_start, tau, 4, 0.05)?;
            let j = observables::lc_average_current(
                &trace.times,
                &trace.currents[0],
                t_relax + horizon - tau,
                tau,
            )?;
            observables::fano_factor(sinf.last_period, j)
        };
        let fano = try_report!(id, name, started, run());
        passed &= (lo..=hi).contains(&fano);
        detail.push_str(&format!("Γ = {gamma}: Fano {:.4} (required [{lo}, {hi}]); ", fano));
    }
    CriterionReport::new(id, name, started, passed, detail)
}

/// The effective spectral density approaches the flat band monotonically
/// with the mode count, and lands within 5% at the full-size count.
///
/// The monotone half holds; the 5% half cannot: a Lorentzian comb whose
/// width equals the level spacing has an N-independent sup-norm ripple —
/// `2·coth(π/2)/π − 1 ≈ +9%` on-mode, `2·tanh(π/2)/π − 1 ≈ −8%` mid-gap —
/// so the sup-norm deviation saturates near 8.8% as band-edge losses
/// shrink. The criterion is evaluated exactly as stated and reports the
/// measured values.
pub fn criterion_leads_convergence() -> CriterionReport {
    let started = Instant::now();
    let (id, name) = (11, "leads-convergence");
    let spec = ReservoirSpec {
        label: "L".into(),
        temperature: 0.1,
        chemical_potential: 24.0,
        site: 0,
        modes: 400,
        spectral_density: SpectralDensity::Flat { coupling: 0.5, half_bandwidth: 100.0 },
    };
    let rows =
        try_report!(id, name, started, convergence_report(&spec, &[50, 100, 200, 400], 0.8));
    let monotone = rows.windows(2).all(|w| w[1].max_deviation < w[0].max_deviation);
    let final_dev = rows.last().unwrap().max_deviation;
    let passed = monotone && final_dev <= 0.05;
    let devs: Vec<String> =
        rows.iter().map(|r| format!("N={}: {:.4}", r.modes, r.max_deviation)).collect();
    let detail = format!(
        "{}; monotone: {monotone}; final ≤ 0.05: {} (comb ripple floor ≈ 0.088)",
        devs.join(", "),
        final_dev <= 0.05
    );
    CriterionReport::new(id, name, started, passed, detail)
}

/// Halving the time step changes the limit-cycle averages by at most 1e−5
/// relative on the reduced paper-scale run.
pub fn criterion_self_convergence() -> CriterionReport {
    let started = Instant::now();
    let (id, name) = (12, "integrator-self-convergence");
    let omega = 5.0;
    let tau = std::f64::consts::TAU / omega;
    let t1 = 24.0 * std::f64::consts::PI / omega;
    let periods = 10usize;
    let run = |dt: f64| -> Result<(f64, f64, f64)> {
        let model = bridge_model(100, 100.0, 0.5, 0.5, cosine(40.0, omega))?;
        let mut config = IntegratorConfig::new(dt, t1 + (periods as f64 + 0.25) * tau);
        config.windows = WindowPlan::Explicit(vec![t1]);
        let init = InitialCovariance::Empty.build(&model)?;
        let trace = evolve(&model, init, &config, &[0])?;
        let w = &trace.windows[0];
        let wt = trace.window_times(0);
        let j =
            observables::lc_average_current(&trace.times, &trace.currents[0], w.t_start, tau)?;
        let s0 = observables::single_period_noise(wt, &w.noise[0], w.t_start, tau)?;
        let sinf = observables::zero_frequency_noise(wt, &w.noise[0], w.t_start, tau, 5, 0.02)?;
        Ok((j, s0, sinf.last_period))
    };
    let coarse = try_report!(id, name, started, run(0.01));
    let fine = try_report!(id, name, started, run(0.005));
    let rel = |a: f64, b: f64| (a - b).abs() / b.abs().max(1e-300);
    let dj = rel(coarse.0, fine.0);
    let ds0 = rel(coarse.1, fine.1);
    let dsinf = rel(coarse.2, fine.2);
    let passed = dj <= 1e-5 && ds0 <= 1e-5 && dsinf <= 1e-5;
    let detail = format!(
        "relative changes under dt → dt/2: J̄ {:.2e}, S0 {:.2e}, S∞ {:.2e}; tolerance 1e-5",
        dj, ds0, dsinf
    );
    CriterionReport::new(id, name, started, passed, detail)
}

/// The inverted charge distribution is normalized and reproduces the first
/// two cumulants on every oracle instance.
pub fn criterion_distribution_sanity() -> CriterionReport {
    let started = Instant::now();
    let (id, name) = (13, "distribution-sanity");
    let t_end = 5.0;
    let mut detail = String::new();
    let mut passed = true;
    for case in DriveCase::ALL {
        let model = try_report!(id, name, started, three_mode_model(case));
        let fock = try_report!(id, name, started, FockSpaceModel::new(&model));
        let rho0 = fock.vacuum();
        let dist = try_report!(
            id,
            name,
            started,
            distribution(&fock, &rho0, 0, 0.0, 0.0, t_end, 0.01, 256)
        );
        let cf = try_report!(
            id,
            name,
            started,
            cf_cumulant_path(&fock, &rho0, 0, 1e-3, 0.0, t_end, 0.01)
        );
        let mean_err = (dist.mean() - cf.mean.last().unwrap()).abs();
        let var_err = (dist.variance() - cf.variance.last().unwrap()).abs();
        passed &= dist.normalization_error <= 1e-6 && mean_err <= 1e-4 && var_err <= 1e-4;
        detail.push_str(&format!(
            "{}: ΣP−1 = {:.1e}, Δmean {:.1e}, Δvar {:.1e}; ",
            case.label(),
            dist.normalization_error,
            mean_err,
            var_err
        ));
    }
    detail.push_str("tolerances 1e-6 / 1e-4");
    CriterionReport::new(id, name, started, passed, detail)
}

/// The quick validation level: lead-discretization convergence plus the
/// oracle equivalence on the three-mode instances.
pub fn run_quick() -> Vec<CriterionReport> {
    vec![criterion_oracle_equivalence(), criterion_leads_convergence()]
}

/// The full validation suite. With `heavy` the limit-cycle criterion runs
/// at the full 400-mode discretization.
pub fn run_full(heavy: bool) -> Vec<CriterionReport> {
    vec![
        criterion_oracle_equivalence(),
        criterion_oracle_paths_mutual(),
        criterion_window_decomposition(),
        criterion_state_validity(),
        criterion_symmetric_noise_equality(),
        criterion_charge_conservation(),
        criterion_limit_cycle_attainment(heavy),
        criterion_low_frequency_coincidence(),
        criterion_noise_suppression_contrast(),
        criterion_fano_regimes(),
        criterion_leads_convergence(),
        criterion_self_convergence(),
        criterion_distribution_sanity(),
    ]
}
