//! Physical outputs extracted from covariance trajectories: instantaneous
//! currents and noise, accumulated charge, limit-cycle detection, and the
//! averaged quantities J̄, S̄⁰, S̄∞ with the Fano factor.

use ndarray::Array2;
use num_complex::Complex64 as C64;

use crate::assemble::CountingMatrix;
use crate::dynamics::CovarianceState;
use crate::error::{Error, Result};

/// Relative tolerance on the imaginary residue of nominally real traces.
const RESIDUE_TOL: f64 = 1e-10;

/// First stored time at which the current became periodic, with the
/// achieved sup-norm residual.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimitCycleDetection {
    pub t1: f64,
    pub residual: f64,
}

/// One counting window: the noise series `D_ν(t, t_start)` for every probe,
/// sampled at the trace times from `start_index` on.
#[derive(Debug, Clone)]
pub struct NoiseWindow {
    pub t_start: f64,
    /// Index into the trace times at which this window opens.
    pub start_index: usize,
    /// `noise[probe][k]` is `D` at `times[start_index + k]`.
    pub noise: Vec<Vec<f64>>,
}

/// Stored time series of a trajectory: per-probe currents, per-window noise,
/// snapshots, and integration diagnostics.
#[derive(Debug, Clone)]
pub struct RunTrace {
    pub times: Vec<f64>,
    pub probe_labels: Vec<String>,
    /// `currents[probe][k]` is `J_ν` at `times[k]`.
    pub currents: Vec<Vec<f64>>,
    pub windows: Vec<NoiseWindow>,
    /// Present when the integrator ran in auto limit-cycle mode.
    pub detected_limit_cycle: Option<LimitCycleDetection>,
    /// `(t, C)` snapshots, when requested.
    pub snapshots: Vec<(f64, Array2<C64>)>,
    pub model_hash: String,
    pub final_state: CovarianceState,
    /// Largest relative Hermiticity drift of C seen at re-symmetrization.
    pub max_hermiticity_drift: f64,
    /// Largest relative anti-Hermiticity drift of any C̃.
    pub max_antihermiticity_drift: f64,
}

impl RunTrace {
    pub fn current_series(&self, probe: usize) -> &[f64] {
        &self.currents[probe]
    }

    /// Times covered by window `w` (from its start onward).
    pub fn window_times(&self, w: usize) -> &[f64] {
        &self.times[self.windows[w].start_index..]
    }

    /// Accumulated charge `⟨N_ν(t_b, t_a)⟩ = ∫ J_ν dt` for one probe.
    pub fn integrated_charge(&self, probe: usize, t_a: f64, t_b: f64) -> Result<f64> {
        integrated_charge(&self.times, &self.currents[probe], t_a, t_b)
    }
}

// ---------------------------------------------------------------------------
// traces of the counting matrix
// ---------------------------------------------------------------------------

fn counting_trace(g: &CountingMatrix, m: &Array2<C64>) -> Result<C64> {
    let n = m.nrows();
    if n != g.dim || m.ncols() != n {
        return Err(Error::DimensionMismatch { expected: g.dim, got: n });
    }
    let mut acc = C64::ZERO;
    for (k, &kappa) in g.kappas.iter().enumerate() {
        acc += kappa * (m[[g.offset + k, g.site]] - m[[g.site, g.offset + k]]);
    }
    Ok(acc)
}

fn take_real(value: C64) -> Result<f64> {
    let tol = RESIDUE_TOL * value.re.abs().max(1.0);
    if value.im.abs() > tol {
        return Err(Error::ResidueViolation { residue: value.im.abs(), tol });
    }
    Ok(value.re)
}

/// Instantaneous current `J_ν = i Tr[G_ν C]`, asserting the imaginary
/// residue stays within tolerance.
pub fn instantaneous_current(g: &CountingMatrix, c: &Array2<C64>) -> Result<f64> {
    take_real(C64::new(0.0, 1.0) * counting_trace(g, c)?)
}

/// Instantaneous noise `D_ν = 2 Tr[G_ν C̃]`.
pub fn instantaneous_noise(g: &CountingMatrix, ctilde: &Array2<C64>) -> Result<f64> {
    take_real(2.0 * counting_trace(g, ctilde)?)
}

// ---------------------------------------------------------------------------
// series quadrature
// ---------------------------------------------------------------------------

/// A uniformly sampled series with a fixed piecewise-cubic reconstruction.
///
/// Every interpolation and integral below is taken on this one
/// reconstruction, which makes integrals exactly additive across arbitrary
/// split points while keeping O(h⁴) accuracy at off-grid interval endpoints
/// (the drive period is generally not a multiple of the sampling step).
struct Series<'a> {
    times: &'a [f64],
    values: &'a [f64],
    h: f64,
}

impl<'a> Series<'a> {
    fn new(times: &'a [f64], values: &'a [f64]) -> Result<Self> {
        if times.len() != values.len() {
            return Err(Error::DimensionMismatch { expected: times.len(), got: values.len() });
        }
        if times.len() < 2 {
            return Err(Error::OutOfRange {
                a: times.first().copied().unwrap_or(0.0),
                b: times.last().copied().unwrap_or(0.0),
            });
        }
        let h = times[1] - times[0];
        let span = times[times.len() - 1] - times[0];
        if h <= 0.0 {
            return Err(Error::InvalidModel("series times must be increasing".into()));
        }
        for w in times.windows(2) {
            if ((w[1] - w[0]) - h).abs() > 1e-9 * span.max(1.0) {
                return Err(Error::InvalidModel("series times must be uniform".into()));
            }
        }
        Ok(Series { times, values, h })
    }

    fn t0(&self) -> f64 {
        self.times[0]
    }

    fn t_end(&self) -> f64 {
        self.times[self.times.len() - 1]
    }

    fn contains(&self, t: f64) -> bool {
        let slack = 1e-9 * self.h.max(1.0);
        t >= self.t0() - slack && t <= self.t_end() + slack
    }

    /// Cubic coefficients on the 4-sample stencil for cell `i`
    /// (the interval `[t_i, t_{i+1}]`), in the stencil-local coordinate.
    fn cell(&self, i: usize) -> (usize, [f64; 4]) {
        let m = self.values.len();
        if m < 4 {
            // Degenerate short series: linear reconstruction per cell.
            let y0 = self.values[i];
            let y1 = self.values[i + 1];
            return (i, [y0, y1 - y0, 0.0, 0.0]);
        }
        let s = i.saturating_sub(1).min(m - 4);
        let y = [self.values[s], self.values[s + 1], self.values[s + 2], self.values[s + 3]];
        let a0 = y[0];
        let a1 = (-11.0 * y[0] + 18.0 * y[1] - 9.0 * y[2] + 2.0 * y[3]) / 6.0;
        let a2 = (2.0 * y[0] - 5.0 * y[1] + 4.0 * y[2] - y[3]) / 2.0;
        let a3 = (-y[0] + 3.0 * y[1] - 3.0 * y[2] + y[3]) / 6.0;
        (s, [a0, a1, a2, a3])
    }

    fn cell_index(&self, t: f64) -> usize {
        let m = self.values.len();
        let raw = ((t - self.t0()) / self.h).floor() as isize;
        raw.clamp(0, m as isize - 2) as usize
    }

    fn value_at(&self, t: f64) -> Result<f64> {
        if !self.contains(t) {
            return Err(Error::OutOfRange { a: t, b: t });
        }
        let i = self.cell_index(t);
        let (s, a) = self.cell(i);
        let xi = (t - self.t0()) / self.h - s as f64;
        Ok(((a[3] * xi + a[2]) * xi + a[1]) * xi + a[0])
    }

    fn integrate(&self, from: f64, to: f64) -> Result<f64> {
        if !(self.contains(from) && self.contains(to)) || to < from {
            return Err(Error::OutOfRange { a: from, b: to });
        }
        if to == from {
            return Ok(0.0);
        }
        let first = self.cell_index(from);
        let last = self.cell_index(to);
        let mut acc = 0.0;
        for i in first..=last {
            let cell_lo = self.t0() + i as f64 * self.h;
            let cell_hi = self.t0() + (i + 1) as f64 * self.h;
            let lo = from.max(cell_lo);
            let hi = to.min(cell_hi);
            if hi <= lo {
                continue;
            }
            let (s, a) = self.cell(i);
            let xlo = (lo - self.t0()) / self.h - s as f64;
            let xhi = (hi - self.t0()) / self.h - s as f64;
            let anti = |x: f64| (((a[3] / 4.0 * x + a[2] / 3.0) * x + a[1] / 2.0) * x + a[0]) * x;
            acc += self.h * (anti(xhi) - anti(xlo));
        }
        Ok(acc)
    }
}

/// Accumulated charge `⟨N(t_b, t_a)⟩` from a stored current series.
pub fn integrated_charge(times: &[f64], j: &[f64], t_a: f64, t_b: f64) -> Result<f64> {
    Series::new(times, j)?.integrate(t_a, t_b)
}

// ---------------------------------------------------------------------------
// limit cycle
// ---------------------------------------------------------------------------

fn residual_at(series: &[Series<'_>], t1: f64, tau: f64) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for s in series {
        let first = s.cell_index(t1).max(0);
        for (k, &t) in s.times.iter().enumerate().skip(first) {
            if t < t1 - 1e-12 {
                continue;
            }
            if t > t1 + tau + 1e-12 {
                break;
            }
            let shifted = s.value_at(t + tau)?;
            worst = worst.max((shifted - s.values[k]).abs());
        }
    }
    Ok(worst)
}

/// Earliest stored `t1` at which every supplied current series satisfies
/// `max_{t ∈ [t1, t1+τ]} |J(t+τ) − J(t)| ≤ tol`.
///
/// Fails with the best achieved residual when the trace never settles.
pub fn detect_limit_cycle(
    times: &[f64],
    currents: &[Vec<f64>],
    tau: f64,
    tol: f64,
) -> Result<LimitCycleDetection> {
    let mut cursor = 0;
    if let Some(found) = detect_limit_cycle_scan(times, currents, tau, tol, &mut cursor) {
        return Ok(found);
    }
    match best_residual(times, currents, tau) {
        Some(best) => Err(Error::NotConverged { residual: best.residual, t1: best.t1 }),
        None => Err(Error::OutOfRange { a: times.first().copied().unwrap_or(0.0), b: 2.0 * tau }),
    }
}

/// Incremental scan used both by [`detect_limit_cycle`] and by the
/// integrator's on-line detection; `cursor` persists across calls so every
/// candidate is evaluated once.
pub(crate) fn detect_limit_cycle_scan(
    times: &[f64],
    currents: &[Vec<f64>],
    tau: f64,
    tol: f64,
    cursor: &mut usize,
) -> Option<LimitCycleDetection> {
    let series: Vec<Series<'_>> = currents
        .iter()
        .map(|c| Series::new(times, c))
        .collect::<Result<_>>()
        .ok()?;
    let t_end = *times.last()?;
    while *cursor < times.len() {
        let t1 = times[*cursor];
        if t1 + 2.0 * tau > t_end + 1e-12 {
            return None;
        }
        let residual = residual_at(&series, t1, tau).ok()?;
        if residual <= tol {
            return Some(LimitCycleDetection { t1, residual });
        }
        *cursor += 1;
    }
    None
}

/// Smallest residual over all evaluable candidates (diagnostics for
/// non-converged traces).
pub(crate) fn best_residual(
    times: &[f64],
    currents: &[Vec<f64>],
    tau: f64,
) -> Option<LimitCycleDetection> {
    let series: Vec<Series<'_>> = currents
        .iter()
        .map(|c| Series::new(times, c))
        .collect::<Result<_>>()
        .ok()?;
    let t_end = *times.last()?;
    let mut best: Option<LimitCycleDetection> = None;
    for &t1 in times {
        if t1 + 2.0 * tau > t_end + 1e-12 {
            break;
        }
        let residual = residual_at(&series, t1, tau).ok()?;
        if best.map_or(true, |b| residual < b.residual) {
            best = Some(LimitCycleDetection { t1, residual });
        }
    }
    best
}

// ---------------------------------------------------------------------------
// limit-cycle averages
// ---------------------------------------------------------------------------

/// Current averaged over one period, `(1/τ) ∫_{t1}^{t1+τ} J dt`.
pub fn lc_average_current(times: &[f64], j: &[f64], t1: f64, tau: f64) -> Result<f64> {
    Ok(Series::new(times, j)?.integrate(t1, t1 + tau)? / tau)
}

/// Average variance of the charge transferred over the first period of a
/// counting window, `(1/τ) ∫_0^τ D(t1+t', t1) dt'`.
///
/// `times` and `d` must start at the window opening `t1`.
pub fn single_period_noise(times: &[f64], d: &[f64], t1: f64, tau: f64) -> Result<f64> {
    if (times.first().copied().unwrap_or(f64::NAN) - t1).abs() > 1e-9 {
        return Err(Error::WindowOutOfRange(t1));
    }
    Ok(Series::new(times, d)?.integrate(t1, t1 + tau)? / tau)
}

/// Zero-frequency noise estimators over a counting window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZeroFrequencyNoise {
    /// `(1/τ) ∫ D` over the last complete period of the window.
    pub last_period: f64,
    /// Time average of D over the whole window after `t1`.
    pub total_average: f64,
    /// `|last_period − total_average| / max(|last_period|, 1e−300)`.
    pub relative_difference: f64,
    /// Complete periods available after `t1`.
    pub periods: usize,
    /// Whether successive-period averages settled within the tolerance and
    /// at least the requested number of periods was available.
    pub converged: bool,
}

/// Evaluate S̄∞ over a window that starts at `t1`, reporting both the
/// late-period estimator and the total time average.
///
/// A horizon shorter than `min_periods` periods yields an explicit
/// unconverged result rather than an error, as long as one full period is
/// available.
pub fn zero_frequency_noise(
    times: &[f64],
    d: &[f64],
    t1: f64,
    tau: f64,
    min_periods: usize,
    rel_tol: f64,
) -> Result<ZeroFrequencyNoise> {
    if (times.first().copied().unwrap_or(f64::NAN) - t1).abs() > 1e-9 {
        return Err(Error::WindowOutOfRange(t1));
    }
    let series = Series::new(times, d)?;
    let horizon = series.t_end() - t1;
    let periods = (horizon / tau * (1.0 + 1e-12)).floor() as usize;
    if periods < 1 {
        return Err(Error::OutOfRange { a: t1, b: t1 + tau });
    }
    let period_avg = |a: usize| -> Result<f64> {
        let lo = t1 + a as f64 * tau;
        Ok(series.integrate(lo, lo + tau)? / tau)
    };
    let last_period = period_avg(periods - 1)?;
    let total_average = series.integrate(t1, t1 + periods as f64 * tau)? / (periods as f64 * tau);
    let relative_difference =
        (last_period - total_average).abs() / last_period.abs().max(1e-300);
    let converged = if periods >= min_periods.max(2) {
        let prev = period_avg(periods - 2)?;
        (last_period - prev).abs() <= rel_tol * last_period.abs().max(1e-300)
    } else {
        false
    };
    Ok(ZeroFrequencyNoise { last_period, total_average, relative_difference, periods, converged })
}

/// Variance of the charge transferred since the window opened,
/// `var[N(t, t1)] = ∫_{t1}^{t} D dt'`.
pub fn transferred_charge_variance(times: &[f64], d: &[f64], t_end: f64) -> Result<f64> {
    let series = Series::new(times, d)?;
    series.integrate(series.t0(), t_end)
}

/// Residual of the variance decomposition
/// `var[N(t2,t0)] − var[N(t2,t1)] − var[N(t1,t0)] − 2 cov`.
pub fn covariance_decomposition_residual(
    var_total: f64,
    var_late: f64,
    var_early: f64,
    cov: f64,
) -> f64 {
    var_total - var_late - var_early - 2.0 * cov
}

/// Fano factor `S̄∞ / |J̄|`, positive by convention.
pub fn fano_factor(s_inf: f64, j_bar: f64) -> Result<f64> {
    if j_bar.abs() < 1e-10 {
        return Err(Error::VanishingCurrent(j_bar));
    }
    Ok(s_inf / j_bar.abs())
}

/// Per-probe limit-cycle averages.
#[derive(Debug, Clone)]
pub struct ProbeSummary {
    pub label: String,
    pub j_bar: f64,
    pub s0: f64,
    pub s_inf: ZeroFrequencyNoise,
    /// `S̄∞/|J̄|` using the late-period estimator; absent when J̄ ≈ 0.
    pub fano: Option<f64>,
}

/// Limit-cycle summary of one counting window of a trace.
#[derive(Debug, Clone)]
pub struct LimitCycleSummary {
    /// Window opening time (the t₁ of all averages below).
    pub t1: f64,
    pub tau: f64,
    /// Periodicity residual of the currents over `[t1, t1+τ]`.
    pub residual: f64,
    pub probes: Vec<ProbeSummary>,
    /// `Σ_ν J̄_ν`; vanishes at the limit cycle by charge conservation.
    pub current_sum: f64,
}

/// Compute every limit-cycle average for the given window.
pub fn limit_cycle_summary(
    trace: &RunTrace,
    window: usize,
    tau: f64,
    min_periods: usize,
    rel_tol: f64,
) -> Result<LimitCycleSummary> {
    let w = trace.windows.get(window).ok_or(Error::OutOfRange { a: window as f64, b: 0.0 })?;
    let t1 = w.t_start;
    let wtimes = trace.window_times(window);
    let mut probes = Vec::with_capacity(trace.probe_labels.len());
    let mut current_sum = 0.0;
    for (p, label) in trace.probe_labels.iter().enumerate() {
        let j_bar = lc_average_current(&trace.times, &trace.currents[p], t1, tau)?;
        let s0 = single_period_noise(wtimes, &w.noise[p], t1, tau)?;
        let s_inf = zero_frequency_noise(wtimes, &w.noise[p], t1, tau, min_periods, rel_tol)?;
        let fano = fano_factor(s_inf.last_period, j_bar).ok();
        current_sum += j_bar;
        probes.push(ProbeSummary { label: label.clone(), j_bar, s0, s_inf, fano });
    }
    let series: Vec<Series<'_>> = trace
        .currents
        .iter()
        .map(|c| Series::new(&trace.times, c))
        .collect::<Result<_>>()?;
    let residual = residual_at(&series, t1, tau)?;
    Ok(LimitCycleSummary { t1, tau, residual, probes, current_sum })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn uniform_times(n: usize, h: f64) -> Vec<f64> {
        (0..n).map(|k| k as f64 * h).collect()
    }

    #[test]
    fn current_of_zero_covariance_vanishes() {
        let g = CountingMatrix { dim: 3, site: 0, offset: 1, kappas: vec![0.4, 0.3] };
        let c = Array2::<C64>::zeros((3, 3));
        assert_eq!(instantaneous_current(&g, &c).unwrap(), 0.0);
    }

    #[test]
    fn current_traceless_on_half_filling() {
        let g = CountingMatrix { dim: 3, site: 0, offset: 1, kappas: vec![0.4, 0.3] };
        let c = Array2::from_diag_elem(3, C64::new(0.5, 0.0));
        assert_eq!(instantaneous_current(&g, &c).unwrap(), 0.0);
    }

    #[test]
    fn current_two_mode_hand_expansion() {
        // One system mode, one lead mode, C₁₂ = x + iy: J = 2κy.
        let g = CountingMatrix { dim: 2, site: 0, offset: 1, kappas: vec![0.7] };
        let mut c = Array2::<C64>::zeros((2, 2));
        c[[0, 1]] = C64::new(0.3, 0.25);
        c[[1, 0]] = C64::new(0.3, -0.25);
        let j = instantaneous_current(&g, &c).unwrap();
        assert_abs_diff_eq!(j, 2.0 * 0.7 * 0.25, epsilon = 1e-14);
    }

    #[test]
    fn residue_violation_detected() {
        let g = CountingMatrix { dim: 2, site: 0, offset: 1, kappas: vec![1.0] };
        let mut c = Array2::<C64>::zeros((2, 2));
        // A non-Hermitian C leaks an imaginary part into i·Tr[GC].
        c[[0, 1]] = C64::new(0.5, 0.0);
        c[[1, 0]] = C64::new(-0.5, 0.0);
        assert!(matches!(
            instantaneous_current(&g, &c),
            Err(Error::ResidueViolation { .. })
        ));
    }

    #[test]
    fn charge_of_constant_current() {
        let times = uniform_times(101, 0.01);
        let j = vec![0.37; 101];
        let q = integrated_charge(&times, &j, 0.0, 1.0).unwrap();
        assert_abs_diff_eq!(q, 0.37, epsilon = 1e-13);
        assert_eq!(integrated_charge(&times, &j, 0.4, 0.4).unwrap(), 0.0);
    }

    #[test]
    fn charge_additive_at_arbitrary_split() {
        let times = uniform_times(401, 0.005);
        let j: Vec<f64> = times.iter().map(|&t| (3.0 * t).sin() + 0.2 * t).collect();
        let whole = integrated_charge(&times, &j, 0.1, 1.9).unwrap();
        for split in [0.5, 0.777, 1.23456789] {
            let a = integrated_charge(&times, &j, 0.1, split).unwrap();
            let b = integrated_charge(&times, &j, split, 1.9).unwrap();
            assert_abs_diff_eq!(a + b, whole, epsilon = 1e-12 * whole.abs().max(1.0));
        }
    }

    #[test]
    fn charge_quadrature_accuracy() {
        let times = uniform_times(201, 0.01);
        let j: Vec<f64> = times.iter().map(|&t| (5.0 * t).cos()).collect();
        let q = integrated_charge(&times, &j, 0.0, 2.0).unwrap();
        let exact = (5.0_f64 * 2.0).sin() / 5.0;
        assert_abs_diff_eq!(q, exact, epsilon = 1e-7);
    }

    #[test]
    fn charge_out_of_range() {
        let times = uniform_times(11, 0.1);
        let j = vec![1.0; 11];
        assert!(integrated_charge(&times, &j, -0.5, 0.5).is_err());
        assert!(integrated_charge(&times, &j, 0.0, 1.5).is_err());
    }

    #[test]
    fn detect_constant_series_immediately() {
        let times = uniform_times(400, 0.01);
        let j = vec![0.5; 400];
        let det = detect_limit_cycle(&times, &[j], 1.0, 1e-12).unwrap();
        assert_eq!(det.t1, 0.0);
        assert_eq!(det.residual, 0.0);
    }

    #[test]
    fn detect_transient_then_periodic() {
        let tau = 0.7;
        let omega = std::f64::consts::TAU / tau;
        let times = uniform_times(1000, 0.01);
        let j: Vec<f64> =
            times.iter().map(|&t| (omega * t).sin() + 2.0 * (-2.0 * t).exp()).collect();
        let det = detect_limit_cycle(&times, &[j], tau, 1e-4).unwrap();
        // the exp(−2t) transient must decay below 1e−4 over one period
        assert!(det.t1 > 3.0 && det.t1 < 6.0, "t1 = {}", det.t1);
        assert!(det.residual <= 1e-4);
    }

    #[test]
    fn detect_zero_tolerance_fails_with_residual() {
        let times = uniform_times(500, 0.01);
        let j: Vec<f64> = times.iter().map(|&t| (7.0 * t).sin() * (-0.2 * t).exp()).collect();
        let err = detect_limit_cycle(&times, &[j], 0.9, 0.0).unwrap_err();
        match err {
            Error::NotConverged { residual, .. } => assert!(residual > 0.0),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn lc_average_of_pure_sinusoid_vanishes() {
        let tau = std::f64::consts::TAU / 4.0;
        let times = uniform_times(2000, 0.005);
        let j: Vec<f64> = times.iter().map(|&t| (4.0 * t).sin()).collect();
        let avg = lc_average_current(&times, &j, 1.0, tau).unwrap();
        assert!(avg.abs() < 1e-9, "avg = {avg}");
        let j = vec![0.8; 2000];
        let avg = lc_average_current(&times, &j, 1.0, tau).unwrap();
        assert_abs_diff_eq!(avg, 0.8, epsilon = 1e-12);
    }

    #[test]
    fn zero_frequency_constant_equals_single_period() {
        let times = uniform_times(3000, 0.01);
        let d = vec![1.7; 3000];
        let tau = 1.3;
        let s0 = single_period_noise(&times, &d, 0.0, tau).unwrap();
        let zf = zero_frequency_noise(&times, &d, 0.0, tau, 10, 0.02).unwrap();
        assert_abs_diff_eq!(s0, 1.7, epsilon = 1e-12);
        assert_abs_diff_eq!(zf.last_period, 1.7, epsilon = 1e-12);
        assert_abs_diff_eq!(zf.total_average, 1.7, epsilon = 1e-12);
        assert!(zf.converged);
    }

    #[test]
    fn zero_frequency_short_horizon_flags_unconverged() {
        let times = uniform_times(150, 0.01);
        let d: Vec<f64> = times.iter().map(|&t| t).collect();
        let zf = zero_frequency_noise(&times, &d, 0.0, 1.0, 10, 0.02).unwrap();
        assert!(!zf.converged);
        assert_eq!(zf.periods, 1);
    }

    #[test]
    fn window_start_mismatch_rejected() {
        let times = uniform_times(200, 0.01);
        let d = vec![0.0; 200];
        assert!(single_period_noise(&times, &d, 0.5, 0.3).is_err());
    }

    #[test]
    fn decomposition_residual_degenerate() {
        // t1 = t0 makes the early window empty and the covariance zero.
        assert_eq!(covariance_decomposition_residual(2.0, 2.0, 0.0, 0.0), 0.0);
    }

    #[test]
    fn fano_requires_nonzero_current() {
        assert!(fano_factor(1.0, 0.0).is_err());
        assert_abs_diff_eq!(fano_factor(0.5, -1.0).unwrap(), 0.5, epsilon = 1e-15);
    }
}
