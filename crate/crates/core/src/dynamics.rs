//! Integration of the covariance matrix C(t) and the auxiliary noise
//! matrices C̃(t, t₁).
//!
//! The equations of motion are
//!
//! ```text
//! dC/dt  = −(W C + C W†) + F
//! dC̃/dt  = −(W C̃ + C̃ W†) − ½ [ C G (1−C) + (1−C) G C ]
//! ```
//!
//! with `W(t) = iH(t) + γ/2`. H(t) is an arrowhead matrix (dense L×L system
//! block, diagonal lead blocks, coupling rows/columns at the contact sites),
//! so every product with H costs O(n²·(L+2)) instead of O(n³). The counting
//! matrices G are rank two, which keeps the noise source term at O(n²) as
//! well. Dense reference implementations are retained for cross-checking.

use ndarray::Array2;
use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::assemble::AssembledModel;
use crate::error::{Error, Result};
use crate::observables::{self, LimitCycleDetection, NoiseWindow, RunTrace};
use crate::util;

/// Row count above which the structured kernels fan out across threads.
/// Per-row arithmetic is unchanged, so results do not depend on the thread
/// count.
const PAR_THRESHOLD: usize = 128;

/// Covariance matrix with its time stamp.
#[derive(Debug, Clone)]
pub struct CovarianceState {
    pub c: Array2<C64>,
    pub t: f64,
}

/// Result of checking the fermionic state invariants of a covariance matrix.
#[derive(Debug, Clone, Copy)]
pub struct StateCheck {
    /// `max |C − C†|` over all entries.
    pub hermiticity_drift: f64,
    pub min_eigenvalue: f64,
    pub max_eigenvalue: f64,
}

impl CovarianceState {
    /// Measure Hermiticity drift and the eigenvalue range, which must stay
    /// within the fermionic occupation bounds `[0, 1]` up to tolerance.
    pub fn check(&self) -> StateCheck {
        let drift = util::hermiticity_drift(&self.c);
        let (lo, hi) = util::hermitian_eigen_range(&self.c);
        StateCheck { hermiticity_drift: drift, min_eigenvalue: lo, max_eigenvalue: hi }
    }
}

/// Choice of C(0).
#[derive(Debug, Clone)]
pub enum InitialCovariance {
    /// Empty system and leads, C = 0.
    Empty,
    /// Leads at their target occupations, system empty: `diag(0…, f_k…)`.
    LeadsThermal,
    /// Explicit matrix (e.g. restored from a checkpoint).
    Matrix(Array2<C64>),
}

impl InitialCovariance {
    pub fn build(&self, model: &AssembledModel) -> Result<CovarianceState> {
        let n = model.dim();
        let c = match self {
            InitialCovariance::Empty => Array2::zeros((n, n)),
            InitialCovariance::LeadsThermal => {
                let mut c = Array2::zeros((n, n));
                for b in model.blocks() {
                    for (k, &f) in b.leads.occupations().iter().enumerate() {
                        c[[b.offset + k, b.offset + k]] = C64::new(f, 0.0);
                    }
                }
                c
            }
            InitialCovariance::Matrix(m) => {
                if m.nrows() != n || m.ncols() != n {
                    return Err(Error::DimensionMismatch { expected: n, got: m.nrows() });
                }
                m.clone()
            }
        };
        Ok(CovarianceState { c, t: 0.0 })
    }
}

/// Placement of the counting windows along the trajectory.
#[derive(Debug, Clone)]
pub enum WindowPlan {
    /// Open a window (one auxiliary matrix per probe) at each listed time,
    /// snapped to the stored sampling grid.
    Explicit(Vec<f64>),
    /// Detect the limit cycle of period `tau` on the fly and open a single
    /// window at the first stored sample after detection.
    AutoLimitCycle { tau: f64, tolerance: f64 },
}

/// Integrator parameters.
#[derive(Debug, Clone)]
pub struct IntegratorConfig {
    /// RK4 time step, in units of 1/Δ.
    pub dt: f64,
    pub t_max: f64,
    pub windows: WindowPlan,
    /// Keep every `store_stride`-th step in the trace.
    pub store_stride: usize,
    /// Re-project C onto its Hermitian part (and C̃ onto its anti-Hermitian
    /// part) every this many steps; 0 disables.
    pub resymmetrize_interval: usize,
    /// Store full covariance snapshots every this many steps.
    pub snapshot_stride: Option<usize>,
}

impl IntegratorConfig {
    pub fn new(dt: f64, t_max: f64) -> Self {
        IntegratorConfig {
            dt,
            t_max,
            windows: WindowPlan::Explicit(Vec::new()),
            store_stride: 1,
            resymmetrize_interval: 1000,
            snapshot_stride: None,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::InvalidModel(format!(
                "time step must be positive, got {}",
                self.dt
            )));
        }
        if self.store_stride == 0 {
            return Err(Error::InvalidModel("store stride must be at least 1".into()));
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// structured products
// ---------------------------------------------------------------------------

struct BlockView<'a> {
    site: usize,
    offset: usize,
    kappas: &'a [f64],
    energies: &'a [f64],
}

fn block_views(model: &AssembledModel) -> Vec<BlockView<'_>> {
    model
        .blocks()
        .iter()
        .map(|b| BlockView {
            site: b.site,
            offset: b.offset,
            kappas: b.leads.kappas(),
            energies: b.leads.energies(),
        })
        .collect()
}

fn for_each_row(out: &mut Array2<C64>, f: impl Fn(usize, &mut [C64]) + Sync) {
    let n = out.ncols();
    let rows = out.nrows();
    let data = out.as_slice_mut().expect("standard layout");
    if rows >= PAR_THRESHOLD {
        data.par_chunks_mut(n).with_min_len(8).enumerate().for_each(|(i, row)| f(i, row));
    } else {
        for (i, row) in data.chunks_mut(n).enumerate() {
            f(i, row);
        }
    }
}

#[inline]
fn axpy(dst: &mut [C64], c: C64, src: &[C64]) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d += c * *s;
    }
}

/// `out += coeff · H(t) · m`, exploiting the arrowhead structure of H.
fn acc_h_mul_left(
    out: &mut Array2<C64>,
    coeff: C64,
    hs: &Array2<C64>,
    model: &AssembledModel,
    m: &Array2<C64>,
) {
    let n = model.dim();
    let l = model.system_modes();
    let blocks = block_views(model);
    let md = m.as_slice().expect("standard layout");
    for_each_row(out, |i, row| {
        if i < l {
            for j in 0..l {
                let c = coeff * hs[[i, j]];
                if c != C64::ZERO {
                    axpy(row, c, &md[j * n..(j + 1) * n]);
                }
            }
            for b in &blocks {
                if b.site == i {
                    for (k, &kappa) in b.kappas.iter().enumerate() {
                        let idx = b.offset + k;
                        axpy(row, coeff * kappa, &md[idx * n..(idx + 1) * n]);
                    }
                }
            }
        } else {
            let b = blocks
                .iter()
                .find(|b| i >= b.offset && i < b.offset + b.kappas.len())
                .expect("lead row belongs to a block");
            let k = i - b.offset;
            axpy(row, coeff * b.energies[k], &md[i * n..(i + 1) * n]);
            axpy(row, coeff * b.kappas[k], &md[b.site * n..(b.site + 1) * n]);
        }
    });
}

/// `out += coeff · m · H(t)`.
fn acc_h_mul_right(
    out: &mut Array2<C64>,
    coeff: C64,
    hs: &Array2<C64>,
    model: &AssembledModel,
    m: &Array2<C64>,
) {
    let n = model.dim();
    let l = model.system_modes();
    let blocks = block_views(model);
    let md = m.as_slice().expect("standard layout");
    for_each_row(out, |r, row| {
        let mrow = &md[r * n..(r + 1) * n];
        for i in 0..l {
            let c = coeff * mrow[i];
            if c == C64::ZERO {
                continue;
            }
            for j in 0..l {
                row[j] += c * hs[[i, j]];
            }
            for b in &blocks {
                if b.site == i {
                    for (k, &kappa) in b.kappas.iter().enumerate() {
                        row[b.offset + k] += c * kappa;
                    }
                }
            }
        }
        for b in &blocks {
            let mut acc = C64::ZERO;
            for (k, &kappa) in b.kappas.iter().enumerate() {
                let v = mrow[b.offset + k];
                acc += v * kappa;
                row[b.offset + k] += coeff * v * b.energies[k];
            }
            row[b.site] += coeff * acc;
        }
    });
}

/// `out −= ½(γ m + m γ)`, plus the injection diagonal when requested.
fn acc_damping(out: &mut Array2<C64>, model: &AssembledModel, m: &Array2<C64>, inject: bool) {
    let n = model.dim();
    let gamma = model.gamma();
    let injection = model.injection();
    let md = m.as_slice().expect("standard layout");
    for_each_row(out, |i, row| {
        let gi = gamma[i];
        let mrow = &md[i * n..(i + 1) * n];
        for ((o, &v), &gj) in row.iter_mut().zip(mrow).zip(gamma) {
            *o -= 0.5 * (gi + gj) * v;
        }
        if inject {
            row[i] += injection[i];
        }
    });
}

/// `out += −½(C G + G C) + C G C` for the rank-two counting matrix of
/// reservoir ν. This is the noise source `−½[C G (1−C) + (1−C) G C]`.
fn acc_noise_source(out: &mut Array2<C64>, model: &AssembledModel, nu: usize, c: &Array2<C64>) {
    let n = model.dim();
    let block = &model.blocks()[nu];
    let p = block.site;
    let offset = block.offset;
    let kappas = block.leads.kappas();
    let nk = kappas.len();
    let cd = c.as_slice().expect("standard layout");

    // With G = e_p gᵀ − g e_pᵀ (g carrying the κ's on the block):
    // a = C e_p, e = C g, b = gᵀ C, d = e_pᵀ C.
    let mut a = vec![C64::ZERO; n];
    let mut e = vec![C64::ZERO; n];
    for i in 0..n {
        let row = &cd[i * n..(i + 1) * n];
        a[i] = row[p];
        let mut acc = C64::ZERO;
        for (k, &kappa) in kappas.iter().enumerate() {
            acc += row[offset + k] * kappa;
        }
        e[i] = acc;
    }
    let mut b = vec![C64::ZERO; n];
    for (k, &kappa) in kappas.iter().enumerate() {
        let row = &cd[(offset + k) * n..(offset + k + 1) * n];
        for (bj, &v) in b.iter_mut().zip(row) {
            *bj += kappa * v;
        }
    }
    let d = cd[p * n..(p + 1) * n].to_vec();

    for_each_row(out, |i, row| {
        let ai = a[i];
        let ei = e[i];
        // C G C = a⊗b − e⊗d
        for ((o, &bj), &dj) in row.iter_mut().zip(&b).zip(&d) {
            *o += ai * bj - ei * dj;
        }
        // −½ C G = −½ (a gᵀ − e e_pᵀ)
        for (k, &kappa) in kappas.iter().enumerate() {
            row[offset + k] -= 0.5 * ai * kappa;
        }
        row[p] += 0.5 * ei;
        // −½ G C = −½ (e_p⊗b − g⊗d)
        if i == p {
            for (o, &bj) in row.iter_mut().zip(&b) {
                *o -= 0.5 * bj;
            }
        }
        if i >= offset && i < offset + nk {
            let kappa = kappas[i - offset];
            for (o, &dj) in row.iter_mut().zip(&d) {
                *o += 0.5 * kappa * dj;
            }
        }
    });
}

fn rhs_covariance_into(
    out: &mut Array2<C64>,
    model: &AssembledModel,
    hs: &Array2<C64>,
    c: &Array2<C64>,
) {
    out.fill(C64::ZERO);
    acc_h_mul_left(out, C64::new(0.0, -1.0), hs, model, c);
    acc_h_mul_right(out, C64::new(0.0, 1.0), hs, model, c);
    acc_damping(out, model, c, true);
}

fn rhs_auxiliary_into(
    out: &mut Array2<C64>,
    model: &AssembledModel,
    hs: &Array2<C64>,
    nu: usize,
    c: &Array2<C64>,
    ct: &Array2<C64>,
) {
    out.fill(C64::ZERO);
    acc_h_mul_left(out, C64::new(0.0, -1.0), hs, model, ct);
    acc_h_mul_right(out, C64::new(0.0, 1.0), hs, model, ct);
    acc_damping(out, model, ct, false);
    acc_noise_source(out, model, nu, c);
}

/// Right-hand side of the Lyapunov equation, `−(W C + C W†) + F`.
pub fn lyapunov_rhs(model: &AssembledModel, t: f64, c: &Array2<C64>) -> Result<Array2<C64>> {
    let n = model.dim();
    if c.nrows() != n || c.ncols() != n {
        return Err(Error::DimensionMismatch { expected: n, got: c.nrows() });
    }
    let hs = model.system_block(t);
    let mut out = Array2::zeros((n, n));
    rhs_covariance_into(&mut out, model, &hs, c);
    Ok(out)
}

/// Right-hand side of the modified Lyapunov equation for the auxiliary
/// matrix of reservoir ν, given the co-evolved C at the same time.
pub fn auxiliary_rhs(
    model: &AssembledModel,
    nu: usize,
    t: f64,
    c: &Array2<C64>,
    ct: &Array2<C64>,
) -> Result<Array2<C64>> {
    let n = model.dim();
    model.block(nu)?;
    for m in [c, ct] {
        if m.nrows() != n || m.ncols() != n {
            return Err(Error::DimensionMismatch { expected: n, got: m.nrows() });
        }
    }
    let hs = model.system_block(t);
    let mut out = Array2::zeros((n, n));
    rhs_auxiliary_into(&mut out, model, &hs, nu, c, ct);
    Ok(out)
}

// ---------------------------------------------------------------------------
// RK4
// ---------------------------------------------------------------------------

/// One classical fourth-order Runge-Kutta step for a matrix-valued ODE.
///
/// Fails if the advanced state contains non-finite entries.
pub fn rk4_step<F>(mut rhs: F, t: f64, dt: f64, state: &Array2<C64>) -> Result<Array2<C64>>
where
    F: FnMut(f64, &Array2<C64>) -> Array2<C64>,
{
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::InvalidModel(format!("time step must be positive, got {dt}")));
    }
    let half = C64::new(dt / 2.0, 0.0);
    let full = C64::new(dt, 0.0);
    let k1 = rhs(t, state);
    let k2 = rhs(t + dt / 2.0, &(state + &(&k1 * half)));
    let k3 = rhs(t + dt / 2.0, &(state + &(&k2 * half)));
    let k4 = rhs(t + dt, &(state + &(&k3 * full)));
    let mut next = state.clone();
    let w = dt / 6.0;
    ndarray::Zip::from(&mut next).and(&k1).and(&k2).and(&k3).and(&k4).for_each(
        |n, &a, &b, &c, &d| {
            *n += w * (a + 2.0 * b + 2.0 * c + d);
        },
    );
    if next.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NonFinite { t: t + dt });
    }
    Ok(next)
}

struct MatBuffers {
    k: Array2<C64>,
    tmp: Array2<C64>,
    acc: Array2<C64>,
}

impl MatBuffers {
    fn new(n: usize) -> Self {
        MatBuffers {
            k: Array2::zeros((n, n)),
            tmp: Array2::zeros((n, n)),
            acc: Array2::zeros((n, n)),
        }
    }
}

fn lincomb_into(dst: &mut Array2<C64>, y: &Array2<C64>, coeff: f64, k: &Array2<C64>) {
    let d = dst.as_slice_mut().unwrap();
    let ys = y.as_slice().unwrap();
    let ks = k.as_slice().unwrap();
    for ((d, &y), &k) in d.iter_mut().zip(ys).zip(ks) {
        *d = y + coeff * k;
    }
}

fn acc_weighted(acc: &mut Array2<C64>, w: f64, k: &Array2<C64>) {
    let a = acc.as_slice_mut().unwrap();
    let ks = k.as_slice().unwrap();
    for (a, &k) in a.iter_mut().zip(ks) {
        *a += w * k;
    }
}

fn apply_acc(y: &mut Array2<C64>, dt: f64, acc: &Array2<C64>) {
    let ys = y.as_slice_mut().unwrap();
    let a = acc.as_slice().unwrap();
    for (y, &a) in ys.iter_mut().zip(a) {
        *y += dt / 6.0 * a;
    }
}

// ---------------------------------------------------------------------------
// trajectory driver
// ---------------------------------------------------------------------------

struct ActiveWindow {
    t_start: f64,
    start_index: usize,
    /// One auxiliary matrix (and buffer set) per probe.
    mats: Vec<Array2<C64>>,
    bufs: Vec<MatBuffers>,
    /// Recorded `D_ν(t, t_start)` per probe.
    noise: Vec<Vec<f64>>,
}

/// Integrate C (and any counting windows) from `initial.t` to `t_max`,
/// recording the per-probe current and noise series at the storage stride.
pub fn evolve(
    model: &AssembledModel,
    initial: CovarianceState,
    config: &IntegratorConfig,
    probes: &[usize],
) -> Result<RunTrace> {
    config.validate()?;
    let n = model.dim();
    if initial.c.nrows() != n || initial.c.ncols() != n {
        return Err(Error::DimensionMismatch { expected: n, got: initial.c.nrows() });
    }
    let counting: Vec<_> =
        probes.iter().map(|&nu| model.counting_matrix(nu)).collect::<Result<_>>()?;
    let labels: Vec<String> =
        probes.iter().map(|&nu| model.blocks()[nu].label.clone()).collect();

    let t0 = initial.t;
    let dt = config.dt;
    let steps_signed = ((config.t_max - t0) / dt).round() as i64;
    if steps_signed < 0 {
        return Err(Error::InvalidModel(format!(
            "t_max {} lies before the initial time {t0}",
            config.t_max
        )));
    }
    let steps = steps_signed as usize;
    let stride = config.store_stride;

    // Explicit window starts snapped onto the stored sampling grid.
    let mut pending: Vec<usize> = match &config.windows {
        WindowPlan::Explicit(starts) => {
            let mut snapped = Vec::with_capacity(starts.len());
            for &t1 in starts {
                if t1 < t0 - 1e-9 || t1 > t0 + steps as f64 * dt + 1e-9 {
                    return Err(Error::WindowOutOfRange(t1));
                }
                let step = ((t1 - t0) / (dt * stride as f64)).round() as usize * stride;
                snapped.push(step.min(steps));
            }
            snapped.sort_unstable();
            snapped.dedup();
            snapped
        }
        WindowPlan::AutoLimitCycle { .. } => Vec::new(),
    };

    let mut c = initial.c;
    let mut cbuf = MatBuffers::new(n);
    let mut windows: Vec<ActiveWindow> = Vec::new();

    let samples = steps / stride + 1;
    let mut times = Vec::with_capacity(samples);
    let mut currents: Vec<Vec<f64>> = vec![Vec::with_capacity(samples); probes.len()];
    let mut snapshots = Vec::new();
    let mut detection: Option<LimitCycleDetection> = None;
    let mut lc_cursor = 0usize;
    let mut max_c_drift: f64 = 0.0;
    let mut max_aux_drift: f64 = 0.0;

    let stage_offsets = [0.0, 0.5, 0.5, 1.0];
    let stage_weights = [1.0, 2.0, 2.0, 1.0];

    for step in 0..=steps {
        let t = t0 + step as f64 * dt;

        while pending.first().is_some_and(|&s| s == step) {
            pending.remove(0);
            windows.push(ActiveWindow {
                t_start: t,
                start_index: times.len(),
                mats: vec![Array2::zeros((n, n)); probes.len()],
                bufs: (0..probes.len()).map(|_| MatBuffers::new(n)).collect(),
                noise: vec![Vec::new(); probes.len()],
            });
        }

        if step % stride == 0 {
            times.push(t);
            for (series, g) in currents.iter_mut().zip(&counting) {
                series.push(observables::instantaneous_current(g, &c)?);
            }
            for w in &mut windows {
                for (probe, g) in counting.iter().enumerate() {
                    let d = observables::instantaneous_noise(g, &w.mats[probe])?;
                    w.noise[probe].push(d);
                }
            }
            if let Some(ss) = config.snapshot_stride {
                if step % ss == 0 {
                    snapshots.push((t, c.clone()));
                }
            }
            if let WindowPlan::AutoLimitCycle { tau, tolerance } = config.windows {
                if detection.is_none() {
                    if let Some(found) = observables::detect_limit_cycle_scan(
                        &times,
                        &currents,
                        tau,
                        tolerance,
                        &mut lc_cursor,
                    ) {
                        detection = Some(found);
                        let next = (step / stride + 1) * stride;
                        if next <= steps {
                            pending.push(next);
                        }
                    }
                }
            }
        }

        if step == steps {
            break;
        }

        // One joint RK4 step; the C stages feed the window source terms.
        cbuf.acc.fill(C64::ZERO);
        for w in &mut windows {
            for b in &mut w.bufs {
                b.acc.fill(C64::ZERO);
            }
        }
        for (stage, (&a, &wgt)) in stage_offsets.iter().zip(&stage_weights).enumerate() {
            let ts = t + a * dt;
            let hs = model.system_block(ts);
            if stage == 0 {
                cbuf.tmp.assign(&c);
                for w in &mut windows {
                    for (mat, b) in w.mats.iter().zip(&mut w.bufs) {
                        b.tmp.assign(mat);
                    }
                }
            } else {
                let coeff = a * dt;
                lincomb_into(&mut cbuf.tmp, &c, coeff, &cbuf.k);
                for w in &mut windows {
                    for (mat, b) in w.mats.iter().zip(&mut w.bufs) {
                        lincomb_into(&mut b.tmp, mat, coeff, &b.k);
                    }
                }
            }
            // tmp holds the stage states; k is free to overwrite now.
            for w in &mut windows {
                for (probe, b) in w.bufs.iter_mut().enumerate() {
                    rhs_auxiliary_into(&mut b.k, model, &hs, probes[probe], &cbuf.tmp, &b.tmp);
                    acc_weighted(&mut b.acc, wgt, &b.k);
                }
            }
            rhs_covariance_into(&mut cbuf.k, model, &hs, &cbuf.tmp);
            acc_weighted(&mut cbuf.acc, wgt, &cbuf.k);
        }
        apply_acc(&mut c, dt, &cbuf.acc);
        for w in &mut windows {
            for (mat, b) in w.mats.iter_mut().zip(&w.bufs) {
                apply_acc(mat, dt, &b.acc);
            }
        }

        let next_step = step + 1;
        if config.resymmetrize_interval > 0 && next_step % config.resymmetrize_interval == 0 {
            if c.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                return Err(Error::NonFinite { t: t + dt });
            }
            let scale = c.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1.0);
            let drift = util::hermiticity_drift(&c) / scale;
            max_c_drift = max_c_drift.max(drift);
            if drift > 1e-8 {
                log::warn!("hermiticity drift {drift:.3e} at t = {:.4}", t + dt);
            } else {
                log::debug!("re-symmetrizing at t = {:.4}, drift {drift:.3e}", t + dt);
            }
            util::symmetrize_hermitian(&mut c);
            for w in &mut windows {
                for mat in &mut w.mats {
                    let scale = mat.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1.0);
                    let drift = util::antihermiticity_drift(mat) / scale;
                    max_aux_drift = max_aux_drift.max(drift);
                    util::symmetrize_antihermitian(mat);
                }
            }
        }
    }

    // Non-finite entries anywhere poison the recorded series.
    if currents.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite { t: t0 + steps as f64 * dt });
    }

    if let WindowPlan::AutoLimitCycle { tau, .. } = config.windows {
        if detection.is_none() {
            let best = observables::best_residual(&times, &currents, tau);
            return Err(Error::NotConverged {
                residual: best.map_or(f64::INFINITY, |d| d.residual),
                t1: best.map_or(t0, |d| d.t1),
            });
        }
    }

    let noise_windows = windows
        .into_iter()
        .map(|w| NoiseWindow { t_start: w.t_start, start_index: w.start_index, noise: w.noise })
        .collect();

    Ok(RunTrace {
        times,
        probe_labels: labels,
        currents,
        windows: noise_windows,
        detected_limit_cycle: detection,
        snapshots,
        model_hash: model.hash().to_string(),
        final_state: CovarianceState { c, t: t0 + steps as f64 * dt },
        max_hermiticity_drift: max_c_drift,
        max_antihermiticity_drift: max_aux_drift,
    })
}

// ---------------------------------------------------------------------------
// checkpoints
// ---------------------------------------------------------------------------

/// Versioned binary dump of `(t, C)` plus the model hash, for resuming long
/// runs.
///
/// Layout (all little-endian): the 8-byte magic `b"MFCSCKPT"`, a `u16`
/// format version (currently 1), 64 bytes of lowercase hex model hash, `t`
/// as an `f64`, the dimension `n` as a `u64`, then the `n²` matrix entries
/// in row-major order as `(re, im)` pairs of `f64`.
pub mod checkpoint {
    use std::io::{Read, Write};
    use std::path::Path;

    use ndarray::Array2;
    use num_complex::Complex64 as C64;

    use super::CovarianceState;
    use crate::error::{Error, Result};

    const MAGIC: &[u8; 8] = b"MFCSCKPT";
    pub const VERSION: u16 = 1;

    pub fn save(path: &Path, model_hash: &str, state: &CovarianceState) -> Result<()> {
        if model_hash.len() != 64 {
            return Err(Error::Checkpoint(format!(
                "model hash must be 64 hex characters, got {}",
                model_hash.len()
            )));
        }
        let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
        w.write_all(MAGIC)?;
        w.write_all(&VERSION.to_le_bytes())?;
        w.write_all(model_hash.as_bytes())?;
        w.write_all(&state.t.to_le_bytes())?;
        w.write_all(&(state.c.nrows() as u64).to_le_bytes())?;
        for z in state.c.iter() {
            w.write_all(&z.re.to_le_bytes())?;
            w.write_all(&z.im.to_le_bytes())?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<(String, CovarianceState)> {
        let mut r = std::io::BufReader::new(std::fs::File::open(path)?);
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Checkpoint("bad magic".into()));
        }
        let mut v = [0u8; 2];
        r.read_exact(&mut v)?;
        let version = u16::from_le_bytes(v);
        if version != VERSION {
            return Err(Error::Checkpoint(format!("unsupported version {version}")));
        }
        let mut hash = [0u8; 64];
        r.read_exact(&mut hash)?;
        let hash = String::from_utf8(hash.to_vec())
            .map_err(|_| Error::Checkpoint("non-utf8 model hash".into()))?;
        let mut f8 = [0u8; 8];
        r.read_exact(&mut f8)?;
        let t = f64::from_le_bytes(f8);
        r.read_exact(&mut f8)?;
        let n = u64::from_le_bytes(f8) as usize;
        let mut data = Vec::with_capacity(n * n);
        for _ in 0..n * n {
            r.read_exact(&mut f8)?;
            let re = f64::from_le_bytes(f8);
            r.read_exact(&mut f8)?;
            let im = f64::from_le_bytes(f8);
            data.push(C64::new(re, im));
        }
        let c = Array2::from_shape_vec((n, n), data)
            .map_err(|e| Error::Checkpoint(e.to_string()))?;
        Ok((hash, CovarianceState { c, t }))
    }
}
