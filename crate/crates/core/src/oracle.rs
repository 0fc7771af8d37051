//! Exact brute-force validation path.
//!
//! Tiny instances are represented on the full 2^m-dimensional Fock space
//! (Jordan-Wigner ordering: system modes first, then each reservoir's lead
//! modes in declaration order; mode j occupies bit j of the basis index).
//! The many-body density matrix evolves under the counting-field-tilted
//! Lindblad generator, whose trace yields the characteristic function of
//! transferred charge. Cumulants follow from χ-derivatives at zero, the full
//! distribution P(n) from Fourier inversion over a χ grid, and a second,
//! independent route co-evolves a density-matrix-level auxiliary variable
//! σ(t, t₀) whose overlap with the coupling operator gives the noise
//! directly.

use ndarray::Array2;
use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::assemble::AssembledModel;
use crate::dynamics::rk4_step;
use crate::error::{Error, Result};
use crate::util;

/// Hard cap on the number of modes representable on the Fock space.
pub const FOCK_MODE_CAP: usize = 10;

/// Dense-superoperator cap: 4^m × 4^m matrices are only materialized for
/// m ≤ 5 (16 MB); larger instances use the matrix-free generator action.
pub const SUPEROPERATOR_MODE_CAP: usize = 5;

/// A model lifted onto its full Fock space.
#[derive(Debug, Clone)]
pub struct FockSpaceModel {
    model: AssembledModel,
    dim: usize,
}

/// Tilted many-body state ρ(χ, t, t₀); its trace is the characteristic
/// function G(χ, t, t₀).
#[derive(Debug, Clone)]
pub struct TiltedState {
    pub rho: Array2<C64>,
    pub chi: f64,
    pub t: f64,
    pub t0: f64,
}

impl TiltedState {
    pub fn characteristic_function(&self) -> C64 {
        self.rho.diag().iter().sum()
    }
}

#[inline]
fn sign_below(state: usize, mode: usize) -> f64 {
    if (state & ((1 << mode) - 1)).count_ones() % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

impl FockSpaceModel {
    pub fn new(model: &AssembledModel) -> Result<Self> {
        let m = model.dim();
        if m > FOCK_MODE_CAP {
            return Err(Error::FockTooLarge { modes: m, cap: FOCK_MODE_CAP });
        }
        Ok(FockSpaceModel { model: model.clone(), dim: 1 << m })
    }

    /// Number of fermionic modes m = L + Σ N_α.
    pub fn modes(&self) -> usize {
        self.model.dim()
    }

    /// Fock-space dimension 2^m.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn model(&self) -> &AssembledModel {
        &self.model
    }

    /// Dense matrix of the annihilation operator b_j (with Jordan-Wigner
    /// string).
    pub fn lowering(&self, mode: usize) -> Array2<C64> {
        let mut b = Array2::zeros((self.dim, self.dim));
        for u in 0..self.dim {
            if u & (1 << mode) != 0 {
                b[[u ^ (1 << mode), u]] = C64::new(sign_below(u, mode), 0.0);
            }
        }
        b
    }

    /// Single-particle matrix with the counting phases of reservoir ν on its
    /// coupling row/column.
    fn tilted_single_particle(&self, t: f64, chi: f64, nu: usize) -> Result<Array2<C64>> {
        let mut h = self.model.dense_h(t);
        if chi != 0.0 {
            let block = self.model.block(nu)?;
            let phase = C64::from_polar(1.0, -chi / 2.0);
            for k in 0..block.len() {
                let idx = block.offset + k;
                h[[block.site, idx]] *= phase;
                h[[idx, block.site]] *= phase.conj();
            }
        } else {
            self.model.block(nu)?;
        }
        Ok(h)
    }

    /// Many-body tilted Hamiltonian `Σ h^χ_{ij} b_i† b_j` assembled directly
    /// in the occupation basis.
    pub fn many_body_hamiltonian(&self, t: f64, chi: f64, nu: usize) -> Result<Array2<C64>> {
        let h = self.tilted_single_particle(t, chi, nu)?;
        let m = self.modes();
        let mut out = Array2::zeros((self.dim, self.dim));
        for u in 0..self.dim {
            for j in 0..m {
                if u & (1 << j) == 0 {
                    continue;
                }
                let v = u ^ (1 << j);
                let s1 = sign_below(u, j);
                for i in 0..m {
                    let hij = h[[i, j]];
                    if hij == C64::ZERO {
                        continue;
                    }
                    if v & (1 << i) != 0 {
                        continue;
                    }
                    let w = v | (1 << i);
                    let s2 = sign_below(v, i);
                    out[[w, u]] += hij * (s1 * s2);
                }
            }
        }
        Ok(out)
    }

    /// The coupling operator `A_ν = Σ_k κ_k (b_p† b_k − b_k† b_p)` whose
    /// expectation values give the current and noise.
    pub fn coupling_operator(&self, nu: usize) -> Result<Array2<C64>> {
        let block = self.model.block(nu)?;
        let m = self.modes();
        let mut a = Array2::<C64>::zeros((m, m));
        for (k, &kappa) in block.leads.kappas().iter().enumerate() {
            a[[block.site, block.offset + k]] = C64::new(kappa, 0.0);
            a[[block.offset + k, block.site]] = C64::new(-kappa, 0.0);
        }
        let mut out = Array2::zeros((self.dim, self.dim));
        for u in 0..self.dim {
            for j in 0..m {
                if u & (1 << j) == 0 {
                    continue;
                }
                let v = u ^ (1 << j);
                let s1 = sign_below(u, j);
                for i in 0..m {
                    let aij = a[[i, j]];
                    if aij == C64::ZERO || v & (1 << i) != 0 {
                        continue;
                    }
                    out[[v | (1 << i), u]] += aij * (s1 * sign_below(v, i));
                }
            }
        }
        Ok(out)
    }

    /// Apply the tilted generator:
    /// `−i(H_χ ρ − ρ H_{−χ}) + Σ_k γ_k(1−f_k) D[a_k] + γ_k f_k D[a_k†]`.
    pub fn apply_liouvillian(
        &self,
        t: f64,
        chi: f64,
        nu: usize,
        rho: &Array2<C64>,
    ) -> Result<Array2<C64>> {
        let hp = self.many_body_hamiltonian(t, chi, nu)?;
        let hm = if chi == 0.0 { hp.clone() } else { self.many_body_hamiltonian(t, -chi, nu)? };
        let mut out = (hp.dot(rho) - rho.dot(&hm)).mapv(|z| C64::new(0.0, -1.0) * z);
        self.add_dissipators(rho, &mut out);
        Ok(out)
    }

    fn add_dissipators(&self, rho: &Array2<C64>, out: &mut Array2<C64>) {
        let d = self.dim;
        for b in self.model.blocks() {
            for (k, (&gamma, &f)) in
                b.leads.gammas().iter().zip(b.leads.occupations()).enumerate()
            {
                let q = b.offset + k;
                let bit = 1usize << q;
                let loss = gamma * (1.0 - f);
                let gain = gamma * f;
                for u in 0..d {
                    let nu_ = u & bit != 0;
                    for v in 0..d {
                        let nv = v & bit != 0;
                        // a ρ a† : shift from the occupied pair above
                        if loss != 0.0 {
                            if !nu_ && !nv {
                                let su = sign_below(u | bit, q);
                                let sv = sign_below(v | bit, q);
                                out[[u, v]] += loss * su * sv * rho[[u | bit, v | bit]];
                            }
                            let occ = (nu_ as u32 + nv as u32) as f64;
                            out[[u, v]] -= loss * 0.5 * occ * rho[[u, v]];
                        }
                        // a† ρ a : shift from the empty pair below
                        if gain != 0.0 {
                            if nu_ && nv {
                                let su = sign_below(u ^ bit, q);
                                let sv = sign_below(v ^ bit, q);
                                out[[u, v]] += gain * su * sv * rho[[u ^ bit, v ^ bit]];
                            }
                            let holes = (2 - nu_ as u32 - nv as u32) as f64;
                            out[[u, v]] -= gain * 0.5 * holes * rho[[u, v]];
                        }
                    }
                }
            }
        }
    }

    /// Dense superoperator matrix acting on `vec(ρ)` with `vec` index
    /// `s·2^m + r` for the entry `ρ[s, r]`.
    pub fn superoperator(&self, t: f64, chi: f64, nu: usize) -> Result<Array2<C64>> {
        if self.modes() > SUPEROPERATOR_MODE_CAP {
            return Err(Error::FockTooLarge {
                modes: self.modes(),
                cap: SUPEROPERATOR_MODE_CAP,
            });
        }
        let d = self.dim;
        let mut sup = Array2::zeros((d * d, d * d));
        let mut basis = Array2::zeros((d, d));
        for u in 0..d {
            for v in 0..d {
                basis[[u, v]] = C64::new(1.0, 0.0);
                let image = self.apply_liouvillian(t, chi, nu, &basis)?;
                basis[[u, v]] = C64::ZERO;
                for s in 0..d {
                    for r in 0..d {
                        let z = image[[s, r]];
                        if z != C64::ZERO {
                            sup[[s * d + r, u * d + v]] = z;
                        }
                    }
                }
            }
        }
        Ok(sup)
    }

    /// Vacuum projector |0⟩⟨0| (matches an empty initial covariance).
    pub fn vacuum(&self) -> Array2<C64> {
        let mut rho = Array2::zeros((self.dim, self.dim));
        rho[[0, 0]] = C64::new(1.0, 0.0);
        rho
    }

    /// Product state with the given per-mode occupations (diagonal in the
    /// occupation basis).
    pub fn product_state(&self, occupations: &[f64]) -> Result<Array2<C64>> {
        if occupations.len() != self.modes() {
            return Err(Error::DimensionMismatch {
                expected: self.modes(),
                got: occupations.len(),
            });
        }
        if occupations.iter().any(|f| !(0.0..=1.0).contains(f)) {
            return Err(Error::InvalidModel("occupations must lie in [0, 1]".into()));
        }
        let mut rho = Array2::zeros((self.dim, self.dim));
        for u in 0..self.dim {
            let mut p = 1.0;
            for (j, &f) in occupations.iter().enumerate() {
                p *= if u & (1 << j) != 0 { f } else { 1.0 - f };
            }
            rho[[u, u]] = C64::new(p, 0.0);
        }
        Ok(rho)
    }

    /// Single-particle covariance `C_ij = Tr[b_j† b_i ρ]` extracted from a
    /// many-body state.
    pub fn covariance_from_density(&self, rho: &Array2<C64>) -> Array2<C64> {
        let m = self.modes();
        let mut c = Array2::zeros((m, m));
        for i in 0..m {
            for j in 0..m {
                // Tr[b_j† b_i ρ] = Σ_u coeff(u) ρ[u, target(u)]
                let mut acc = C64::ZERO;
                for u in 0..self.dim {
                    if u & (1 << i) == 0 {
                        continue;
                    }
                    let v = u ^ (1 << i);
                    if v & (1 << j) != 0 {
                        continue;
                    }
                    let w = v | (1 << j);
                    let coeff = sign_below(u, i) * sign_below(v, j);
                    acc += coeff * rho[[u, w]];
                }
                c[[i, j]] = acc;
            }
        }
        c
    }

    /// Positivity and trace checks for an (untilted) density matrix.
    pub fn check_density(&self, rho: &Array2<C64>) -> (f64, f64) {
        let trace_err = (rho.diag().iter().sum::<C64>() - C64::new(1.0, 0.0)).norm();
        let (min_eig, _) = util::hermitian_eigen_range(rho);
        (trace_err, min_eig)
    }
}

// ---------------------------------------------------------------------------
// evolutions
// ---------------------------------------------------------------------------

/// Evolve a tilted state from `t0` to `t_end`, invoking `on_sample` at every
/// step (including both endpoints).
pub fn evolve_tilted<F>(
    fock: &FockSpaceModel,
    rho0: &Array2<C64>,
    nu: usize,
    chi: f64,
    t0: f64,
    t_end: f64,
    dt: f64,
    mut on_sample: F,
) -> Result<TiltedState>
where
    F: FnMut(f64, &Array2<C64>),
{
    let steps = ((t_end - t0) / dt).round() as usize;
    let mut rho = rho0.clone();
    on_sample(t0, &rho);
    for step in 0..steps {
        let t = t0 + step as f64 * dt;
        rho = rk4_step(
            |ts, state| {
                fock.apply_liouvillian(ts, chi, nu, state)
                    .expect("liouvillian application on validated model")
            },
            t,
            dt,
            &rho,
        )?;
        on_sample(t0 + (step + 1) as f64 * dt, &rho);
    }
    Ok(TiltedState { rho, chi, t: t0 + steps as f64 * dt, t0 })
}

/// First two cumulants from characteristic-function samples on the
/// symmetric χ grid `{0, ±h, ±2h}`.
#[derive(Debug, Clone, Copy)]
pub struct ChiSamples {
    pub step: f64,
    pub g0: C64,
    pub g_plus: C64,
    pub g_minus: C64,
    pub g_plus2: C64,
    pub g_minus2: C64,
}

/// Cumulants with the estimated finite-difference truncation error.
#[derive(Debug, Clone, Copy)]
pub struct CumulantEstimate {
    pub mean: f64,
    pub variance: f64,
    pub mean_error: f64,
    pub variance_error: f64,
}

/// `⟨N⟩ = −i ∂_χ ln G|₀` and `var N = −∂²_χ ln G|₀` via central differences
/// with one Richardson level (equivalent to 5-point stencils). The error
/// fields report the difference between the extrapolated and plain central
/// estimates.
pub fn cumulants_from_cf(samples: &ChiSamples) -> Result<CumulantEstimate> {
    let g0_err = (samples.g0 - C64::new(1.0, 0.0)).norm();
    if g0_err > 1e-8 {
        return Err(Error::NotNormalized(g0_err));
    }
    let h = samples.step;
    let f0 = samples.g0.ln();
    let fp = samples.g_plus.ln();
    let fm = samples.g_minus.ln();
    let fp2 = samples.g_plus2.ln();
    let fm2 = samples.g_minus2.ln();

    let d1_h = (fp - fm) / (2.0 * h);
    let d1_2h = (fp2 - fm2) / (4.0 * h);
    let d1 = (4.0 * d1_h - d1_2h) / 3.0;
    let d2_h = (fp - 2.0 * f0 + fm) / (h * h);
    let d2_2h = (fp2 - 2.0 * f0 + fm2) / (4.0 * h * h);
    let d2 = (4.0 * d2_h - d2_2h) / 3.0;

    Ok(CumulantEstimate {
        mean: (C64::new(0.0, -1.0) * d1).re,
        variance: (-d2).re,
        mean_error: (d1 - d1_h).norm(),
        variance_error: (d2 - d2_h).norm(),
    })
}

/// Time series of the first two cumulants along a counting window.
#[derive(Debug, Clone)]
pub struct CumulantTrace {
    pub times: Vec<f64>,
    pub mean: Vec<f64>,
    pub variance: Vec<f64>,
}

/// Evolve the five tilted copies needed for the χ-grid cumulant path and
/// record `⟨N⟩(t)` and `var N(t)` at every step.
pub fn cf_cumulant_path(
    fock: &FockSpaceModel,
    rho0: &Array2<C64>,
    nu: usize,
    chi_step: f64,
    t0: f64,
    t_end: f64,
    dt: f64,
) -> Result<CumulantTrace> {
    let chis = [0.0, chi_step, -chi_step, 2.0 * chi_step, -2.0 * chi_step];
    let steps = ((t_end - t0) / dt).round() as usize;
    let mut rhos: Vec<Array2<C64>> = vec![rho0.clone(); 5];
    let mut trace = CumulantTrace {
        times: Vec::with_capacity(steps + 1),
        mean: Vec::with_capacity(steps + 1),
        variance: Vec::with_capacity(steps + 1),
    };
    let mut record = |t: f64, rhos: &[Array2<C64>]| -> Result<()> {
        let g: Vec<C64> = rhos.iter().map(|r| r.diag().iter().sum()).collect();
        let est = cumulants_from_cf(&ChiSamples {
            step: chi_step,
            g0: g[0],
            g_plus: g[1],
            g_minus: g[2],
            g_plus2: g[3],
            g_minus2: g[4],
        })?;
        trace.times.push(t);
        trace.mean.push(est.mean);
        trace.variance.push(est.variance);
        Ok(())
    };
    record(t0, &rhos)?;
    for step in 0..steps {
        let t = t0 + step as f64 * dt;
        let advanced: Vec<Array2<C64>> = rhos
            .par_iter()
            .zip(chis.par_iter())
            .map(|(rho, &chi)| {
                rk4_step(
                    |ts, state| {
                        fock.apply_liouvillian(ts, chi, nu, state)
                            .expect("liouvillian application on validated model")
                    },
                    t,
                    dt,
                    rho,
                )
            })
            .collect::<Result<_>>()?;
        rhos = advanced;
        record(t0 + (step + 1) as f64 * dt, &rhos)?;
    }
    Ok(trace)
}

/// Fourth-order central time derivative of a uniformly sampled series
/// (second-order one-sided at the edges).
pub fn differentiate_series(times: &[f64], y: &[f64]) -> Vec<f64> {
    let n = y.len();
    if n < 2 {
        return vec![0.0; n];
    }
    let h = times[1] - times[0];
    let mut out = vec![0.0; n];
    for i in 0..n {
        out[i] = if i >= 2 && i + 2 < n {
            (-y[i + 2] + 8.0 * y[i + 1] - 8.0 * y[i - 1] + y[i - 2]) / (12.0 * h)
        } else if i == 0 {
            (-3.0 * y[0] + 4.0 * y[1] - y[2.min(n - 1)]) / (2.0 * h)
        } else if i + 1 == n {
            (3.0 * y[n - 1] - 4.0 * y[n - 2] + y[n.saturating_sub(3)]) / (2.0 * h)
        } else {
            (y[i + 1] - y[i - 1]) / (2.0 * h)
        };
    }
    out
}

/// Current and noise series from the density-matrix-level auxiliary
/// variable σ(t, t₀).
#[derive(Debug, Clone)]
pub struct SigmaTrace {
    pub times: Vec<f64>,
    pub current: Vec<f64>,
    pub noise: Vec<f64>,
}

/// Second, independent oracle route: co-evolve ρ(t) and σ(t, t₀) with
/// σ(t₀, t₀) = 0, extracting `J = i Tr[A ρ]` and `D = 2 Tr[A σ]`.
///
/// The second χ-derivative of the generator contributes `−Tr[L'' ρ]` to the
/// noise, but that term is a commutator trace and vanishes identically, so
/// only σ enters.
pub fn sigma_cumulant_path(
    fock: &FockSpaceModel,
    rho0: &Array2<C64>,
    nu: usize,
    t0: f64,
    t_end: f64,
    dt: f64,
) -> Result<SigmaTrace> {
    let a_op = fock.coupling_operator(nu)?;
    let steps = ((t_end - t0) / dt).round() as usize;
    let d = fock.dim();
    let mut rho = rho0.clone();
    let mut sigma = Array2::<C64>::zeros((d, d));
    let mut trace = SigmaTrace {
        times: Vec::with_capacity(steps + 1),
        current: Vec::with_capacity(steps + 1),
        noise: Vec::with_capacity(steps + 1),
    };

    let observables = |rho: &Array2<C64>, sigma: &Array2<C64>| -> (f64, f64) {
        let j = (C64::new(0.0, 1.0) * trace_product(&a_op, rho)).re;
        let dnoise = (2.0 * trace_product(&a_op, sigma)).re;
        (j, dnoise)
    };

    // dσ/dt = L σ − ½{A, ρ} + ρ Tr[A ρ]
    let sigma_rhs = |t: f64,
                     sigma: &Array2<C64>,
                     rho: &Array2<C64>|
     -> Result<Array2<C64>> {
        let mut out = fock.apply_liouvillian(t, 0.0, nu, sigma)?;
        let anti = a_op.dot(rho) + rho.dot(&a_op);
        let tr_a_rho = trace_product(&a_op, rho);
        out.zip_mut_with(&anti, |o, &a| *o -= 0.5 * a);
        out.zip_mut_with(rho, |o, &r| *o += tr_a_rho * r);
        Ok(out)
    };

    let (j, dn) = observables(&rho, &sigma);
    trace.times.push(t0);
    trace.current.push(j);
    trace.noise.push(dn);

    for step in 0..steps {
        let t = t0 + step as f64 * dt;
        // joint RK4: the σ stages use the matching ρ stages
        let k1r = fock.apply_liouvillian(t, 0.0, nu, &rho)?;
        let k1s = sigma_rhs(t, &sigma, &rho)?;
        let half = t + dt / 2.0;
        let r2 = &rho + &k1r.mapv(|z| 0.5 * dt * z);
        let s2 = &sigma + &k1s.mapv(|z| 0.5 * dt * z);
        let k2r = fock.apply_liouvillian(half, 0.0, nu, &r2)?;
        let k2s = sigma_rhs(half, &s2, &r2)?;
        let r3 = &rho + &k2r.mapv(|z| 0.5 * dt * z);
        let s3 = &sigma + &k2s.mapv(|z| 0.5 * dt * z);
        let k3r = fock.apply_liouvillian(half, 0.0, nu, &r3)?;
        let k3s = sigma_rhs(half, &s3, &r3)?;
        let full = t + dt;
        let r4 = &rho + &k3r.mapv(|z| dt * z);
        let s4 = &sigma + &k3s.mapv(|z| dt * z);
        let k4r = fock.apply_liouvillian(full, 0.0, nu, &r4)?;
        let k4s = sigma_rhs(full, &s4, &r4)?;
        let w = dt / 6.0;
        rho.zip_mut_with(&(k1r + k2r.mapv(|z| 2.0 * z) + k3r.mapv(|z| 2.0 * z) + k4r), |a, &k| {
            *a += w * k
        });
        sigma.zip_mut_with(
            &(k1s + k2s.mapv(|z| 2.0 * z) + k3s.mapv(|z| 2.0 * z) + k4s),
            |a, &k| *a += w * k,
        );
        if rho.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite { t: full });
        }
        let (j, dn) = observables(&rho, &sigma);
        trace.times.push(full);
        trace.current.push(j);
        trace.noise.push(dn);
    }
    Ok(trace)
}

fn trace_product(a: &Array2<C64>, b: &Array2<C64>) -> C64 {
    let n = a.nrows();
    let mut acc = C64::ZERO;
    for i in 0..n {
        for k in 0..n {
            acc += a[[i, k]] * b[[k, i]];
        }
    }
    acc
}

// ---------------------------------------------------------------------------
// distribution and windowed statistics
// ---------------------------------------------------------------------------

/// Transferred-charge distribution from Fourier inversion of the CF.
#[derive(Debug, Clone)]
pub struct Distribution {
    pub charge: Vec<i64>,
    pub probability: Vec<f64>,
    pub normalization_error: f64,
    pub max_imaginary: f64,
}

impl Distribution {
    pub fn mean(&self) -> f64 {
        self.charge.iter().zip(&self.probability).map(|(&n, &p)| n as f64 * p).sum()
    }

    pub fn variance(&self) -> f64 {
        let mean = self.mean();
        let second: f64 =
            self.charge.iter().zip(&self.probability).map(|(&n, &p)| (n * n) as f64 * p).sum();
        second - mean * mean
    }
}

/// P(n) for the charge transferred to reservoir ν in `[count_from, t_end]`,
/// starting from `rho0` at `t_start` (the state evolves untilted until
/// counting begins).
///
/// `grid` must be a power of two; the χ grid is uniform over `[−π, π)` and
/// the inversion yields integer charges in `[−grid/2, grid/2)`.
pub fn distribution(
    fock: &FockSpaceModel,
    rho0: &Array2<C64>,
    nu: usize,
    t_start: f64,
    count_from: f64,
    t_end: f64,
    dt: f64,
    grid: usize,
) -> Result<Distribution> {
    if grid < 2 || !grid.is_power_of_two() {
        return Err(Error::InvalidModel(format!("χ grid must be a power of two, got {grid}")));
    }
    let staged = evolve_tilted(fock, rho0, nu, 0.0, t_start, count_from, dt, |_, _| {})?;
    let g: Vec<C64> = (0..grid)
        .into_par_iter()
        .map(|j| -> Result<C64> {
            let chi = -std::f64::consts::PI
                + std::f64::consts::TAU * j as f64 / grid as f64;
            let state =
                evolve_tilted(fock, &staged.rho, nu, chi, count_from, t_end, dt, |_, _| {})?;
            Ok(state.characteristic_function())
        })
        .collect::<Result<_>>()?;
    let half = (grid / 2) as i64;
    let mut charge = Vec::with_capacity(grid);
    let mut probability = Vec::with_capacity(grid);
    let mut max_imag: f64 = 0.0;
    for n in -half..half {
        let mut acc = C64::ZERO;
        for (j, gj) in g.iter().enumerate() {
            let chi = -std::f64::consts::PI
                + std::f64::consts::TAU * j as f64 / grid as f64;
            acc += C64::from_polar(1.0, -(n as f64) * chi) * gj;
        }
        acc /= grid as f64;
        charge.push(n);
        probability.push(acc.re);
        max_imag = max_imag.max(acc.im.abs());
    }
    let norm_err = (probability.iter().sum::<f64>() - 1.0).abs();
    if norm_err > 1e-6 {
        return Err(Error::NotNormalized(norm_err));
    }
    Ok(Distribution { charge, probability, normalization_error: norm_err, max_imaginary: max_imag })
}

/// Variances and covariance of the charge transferred over two adjacent
/// windows `[t0, t1]` and `[t1, t2]`, from the joint two-window CF.
#[derive(Debug, Clone, Copy)]
pub struct WindowDecomposition {
    pub var_total: f64,
    pub var_early: f64,
    pub var_late: f64,
    pub covariance: f64,
    /// `var_total − var_early − var_late − 2·cov`.
    pub residual: f64,
}

/// Evaluate the two-window joint characteristic function
/// `G(χ₁, χ₂)` (counting field χ₁ on `[t0, t1]`, then χ₂ on `[t1, t2]`) on a
/// 3×3 grid and extract all second cumulants.
pub fn window_decomposition(
    fock: &FockSpaceModel,
    rho0: &Array2<C64>,
    nu: usize,
    t0: f64,
    t1: f64,
    t2: f64,
    dt: f64,
    chi_step: f64,
) -> Result<WindowDecomposition> {
    let h = chi_step;
    let chis = [-h, 0.0, h];
    // first legs over [t0, t1], one per χ₁
    let legs: Vec<Array2<C64>> = chis
        .par_iter()
        .map(|&c1| Ok(evolve_tilted(fock, rho0, nu, c1, t0, t1, dt, |_, _| {})?.rho))
        .collect::<Result<_>>()?;
    // second legs over [t1, t2]
    let mut lng = [[C64::ZERO; 3]; 3];
    let pairs: Vec<(usize, usize)> =
        (0..3).flat_map(|i| (0..3).map(move |j| (i, j))).collect();
    let values: Vec<C64> = pairs
        .par_iter()
        .map(|&(i, j)| -> Result<C64> {
            let state = evolve_tilted(fock, &legs[i], nu, chis[j], t1, t2, dt, |_, _| {})?;
            Ok(state.characteristic_function().ln())
        })
        .collect::<Result<_>>()?;
    for (&(i, j), v) in pairs.iter().zip(values) {
        lng[i][j] = v;
    }

    let h2 = h * h;
    let var_early = (-(lng[2][1] - 2.0 * lng[1][1] + lng[0][1]) / h2).re;
    let var_late = (-(lng[1][2] - 2.0 * lng[1][1] + lng[1][0]) / h2).re;
    let var_total = (-(lng[2][2] - 2.0 * lng[1][1] + lng[0][0]) / h2).re;
    let covariance = (-(lng[2][2] - lng[2][0] - lng[0][2] + lng[0][0]) / (4.0 * h2)).re;
    let residual = var_total - var_early - var_late - 2.0 * covariance;
    Ok(WindowDecomposition { var_total, var_early, var_late, covariance, residual })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assemble::assemble;
    use crate::leads::LeadDiscretization;
    use crate::model::{DriveWaveform, ModelSpec, ReservoirSpec, SpectralDensity, SystemSpec};
    use approx::assert_abs_diff_eq;

    /// One site coupled to two single-mode reservoirs; couplings of order
    /// the system energy scale.
    fn three_mode_model(drive: DriveWaveform) -> AssembledModel {
        let mut h0 = Array2::<C64>::zeros((1, 1));
        h0[[0, 0]] = C64::new(0.3, 0.0);
        let system = SystemSpec::new(h0, drive, vec![(0, 1)]).unwrap();
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
            vec![crate::model::fermi_occupation(-0.4, 1.0, 0.6).unwrap()],
        )
        .unwrap();
        let lead_b = LeadDiscretization::from_parts(
            vec![0.7],
            vec![0.6],
            vec![0.35],
            vec![crate::model::fermi_occupation(0.7, 0.5, -0.4).unwrap()],
        )
        .unwrap();
        assemble(&spec, vec![lead_a, lead_b]).unwrap()
    }

    #[test]
    fn anticommutation_relations_exact() {
        let fock = FockSpaceModel::new(&three_mode_model(DriveWaveform::off())).unwrap();
        let m = fock.modes();
        let d = fock.dim();
        let eye = Array2::<C64>::eye(d);
        for i in 0..m {
            for j in 0..m {
                let bi = fock.lowering(i);
                let bj = fock.lowering(j);
                let bjd = bj.t().mapv(|z| z.conj());
                let anti = bi.dot(&bjd) + bjd.dot(&bi);
                let expected = if i == j { eye.clone() } else { Array2::zeros((d, d)) };
                assert_eq!(anti, expected, "{{b_{i}, b_{j}†}}");
                // {b_i, b_j} = 0
                let anti2 = bi.dot(&bj) + bj.dot(&bi);
                assert_eq!(anti2, Array2::zeros((d, d)));
            }
        }
    }

    #[test]
    fn hamiltonian_hermitian_and_chi_conjugate() {
        let fock = FockSpaceModel::new(&three_mode_model(DriveWaveform::off())).unwrap();
        let h0 = fock.many_body_hamiltonian(0.0, 0.0, 0).unwrap();
        assert!(util::hermiticity_drift(&h0) < 1e-14);
        // The counting phases are conjugate between the two coupling
        // directions, so H_χ stays Hermitian for every real χ, and flipping
        // χ conjugates the matrix in the occupation basis.
        let hp = fock.many_body_hamiltonian(0.0, 0.3, 0).unwrap();
        let hm = fock.many_body_hamiltonian(0.0, -0.3, 0).unwrap();
        assert!(util::hermiticity_drift(&hp) < 1e-14);
        let conj = hp.mapv(|z| z.conj());
        assert!(util::max_abs(&(&conj - &hm)) < 1e-14);
    }

    #[test]
    fn untilted_generator_preserves_trace() {
        let fock = FockSpaceModel::new(&three_mode_model(DriveWaveform::off())).unwrap();
        let d = fock.dim();
        let sup = fock.superoperator(0.4, 0.0, 0).unwrap();
        // left identity row: Σ_s L[(s,s), ·] = 0
        for col in 0..d * d {
            let mut acc = C64::ZERO;
            for s in 0..d {
                acc += sup[[s * d + s, col]];
            }
            assert!(acc.norm() < 1e-12, "column {col}: {acc}");
        }
        // tilted generator does not preserve the trace
        let sup_tilted = fock.superoperator(0.4, 0.7, 0).unwrap();
        let mut broken = false;
        'outer: for col in 0..d * d {
            let mut acc = C64::ZERO;
            for s in 0..d {
                acc += sup_tilted[[s * d + s, col]];
            }
            if acc.norm() > 1e-9 {
                broken = true;
                break 'outer;
            }
        }
        assert!(broken);
    }

    #[test]
    fn decoupled_mode_reaches_thermal_occupation() {
        // Zero system-lead coupling: each lead mode relaxes to f_k.
        let mut h0 = Array2::<C64>::zeros((1, 1));
        h0[[0, 0]] = C64::new(0.3, 0.0);
        let system = SystemSpec::new(h0, DriveWaveform::off(), vec![]).unwrap();
        let spec = ModelSpec {
            system,
            reservoirs: vec![ReservoirSpec {
                label: "A".into(),
                temperature: 1.0,
                chemical_potential: 0.0,
                site: 0,
                modes: 2,
                spectral_density: SpectralDensity::Flat { coupling: 0.0, half_bandwidth: 2.0 },
            }],
        };
        let leads = LeadDiscretization::from_parts(
            vec![-0.5, 0.8],
            vec![1.1, 0.7],
            vec![0.0, 0.0],
            vec![0.62, 0.31],
        )
        .unwrap();
        let model = assemble(&spec, vec![leads]).unwrap();
        let fock = FockSpaceModel::new(&model).unwrap();
        let state =
            evolve_tilted(&fock, &fock.vacuum(), 0, 0.0, 0.0, 45.0, 0.01, |_, _| {}).unwrap();
        let c = fock.covariance_from_density(&state.rho);
        assert_abs_diff_eq!(c[[1, 1]].re, 0.62, epsilon = 1e-10);
        assert_abs_diff_eq!(c[[2, 2]].re, 0.31, epsilon = 1e-10);
        let (trace_err, min_eig) = fock.check_density(&state.rho);
        assert!(trace_err < 1e-10);
        assert!(min_eig > -1e-10);
    }

    #[test]
    fn cf_conjugation_symmetry() {
        let fock = FockSpaceModel::new(&three_mode_model(DriveWaveform::off())).unwrap();
        let rho0 = fock.vacuum();
        let gp = evolve_tilted(&fock, &rho0, 0, 0.4, 0.0, 2.0, 0.01, |_, _| {})
            .unwrap()
            .characteristic_function();
        let gm = evolve_tilted(&fock, &rho0, 0, -0.4, 0.0, 2.0, 0.01, |_, _| {})
            .unwrap()
            .characteristic_function();
        assert!((gp.conj() - gm).norm() < 1e-12, "G(χ)* = G(−χ)");
    }

    #[test]
    fn cumulants_of_synthetic_gaussian_cf() {
        // G(χ) = exp(iμχ − σ²χ²/2) has mean μ and variance σ² exactly.
        let mu = 1.7;
        let var = 0.9;
        let h = 1e-3;
        let g = |chi: f64| (C64::new(0.0, mu * chi) - C64::new(var * chi * chi / 2.0, 0.0)).exp();
        let est = cumulants_from_cf(&ChiSamples {
            step: h,
            g0: g(0.0),
            g_plus: g(h),
            g_minus: g(-h),
            g_plus2: g(2.0 * h),
            g_minus2: g(-2.0 * h),
        })
        .unwrap();
        assert_abs_diff_eq!(est.mean, mu, epsilon = 1e-8);
        assert_abs_diff_eq!(est.variance, var, epsilon = 1e-8);
    }

    #[test]
    fn cumulants_of_unit_cf_vanish() {
        let one = C64::new(1.0, 0.0);
        let est = cumulants_from_cf(&ChiSamples {
            step: 1e-3,
            g0: one,
            g_plus: one,
            g_minus: one,
            g_plus2: one,
            g_minus2: one,
        })
        .unwrap();
        assert_eq!(est.mean, 0.0);
        assert_eq!(est.variance, 0.0);
    }

    #[test]
    fn cumulants_reject_unnormalized_cf() {
        let one = C64::new(1.0, 0.0);
        let err = cumulants_from_cf(&ChiSamples {
            step: 1e-3,
            g0: C64::new(1.001, 0.0),
            g_plus: one,
            g_minus: one,
            g_plus2: one,
            g_minus2: one,
        })
        .unwrap_err();
        assert!(matches!(err, Error::NotNormalized(_)));
    }

    #[test]
    fn distribution_at_zero_time_is_delta() {
        let fock = FockSpaceModel::new(&three_mode_model(DriveWaveform::off())).unwrap();
        let rho0 = fock.vacuum();
        let dist = distribution(&fock, &rho0, 0, 0.0, 0.0, 0.0, 0.01, 64).unwrap();
        for (&n, &p) in dist.charge.iter().zip(&dist.probability) {
            if n == 0 {
                assert_abs_diff_eq!(p, 1.0, epsilon = 1e-12);
            } else {
                assert!(p.abs() < 1e-12);
            }
        }
    }

    #[test]
    fn fock_cap_enforced() {
        let spec = ModelSpec::new(
            SystemSpec::two_site(1.0, DriveWaveform::off()).unwrap(),
            vec![ReservoirSpec {
                label: "L".into(),
                temperature: 1.0,
                chemical_potential: 0.0,
                site: 0,
                modes: 9,
                spectral_density: SpectralDensity::Flat { coupling: 0.5, half_bandwidth: 2.0 },
            }],
        )
        .unwrap();
        let model = AssembledModel::from_spec(&spec).unwrap();
        assert!(matches!(
            FockSpaceModel::new(&model),
            Err(Error::FockTooLarge { modes: 11, cap: FOCK_MODE_CAP })
        ));
    }
}
