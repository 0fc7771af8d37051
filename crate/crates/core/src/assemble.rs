//! Assembly of the single-particle matrices that drive the Gaussian
//! dynamics: the arrowhead Hamiltonian H(t), the diagonal damping and
//! injection matrices, and the per-reservoir counting matrices.

use ndarray::Array2;
use num_complex::Complex64 as C64;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::leads::{discretize, LeadDiscretization};
use crate::model::{ModelSpec, ReservoirSpec, SystemSpec};

/// One reservoir's slice of the assembled single-particle space.
#[derive(Debug, Clone)]
pub struct LeadBlock {
    pub label: String,
    /// System mode this block couples to.
    pub site: usize,
    /// First index of the block in the combined ordering.
    pub offset: usize,
    pub leads: LeadDiscretization,
}

impl LeadBlock {
    pub fn len(&self) -> usize {
        self.leads.len()
    }

    pub fn is_empty(&self) -> bool {
        self.leads.is_empty()
    }
}

/// Sparse representation of the counting matrix G_ν: real antisymmetric with
/// `G[p, o+k] = κ_k` and `G[o+k, p] = −κ_k` for the block of reservoir ν.
#[derive(Debug, Clone)]
pub struct CountingMatrix {
    pub dim: usize,
    pub site: usize,
    pub offset: usize,
    pub kappas: Vec<f64>,
}

impl CountingMatrix {
    /// Dense form, mainly for tests and cross-checks against the structured
    /// products.
    pub fn to_dense(&self) -> Array2<C64> {
        let mut g = Array2::zeros((self.dim, self.dim));
        for (k, &kappa) in self.kappas.iter().enumerate() {
            g[[self.site, self.offset + k]] = C64::new(kappa, 0.0);
            g[[self.offset + k, self.site]] = C64::new(-kappa, 0.0);
        }
        g
    }
}

/// The `(L + Σ N_α)`-dimensional single-particle model: system block,
/// diagonal lead blocks, coupling rows/columns, dampings, and injections.
///
/// Immutable after construction; all evaluation methods are pure functions
/// of `(self, t)` and safe to share across threads.
#[derive(Debug, Clone)]
pub struct AssembledModel {
    system: SystemSpec,
    blocks: Vec<LeadBlock>,
    /// Diagonal of γ (zero on the system sector), length n.
    gamma: Vec<f64>,
    /// Diagonal of F = γ·f, length n.
    injection: Vec<f64>,
    hash: String,
}

/// Combine a model spec with externally produced lead discretizations,
/// one per reservoir in order.
pub fn assemble(spec: &ModelSpec, leads: Vec<LeadDiscretization>) -> Result<AssembledModel> {
    spec.validate()?;
    if leads.len() != spec.reservoirs.len() {
        return Err(Error::InvalidModel(format!(
            "{} lead discretizations supplied for {} reservoirs",
            leads.len(),
            spec.reservoirs.len()
        )));
    }
    AssembledModel::build(&spec.system, spec.reservoirs.iter().zip(leads))
}

impl AssembledModel {
    /// Discretize every reservoir of `spec` and assemble.
    pub fn from_spec(spec: &ModelSpec) -> Result<Self> {
        spec.validate()?;
        let leads =
            spec.reservoirs.iter().map(discretize).collect::<Result<Vec<_>>>()?;
        assemble(spec, leads)
    }

    fn build<'a>(
        system: &SystemSpec,
        pairs: impl Iterator<Item = (&'a ReservoirSpec, LeadDiscretization)>,
    ) -> Result<Self> {
        let l = system.modes();
        let mut blocks = Vec::new();
        let mut offset = l;
        for (res, leads) in pairs {
            if res.site >= l {
                return Err(Error::InvalidModel(format!(
                    "reservoir `{}`: coupling site {} out of range for {} system modes",
                    res.label, res.site, l
                )));
            }
            blocks.push(LeadBlock { label: res.label.clone(), site: res.site, offset, leads });
            offset += blocks.last().unwrap().len();
        }
        let n = offset;
        let mut gamma = vec![0.0; n];
        let mut injection = vec![0.0; n];
        for b in &blocks {
            for (k, (&g, &f)) in b.leads.gammas().iter().zip(b.leads.occupations()).enumerate() {
                gamma[b.offset + k] = g;
                injection[b.offset + k] = g * f;
            }
        }
        let mut model =
            AssembledModel { system: system.clone(), blocks, gamma, injection, hash: String::new() };
        model.hash = model.compute_hash();
        Ok(model)
    }

    fn compute_hash(&self) -> String {
        let mut hasher = Sha256::new();
        self.system.hash_into(&mut hasher);
        for b in &self.blocks {
            hasher.update(b.label.as_bytes());
            hasher.update(b.site.to_le_bytes());
            for arrays in [
                b.leads.energies(),
                b.leads.gammas(),
                b.leads.kappas(),
                b.leads.occupations(),
            ] {
                for &x in arrays {
                    hasher.update(x.to_le_bytes());
                }
            }
        }
        let digest = hasher.finalize();
        let mut out = String::with_capacity(64);
        for byte in digest {
            out.push_str(&format!("{byte:02x}"));
        }
        out
    }

    /// Total single-particle dimension n = L + Σ N_α.
    pub fn dim(&self) -> usize {
        self.gamma.len()
    }

    /// Number of system modes L.
    pub fn system_modes(&self) -> usize {
        self.system.modes()
    }

    pub fn system(&self) -> &SystemSpec {
        &self.system
    }

    pub fn blocks(&self) -> &[LeadBlock] {
        &self.blocks
    }

    /// Resolve a reservoir label to its index.
    pub fn reservoir_index(&self, label: &str) -> Result<usize> {
        self.blocks
            .iter()
            .position(|b| b.label == label)
            .ok_or_else(|| Error::UnknownReservoir(label.to_string()))
    }

    pub fn block(&self, nu: usize) -> Result<&LeadBlock> {
        self.blocks.get(nu).ok_or_else(|| Error::UnknownReservoir(format!("#{nu}")))
    }

    /// Diagonal of the damping matrix γ.
    pub fn gamma(&self) -> &[f64] {
        &self.gamma
    }

    /// Diagonal of the injection matrix F = γ·f.
    pub fn injection(&self) -> &[f64] {
        &self.injection
    }

    /// Hex digest identifying the assembled matrices; stored in checkpoints.
    pub fn hash(&self) -> &str {
        &self.hash
    }

    /// The L×L system block h_S(t).
    pub fn system_block(&self, t: f64) -> Array2<C64> {
        self.system.hamiltonian(t)
    }

    /// Counting matrix for reservoir ν in sparse form.
    pub fn counting_matrix(&self, nu: usize) -> Result<CountingMatrix> {
        let b = self.block(nu)?;
        Ok(CountingMatrix {
            dim: self.dim(),
            site: b.site,
            offset: b.offset,
            kappas: b.leads.kappas().to_vec(),
        })
    }

    /// Dense n×n arrowhead Hamiltonian H(t). The structured products in
    /// `dynamics` avoid ever forming this during integration; it exists for
    /// the oracle, for cross-checks, and for small-instance work.
    pub fn dense_h(&self, t: f64) -> Array2<C64> {
        let n = self.dim();
        let l = self.system_modes();
        let hs = self.system_block(t);
        let mut h = Array2::zeros((n, n));
        for i in 0..l {
            for j in 0..l {
                h[[i, j]] = hs[[i, j]];
            }
        }
        for b in &self.blocks {
            for (k, (&eps, &kappa)) in
                b.leads.energies().iter().zip(b.leads.kappas()).enumerate()
            {
                let idx = b.offset + k;
                h[[idx, idx]] = C64::new(eps, 0.0);
                h[[b.site, idx]] = C64::new(kappa, 0.0);
                h[[idx, b.site]] = C64::new(kappa, 0.0);
            }
        }
        h
    }

    /// Dense W(t) = iH(t) + γ/2, for reference implementations.
    pub fn dense_w(&self, t: f64) -> Array2<C64> {
        let mut w = self.dense_h(t).mapv(|z| C64::new(0.0, 1.0) * z);
        for (i, &g) in self.gamma.iter().enumerate() {
            w[[i, i]] += C64::new(g / 2.0, 0.0);
        }
        w
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{DriveWaveform, SpectralDensity};
    use approx::assert_abs_diff_eq;

    fn reservoir(label: &str, site: usize, modes: usize, mu: f64) -> ReservoirSpec {
        ReservoirSpec {
            label: label.into(),
            temperature: 0.1,
            chemical_potential: mu,
            site,
            modes,
            spectral_density: SpectralDensity::Flat { coupling: 0.5, half_bandwidth: 100.0 },
        }
    }

    #[test]
    fn paper_scale_dimension() {
        let spec = ModelSpec::new(
            SystemSpec::two_site(1.0, DriveWaveform::off()).unwrap(),
            vec![reservoir("L", 0, 400, 24.0), reservoir("R", 1, 400, -24.0)],
        )
        .unwrap();
        let model = AssembledModel::from_spec(&spec).unwrap();
        assert_eq!(model.dim(), 802);
        assert_eq!(model.blocks()[0].offset, 2);
        assert_eq!(model.blocks()[1].offset, 402);
    }

    #[test]
    fn single_site_arrowhead() {
        let sys = SystemSpec::new(
            Array2::zeros((1, 1)),
            DriveWaveform::off(),
            vec![],
        )
        .unwrap();
        let spec = ModelSpec::new(sys, vec![reservoir("L", 0, 2, 0.0)]).unwrap();
        let model = AssembledModel::from_spec(&spec).unwrap();
        assert_eq!(model.dim(), 3);
        let h = model.dense_h(0.0);
        let kappas = model.blocks()[0].leads.kappas().to_vec();
        assert_abs_diff_eq!(h[[0, 1]].re, kappas[0], epsilon = 1e-15);
        assert_abs_diff_eq!(h[[0, 2]].re, kappas[1], epsilon = 1e-15);
        assert_abs_diff_eq!(h[[1, 0]].re, kappas[0], epsilon = 1e-15);
        assert_abs_diff_eq!(h[[2, 0]].re, kappas[1], epsilon = 1e-15);
        assert_eq!(h[[1, 2]], C64::new(0.0, 0.0));
    }

    #[test]
    fn counting_matrix_entries_and_antisymmetry() {
        let sys = SystemSpec::new(Array2::zeros((1, 1)), DriveWaveform::off(), vec![]).unwrap();
        let spec = ModelSpec::new(sys, vec![reservoir("L", 0, 2, 0.0)]).unwrap();
        let model = AssembledModel::from_spec(&spec).unwrap();
        let g = model.counting_matrix(0).unwrap();
        let dense = g.to_dense();
        let kappas = model.blocks()[0].leads.kappas().to_vec();
        assert_abs_diff_eq!(dense[[0, 1]].re, kappas[0], epsilon = 1e-15);
        assert_abs_diff_eq!(dense[[0, 2]].re, kappas[1], epsilon = 1e-15);
        assert_abs_diff_eq!(dense[[1, 0]].re, -kappas[0], epsilon = 1e-15);
        assert_abs_diff_eq!(dense[[2, 0]].re, -kappas[1], epsilon = 1e-15);
        // G + Gᵀ = 0 exactly, and G is real
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(dense[[i, j]] + dense[[j, i]], C64::new(0.0, 0.0));
                assert_eq!(dense[[i, j]].im, 0.0);
            }
        }
    }

    #[test]
    fn hermiticity_exact_under_drive() {
        let spec = ModelSpec::new(
            SystemSpec::two_site(
                1.0,
                DriveWaveform::Cosine { amplitude: 40.0, omega: 5.0 },
            )
            .unwrap(),
            vec![reservoir("L", 0, 10, 24.0), reservoir("R", 1, 10, -24.0)],
        )
        .unwrap();
        let model = AssembledModel::from_spec(&spec).unwrap();
        for t in [0.0, 0.3, 1.7, 12.0] {
            let h = model.dense_h(t);
            for i in 0..model.dim() {
                for j in 0..model.dim() {
                    assert_eq!(h[[i, j]], h[[j, i]].conj());
                }
            }
        }
    }

    #[test]
    fn injection_bounded_by_damping() {
        let spec = ModelSpec::new(
            SystemSpec::two_site(1.0, DriveWaveform::off()).unwrap(),
            vec![reservoir("L", 0, 50, 3.0), reservoir("R", 1, 50, -3.0)],
        )
        .unwrap();
        let model = AssembledModel::from_spec(&spec).unwrap();
        for i in 0..model.dim() {
            assert!(model.injection()[i] >= 0.0);
            assert!(model.injection()[i] <= model.gamma()[i]);
        }
        for i in 0..model.system_modes() {
            assert_eq!(model.gamma()[i], 0.0);
        }
    }

    #[test]
    fn shared_site_allowed() {
        let sys = SystemSpec::new(Array2::zeros((1, 1)), DriveWaveform::off(), vec![]).unwrap();
        let spec = ModelSpec::new(
            sys,
            vec![reservoir("A", 0, 4, 1.0), reservoir("B", 0, 4, -1.0)],
        )
        .unwrap();
        let model = AssembledModel::from_spec(&spec).unwrap();
        assert_eq!(model.dim(), 9);
        assert_eq!(model.blocks()[1].site, 0);
    }

    #[test]
    fn hash_distinguishes_models() {
        let a = AssembledModel::from_spec(
            &ModelSpec::new(
                SystemSpec::two_site(1.0, DriveWaveform::off()).unwrap(),
                vec![reservoir("L", 0, 10, 24.0)],
            )
            .unwrap(),
        )
        .unwrap();
        let b = AssembledModel::from_spec(
            &ModelSpec::new(
                SystemSpec::two_site(1.0, DriveWaveform::off()).unwrap(),
                vec![reservoir("L", 0, 10, 23.0)],
            )
            .unwrap(),
        )
        .unwrap();
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
    }
}
