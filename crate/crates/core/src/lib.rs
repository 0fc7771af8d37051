//! Time-resolved particle currents and charge-transfer noise for driven
//! quadratic fermionic conductors coupled to mesoscopic-lead reservoirs.
//!
//! The crate has two computational paths:
//!
//! - the scalable Gaussian path ([`dynamics`]): the covariance matrix C(t)
//!   evolves under a Lyapunov equation and an auxiliary matrix C̃(t, t₁)
//!   under a modified Lyapunov equation, giving the instantaneous current
//!   `J_ν = i Tr[G_ν C]` and noise `D_ν = 2 Tr[G_ν C̃]` at a cost set by the
//!   arrowhead structure of the single-particle Hamiltonian;
//! - an exact brute-force path ([`oracle`]): the full many-body density
//!   matrix evolves under a counting-field-tilted Lindblad generator on
//!   tiny instances, giving the characteristic function, the cumulants, and
//!   the complete transferred-charge distribution P(n) for validation.
//!
//! The [`guide`] module mirrors the book chapters; its code blocks run as
//! doc-tests.

pub mod assemble;
pub mod dynamics;
pub mod error;
pub mod guide;
pub mod leads;
pub mod model;
pub mod observables;
pub mod oracle;
mod util;
pub mod validation;

pub use assemble::{assemble, AssembledModel, CountingMatrix, LeadBlock};
pub use dynamics::{
    auxiliary_rhs, evolve, lyapunov_rhs, rk4_step, CovarianceState, InitialCovariance,
    IntegratorConfig, WindowPlan,
};
pub use error::{Error, Result};
pub use leads::{convergence_report, discretize, effective_spectral_density, LeadDiscretization};
pub use model::{
    fermi_occupation, DriveWaveform, ModelSpec, ReservoirSpec, SpectralDensity, SystemSpec,
};
pub use observables::{
    covariance_decomposition_residual, detect_limit_cycle, fano_factor, instantaneous_current,
    instantaneous_noise, integrated_charge, lc_average_current, limit_cycle_summary,
    single_period_noise, zero_frequency_noise, LimitCycleSummary, ProbeSummary, RunTrace,
    ZeroFrequencyNoise,
};

/// Complex double-precision scalar used throughout.
pub type C64 = num_complex::Complex64;
