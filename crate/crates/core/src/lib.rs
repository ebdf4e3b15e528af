//! Gaussian security analysis for dispersive-optics quantum key distribution.
//!
//! The SPDC source is modelled as a two-mode Gaussian state in time/frequency
//! quadratures ([`source`]). An eavesdropper acts on Bob's mode through a
//! Gaussian channel or covariance map ([`attacks`]), and [`keyrate`] turns
//! the resulting state into `I(A:B)`, `χ(A:E)` and a secret key rate.
//! [`jitter`] bounds how much leakage detector miscalibration can hide, and
//! [`montecarlo`] cross-checks the analytic variances by sampling.
//!
//! ```
//! use doqkd_core::{key_rate, Attack, KeyMode, MowerAttack, SourceParams};
//!
//! let p = SourceParams::new(1.92, 0.03, 0.0039)?;
//! let attack = Attack::Mower(MowerAttack::new(6.3e-5, 0.78)?);
//! let r = key_rate(&p, &attack, None, KeyMode::BothBases)?;
//! assert!((r.i_ab - 5.58).abs() < 0.02);
//! # Ok::<(), doqkd_core::Error>(())
//! ```

pub mod attacks;
pub mod error;
pub mod gaussian;
pub mod jitter;
pub mod keyrate;
pub mod montecarlo;
pub mod source;

pub use attacks::{
    alternate_epsilons, apply_channel_bob, apply_mower, channel_from_alternate, delta_prime_table,
    mower_eta_limit, search_worst_attack, three_step_attack, AlternateAttack, GaussianChannel,
    MowerAttack, ObservedVariances, PhaseInsensitiveKind, SearchOptions, SearchResult,
};
pub use error::{Error, Result};
pub use gaussian::{
    mode_entropy, symplectic_form, CovMatrix, Quadrature, SymplecticMatrix, VACUUM_VARIANCE,
};
pub use jitter::{
    jitter_capacity_report, max_bits, xi_from_jitter, xi_jitter_lower_bound, EtaPolicy,
    JitterCapacityReport, JitterSpec, FWHM_PER_SIGMA,
};
pub use keyrate::{
    holevo, holevo_breakdown, key_rate, mutual_information_time, sweep, zero_crossing_xi, Attack,
    Curve, KeyMode, KeyRateReport, ModelKind, SweepRow, SweepSpec, SweepVar,
};
pub use montecarlo::{
    estimate_correlated_variances, sample_outcomes, BasisPair, BasisSamples, EmpiricalVariances,
    SimConfig,
};
pub use source::{
    build_covariance, correlated_variances, diagonalizing_symplectic, k_from_group_delay,
    measured_basis_cov, CorrelatedVariances, MeasuredBasisCov, SourceParams, TmsvDecomposition,
};
