//! Detector timing jitter and its miscalibration budget.
//!
//! Each detector adds independent Gaussian noise of variance `σ_J²` to its
//! timestamp in either basis. If the true per-detector jitter is `σ_J + Δ_J`
//! but only `σ_J` is subtracted, a residual `2Δ_J(Δ_J + 2σ_J)` is left in
//! every two-detector correlated variance and is indistinguishable from
//! eavesdropping.

use serde::{Deserialize, Serialize};

use crate::attacks::AlternateAttack;
use crate::error::{non_negative, positive, Result};
use crate::keyrate::{key_rate, Attack, KeyMode};
use crate::source::SourceParams;

/// `FWHM = 2√(2 ln 2) σ` for a Gaussian.
pub const FWHM_PER_SIGMA: f64 = 2.354_820_045_030_949_3;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct JitterSpec {
    sigma_j: f64,
    delta_j: f64,
}

impl JitterSpec {
    /// Both in ns.
    pub fn new(sigma_j: f64, delta_j: f64) -> Result<Self> {
        Ok(JitterSpec {
            sigma_j: non_negative("sigma_j", sigma_j)?,
            delta_j: non_negative("delta_j", delta_j)?,
        })
    }

    pub fn from_fwhm(fwhm: f64, delta_j: f64) -> Result<Self> {
        JitterSpec::new(non_negative("fwhm", fwhm)? / FWHM_PER_SIGMA, delta_j)
    }

    pub fn sigma_j(&self) -> f64 {
        self.sigma_j
    }

    pub fn delta_j(&self) -> f64 {
        self.delta_j
    }

    pub fn fwhm(&self) -> f64 {
        self.sigma_j * FWHM_PER_SIGMA
    }
}

/// `ξ_J = 32Δ_Jσ_coh²(Δ_J + 2σ_J) / (k² + 16σ_coh²σ_cor²)`.
pub fn xi_from_jitter(p: &SourceParams, j: &JitterSpec) -> f64 {
    let c2 = p.sigma_coh().powi(2);
    32.0 * j.delta_j * c2 * (j.delta_j + 2.0 * j.sigma_j)
        / (p.k() * p.k() + 16.0 * c2 * p.sigma_cor().powi(2))
}

/// `Δ_J(Δ_J + 2σ_J)/σ_cor²`, a lower bound on [`xi_from_jitter`] when
/// `k ≤ 4σ_cohσ_cor`.
pub fn xi_jitter_lower_bound(sigma_cor: f64, j: &JitterSpec) -> Result<f64> {
    let r = positive("sigma_cor", sigma_cor)?;
    Ok(j.delta_j * (j.delta_j + 2.0 * j.sigma_j) / (r * r))
}

/// `log₂(numerator/denominator)`.
pub fn max_bits(numerator: f64, denominator: f64) -> Result<f64> {
    Ok((positive("numerator", numerator)? / positive("denominator", denominator)?).log2())
}

/// Loss assumed when turning a jitter-induced `ξ` into an attack.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "policy", content = "eta")]
pub enum EtaPolicy {
    #[default]
    Zero,
    Fixed(f64),
}

impl EtaPolicy {
    pub fn eta(&self) -> f64 {
        match self {
            EtaPolicy::Zero => 0.0,
            EtaPolicy::Fixed(eta) => *eta,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct JitterCapacityReport {
    pub xi_j: f64,
    pub eta: f64,
    /// Holevo information an eavesdropper can hide behind the calibration error.
    pub chi_floor: f64,
    /// `log₂(σ_coh/σ_J) − chi_floor`.
    pub skr_ceiling: f64,
    pub max_bits_jitter: f64,
    pub max_bits_correlation: f64,
}

pub fn jitter_capacity_report(
    p: &SourceParams,
    j: &JitterSpec,
    eta_policy: EtaPolicy,
    mode: KeyMode,
) -> Result<JitterCapacityReport> {
    let xi_j = xi_from_jitter(p, j);
    let eta = eta_policy.eta();
    let chi_floor = if xi_j == 0.0 && eta == 0.0 {
        0.0
    } else {
        key_rate(
            p,
            &Attack::Alternate(AlternateAttack::new(eta, xi_j)?),
            None,
            mode,
        )?
        .chi_ae
    };
    let max_bits_jitter = max_bits(p.sigma_coh(), positive("sigma_j", j.sigma_j)?)?;
    Ok(JitterCapacityReport {
        xi_j,
        eta,
        chi_floor,
        skr_ceiling: max_bits_jitter - chi_floor,
        max_bits_jitter,
        max_bits_correlation: max_bits(p.sigma_coh(), p.sigma_cor())?,
    })
}
