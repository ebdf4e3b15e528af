//! Loss followed by phase-sensitive noise on Bob's mode:
//! `T₀ = (1−η)I`, `N₀ = ½ diag(ε₁, ε₂) + (η − η²/2)I`.
//!
//! `ε₁` and `ε₂` are fixed by requiring the time-difference and
//! dispersed-sum variances to grow by `1+ξ`, exactly as under the
//! block-scaling attack.

use nalgebra::Matrix2;
use serde::{Deserialize, Serialize};

use super::channel::GaussianChannel;
use crate::error::{finite, Error, Result};
use crate::source::SourceParams;

/// Slightly negative epsilons from rounding are still accepted.
const EPSILON_FLOOR: f64 = -1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlternateAttack {
    pub eta: f64,
    pub xi: f64,
    /// Relative increase in the dispersed basis when it differs from `xi`.
    #[serde(default)]
    pub xi_dispersed: Option<f64>,
}

impl AlternateAttack {
    pub fn new(eta: f64, xi: f64) -> Result<Self> {
        Ok(AlternateAttack {
            eta: finite("eta", eta)?,
            xi: finite("xi", xi)?,
            xi_dispersed: None,
        })
    }

    pub fn with_dispersed_xi(mut self, xi_dispersed: f64) -> Result<Self> {
        self.xi_dispersed = Some(finite("xi_dispersed", xi_dispersed)?);
        Ok(self)
    }

    pub fn epsilons(&self, p: &SourceParams) -> Result<(f64, f64)> {
        split_epsilons(p, self.eta, self.xi, self.xi_dispersed.unwrap_or(self.xi))
    }
}

/// `(ε₁, ε₂)` for equal relative increases in both bases.
pub fn alternate_epsilons(p: &SourceParams, eta: f64, xi: f64) -> Result<(f64, f64)> {
    split_epsilons(p, eta, xi, xi)
}

pub(crate) fn raw_epsilons(
    p: &SourceParams,
    eta: f64,
    xi_time: f64,
    xi_dispersed: f64,
) -> (f64, f64) {
    let c = p.sigma_coh();
    let r = p.sigma_cor();
    let k2 = p.k() * p.k();
    let q = r / c;
    let shared_sq = 1.0 - c / r - r / (4.0 * c);
    let eps1 = q * xi_time + eta * (q - 2.0) + eta * eta * shared_sq;

    let disp = q + 16.0 * c * r.powi(3) / k2;
    let eps2 = disp * xi_dispersed
        + eta * (disp - 2.0)
        + eta * eta * (shared_sq - 16.0 * c.powi(3) * r / k2 - 4.0 * c * r.powi(3) / k2);
    (eps1, eps2)
}

fn split_epsilons(
    p: &SourceParams,
    eta: f64,
    xi_time: f64,
    xi_dispersed: f64,
) -> Result<(f64, f64)> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::InvalidParameter {
            name: "eta",
            value: eta,
            reason: "alternate channel needs 0 <= eta <= 1",
        });
    }
    let (epsilon1, epsilon2) = raw_epsilons(p, eta, xi_time, xi_dispersed);
    if !(epsilon1 >= EPSILON_FLOOR && epsilon2 >= EPSILON_FLOOR) {
        return Err(Error::NegativeEpsilon { epsilon1, epsilon2 });
    }
    Ok((epsilon1, epsilon2))
}

pub(crate) fn channel_from_epsilons(eta: f64, eps1: f64, eps2: f64) -> Result<GaussianChannel> {
    let loss = eta - 0.5 * eta * eta;
    GaussianChannel::new(
        Matrix2::identity() * (1.0 - eta),
        Matrix2::new(0.5 * eps1 + loss, 0.0, 0.0, 0.5 * eps2 + loss),
    )
}

pub fn channel_from_alternate(p: &SourceParams, a: &AlternateAttack) -> Result<GaussianChannel> {
    let (e1, e2) = a.epsilons(p)?;
    channel_from_epsilons(a.eta, e1, e2)
}
