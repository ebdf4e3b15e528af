//! Block-scaling attack: `γ_AB → (1−η)γ_AB`, `γ_BB → (1+ε)γ_BB`.
//!
//! This is a map on covariance matrices parameterised by the observed
//! variance increase `ξ`; physicality of the image is checked after the fact.

use nalgebra::Matrix2;
use serde::{Deserialize, Serialize};

use super::channel::{apply_channel_bob, GaussianChannel};
use crate::error::{finite, positive, Error, Result};
use crate::gaussian::{CovMatrix, SymplecticMatrix};
use crate::source::{build_covariance, diagonalizing_symplectic, SourceParams};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MowerAttack {
    pub eta: f64,
    pub xi: f64,
}

impl MowerAttack {
    pub fn new(eta: f64, xi: f64) -> Result<Self> {
        Ok(MowerAttack {
            eta: finite("eta", eta)?,
            xi: finite("xi", xi)?,
        })
    }

    pub fn epsilon(&self, p: &SourceParams) -> f64 {
        epsilon_from_xi(p, self.eta, self.xi)
    }

    /// The approximate bound `η ≲ √(1+ξ) σ_cor/σ_coh`; informational only,
    /// see [`mower_eta_limit`] for the exact limit.
    pub fn approximate_eta_bound(p: &SourceParams, xi: f64) -> f64 {
        (1.0 + xi).sqrt() * p.sigma_cor() / p.sigma_coh()
    }
}

/// `ε = (4ξσ_cor² − η(8σ_coh² − 2σ_cor²)) / (4σ_coh² + σ_cor²)`; may be negative.
pub fn epsilon_from_xi(p: &SourceParams, eta: f64, xi: f64) -> f64 {
    let c2 = p.sigma_coh().powi(2);
    let r2 = p.sigma_cor().powi(2);
    (4.0 * xi * r2 - eta * (8.0 * c2 - 2.0 * r2)) / (4.0 * c2 + r2)
}

/// Scales the cross blocks by `cross` and Bob's block by `bob`.
pub fn scale_blocks(g: &CovMatrix, cross: f64, bob: f64) -> Result<CovMatrix> {
    if g.dim() != 4 {
        return Err(Error::DimensionMismatch {
            expected: 4,
            got: g.dim(),
        });
    }
    CovMatrix::from_blocks(
        &g.block(0, 0),
        &(g.block(0, 1) * cross),
        &(g.block(1, 1) * bob),
    )
}

/// Applies the block-scaling attack; errors if the image is unphysical.
pub fn apply_mower(g: &CovMatrix, p: &SourceParams, a: &MowerAttack) -> Result<CovMatrix> {
    let out = scale_blocks(g, 1.0 - a.eta, 1.0 + a.epsilon(p))?;
    out.ensure_physical()?;
    Ok(out)
}

/// Largest `η ≥ 0` for which the attacked source state stays physical at
/// the given `ξ`, found by bisection. Returns 0 when even `η = 0` fails.
pub fn mower_eta_limit(p: &SourceParams, xi: f64) -> f64 {
    let g = build_covariance(p);
    let physical = |eta: f64| {
        scale_blocks(&g, 1.0 - eta, 1.0 + epsilon_from_xi(p, eta, xi))
            .map(|s| s.is_physical())
            .unwrap_or(false)
    };
    if !physical(0.0) {
        return 0.0;
    }
    let mut lo = 0.0;
    let mut hi = MowerAttack::approximate_eta_bound(p, xi).max(1e-12);
    while physical(hi) && hi < 1.0 {
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if physical(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// The block-scaling attack written as a channel on Bob:
/// `T = (1−η)I`, `N = (1 + ε − (1−η)²) γ_BB`. It need not be physical.
pub fn mower_channel(p: &SourceParams, a: &MowerAttack) -> Result<GaussianChannel> {
    let bb = build_covariance(p).block(1, 1);
    let gain = 1.0 - a.eta;
    GaussianChannel::new(
        Matrix2::identity() * gain,
        bb * (1.0 + a.epsilon(p) - gain * gain),
    )
}

/// Phase-insensitive Gaussian channel family.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PhaseInsensitiveKind {
    /// Thermal loss, transmissivity in (0, 1).
    Lossy,
    /// Thermal amplifier, gain in (1, ∞).
    Amplifier,
}

fn check_phase_insensitive(eta: f64, eps: f64, kind: PhaseInsensitiveKind) -> Result<()> {
    positive("epsilon", eps)?;
    let ok = match kind {
        PhaseInsensitiveKind::Lossy => eta > 0.0 && eta < 1.0,
        PhaseInsensitiveKind::Amplifier => eta > 1.0 && eta.is_finite(),
    };
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name: "eta",
            value: eta,
            reason: match kind {
                PhaseInsensitiveKind::Lossy => "lossy channel needs 0 < eta < 1",
                PhaseInsensitiveKind::Amplifier => "amplifier needs eta > 1",
            },
        })
    }
}

/// `T = √η I` with `N = ½(1−η+ε)I` (lossy) or `N = ½(η−1+ε)I` (amplifier).
pub fn phase_insensitive_channel(
    eta: f64,
    eps: f64,
    kind: PhaseInsensitiveKind,
) -> Result<GaussianChannel> {
    check_phase_insensitive(eta, eps, kind)?;
    let noise = match kind {
        PhaseInsensitiveKind::Lossy => 1.0 - eta + eps,
        PhaseInsensitiveKind::Amplifier => eta - 1.0 + eps,
    };
    GaussianChannel::new(
        Matrix2::identity() * eta.sqrt(),
        Matrix2::identity() * (0.5 * noise),
    )
}

/// Block-scaling parameters `(η′, ε′)` equivalent to conjugating a
/// phase-insensitive channel by Bob's diagonalizing symplectic.
pub fn mower_params_from_phase_insensitive(
    p: &SourceParams,
    eta: f64,
    eps: f64,
    kind: PhaseInsensitiveKind,
) -> Result<(f64, f64)> {
    check_phase_insensitive(eta, eps, kind)?;
    let noise = match kind {
        PhaseInsensitiveKind::Lossy => 1.0 + eps - eta,
        PhaseInsensitiveKind::Amplifier => eta - 1.0 + eps,
    };
    let c = p.sigma_coh();
    let r = p.sigma_cor();
    let eta_prime = 1.0 - eta.sqrt();
    let eps_prime = 4.0 * noise * c * r / (4.0 * c * c + r * r) - (1.0 - eta);
    Ok((eta_prime, eps_prime))
}

/// Bob's diagonalizing symplectic, then the phase-insensitive channel, then
/// its inverse, applied to the two-mode state `g`.
pub fn three_step_attack(
    g: &CovMatrix,
    p: &SourceParams,
    eta: f64,
    eps: f64,
    kind: PhaseInsensitiveKind,
) -> Result<CovMatrix> {
    let s2 = SymplecticMatrix::from_matrix2(&diagonalizing_symplectic(p).s2)?;
    let forward = SymplecticMatrix::identity(1).direct_sum(&s2);
    let backward = SymplecticMatrix::identity(1).direct_sum(&s2.inverse());
    let ch = phase_insensitive_channel(eta, eps, kind)?;
    let mid = apply_channel_bob(&g.transformed(&forward)?, &ch)?;
    mid.transformed(&backward)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::source::{correlated_variances, measured_basis_cov};
    use approx::assert_relative_eq;

    fn sec4() -> SourceParams {
        SourceParams::new(1.92, 0.03, 0.0039).unwrap()
    }

    #[test]
    fn epsilon_reference_value() {
        // (4·0.78·0.0009 − 6.3e-5·(8·3.6864 − 0.0018)) / (4·3.6864 + 0.0009)
        let num = 4.0 * 0.78 * 0.0009 - 6.3e-5 * (8.0 * 3.6864 - 2.0 * 0.0009);
        let den = 4.0 * 3.6864 + 0.0009;
        let eps = epsilon_from_xi(&sec4(), 6.3e-5, 0.78);
        assert_relative_eq!(eps, num / den, max_relative = 1e-14);
        assert!((eps - 6.444e-5).abs() < 1e-8, "{eps}");
    }

    #[test]
    fn epsilon_reductions() {
        let p = sec4();
        let (c2, r2) = (1.92f64.powi(2), 0.03f64.powi(2));
        assert_relative_eq!(
            epsilon_from_xi(&p, 0.0, 2.0),
            8.0 * r2 / (4.0 * c2 + r2),
            max_relative = 1e-15
        );
        assert_eq!(epsilon_from_xi(&p, 0.0, 0.0), 0.0);
    }

    #[test]
    fn identity_attack() {
        let p = sec4();
        let g = build_covariance(&p);
        let out = apply_mower(&g, &p, &MowerAttack::new(0.0, 0.0).unwrap()).unwrap();
        assert_eq!(out, g);
    }

    #[test]
    fn time_difference_grows_by_one_plus_xi() {
        let p = sec4();
        let g = build_covariance(&p);
        let out = apply_mower(&g, &p, &MowerAttack::new(6.3e-5, 0.78).unwrap()).unwrap();
        let before = correlated_variances(&measured_basis_cov(&g, &p).unwrap());
        let after = correlated_variances(&measured_basis_cov(&out, &p).unwrap());
        assert_relative_eq!(
            after.t_a_minus_t_b / before.t_a_minus_t_b,
            1.78,
            max_relative = 1e-9
        );
    }

    #[test]
    fn eta_beyond_approximate_bound_is_unphysical() {
        let p = sec4();
        let g = build_covariance(&p);
        let bound = MowerAttack::approximate_eta_bound(&p, 0.78);
        let a = MowerAttack::new(bound * 1.01, 0.78).unwrap();
        assert!(matches!(
            apply_mower(&g, &p, &a),
            Err(Error::Unphysical { .. })
        ));
        let limit = mower_eta_limit(&p, 0.78);
        assert!(limit > 6.3e-5 && limit < bound);
        assert!(apply_mower(&g, &p, &MowerAttack::new(limit, 0.78).unwrap()).is_ok());
        assert!(apply_mower(&g, &p, &MowerAttack::new(limit * 1.001, 0.78).unwrap()).is_err());
    }

    #[test]
    fn channel_form_reproduces_block_scaling() {
        let p = sec4();
        let g = build_covariance(&p);
        let a = MowerAttack::new(6.3e-5, 0.78).unwrap();
        let ch = mower_channel(&p, &a).unwrap();
        let via_channel = super::super::channel::apply_unchecked(&g, &ch).unwrap();
        let direct = apply_mower(&g, &p, &a).unwrap();
        assert!((via_channel.matrix() - direct.matrix()).amax() < 1e-9);
    }

    #[test]
    fn phase_insensitive_parameter_ranges() {
        let p = sec4();
        let (c, r) = (1.92, 0.03);
        let lower = -1.0 + 4.0 * c * r / (4.0 * c * c + r * r);
        let (eta_p, eps_p) =
            mower_params_from_phase_insensitive(&p, 1e-12, 1e-12, PhaseInsensitiveKind::Lossy)
                .unwrap();
        assert!((eta_p - 1.0).abs() < 1e-5);
        assert!((eps_p - lower).abs() < 1e-9 && eps_p > lower);
        let (eta_p, eps_p) =
            mower_params_from_phase_insensitive(&p, 1.0 - 1e-12, 1e-9, PhaseInsensitiveKind::Lossy)
                .unwrap();
        assert!(eta_p.abs() < 1e-9 && eps_p > 0.0 && eps_p < 1e-9);
        let (eta_p, eps_p) =
            mower_params_from_phase_insensitive(&p, 4.0, 0.5, PhaseInsensitiveKind::Amplifier)
                .unwrap();
        assert_eq!(eta_p, -1.0);
        assert!(eps_p > 0.0);
        assert!(
            mower_params_from_phase_insensitive(&p, 1.5, 0.1, PhaseInsensitiveKind::Lossy).is_err()
        );
        assert!(
            mower_params_from_phase_insensitive(&p, 0.5, 0.1, PhaseInsensitiveKind::Amplifier)
                .is_err()
        );
        assert!(
            mower_params_from_phase_insensitive(&p, 0.5, 0.0, PhaseInsensitiveKind::Lossy).is_err()
        );
    }

    #[test]
    fn three_step_equals_block_scaling() {
        let p = sec4();
        let g = build_covariance(&p);
        for (eta, eps, kind) in [
            (0.3, 0.2, PhaseInsensitiveKind::Lossy),
            (0.95, 0.01, PhaseInsensitiveKind::Lossy),
            (2.5, 0.7, PhaseInsensitiveKind::Amplifier),
        ] {
            let (ep, xp) = mower_params_from_phase_insensitive(&p, eta, eps, kind).unwrap();
            let lhs = three_step_attack(&g, &p, eta, eps, kind).unwrap();
            let rhs = scale_blocks(&g, 1.0 - ep, 1.0 + xp).unwrap();
            assert!(
                (lhs.matrix() - rhs.matrix()).norm() < 1e-9,
                "{:e}",
                (lhs.matrix() - rhs.matrix()).norm()
            );
        }
    }
}
