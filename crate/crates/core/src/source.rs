//! The SPDC biphoton source: its two-mode covariance matrix, the local
//! squeezing that maps it to a two-mode squeezed vacuum, and the conversion
//! to the arrival-time observables Alice and Bob actually record.
//!
//! All times are in nanoseconds and the dispersion coefficient `k` in ns².

use nalgebra::{DMatrix, Matrix2, Matrix4, Vector4};
use serde::{Deserialize, Serialize};

use crate::error::{positive, Error, Result};
use crate::gaussian::{CovMatrix, SymplecticMatrix};

/// Speed of light in nm/ps.
const SPEED_OF_LIGHT_NM_PER_PS: f64 = 2.997_924_58e5;
const PS2_PER_NS2: f64 = 1e6;

/// Source time constants and the dispersion applied in the dispersed basis.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SourceParams {
    sigma_coh: f64,
    sigma_cor: f64,
    k: f64,
}

impl SourceParams {
    /// Fails when a parameter is not positive, or when the covariance
    /// entries would overflow or underflow in f64.
    pub fn new(sigma_coh: f64, sigma_cor: f64, k: f64) -> Result<Self> {
        let p = SourceParams {
            sigma_coh: positive("sigma_coh", sigma_coh)?,
            sigma_cor: positive("sigma_cor", sigma_cor)?,
            k: positive("k", k)?,
        };
        let [dx, dxp, dp, ..] = p.entries();
        if ![dx, dxp, dp].iter().all(|e| e.is_normal()) || !p.alpha().is_normal() {
            return Err(Error::InvalidParameter {
                name: "k",
                value: k,
                reason: "covariance entries are not representable for this source",
            });
        }
        Ok(p)
    }

    /// `[diag_x, diag_xp, diag_p, cross_x, cross_xp, cross_p]`.
    fn entries(&self) -> [f64; 6] {
        let (u, v, k) = (self.u(), self.v(), self.k);
        let ruv = (u * v).sqrt();
        let (num, den) = (4.0 * k * k + u * v, 16.0 * k * k * ruv);
        [
            (u + v) / (4.0 * ruv),
            (u + v) / (8.0 * k),
            (u + v) * num / den,
            (u - v) / (4.0 * ruv),
            (u - v) / (8.0 * k),
            (u - v) * num / den,
        ]
    }

    pub fn sigma_coh(&self) -> f64 {
        self.sigma_coh
    }

    pub fn sigma_cor(&self) -> f64 {
        self.sigma_cor
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    /// Same source with a different dispersion setting.
    pub fn with_k(&self, k: f64) -> Result<Self> {
        SourceParams::new(self.sigma_coh, self.sigma_cor, k)
    }

    /// Set when the coherence time does not exceed the correlation time,
    /// which is outside the regime the source model is meant for.
    pub fn coherence_warning(&self) -> bool {
        self.sigma_coh <= self.sigma_cor
    }

    /// `u = 16 σ_coh²`.
    pub fn u(&self) -> f64 {
        16.0 * self.sigma_coh * self.sigma_coh
    }

    /// `v = 4 σ_cor²`.
    pub fn v(&self) -> f64 {
        4.0 * self.sigma_cor * self.sigma_cor
    }

    /// Scale `s` with `x̃ = T/s` and `p̃ = s·D`.
    pub fn quadrature_scale(&self) -> f64 {
        (2.0 * self.sigma_coh * self.sigma_cor).sqrt()
    }

    /// `α = 16 σ_coh² σ_cor² / k²`.
    pub fn alpha(&self) -> f64 {
        16.0 * (self.sigma_coh * self.sigma_cor / self.k).powi(2)
    }

    /// `β = σ_coh/(2σ_cor) + σ_cor/(8σ_coh)`.
    pub fn beta(&self) -> f64 {
        self.sigma_coh / (2.0 * self.sigma_cor) + self.sigma_cor / (8.0 * self.sigma_coh)
    }

    /// True in the low-dispersion regime `k ≤ 4 σ_coh σ_cor`.
    pub fn low_dispersion(&self) -> bool {
        self.k <= 4.0 * self.sigma_coh * self.sigma_cor
    }
}

/// Dispersion coefficient (ns²) of a dispersive element with group delay
/// slope `|D|` (ps/nm) at `wavelength` (nm): `k = |D| λ² / (π c)`.
pub fn k_from_group_delay(d_abs_ps_per_nm: f64, wavelength_nm: f64) -> Result<f64> {
    let d = positive("group_delay_ps_per_nm", d_abs_ps_per_nm)?;
    let lambda = positive("wavelength_nm", wavelength_nm)?;
    Ok(d * lambda * lambda / (std::f64::consts::PI * SPEED_OF_LIGHT_NM_PER_PS) / PS2_PER_NS2)
}

/// Inverse of [`k_from_group_delay`]: group delay slope in ps/nm.
pub fn group_delay_from_k(k_ns2: f64, wavelength_nm: f64) -> Result<f64> {
    let k = positive("k", k_ns2)?;
    let lambda = positive("wavelength_nm", wavelength_nm)?;
    Ok(k * PS2_PER_NS2 * std::f64::consts::PI * SPEED_OF_LIGHT_NM_PER_PS / (lambda * lambda))
}

/// Unitless covariance matrix of the biphoton state in `(x̃_A, p̃_A, x̃_B, p̃_B)`.
pub fn build_covariance(p: &SourceParams) -> CovMatrix {
    let [diag_x, diag_xp, diag_p, cross_x, cross_xp, cross_p] = p.entries();

    let aa = Matrix2::new(diag_x, diag_xp, diag_xp, diag_p);
    let ab = Matrix2::new(cross_x, -cross_xp, cross_xp, -cross_p);
    let bb = Matrix2::new(diag_x, -diag_xp, -diag_xp, diag_p);
    CovMatrix::from_blocks(&aa, &ab, &bb).expect("block form is symmetric by construction")
}

/// Local squeezing that brings the source state to two-mode squeezed vacuum.
#[derive(Clone, Debug, PartialEq)]
pub struct TmsvDecomposition {
    pub alpha: f64,
    pub beta: f64,
    /// `r = ½ ln(1 + α)`; natural log, unlike the entropies which use log₂.
    pub squeeze_r: f64,
    pub s1: Matrix2<f64>,
    pub s2: Matrix2<f64>,
}

impl TmsvDecomposition {
    /// `S₁ ⊕ S₂` acting on `(x̃_A, p̃_A, x̃_B, p̃_B)`.
    pub fn symplectic(&self) -> SymplecticMatrix {
        let a = SymplecticMatrix::from_matrix2(&self.s1).expect("det S1 = 1");
        let b = SymplecticMatrix::from_matrix2(&self.s2).expect("det S2 = 1");
        a.direct_sum(&b)
    }

    /// Eigenvalues `(1+α)^{1/2}` and `(1+α)^{-1/2}` shared by `S₁` and `S₂`.
    pub fn local_eigenvalues(&self) -> (f64, f64) {
        let e = (1.0 + self.alpha).sqrt();
        (e, 1.0 / e)
    }

    /// Off-diagonal magnitude of the target TMSV, `√(β² − 1/4)`.
    pub fn tmsv_correlation(&self) -> f64 {
        (self.beta * self.beta - 0.25).sqrt()
    }

    /// The TMSV covariance `[[βI, cZ], [cZ, βI]]`.
    pub fn tmsv_covariance(&self) -> CovMatrix {
        let c = self.tmsv_correlation();
        let z = Matrix2::new(c, 0.0, 0.0, -c);
        CovMatrix::from_blocks(
            &(Matrix2::identity() * self.beta),
            &z,
            &(Matrix2::identity() * self.beta),
        )
        .expect("symmetric")
    }
}

pub fn diagonalizing_symplectic(p: &SourceParams) -> TmsvDecomposition {
    let alpha = p.alpha();
    let up = (1.0 + alpha).sqrt();
    let shear = (1.0 + 1.0 / alpha).powf(-0.5);
    TmsvDecomposition {
        alpha,
        beta: p.beta(),
        squeeze_r: 0.5 * (1.0 + alpha).ln(),
        s1: Matrix2::new(up, -shear, 0.0, 1.0 / up),
        s2: Matrix2::new(up, shear, 0.0, 1.0 / up),
    }
}

/// Covariance of the recorded observables `(T_A, (k/2)D_A, T_B, (k/2)D_B)` in ns².
#[derive(Clone, Debug, PartialEq)]
pub struct MeasuredBasisCov(Matrix4<f64>);

/// Index of each recorded observable in [`MeasuredBasisCov`].
pub mod observable {
    pub const T_A: usize = 0;
    pub const D_A: usize = 1;
    pub const T_B: usize = 2;
    pub const D_B: usize = 3;
}

impl MeasuredBasisCov {
    pub fn new(m: Matrix4<f64>) -> Result<Self> {
        let scale = m.amax().max(f64::MIN_POSITIVE);
        let asymmetry = (m - m.transpose()).amax();
        if !asymmetry.is_finite() || asymmetry > 1e-12 * scale {
            return Err(Error::NotSymmetric { asymmetry });
        }
        if let Some(&d) = m.diagonal().iter().find(|d| d.is_nan() || **d <= 0.0) {
            return Err(Error::InvalidParameter {
                name: "measured variance",
                value: d,
                reason: "diagonal entries must be positive",
            });
        }
        Ok(MeasuredBasisCov((m + m.transpose()) * 0.5))
    }

    pub fn matrix(&self) -> &Matrix4<f64> {
        &self.0
    }

    /// `cᵀ M c`.
    pub fn variance_of(&self, coeffs: &[f64; 4]) -> f64 {
        let c = Vector4::from_row_slice(coeffs);
        (c.transpose() * self.0 * c)[(0, 0)]
    }

    /// Adds `σ²` to every diagonal entry: each detector timestamp carries
    /// independent Gaussian jitter in either basis.
    pub fn with_timing_jitter(&self, sigma: f64) -> MeasuredBasisCov {
        MeasuredBasisCov(self.0 + Matrix4::identity() * (sigma * sigma))
    }

    /// Removes a previously characterised jitter `σ²` from every diagonal entry.
    pub fn without_timing_jitter(&self, sigma: f64) -> MeasuredBasisCov {
        MeasuredBasisCov(self.0 - Matrix4::identity() * (sigma * sigma))
    }
}

/// `C Γ Cᵀ` with `C = diag(s, k/(2s), s, k/(2s))`.
pub fn measured_basis_cov(g: &CovMatrix, p: &SourceParams) -> Result<MeasuredBasisCov> {
    if g.dim() != 4 {
        return Err(Error::DimensionMismatch {
            expected: 4,
            got: g.dim(),
        });
    }
    let s = p.quadrature_scale();
    let q = p.k() / (2.0 * s);
    let scale = [s, q, s, q];
    let m: &DMatrix<f64> = g.matrix();
    MeasuredBasisCov::new(Matrix4::from_fn(|r, c| scale[r] * m[(r, c)] * scale[c]))
}

/// The eight sum/difference variances (ns²) of one Alice and one Bob observable.
///
/// The first four are the combinations checked during the protocol.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelatedVariances {
    pub t_a_minus_t_b: f64,
    pub d_a_plus_d_b: f64,
    pub t_a_plus_d_b: f64,
    pub t_b_minus_d_a: f64,
    pub t_a_plus_t_b: f64,
    pub d_a_minus_d_b: f64,
    pub t_a_minus_d_b: f64,
    pub t_b_plus_d_a: f64,
}

impl CorrelatedVariances {
    pub const LABELS: [&'static str; 8] = [
        "T_A-T_B", "D_A+D_B", "T_A+D_B", "T_B-D_A", "T_A+T_B", "D_A-D_B", "T_A-D_B", "T_B+D_A",
    ];

    /// Coefficients over `(T_A, (k/2)D_A, T_B, (k/2)D_B)` in [`Self::LABELS`] order.
    pub const COEFFICIENTS: [[f64; 4]; 8] = [
        [1.0, 0.0, -1.0, 0.0],
        [0.0, 1.0, 0.0, 1.0],
        [1.0, 0.0, 0.0, 1.0],
        [0.0, -1.0, 1.0, 0.0],
        [1.0, 0.0, 1.0, 0.0],
        [0.0, 1.0, 0.0, -1.0],
        [1.0, 0.0, 0.0, -1.0],
        [0.0, 1.0, 1.0, 0.0],
    ];

    pub fn from_array(a: [f64; 8]) -> Self {
        CorrelatedVariances {
            t_a_minus_t_b: a[0],
            d_a_plus_d_b: a[1],
            t_a_plus_d_b: a[2],
            t_b_minus_d_a: a[3],
            t_a_plus_t_b: a[4],
            d_a_minus_d_b: a[5],
            t_a_minus_d_b: a[6],
            t_b_plus_d_a: a[7],
        }
    }

    pub fn as_array(&self) -> [f64; 8] {
        [
            self.t_a_minus_t_b,
            self.d_a_plus_d_b,
            self.t_a_plus_d_b,
            self.t_b_minus_d_a,
            self.t_a_plus_t_b,
            self.d_a_minus_d_b,
            self.t_a_minus_d_b,
            self.t_b_plus_d_a,
        ]
    }

    /// The four protocol-checked combinations.
    pub fn measured(&self) -> [f64; 4] {
        [
            self.t_a_minus_t_b,
            self.d_a_plus_d_b,
            self.t_a_plus_d_b,
            self.t_b_minus_d_a,
        ]
    }

    /// Element-wise `self / before`.
    pub fn ratios(&self, before: &CorrelatedVariances) -> [f64; 8] {
        let a = self.as_array();
        let b = before.as_array();
        std::array::from_fn(|i| a[i] / b[i])
    }
}

pub fn correlated_variances(m: &MeasuredBasisCov) -> CorrelatedVariances {
    CorrelatedVariances::from_array(CorrelatedVariances::COEFFICIENTS.map(|c| m.variance_of(&c)))
}
