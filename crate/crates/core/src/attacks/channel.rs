use nalgebra::{DMatrix, Matrix2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::{hermitian_min_eigenvalue, CovMatrix, PHYSICALITY_TOL};

/// One-mode Gaussian channel `V → T V Tᵀ + N` (zero displacement).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(into = "ChannelRows", try_from = "ChannelRows")]
pub struct GaussianChannel {
    t: Matrix2<f64>,
    n: Matrix2<f64>,
}

/// Row-major serialized form.
#[derive(Serialize, Deserialize)]
struct ChannelRows {
    t: [[f64; 2]; 2],
    n: [[f64; 2]; 2],
}

impl From<GaussianChannel> for ChannelRows {
    fn from(c: GaussianChannel) -> Self {
        let rows = |m: &Matrix2<f64>| [[m[(0, 0)], m[(0, 1)]], [m[(1, 0)], m[(1, 1)]]];
        ChannelRows {
            t: rows(&c.t),
            n: rows(&c.n),
        }
    }
}

impl TryFrom<ChannelRows> for GaussianChannel {
    type Error = Error;

    fn try_from(r: ChannelRows) -> Result<Self> {
        let m = |a: [[f64; 2]; 2]| Matrix2::new(a[0][0], a[0][1], a[1][0], a[1][1]);
        GaussianChannel::new(m(r.t), m(r.n))
    }
}

impl GaussianChannel {
    /// Builds a channel; `n` must be symmetric. Positivity is not enforced here.
    pub fn new(t: Matrix2<f64>, n: Matrix2<f64>) -> Result<Self> {
        if t.iter().chain(n.iter()).any(|v| !v.is_finite()) {
            return Err(Error::Numerical("channel has non-finite entries".into()));
        }
        let asymmetry = (n[(0, 1)] - n[(1, 0)]).abs();
        if asymmetry > 1e-12 * n.amax().max(1.0) {
            return Err(Error::NotSymmetric { asymmetry });
        }
        let off = 0.5 * (n[(0, 1)] + n[(1, 0)]);
        Ok(GaussianChannel {
            t,
            n: Matrix2::new(n[(0, 0)], off, off, n[(1, 1)]),
        })
    }

    pub fn identity() -> Self {
        GaussianChannel {
            t: Matrix2::identity(),
            n: Matrix2::zeros(),
        }
    }

    pub fn t(&self) -> &Matrix2<f64> {
        &self.t
    }

    pub fn n(&self) -> &Matrix2<f64> {
        &self.n
    }

    /// `[T00, T01, T10, T11, Nxx, Nxp, Npp]`.
    pub fn to_params(&self) -> [f64; 7] {
        [
            self.t[(0, 0)],
            self.t[(0, 1)],
            self.t[(1, 0)],
            self.t[(1, 1)],
            self.n[(0, 0)],
            self.n[(0, 1)],
            self.n[(1, 1)],
        ]
    }

    pub fn from_params(x: &[f64]) -> Result<Self> {
        if x.len() != 7 {
            return Err(Error::DimensionMismatch {
                expected: 7,
                got: x.len(),
            });
        }
        GaussianChannel::new(
            Matrix2::new(x[0], x[1], x[2], x[3]),
            Matrix2::new(x[4], x[5], x[5], x[6]),
        )
    }

    /// Minimal eigenvalue of `N + (i/2)Ω − (i/2) T Ω Tᵀ`.
    pub fn positivity_min_eigenvalue(&self) -> f64 {
        // T Ω Tᵀ = det(T) Ω for a single mode.
        let w = 0.5 * (1.0 - self.t.determinant());
        let re = DMatrix::from_row_slice(2, 2, self.n.as_slice());
        let im = DMatrix::from_row_slice(2, 2, &[0.0, w, -w, 0.0]);
        hermitian_min_eigenvalue(&re, &im)
    }

    pub fn is_physical(&self) -> bool {
        self.positivity_min_eigenvalue() >= -PHYSICALITY_TOL
    }

    pub fn ensure_physical(&self) -> Result<()> {
        let min_eigenvalue = self.positivity_min_eigenvalue();
        if min_eigenvalue >= -PHYSICALITY_TOL {
            Ok(())
        } else {
            Err(Error::UnphysicalChannel { min_eigenvalue })
        }
    }

    /// Image of a single-mode covariance block.
    pub fn map_block(&self, v: &Matrix2<f64>) -> Matrix2<f64> {
        self.t * v * self.t.transpose() + self.n
    }
}

/// `(I ⊕ T) Γ (I ⊕ T)ᵀ + (0 ⊕ N)` on a two-mode state; the channel must be physical.
pub fn apply_channel_bob(g: &CovMatrix, ch: &GaussianChannel) -> Result<CovMatrix> {
    ch.ensure_physical()?;
    apply_unchecked(g, ch)
}

pub(crate) fn apply_unchecked(g: &CovMatrix, ch: &GaussianChannel) -> Result<CovMatrix> {
    if g.dim() != 4 {
        return Err(Error::DimensionMismatch {
            expected: 4,
            got: g.dim(),
        });
    }
    let aa = g.block(0, 0);
    let ab = g.block(0, 1) * ch.t.transpose();
    let bb = ch.map_block(&g.block(1, 1));
    CovMatrix::from_blocks(&aa, &ab, &bb)
}
