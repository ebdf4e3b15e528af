//! Covariance-matrix algebra for zero-mean Gaussian states.
//!
//! Quadratures are ordered `(x1, p1, ..., xN, pN)` and the vacuum variance
//! is 1/2, so a state is physical iff `Γ + (i/2)Ω ≥ 0`. Entropies are in bits.

use nalgebra::{DMatrix, Matrix2};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Variance of either vacuum quadrature.
pub const VACUUM_VARIANCE: f64 = 0.5;

/// Minimal eigenvalue of `Γ + (i/2)Ω` still accepted as physical.
pub const PHYSICALITY_TOL: f64 = 1e-10;

/// Rounding allowance per unit of the largest entry, in ulps.
const PHYSICALITY_ULPS: f64 = 64.0;

const SYMMETRY_RTOL: f64 = 1e-12;
const SYMPLECTIC_TOL: f64 = 1e-10;
const PINV_RTOL: f64 = 1e-12;
const PURE_NU_EPS: f64 = 1e-12;

/// Which quadrature a homodyne detector measures.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Quadrature {
    X,
    P,
}

impl Quadrature {
    fn offset(self) -> usize {
        match self {
            Quadrature::X => 0,
            Quadrature::P => 1,
        }
    }
}

/// Symmetric `2N×2N` covariance matrix of an `N`-mode Gaussian state.
///
/// Alongside the entries it tracks the largest magnitude met while
/// computing them, which sets the rounding allowance of the physicality
/// check. Equality compares entries only.
#[derive(Clone, Debug)]
pub struct CovMatrix(DMatrix<f64>, f64);

impl PartialEq for CovMatrix {
    fn eq(&self, other: &Self) -> bool {
        self.0 == other.0
    }
}

/// Real `2N×2N` matrix satisfying `S Ω Sᵀ = Ω`.
#[derive(Clone, Debug, PartialEq)]
pub struct SymplecticMatrix(DMatrix<f64>);

/// The symplectic form `Ω = ⊕ [[0, 1], [-1, 0]]` on `n_modes` modes.
pub fn symplectic_form(n_modes: usize) -> SymplecticMatrix {
    SymplecticMatrix(omega(n_modes))
}

fn omega(n_modes: usize) -> DMatrix<f64> {
    let mut o = DMatrix::zeros(2 * n_modes, 2 * n_modes);
    for i in 0..n_modes {
        o[(2 * i, 2 * i + 1)] = 1.0;
        o[(2 * i + 1, 2 * i)] = -1.0;
    }
    o
}

fn check_shape(m: &DMatrix<f64>) -> Result<()> {
    let (rows, cols) = m.shape();
    if rows != cols || rows == 0 || rows % 2 != 0 {
        return Err(Error::BadShape { rows, cols });
    }
    Ok(())
}

fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Smallest eigenvalue of the Hermitian matrix `re + i·im`.
pub(crate) fn hermitian_min_eigenvalue(re: &DMatrix<f64>, im: &DMatrix<f64>) -> f64 {
    let n = re.nrows();
    let h = DMatrix::from_fn(n, n, |r, c| Complex64::new(re[(r, c)], im[(r, c)]));
    h.symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// Entropy contribution of one symplectic eigenvalue, in bits.
pub fn mode_entropy(nu: f64) -> f64 {
    if nu - 0.5 < PURE_NU_EPS {
        return 0.0;
    }
    let plus = nu + 0.5;
    let minus = nu - 0.5;
    plus * plus.log2() - minus * minus.log2()
}

impl CovMatrix {
    /// Wraps a matrix after checking shape, finiteness and symmetry.
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        check_shape(&m)?;
        if m.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical(
                "covariance matrix has non-finite entries".into(),
            ));
        }
        let scale = m.amax().max(1.0);
        let asymmetry = (&m - m.transpose()).amax();
        if asymmetry > SYMMETRY_RTOL * scale {
            return Err(Error::NotSymmetric { asymmetry });
        }
        Ok(CovMatrix::derived(symmetrize(&m), 0.0))
    }

    fn derived(m: DMatrix<f64>, inherited_scale: f64) -> Self {
        let scale = m.amax().max(inherited_scale);
        CovMatrix(m, scale)
    }

    /// Two-mode state from its 2×2 blocks `[[aa, ab], [abᵀ, bb]]`.
    pub fn from_blocks(aa: &Matrix2<f64>, ab: &Matrix2<f64>, bb: &Matrix2<f64>) -> Result<Self> {
        let mut m = DMatrix::zeros(4, 4);
        for r in 0..2 {
            for c in 0..2 {
                m[(r, c)] = aa[(r, c)];
                m[(r, c + 2)] = ab[(r, c)];
                m[(c + 2, r)] = ab[(r, c)];
                m[(r + 2, c + 2)] = bb[(r, c)];
            }
        }
        CovMatrix::new(m)
    }

    pub fn vacuum(n_modes: usize) -> Self {
        CovMatrix::derived(
            DMatrix::identity(2 * n_modes, 2 * n_modes) * VACUUM_VARIANCE,
            0.0,
        )
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn n_modes(&self) -> usize {
        self.0.nrows() / 2
    }

    /// The 2×2 block coupling `row_mode` to `col_mode`.
    pub fn block(&self, row_mode: usize, col_mode: usize) -> Matrix2<f64> {
        let r = 2 * row_mode;
        let c = 2 * col_mode;
        Matrix2::new(
            self.0[(r, c)],
            self.0[(r, c + 1)],
            self.0[(r + 1, c)],
            self.0[(r + 1, c + 1)],
        )
    }

    /// Minimal eigenvalue of `Γ + (i/2)Ω`.
    pub fn uncertainty_min_eigenvalue(&self) -> f64 {
        let im = omega(self.n_modes()) * 0.5;
        hermitian_min_eigenvalue(&self.0, &im)
    }

    /// [`PHYSICALITY_TOL`], widened to the rounding error of the largest
    /// magnitude that entered the entries.
    pub fn physicality_tolerance(&self) -> f64 {
        PHYSICALITY_TOL.max(PHYSICALITY_ULPS * f64::EPSILON * self.1)
    }

    pub fn is_physical(&self) -> bool {
        self.uncertainty_min_eigenvalue() >= -self.physicality_tolerance()
    }

    pub fn ensure_physical(&self) -> Result<()> {
        let min_eigenvalue = self.uncertainty_min_eigenvalue();
        if min_eigenvalue >= -self.physicality_tolerance() {
            Ok(())
        } else {
            Err(Error::Unphysical { min_eigenvalue })
        }
    }

    /// Symplectic spectrum in descending order.
    ///
    /// Each mode is first brought to a locally isotropic form by a local
    /// symplectic, which keeps the working matrix well conditioned for
    /// strongly squeezed inputs. The spectrum is then the set of singular
    /// values of `LᵀΩL` for `Γ = LLᵀ`, each appearing twice.
    pub fn symplectic_eigenvalues(&self) -> Result<Vec<f64>> {
        self.ensure_physical()?;
        let n = self.n_modes();
        let g = self
            .local_normalizer()
            .map_or_else(|| self.0.clone(), |s| &s * &self.0 * s.transpose());
        let g = symmetrize(&g);
        let factor = match g.clone().cholesky() {
            Some(ch) => ch.l(),
            None => {
                let eig = g.symmetric_eigen();
                let sqrt_vals = eig.eigenvalues.map(|v| v.max(0.0).sqrt());
                &eig.eigenvectors * DMatrix::from_diagonal(&sqrt_vals)
            }
        };
        let k = factor.transpose() * omega(n) * &factor;
        let mut sv: Vec<f64> = (k.transpose() * &k)
            .symmetric_eigenvalues()
            .iter()
            .map(|v| v.max(0.0).sqrt())
            .collect();
        if sv.len() != 2 * n {
            return Err(Error::Numerical("singular value count mismatch".into()));
        }
        sv.sort_by(|a, b| b.total_cmp(a));
        Ok(sv.chunks(2).map(|p| 0.5 * (p[0] + p[1])).collect())
    }

    /// `⊕ (A_i/√det A_i)^(−1/2)` over the diagonal blocks `A_i`, or `None`
    /// if some block is not positive definite.
    fn local_normalizer(&self) -> Option<DMatrix<f64>> {
        let n = self.n_modes();
        let mut s = DMatrix::zeros(2 * n, 2 * n);
        for i in 0..n {
            let a = self.block(i, i);
            let det = a.determinant();
            if !(det > 0.0 && a[(0, 0)] > 0.0) {
                return None;
            }
            let m = a / det.sqrt();
            // For det M = 1, M⁻¹ = adj M and M^(−1/2) = (M⁻¹ + I)/√(tr M + 2).
            let inv = Matrix2::new(m[(1, 1)], -m[(0, 1)], -m[(1, 0)], m[(0, 0)]);
            let root = (inv + Matrix2::identity()) / (m.trace() + 2.0).sqrt();
            s.view_mut((2 * i, 2 * i), (2, 2)).copy_from(&root);
        }
        Some(s)
    }

    /// von Neumann entropy in bits.
    pub fn von_neumann_entropy(&self) -> Result<f64> {
        Ok(self
            .symplectic_eigenvalues()?
            .into_iter()
            .map(mode_entropy)
            .sum())
    }

    /// `S Γ Sᵀ`.
    pub fn transformed(&self, s: &SymplecticMatrix) -> Result<CovMatrix> {
        if s.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: s.dim(),
            });
        }
        let out = &s.0 * &self.0 * s.0.transpose();
        let s_max = s.0.amax();
        Ok(CovMatrix::derived(symmetrize(&out), s_max * s_max * self.1))
    }

    /// Principal block for the listed modes, in the listed order.
    pub fn submatrix(&self, modes: &[usize]) -> Result<CovMatrix> {
        let n = self.n_modes();
        if modes.is_empty() {
            return Err(Error::BadShape { rows: 0, cols: 0 });
        }
        if let Some(&index) = modes.iter().find(|&&m| m >= n) {
            return Err(Error::ModeOutOfRange { index, modes: n });
        }
        let idx: Vec<usize> = modes.iter().flat_map(|&m| [2 * m, 2 * m + 1]).collect();
        Ok(CovMatrix::derived(self.select(&idx, &idx), self.1))
    }

    fn select(&self, rows: &[usize], cols: &[usize]) -> DMatrix<f64> {
        DMatrix::from_fn(rows.len(), cols.len(), |r, c| self.0[(rows[r], cols[c])])
    }

    /// Covariance of the remaining modes after a homodyne measurement of
    /// `quadrature` on `measured_mode`.
    ///
    /// The conditional covariance does not depend on the outcome.
    pub fn condition_on_homodyne(
        &self,
        measured_mode: usize,
        quadrature: Quadrature,
    ) -> Result<CovMatrix> {
        let n = self.n_modes();
        if measured_mode >= n {
            return Err(Error::ModeOutOfRange {
                index: measured_mode,
                modes: n,
            });
        }
        if n < 2 {
            return Err(Error::DimensionMismatch {
                expected: 2,
                got: 1,
            });
        }
        let measured = [2 * measured_mode, 2 * measured_mode + 1];
        let rest: Vec<usize> = (0..2 * n).filter(|i| !measured.contains(i)).collect();
        let a = self.select(&measured, &measured);
        let cross = self.select(&rest, &measured);
        let b = self.select(&rest, &rest);

        let mut projected = DMatrix::zeros(2, 2);
        let q = quadrature.offset();
        projected[(q, q)] = a[(q, q)];
        let max_sv = projected.amax();
        let pinv = if max_sv > 0.0 {
            projected
                .pseudo_inverse(PINV_RTOL * max_sv)
                .map_err(|e| Error::Numerical(e.to_string()))?
        } else {
            DMatrix::zeros(2, 2)
        };
        let out = b - &cross * pinv * cross.transpose();
        Ok(CovMatrix::derived(symmetrize(&out), self.1))
    }

    /// Block-diagonal direct sum `self ⊕ other`.
    pub fn direct_sum(&self, other: &CovMatrix) -> CovMatrix {
        CovMatrix::derived(block_diag(&self.0, &other.0), self.1.max(other.1))
    }
}

fn block_diag(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows() + b.nrows();
    let mut m = DMatrix::zeros(n, n);
    m.view_mut((0, 0), a.shape()).copy_from(a);
    m.view_mut((a.nrows(), a.nrows()), b.shape()).copy_from(b);
    m
}

impl SymplecticMatrix {
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        check_shape(&m)?;
        let o = omega(m.nrows() / 2);
        let deviation = (&m * &o * m.transpose() - &o).amax();
        if !deviation.is_finite() || deviation > SYMPLECTIC_TOL {
            return Err(Error::NotSymplectic { deviation });
        }
        Ok(SymplecticMatrix(m))
    }

    pub fn identity(n_modes: usize) -> Self {
        SymplecticMatrix(DMatrix::identity(2 * n_modes, 2 * n_modes))
    }

    /// Single-mode phase rotation by `theta`.
    pub fn rotation(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        SymplecticMatrix(DMatrix::from_row_slice(2, 2, &[c, s, -s, c]))
    }

    /// Single-mode squeezer `diag(e^{-r}, e^{r})`.
    pub fn squeezer(r: f64) -> Self {
        SymplecticMatrix(DMatrix::from_row_slice(
            2,
            2,
            &[(-r).exp(), 0.0, 0.0, r.exp()],
        ))
    }

    /// Two-mode beam splitter with mixing angle `theta`.
    pub fn beam_splitter(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        let mut m = DMatrix::zeros(4, 4);
        for i in 0..2 {
            m[(i, i)] = c;
            m[(i + 2, i + 2)] = c;
            m[(i, i + 2)] = s;
            m[(i + 2, i)] = -s;
        }
        SymplecticMatrix(m)
    }

    /// Wraps a 2×2 matrix, checking `det = 1` via the symplectic condition.
    pub fn from_matrix2(m: &Matrix2<f64>) -> Result<Self> {
        SymplecticMatrix::new(DMatrix::from_row_slice(
            2,
            2,
            &[m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]],
        ))
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn n_modes(&self) -> usize {
        self.0.nrows() / 2
    }

    pub fn direct_sum(&self, other: &SymplecticMatrix) -> SymplecticMatrix {
        SymplecticMatrix(block_diag(&self.0, &other.0))
    }

    /// `S⁻¹ = -Ω Sᵀ Ω`.
    pub fn inverse(&self) -> SymplecticMatrix {
        let o = omega(self.n_modes());
        SymplecticMatrix(-(&o * self.0.transpose() * &o))
    }

    /// Matrix product `self · other`.
    pub fn compose(&self, other: &SymplecticMatrix) -> Result<SymplecticMatrix> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: other.dim(),
            });
        }
        Ok(SymplecticMatrix(&self.0 * &other.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn tmsv(beta: f64, c: f64) -> CovMatrix {
        let z = Matrix2::new(1.0, 0.0, 0.0, -1.0);
        CovMatrix::from_blocks(
            &(Matrix2::identity() * beta),
            &(z * c),
            &(Matrix2::identity() * beta),
        )
        .unwrap()
    }

    /// ν±² = (Δ ± √(Δ² − 4 det Γ))/2 with Δ = det A + det B + 2 det C.
    fn two_mode_invariants(g: &CovMatrix) -> [f64; 2] {
        let delta = g.block(0, 0).determinant()
            + g.block(1, 1).determinant()
            + 2.0 * g.block(0, 1).determinant();
        let det = g.matrix().determinant();
        let disc = (delta * delta - 4.0 * det).max(0.0).sqrt();
        [((delta + disc) / 2.0).sqrt(), ((delta - disc) / 2.0).sqrt()]
    }

    #[test]
    fn symplectic_form_structure() {
        let o1 = symplectic_form(1);
        assert_eq!(
            o1.matrix(),
            &DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0])
        );
        let o2 = symplectic_form(2);
        assert_eq!(o2.matrix(), &block_diag(o1.matrix(), o1.matrix()));
        assert_eq!(o2.matrix().transpose(), -o2.matrix());
        for n in 1..5 {
            let o = symplectic_form(n);
            let sq = o.matrix() * o.matrix();
            assert_eq!(sq, -DMatrix::identity(2 * n, 2 * n));
        }
    }

    #[test]
    fn vacuum_and_subvacuum() {
        assert!(CovMatrix::vacuum(1).is_physical());
        assert!(CovMatrix::vacuum(3).is_physical());
        let sub = CovMatrix::new(DMatrix::identity(2, 2) * 0.25).unwrap();
        assert!(!sub.is_physical());
        assert!(matches!(
            sub.symplectic_eigenvalues(),
            Err(Error::Unphysical { .. })
        ));
        assert!(matches!(
            sub.von_neumann_entropy(),
            Err(Error::Unphysical { .. })
        ));
    }

    #[test]
    fn rejects_asymmetric_and_odd_inputs() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.2, 0.1, 1.0]);
        assert!(matches!(CovMatrix::new(m), Err(Error::NotSymmetric { .. })));
        assert!(matches!(
            CovMatrix::new(DMatrix::identity(3, 3)),
            Err(Error::BadShape { .. })
        ));
        let nan = DMatrix::from_row_slice(2, 2, &[f64::NAN, 0.0, 0.0, 1.0]);
        assert!(CovMatrix::new(nan).is_err());
    }

    #[test]
    fn vacuum_spectrum_and_entropy() {
        let nu = CovMatrix::vacuum(1).symplectic_eigenvalues().unwrap();
        assert_eq!(nu.len(), 1);
        assert_abs_diff_eq!(nu[0], 0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(
            CovMatrix::vacuum(2).von_neumann_entropy().unwrap(),
            0.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn thermal_mode_entropy() {
        // ν = 3/2: g = 2·log2(2) − 1·log2(1) = 2 bits.
        let g = CovMatrix::new(DMatrix::identity(2, 2) * 1.5).unwrap();
        assert_abs_diff_eq!(g.von_neumann_entropy().unwrap(), 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(mode_entropy(1.5), 2.0, epsilon = 1e-15);
        assert_eq!(mode_entropy(0.5), 0.0);
        assert_eq!(mode_entropy(0.5 + 1e-13), 0.0);
    }

    #[test]
    fn tmsv_spectrum_matches_invariant_formula() {
        // β = 2, c = √3: β² − c² = 1 so both symplectic eigenvalues are 1.
        let g = tmsv(2.0, 3f64.sqrt());
        let nu = g.symplectic_eigenvalues().unwrap();
        let oracle = two_mode_invariants(&g);
        assert_abs_diff_eq!(oracle[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(oracle[1], 1.0, epsilon = 1e-12);
        for (a, b) in nu.iter().zip(oracle) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-12);
        }
        // Pure TMSV in the 1/2 convention: c = √(β² − 1/4).
        let pure = tmsv(2.0, (4.0f64 - 0.25).sqrt());
        for v in pure.symplectic_eigenvalues().unwrap() {
            assert_abs_diff_eq!(v, 0.5, epsilon = 1e-12);
        }
        assert!(pure.von_neumann_entropy().unwrap() < 1e-9);
    }

    #[test]
    fn spectrum_is_descending() {
        let thermal = CovMatrix::new(DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
            0.5, 0.5, 2.5, 2.5, 1.0, 1.0,
        ])))
        .unwrap();
        let nu = thermal.symplectic_eigenvalues().unwrap();
        assert_abs_diff_eq!(nu[0], 2.5, epsilon = 1e-12);
        assert_abs_diff_eq!(nu[1], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(nu[2], 0.5, epsilon = 1e-12);
    }

    #[test]
    fn entropy_additive_over_direct_sums() {
        let a = CovMatrix::new(DMatrix::identity(2, 2) * 1.5).unwrap();
        let b = tmsv(2.0, 1.0);
        let joint = a.direct_sum(&b);
        assert_abs_diff_eq!(
            joint.von_neumann_entropy().unwrap(),
            a.von_neumann_entropy().unwrap() + b.von_neumann_entropy().unwrap(),
            epsilon = 1e-10
        );
    }

    #[test]
    fn identity_transform_is_noop() {
        let g = tmsv(2.0, 1.2);
        assert_eq!(g.transformed(&SymplecticMatrix::identity(2)).unwrap(), g);
        assert!(matches!(
            g.transformed(&SymplecticMatrix::identity(1)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn symplectic_validation() {
        assert!(
            SymplecticMatrix::new(DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 1.0])).is_err()
        );
        let s = SymplecticMatrix::squeezer(0.7)
            .compose(&SymplecticMatrix::rotation(0.3))
            .unwrap();
        assert!(SymplecticMatrix::new(s.matrix().clone()).is_ok());
        let id = s.compose(&s.inverse()).unwrap();
        assert!((id.matrix() - DMatrix::identity(2, 2)).amax() < 1e-12);
        assert!(
            SymplecticMatrix::new(SymplecticMatrix::beam_splitter(0.4).matrix().clone()).is_ok()
        );
        assert!(SymplecticMatrix::new(symplectic_form(3).matrix().clone()).is_ok());
    }

    #[test]
    fn homodyne_on_product_state_leaves_rest_untouched() {
        let a = CovMatrix::new(DMatrix::from_row_slice(2, 2, &[1.0, 0.3, 0.3, 2.0])).unwrap();
        let b = CovMatrix::new(DMatrix::from_row_slice(2, 2, &[0.8, -0.1, -0.1, 0.9])).unwrap();
        let joint = a.direct_sum(&b);
        for q in [Quadrature::X, Quadrature::P] {
            assert_eq!(joint.condition_on_homodyne(0, q).unwrap(), b);
            assert_eq!(joint.condition_on_homodyne(1, q).unwrap(), a);
        }
    }

    #[test]
    fn homodyne_on_tmsv() {
        let beta: f64 = 2.0;
        let c = 3f64.sqrt();
        let g = tmsv(beta, c);
        let bx = g.condition_on_homodyne(0, Quadrature::X).unwrap();
        // Bob: Var(x) = β − c²/β, Var(p) untouched.
        assert_abs_diff_eq!(bx.matrix()[(0, 0)], beta - 3.0 / beta, epsilon = 1e-14);
        assert_abs_diff_eq!(bx.matrix()[(0, 0)], 0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(bx.matrix()[(1, 1)], beta, epsilon = 1e-14);
        assert_abs_diff_eq!(bx.matrix()[(0, 1)], 0.0, epsilon = 1e-14);
        let bp = g.condition_on_homodyne(0, Quadrature::P).unwrap();
        assert_abs_diff_eq!(bp.matrix()[(1, 1)], 0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(bp.matrix()[(0, 0)], beta, epsilon = 1e-14);
    }

    #[test]
    fn homodyne_index_errors() {
        let g = tmsv(2.0, 1.0);
        assert!(matches!(
            g.condition_on_homodyne(2, Quadrature::X),
            Err(Error::ModeOutOfRange { index: 2, modes: 2 })
        ));
        assert!(CovMatrix::vacuum(1)
            .condition_on_homodyne(0, Quadrature::X)
            .is_err());
    }

    #[test]
    fn submatrix_extraction() {
        let g = tmsv(2.0, 1.0).direct_sum(&CovMatrix::vacuum(1));
        assert_eq!(g.submatrix(&[0, 1, 2]).unwrap(), g);
        assert_eq!(g.submatrix(&[2]).unwrap(), CovMatrix::vacuum(1));
        assert!(matches!(
            g.submatrix(&[3]),
            Err(Error::ModeOutOfRange { .. })
        ));
        let swapped = g.submatrix(&[1, 0]).unwrap();
        assert_eq!(swapped.block(0, 0), g.block(1, 1));
        assert_eq!(swapped.block(0, 1), g.block(1, 0));
        assert_eq!(swapped.submatrix(&[1]).unwrap(), g.submatrix(&[0]).unwrap());
    }

    #[test]
    fn physicality_tolerance_tracks_largest_input() {
        assert_eq!(
            CovMatrix::vacuum(1).physicality_tolerance(),
            PHYSICALITY_TOL
        );
        let squeeze =
            SymplecticMatrix::squeezer(10.0).direct_sum(&SymplecticMatrix::squeezer(-10.0));
        let s = SymplecticMatrix::beam_splitter(std::f64::consts::FRAC_PI_4)
            .compose(&squeeze)
            .unwrap();
        let big = CovMatrix::vacuum(2).transformed(&s).unwrap();
        let tol = big.physicality_tolerance();
        assert!(tol > 1e-7 && tol < 1e-5, "{tol}");
        let conditioned = big.condition_on_homodyne(0, Quadrature::X).unwrap();
        assert_eq!(conditioned.physicality_tolerance(), tol);
        assert!(conditioned.is_physical());
    }
}
