//! Fixtures shared by the criterion benches.

use doqkd_core::{
    build_covariance, measured_basis_cov, CovMatrix, MeasuredBasisCov, MowerAttack,
    ObservedVariances, SourceParams,
};

/// Wide-correlation source at low dispersion.
pub fn wide_source() -> SourceParams {
    SourceParams::new(1.92, 0.030, 0.0039).expect("valid source")
}

/// Narrow-correlation source used for the channel search.
pub fn narrow_source() -> SourceParams {
    SourceParams::new(1.49, 0.0028, 0.0039).expect("valid source")
}

pub fn source_state() -> CovMatrix {
    build_covariance(&wide_source())
}

/// The wide source after an entangling-cloner attack.
pub fn attacked_state() -> CovMatrix {
    doqkd_core::Attack::Mower(MowerAttack::new(6.3e-5, 0.78).expect("valid attack"))
        .apply(&wide_source())
        .expect("physical attack")
}

pub fn measured() -> MeasuredBasisCov {
    let p = wide_source();
    measured_basis_cov(&attacked_state(), &p).expect("measured covariance")
}

pub fn observed() -> ObservedVariances {
    ObservedVariances::from_mower(&narrow_source(), 0.0, 3.74).expect("observed variances")
}
