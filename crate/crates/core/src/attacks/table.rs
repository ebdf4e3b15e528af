use crate::source::SourceParams;

/// Closed-form `Var(x′)/Var(x)` for all eight correlated variances, in
/// [`CorrelatedVariances::LABELS`](crate::source::CorrelatedVariances::LABELS) order.
///
/// Holds for both the block-scaling attack and the alternate channel.
pub fn delta_prime_table(p: &SourceParams, eta: f64, xi: f64) -> [f64; 8] {
    let c2 = p.sigma_coh().powi(2);
    let r2 = p.sigma_cor().powi(2);
    let k2 = p.k() * p.k();

    let mixed_den = 64.0 * c2 * r2 * r2 + k2 * (4.0 * c2 + r2);
    let anti_den = k2 * (4.0 * c2 + r2) + 256.0 * c2 * c2 * r2;
    let anti_common = 64.0 * c2 * r2 * (r2 * (eta + xi) - 4.0 * (eta - 1.0) * c2);
    let lossy_k = k2 * ((4.0 - 8.0 * eta) * c2 + (1.0 + 2.0 * eta + 4.0 * xi) * r2);
    let sum = 1.0 - eta + (eta + xi) * r2 / (4.0 * c2);

    [
        1.0 + xi,
        1.0 + xi,
        (64.0 * c2 * r2 * r2 * (1.0 + xi) + lossy_k) / mixed_den,
        (64.0 * (1.0 + xi) * c2 * r2 * r2 + k2 * (4.0 * c2 + r2)) / mixed_den,
        sum,
        sum,
        (anti_common + lossy_k) / anti_den,
        (anti_common + k2 * (4.0 * c2 + r2)) / anti_den,
    ]
}
