//! Shot-level sampling of measurement outcomes from the Gaussian model.
//!
//! Samples are classical timing outcomes in ns, `(T, (k/2)D)` per party.
//! Shots are generated in fixed-size batches; batch `b` of basis pair `p`
//! draws from ChaCha20 stream `(p << 32) | b` under the configured seed, so
//! the output is bit-identical however batches are scheduled.

use nalgebra::{Matrix2, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, FisherSnedecor};

use crate::error::{Error, Result};
use crate::jitter::JitterSpec;
use crate::source::{observable, CorrelatedVariances, MeasuredBasisCov};

/// Generator recorded in simulation metadata.
pub const RNG_ALGORITHM: &str = "ChaCha20 (rand_chacha 0.9), stream = basis << 32 | batch";
pub const BATCH_SIZE: usize = 1 << 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BasisPair {
    TT,
    TD,
    DT,
    DD,
}

impl BasisPair {
    pub const ALL: [BasisPair; 4] = [BasisPair::TT, BasisPair::TD, BasisPair::DT, BasisPair::DD];

    /// Indices of Alice's and Bob's observables in [`MeasuredBasisCov`].
    pub fn indices(self) -> (usize, usize) {
        use observable::*;
        match self {
            BasisPair::TT => (T_A, T_B),
            BasisPair::TD => (T_A, D_B),
            BasisPair::DT => (D_A, T_B),
            BasisPair::DD => (D_A, D_B),
        }
    }

    fn stream_id(self) -> u64 {
        self as u64
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub shots: usize,
    pub seed: u64,
    pub basis_pair: BasisPair,
    #[serde(default)]
    pub jitter: Option<JitterSpec>,
}

impl SimConfig {
    pub fn new(shots: usize, seed: u64, basis_pair: BasisPair) -> Result<Self> {
        if shots < 2 {
            return Err(Error::InsufficientSamples {
                needed: 2,
                got: shots,
            });
        }
        Ok(SimConfig {
            shots,
            seed,
            basis_pair,
            jitter: None,
        })
    }

    pub fn with_jitter(mut self, jitter: JitterSpec) -> Self {
        self.jitter = Some(jitter);
        self
    }
}

/// A factor `L` with `L Lᵀ = cov`; Cholesky, or an eigen factor when
/// `cov` is singular to rounding.
fn factor(cov: &Matrix2<f64>) -> Result<Matrix2<f64>> {
    if let Some(ch) = cov.cholesky() {
        return Ok(ch.l());
    }
    let eig = SymmetricEigen::new(*cov);
    let tol = 1e-12 * cov.amax().max(f64::MIN_POSITIVE);
    let min = eig.eigenvalues.min();
    if min < -tol || !min.is_finite() {
        return Err(Error::NotPositiveSemidefinite {
            min_eigenvalue: min,
        });
    }
    let root = eig.eigenvalues.map(|v| v.max(0.0).sqrt());
    Ok(eig.eigenvectors * Matrix2::from_diagonal(&root))
}

/// Draws `cfg.shots` pairs from a zero-mean bivariate Gaussian.
pub fn sample_pair(cov: &Matrix2<f64>, cfg: &SimConfig) -> Result<Vec<(f64, f64)>> {
    if cfg.shots < 2 {
        return Err(Error::InsufficientSamples {
            needed: 2,
            got: cfg.shots,
        });
    }
    let l = factor(cov)?;
    let jitter = cfg.jitter.map_or(0.0, |j| j.sigma_j());
    let batches = cfg.shots.div_ceil(BATCH_SIZE);
    let out: Vec<Vec<(f64, f64)>> = (0..batches)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha20Rng::seed_from_u64(cfg.seed);
            rng.set_stream((cfg.basis_pair.stream_id() << 32) | b as u64);
            let n = BATCH_SIZE.min(cfg.shots - b * BATCH_SIZE);
            (0..n)
                .map(|_| {
                    let z0: f64 = StandardNormal.sample(&mut rng);
                    let z1: f64 = StandardNormal.sample(&mut rng);
                    let mut a = l[(0, 0)] * z0 + l[(0, 1)] * z1;
                    let mut b = l[(1, 0)] * z0 + l[(1, 1)] * z1;
                    if jitter > 0.0 {
                        let j0: f64 = StandardNormal.sample(&mut rng);
                        let j1: f64 = StandardNormal.sample(&mut rng);
                        a += jitter * j0;
                        b += jitter * j1;
                    }
                    (a, b)
                })
                .collect()
        })
        .collect();
    Ok(out.into_iter().flatten().collect())
}

/// Samples Alice's and Bob's outcomes in the configured basis pair.
pub fn sample_outcomes(m: &MeasuredBasisCov, cfg: &SimConfig) -> Result<Vec<(f64, f64)>> {
    let (i, j) = cfg.basis_pair.indices();
    let mm = m.matrix();
    sample_pair(
        &Matrix2::new(mm[(i, i)], mm[(i, j)], mm[(j, i)], mm[(j, j)]),
        cfg,
    )
}

/// Samples for every basis pair.
#[derive(Clone, Debug, PartialEq)]
pub struct BasisSamples {
    pub tt: Vec<(f64, f64)>,
    pub td: Vec<(f64, f64)>,
    pub dt: Vec<(f64, f64)>,
    pub dd: Vec<(f64, f64)>,
}

impl BasisSamples {
    pub fn simulate(
        m: &MeasuredBasisCov,
        shots: usize,
        seed: u64,
        jitter: Option<JitterSpec>,
    ) -> Result<Self> {
        let run = |basis_pair| {
            sample_outcomes(
                m,
                &SimConfig {
                    shots,
                    seed,
                    basis_pair,
                    jitter,
                },
            )
        };
        Ok(BasisSamples {
            tt: run(BasisPair::TT)?,
            td: run(BasisPair::TD)?,
            dt: run(BasisPair::DT)?,
            dd: run(BasisPair::DD)?,
        })
    }

    pub fn get(&self, basis: BasisPair) -> &[(f64, f64)] {
        match basis {
            BasisPair::TT => &self.tt,
            BasisPair::TD => &self.td,
            BasisPair::DT => &self.dt,
            BasisPair::DD => &self.dd,
        }
    }
}

/// Unbiased sample variance and its Gaussian standard error `√(2/(n−1))·Var`.
pub fn sample_variance(xs: impl ExactSizeIterator<Item = f64> + Clone) -> Result<(f64, f64)> {
    let n = xs.len();
    if n < 2 {
        return Err(Error::InsufficientSamples { needed: 2, got: n });
    }
    let mean = xs.clone().sum::<f64>() / n as f64;
    let var = xs.map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    Ok((var, (2.0 / (n - 1) as f64).sqrt() * var))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalVariances {
    pub values: CorrelatedVariances,
    pub standard_errors: CorrelatedVariances,
    /// Shots used for each of the eight entries.
    pub shots: [usize; 8],
}

impl EmpiricalVariances {
    /// `(empirical − analytic)/SE` for each entry.
    pub fn z_scores(&self, analytic: &CorrelatedVariances) -> [f64; 8] {
        let v = self.values.as_array();
        let se = self.standard_errors.as_array();
        let a = analytic.as_array();
        std::array::from_fn(|i| (v[i] - a[i]) / se[i])
    }
}

/// Sample variances of the eight sum/difference combinations.
pub fn estimate_correlated_variances(s: &BasisSamples) -> Result<EmpiricalVariances> {
    // (basis, sign of Bob's term) per CorrelatedVariances::LABELS entry.
    const PLAN: [(BasisPair, f64); 8] = [
        (BasisPair::TT, -1.0),
        (BasisPair::DD, 1.0),
        (BasisPair::TD, 1.0),
        (BasisPair::DT, -1.0),
        (BasisPair::TT, 1.0),
        (BasisPair::DD, -1.0),
        (BasisPair::TD, -1.0),
        (BasisPair::DT, 1.0),
    ];
    let mut values = [0.0; 8];
    let mut errors = [0.0; 8];
    let mut shots = [0; 8];
    for (i, (basis, sign)) in PLAN.iter().enumerate() {
        let data = s.get(*basis);
        // Var(b − a) = Var(a − b), so the T_B − D_A entry needs no reordering.
        let (v, e) = sample_variance(data.iter().map(|(a, b)| a + sign * b))?;
        values[i] = v;
        errors[i] = e;
        shots[i] = data.len();
    }
    Ok(EmpiricalVariances {
        values: CorrelatedVariances::from_array(values),
        standard_errors: CorrelatedVariances::from_array(errors),
        shots,
    })
}

/// Two-sided p-value of the F-test for equal variances.
pub fn f_test(var1: f64, n1: usize, var2: f64, n2: usize) -> Result<f64> {
    if n1 < 2 || n2 < 2 {
        return Err(Error::InsufficientSamples {
            needed: 2,
            got: n1.min(n2),
        });
    }
    if !(var1 > 0.0 && var2 > 0.0) {
        return Err(Error::InvalidParameter {
            name: "variance",
            value: var1.min(var2),
            reason: "F-test needs positive variances",
        });
    }
    let dist = FisherSnedecor::new((n1 - 1) as f64, (n2 - 1) as f64)
        .map_err(|e| Error::Numerical(e.to_string()))?;
    let f = var1 / var2;
    let lower = dist.cdf(f);
    Ok((2.0 * lower.min(1.0 - lower)).min(1.0))
}

/// Gaussian plug-in `−½ log₂(1 − r̂²)` from the sample correlation.
pub fn empirical_mutual_information(samples: &[(f64, f64)]) -> Result<f64> {
    let n = samples.len();
    if n < 2 {
        return Err(Error::InsufficientSamples { needed: 2, got: n });
    }
    let (ma, mb) = samples.iter().fold((0.0, 0.0), |(x, y), (a, b)| {
        (x + a / n as f64, y + b / n as f64)
    });
    let (saa, sbb, sab) = samples
        .iter()
        .fold((0.0, 0.0, 0.0), |(aa, bb, ab), (a, b)| {
            let (da, db) = (a - ma, b - mb);
            (aa + da * da, bb + db * db, ab + da * db)
        });
    let r = sab / (saa * sbb).sqrt();
    if r.is_nan() || r.abs() >= 1.0 {
        return Err(Error::DegenerateCorrelation { r: r.abs() });
    }
    Ok(-0.5 * (1.0 - r * r).log2())
}
