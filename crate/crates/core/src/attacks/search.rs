//! Worst-case single-mode channel on Bob consistent with observed data.
//!
//! The search maximises `χ(A:E)` over the seven free entries of `(T, N)`
//! subject to channel physicality and to the four protocol-checked
//! correlated variances matching the observation.
//!
//! The four constraints are solved exactly by a cheap projection: the
//! differences `Var(T_A−T_B) − Var(T_B−D_A)` and
//! `Var(T_A+D_B) − Var(D_A+D_B)` are affine in the first and second rows of
//! `T` respectively, and `N_xx`, `N_pp` then shift the remaining pair
//! uniformly. The simplex descent works on the projected point, with a
//! quadratic penalty on the distance to the constraint surface so that it
//! does not drift along directions the projection absorbs.

use nalgebra::{Matrix2, Matrix4};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::alternate::{channel_from_epsilons, raw_epsilons};
use super::channel::{apply_unchecked, GaussianChannel};
use super::mower::{apply_mower, mower_channel, MowerAttack};
use super::nelder_mead::{minimize, NelderMeadOptions};
use crate::error::{Error, Result};
use crate::gaussian::{CovMatrix, PHYSICALITY_TOL};
use crate::keyrate::{holevo, KeyMode};
use crate::source::{
    build_covariance, correlated_variances, measured_basis_cov, CorrelatedVariances, SourceParams,
};

/// Objective value assigned to unphysical channels, before penalties.
const BARRIER: f64 = 1e3;
/// Relative perturbation of the random multi-start box.
const RANDOM_BOX: f64 = 0.5;
/// Relative size of the initial simplex.
const SIMPLEX_STEP: f64 = 0.05;
const ANTI_CORRELATION: [f64; 6] = [0.2, -0.2, 0.4, -0.4, 0.6, -0.6];

/// Observed protocol variances after the attack and the attack-free reference.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObservedVariances {
    /// `Var(T_A−T_B)`, `Var(D_A+D_B)`, `Var(T_A+D_B)`, `Var(T_B−D_A)` in ns².
    pub measured: [f64; 4],
    pub reference: [f64; 4],
}

impl ObservedVariances {
    pub fn new(measured: [f64; 4], reference: [f64; 4]) -> Result<Self> {
        for v in measured.iter().chain(&reference) {
            if !(v.is_finite() && *v > 0.0) {
                return Err(Error::InvalidParameter {
                    name: "observed variance",
                    value: *v,
                    reason: "must be positive and finite",
                });
            }
        }
        Ok(ObservedVariances {
            measured,
            reference,
        })
    }

    /// Observations produced by a given post-attack state.
    pub fn from_states(p: &SourceParams, attacked: &CovMatrix) -> Result<Self> {
        let before = correlated_variances(&measured_basis_cov(&build_covariance(p), p)?);
        let after = correlated_variances(&measured_basis_cov(attacked, p)?);
        ObservedVariances::new(after.measured(), before.measured())
    }

    /// Observations produced by the block-scaling attack at `(eta, xi)`.
    pub fn from_mower(p: &SourceParams, eta: f64, xi: f64) -> Result<Self> {
        let attacked = apply_mower(&build_covariance(p), p, &MowerAttack::new(eta, xi)?)?;
        ObservedVariances::from_states(p, &attacked)
    }

    /// The `(η, ξ)` of the block-scaling attack that would produce these
    /// observations, read off `Var(T_A−T_B)` and `Var(T_A+D_B)`.
    pub fn infer_attack(&self, p: &SourceParams) -> (f64, f64) {
        let xi = self.measured[0] / self.reference[0] - 1.0;
        let ratio = self.measured[2] / self.reference[2];
        let c2 = p.sigma_coh().powi(2);
        let r2 = p.sigma_cor().powi(2);
        let k2 = p.k() * p.k();
        let den = 64.0 * c2 * r2 * r2 + k2 * (4.0 * c2 + r2);
        let rest = 64.0 * c2 * r2 * r2 * (1.0 + xi) + k2 * (4.0 * c2 + (1.0 + 4.0 * xi) * r2);
        let slope = k2 * (2.0 * r2 - 8.0 * c2);
        let eta = if slope != 0.0 {
            (ratio * den - rest) / slope
        } else {
            0.0
        };
        (eta, xi)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchOptions {
    pub starts: usize,
    pub seed: u64,
    pub penalty_schedule: Vec<f64>,
    /// Simplex convergence tolerance on the objective.
    pub tolerance: f64,
    pub max_evals_per_round: usize,
    pub key_mode: KeyMode,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            starts: 32,
            seed: 0,
            penalty_schedule: vec![1e3, 1e5, 1e7, 1e9],
            tolerance: 1e-6,
            max_evals_per_round: 3000,
            key_mode: KeyMode::TimeOnly,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub channel: GaussianChannel,
    pub chi: f64,
    /// `measured/obs − 1` for the four protocol variances at the returned channel.
    pub residuals: [f64; 4],
    /// Index of the start that produced the result.
    pub start: usize,
    pub feasible_starts: usize,
    pub evaluations: usize,
}

/// Covariance blocks of the source state plus the measured-basis scales.
struct Problem {
    a: Matrix2<f64>,
    c: Matrix2<f64>,
    b: Matrix2<f64>,
    s: f64,
    q: f64,
    target: [f64; 4],
    source: CovMatrix,
    mode: KeyMode,
}

impl Problem {
    fn new(p: &SourceParams, obs: &ObservedVariances, mode: KeyMode) -> Self {
        let g = build_covariance(p);
        let s = p.quadrature_scale();
        Problem {
            a: g.block(0, 0),
            c: g.block(0, 1),
            b: g.block(1, 1),
            s,
            q: p.k() / (2.0 * s),
            target: obs.measured,
            source: g,
            mode,
        }
    }

    /// The four protocol variances after `x = [T00, T01, T10, T11, Nxx, Nxp, Npp]`.
    fn observe(&self, x: &[f64]) -> [f64; 4] {
        let t = Matrix2::new(x[0], x[1], x[2], x[3]);
        let n = Matrix2::new(x[4], x[5], x[5], x[6]);
        let cross = self.c * t.transpose();
        let bob = t * self.b * t.transpose() + n;
        let scale = [self.s, self.q, self.s, self.q];
        let m = Matrix4::from_fn(|r, col| {
            let v = match (r < 2, col < 2) {
                (true, true) => self.a[(r, col)],
                (true, false) => cross[(r, col - 2)],
                (false, true) => cross[(col, r - 2)],
                (false, false) => bob[(r - 2, col - 2)],
            };
            scale[r] * v * scale[col]
        });
        std::array::from_fn(|i| {
            let c = nalgebra::Vector4::from_row_slice(&CorrelatedVariances::COEFFICIENTS[i]);
            (c.transpose() * m * c)[(0, 0)]
        })
    }

    fn residuals(&self, x: &[f64]) -> [f64; 4] {
        let f = self.observe(x);
        std::array::from_fn(|i| f[i] / self.target[i] - 1.0)
    }

    /// Nearest point (in the `T` rows) satisfying all four constraints exactly.
    fn project(&self, x: &[f64]) -> [f64; 7] {
        let mut y: [f64; 7] = std::array::from_fn(|i| x[i]);
        let diff_x = |y: &[f64; 7]| {
            let f = self.observe(y);
            f[0] - f[3]
        };
        let diff_p = |y: &[f64; 7]| {
            let f = self.observe(y);
            f[2] - f[1]
        };
        project_row(&mut y, 0, self.target[0] - self.target[3], diff_x);
        project_row(&mut y, 2, self.target[2] - self.target[1], diff_p);
        let f = self.observe(&y);
        y[4] += (self.target[0] - f[0]) / (self.s * self.s);
        y[6] += (self.target[1] - f[1]) / (self.q * self.q);
        y
    }

    fn chi(&self, y: &[f64; 7]) -> Option<f64> {
        let ch = GaussianChannel::from_params(y).ok()?;
        if ch.positivity_min_eigenvalue() < -PHYSICALITY_TOL {
            return None;
        }
        let after = apply_unchecked(&self.source, &ch).ok()?;
        holevo(&after, self.mode).ok().filter(|v| v.is_finite())
    }
}

/// Moves `y[row], y[row+1]` orthogonally onto the line where the affine
/// function `f` equals `target`.
fn project_row(y: &mut [f64; 7], row: usize, target: f64, f: impl Fn(&[f64; 7]) -> f64) {
    let f0 = f(y);
    let mut probe = *y;
    probe[row] += 1.0;
    let g0 = f(&probe) - f0;
    probe = *y;
    probe[row + 1] += 1.0;
    let g1 = f(&probe) - f0;
    let norm = g0 * g0 + g1 * g1;
    if norm > 0.0 && norm.is_finite() {
        let step = (target - f0) / norm;
        y[row] += step * g0;
        y[row + 1] += step * g1;
    }
}

#[derive(Clone, Debug)]
struct StartOutcome {
    best: Option<([f64; 7], f64)>,
    evals: usize,
}

fn start_point(index: usize, seed: u64, mower: &[f64; 7], alternate: &[f64; 7]) -> [f64; 7] {
    match index {
        0 => *mower,
        1 => *alternate,
        i if i < 2 + ANTI_CORRELATION.len() => {
            let mut x = *alternate;
            x[5] = ANTI_CORRELATION[i - 2] * (x[4] * x[6]).abs().sqrt();
            x
        }
        i => {
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let mut x = *alternate;
            for v in x.iter_mut() {
                let width = RANDOM_BOX * v.abs().max(1e-3);
                *v += rng.random_range(-width..=width);
            }
            // Keep N positive semidefinite in the box.
            x[4] = x[4].abs();
            x[6] = x[6].abs();
            let lim = (x[4] * x[6]).sqrt();
            x[5] = x[5].clamp(-lim, lim);
            x
        }
    }
}

fn run_start(problem: &Problem, x0: [f64; 7], opts: &SearchOptions) -> StartOutcome {
    let mut best: Option<([f64; 7], f64)> = None;
    let mut evals = 0;
    let mut x = x0;
    let nm = NelderMeadOptions {
        max_evals: opts.max_evals_per_round,
        f_tol: opts.tolerance,
        x_tol: 1e-9,
    };
    for &w in &opts.penalty_schedule {
        let objective = |z: &[f64]| {
            let r = problem.residuals(z);
            let pen: f64 = r.iter().map(|v| v * v).sum();
            let y = problem.project(z);
            match problem.chi(&y) {
                Some(chi) => {
                    if best.is_none_or(|(_, b)| chi > b) {
                        best = Some((y, chi));
                    }
                    -chi + w * pen
                }
                None => {
                    let viol = GaussianChannel::from_params(&y)
                        .map(|c| c.positivity_min_eigenvalue().min(0.0))
                        .unwrap_or(-1.0);
                    BARRIER + w * viol * viol + w * pen
                }
            }
        };
        let steps: Vec<f64> = x.iter().map(|v| SIMPLEX_STEP * v.abs().max(1e-2)).collect();
        let m = minimize(objective, &x, &steps, &nm);
        evals += m.evals;
        x = std::array::from_fn(|i| m.x[i]);
    }
    StartOutcome { best, evals }
}

/// Maximises `χ(A:E)` over single-mode Gaussian channels on Bob reproducing
/// `obs`. Starts run in parallel; the result does not depend on scheduling.
pub fn search_worst_attack(
    p: &SourceParams,
    obs: &ObservedVariances,
    opts: &SearchOptions,
) -> Result<SearchResult> {
    if opts.starts == 0 {
        return Err(Error::InvalidParameter {
            name: "starts",
            value: 0.0,
            reason: "at least one start is required",
        });
    }
    if opts.penalty_schedule.is_empty()
        || opts
            .penalty_schedule
            .iter()
            .any(|w| !w.is_finite() || *w <= 0.0)
    {
        return Err(Error::InvalidParameter {
            name: "penalty_schedule",
            value: opts.penalty_schedule.first().copied().unwrap_or(0.0),
            reason: "weights must be positive and non-empty",
        });
    }
    let problem = Problem::new(p, obs, opts.key_mode);
    let (eta, xi) = obs.infer_attack(p);

    let mower = mower_channel(p, &MowerAttack::new(eta, xi)?)
        .map(|c| c.to_params())
        .unwrap_or(GaussianChannel::identity().to_params());
    let alternate = {
        let eta0 = eta.clamp(0.0, 1.0);
        let (e1, e2) = raw_epsilons(p, eta0, xi, xi);
        channel_from_epsilons(eta0, e1.max(0.0), e2.max(0.0))
            .map(|c| c.to_params())
            .unwrap_or(mower)
    };

    let outcomes: Vec<StartOutcome> = (0..opts.starts)
        .into_par_iter()
        .map(|i| {
            run_start(
                &problem,
                start_point(i, opts.seed, &mower, &alternate),
                opts,
            )
        })
        .collect();

    let evaluations = outcomes.iter().map(|o| o.evals).sum();
    let feasible_starts = outcomes.iter().filter(|o| o.best.is_some()).count();
    let (start, (y, chi)) = outcomes
        .iter()
        .enumerate()
        .filter_map(|(i, o)| o.best.map(|b| (i, b)))
        .fold(
            None,
            |acc: Option<(usize, ([f64; 7], f64))>, cur| match acc {
                Some(a) if a.1 .1 >= cur.1 .1 => Some(a),
                _ => Some(cur),
            },
        )
        .ok_or_else(|| {
            Error::Infeasible(
                "no start reached a physical channel matching the observations".into(),
            )
        })?;

    Ok(SearchResult {
        channel: GaussianChannel::from_params(&y)?,
        chi,
        residuals: problem.residuals(&y),
        start,
        feasible_starts,
        evaluations,
    })
}
