//! Mutual information, Holevo information and secret key rates.
//!
//! `I(A:B)` is computed from the arrival-time correlation coefficient of the
//! (optionally jitter-inflated) measured covariance. `χ(A:E)` assumes Eve
//! holds the purification of the jitter-free post-attack state, so
//! `S(E) = S(AB)` and, after Alice's homodyne measurement, `S(E|X) = S(B|X)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::attacks::{
    apply_channel_bob, apply_mower, channel_from_alternate, search_worst_attack, AlternateAttack,
    GaussianChannel, MowerAttack, ObservedVariances, SearchOptions,
};
use crate::error::{positive, Error, Result};
use crate::gaussian::{CovMatrix, Quadrature};
use crate::jitter::JitterSpec;
use crate::source::{
    build_covariance, measured_basis_cov, observable, MeasuredBasisCov, SourceParams,
};

/// Which of Alice's bases generate key.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KeyMode {
    /// Key from arrival times only: `χ = S(E) − S(E|T)`.
    #[default]
    TimeOnly,
    /// Key from both bases equally: `χ = S(E) − ½(S(E|T) + S(E|D))`.
    BothBases,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KeyRateReport {
    pub model_name: String,
    pub i_ab: f64,
    pub chi_ae: f64,
    pub delta_k_raw: f64,
    pub delta_k: f64,
    pub s_e: f64,
    pub s_e_given_t: f64,
    pub s_e_given_d: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HolevoBreakdown {
    pub chi: f64,
    pub s_e: f64,
    pub s_e_given_t: f64,
    pub s_e_given_d: Option<f64>,
}

/// `I = −½ log₂(1 − r²)` with `r` the correlation of `T_A` and `T_B`.
pub fn mutual_information_time(m: &MeasuredBasisCov) -> Result<f64> {
    let mm = m.matrix();
    let va = mm[(observable::T_A, observable::T_A)];
    let vb = mm[(observable::T_B, observable::T_B)];
    if !(va > 0.0 && vb > 0.0) {
        return Err(Error::InvalidParameter {
            name: "time variance",
            value: va.min(vb),
            reason: "must be positive",
        });
    }
    let r = mm[(observable::T_A, observable::T_B)] / (va * vb).sqrt();
    if r.is_nan() || r.abs() >= 1.0 {
        return Err(Error::DegenerateCorrelation { r: r.abs() });
    }
    Ok((-0.5 * (1.0 - r * r).log2()).max(0.0))
}

pub fn holevo_breakdown(g_after: &CovMatrix, mode: KeyMode) -> Result<HolevoBreakdown> {
    let s_e = g_after.von_neumann_entropy()?;
    let s_t = g_after
        .condition_on_homodyne(0, Quadrature::X)?
        .von_neumann_entropy()?;
    let (chi, s_d) = match mode {
        KeyMode::TimeOnly => (s_e - s_t, None),
        KeyMode::BothBases => {
            let s_d = g_after
                .condition_on_homodyne(0, Quadrature::P)?
                .von_neumann_entropy()?;
            (s_e - 0.5 * (s_t + s_d), Some(s_d))
        }
    };
    Ok(HolevoBreakdown {
        chi,
        s_e,
        s_e_given_t: s_t,
        s_e_given_d: s_d,
    })
}

pub fn holevo(g_after: &CovMatrix, mode: KeyMode) -> Result<f64> {
    holevo_breakdown(g_after, mode).map(|h| h.chi)
}

/// An eavesdropping model together with its parameters.
#[derive(Clone, Debug, PartialEq)]
pub enum Attack {
    None,
    Mower(MowerAttack),
    Alternate(AlternateAttack),
    Channel {
        name: String,
        channel: GaussianChannel,
    },
    /// Worst single-mode channel matching the block-scaling attack's
    /// measured variances at `(eta, xi)`.
    WorstCase {
        eta: f64,
        xi: f64,
        options: SearchOptions,
    },
}

impl Attack {
    pub fn name(&self) -> &str {
        match self {
            Attack::None => "none",
            Attack::Mower(_) => "mower",
            Attack::Alternate(_) => "alternate",
            Attack::Channel { name, .. } => name,
            Attack::WorstCase { .. } => "optimize",
        }
    }

    /// The jitter-free two-mode state shared after the attack.
    pub fn apply(&self, p: &SourceParams) -> Result<CovMatrix> {
        let g = build_covariance(p);
        match self {
            Attack::None => Ok(g),
            Attack::Mower(a) => apply_mower(&g, p, a),
            Attack::Alternate(a) => apply_channel_bob(&g, &channel_from_alternate(p, a)?),
            Attack::Channel { channel, .. } => apply_channel_bob(&g, channel),
            Attack::WorstCase { eta, xi, options } => {
                let obs = ObservedVariances::from_mower(p, *eta, *xi)?;
                let found = search_worst_attack(p, &obs, options)?;
                apply_channel_bob(&g, &found.channel)
            }
        }
    }
}

/// Key rate for one scenario. Jitter only inflates the time variances that
/// enter `I(A:B)`; χ uses the jitter-free covariance.
pub fn key_rate(
    p: &SourceParams,
    attack: &Attack,
    jitter: Option<&JitterSpec>,
    mode: KeyMode,
) -> Result<KeyRateReport> {
    let after = attack.apply(p)?;
    report_for_state(p, attack.name(), &after, jitter, mode)
}

pub fn report_for_state(
    p: &SourceParams,
    model_name: &str,
    after: &CovMatrix,
    jitter: Option<&JitterSpec>,
    mode: KeyMode,
) -> Result<KeyRateReport> {
    after.ensure_physical()?;
    let measured = measured_basis_cov(after, p)?;
    let measured = match jitter {
        Some(j) => measured.with_timing_jitter(j.sigma_j()),
        None => measured,
    };
    let i_ab = mutual_information_time(&measured)?;
    let h = holevo_breakdown(after, mode)?;
    let delta_k_raw = i_ab - h.chi;
    Ok(KeyRateReport {
        model_name: model_name.to_string(),
        i_ab,
        chi_ae: h.chi,
        delta_k_raw,
        delta_k: delta_k_raw.max(0.0),
        s_e: h.s_e,
        s_e_given_t: h.s_e_given_t,
        s_e_given_d: h.s_e_given_d,
    })
}

/// Which parameter a sweep varies.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepVar {
    Xi,
    K,
    Eta,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Mower,
    Alternate,
}

impl ModelKind {
    pub fn attack(self, eta: f64, xi: f64) -> Result<Attack> {
        Ok(match self {
            ModelKind::Mower => Attack::Mower(MowerAttack::new(eta, xi)?),
            ModelKind::Alternate => Attack::Alternate(AlternateAttack::new(eta, xi)?),
        })
    }
}

/// One curve of a sweep: a model, optionally at its own dispersion.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Curve {
    pub label: String,
    pub model: ModelKind,
    #[serde(default)]
    pub k: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub var: SweepVar,
    pub start: f64,
    pub stop: f64,
    pub steps: usize,
    /// Values of the non-swept attack parameters.
    pub eta: f64,
    pub xi: f64,
}

impl SweepSpec {
    pub fn values(&self) -> Result<Vec<f64>> {
        if self.steps < 2 {
            return Err(Error::InvalidParameter {
                name: "steps",
                value: self.steps as f64,
                reason: "a sweep needs at least 2 steps",
            });
        }
        if !(self.start.is_finite() && self.stop.is_finite()) || self.start < 0.0 || self.stop < 0.0
        {
            return Err(Error::InvalidParameter {
                name: "range",
                value: if self.start.is_finite() {
                    self.stop
                } else {
                    self.start
                },
                reason: "sweep range must be finite and non-negative",
            });
        }
        if self.var == SweepVar::K {
            positive("start", self.start)?;
        }
        let n = self.steps - 1;
        Ok((0..self.steps)
            .map(|i| self.start + (self.stop - self.start) * i as f64 / n as f64)
            .collect())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub model: String,
    pub sweep_value: f64,
    pub outcome: std::result::Result<KeyRateReport, String>,
}

/// Evaluates every curve at every sweep value. Row order is curve-major and
/// does not depend on parallelism; per-row failures are recorded, not fatal.
pub fn sweep(
    p: &SourceParams,
    curves: &[Curve],
    spec: &SweepSpec,
    jitter: Option<&JitterSpec>,
    mode: KeyMode,
) -> Result<Vec<SweepRow>> {
    let values = spec.values()?;
    let jobs: Vec<(&Curve, f64)> = curves
        .iter()
        .flat_map(|c| values.iter().map(move |v| (c, *v)))
        .collect();
    Ok(jobs
        .par_iter()
        .map(|(curve, value)| {
            let outcome =
                sweep_point(p, curve, spec, *value, jitter, mode).map_err(|e| e.to_string());
            SweepRow {
                model: curve.label.clone(),
                sweep_value: *value,
                outcome,
            }
        })
        .collect())
}

fn sweep_point(
    p: &SourceParams,
    curve: &Curve,
    spec: &SweepSpec,
    value: f64,
    jitter: Option<&JitterSpec>,
    mode: KeyMode,
) -> Result<KeyRateReport> {
    let base = match curve.k {
        Some(k) => p.with_k(k)?,
        None => *p,
    };
    let (params, eta, xi) = match spec.var {
        SweepVar::Xi => (base, spec.eta, value),
        SweepVar::Eta => (base, value, spec.xi),
        SweepVar::K => (base.with_k(value)?, spec.eta, spec.xi),
    };
    key_rate(&params, &curve.model.attack(eta, xi)?, jitter, mode)
}

/// Smallest `ξ` in `[lo, hi]` where the raw key rate crosses zero, by
/// bisection after a coarse scan. `None` if it stays positive or negative.
pub fn zero_crossing_xi(
    p: &SourceParams,
    model: ModelKind,
    eta: f64,
    jitter: Option<&JitterSpec>,
    mode: KeyMode,
    lo: f64,
    hi: f64,
) -> Option<f64> {
    let f = |xi: f64| {
        model
            .attack(eta, xi)
            .and_then(|a| key_rate(p, &a, jitter, mode))
            .map(|r| r.delta_k_raw)
            .ok()
    };
    const SCAN: usize = 64;
    let mut prev_x = lo;
    let mut prev_f = f(lo)?;
    if prev_f <= 0.0 {
        return Some(lo);
    }
    for i in 1..=SCAN {
        let x = lo + (hi - lo) * i as f64 / SCAN as f64;
        let fx = f(x)?;
        if fx <= 0.0 {
            let (mut a, mut b) = (prev_x, x);
            for _ in 0..80 {
                let m = 0.5 * (a + b);
                match f(m) {
                    Some(v) if v > 0.0 => a = m,
                    Some(_) => b = m,
                    None => return None,
                }
            }
            return Some(0.5 * (a + b));
        }
        prev_x = x;
        prev_f = fx;
    }
    let _ = prev_f;
    None
}
