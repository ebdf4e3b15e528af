//! One function per subcommand; each returns a serializable result.

use std::io::Write;

use doqkd_core::montecarlo::{empirical_mutual_information, RNG_ALGORITHM};
use doqkd_core::{
    build_covariance, correlated_variances, diagonalizing_symplectic,
    estimate_correlated_variances, jitter_capacity_report, key_rate, measured_basis_cov,
    mutual_information_time, search_worst_attack, sweep, xi_from_jitter, xi_jitter_lower_bound,
    zero_crossing_xi, AlternateAttack, Attack, BasisPair, BasisSamples, CorrelatedVariances,
    GaussianChannel, KeyRateReport, MowerAttack, ObservedVariances, SearchOptions, SweepVar,
};
use serde::Serialize;

use crate::config::{AttackModel, Scenario};
use crate::error::{CliError, Result};
use crate::output::format_f64;

/// Largest `|ν − ½|` still reported as a pure state.
pub const PURITY_TOL: f64 = 1e-9;

#[derive(Debug, Serialize)]
pub struct StateResult {
    pub gamma: Vec<[f64; 4]>,
    pub alpha: f64,
    pub beta: f64,
    pub squeeze_r: f64,
    pub symplectic_eigenvalues: Vec<f64>,
    pub max_purity_deviation: f64,
    pub purity_check: &'static str,
    pub uncertainty_min_eigenvalue: f64,
    pub physical: bool,
    pub coherence_warning: bool,
    pub low_dispersion: bool,
    pub correlated_variances: CorrelatedVariances,
}

pub fn state(s: &Scenario) -> Result<StateResult> {
    let p = s.source();
    let g = build_covariance(&p);
    let d = diagonalizing_symplectic(&p);
    let nu = g.symplectic_eigenvalues()?;
    let dev = nu.iter().map(|v| (v - 0.5).abs()).fold(0.0, f64::max);
    let m = g.matrix();
    Ok(StateResult {
        gamma: (0..4)
            .map(|r| [m[(r, 0)], m[(r, 1)], m[(r, 2)], m[(r, 3)]])
            .collect(),
        alpha: d.alpha,
        beta: d.beta,
        squeeze_r: d.squeeze_r,
        symplectic_eigenvalues: nu,
        max_purity_deviation: dev,
        purity_check: if dev <= PURITY_TOL { "pass" } else { "fail" },
        uncertainty_min_eigenvalue: g.uncertainty_min_eigenvalue(),
        physical: g.is_physical(),
        coherence_warning: p.coherence_warning(),
        low_dispersion: p.low_dispersion(),
        correlated_variances: correlated_variances(&measured_basis_cov(&g, &p)?),
    })
}

/// One key-rate evaluation; numeric fields are empty when `error` is set.
#[derive(Debug, Serialize)]
pub struct ModelRow {
    pub model: String,
    pub i_ab: Option<f64>,
    pub chi_ae: Option<f64>,
    pub delta_k_raw: Option<f64>,
    pub delta_k: Option<f64>,
    pub s_e: Option<f64>,
    pub s_e_given_t: Option<f64>,
    pub s_e_given_d: Option<f64>,
    pub error: Option<String>,
}

impl ModelRow {
    fn new(model: &str, outcome: std::result::Result<&KeyRateReport, String>) -> Self {
        match outcome {
            Ok(r) => ModelRow {
                model: model.into(),
                i_ab: Some(r.i_ab),
                chi_ae: Some(r.chi_ae),
                delta_k_raw: Some(r.delta_k_raw),
                delta_k: Some(r.delta_k),
                s_e: Some(r.s_e),
                s_e_given_t: Some(r.s_e_given_t),
                s_e_given_d: r.s_e_given_d,
                error: None,
            },
            Err(e) => ModelRow {
                model: model.into(),
                i_ab: None,
                chi_ae: None,
                delta_k_raw: None,
                delta_k: None,
                s_e: None,
                s_e_given_t: None,
                s_e_given_d: None,
                error: Some(e),
            },
        }
    }
}

#[derive(Debug, Serialize)]
pub struct KeyrateResult {
    pub selected: String,
    pub i_ab: f64,
    pub chi_mower: Option<f64>,
    pub chi_alternate: Option<f64>,
    pub delta_k: f64,
    pub models: Vec<ModelRow>,
}

/// Both rival models at the scenario's `(eta, xi)`, plus the selected model
/// when it is neither. Only a failure of the selected model is fatal.
pub fn keyrate(s: &Scenario) -> Result<KeyrateResult> {
    let p = s.source();
    let jitter = s.jitter_spec();
    let eval = |a: Result<Attack>| -> Result<KeyRateReport> {
        Ok(key_rate(&p, &a?, jitter.as_ref(), s.key_mode)?)
    };
    let mower = eval(
        MowerAttack::new(s.eta, s.xi)
            .map(Attack::Mower)
            .map_err(Into::into),
    );
    let alternate = eval(
        AlternateAttack::new(s.eta, s.xi)
            .map(Attack::Alternate)
            .map_err(Into::into),
    );
    let extra = match s.attack_model {
        AttackModel::Mower | AttackModel::Alternate => None,
        _ => Some(eval(s.attack())),
    };
    let name = s.attack()?.name().to_string();
    let row = |m: &str, r: &Result<KeyRateReport>| {
        ModelRow::new(m, r.as_ref().map_err(|e| e.to_string()))
    };
    let mut models = vec![row("mower", &mower), row("alternate", &alternate)];
    if let Some(r) = &extra {
        models.push(row(&name, r));
    }
    let chi_mower = mower.as_ref().ok().map(|r| r.chi_ae);
    let chi_alternate = alternate.as_ref().ok().map(|r| r.chi_ae);
    let chosen = match (s.attack_model, extra) {
        (AttackModel::Mower, _) => mower,
        (AttackModel::Alternate, _) => alternate,
        (_, Some(r)) => r,
        (_, None) => unreachable!("evaluated for every other model"),
    }?;
    Ok(KeyrateResult {
        selected: name,
        i_ab: chosen.i_ab,
        chi_mower,
        chi_alternate,
        delta_k: chosen.delta_k,
        models,
    })
}

#[derive(Debug, Serialize)]
pub struct SweepOut {
    pub model: String,
    pub sweep_value: f64,
    pub i_ab: Option<f64>,
    pub chi_ae: Option<f64>,
    pub delta_k_raw: Option<f64>,
    pub delta_k: Option<f64>,
}

#[derive(Debug, Serialize)]
pub struct Crossing {
    pub label: String,
    pub xi: Option<f64>,
}

#[derive(Debug, Serialize)]
pub struct SweepResult {
    pub var: SweepVar,
    pub failed_points: usize,
    pub zero_crossings: Vec<Crossing>,
    pub rows: Vec<SweepOut>,
    pub errors: Vec<String>,
}

pub fn run_sweep(s: &Scenario) -> Result<SweepResult> {
    let sw = s
        .sweep
        .as_ref()
        .ok_or_else(|| CliError::config("sweep: the sweep command needs a [sweep] section"))?;
    let p = s.source();
    let jitter = s.jitter_spec();
    let raw = sweep(&p, &sw.curves, &sw.spec, jitter.as_ref(), s.key_mode)?;
    let mut errors = Vec::new();
    let rows: Vec<SweepOut> = raw
        .into_iter()
        .map(|r| match r.outcome {
            Ok(k) => SweepOut {
                model: r.model,
                sweep_value: r.sweep_value,
                i_ab: Some(k.i_ab),
                chi_ae: Some(k.chi_ae),
                delta_k_raw: Some(k.delta_k_raw),
                delta_k: Some(k.delta_k),
            },
            Err(e) => {
                errors.push(format!("{} at {}: {e}", r.model, format_f64(r.sweep_value)));
                SweepOut {
                    model: r.model,
                    sweep_value: r.sweep_value,
                    i_ab: None,
                    chi_ae: None,
                    delta_k_raw: None,
                    delta_k: None,
                }
            }
        })
        .collect();
    let zero_crossings = if sw.spec.var == SweepVar::Xi {
        sw.curves
            .iter()
            .map(|c| {
                let pc = c.k.map_or(Ok(p), |k| p.with_k(k))?;
                let (lo, hi) = (
                    sw.spec.start.min(sw.spec.stop),
                    sw.spec.start.max(sw.spec.stop),
                );
                Ok(Crossing {
                    label: c.label.clone(),
                    xi: zero_crossing_xi(
                        &pc,
                        c.model,
                        sw.spec.eta,
                        jitter.as_ref(),
                        s.key_mode,
                        lo,
                        hi,
                    ),
                })
            })
            .collect::<Result<_>>()?
    } else {
        Vec::new()
    };
    Ok(SweepResult {
        var: sw.spec.var,
        failed_points: errors.len(),
        zero_crossings,
        rows,
        errors,
    })
}

#[derive(Debug, Serialize)]
pub struct OptimizeResult {
    pub eta: f64,
    pub xi: f64,
    pub observed: ObservedVariances,
    pub options: SearchOptions,
    pub chi: f64,
    pub chi_alternate: Option<f64>,
    pub excess_over_alternate: Option<f64>,
    pub channel: GaussianChannel,
    pub physical: bool,
    pub residuals: [f64; 4],
    pub start: usize,
    pub feasible_starts: usize,
    pub evaluations: usize,
    pub key_rate: ModelRow,
}

pub fn optimize(s: &Scenario) -> Result<OptimizeResult> {
    let p = s.source();
    let obs = ObservedVariances::from_mower(&p, s.eta, s.xi)?;
    let found = search_worst_attack(&p, &obs, &s.optimize)?;
    let chi_alternate = AlternateAttack::new(s.eta, s.xi)
        .and_then(|a| key_rate(&p, &Attack::Alternate(a), None, s.key_mode))
        .ok()
        .map(|r| r.chi_ae);
    let report = key_rate(
        &p,
        &Attack::Channel {
            name: "optimize".into(),
            channel: found.channel,
        },
        s.jitter_spec().as_ref(),
        s.key_mode,
    )?;
    Ok(OptimizeResult {
        eta: s.eta,
        xi: s.xi,
        observed: obs,
        options: s.optimize.clone(),
        chi: found.chi,
        chi_alternate,
        excess_over_alternate: chi_alternate.map(|c| found.chi - c),
        physical: found.channel.is_physical(),
        channel: found.channel,
        residuals: found.residuals,
        start: found.start,
        feasible_starts: found.feasible_starts,
        evaluations: found.evaluations,
        key_rate: ModelRow::new("optimize", Ok(&report)),
    })
}

#[derive(Debug, Serialize)]
pub struct JitterResult {
    pub sigma_j_ns: f64,
    pub fwhm_ns: f64,
    pub delta_j_ns: f64,
    pub xi_j: f64,
    pub xi_j_lower_bound: f64,
    /// Whether `k ≤ 4σ_cohσ_cor`, where the lower bound holds.
    pub lower_bound_applies: bool,
    pub eta: f64,
    pub chi_floor: f64,
    pub skr_ceiling: f64,
    pub max_bits_jitter: f64,
    pub max_bits_correlation: f64,
}

pub fn jitter(s: &Scenario) -> Result<JitterResult> {
    let rj = s
        .jitter
        .as_ref()
        .ok_or_else(|| CliError::config("jitter: the jitter command needs a [jitter] section"))?;
    let j = rj.spec();
    let p = s.source();
    let r = jitter_capacity_report(&p, &j, rj.eta_policy, s.key_mode)?;
    Ok(JitterResult {
        sigma_j_ns: j.sigma_j(),
        fwhm_ns: j.fwhm(),
        delta_j_ns: j.delta_j(),
        xi_j: xi_from_jitter(&p, &j),
        xi_j_lower_bound: xi_jitter_lower_bound(p.sigma_cor(), &j)?,
        lower_bound_applies: p.k() <= 4.0 * p.sigma_coh() * p.sigma_cor(),
        eta: r.eta,
        chi_floor: r.chi_floor,
        skr_ceiling: r.skr_ceiling,
        max_bits_jitter: r.max_bits_jitter,
        max_bits_correlation: r.max_bits_correlation,
    })
}

#[derive(Debug, Serialize)]
pub struct VarianceRow {
    pub quantity: &'static str,
    pub analytic: f64,
    pub empirical: f64,
    pub standard_error: f64,
    pub z: f64,
    pub shots: usize,
}

#[derive(Debug, Serialize)]
pub struct SimulateResult {
    pub model: String,
    pub shots: usize,
    pub seed: u64,
    pub rng: &'static str,
    pub mutual_information_analytic: f64,
    pub mutual_information_empirical: f64,
    pub max_abs_z: f64,
    pub variances: Vec<VarianceRow>,
}

pub struct Simulation {
    pub result: SimulateResult,
    pub samples: BasisSamples,
}

/// Samples all four basis pairs of the attacked state. Timing jitter, when
/// configured, is added to the samples and to the analytic reference alike.
pub fn simulate(s: &Scenario) -> Result<Simulation> {
    let p = s.source();
    let attack = s.attack()?;
    let after = attack.apply(&p)?;
    let m = measured_basis_cov(&after, &p)?;
    let jitter = s.jitter_spec();
    let reference = match &jitter {
        Some(j) => m.with_timing_jitter(j.sigma_j()),
        None => m.clone(),
    };
    let samples = BasisSamples::simulate(&m, s.simulate.shots, s.simulate.seed, jitter)?;
    let est = estimate_correlated_variances(&samples)?;
    let analytic = correlated_variances(&reference);
    let z = est.z_scores(&analytic);
    let (a, v, se) = (
        analytic.as_array(),
        est.values.as_array(),
        est.standard_errors.as_array(),
    );
    let variances: Vec<VarianceRow> = (0..8)
        .map(|i| VarianceRow {
            quantity: CorrelatedVariances::LABELS[i],
            analytic: a[i],
            empirical: v[i],
            standard_error: se[i],
            z: z[i],
            shots: est.shots[i],
        })
        .collect();
    if z.iter().any(|x| !x.is_finite()) {
        return Err(CliError::Numerical(
            "non-finite z-score (zero standard error)".into(),
        ));
    }
    Ok(Simulation {
        result: SimulateResult {
            model: attack.name().to_string(),
            shots: s.simulate.shots,
            seed: s.simulate.seed,
            rng: RNG_ALGORITHM,
            mutual_information_analytic: mutual_information_time(&reference)?,
            mutual_information_empirical: empirical_mutual_information(samples.get(BasisPair::TT))?,
            max_abs_z: z.iter().fold(0.0, |m: f64, x| m.max(x.abs())),
            variances,
        },
        samples,
    })
}

/// Raw outcomes of one basis pair as `a_ns,b_ns` rows.
pub fn write_samples(samples: &[(f64, f64)], out: &mut dyn Write) -> Result<()> {
    writeln!(out, "a_ns,b_ns")?;
    for (a, b) in samples {
        writeln!(out, "{},{}", format_f64(*a), format_f64(*b))?;
    }
    Ok(())
}
