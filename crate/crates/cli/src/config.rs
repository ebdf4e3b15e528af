//! Scenario files and their resolution into validated core inputs.
//!
//! A scenario is a flat TOML document. Times carry an explicit unit suffix
//! (`"1.92 ns"`, `"30 ps"`, `"500 fs"`); dispersion is given either directly
//! as `k_ns2` or as `group_delay_ps_per_nm` together with `wavelength_nm`.

use doqkd_core::{
    k_from_group_delay, AlternateAttack, Attack, Curve, EtaPolicy, GaussianChannel, JitterSpec,
    KeyMode, ModelKind, MowerAttack, SearchOptions, SourceParams, SweepSpec, SweepVar,
};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

pub const MAX_SWEEP_POINTS: usize = 100_000;
pub const MAX_SHOTS: usize = 10_000_000;
pub const MAX_STARTS: usize = 4096;
pub const MAX_EVALS_PER_ROUND: usize = 1_000_000;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttackModel {
    #[default]
    Mower,
    Alternate,
    Custom,
    Optimize,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JitterConvention {
    #[default]
    Sigma,
    Fwhm,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    sigma_coh: String,
    sigma_cor: String,
    k_ns2: Option<f64>,
    group_delay_ps_per_nm: Option<f64>,
    wavelength_nm: Option<f64>,
    #[serde(default)]
    xi: f64,
    #[serde(default)]
    eta: f64,
    #[serde(default)]
    attack_model: AttackModel,
    #[serde(default)]
    key_mode: KeyMode,
    jitter: Option<RawJitter>,
    channel: Option<GaussianChannel>,
    sweep: Option<RawSweep>,
    optimize: Option<RawOptimize>,
    simulate: Option<RawSimulate>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawJitter {
    sigma: String,
    #[serde(default)]
    uncertainty: Option<String>,
    #[serde(default)]
    convention: JitterConvention,
    /// Loss assumed by the jitter capacity report; zero if absent.
    eta: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSweep {
    var: SweepVar,
    start: f64,
    stop: f64,
    steps: usize,
    #[serde(default)]
    curves: Vec<RawCurve>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCurve {
    label: Option<String>,
    model: ModelKind,
    k_ns2: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOptimize {
    starts: Option<usize>,
    seed: Option<u64>,
    penalty_schedule: Option<Vec<f64>>,
    tolerance: Option<f64>,
    max_evals_per_round: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSimulate {
    shots: Option<usize>,
    seed: Option<u64>,
}

/// How the dispersion was specified.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum Dispersion {
    Direct,
    GroupDelay { ps_per_nm: f64, wavelength_nm: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResolvedJitter {
    pub convention: JitterConvention,
    /// As supplied, before any FWHM conversion.
    pub sigma_input_ns: f64,
    pub sigma_ns: f64,
    pub uncertainty_ns: f64,
    pub eta_policy: EtaPolicy,
}

impl ResolvedJitter {
    pub fn spec(&self) -> JitterSpec {
        JitterSpec::new(self.sigma_ns, self.uncertainty_ns).expect("validated on resolution")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResolvedSweep {
    pub spec: SweepSpec,
    pub curves: Vec<Curve>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ResolvedSimulate {
    pub shots: usize,
    pub seed: u64,
}

impl Default for ResolvedSimulate {
    fn default() -> Self {
        ResolvedSimulate {
            shots: 1_000_000,
            seed: 0,
        }
    }
}

/// A fully validated scenario, with every default filled in. This is what
/// outputs embed.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Scenario {
    pub sigma_coh_ns: f64,
    pub sigma_cor_ns: f64,
    pub k_ns2: f64,
    pub dispersion: Dispersion,
    pub xi: f64,
    pub eta: f64,
    pub attack_model: AttackModel,
    pub key_mode: KeyMode,
    pub jitter: Option<ResolvedJitter>,
    pub channel: Option<GaussianChannel>,
    pub sweep: Option<ResolvedSweep>,
    pub optimize: SearchOptions,
    pub simulate: ResolvedSimulate,
}

impl Scenario {
    pub fn source(&self) -> SourceParams {
        SourceParams::new(self.sigma_coh_ns, self.sigma_cor_ns, self.k_ns2)
            .expect("validated on resolution")
    }

    pub fn jitter_spec(&self) -> Option<JitterSpec> {
        self.jitter.as_ref().map(ResolvedJitter::spec)
    }

    /// The attack named by `attack_model` at the scenario's `(eta, xi)`.
    pub fn attack(&self) -> Result<Attack> {
        Ok(match self.attack_model {
            AttackModel::Mower => Attack::Mower(MowerAttack::new(self.eta, self.xi)?),
            AttackModel::Alternate => Attack::Alternate(AlternateAttack::new(self.eta, self.xi)?),
            AttackModel::Custom => Attack::Channel {
                name: "custom".into(),
                channel: self.channel.ok_or_else(|| {
                    CliError::config("attack_model = \"custom\" needs a [channel] section")
                })?,
            },
            AttackModel::Optimize => Attack::WorstCase {
                eta: self.eta,
                xi: self.xi,
                options: self.optimize.clone(),
            },
        })
    }
}

/// Parses a time such as `"30 ps"` into nanoseconds.
pub fn parse_time(key: &str, text: &str) -> Result<f64> {
    let t = text.trim();
    let split = t
        .find(|c: char| c.is_ascii_alphabetic() && c != 'e' && c != 'E')
        .ok_or_else(|| {
            CliError::config(format!(
                "{key}: `{text}` needs a unit suffix (ns, ps or fs)"
            ))
        })?;
    let (number, unit) = t.split_at(split);
    let scale = match unit.trim() {
        "ns" => 1.0,
        "ps" => 1e-3,
        "fs" => 1e-6,
        other => {
            return Err(CliError::config(format!(
                "{key}: unknown time unit `{other}` (use ns, ps or fs)"
            )))
        }
    };
    let value: f64 = number
        .trim()
        .parse()
        .map_err(|_| CliError::config(format!("{key}: `{}` is not a number", number.trim())))?;
    if !value.is_finite() {
        return Err(CliError::config(format!("{key}: must be finite")));
    }
    Ok(value * scale)
}

fn positive_time(key: &str, text: &str) -> Result<f64> {
    let v = parse_time(key, text)?;
    if v > 0.0 {
        Ok(v)
    } else {
        Err(CliError::config(format!(
            "{key}: must be positive, got `{text}`"
        )))
    }
}

fn non_negative_time(key: &str, text: &str) -> Result<f64> {
    let v = parse_time(key, text)?;
    if v >= 0.0 {
        Ok(v)
    } else {
        Err(CliError::config(format!(
            "{key}: must be non-negative, got `{text}`"
        )))
    }
}

fn check(key: &str, ok: bool, what: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(CliError::config(format!("{key}: {what}")))
    }
}

fn positive_k(key: &str, k: f64) -> Result<f64> {
    check(key, k.is_finite() && k > 0.0, "must be finite and positive")?;
    Ok(k)
}

/// Parses and validates a scenario document.
pub fn parse_scenario(text: &str) -> Result<Scenario> {
    let raw: RawScenario = toml::from_str(text).map_err(|e| CliError::config(e.to_string()))?;
    resolve(raw)
}

fn resolve(raw: RawScenario) -> Result<Scenario> {
    let sigma_coh_ns = positive_time("sigma_coh", &raw.sigma_coh)?;
    let sigma_cor_ns = positive_time("sigma_cor", &raw.sigma_cor)?;
    let (k_ns2, dispersion) = match (raw.k_ns2, raw.group_delay_ps_per_nm, raw.wavelength_nm) {
        (Some(k), None, None) => (positive_k("k_ns2", k)?, Dispersion::Direct),
        (None, Some(d), Some(l)) => {
            check(
                "group_delay_ps_per_nm",
                d.is_finite() && d > 0.0,
                "must be finite and positive",
            )?;
            check(
                "wavelength_nm",
                l.is_finite() && l > 0.0,
                "must be finite and positive",
            )?;
            let k = k_from_group_delay(d, l)
                .map_err(|e| CliError::config(format!("group_delay_ps_per_nm: {e}")))?;
            (
                positive_k("group_delay_ps_per_nm", k)?,
                Dispersion::GroupDelay {
                    ps_per_nm: d,
                    wavelength_nm: l,
                },
            )
        }
        (None, Some(_), None) => {
            return Err(CliError::config(
                "group_delay_ps_per_nm: needs wavelength_nm",
            ))
        }
        (None, None, Some(_)) => {
            return Err(CliError::config(
                "wavelength_nm: needs group_delay_ps_per_nm",
            ))
        }
        (None, None, None) => return Err(CliError::config(
            "k_ns2: missing dispersion (give k_ns2, or group_delay_ps_per_nm with wavelength_nm)",
        )),
        (Some(_), _, _) => {
            return Err(CliError::config(
                "k_ns2: give either k_ns2 or group_delay_ps_per_nm with wavelength_nm, not both",
            ))
        }
    };
    let source = SourceParams::new(sigma_coh_ns, sigma_cor_ns, k_ns2)
        .map_err(|e| CliError::config(e.to_string()))?;
    check(
        "xi",
        raw.xi.is_finite() && raw.xi >= 0.0,
        "must be finite and non-negative",
    )?;
    check(
        "eta",
        raw.eta.is_finite() && raw.eta >= 0.0,
        "must be finite and non-negative",
    )?;

    let jitter = raw.jitter.map(resolve_jitter).transpose()?;
    if raw.attack_model == AttackModel::Custom && raw.channel.is_none() {
        return Err(CliError::config(
            "channel: attack_model = \"custom\" needs a [channel] section",
        ));
    }
    let sweep = raw
        .sweep
        .map(|s| resolve_sweep(s, &source, raw.eta, raw.xi))
        .transpose()?;
    let optimize = resolve_optimize(raw.optimize.unwrap_or_default(), raw.key_mode)?;
    let simulate = resolve_simulate(raw.simulate.unwrap_or_default())?;

    Ok(Scenario {
        sigma_coh_ns,
        sigma_cor_ns,
        k_ns2,
        dispersion,
        xi: raw.xi,
        eta: raw.eta,
        attack_model: raw.attack_model,
        key_mode: raw.key_mode,
        jitter,
        channel: raw.channel,
        sweep,
        optimize,
        simulate,
    })
}

fn resolve_jitter(j: RawJitter) -> Result<ResolvedJitter> {
    let sigma_input_ns = non_negative_time("jitter.sigma", &j.sigma)?;
    let uncertainty_ns = match &j.uncertainty {
        Some(u) => non_negative_time("jitter.uncertainty", u)?,
        None => 0.0,
    };
    let spec = match j.convention {
        JitterConvention::Sigma => JitterSpec::new(sigma_input_ns, uncertainty_ns),
        JitterConvention::Fwhm => JitterSpec::from_fwhm(sigma_input_ns, uncertainty_ns),
    }
    .map_err(|e| CliError::config(format!("jitter: {e}")))?;
    let eta_policy = match j.eta {
        None => EtaPolicy::Zero,
        Some(e) => {
            check(
                "jitter.eta",
                e.is_finite() && e >= 0.0,
                "must be finite and non-negative",
            )?;
            EtaPolicy::Fixed(e)
        }
    };
    Ok(ResolvedJitter {
        convention: j.convention,
        sigma_input_ns,
        sigma_ns: spec.sigma_j(),
        uncertainty_ns,
        eta_policy,
    })
}

fn resolve_sweep(s: RawSweep, source: &SourceParams, eta: f64, xi: f64) -> Result<ResolvedSweep> {
    check(
        "sweep.steps",
        (2..=MAX_SWEEP_POINTS).contains(&s.steps),
        "must be between 2 and 100000",
    )?;
    check(
        "sweep.start",
        s.start.is_finite() && s.start >= 0.0,
        "must be finite and non-negative",
    )?;
    check(
        "sweep.stop",
        s.stop.is_finite() && s.stop >= 0.0,
        "must be finite and non-negative",
    )?;
    if s.var == SweepVar::K {
        check(
            "sweep.start",
            s.start > 0.0,
            "a dispersion sweep must start above zero",
        )?;
    }
    let curves: Vec<Curve> = if s.curves.is_empty() {
        [ModelKind::Mower, ModelKind::Alternate]
            .into_iter()
            .map(|m| Curve {
                label: model_label(m).into(),
                model: m,
                k: None,
            })
            .collect()
    } else {
        s.curves
            .into_iter()
            .map(|c| {
                let k = c
                    .k_ns2
                    .map(|k| positive_k("sweep.curves.k_ns2", k))
                    .transpose()?;
                if let Some(k) = k {
                    source
                        .with_k(k)
                        .map_err(|e| CliError::config(format!("sweep.curves.k_ns2: {e}")))?;
                }
                let label = c.label.unwrap_or_else(|| match k {
                    Some(k) => {
                        format!("{}_k{}", model_label(c.model), crate::output::format_f64(k))
                    }
                    None => model_label(c.model).into(),
                });
                Ok(Curve {
                    label,
                    model: c.model,
                    k,
                })
            })
            .collect::<Result<_>>()?
    };
    check(
        "sweep.curves",
        curves.len() * s.steps <= MAX_SWEEP_POINTS,
        "too many points in total (limit 100000)",
    )?;
    Ok(ResolvedSweep {
        spec: SweepSpec {
            var: s.var,
            start: s.start,
            stop: s.stop,
            steps: s.steps,
            eta,
            xi,
        },
        curves,
    })
}

pub fn model_label(m: ModelKind) -> &'static str {
    match m {
        ModelKind::Mower => "mower",
        ModelKind::Alternate => "alternate",
    }
}

fn resolve_optimize(o: RawOptimize, key_mode: KeyMode) -> Result<SearchOptions> {
    let d = SearchOptions::default();
    let opts = SearchOptions {
        starts: o.starts.unwrap_or(d.starts),
        seed: o.seed.unwrap_or(d.seed),
        penalty_schedule: o.penalty_schedule.unwrap_or(d.penalty_schedule),
        tolerance: o.tolerance.unwrap_or(d.tolerance),
        max_evals_per_round: o.max_evals_per_round.unwrap_or(d.max_evals_per_round),
        key_mode,
    };
    validate_search(&opts)?;
    Ok(opts)
}

pub fn validate_search(o: &SearchOptions) -> Result<()> {
    check(
        "optimize.starts",
        (1..=MAX_STARTS).contains(&o.starts),
        "must be between 1 and 4096",
    )?;
    check(
        "optimize.max_evals_per_round",
        (1..=MAX_EVALS_PER_ROUND).contains(&o.max_evals_per_round),
        "must be between 1 and 1000000",
    )?;
    check(
        "optimize.penalty_schedule",
        !o.penalty_schedule.is_empty()
            && o.penalty_schedule.len() <= 16
            && o.penalty_schedule.iter().all(|w| w.is_finite() && *w > 0.0),
        "needs 1 to 16 finite positive weights",
    )?;
    check(
        "optimize.tolerance",
        o.tolerance.is_finite() && o.tolerance > 0.0,
        "must be finite and positive",
    )
}

fn resolve_simulate(s: RawSimulate) -> Result<ResolvedSimulate> {
    let d = ResolvedSimulate::default();
    let shots = s.shots.unwrap_or(d.shots);
    check(
        "simulate.shots",
        (2..=MAX_SHOTS).contains(&shots),
        "must be between 2 and 10000000",
    )?;
    Ok(ResolvedSimulate {
        shots,
        seed: s.seed.unwrap_or(d.seed),
    })
}
