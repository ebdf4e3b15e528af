//! Scenario-driven front end for `doqkd-core`.
//!
//! ```text
//! doqkd keyrate --config scenarios/keyrate_1500psnm.toml --format json
//! doqkd sweep --config scenarios/experiment_sweep.toml --format csv --out curves.csv
//! ```
//!
//! Exit codes: 0 success, 1 output i/o failure, 2 usage or config error,
//! 3 infeasible or unphysical scenario, 4 numerical failure.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use doqkd_core::BasisPair;

pub use config::{parse_scenario, Scenario};
pub use error::CliError;
pub use output::{Format, Report};

/// Environment variable capping the worker thread count.
pub const THREADS_ENV: &str = "DOQKD_THREADS";

#[derive(Debug, Parser)]
#[command(
    name = "doqkd",
    version,
    about = "Gaussian security analysis of dispersive-optics QKD scenarios"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Scenario file (TOML).
    #[arg(long, short)]
    pub config: PathBuf,
    #[arg(long, short, value_enum, default_value_t = Format::Table)]
    pub format: Format,
    /// Write the result here instead of stdout.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Source covariance matrix, its TMSV decomposition and a purity check.
    State(Common),
    /// Mutual information, Holevo information and key rate per attack model.
    Keyrate(Common),
    /// Key-rate curves over xi, eta or k.
    Sweep(Common),
    /// Worst-case single-mode channel consistent with the observed variances.
    Optimize {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        starts: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        tolerance: Option<f64>,
        #[arg(long)]
        max_evals: Option<usize>,
        /// Comma-separated penalty weights, e.g. `1e3,1e5,1e7`.
        #[arg(long, value_delimiter = ',')]
        penalty_schedule: Option<Vec<f64>>,
    },
    /// Jitter-induced excess noise and the resulting key-rate ceiling.
    Jitter(Common),
    /// Monte Carlo cross-check of the correlated variances.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        shots: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Dump raw outcomes of one basis pair as CSV (`a_ns,b_ns`).
        #[arg(long)]
        samples: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = SampleBasis::Tt)]
        samples_basis: SampleBasis,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SampleBasis {
    Tt,
    Td,
    Dt,
    Dd,
}

impl From<SampleBasis> for BasisPair {
    fn from(b: SampleBasis) -> Self {
        match b {
            SampleBasis::Tt => BasisPair::TT,
            SampleBasis::Td => BasisPair::TD,
            SampleBasis::Dt => BasisPair::DT,
            SampleBasis::Dd => BasisPair::DD,
        }
    }
}

impl Command {
    fn common(&self) -> &Common {
        match self {
            Command::State(c) | Command::Keyrate(c) | Command::Sweep(c) | Command::Jitter(c) => c,
            Command::Optimize { common, .. } | Command::Simulate { common, .. } => common,
        }
    }
}

/// Parses `argv`, runs the command and returns the process exit code.
/// Results go to `stdout` or `--out`; diagnostics go to `stderr`.
pub fn run<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                write!(stderr, "{text}")
            } else {
                write!(stdout, "{text}")
            };
            return e.exit_code();
        }
    };
    match with_thread_limit(|| compute(&cli)).and_then(|(report, warnings)| {
        for w in warnings {
            let _ = writeln!(stderr, "doqkd: warning: {w}");
        }
        write_report(&cli, &report, stdout)
    }) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "doqkd: {e}");
            e.exit_code()
        }
    }
}

fn with_thread_limit<R>(f: impl FnOnce() -> error::Result<R> + Send) -> error::Result<R>
where
    R: Send,
{
    let Ok(value) = std::env::var(THREADS_ENV) else {
        return f();
    };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| {
            CliError::Config(format!(
                "{THREADS_ENV}: expected a positive integer, got `{value}`"
            ))
        })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build()
        .map_err(|e| CliError::Io(e.to_string()))?
        .install(f)
}

/// Reads and validates the scenario named by `--config`.
pub fn load_scenario(path: &std::path::Path) -> error::Result<Scenario> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    parse_scenario(&text)
}

/// Runs the command; returns the report and any warnings for stderr.
fn compute(cli: &Cli) -> error::Result<(Report, Vec<String>)> {
    let common = cli.command.common();
    let mut scenario = load_scenario(&common.config)?;
    let mut warnings = Vec::new();
    let report = match &cli.command {
        Command::State(_) => {
            Report::new("state", scenario.clone(), commands::state(&scenario)?, None)?
        }
        Command::Keyrate(_) => Report::new(
            "keyrate",
            scenario.clone(),
            commands::keyrate(&scenario)?,
            Some("models"),
        )?,
        Command::Sweep(_) => {
            let r = commands::run_sweep(&scenario)?;
            if r.failed_points > 0 {
                warnings.push(format!(
                    "{} sweep points could not be evaluated",
                    r.failed_points
                ));
            }
            Report::new("sweep", scenario.clone(), r, Some("rows"))?
        }
        Command::Jitter(_) => Report::new(
            "jitter",
            scenario.clone(),
            commands::jitter(&scenario)?,
            None,
        )?,
        Command::Optimize {
            starts,
            seed,
            tolerance,
            max_evals,
            penalty_schedule,
            ..
        } => {
            let o = &mut scenario.optimize;
            o.starts = starts.unwrap_or(o.starts);
            o.seed = seed.unwrap_or(o.seed);
            o.tolerance = tolerance.unwrap_or(o.tolerance);
            o.max_evals_per_round = max_evals.unwrap_or(o.max_evals_per_round);
            if let Some(w) = penalty_schedule {
                o.penalty_schedule = w.clone();
            }
            config::validate_search(o)?;
            Report::new(
                "optimize",
                scenario.clone(),
                commands::optimize(&scenario)?,
                None,
            )?
        }
        Command::Simulate {
            shots,
            seed,
            samples,
            samples_basis,
            ..
        } => {
            let sim = &mut scenario.simulate;
            sim.shots = shots.unwrap_or(sim.shots);
            sim.seed = seed.unwrap_or(sim.seed);
            if !(2..=config::MAX_SHOTS).contains(&sim.shots) {
                return Err(CliError::Config(
                    "shots: must be between 2 and 10000000".into(),
                ));
            }
            let run = commands::simulate(&scenario)?;
            if let Some(path) = samples {
                let mut w = BufWriter::new(File::create(path)?);
                commands::write_samples(run.samples.get((*samples_basis).into()), &mut w)?;
                w.flush()?;
            }
            Report::new("simulate", scenario.clone(), run.result, Some("variances"))?
        }
    };
    Ok((report, warnings))
}

fn write_report(cli: &Cli, report: &Report, stdout: &mut dyn Write) -> error::Result<()> {
    let common = cli.command.common();
    match &common.out {
        Some(path) => {
            let mut w = BufWriter::new(File::create(path)?);
            report.write(common.format, &mut w)?;
            w.flush()?;
        }
        None => report.write(common.format, stdout)?,
    }
    Ok(())
}
