//! `holosim`: uncertainty sweeps, Monte Carlo campaigns and self-validation
//! for the coupled-interferometer covariance measurement.

mod csv;
mod params;
mod sweeps;
mod validate;

use std::fmt;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand};

use holosim_core::HoloError;

use params::{parse_overrides, Decl, Params, UsageError};

#[derive(Parser, Debug)]
#[command(name = "holosim", version, about = "Phase-covariance uncertainty budgets for a pair of coupled interferometers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the oracle, closed-form and invariant checks.
    Validate(Common),
    /// log10 U0 of the squeezed holometer over working phase and squeezing.
    SweepFig2(Common),
    /// Uncertainty relative to the classical limit against efficiency.
    SweepEta(Common),
    /// Uncertainty relative to the classical limit against mu / R.
    SweepMu(Common),
    /// Monte Carlo recovery of an injected phase covariance.
    Estimate(Common),
}

#[derive(Args, Debug)]
struct Common {
    /// Flat key = value file; unknown keys are rejected.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Write output here instead of stdout.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Seed for every random draw.
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
    /// Parameter overrides, e.g. --mu 1e6 --lambda=0.25.
    #[arg(value_name = "--KEY VALUE", num_args = 0.., trailing_var_arg = true, allow_hyphen_values = true)]
    overrides: Vec<String>,
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Engine(HoloError),
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => f.write_str(m),
            CliError::Engine(e) => write!(f, "{e}"),
        }
    }
}

impl From<UsageError> for CliError {
    fn from(e: UsageError) -> Self {
        CliError::Usage(e.0)
    }
}

impl From<HoloError> for CliError {
    fn from(e: HoloError) -> Self {
        CliError::Engine(e)
    }
}

const VALIDATE: &[Decl] = &[
    ("seed", "0", "seed of the random oracle cases"),
    ("mutate", "none", "inject a known fault to confirm it is caught: none or squeezing_sign"),
];

/// Resolved run: parameters plus output path.
struct Run {
    params: Params,
    out: Option<PathBuf>,
}

fn resolve(common: Common, decls: &[Decl]) -> Result<Run, CliError> {
    let mut config = common.config;
    let mut out = common.out;
    let mut pairs = Vec::new();
    if let Some(seed) = common.seed {
        pairs.push(("seed".to_string(), seed.to_string()));
    }
    for (k, v) in parse_overrides(&common.overrides)? {
        match k.as_str() {
            "config" => config = Some(v.into()),
            "out" => out = Some(v.into()),
            _ => pairs.push((k, v)),
        }
    }
    let params = Params::resolve(decls, config.as_deref(), &pairs)?;
    params.get::<u64>("seed")?;
    Ok(Run { params, out })
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<(), CliError> {
    match out {
        Some(path) => {
            fs::write(path, text).map_err(|e| CliError::usage(format!("cannot write {}: {e}", path.display())))
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

type Sweep = fn(&Params) -> Result<csv::Table, CliError>;

fn execute(cli: Cli) -> Result<bool, CliError> {
    let (common, decls, run): (Common, &[Decl], Sweep) = match cli.command {
        Command::Validate(c) => {
            let r = resolve(c, VALIDATE)?;
            let report = validate::run(r.params.get("seed")?, r.params.get("mutate")?)?;
            let text = report.render();
            if r.out.is_some() {
                emit(&r.out, &text)?;
            }
            print!("{text}");
            return Ok(report.passed());
        }
        Command::SweepFig2(c) => (c, sweeps::FIG2, sweeps::fig2),
        Command::SweepEta(c) => (c, sweeps::ETA, sweeps::eta),
        Command::SweepMu(c) => (c, sweeps::MU, sweeps::mu),
        Command::Estimate(c) => (c, sweeps::ESTIMATE, sweeps::estimate),
    };
    let r = resolve(common, decls)?;
    emit(&r.out, &run(&r.params)?.render())?;
    Ok(true)
}

fn key_help(decls: &[Decl]) -> String {
    let width = decls.iter().map(|d| d.0.len()).max().unwrap_or(0);
    let mut s = String::from("Keys (config file or --key value):\n");
    for (k, v, about) in decls {
        s.push_str(&format!("  {k:width$}  {about} [default: {v}]\n"));
    }
    s
}

fn parse_cli() -> Cli {
    let mut cmd = Cli::command();
    for (name, decls) in [
        ("validate", VALIDATE),
        ("sweep-fig2", sweeps::FIG2),
        ("sweep-eta", sweeps::ETA),
        ("sweep-mu", sweeps::MU),
        ("estimate", sweeps::ESTIMATE),
    ] {
        cmd = cmd.mut_subcommand(name, |c| c.after_help(key_help(decls)));
    }
    let matches = cmd.get_matches();
    Cli::from_arg_matches(&matches).unwrap_or_else(|e| e.exit())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = parse_cli();
    match execute(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("holosim: {e}");
            ExitCode::from(2)
        }
    }
}
