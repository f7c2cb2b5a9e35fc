//! `ltc`: batch front-end for the phase-function, eigenvalue and sum routines.
//!
//! Exit codes: 0 ok, 1 domain or threshold failure, 2 usage, 3 certification failure.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ltc_core::C64;

use crate::commands::Suites;
use crate::config::RunConfig;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Domain(String),
    #[error(transparent)]
    Core(#[from] ltc_core::Error),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Domain(_) | CliError::Core(_) | CliError::Io(_) => 1,
        }
    }
}

/// Result of a command that ran to completion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Ok,
    /// Something was computed but did not certify.
    Failed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum What {
    /// J² + Y² by its asymptotic series
    J2y2,
    /// J J' + Y Y' by its asymptotic series
    Jjpyyp,
    /// J, Y, J', Y' of order 1/2 in closed form
    Half,
    K0,
    K1,
}

impl What {
    fn name(self) -> &'static str {
        match self {
            What::J2y2 => "j2y2",
            What::Jjpyyp => "jjpyyp",
            What::Half => "half",
            What::K0 => "k0",
            What::K1 => "k1",
        }
    }
}

#[derive(Parser)]
#[command(name = "ltc", version, about = "Phase functions, eigenvalue construction and Lieb-Thirring sums")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate one special-function quantity and print it as JSON.
    Bessel {
        #[arg(long, value_enum)]
        what: What,
        #[arg(long)]
        nu: Option<f64>,
        /// complex argument as `re,im`
        #[arg(long, value_parser = parse_complex, allow_hyphen_values = true)]
        z: Option<C64>,
        /// real argument for k0 and k1
        #[arg(long, allow_hyphen_values = true)]
        x: Option<f64>,
        /// truncation order; chosen adaptively when omitted
        #[arg(long)]
        order: Option<usize>,
    },
    /// Evaluate the phase functions at one point and print them as JSON.
    Phase {
        #[arg(long)]
        nu: f64,
        #[arg(long, value_parser = parse_complex, allow_hyphen_values = true)]
        z: C64,
        #[arg(long)]
        order: Option<usize>,
    },
    /// Solve for eigenvalues and write one CSV row per record.
    Solve(ConfigArgs),
    /// Sum over an h grid and write CSV, SVG and JSON reports.
    Sweep(ConfigArgs),
    /// Audit sampled points and records against the certified bounds.
    Verify {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long, value_enum, default_value = "all")]
        suite: Suite,
    },
    /// Cross-check certified records by direct radial integration.
    Oracle(ConfigArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Suite {
    All,
    Phase,
    Records,
    Oracle,
}

impl Suite {
    fn suites(self) -> Suites {
        match self {
            Suite::All => Suites { phase: true, records: true, oracle: true },
            Suite::Phase => Suites { phase: true, records: false, oracle: false },
            Suite::Records => Suites { phase: false, records: true, oracle: false },
            Suite::Oracle => Suites { phase: false, records: false, oracle: true },
        }
    }
}

#[derive(Args, Debug, Default)]
struct ConfigArgs {
    /// key=value configuration file
    #[arg(long)]
    config: Option<PathBuf>,
    /// override one configuration key (repeatable)
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[arg(long)]
    d: Option<String>,
    #[arg(long)]
    h: Option<String>,
    #[arg(long = "h-grid")]
    h_grid: Option<String>,
    /// auto, full, stride(a,b) or random(n,seed)
    #[arg(long)]
    sampling: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// number of sampled pairs
    #[arg(long)]
    n: Option<String>,
    #[arg(long)]
    ell: Option<String>,
    #[arg(long)]
    j: Option<String>,
    /// relative fault injected into m before auditing
    #[arg(long, allow_hyphen_values = true)]
    perturb: Option<String>,
    #[arg(long = "oracle-sample")]
    oracle_sample: Option<String>,
    #[arg(long = "out-csv")]
    out_csv: Option<String>,
    #[arg(long = "out-json")]
    out_json: Option<String>,
    #[arg(long = "out-svg")]
    out_svg: Option<String>,
}

impl ConfigArgs {
    fn resolve(&self) -> Result<RunConfig, CliError> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        let named = [
            ("d", &self.d),
            ("h", &self.h),
            ("h_grid", &self.h_grid),
            ("sampling", &self.sampling),
            ("seed", &self.seed),
            ("n", &self.n),
            ("ell", &self.ell),
            ("j", &self.j),
            ("perturb", &self.perturb),
            ("oracle_sample", &self.oracle_sample),
            ("out_csv", &self.out_csv),
            ("out_json", &self.out_json),
            ("out_svg", &self.out_svg),
        ];
        for (k, v) in named {
            if let Some(v) = v {
                cfg.set(k, v)?;
            }
        }
        for pair in &self.set {
            cfg.set_pair(pair)?;
        }
        Ok(cfg.with_defaults())
    }
}

fn parse_complex(s: &str) -> Result<C64, String> {
    let mut parts = s.split(',').map(|p| p.trim().parse::<f64>());
    match (parts.next(), parts.next(), parts.next()) {
        (Some(Ok(re)), None, None) => Ok(C64::new(re, 0.0)),
        (Some(Ok(re)), Some(Ok(im)), None) => Ok(C64::new(re, im)),
        _ => Err(format!("expected re or re,im, got '{s}'")),
    }
}

fn init_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("LTC_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Usage(format!("LTC_THREADS must be a positive integer, got '{raw}'")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Usage(e.to_string()))
}

fn run(cli: Cli) -> Result<Outcome, CliError> {
    init_threads()?;
    match cli.command {
        Command::Bessel { what, nu, z, x, order } => commands::bessel(what, nu, z, x, order),
        Command::Phase { nu, z, order } => commands::phase(nu, z, order),
        Command::Solve(a) => commands::solve(&a.resolve()?),
        Command::Sweep(a) => commands::sweep(&a.resolve()?),
        Command::Verify { config, suite } => commands::verify(&config.resolve()?, suite.suites()),
        Command::Oracle(a) => commands::oracle(&a.resolve()?),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(Outcome::Ok) => ExitCode::SUCCESS,
        Ok(Outcome::Failed) => ExitCode::from(3),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
