//! `qbattery` command line: `scan`, `predict` and `phase`.

use std::path::PathBuf;

use clap::{Parser, Subcommand};
use serde::Serialize;

use crate::criticality::{harmonic_alt, predicted_jump, predicted_log_coefficient};
use crate::models::haldane::{is_critical, phase, Phase};
use crate::models::{chern_numeric, chern_sign, critical_t2, haldane_masses, HaldaneParams, ModelError};
use crate::quadrature::sphere_surface;
use crate::scan::{run, RunConfig, ScanError};

pub const THREADS_ENV: &str = "QBATTERY_THREADS";

#[derive(Debug, Parser)]
#[command(name = "qbattery", version, about = "Stored energy and criticality of quench-charged two-band batteries")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a parameter scan described by a JSON config.
    Scan {
        #[arg(long)]
        config: PathBuf,
        /// CSV path; overrides the config. Stdout when neither is given.
        #[arg(long)]
        out: Option<PathBuf>,
        /// JSON summary path; overrides the config.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Analytic jump (odd d) or log coefficient (even d) of the Dirac cone.
    Predict {
        #[arg(long)]
        dim: u32,
        #[arg(long, allow_hyphen_values = true)]
        delta: f64,
    },
    /// Haldane Dirac masses, phase and Chern number.
    Phase {
        #[arg(long, allow_hyphen_values = true)]
        m: f64,
        #[arg(long, allow_hyphen_values = true)]
        t2: f64,
        #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
        t1: f64,
        /// Also compute the Chern number on a plaquette mesh.
        #[arg(long)]
        numeric_chern: bool,
        #[arg(long, default_value_t = 48)]
        grid: usize,
    },
}

/// Failure with its process exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl From<ScanError> for Failure {
    fn from(e: ScanError) -> Self {
        Failure { code: e.exit_code(), message: e.to_string() }
    }
}

fn validation(message: impl Into<String>) -> Failure {
    Failure { code: 2, message: message.into() }
}

#[derive(Debug, Serialize)]
pub struct Prediction {
    pub dim: u32,
    pub delta: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub jump: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub log_coefficient: Option<f64>,
    pub sphere_surface: f64,
    pub harmonic: f64,
}

pub fn predict(dim: u32, delta: f64) -> Result<Prediction, Failure> {
    if dim == 0 {
        return Err(validation("dimension must be at least 1"));
    }
    let (jump, log_coefficient) = if dim % 2 == 1 {
        (Some(predicted_jump(dim, delta, delta.abs()).map_err(|e| validation(e.to_string()))?), None)
    } else {
        (None, Some(predicted_log_coefficient(dim, delta).map_err(|e| validation(e.to_string()))?))
    };
    Ok(Prediction {
        dim,
        delta,
        jump,
        log_coefficient,
        sphere_surface: sphere_surface(dim),
        harmonic: harmonic_alt(dim),
    })
}

#[derive(Debug, Serialize)]
pub struct PhaseReport {
    pub t1: f64,
    pub m: f64,
    pub t2: f64,
    pub mass_k: f64,
    pub mass_k_prime: f64,
    pub t2c: f64,
    pub kind: Phase,
    pub chern: Option<i32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub chern_numeric: Option<i32>,
}

pub fn phase_report(t1: f64, m: f64, t2: f64, numeric: Option<usize>) -> Result<PhaseReport, Failure> {
    let p = HaldaneParams::new(t1, t2, m).map_err(|e| validation(e.to_string()))?;
    let (mass_k, mass_k_prime) = haldane_masses(&p);
    let chern_numeric = match numeric {
        Some(n) if !is_critical(&p) => match chern_numeric(&p, n) {
            Ok(c) => Some(c),
            Err(e @ (ModelError::GridTooSmall { .. } | ModelError::GapTooSmall { .. })) => {
                return Err(validation(e.to_string()))
            }
            Err(e) => return Err(Failure { code: 1, message: e.to_string() }),
        },
        _ => None,
    };
    Ok(PhaseReport {
        t1,
        m,
        t2,
        mass_k,
        mass_k_prime,
        t2c: critical_t2(m),
        kind: phase(&p),
        chern: chern_sign(&p).ok(),
        chern_numeric,
    })
}

/// Caps the global rayon pool from `QBATTERY_THREADS` (0 or unset: automatic).
pub fn configure_threads() -> Result<(), Failure> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .map_err(|_| validation(format!("{THREADS_ENV} must be a non-negative integer, got {raw:?}")))?;
    if n > 0 {
        // Fails only if a pool already exists, which leaves the old cap in place.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).unwrap_or_else(|_| "{}".into())
}

/// Runs a parsed command; returns what to print on stdout.
pub fn execute(cli: Cli) -> Result<String, Failure> {
    configure_threads()?;
    match cli.command {
        Command::Scan { config, out, report } => {
            let mut cfg = RunConfig::from_path(&config)?;
            let dir = config.parent().map(PathBuf::from).unwrap_or_default();
            cfg.resolve_outputs(&dir);
            let csv = out.or_else(|| cfg.output.csv.clone());
            let report = report.or_else(|| cfg.output.report.clone());
            let outcome = run(&cfg)?;
            let written = outcome.write(csv.as_deref(), report.as_deref())?;
            if csv.is_none() {
                // The CSV went to stdout.
                return Ok(String::new());
            }
            Ok(match report {
                Some(_) => written.iter().map(|p| format!("wrote {}\n", p.display())).collect(),
                None => outcome.summary_json(),
            })
        }
        Command::Predict { dim, delta } => Ok(to_json(&predict(dim, delta)?) + "\n"),
        Command::Phase { m, t2, t1, numeric_chern, grid } => {
            Ok(to_json(&phase_report(t1, m, t2, numeric_chern.then_some(grid))?) + "\n")
        }
    }
}

/// Entry point for the binary: parses `args`, prints results, returns the
/// exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(text) => {
            print!("{text}");
            0
        }
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}
