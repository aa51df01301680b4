//! `osup` command-line front end. Every subcommand writes one JSON report.

use std::ffi::OsString;
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{json, Value};

mod args;
mod commands;

pub use args::*;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;

#[derive(Parser, Debug)]
#[command(
    name = "osup",
    version,
    about = "Orlicz norms, moduli of continuity and support schedules for sampled paths"
)]
pub struct Cli {
    /// Worker threads; 0 uses every core. Reports do not depend on it.
    #[arg(long, env = "OSUP_THREADS", default_value_t = 0, global = true)]
    pub threads: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate a path ensemble and write it with its manifest.
    Gen(GenArgs),
    /// Tabulate the Orlicz norm of the modulus of continuity.
    Mcurve(McurveArgs),
    /// Build the δ(n) schedule for one ensemble or a family.
    BuildSupport(BuildSupportArgs),
    /// Enhanced norm and membership trend of every path.
    EnhancedNorm(EnhancedNormArgs),
    /// Check the Orlicz bound chain on a training (and holdout) ensemble.
    VerifyBound(VerifyBoundArgs),
    /// Equicontinuity and covering diagnostics of the unit ball.
    Compactness(CompactnessArgs),
    /// Closed-form sup of θ(t) = τt - |t|^p/p against the grid maximum.
    Counterexample(CounterexampleArgs),
    /// Weibull-type tail exponent of a sample.
    Tail(TailArgs),
    /// Exploratory Orlicz-norm profile of sup θ over growing domains.
    DhProbe(DhProbeArgs),
    /// Δ2 and weaker-than classification of two Orlicz functions.
    Classify(ClassifyArgs),
}

#[derive(Debug)]
pub enum CliError {
    Core(osup_core::Error),
    Usage(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) if e.is_numerical() => EXIT_NUMERICAL,
            _ => EXIT_VALIDATION,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Core(e) => e.fmt(f),
            CliError::Usage(m) => f.write_str(m),
        }
    }
}

impl From<osup_core::Error> for CliError {
    fn from(e: osup_core::Error) -> Self {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Core(e.into())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Core(e.into())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

pub(crate) fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

/// Parses `argv` (program name first), runs the subcommand and returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_VALIDATION,
            };
        }
    };
    let pool = match rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads)
        .build()
    {
        Ok(p) => p,
        Err(e) => {
            eprintln!("osup: cannot start {} worker threads: {e}", cli.threads);
            return EXIT_VALIDATION;
        }
    };
    match pool.install(|| commands::dispatch(cli.command)) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("osup: {e}");
            e.exit_code()
        }
    }
}

/// The common report wrapper.
pub(crate) fn envelope(
    command: &str,
    config: &impl Serialize,
    master_seed: Value,
    fingerprints: Value,
    result: impl Serialize,
) -> CliResult<Value> {
    Ok(json!({
        "tool": "osup",
        "version": env!("CARGO_PKG_VERSION"),
        "command": command,
        "config": serde_json::to_value(config)?,
        "master_seed": master_seed,
        "fingerprints": fingerprints,
        "result": serde_json::to_value(result)?,
    }))
}

/// Pretty JSON with a trailing newline, to `out` or standard output.
pub(crate) fn emit(report: &Value, out: Option<&Path>) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(report)?;
    text.push('\n');
    match out {
        Some(p) => fs::write(p, text)?,
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

/// Reads `T` from a JSON file holding either `T` itself or a report whose
/// `result` (or `result.<key>`) is a `T`.
pub(crate) fn load_wrapped<T: DeserializeOwned>(path: &Path, key: &str) -> CliResult<T> {
    let root: Value = serde_json::from_slice(&fs::read(path)?)?;
    let candidates = [
        Some(&root),
        root.get("result"),
        root.get("result").and_then(|r| r.get(key)),
    ];
    let mut first_err = None;
    for c in candidates.into_iter().flatten() {
        match serde_json::from_value::<T>(c.clone()) {
            Ok(v) => return Ok(v),
            Err(e) => {
                first_err.get_or_insert(e);
            }
        }
    }
    Err(usage(format!(
        "{}: no {key} found ({})",
        path.display(),
        first_err.map_or_else(String::new, |e| e.to_string())
    )))
}

/// Refuses to write an output over any input.
pub(crate) fn guard_outputs(inputs: &[&PathBuf], outputs: &[Option<&PathBuf>]) -> CliResult<()> {
    let canon = |p: &Path| fs::canonicalize(p).ok();
    for out in outputs.iter().flatten() {
        let Some(o) = canon(out) else { continue };
        for i in inputs {
            let sidecar = osup_core::paths::manifest_path(i);
            if canon(i).as_ref() == Some(&o) || canon(&sidecar).as_ref() == Some(&o) {
                return Err(usage(format!(
                    "output {} would overwrite input {}",
                    out.display(),
                    i.display()
                )));
            }
        }
    }
    Ok(())
}
