//! Command-line front end for qmetro: strict JSON configs, built-in families, JSON reports and CSV grids.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 invalid input, 3 numerical failure.

pub mod config;
pub mod output;
pub mod registry;
pub mod run;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, CommandFactory, Parser, Subcommand};

use config::{parse_config, resolve, Command, Method, Overrides, RunConfig};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid configuration:\n  {}", .0.join("\n  "))]
    Config(Vec<String>),
    #[error(transparent)]
    Core(#[from] qmetro::Error),
    #[error("grid point {index} ({inputs}): {source}")]
    Point {
        index: usize,
        inputs: String,
        #[source]
        source: qmetro::Error,
    },
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Core(e) | CliError::Point { source: e, .. } => {
                if e.is_validation() {
                    2
                } else {
                    3
                }
            }
            CliError::Io(_) => 1,
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "qmetro", version, about = "Quantum Fisher information, bounds, measurements and GRAPE control")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand, Debug)]
enum Sub {
    /// QFIM of a built-in family.
    Qfim(Common),
    /// Worked problem compared against its closed form.
    Scenario {
        /// dephasing, spin-field, ancilla, controlled, mzi, noon or ecs
        id: Option<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Cramér-Rao bounds and attainability.
    Bounds(Common),
    /// Classical Fisher information of a measurement next to the QFIM.
    Measurement(Common),
    /// Gaussian-state QFIM, Williamson spectrum and SLD.
    Gaussian(Common),
    /// Optimize control pulses; writes an iteration-history CSV.
    Grape(Common),
    /// Thermal-state QFI and heat capacity.
    Thermo(Common),
}

#[derive(Args, Debug, Default)]
struct Common {
    /// JSON run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Report path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// CSV table path.
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Comparison and attainability tolerance.
    #[arg(long, allow_negative_numbers = true)]
    tol: Option<f64>,
    /// builtin:<name>
    #[arg(long)]
    family: Option<String>,
    #[arg(long, value_enum)]
    method: Option<Method>,
    /// Repetitions n in the bound Tr(F⁻¹)/n.
    #[arg(long)]
    repetitions: Option<u64>,
    /// Model input NAME=VALUE. `--NAME VALUE` works for any input name too.
    #[arg(long = "set", value_name = "NAME=VALUE")]
    set: Vec<String>,
}

/// Rewrites `--NAME VALUE` for names that are not declared flags into `--set NAME=VALUE`.
fn rewrite_inputs(args: Vec<OsString>) -> Result<Vec<OsString>, CliError> {
    let cmd = Cli::command();
    let mut known: Vec<String> = vec!["help".into(), "version".into()];
    for sub in cmd.get_subcommands() {
        known.extend(sub.get_arguments().filter_map(|a| a.get_long().map(str::to_string)));
    }
    let mut out = Vec::with_capacity(args.len());
    let mut it = args.into_iter();
    if let Some(first) = it.next() {
        out.push(first);
    }
    while let Some(arg) = it.next() {
        let Some(s) = arg.to_str() else {
            out.push(arg);
            continue;
        };
        let Some(body) = s.strip_prefix("--").filter(|b| !b.is_empty()) else {
            out.push(arg);
            continue;
        };
        let (name, inline) = match body.split_once('=') {
            Some((n, v)) => (n, Some(v.to_string())),
            None => (body, None),
        };
        if known.iter().any(|k| k == name) {
            out.push(arg);
            continue;
        }
        let value = match inline {
            Some(v) => v,
            None => it
                .next()
                .and_then(|v| v.into_string().ok())
                .ok_or_else(|| CliError::Config(vec![format!("--{name}: missing value")]))?,
        };
        out.push("--set".into());
        out.push(format!("{name}={value}").into());
    }
    Ok(out)
}

fn overrides(c: &Common, scenario: Option<String>) -> Result<Overrides, CliError> {
    let mut errors = Vec::new();
    let mut params = Vec::new();
    for s in &c.set {
        match s.split_once('=') {
            Some((k, v)) => match v.trim().parse::<f64>() {
                Ok(x) => params.push((k.to_string(), x)),
                Err(_) => errors.push(format!("--{k}: '{v}' is not a number")),
            },
            None => errors.push(format!("--set {s}: expected NAME=VALUE")),
        }
    }
    if !errors.is_empty() {
        return Err(CliError::Config(errors));
    }
    Ok(Overrides {
        family: c.family.clone(),
        scenario,
        params,
        method: c.method,
        repetitions: c.repetitions,
        tol: c.tol,
        seed: c.seed,
        out: c.out.clone(),
        csv: c.csv.clone(),
    })
}

fn load(path: &PathBuf) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    parse_config(&text).map_err(|e| match e {
        CliError::Config(list) => {
            CliError::Config(list.into_iter().map(|m| format!("{}: {m}", path.display())).collect())
        }
        other => other,
    })
}

/// Parses `args` (program name first), runs the command and writes its outputs.
pub fn run_cli(args: Vec<OsString>, stdout: &mut dyn Write) -> Result<(), CliError> {
    let args = rewrite_inputs(args)?;
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) if matches!(e.kind(), clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion) => {
            write!(stdout, "{e}").map_err(|e| CliError::Io(e.to_string()))?;
            return Ok(());
        }
        Err(e) => return Err(CliError::Config(vec![e.to_string().trim_end().to_string()])),
    };
    let (command, common, scenario) = match cli.command {
        Sub::Qfim(c) => (Command::Qfim, c, None),
        Sub::Scenario { id, common } => (Command::Scenario, common, id),
        Sub::Bounds(c) => (Command::Bounds, c, None),
        Sub::Measurement(c) => (Command::Measurement, c, None),
        Sub::Gaussian(c) => (Command::Gaussian, c, None),
        Sub::Grape(c) => (Command::Grape, c, None),
        Sub::Thermo(c) => (Command::Thermo, c, None),
    };
    let mut cfg = match &common.config {
        Some(p) => load(p)?,
        None => RunConfig::default(),
    };
    cfg.apply(overrides(&common, scenario)?);
    let plan = resolve(cfg, command)?;
    let outcome = run::execute(&plan)?;
    if let Some((path, text)) = &outcome.csv {
        output::write_atomic(path, text.as_bytes())?;
    }
    match &plan.out {
        Some(path) => output::write_atomic(path, outcome.report.as_bytes())?,
        None => stdout
            .write_all(outcome.report.as_bytes())
            .map_err(|e| CliError::Io(format!("stdout: {e}")))?,
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn args(v: &[&str]) -> Vec<OsString> {
        v.iter().map(OsString::from).collect()
    }

    #[test]
    fn free_inputs_become_set_arguments() {
        let out = rewrite_inputs(args(&["qmetro", "scenario", "dephasing", "--B", "1", "--gamma=-0.1", "--tol", "1e-9"]))
            .unwrap();
        assert_eq!(
            out,
            args(&["qmetro", "scenario", "dephasing", "--set", "B=1", "--set", "gamma=-0.1", "--tol", "1e-9"])
        );
        assert!(rewrite_inputs(args(&["qmetro", "qfim", "--theta"])).is_err());
    }

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::Config(vec![]).exit_code(), 2);
        assert_eq!(CliError::Core(qmetro::Error::Domain("x".into())).exit_code(), 2);
        assert_eq!(CliError::Core(qmetro::Error::Numerical("x".into())).exit_code(), 3);
        assert_eq!(CliError::Io("x".into()).exit_code(), 1);
    }

    #[test]
    fn non_numeric_input_is_rejected() {
        let mut sink = Vec::new();
        let e = run_cli(args(&["qmetro", "qfim", "--family", "builtin:thermal", "--T", "warm"]), &mut sink).unwrap_err();
        assert_eq!(e.exit_code(), 2);
    }
}
