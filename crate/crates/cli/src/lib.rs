//! Batch front-end: one JSON config in, tables, reports and plot data out.

mod commands;
pub mod plot;

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use isoperim_core::PotentialRecipe;
use serde::Serialize;
use serde_json::{Map, Value};
use thiserror::Error;

pub use plot::{emit_plotdata, PlotSeries, PlotSpec};

/// Exit status for a passing run.
pub const EXIT_PASS: i32 = 0;
/// Exit status for a usage, schema or parameter error.
pub const EXIT_USAGE: i32 = 1;
/// Exit status for a verification that ran and failed.
pub const EXIT_FAIL: i32 = 2;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        EXIT_USAGE
    }
}

pub(crate) fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Profile,
    Hardy,
    Beta,
    VerifySpi,
    VerifyBeckner,
    VerifyFsobolev,
    Semigroup,
    Product,
}

impl Command {
    pub const ALL: [Command; 8] = [
        Command::Profile,
        Command::Hardy,
        Command::Beta,
        Command::VerifySpi,
        Command::VerifyBeckner,
        Command::VerifyFsobolev,
        Command::Semigroup,
        Command::Product,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Command::Profile => "profile",
            Command::Hardy => "hardy",
            Command::Beta => "beta",
            Command::VerifySpi => "verify-spi",
            Command::VerifyBeckner => "verify-beckner",
            Command::VerifyFsobolev => "verify-fsobolev",
            Command::Semigroup => "semigroup",
            Command::Product => "product",
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Command {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        Command::ALL.into_iter().find(|c| c.name() == s).ok_or_else(|| {
            let names: Vec<&str> = Command::ALL.iter().map(|c| c.name()).collect();
            usage(format!("command: unknown command '{s}' (expected one of {})", names.join(", ")))
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn extension(&self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

impl FromStr for Format {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(usage(format!("format: expected \"csv\" or \"json\", got \"{other}\""))),
        }
    }
}

/// A fully resolved run: measure, command, raw parameters, output format and seed.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub measure: PotentialRecipe,
    pub command: Command,
    pub params: Value,
    pub format: Format,
    pub seed: u64,
}

const CONFIG_KEYS: [&str; 5] = ["measure", "command", "params", "format", "seed"];

impl RunConfig {
    /// Parses a config document. `command` comes from the command line and
    /// must agree with a `command` key in the file when both are present.
    pub fn from_json_str(text: &str, command: Option<Command>) -> Result<Self, CliError> {
        let value: Value = serde_json::from_str(text).map_err(|e| usage(format!("config: invalid JSON: {e}")))?;
        let obj = value
            .as_object()
            .ok_or_else(|| usage("config: expected a JSON object at the top level"))?;
        if let Some(key) = obj.keys().find(|k| !CONFIG_KEYS.contains(&k.as_str())) {
            return Err(usage(format!(
                "config.{key}: unknown key (expected {})",
                CONFIG_KEYS.join(", ")
            )));
        }
        let measure = match obj.get("measure") {
            None => return Err(usage("measure: missing (an object with a \"family\" field)")),
            Some(v) => PotentialRecipe::from_json_value(v).map_err(usage)?,
        };
        let in_file = match obj.get("command") {
            None => None,
            Some(Value::String(s)) => Some(s.parse::<Command>()?),
            Some(other) => return Err(usage(format!("command: expected a string, got {other}"))),
        };
        let command = match (command, in_file) {
            (Some(a), Some(b)) if a != b => {
                return Err(usage(format!("command: config names '{b}' but '{a}' was requested")))
            }
            (Some(a), _) | (None, Some(a)) => a,
            (None, None) => return Err(usage("command: missing")),
        };
        let params = match obj.get("params") {
            None => Value::Object(Map::new()),
            Some(v @ Value::Object(_)) => v.clone(),
            Some(other) => return Err(usage(format!("params: expected an object, got {other}"))),
        };
        let format = match obj.get("format") {
            None => Format::Csv,
            Some(Value::String(s)) => s.parse()?,
            Some(other) => return Err(usage(format!("format: expected a string, got {other}"))),
        };
        let seed = match obj.get("seed") {
            None => 0,
            Some(v) => v
                .as_u64()
                .ok_or_else(|| usage(format!("seed: expected a non-negative integer, got {v}")))?,
        };
        Ok(RunConfig {
            measure,
            command,
            params,
            format,
            seed,
        })
    }

    pub fn load(path: &Path, command: Option<Command>) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json_str(&text, command)
    }
}

/// What a run produced.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub command: Command,
    pub passed: bool,
    /// Human-readable lines for stdout.
    pub summary: Vec<String>,
    pub artifacts: Vec<PathBuf>,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        if self.passed {
            EXIT_PASS
        } else {
            EXIT_FAIL
        }
    }
}

/// Runs `config`, writing artifacts into `out_dir` (created when missing).
pub fn run(config: &RunConfig, out_dir: &Path) -> Result<Outcome, CliError> {
    fs::create_dir_all(out_dir).map_err(|source| CliError::Io {
        path: out_dir.to_path_buf(),
        source,
    })?;
    commands::dispatch(config, out_dir)
}

/// Sizes the global worker pool from `ISOPERIM_THREADS` when it is set.
pub fn init_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("ISOPERIM_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n >= 1)
        .ok_or_else(|| usage(format!("ISOPERIM_THREADS: expected a positive integer, got \"{raw}\"")))?;
    // a pool that already exists keeps its size
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

pub(crate) fn write_file(path: &Path, contents: &str) -> Result<PathBuf, CliError> {
    fs::write(path, contents).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(path.to_path_buf())
}
