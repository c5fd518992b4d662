//! Batch front end for `locchan`: validate and classify channel files, run
//! equivalence probes, inspect states and generate fixtures.
//!
//! Exit codes: 0 success or consistent, 1 probe inconsistent with the
//! characterization, 2 semantic validation failure, 3 parse or usage
//! failure, 4 unsupported request.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

pub mod commands;
pub mod spec_file;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{message}")]
    Parse {
        message: String,
        field: Option<String>,
        line: Option<usize>,
        column: Option<usize>,
    },
    #[error("{message}")]
    Invalid {
        message: String,
        deviation: Option<f64>,
    },
    #[error("{0}")]
    Unsupported(String),
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse { .. } | CliError::Usage(_) => 3,
            CliError::Invalid { .. } => 2,
            CliError::Unsupported(_) => 4,
        }
    }

    pub fn status(&self) -> &'static str {
        match self {
            CliError::Parse { .. } => "parse_error",
            CliError::Invalid { .. } => "invalid",
            CliError::Unsupported(_) => "unsupported",
            CliError::Usage(_) => "usage_error",
        }
    }

    /// Library errors raised while checking a loaded file.
    pub fn from_core(context: &str, e: locchan::Error) -> Self {
        let deviation = match e {
            locchan::Error::NotTracePreserving { deviation } => Some(deviation),
            _ => None,
        };
        CliError::Invalid {
            message: format!("{context}: {e}"),
            deviation,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Table,
    Json,
}

#[derive(Debug, Parser)]
#[command(name = "locchan", version, about = "Local quantum channel analysis")]
pub struct Cli {
    /// Elementwise equality tolerance.
    #[arg(long, global = true, default_value_t = 1e-9)]
    pub tol: f64,
    /// Relative singular-value cutoff for numerical rank.
    #[arg(long = "rank-tol", global = true, default_value_t = 1e-8)]
    pub rank_tol: f64,
    #[arg(long, global = true, value_enum, default_value_t = Format::Table)]
    pub format: Format,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check that a channel file is completely positive and trace preserving.
    Validate { path: PathBuf },
    /// Structural class, witness and minimal Kraus count of a channel.
    Classify { path: PathBuf },
    /// Compare structure and sampled behavior of a local channel pair.
    Probe(ProbeArgs),
    /// Schmidt data, MES verdict or entanglement entropy of a state file.
    State {
        #[arg(value_enum)]
        action: StateAction,
        path: PathBuf,
    },
    /// Write a random or named fixture file.
    Gen(GenArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Validate { .. } => "validate",
            Command::Classify { .. } => "classify",
            Command::Probe(_) => "probe",
            Command::State { .. } => "state",
            Command::Gen(_) => "gen",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Mes,
    Schmidt,
    Separable,
}

#[derive(Debug, clap::Args)]
pub struct ProbeArgs {
    #[arg(value_enum)]
    pub mode: ModeArg,
    /// Channel on subsystem A; identity when omitted.
    #[arg(long)]
    pub channel_a: Option<PathBuf>,
    /// Channel on subsystem B; identity when omitted.
    #[arg(long)]
    pub channel_b: Option<PathBuf>,
    #[arg(long, num_args = 2, value_names = ["M", "N"], required = true)]
    pub dims: Vec<usize>,
    /// Schmidt rank of the inputs (schmidt mode only).
    #[arg(long)]
    pub r: Option<usize>,
    #[arg(long, default_value_t = locchan::probes::DEFAULT_SAMPLES)]
    pub samples: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StateAction {
    Schmidt,
    Mes,
    Entropy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum GenKind {
    Unitary,
    Isometry,
    Cptp,
    ConstantPure,
    MesPure,
    MesMixed,
    PureRank,
    Named,
}

#[derive(Debug, clap::Args)]
pub struct GenArgs {
    #[arg(value_enum)]
    pub kind: GenKind,
    /// Dimension for unitary and named channels.
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long)]
    pub d_in: Option<usize>,
    #[arg(long)]
    pub d_out: Option<usize>,
    /// Environment dimension for cptp.
    #[arg(long)]
    pub e: Option<usize>,
    #[arg(long, num_args = 2, value_names = ["M", "N"])]
    pub dims: Option<Vec<usize>>,
    /// Number of mixture components for mes-mixed.
    #[arg(long)]
    pub k: Option<usize>,
    /// Schmidt rank for pure-rank.
    #[arg(long)]
    pub r: Option<usize>,
    /// depolarizing, dephasing or amplitude_damping.
    #[arg(long)]
    pub name: Option<String>,
    /// Noise parameter in [0, 1] for named channels.
    #[arg(long)]
    pub param: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

/// What a single invocation printed and how it exits.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

#[derive(Serialize)]
struct ErrorRecord<'a> {
    command: &'a str,
    status: &'static str,
    exit_code: i32,
    message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    field: Option<&'a str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    line: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    column: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    deviation: Option<f64>,
}

fn render_error(command: &str, format: Format, e: &CliError) -> Outcome {
    let mut stderr = format!("error: {e}");
    let (mut field, mut line, mut column, mut deviation) = (None, None, None, None);
    match e {
        CliError::Parse {
            field: f,
            line: l,
            column: c,
            ..
        } => {
            field = f.as_deref();
            line = *l;
            column = *c;
            if let Some(f) = f {
                stderr.push_str(&format!(" (field {f})"));
            }
        }
        CliError::Invalid { deviation: d, .. } => deviation = *d,
        _ => {}
    }
    stderr.push('\n');
    let stdout = match format {
        Format::Json => spec_file::to_document(&ErrorRecord {
            command,
            status: e.status(),
            exit_code: e.exit_code(),
            message: e.to_string(),
            field,
            line,
            column,
            deviation,
        }),
        Format::Table => String::new(),
    };
    Outcome {
        code: e.exit_code(),
        stdout,
        stderr,
    }
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => execute(&cli),
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => Outcome {
                    code: 0,
                    stdout: text,
                    stderr: String::new(),
                },
                _ => Outcome {
                    code: 3,
                    stdout: String::new(),
                    stderr: text,
                },
            }
        }
    }
}

pub fn execute(cli: &Cli) -> Outcome {
    match commands::dispatch(cli) {
        Ok(r) => Outcome {
            code: r.code,
            stdout: match cli.format {
                Format::Json => r.json,
                Format::Table => r.table,
            },
            stderr: String::new(),
        },
        Err(e) => render_error(cli.command.name(), cli.format, &e),
    }
}
