//! `ctrlcost --config experiment.toml --out results/`
//!
//! Runs one experiment, writes `<command>.csv` (plus any extra tables as
//! `<command>-<table>.csv`) and `<command>.manifest.json` into the output
//! directory. Exit status: 0 on success, 1 on numerical failure, 2 on
//! invalid input.

mod config;
mod run;

use std::fmt;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;
use ctrlcost::precision::PrecisionContext;
use serde_json::json;

use config::ExperimentConfig;

#[derive(Parser, Debug)]
#[command(
    name = "ctrlcost",
    version,
    about = "Controllability-cost experiments for 1-D Schrödinger systems"
)]
struct Args {
    /// Experiment description (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Mantissa bits; overrides `mantissa_bits` in the config.
    #[arg(long)]
    precision: Option<u32>,
    /// Output directory; overrides `output` in the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for randomly drawn initial data.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug)]
pub enum CliError {
    Validation(String),
    Numeric(String),
    Io(String),
}

impl CliError {
    pub fn field(field: &str, message: impl fmt::Display) -> Self {
        CliError::Validation(format!("invalid `{field}`: {message}"))
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Numeric(_) | CliError::Io(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Validation(m) => write!(f, "validation error: {m}"),
            CliError::Numeric(m) => write!(f, "numerical failure: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl From<ctrlcost::Error> for CliError {
    fn from(e: ctrlcost::Error) -> Self {
        if e.is_validation() {
            CliError::Validation(e.to_string())
        } else {
            CliError::Numeric(e.to_string())
        }
    }
}

fn io(path: &Path, e: impl fmt::Display) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

fn write_table(path: &Path, table: &run::Table) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| io(path, e))?;
    w.write_record(&table.header).map_err(|e| io(path, e))?;
    for row in &table.rows {
        w.write_record(row).map_err(|e| io(path, e))?;
    }
    w.flush().map_err(|e| io(path, e))
}

fn execute(args: &Args) -> Result<PathBuf, CliError> {
    let text = std::fs::read_to_string(&args.config).map_err(|e| io(&args.config, e))?;
    let mut cfg: ExperimentConfig =
        toml::from_str(&text).map_err(|e| CliError::Validation(format!("{}: {e}", args.config.display())))?;
    if let Some(bits) = args.precision {
        cfg.mantissa_bits = Some(bits);
    }
    cfg.validate()?;
    let ctx = PrecisionContext::new(cfg.mantissa_bits.unwrap_or(256))?;
    let out = args
        .out
        .clone()
        .or_else(|| cfg.output.clone())
        .unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&out).map_err(|e| io(&out, e))?;

    let start = Instant::now();
    let outcome = run::run(&cfg, &ctx, args.seed)?;
    let wall = start.elapsed().as_secs_f64();

    let name = cfg.command.name();
    let mut files = Vec::new();
    for table in &outcome.tables {
        let file = if table.suffix.is_empty() {
            format!("{name}.csv")
        } else {
            format!("{name}-{}.csv", table.suffix)
        };
        write_table(&out.join(&file), table)?;
        files.push(file);
    }
    let mut resolved = outcome.resolved;
    resolved.output = Some(out.clone());
    let manifest = json!({
        "command": name,
        "library_version": ctrlcost::VERSION,
        "mantissa_bits": ctx.bits(),
        "seed": args.seed,
        "wall_time_seconds": wall,
        "config": resolved,
        "outputs": files,
        "results": outcome.results,
    });
    let path = out.join(format!("{name}.manifest.json"));
    let body = serde_json::to_string_pretty(&manifest).map_err(|e| io(&path, e))?;
    std::fs::write(&path, body + "\n").map_err(|e| io(&path, e))?;
    Ok(path)
}

fn main() -> ExitCode {
    let args = Args::parse();
    match execute(&args) {
        Ok(manifest) => {
            println!("{}", manifest.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code())
        }
    }
}
