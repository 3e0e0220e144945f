//! Batch runner: parses the command line and a TOML config, runs one
//! experiment, and writes CSV tables plus `summary.json`, `timing.json` and
//! `schema.json` into the output directory.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 invalid configuration or input,
//! 3 numerical guard tripped or self-check failed.

pub mod config;
pub mod experiments;

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

pub use config::{ExperimentConfig, Kind};
use experiments::Check;

/// Environment variable overriding the output directory.
pub const OUT_ENV: &str = "NILFLOW_OUT";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] nilflow::Error),
    #[error("i/o: {0}")]
    Io(String),
    #[error("{0}")]
    Guard(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Core(nilflow::Error::Io(_)) | CliError::Io(_) => 1,
            CliError::Core(e) if e.is_numerical_guard() => 3,
            CliError::Core(_) => 2,
            CliError::Guard(_) => 3,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(name = "nilflow", version, about = "Heisenberg nilflow experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// TOML experiment configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory (overrides the config and NILFLOW_OUT).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Seed (overrides the config).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads; 0 uses all available cores. Results do not depend on it.
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,
    /// Suppress the summary on stdout.
    #[arg(long, global = true)]
    pub quiet: bool,
}

#[derive(Debug, Clone, Copy, Subcommand)]
pub enum Command {
    /// Character sum along the skew-shift, with a kernel accuracy self-check.
    WeylSum,
    /// L² norm and mean of Weyl sums over the y-circle.
    #[command(name = "l2-identity")]
    L2Identity,
    /// Convergence of normalized translation averages in the line model.
    LineModel,
    /// Empirical distribution of normalized ergodic integrals across scales.
    LimitDist,
    /// Sublevel-set measures and their power-law fit.
    Sublevel,
    /// Valency bounds and Chebyshev degrees of leaf functions.
    Valency,
    /// Stretch growth and correlation decay of a time change.
    Correlation,
    /// Cusp excursions and second moments along the renormalization orbit.
    RenormTrack,
}

impl From<Command> for Kind {
    fn from(c: Command) -> Kind {
        match c {
            Command::WeylSum => Kind::WeylSum,
            Command::L2Identity => Kind::L2Identity,
            Command::LineModel => Kind::LineModel,
            Command::LimitDist => Kind::LimitDist,
            Command::Sublevel => Kind::Sublevel,
            Command::Valency => Kind::Valency,
            Command::Correlation => Kind::Correlation,
            Command::RenormTrack => Kind::RenormTrack,
        }
    }
}

/// What a successful or guard-tripped run produced.
#[derive(Debug)]
pub struct RunReport {
    pub out_dir: PathBuf,
    pub summary: Value,
    pub failure: Option<CliError>,
}

/// Hex SHA-256 of the canonical JSON form of the resolved config.
pub fn config_hash(cfg: &ExperimentConfig) -> String {
    let canonical = serde_json::to_string(cfg).expect("config serializes");
    Sha256::digest(canonical.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn load_config(cli: &Cli, kind: Kind) -> Result<ExperimentConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
            ExperimentConfig::parse(&text)?
        }
        None => ExperimentConfig::default(),
    };
    if let Some(k) = cfg.kind {
        if k != kind {
            return Err(CliError::Config(format!("config is for `{k}` but the subcommand is `{kind}`")));
        }
    }
    cfg.kind = Some(kind);
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn out_dir(cli: &Cli, cfg: &ExperimentConfig, kind: Kind) -> PathBuf {
    cli.out
        .clone()
        .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
        .or_else(|| cfg.out.clone())
        .unwrap_or_else(|| Path::new("out").join(kind.name()))
}

#[derive(Serialize)]
struct SchemaFile {
    library_version: &'static str,
    float_format: &'static str,
    experiments: Vec<SchemaEntry>,
}

#[derive(Serialize)]
struct SchemaEntry {
    kind: Kind,
    files: Vec<SchemaTable>,
}

#[derive(Serialize)]
struct SchemaTable {
    file: &'static str,
    columns: Vec<nilflow::io::Column>,
}

/// Column documentation for every experiment, plus the config defaults.
pub fn schema_json() -> Value {
    let schema = SchemaFile {
        library_version: nilflow::VERSION,
        float_format: "scientific, 17 significant digits",
        experiments: Kind::ALL
            .iter()
            .map(|&kind| SchemaEntry {
                kind,
                files: experiments::schema(kind)
                    .into_iter()
                    .map(|(file, columns)| SchemaTable { file, columns })
                    .collect(),
            })
            .collect(),
    };
    let mut v = serde_json::to_value(schema).expect("schema serializes");
    v["config_defaults"] = serde_json::to_value(ExperimentConfig::default()).expect("config serializes");
    v
}

/// Runs the experiment and writes its artifacts.
pub fn execute(cli: &Cli) -> Result<RunReport, CliError> {
    let kind = Kind::from(cli.command);
    let cfg = load_config(cli, kind)?;
    let dir = out_dir(cli, &cfg, kind);
    let start = Instant::now();
    let outcome = nilflow::par::with_threads(cli.threads, || experiments::run(kind, &cfg))?;
    let wall = start.elapsed().as_secs_f64();

    let failed: Vec<&Check> = outcome.checks.iter().filter(|c| !c.pass).collect();
    let status = if outcome.guard.is_some() {
        "guard-tripped"
    } else if !failed.is_empty() {
        "check-failed"
    } else {
        "ok"
    };
    let summary = json!({
        "kind": kind,
        "library_version": nilflow::VERSION,
        "config_hash": config_hash(&cfg),
        "seed": cfg.seed,
        "config": cfg,
        "status": status,
        "guard": outcome.guard,
        "checks": outcome.checks,
        "results": outcome.results,
        "files": outcome.tables.iter().map(|(f, _)| *f).collect::<Vec<_>>(),
    });
    for (file, table) in &outcome.tables {
        table.write_csv(&dir.join(file))?;
    }
    nilflow::io::write_json(&dir.join("summary.json"), &summary)?;
    nilflow::io::write_json(
        &dir.join("timing.json"),
        &json!({ "wall_seconds": wall, "threads": nilflow::par::with_threads(cli.threads, nilflow::par::current_threads) }),
    )?;
    nilflow::io::write_json(&dir.join("schema.json"), &schema_json())?;

    let failure = if let Some(g) = &outcome.guard {
        Some(CliError::Guard(format!("numerical guard tripped: {g}")))
    } else if !failed.is_empty() {
        let names: Vec<String> =
            failed.iter().map(|c| format!("{} = {:e} exceeds {:e}", c.name, c.value, c.limit)).collect();
        Some(CliError::Guard(format!("self-check failed: {}", names.join("; "))))
    } else {
        None
    };
    Ok(RunReport { out_dir: dir, summary, failure })
}

/// Parses `args`, runs, prints, and returns the process exit code.
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
    match execute(&cli) {
        Ok(report) => {
            if !cli.quiet {
                println!("{}", serde_json::to_string_pretty(&report.summary["results"]).unwrap_or_default());
                println!("artifacts in {}", report.out_dir.display());
            }
            match report.failure {
                Some(e) => {
                    eprintln!("nilflow: {e}");
                    e.exit_code()
                }
                None => 0,
            }
        }
        Err(e) => {
            eprintln!("nilflow: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn subcommand_names() {
        for (name, kind) in
            [("weyl-sum", Kind::WeylSum), ("l2-identity", Kind::L2Identity), ("renorm-track", Kind::RenormTrack)]
        {
            let cli = Cli::try_parse_from(["nilflow", name, "--seed", "3"]).unwrap();
            assert_eq!(Kind::from(cli.command), kind);
            assert_eq!(cli.seed, Some(3));
        }
    }

    #[test]
    fn hash_tracks_the_config() {
        let a = ExperimentConfig::default();
        let mut b = a.clone();
        assert_eq!(config_hash(&a), config_hash(&b));
        b.seed += 1;
        assert_ne!(config_hash(&a), config_hash(&b));
        assert_eq!(config_hash(&a).len(), 64);
    }

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::Config("x".into()).exit_code(), 2);
        assert_eq!(CliError::Core(nilflow::Error::NonTransversal).exit_code(), 2);
        assert_eq!(CliError::Core(nilflow::Error::InsufficientSignal("x".into())).exit_code(), 3);
        assert_eq!(CliError::Guard("x".into()).exit_code(), 3);
        assert_eq!(CliError::Io("x".into()).exit_code(), 1);
    }

    #[test]
    fn mismatched_kind_is_rejected() {
        let dir = std::env::temp_dir().join(format!("nilflow-kind-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("c.toml");
        std::fs::write(&path, "kind = \"sublevel\"\n").unwrap();
        let cli = Cli::try_parse_from(["nilflow", "weyl-sum", "--config", path.to_str().unwrap()]).unwrap();
        assert!(matches!(load_config(&cli, Kind::WeylSum), Err(CliError::Config(_))));
        std::fs::remove_dir_all(dir).unwrap();
    }
}
