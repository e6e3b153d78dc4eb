//! Command-line front end: one subcommand per experiment, configured by a
//! JSON file, writing CSV/JSON artifacts and a manifest.
//!
//! Exit status is 0 on success, 2 for configuration errors (the payload names
//! the offending field) and 3 for numerical or I/O failures.

mod commands;
mod config;

pub use config::Config;

use std::ffi::OsString;
use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, ValueEnum};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::error::Error;

#[derive(Debug)]
pub enum CliError {
    Schema { path: String, message: String },
    Numeric(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Numeric(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Numeric(Error::Io(e))
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Schema { .. } => 2,
            CliError::Numeric(_) => 3,
        }
    }

    pub fn payload(&self) -> Value {
        match self {
            CliError::Schema { path, message } => json!({"error": "schema", "path": path, "message": message}),
            CliError::Numeric(e) => json!({"error": e.kind(), "message": e.to_string()}),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Command {
    Whitney,
    QhDist,
    QhBeta,
    Shadows,
    Chain,
    Energy,
    Capacity,
    BestConstant,
    SharpnessSjohn,
    SharpnessQhbc,
    PotentialCheck,
    Report,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Whitney => "whitney",
            Command::QhDist => "qh-dist",
            Command::QhBeta => "qh-beta",
            Command::Shadows => "shadows",
            Command::Chain => "chain",
            Command::Energy => "energy",
            Command::Capacity => "capacity",
            Command::BestConstant => "best-constant",
            Command::SharpnessSjohn => "sharpness-sjohn",
            Command::SharpnessQhbc => "sharpness-qhbc",
            Command::PotentialCheck => "potential-check",
            Command::Report => "report",
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "fracpoincare", version, about = "Numerical experiments for fractional Sobolev-Poincaré inequalities")]
pub struct Args {
    #[arg(value_enum)]
    pub command: Command,
    /// JSON configuration file.
    pub config: PathBuf,
    #[arg(long, default_value = "out")]
    pub output_dir: PathBuf,
    /// Worker thread cap; defaults to the machine's parallelism.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Replaces `solver.seed` from the configuration.
    #[arg(long)]
    pub seed_override: Option<u64>,
}

/// Artifact sink for one run.
pub struct Output {
    dir: PathBuf,
    files: Vec<String>,
}

impl Output {
    fn new(dir: &Path) -> std::io::Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Self { dir: dir.to_path_buf(), files: Vec::new() })
    }

    pub fn csv(&mut self, name: &str, write: impl FnOnce(&mut BufWriter<fs::File>) -> std::io::Result<()>) -> std::io::Result<()> {
        let mut w = BufWriter::new(fs::File::create(self.dir.join(name))?);
        write(&mut w)?;
        std::io::Write::flush(&mut w)?;
        self.files.push(name.to_string());
        Ok(())
    }

    pub fn json(&mut self, name: &str, value: &Value) -> std::io::Result<()> {
        fs::write(self.dir.join(name), serde_json::to_string_pretty(value).expect("serializable") + "\n")?;
        self.files.push(name.to_string());
        Ok(())
    }
}

/// Run one command; returns the process exit status.
pub fn run(args: &Args) -> i32 {
    let start = Instant::now();
    let result = execute(args, start);
    match result {
        Ok(()) => 0,
        Err(e) => {
            let payload = e.payload();
            eprintln!("{payload}");
            if fs::create_dir_all(&args.output_dir).is_ok() {
                let _ = fs::write(args.output_dir.join("error.json"), payload.to_string() + "\n");
            }
            e.exit_code()
        }
    }
}

fn execute(args: &Args, start: Instant) -> Result<(), CliError> {
    if let Some(n) = args.threads {
        if n == 0 {
            return Err(CliError::Schema { path: "--threads".into(), message: "must be at least 1".into() });
        }
        // A global pool can only be installed once per process; later calls keep the first.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let bytes = fs::read(&args.config)
        .map_err(|e| CliError::Schema { path: String::new(), message: format!("cannot read {}: {e}", args.config.display()) })?;
    let text = String::from_utf8(bytes.clone())
        .map_err(|_| CliError::Schema { path: String::new(), message: "configuration is not UTF-8".into() })?;
    let mut cfg = Config::parse(&text)?;
    if let Some(seed) = args.seed_override {
        cfg.record("solver.seed", Value::from(seed));
    }
    let mut out = Output::new(&args.output_dir)?;
    let summary = commands::dispatch(args.command, &mut cfg, args.seed_override, &mut out)?;
    let manifest = json!({
        "command": args.command.name(),
        "config_sha256": hex::encode(Sha256::digest(&bytes)),
        "versions": {"fracpoincare": env!("CARGO_PKG_VERSION")},
        "threads": rayon::current_num_threads(),
        "seed_override": args.seed_override,
        "wall_time_seconds": start.elapsed().as_secs_f64(),
        "parameters": cfg.effective(),
        "artifacts": out.files.clone(),
        "summary": summary,
    });
    out.json("manifest.json", &manifest)?;
    Ok(())
}

/// Parse arguments and run; clap usage errors exit with status 2.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    match Args::try_parse_from(args) {
        Ok(a) => run(&a),
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            code
        }
    }
}
