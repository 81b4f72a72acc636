//! Command-line front end for `cliffdyn`.
//!
//! `cliffdyn <command> --config <path> [--seed S] [--out DIR]` loads a JSON
//! parameter block, runs the pipeline, writes its artifacts together with
//! `report.json` and `timing.json`, and exits with 0 when every check
//! passes, 1 on a failed check or a runtime error, and 2 on a usage error.

pub mod config;
pub mod report;
pub mod run;

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::Serialize;

use cliffdyn::verify::{CheckRecord, DEFAULT_SEED};
use config::FieldError;
use report::{OutDir, RunReport, Timing, SCHEMA_VERSION};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// Environment variable capping the worker thread count.
pub const THREADS_ENV: &str = "CLIFFDYN_THREADS";

#[derive(Parser, Debug)]
#[command(name = "cliffdyn", version, about = "Clifford-spinor particle, ensemble, matrix-mechanics and worldsheet numerics")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Resolve Hermitian matrices and phase-space points into Clifford vectors.
    Resolve(RunArgs),
    /// Evolve a single particle.
    Particle(RunArgs),
    /// Evolve a U(N) ensemble and gauge it back to particle tracks.
    Ensemble(RunArgs),
    /// Truncated matrix mechanics: expectation traces and Born sampling.
    Matmech(RunArgs),
    /// Worldsheet identities on a random field and the reduced evolution.
    String(RunArgs),
    /// Run the invariant suites.
    Verify(VerifyArgs),
}

#[derive(Args, Debug)]
pub struct RunArgs {
    /// JSON parameter block for the command.
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides the seed from the config.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value = "cliffdyn-out")]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value = "cliffdyn-out")]
    pub out: PathBuf,
    /// Restricts the run to the named suites; repeatable.
    #[arg(long = "suite")]
    pub suites: Vec<String>,
}

enum Failure {
    Usage(String),
    Runtime(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Runtime(e)
    }
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let threads = match thread_limit() {
        Ok(t) => t,
        Err(msg) => {
            eprintln!("error: {msg}");
            return EXIT_USAGE;
        }
    };
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start worker threads: {e}");
            return EXIT_FAILED;
        }
    };
    match pool.install(|| execute(cli.command)) {
        Ok(passed) => {
            if passed {
                EXIT_OK
            } else {
                EXIT_FAILED
            }
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("usage error: {msg}");
            EXIT_USAGE
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            EXIT_FAILED
        }
    }
}

/// Reads the thread cap; 0 lets rayon pick.
fn thread_limit() -> Result<usize, String> {
    match std::env::var(THREADS_ENV) {
        Err(std::env::VarError::NotPresent) => Ok(0),
        Err(e) => Err(format!("{THREADS_ENV}: {e}")),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(n),
            _ => Err(format!("{THREADS_ENV} must be a positive integer, got '{v}'")),
        },
    }
}

fn load<T: DeserializeOwned>(path: &Path) -> Result<T, Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::Usage(format!("cannot read config {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::Usage(format!("config {}: {e}", path.display())))
}

fn checked(command: &str, r: Result<(), Vec<FieldError>>) -> Result<(), Failure> {
    r.map_err(|errs| {
        let lines: Vec<String> = errs.iter().map(|e| format!("  {command}.{e}")).collect();
        Failure::Usage(format!("invalid {command} config:\n{}", lines.join("\n")))
    })
}

fn execute(command: Command) -> Result<bool, Failure> {
    let started = Instant::now();
    let (name, out, seed, config, checks, out_dir) = match command {
        Command::Resolve(a) => {
            let cfg: config::ResolveConfig = load(&a.config)?;
            checked("resolve", cfg.validate())?;
            let seed = a.seed.or(cfg.seed).unwrap_or(DEFAULT_SEED);
            let mut out = OutDir::create(&a.out)?;
            let checks = run::resolve(&cfg, seed, &mut out)?;
            ("resolve", a.out, seed, echo(&cfg), checks, out)
        }
        Command::Particle(a) => {
            let cfg: config::ParticleConfig = load(&a.config)?;
            checked("particle", cfg.validate())?;
            let seed = a.seed.or(cfg.seed).unwrap_or(DEFAULT_SEED);
            let mut out = OutDir::create(&a.out)?;
            let checks = run::particle(&cfg, &mut out)?;
            ("particle", a.out, seed, echo(&cfg), checks, out)
        }
        Command::Ensemble(a) => {
            let cfg: config::EnsembleConfig = load(&a.config)?;
            checked("ensemble", cfg.validate())?;
            let seed = a.seed.or(cfg.seed).unwrap_or(DEFAULT_SEED);
            let mut out = OutDir::create(&a.out)?;
            let checks = run::ensemble(&cfg, seed, &mut out)?;
            ("ensemble", a.out, seed, echo(&cfg), checks, out)
        }
        Command::Matmech(a) => {
            let cfg: config::MatmechConfig = load(&a.config)?;
            checked("matmech", cfg.validate())?;
            let seed = a.seed.or(cfg.seed).unwrap_or(DEFAULT_SEED);
            let mut out = OutDir::create(&a.out)?;
            let checks = run::matmech(&cfg, seed, &mut out)?;
            ("matmech", a.out, seed, echo(&cfg), checks, out)
        }
        Command::String(a) => {
            let cfg: config::StringConfig = load(&a.config)?;
            checked("string", cfg.validate())?;
            let seed = a.seed.or(cfg.seed).unwrap_or(DEFAULT_SEED);
            let mut out = OutDir::create(&a.out)?;
            let checks = run::string(&cfg, seed, &mut out)?;
            ("string", a.out, seed, echo(&cfg), checks, out)
        }
        Command::Verify(a) => {
            let mut cfg: config::VerifyConfig = match &a.config {
                Some(p) => load(p)?,
                None => config::VerifyConfig::default(),
            };
            if !a.suites.is_empty() {
                cfg.suites = a.suites.clone();
            }
            checked("verify", cfg.validate())?;
            let seed = a.seed.or(cfg.seed).unwrap_or(DEFAULT_SEED);
            let out = OutDir::create(&a.out)?;
            let checks = run::verify(&cfg, seed)?;
            ("verify", a.out, seed, echo(&cfg), checks, out)
        }
    };
    finish(name, &out, seed, config, checks, out_dir, started)
}

fn echo<T: Serialize>(cfg: &T) -> serde_json::Value {
    serde_json::to_value(cfg).unwrap_or(serde_json::Value::Null)
}

fn finish(
    command: &str,
    out: &Path,
    seed: u64,
    config: serde_json::Value,
    checks: Vec<CheckRecord>,
    mut dir: OutDir,
    started: Instant,
) -> Result<bool, Failure> {
    let passed = checks.iter().all(|c| c.passed);
    for c in &checks {
        let verdict = if c.passed { "PASS" } else { "FAIL" };
        match (&c.residual, &c.error) {
            (Some(r), _) => println!("{verdict} {}/{} residual={r:.3e} threshold={:.1e}", c.suite, c.name, c.threshold),
            (None, Some(e)) => println!("{verdict} {}/{} error: {e}", c.suite, c.name),
            (None, None) => println!("{verdict} {}/{}", c.suite, c.name),
        }
    }
    let mut artifacts = dir.artifacts();
    artifacts.push("report.json".into());
    let report = RunReport {
        schema_version: SCHEMA_VERSION,
        command: command.into(),
        seed,
        config,
        checks,
        artifacts,
        passed,
    };
    dir.write_json("report.json", &report)?;
    dir.write_json(
        "timing.json",
        &Timing {
            command: command.into(),
            wall_clock_seconds: started.elapsed().as_secs_f64(),
            threads: rayon::current_num_threads(),
        },
    )?;
    let failed = report.checks.iter().filter(|c| !c.passed).count();
    println!(
        "{command}: {} checks, {failed} failed; report at {}",
        report.checks.len(),
        out.join("report.json").display()
    );
    Ok(passed)
}
