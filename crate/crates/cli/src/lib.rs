//! `fracsp` command-line front end.
//!
//! Subcommands `poisson`, `check`, `geometry` and `solve` each resolve a
//! [`RunConfig`] (defaults, then `--config`, then flags), write their reports
//! into the output directory together with `resolved.cfg` and `manifest.json`,
//! and exit with 0 (success), 1 (check or target failure), 2 (I/O or format
//! error) or 3 (validation error). `replay` re-runs a manifest and compares
//! output digests.

pub mod commands;
pub mod config;
pub mod manifest;

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

pub use commands::CommandKind;
pub use config::{ConfigError, ReportFormat, RunConfig};
use manifest::{digest_file, mismatches, Manifest, RESOLVED_FILE};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_IO: i32 = 2;
pub const EXIT_VALIDATION: i32 = 3;

#[derive(Debug, thiserror::Error)]
#[error("{message}")]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn validation(msg: impl Into<String>) -> Self {
        Self {
            code: EXIT_VALIDATION,
            message: msg.into(),
        }
    }

    pub fn format(msg: impl Into<String>) -> Self {
        Self {
            code: EXIT_IO,
            message: msg.into(),
        }
    }

    pub fn io(path: &Path, e: std::io::Error) -> Self {
        Self {
            code: EXIT_IO,
            message: format!("{}: {e}", path.display()),
        }
    }
}

impl From<fracsp::Error> for CliError {
    fn from(e: fracsp::Error) -> Self {
        use fracsp::Error as E;
        let code = match &e {
            E::Io(_) | E::Format { .. } | E::Resource(_) => EXIT_IO,
            E::InvalidInput(_) | E::GridMismatch(_) | E::NonFinite { .. } | E::GridTooLarge { .. } => EXIT_VALIDATION,
            E::Quadrature { .. } | E::NonConvergence { .. } => EXIT_FAILURE,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        Self::validation(e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "fracsp",
    version,
    about = "Fractional Schrödinger-Poisson toolkit on a periodic box"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve (−Δ)^α φ = K_α u² for a stored FLD1 field.
    Poisson {
        #[command(flatten)]
        common: CommonArgs,
        /// Input field (FLD1).
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Check the model hypotheses on the grid; exit 1 if any fails.
    Check {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Eigenbasis, select_m, ring checks, coercivity scans and the β_k table.
    Geometry {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Find and verify distinct nontrivial solutions.
    Solve {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Re-run a manifest and compare every output digest.
    Replay {
        manifest: PathBuf,
        /// Output directory for the re-run (defaults to the recorded one).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// Flat `key = value` configuration file.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Points per axis.
    #[arg(long, value_name = "N")]
    pub grid: Option<String>,
    /// Box side length.
    #[arg(long = "box", value_name = "L")]
    pub box_len: Option<String>,
    #[arg(long, value_name = "A")]
    pub alpha: Option<String>,
    /// e.g. `harmonic`, `constant:value=2`, `radial:base=1,coef=1,exponent=2`.
    #[arg(long, value_name = "NAME[:k=v,...]")]
    pub potential: Option<String>,
    /// e.g. `log_quartic`, `exp_weighted_power:p=5`, `power:q=4`, `zero`.
    #[arg(long, value_name = "NAME[:k=v,...]")]
    pub nonlinearity: Option<String>,
    #[arg(long, value_name = "X")]
    pub tol: Option<String>,
    #[arg(long, value_name = "S")]
    pub seed: Option<String>,
    /// Worker threads (0 = all cores).
    #[arg(long, value_name = "T")]
    pub threads: Option<String>,
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    #[arg(long, value_name = "json|csv")]
    pub format: Option<String>,
    /// Small-grid cross-check against the direct sum.
    #[arg(long)]
    pub oracle: bool,
    /// Any configuration key, e.g. `--set solver.count_target=1`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
}

impl CommonArgs {
    /// Defaults, then the config file, then flags.
    pub fn resolve(&self) -> Result<RunConfig, CliError> {
        let mut cfg = RunConfig::default();
        if let Some(path) = &self.config {
            let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            cfg.apply_text(&text)?;
        }
        let flags = [
            ("grid.n", &self.grid),
            ("grid.l", &self.box_len),
            ("grid.alpha", &self.alpha),
            ("model.potential", &self.potential),
            ("model.nonlinearity", &self.nonlinearity),
            ("solver.tol", &self.tol),
            ("run.seed", &self.seed),
            ("run.threads", &self.threads),
            ("run.format", &self.format),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                cfg.set(key, v)?;
            }
        }
        if let Some(out) = &self.out {
            cfg.run.out = out.clone();
        }
        if self.oracle {
            cfg.run.oracle = true;
        }
        for kv in &self.set {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| CliError::validation(format!("--set expects KEY=VALUE, got '{kv}'")))?;
            cfg.set(k.trim(), v)?;
        }
        Ok(cfg)
    }
}

fn resolve_threads(cfg: &mut RunConfig) {
    if cfg.run.threads == 0 {
        cfg.run.threads = std::thread::available_parallelism().map_or(1, |n| n.get());
    }
}

pub struct RunResult {
    pub code: i32,
    pub manifest: Manifest,
    pub summary: Vec<String>,
}

/// Runs one command with a fixed thread count and writes `resolved.cfg` and
/// `manifest.json` next to its outputs.
pub fn execute(kind: CommandKind, cfg: &RunConfig) -> Result<RunResult, CliError> {
    let mut cfg = cfg.clone();
    resolve_threads(&mut cfg);
    let dir = cfg.run.out.clone();
    fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
    let resolved = dir.join(RESOLVED_FILE);
    fs::write(&resolved, cfg.to_text()).map_err(|e| CliError::io(&resolved, e))?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.run.threads)
        .build()
        .map_err(|e| CliError::format(format!("thread pool: {e}")))?;
    let out = pool.install(|| commands::run(kind, &cfg))?;
    let digests = out
        .files
        .iter()
        .map(|p| digest_file(&dir, p))
        .collect::<Result<Vec<_>, _>>()?;
    let manifest = Manifest::new(kind.name(), &cfg, out.code, digests);
    manifest.write(&dir)?;
    Ok(RunResult {
        code: out.code,
        manifest,
        summary: out.summary,
    })
}

/// Re-runs `manifest` (optionally into `out`) and reports digest mismatches.
pub fn replay(path: &Path, out: Option<&Path>) -> Result<(RunResult, Vec<String>), CliError> {
    let recorded = Manifest::load(path)?;
    let kind = CommandKind::from_name(&recorded.command)
        .ok_or_else(|| CliError::format(format!("unknown command '{}' in manifest", recorded.command)))?;
    let mut cfg = recorded.config.clone();
    cfg.run.threads = recorded.threads;
    if let Some(o) = out {
        cfg.run.out = o.to_path_buf();
    }
    let result = execute(kind, &cfg)?;
    let mut diff = mismatches(&recorded.outputs, &result.manifest.outputs);
    if result.code != recorded.exit_code {
        diff.push(format!(
            "exit code {} differs from recorded {}",
            result.code, recorded.exit_code
        ));
    }
    Ok((result, diff))
}

fn report(result: &RunResult) {
    for line in &result.summary {
        println!("{line}");
    }
    println!(
        "wrote {} outputs and {} to {}",
        result.manifest.outputs.len(),
        manifest::MANIFEST_FILE,
        result.manifest.config.run.out.display()
    );
}

/// Parses `args` (including the program name) and runs; returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_VALIDATION } else { EXIT_OK };
        }
    };
    let run = || -> Result<i32, CliError> {
        let (kind, common, input) = match cli.command {
            Command::Poisson { common, input } => (CommandKind::Poisson, common, input),
            Command::Check { common } => (CommandKind::Check, common, None),
            Command::Geometry { common } => (CommandKind::Geometry, common, None),
            Command::Solve { common } => (CommandKind::Solve, common, None),
            Command::Replay { manifest, out } => {
                let (result, diff) = replay(&manifest, out.as_deref())?;
                report(&result);
                if diff.is_empty() {
                    println!(
                        "replay: all {} outputs reproduced bit-exactly",
                        result.manifest.outputs.len()
                    );
                    return Ok(result.code);
                }
                for d in &diff {
                    eprintln!("replay mismatch: {d}");
                }
                return Ok(EXIT_FAILURE);
            }
        };
        let mut cfg = common.resolve()?;
        if input.is_some() {
            cfg.run.input = input;
        }
        let result = execute(kind, &cfg)?;
        report(&result);
        Ok(result.code)
    };
    match run() {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {}", e.message);
            e.code
        }
    }
}
