//! Command-line front end: argument parsing, config validation, running a
//! subcommand and writing its artifacts.

pub mod commands;
pub mod config;
pub mod models;
pub mod output;

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::{Map, Value};

use crate::commands::Outcome;
use crate::config::{BackendName, Format, Params, RunConfig, SubcommandName, ValidConfig};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_CHECK_FAILED: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "hbarlab", version, about = "Numerical checks for quantizations of Heisenberg-Poisson manifolds")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = ".")]
    pub output_dir: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Groupoid axioms and multiplicative forms on random samples.
    Check {
        #[arg(long)]
        model: Option<String>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        tol: Option<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// Compatibility, continuity at hbar = 0 and Jacobians of an exploded map.
    Explode {
        #[arg(long)]
        model: Option<String>,
        /// JSON polynomial map file.
        #[arg(long)]
        poly_map: Option<PathBuf>,
        #[arg(long)]
        n: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
    /// Unit multiplier idempotence and its classical limit.
    Moyal {
        #[arg(long, value_delimiter = ',')]
        hbar: Option<Vec<f64>>,
        #[arg(long)]
        points: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
    /// Classical-limit convergence of the fuzzy sphere.
    Fuzzy {
        #[arg(long, value_delimiter = ',')]
        k_list: Option<Vec<usize>>,
        #[arg(long, value_delimiter = ',')]
        hbar: Option<Vec<f64>>,
        #[arg(long)]
        symbol: Option<String>,
        /// Node CSV (x,y,z,value) fitted to a polynomial symbol.
        #[arg(long)]
        nodes: Option<PathBuf>,
        #[arg(long)]
        partner: Option<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Bohr-Sommerfeld admissible Planck constants and integrability screen.
    Planck {
        #[arg(long)]
        model: Option<String>,
        /// Area profile JSON file.
        #[arg(long)]
        profile: Option<PathBuf>,
        #[arg(long)]
        min_hbar: Option<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// Continuity report of a sampled field of algebras.
    Field {
        #[arg(long, value_enum)]
        backend: Option<BackendName>,
        #[arg(long)]
        symbol: Option<String>,
        #[arg(long)]
        partner: Option<String>,
        #[arg(long)]
        k_max: Option<usize>,
        #[arg(long, value_delimiter = ',')]
        hbar: Option<Vec<f64>>,
        #[command(flatten)]
        common: Common,
    },
    /// Builtin models, maps, profiles and symbols.
    ListModels,
    /// Validate a JSON run config without running it.
    Validate { config: PathBuf },
    /// Run a JSON run config.
    Run { config: PathBuf },
}

fn put<T: serde::Serialize>(m: &mut Map<String, Value>, key: &str, v: Option<T>) {
    if let Some(v) = v {
        m.insert(key.into(), serde_json::to_value(v).expect("flag values serialize"));
    }
}

/// Translate flags into the same config a JSON file would give.
pub fn config_from_command(cmd: Command) -> Option<RunConfig> {
    let mut m = Map::new();
    let (sub, common) = match cmd {
        Command::Check { model, n, tol, common } => {
            put(&mut m, "model", model);
            put(&mut m, "n", n);
            put(&mut m, "tol", tol);
            (SubcommandName::Check, common)
        }
        Command::Explode { model, poly_map, n, common } => {
            put(&mut m, "model", model);
            put(&mut m, "poly_map", poly_map);
            put(&mut m, "n", n);
            (SubcommandName::Explode, common)
        }
        Command::Moyal { hbar, points, common } => {
            put(&mut m, "hbar", hbar);
            put(&mut m, "points", points);
            (SubcommandName::Moyal, common)
        }
        Command::Fuzzy { k_list, hbar, symbol, nodes, partner, common } => {
            put(&mut m, "k_list", k_list);
            put(&mut m, "hbar", hbar);
            put(&mut m, "symbol", symbol);
            put(&mut m, "nodes", nodes);
            put(&mut m, "partner", partner);
            (SubcommandName::Fuzzy, common)
        }
        Command::Planck { model, profile, min_hbar, common } => {
            put(&mut m, "model", model);
            put(&mut m, "profile", profile);
            put(&mut m, "min_hbar", min_hbar);
            (SubcommandName::Planck, common)
        }
        Command::Field { backend, symbol, partner, k_max, hbar, common } => {
            put(&mut m, "backend", backend);
            put(&mut m, "symbol", symbol);
            put(&mut m, "partner", partner);
            put(&mut m, "k_max", k_max);
            put(&mut m, "hbar", hbar);
            (SubcommandName::Field, common)
        }
        Command::ListModels | Command::Validate { .. } | Command::Run { .. } => return None,
    };
    Some(RunConfig {
        subcommand: sub,
        parameters: Value::Object(m),
        seed: common.seed,
        output_dir: common.output_dir,
        format: common.format,
    })
}

/// Errors caused by the inputs rather than by the numerics.
fn is_input_error(e: &hbarlab_core::Error) -> bool {
    use hbarlab_core::Error::*;
    matches!(e, Argument(_) | Validation(_) | Decode(_) | Io(_) | Json(_) | NotMonotone(_))
}

pub fn execute(valid: &ValidConfig) -> hbarlab_core::Result<Outcome> {
    let seed = valid.config.seed;
    match &valid.params {
        Params::Check(p) => commands::run_check(p, seed),
        Params::Explode(p) => commands::run_explode(p, seed),
        Params::Moyal(p) => commands::run_moyal(p),
        Params::Fuzzy(p) => commands::run_fuzzy(p),
        Params::Planck(p) => commands::run_planck(p),
        Params::Field(p) => commands::run_field(p),
    }
}

pub fn artifact_path(config: &RunConfig) -> PathBuf {
    config.output_dir.join(format!("{}.{}", config.subcommand.as_str(), config.format.extension()))
}

fn run_valid(valid: ValidConfig, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let outcome = match execute(&valid) {
        Ok(o) => o,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return if is_input_error(&e) { EXIT_USAGE } else { EXIT_CHECK_FAILED };
        }
    };
    for c in &outcome.checks {
        let _ = writeln!(out, "{}", c.summary());
    }
    for n in &outcome.notes {
        let _ = writeln!(out, "note: {n}");
    }
    let passed = outcome.passed();
    let contents = match valid.config.format {
        Format::Csv => outcome.csv,
        Format::Json => {
            let mut s = serde_json::to_string_pretty(&outcome.report).expect("report serializes");
            s.push('\n');
            s
        }
    };
    match output::write_artifact(&artifact_path(&valid.config), &contents, passed) {
        Ok(path) => {
            let _ = writeln!(out, "wrote {}", path.display());
        }
        Err(e) => {
            let _ = writeln!(err, "error: cannot write report: {e}");
            return EXIT_USAGE;
        }
    }
    if passed {
        EXIT_PASS
    } else {
        EXIT_CHECK_FAILED
    }
}

fn read_config(path: &Path, err: &mut dyn Write) -> Option<ValidConfig> {
    let text = match fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) => {
            let _ = writeln!(err, "error: cannot read {}: {e}", path.display());
            return None;
        }
    };
    match config::parse_config(&text) {
        Ok(v) => Some(v),
        Err(e) => {
            let _ = writeln!(err, "{e}");
            None
        }
    }
}

/// Cap rayon's pool from `HBARLAB_THREADS`; unset or empty means no cap.
pub fn configure_threads(value: Option<&str>) -> Result<(), String> {
    let Some(v) = value.filter(|v| !v.trim().is_empty()) else { return Ok(()) };
    let n: usize = v.trim().parse().map_err(|_| format!("HBARLAB_THREADS must be a positive integer, got '{v}'"))?;
    if n == 0 {
        return Err("HBARLAB_THREADS must be at least 1".into());
    }
    // A second call in the same process finds the pool already built.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

/// Entry point with injectable arguments and streams; returns the exit code.
pub fn main_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_PASS };
            let _ = if e.use_stderr() { write!(err, "{}", e.render()) } else { write!(out, "{}", e.render()) };
            return code;
        }
    };
    if let Err(e) = configure_threads(std::env::var("HBARLAB_THREADS").ok().as_deref()) {
        let _ = writeln!(err, "error: {e}");
        return EXIT_USAGE;
    }
    match cli.command {
        Command::ListModels => {
            let _ = write!(out, "{}", models::render_list());
            EXIT_PASS
        }
        Command::Validate { config } => match read_config(&config, err) {
            Some(_) => {
                let _ = writeln!(out, "OK");
                EXIT_PASS
            }
            None => EXIT_USAGE,
        },
        Command::Run { config } => match read_config(&config, err) {
            Some(v) => run_valid(v, out, err),
            None => EXIT_USAGE,
        },
        cmd => {
            let cfg = config_from_command(cmd).expect("run subcommand");
            match config::validate(cfg) {
                Ok(v) => run_valid(v, out, err),
                Err(e) => {
                    let _ = writeln!(err, "{e}");
                    EXIT_USAGE
                }
            }
        }
    }
}
