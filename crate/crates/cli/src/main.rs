#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod error;
mod manifest;
mod plot;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::{read_field, Run};
use config::{parse_config, ModelChoice, RunConfig};
use error::CliError;
use manifest::{InputFile, Manifest};

/// Environment variable that overrides the configured output directory.
const OUT_DIR_ENV: &str = "KRS_OUT_DIR";

#[derive(Parser)]
#[command(
    name = "acyl-soliton",
    version,
    about = "Steady Kähler-Ricci solitons on cylindrical models"
)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// key = value config file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (beats KRS_OUT_DIR and output.dir).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// cigar, cylinder or glued.
    #[arg(long, global = true)]
    model: Option<String>,
    /// Complex dimension.
    #[arg(long, global = true)]
    n: Option<usize>,
    /// Grid spacing.
    #[arg(long, global = true)]
    h: Option<f64>,
    /// Also write an SVG plot of every field output.
    #[arg(long, global = true)]
    plot: bool,
    /// Plot log10 |value|.
    #[arg(long, global = true)]
    log_scale: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Invariant Laplace spectrum of the cross-section.
    Spectrum {
        #[arg(long)]
        mu_max: Option<f64>,
    },
    /// Critical weights strictly inside a window.
    Weights {
        #[arg(long, num_args = 2, value_names = ["LO", "HI"], allow_negative_numbers = true)]
        window: Option<Vec<f64>>,
    },
    /// Solve the drift equation for one mode.
    SolveLinear {
        #[arg(long)]
        rhs: PathBuf,
        #[arg(long)]
        mu: Option<f64>,
        /// Report the observed convergence order from h, 2h and 4h.
        #[arg(long)]
        order: bool,
    },
    /// Continuity-method solve of the Monge-Ampère equation.
    SolveMa {
        #[arg(long)]
        rhs: Option<PathBuf>,
    },
    /// Glue the model to the cylinder and emit the induced data.
    Glue {
        #[arg(long)]
        inner: Option<String>,
        #[arg(long)]
        t0: Option<f64>,
        #[arg(long)]
        margin: Option<f64>,
    },
    /// Solve, then check the solution against the verification thresholds.
    Verify {
        #[arg(long)]
        rhs: Option<PathBuf>,
        /// Also write the tail decay fits.
        #[arg(long)]
        decay: bool,
    },
    /// Model diagnostics: soliton identity and Poincaré constant.
    Report,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Spectrum { .. } => "spectrum",
            Command::Weights { .. } => "weights",
            Command::SolveLinear { .. } => "solve-linear",
            Command::SolveMa { .. } => "solve-ma",
            Command::Glue { .. } => "glue",
            Command::Verify { .. } => "verify",
            Command::Report => "report",
        }
    }

    fn rhs(&self) -> Option<&PathBuf> {
        match self {
            Command::SolveLinear { rhs, .. } => Some(rhs),
            Command::SolveMa { rhs } | Command::Verify { rhs, .. } => rhs.as_ref(),
            _ => None,
        }
    }
}

fn set(cfg: &mut RunConfig, key: &str, value: impl ToString) -> Result<(), CliError> {
    cfg.set(key, &value.to_string())
        .map_err(|reason| CliError::Usage(format!("command line: {reason}")))
}

fn effective_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut cfg = match &cli.common.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| CliError::Input {
                path: path.clone(),
                source: e.into(),
            })?;
            parse_config(&text)?
        }
        None => RunConfig::default(),
    };
    let c = &cli.common;
    if let Some(m) = &c.model {
        set(&mut cfg, "model.kind", m)?;
    }
    if let Some(n) = c.n {
        set(&mut cfg, "model.n", n)?;
    }
    if let Some(h) = c.h {
        set(&mut cfg, "grid.h", h)?;
    }
    if c.log_scale {
        cfg.plot_log = true;
    }
    match &cli.command {
        Command::Spectrum { mu_max: Some(m) } => set(&mut cfg, "spectrum.mu_max", m)?,
        Command::Weights { window: Some(w) } => set(&mut cfg, "weights.window", format!("{} {}", w[0], w[1]))?,
        Command::SolveLinear { mu: Some(mu), .. } => set(&mut cfg, "linear.mu", mu)?,
        Command::Glue { inner, t0, margin } => {
            if let Some(i) = inner {
                if ModelChoice::parse(i) == Some(ModelChoice::Glued) {
                    return Err(CliError::Usage("--inner must be cigar or cylinder".into()));
                }
                set(&mut cfg, "model.kind", i)?;
            }
            if let Some(t) = t0 {
                set(&mut cfg, "glue.t0", t)?;
            }
            if let Some(m) = margin {
                set(&mut cfg, "glue.margin", m)?;
            }
        }
        _ => {}
    }
    if !(cfg.window.1 > cfg.window.0) {
        return Err(CliError::Usage("--window needs LO < HI".into()));
    }
    Ok(cfg)
}

fn out_dir(cli: &Cli, cfg: &RunConfig) -> PathBuf {
    if let Some(dir) = &cli.common.out {
        return dir.clone();
    }
    if let Some(dir) = std::env::var_os(OUT_DIR_ENV).filter(|v| !v.is_empty()) {
        return PathBuf::from(dir);
    }
    PathBuf::from(cfg.output_dir.as_deref().unwrap_or("out"))
}

fn execute(cli: &Cli) -> Result<(), CliError> {
    let cfg = effective_config(cli)?;
    let dir = out_dir(cli, &cfg);
    fs::create_dir_all(&dir).map_err(|source| CliError::Output {
        path: dir.clone(),
        source,
    })?;
    let mut inputs = Vec::new();
    let rhs = match cli.command.rhs() {
        Some(path) => {
            let (entry, f) = read_field(path)?;
            inputs.push(entry);
            Some(f)
        }
        None => None,
    };
    if let Some(path) = &cli.common.config {
        inputs.insert(0, InputFile::read(path)?.0);
    }
    let manifest = Manifest::begin(&dir, cli.command.name(), &cfg, inputs)?;
    let mut run = Run::new(cfg, dir, cli.common.plot);
    let result = match &cli.command {
        Command::Spectrum { .. } => commands::spectrum(&mut run),
        Command::Weights { .. } => commands::weights(&mut run),
        Command::SolveLinear { order, .. } => commands::solve_linear(&mut run, rhs.as_ref().expect("required"), *order),
        Command::SolveMa { .. } => commands::solve_ma(&mut run, rhs.as_ref()),
        Command::Glue { .. } => commands::glue(&mut run),
        Command::Verify { decay, .. } => commands::verify(&mut run, rhs.as_ref(), *decay),
        Command::Report => commands::report(&mut run),
    };
    let (code, msg) = match &result {
        Ok(()) => (0, None),
        Err(e) => (e.exit_code(), Some(e.to_string())),
    };
    manifest.finish(code, msg.as_deref(), &run.outputs, &run.notes)?;
    result
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
