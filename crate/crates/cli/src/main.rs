//! Command-line front end: deterministic runs of the solvers with flat
//! key=value configuration, CSV artifacts, and a fixed exit-code contract
//! (0 success, 1 solver failure, 2 configuration error).

mod commands;
mod config;

use clap::{Args, Parser, Subcommand};
use config::RunConfig;
use std::path::PathBuf;

#[derive(Debug)]
pub enum AppError {
    /// Bad configuration (unknown key, type mismatch, inadmissible model).
    Config { key: String, why: String },
    /// A solver or audit failed.
    Solver(String),
}

impl AppError {
    pub fn config(key: &str, why: impl Into<String>) -> Self {
        AppError::Config {
            key: key.to_string(),
            why: why.into(),
        }
    }
}

impl std::fmt::Display for AppError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            AppError::Config { key, why } => write!(f, "config error for `{key}`: {why}"),
            AppError::Solver(why) => write!(f, "{why}"),
        }
    }
}

#[derive(Parser)]
#[command(
    name = "sourcesink",
    about = "Radial diffusion with power-law absorption and a point source: solvers and comparison-principle audits"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Flag overrides; every flag mirrors a config-file key and wins over it.
#[derive(Args, Debug, Clone, Default)]
struct Overrides {
    /// Flat key=value config file (# comments allowed).
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    d: Option<u32>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    n: Option<u32>,
    #[arg(long)]
    nodes: Option<usize>,
    #[arg(long)]
    r_out: Option<f64>,
    #[arg(long)]
    r_probe: Option<f64>,
    #[arg(long)]
    t_end: Option<f64>,
    #[arg(long)]
    outputs: Option<usize>,
    #[arg(long)]
    dt0: Option<f64>,
    #[arg(long)]
    dt_max: Option<f64>,
    #[arg(long)]
    zeta_min: Option<f64>,
    #[arg(long)]
    zeta_max: Option<f64>,
    #[arg(long)]
    profile_nodes: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    /// collocation | variational | both
    #[arg(long)]
    method: Option<String>,
    #[arg(long)]
    linear_mode: Option<bool>,
    #[arg(long)]
    zeta_lo: Option<f64>,
    #[arg(long)]
    zeta_hi: Option<f64>,
    #[arg(long)]
    frame_count: Option<usize>,
    #[arg(long)]
    metric_threshold: Option<f64>,
    /// Comma-separated sweep lists.
    #[arg(long)]
    sweep_d: Option<String>,
    #[arg(long)]
    sweep_p: Option<String>,
    #[arg(long)]
    sweep_alpha: Option<String>,
    #[arg(long)]
    sweep_t_end: Option<f64>,
    /// Ranges for the `linear` table.
    #[arg(long)]
    r_min: Option<f64>,
    #[arg(long)]
    r_max: Option<f64>,
    #[arg(long)]
    t_min: Option<f64>,
    #[arg(long)]
    t_max: Option<f64>,
    #[arg(long)]
    r_count: Option<usize>,
    #[arg(long)]
    t_count: Option<usize>,
    #[arg(long)]
    out_dir: Option<String>,
    #[arg(long)]
    tag: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Print all closed-form model constants as a key=value table.
    Params(Overrides),
    /// Emit a table of the exact linear point-source solution.
    Linear(Overrides),
    /// Compute the self-similar profile and emit it as CSV.
    Profile(Overrides),
    /// Integrate the mollified problem; emit snapshots and boundary trace.
    Evolve(Overrides),
    /// Solve the stationary problem; emit r,v,v0,vinf.
    Stationary(Overrides),
    /// Run the full comparison-principle audit and report every check.
    Verify(Overrides),
    /// Bundle profile + evolve + stationary + metric for one case.
    Convergence(Overrides),
    /// Run the reduced pipeline over a (d, p, alpha) grid.
    Sweep(Overrides),
}

fn build_config(ov: &Overrides) -> Result<RunConfig, AppError> {
    let mut cfg = RunConfig::default();
    if let Some(path) = &ov.config {
        cfg.apply_file(path)?;
    }
    macro_rules! over {
        ($field:ident) => {
            if let Some(v) = &ov.$field {
                cfg.set(stringify!($field), &v.to_string())?;
            }
        };
    }
    over!(d);
    over!(p);
    over!(alpha);
    over!(n);
    over!(nodes);
    over!(r_out);
    over!(r_probe);
    over!(t_end);
    over!(outputs);
    over!(dt0);
    over!(dt_max);
    over!(zeta_min);
    over!(zeta_max);
    over!(profile_nodes);
    over!(tol);
    over!(method);
    over!(linear_mode);
    over!(zeta_lo);
    over!(zeta_hi);
    over!(frame_count);
    over!(metric_threshold);
    over!(sweep_d);
    over!(sweep_p);
    over!(sweep_alpha);
    over!(sweep_t_end);
    over!(r_min);
    over!(r_max);
    over!(t_min);
    over!(t_max);
    over!(r_count);
    over!(t_count);
    over!(out_dir);
    over!(tag);
    // Admissibility gate: reject inadmissible (d, p, alpha) before any solver.
    cfg.model()?;
    Ok(cfg)
}

fn run() -> Result<(), AppError> {
    let cli = Cli::parse();
    match &cli.command {
        Command::Params(ov) => commands::cmd_params(&build_config(ov)?),
        Command::Linear(ov) => commands::cmd_linear(&build_config(ov)?),
        Command::Profile(ov) => commands::cmd_profile(&build_config(ov)?),
        Command::Evolve(ov) => commands::cmd_evolve(&build_config(ov)?),
        Command::Stationary(ov) => commands::cmd_stationary(&build_config(ov)?),
        Command::Verify(ov) => commands::cmd_verify(&build_config(ov)?),
        Command::Convergence(ov) => commands::cmd_convergence(&build_config(ov)?),
        Command::Sweep(ov) => commands::cmd_sweep(&build_config(ov)?),
    }
}

fn main() {
    match run() {
        Ok(()) => {}
        Err(e @ AppError::Config { .. }) => {
            eprintln!("{e}");
            std::process::exit(2);
        }
        Err(e) => {
            eprintln!("{e}");
            std::process::exit(1);
        }
    }
}
