//! Argument parsing and command dispatch.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::config::{parse_list, parse_seeds, GradMode, RunConfig};
use crate::harness::{bench, gen, gradcheck, single, sweep, CommandError, EXIT_OK, EXIT_USAGE};

/// Thread-count override for the parallel gradcheck.
pub const THREADS_ENV: &str = "DXPP_THREADS";

#[derive(Parser, Debug)]
#[command(name = "dxpp", version, about = "Differentiable QP layer: accuracy sweeps, benchmarks and single-instance checks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Penalty Jacobian vs KKT-reduced oracle on seeded random QPs.
    Gradcheck(Overrides),
    /// Forward/backward wall-clock on projection families.
    Bench(Overrides),
    /// Discrepancy against the KKT oracle across smoothing levels.
    DeltaSweep(Overrides),
    /// Solve one problem file and print solution and sensitivities.
    Single {
        problem: PathBuf,
        /// JSON array with the cotangent r for a VJP.
        #[arg(long = "r")]
        r_file: Option<PathBuf>,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Write generated instances with metadata sidecars.
    Gen {
        /// Exact output path (single instance only).
        #[arg(long)]
        file: Option<PathBuf>,
        #[command(flatten)]
        overrides: Overrides,
    },
}

#[derive(Args, Debug, Default, Clone)]
pub struct Overrides {
    /// JSON run config (or a previous run manifest).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub family: Option<String>,
    /// Comma-separated sizes, e.g. 10x5,50x10 or 1000,10000.
    #[arg(long)]
    pub sizes: Option<String>,
    /// Seed count N (0..N), a range a..b, or a list a,b,c.
    #[arg(long, conflicts_with = "seed")]
    pub seeds: Option<String>,
    /// A single seed.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub zeta: Option<f64>,
    #[arg(long)]
    pub eps_active: Option<f64>,
    #[arg(long)]
    pub eps_abs: Option<f64>,
    #[arg(long)]
    pub solver: Option<String>,
    /// Keep inactive-row smoothing terms.
    #[arg(long, conflicts_with = "prune")]
    pub no_prune: bool,
    #[arg(long)]
    pub prune: bool,
    #[arg(long)]
    pub reps: Option<usize>,
    /// q (Jacobian in q) or all (seeded VJP over every data block).
    #[arg(long)]
    pub mode: Option<String>,
    /// Comma-separated δ values for delta-sweep.
    #[arg(long)]
    pub deltas: Option<String>,
    /// Per-size benchmark timeout in seconds.
    #[arg(long)]
    pub timeout: Option<f64>,
    /// Seeds whose instance is made infeasible (gradcheck).
    #[arg(long)]
    pub inject_infeasible: Option<String>,
    #[arg(long)]
    pub max_eps_rel: Option<f64>,
    #[arg(long)]
    pub risk_aversion: Option<f64>,
    #[arg(long)]
    pub turnover: Option<f64>,
}

impl Overrides {
    /// Config file (or defaults) with flags applied on top.
    pub fn resolve(&self, base: RunConfig) -> Result<RunConfig, CommandError> {
        let usage = CommandError::Usage;
        let mut cfg = match &self.config {
            Some(p) => RunConfig::load(p).map_err(|e| usage(e.to_string()))?,
            None => base,
        };
        if let Some(v) = &self.out {
            cfg.out = v.clone();
        }
        if let Some(v) = &self.family {
            cfg.family = v.clone();
        }
        if let Some(v) = &self.sizes {
            cfg.sizes = v.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect();
        }
        if let Some(v) = &self.seeds {
            cfg.seeds = parse_seeds(v).map_err(usage)?;
        }
        if let Some(v) = self.seed {
            cfg.seeds = vec![v];
        }
        if let Some(v) = &self.inject_infeasible {
            cfg.inject_infeasible = parse_list(v).map_err(usage)?;
        }
        if let Some(v) = &self.deltas {
            cfg.deltas = parse_list(v).map_err(usage)?;
        }
        if let Some(v) = &self.mode {
            cfg.mode = GradMode::parse(v).ok_or_else(|| usage(format!("unknown mode '{v}', expected q or all")))?;
        }
        if let Some(v) = &self.solver {
            cfg.solver_choice = v.clone();
        }
        if self.no_prune {
            cfg.prune_inactive = false;
        }
        if self.prune {
            cfg.prune_inactive = true;
        }
        macro_rules! set {
            ($($field:ident => $target:ident),*) => {
                $(if let Some(v) = self.$field { cfg.$target = v; })*
            };
        }
        set!(delta => delta, zeta => zeta, eps_active => eps_active, eps_abs => eps_abs, reps => repetitions, timeout => timeout_secs, risk_aversion => risk_aversion, turnover => turnover);
        if self.max_eps_rel.is_some() {
            cfg.max_eps_rel = self.max_eps_rel;
        }
        cfg.validate().map_err(usage)?;
        Ok(cfg)
    }
}

fn command_defaults(command: &Command) -> RunConfig {
    let mut cfg = RunConfig::default();
    match command {
        Command::Bench(_) => {
            cfg.family = "simplex".into();
            cfg.sizes = vec!["1000".into(), "10000".into(), "100000".into()];
            cfg.seeds = vec![0];
        }
        Command::DeltaSweep(_) => {
            cfg.sizes = vec!["20x5".into()];
            cfg.seeds = vec![0];
        }
        Command::Single { .. } | Command::Gen { .. } => cfg.seeds = vec![0],
        Command::Gradcheck(_) => {}
    }
    cfg
}

fn configure_threads() -> Result<(), CommandError> {
    let Ok(v) = std::env::var(THREADS_ENV) else { return Ok(()) };
    let n: usize = v.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| CommandError::Usage(format!("{THREADS_ENV} must be a positive integer, got '{v}'")))?;
    // a second call in the same process (tests) keeps the first pool
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

fn dispatch(cli: Cli) -> Result<i32, CommandError> {
    configure_threads()?;
    let base = command_defaults(&cli.command);
    match &cli.command {
        Command::Gradcheck(o) => gradcheck::cmd_gradcheck(&o.resolve(base)?),
        Command::Bench(o) => bench::cmd_bench(&o.resolve(base)?),
        Command::DeltaSweep(o) => sweep::cmd_delta_sweep(&o.resolve(base)?),
        Command::Single { problem, r_file, overrides } => single::cmd_single(&overrides.resolve(base)?, problem, r_file.as_deref()),
        Command::Gen { file, overrides } => gen::cmd_gen(&overrides.resolve(base)?, file.as_deref()),
    }
}

/// Parses `args` (program name first) and runs; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
