//! `powerurn`: runs one experiment and writes a CSV plus a JSON summary.
//!
//! Flags override the TOML file given by `--config`, which overrides the
//! built-in defaults. `POWERURN_THREADS` sets the default worker count.

mod config;
mod experiments;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use powerurn::RenewalMode;

use config::{LawKind, RunConfig, SeedbankTarget};
use output::{commit, default_paths, Summary, SCHEMA_VERSION, TOOL_VERSION};

#[derive(Parser)]
#[command(name = "powerurn", version, about = "Power-law urn genealogies: oracles, simulation and diagnostics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Options every subcommand accepts.
#[derive(Args, Clone, Default)]
struct Common {
    /// TOML file with any RunConfig keys; flags override it
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long, value_enum)]
    law: Option<LawKind>,
    /// Log exponent of the `logp` law
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, env = "POWERURN_THREADS")]
    threads: Option<usize>,
    /// CSV output (default: <experiment>.csv)
    #[arg(long)]
    out: Option<PathBuf>,
    /// JSON summary (default: CSV path with .summary.json)
    #[arg(long)]
    summary: Option<PathBuf>,
    /// Print the resolved config as TOML and exit without running
    #[arg(long)]
    print_config: bool,
}

#[derive(Args, Clone, Default)]
struct Sim {
    #[arg(long)]
    reps: Option<u64>,
    /// Lineages are followed to depth cutoff_mult x window
    #[arg(long)]
    cutoff_mult: Option<u64>,
    /// Length of the renewal table behind the oracles
    #[arg(long)]
    table_len: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Renewal weights q_n and their ratio to the renewal asymptote
    Renewal {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        mode: Option<RenewalMode>,
    },
    /// Pair coalescence probabilities for a list of lags
    Pair {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',')]
        i_list: Option<Vec<usize>>,
        #[arg(long)]
        table_len: Option<usize>,
    },
    /// Component partitions of the window {1..n}
    SimulateComponents {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        sim: Sim,
        #[arg(long)]
        n: Option<usize>,
    },
    /// Coalescence depth of the pair (0, gap)
    Mrca {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        sim: Sim,
        #[arg(long)]
        gap: Option<u64>,
    },
    /// Depth law test against Beta-prime; writes the density curve
    MrcaTest {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        sim: Sim,
        #[arg(long)]
        gap: Option<u64>,
    },
    /// Rescaled coloured paths on a time grid
    Paths {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        sim: Sim,
        #[command(flatten)]
        path: PathArgs,
        #[arg(long, value_delimiter = ',')]
        grid: Option<Vec<f64>>,
    },
    /// Standardised S_n against the normal law
    Normality {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        sim: Sim,
        #[command(flatten)]
        path: PathArgs,
    },
    /// Moments of component sizes over a grid of window sizes
    Scaling {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        sim: Sim,
        #[arg(long, value_delimiter = ',')]
        n_grid: Option<Vec<usize>>,
    },
    /// Stein bound factors for step coefficients
    Stein {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        sim: Sim,
        #[command(flatten)]
        path: PathArgs,
        /// Breakpoints of the coefficient steps, ending at 1
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        rho: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        weights: Option<Vec<f64>>,
    },
    /// The N-island seedbank variant
    Seedbank {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        sim: Sim,
        #[arg(long)]
        islands: Option<u32>,
        #[arg(long, value_enum)]
        target: Option<SeedbankTarget>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, value_delimiter = ',')]
        i_list: Option<Vec<usize>>,
    },
}

#[derive(Args, Clone, Default)]
struct PathArgs {
    #[arg(long)]
    n: Option<usize>,
    /// Colour law spec, e.g. `rademacher:0.7` or `twopoint:A,B,W`
    #[arg(long)]
    colouring: Option<String>,
    /// exact or empirical
    #[arg(long)]
    normalization: Option<String>,
}

fn set<T: Clone>(slot: &mut T, value: &Option<T>) {
    if let Some(v) = value {
        *slot = v.clone();
    }
}

impl Common {
    fn apply(&self, c: &mut RunConfig) {
        set(&mut c.alpha, &self.alpha);
        set(&mut c.law, &self.law);
        set(&mut c.beta, &self.beta);
        set(&mut c.seed, &self.seed);
        if self.threads.is_some() {
            c.threads = self.threads;
        }
        if self.out.is_some() {
            c.out = self.out.clone();
        }
        if self.summary.is_some() {
            c.summary = self.summary.clone();
        }
    }
}

impl Sim {
    fn apply(&self, c: &mut RunConfig) {
        set(&mut c.reps, &self.reps);
        set(&mut c.cutoff_mult, &self.cutoff_mult);
        set(&mut c.table_len, &self.table_len);
    }
}

impl PathArgs {
    fn apply(&self, c: &mut RunConfig) {
        set(&mut c.n, &self.n);
        set(&mut c.colouring, &self.colouring);
        set(&mut c.normalization, &self.normalization);
    }
}

impl Command {
    fn resolve(&self) -> Result<(RunConfig, bool)> {
        let (name, common) = match self {
            Command::Renewal { common, .. } => ("renewal", common),
            Command::Pair { common, .. } => ("pair", common),
            Command::SimulateComponents { common, .. } => ("simulate-components", common),
            Command::Mrca { common, .. } => ("mrca", common),
            Command::MrcaTest { common, .. } => ("mrca-test", common),
            Command::Paths { common, .. } => ("paths", common),
            Command::Normality { common, .. } => ("normality", common),
            Command::Scaling { common, .. } => ("scaling", common),
            Command::Stein { common, .. } => ("stein", common),
            Command::Seedbank { common, .. } => ("seedbank", common),
        };
        let mut c = match &common.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        c.experiment = name.into();
        common.apply(&mut c);
        match self {
            Command::Renewal { n, mode, .. } => {
                set(&mut c.n, n);
                set(&mut c.mode, mode);
            }
            Command::Pair { i_list, table_len, .. } => {
                set(&mut c.i_list, i_list);
                set(&mut c.table_len, table_len);
            }
            Command::SimulateComponents { sim, n, .. } => {
                sim.apply(&mut c);
                set(&mut c.n, n);
            }
            Command::Mrca { sim, gap, .. } | Command::MrcaTest { sim, gap, .. } => {
                sim.apply(&mut c);
                set(&mut c.gap, gap);
            }
            Command::Paths { sim, path, grid, .. } => {
                sim.apply(&mut c);
                path.apply(&mut c);
                set(&mut c.grid, grid);
            }
            Command::Normality { sim, path, .. } => {
                sim.apply(&mut c);
                path.apply(&mut c);
            }
            Command::Scaling { sim, n_grid, .. } => {
                sim.apply(&mut c);
                set(&mut c.n_grid, n_grid);
            }
            Command::Stein { sim, path, rho, weights, .. } => {
                sim.apply(&mut c);
                path.apply(&mut c);
                set(&mut c.rho, rho);
                set(&mut c.weights, weights);
            }
            Command::Seedbank { sim, islands, target, n, i_list, .. } => {
                sim.apply(&mut c);
                set(&mut c.islands, islands);
                set(&mut c.target, target);
                set(&mut c.n, n);
                set(&mut c.i_list, i_list);
            }
        }
        Ok((c, common.print_config))
    }
}

fn execute(config: &RunConfig) -> Result<()> {
    let start = Instant::now();
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(t) = config.threads {
        pool = pool.num_threads(t);
    }
    let pool = pool.build().context("starting worker pool")?;
    let outcome = pool.install(|| experiments::run(config))?;
    let (csv_path, summary_path) = default_paths(config);
    let summary = Summary {
        schema_version: SCHEMA_VERSION,
        tool: "powerurn",
        tool_version: TOOL_VERSION,
        experiment: &config.experiment,
        config,
        config_hash: config.hash(),
        wall_time_seconds: start.elapsed().as_secs_f64(),
        statistic: outcome.statistic,
        threshold: outcome.threshold,
        pass: outcome.pass,
        protocol: &outcome.protocol,
        details: &outcome.details,
    };
    let json = serde_json::to_string_pretty(&summary)? + "\n";
    commit(&[(csv_path.clone(), outcome.csv.into_string()), (summary_path.clone(), json)])?;
    let verdict = match outcome.pass {
        Some(true) => "pass",
        Some(false) => "FAIL",
        None => "done",
    };
    println!("{}: {verdict} ({}, {})", config.experiment, csv_path.display(), summary_path.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (config, print_only) = match cli.command.resolve().and_then(|(c, p)| c.validate().map(|_| (c, p))) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("error: invalid configuration: {e:#}");
            return ExitCode::from(2);
        }
    };
    if print_only {
        print!("{}", config.to_toml());
        return ExitCode::SUCCESS;
    }
    match execute(&config) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
