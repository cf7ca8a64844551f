//! Run configuration: TOML file, then flags on top.

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use powerurn::paths::{ColouringLaw, Normalization};
use powerurn::{IncrementLaw, RenewalMode};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum LawKind {
    Pure,
    Logp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum SeedbankTarget {
    Pair,
    Components,
}

/// Every knob of every experiment. Fields an experiment does not read are
/// still echoed and hashed, so two runs with equal hashes are the same run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub experiment: String,
    pub alpha: f64,
    pub law: LawKind,
    pub beta: f64,
    pub mode: RenewalMode,
    pub n: usize,
    pub n_grid: Vec<usize>,
    pub i_list: Vec<usize>,
    pub gap: u64,
    pub reps: u64,
    pub cutoff_mult: u64,
    pub table_len: usize,
    pub grid: Vec<f64>,
    pub colouring: String,
    pub normalization: String,
    pub rho: Vec<f64>,
    pub weights: Vec<f64>,
    pub islands: u32,
    pub target: SeedbankTarget,
    pub seed: u64,
    /// Worker threads; not part of the hash.
    pub threads: Option<usize>,
    /// CSV output path; not part of the hash.
    pub out: Option<PathBuf>,
    /// JSON summary path; not part of the hash.
    pub summary: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            experiment: String::new(),
            alpha: 0.39,
            law: LawKind::Pure,
            beta: 1.0,
            mode: RenewalMode::Fast,
            n: 1024,
            n_grid: vec![256, 512, 1024, 2048, 4096],
            i_list: vec![1, 10, 100, 1000, 10_000],
            gap: 100,
            reps: 1000,
            cutoff_mult: 4096,
            table_len: 1 << 20,
            grid: vec![0.25, 0.5, 0.75, 1.0],
            colouring: "rademacher:0.5".into(),
            normalization: "exact".into(),
            rho: vec![0.5, 1.0],
            weights: vec![1.0, -1.0],
            islands: 1,
            target: SeedbankTarget::Pair,
            seed: 1,
            threads: None,
            out: None,
            summary: None,
        }
    }
}

pub const EXPERIMENTS: [&str; 10] = [
    "renewal",
    "pair",
    "simulate-components",
    "mrca",
    "mrca-test",
    "paths",
    "normality",
    "scaling",
    "stein",
    "seedbank",
];

const MAX_REPS: u64 = 100_000_000;
const MAX_TABLE: usize = 1 << 26;

impl RunConfig {
    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }

    pub fn law(&self) -> Result<IncrementLaw> {
        let law = match self.law {
            LawKind::Pure => IncrementLaw::pure(self.alpha),
            LawKind::Logp => IncrementLaw::log_perturbed(self.alpha, self.beta),
        };
        law.context("alpha/beta")
    }

    pub fn colouring(&self) -> Result<ColouringLaw> {
        self.colouring.parse().context("colouring")
    }

    pub fn normalization(&self) -> Result<Normalization> {
        self.normalization.parse().context("normalization")
    }

    pub fn cutoff(&self, window: u64) -> u64 {
        window.saturating_mul(self.cutoff_mult)
    }

    /// Field-level checks shared by all experiments.
    pub fn validate(&self) -> Result<()> {
        if !EXPERIMENTS.contains(&self.experiment.as_str()) {
            bail!("experiment: unknown experiment {:?}", self.experiment);
        }
        self.law()?;
        self.colouring()?;
        self.normalization()?;
        if self.n == 0 || self.n > MAX_TABLE {
            bail!("n: must lie in 1..={MAX_TABLE}, got {}", self.n);
        }
        if self.reps < 2 || self.reps > MAX_REPS {
            bail!("reps: must lie in 2..={MAX_REPS}, got {}", self.reps);
        }
        if self.cutoff_mult == 0 {
            bail!("cutoff_mult: must be >= 1");
        }
        if self.table_len < 16 || self.table_len > MAX_TABLE {
            bail!("table_len: must lie in 16..={MAX_TABLE}, got {}", self.table_len);
        }
        if self.gap == 0 {
            bail!("gap: must be >= 1");
        }
        if self.n_grid.windows(2).any(|w| w[0] >= w[1]) || self.n_grid.first() == Some(&0) {
            bail!("n_grid: must be positive and strictly increasing");
        }
        if self.i_list.is_empty() || self.i_list.contains(&0) {
            bail!("i_list: needs at least one lag, all >= 1");
        }
        if self.grid.is_empty() || self.grid.iter().any(|t| !(t.is_finite() && *t > 0.0 && *t <= 16.0)) {
            bail!("grid: times must lie in (0, 16]");
        }
        if self.islands == 0 {
            bail!("islands: must be >= 1");
        }
        if self.threads == Some(0) {
            bail!("threads: must be >= 1");
        }
        Ok(())
    }

    /// Git-style content hash of the inputs: SHA-256 over
    /// `blob <len>\0<canonical json>`, ignoring threads and output paths.
    pub fn hash(&self) -> String {
        let mut inputs = self.clone();
        inputs.threads = None;
        inputs.out = None;
        inputs.summary = None;
        let body = serde_json::to_string(&inputs).expect("config serialises");
        let mut h = Sha256::new();
        h.update(format!("blob {}\0", body.len()));
        h.update(body.as_bytes());
        let digest = h.finalize();
        let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
        format!("sha256:{hex}")
    }
}
