use clap::{Parser, ValueEnum};
use oddindex_core::boundary::DEFAULT_GRID;
use oddindex_core::DEFAULT_TOL_RANK;
use std::path::PathBuf;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Experiment {
    TheoremA,
    TheoremB,
    HwEquivalence,
    LefschetzHeat,
    SnakeLemma,
    Commutant,
    FullSuite,
}

impl Experiment {
    pub fn id(self) -> &'static str {
        match self {
            Experiment::TheoremA => "theorem-a",
            Experiment::TheoremB => "theorem-b",
            Experiment::HwEquivalence => "hw-equivalence",
            Experiment::LefschetzHeat => "lefschetz-heat",
            Experiment::SnakeLemma => "snake-lemma",
            Experiment::Commutant => "commutant",
            Experiment::FullSuite => "full-suite",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GeometryKind {
    /// Bare circle (`theorem-a`, `lefschetz-heat`) or point fiber.
    Circle,
    Point,
    Abstract,
    Torus,
    Monopole,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Text,
}

/// Verification driver for the odd-dimensional index models.
#[derive(Debug, Clone, Parser)]
#[command(name = "oddindex", version, about)]
pub struct ExperimentConfig {
    #[arg(long, value_enum, default_value = "full-suite")]
    pub experiment: Experiment,

    #[arg(long, value_enum, default_value = "circle")]
    pub geometry: GeometryKind,

    /// Index of the abstract even model.
    #[arg(long, default_value_t = 1, allow_negative_numbers = true)]
    pub d: i64,

    /// Monopole charge.
    #[arg(long, default_value_t = 1, allow_negative_numbers = true)]
    pub charge: i64,

    /// Fourier cutoff K on the circle.
    #[arg(long, default_value_t = 8)]
    pub cutoff: usize,

    /// Fourier cutoff of the torus fiber.
    #[arg(long, default_value_t = 1)]
    pub fiber_cutoff: usize,

    /// Cylinder length.
    #[arg(long, default_value_t = 0.5)]
    pub length: f64,

    /// Finite-difference grid points per cylinder.
    #[arg(long, default_value_t = DEFAULT_GRID)]
    pub grid: usize,

    #[arg(long, default_value_t = DEFAULT_TOL_RANK)]
    pub tol_rank: f64,

    #[arg(long, default_value_t = 1e-7)]
    pub tol_consistency: f64,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Number of random diagrams for `snake-lemma`.
    #[arg(long, default_value_t = 200)]
    pub trials: usize,

    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,

    /// Write the report here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,

    /// Add wall-clock timings to the diagnostics (output is then no longer
    /// byte-reproducible).
    #[arg(long)]
    pub timings: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig::parse_from(["oddindex"])
    }
}

#[derive(Debug, thiserror::Error)]
#[error("invalid value for --{field}: {reason}")]
pub struct UsageError {
    pub field: &'static str,
    pub reason: String,
}

fn usage(field: &'static str, reason: impl Into<String>) -> UsageError {
    UsageError {
        field,
        reason: reason.into(),
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), UsageError> {
        if !(1..=64).contains(&self.cutoff) {
            return Err(usage("cutoff", format!("{} not in 1..=64", self.cutoff)));
        }
        if !(1..=4).contains(&self.fiber_cutoff) {
            return Err(usage("fiber-cutoff", format!("{} not in 1..=4", self.fiber_cutoff)));
        }
        if !(self.length.is_finite() && self.length > 0.0 && self.length <= 100.0) {
            return Err(usage("length", format!("{} not in (0, 100]", self.length)));
        }
        if !(50..=20_000).contains(&self.grid) {
            return Err(usage("grid", format!("{} not in 50..=20000", self.grid)));
        }
        if !(self.tol_rank > 0.0 && self.tol_rank < 1.0) {
            return Err(usage("tol-rank", format!("{} not in (0, 1)", self.tol_rank)));
        }
        if !(self.tol_consistency > 0.0 && self.tol_consistency < 1.0) {
            return Err(usage("tol-consistency", format!("{} not in (0, 1)", self.tol_consistency)));
        }
        if !(-10..=10).contains(&self.d) {
            return Err(usage("d", format!("{} not in -10..=10", self.d)));
        }
        if !(-6..=6).contains(&self.charge) {
            return Err(usage("charge", format!("{} not in -6..=6", self.charge)));
        }
        if !(1..=100_000).contains(&self.trials) {
            return Err(usage("trials", format!("{} not in 1..=100000", self.trials)));
        }
        Ok(())
    }
}
