use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Result, ValidationErrors};

/// Default model population: 100 allele tokens, 50 individuals.
pub const DEFAULT_POPULATION: u64 = 50;

/// The six model experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    /// Ideal population, allele frequencies from homozygote square roots.
    IdealSqrt,
    /// Ideal population, allele frequencies by gene counting.
    IdealCounting,
    Selection,
    GeneFlow,
    Drift,
    /// Fully automated mode: no manual counts, parental population built
    /// from a starting frequency.
    Automated,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 6] = [
        ExperimentKind::IdealSqrt,
        ExperimentKind::IdealCounting,
        ExperimentKind::Selection,
        ExperimentKind::GeneFlow,
        ExperimentKind::Drift,
        ExperimentKind::Automated,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ExperimentKind::IdealSqrt => "ideal_sqrt",
            ExperimentKind::IdealCounting => "ideal_counting",
            ExperimentKind::Selection => "selection",
            ExperimentKind::GeneFlow => "gene_flow",
            ExperimentKind::Drift => "drift",
            ExperimentKind::Automated => "automated",
        }
    }

    pub fn is_ideal(&self) -> bool {
        matches!(self, ExperimentKind::IdealSqrt | ExperimentKind::IdealCounting)
    }

    /// Estimator shown as the headline frequency for this experiment.
    pub fn headline(&self) -> Estimator {
        match self {
            ExperimentKind::IdealSqrt => Estimator::SqrtMethod,
            _ => Estimator::GeneCounting,
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ExperimentKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let norm = s.trim().to_ascii_lowercase().replace('-', "_");
        Ok(match norm.as_str() {
            "ideal" | "ideal_sqrt" | "exp1" => ExperimentKind::IdealSqrt,
            "ideal_counting" | "exp2" => ExperimentKind::IdealCounting,
            "selection" | "exp3" => ExperimentKind::Selection,
            "gene_flow" | "migration" | "exp4" => ExperimentKind::GeneFlow,
            "drift" | "exp5" => ExperimentKind::Drift,
            "automated" | "exp6" => ExperimentKind::Automated,
            _ => return Err(format!("unknown experiment kind '{s}'")),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    GeneCounting,
    SqrtMethod,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    #[default]
    Stochastic,
    Deterministic,
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "stochastic" => Ok(Mode::Stochastic),
            "deterministic" => Ok(Mode::Deterministic),
            other => Err(format!("unknown mode '{other}'")),
        }
    }
}

/// Absolute viabilities of `AA`, `Aa`, `aa`. The selection coefficient of
/// a class is `s = 1 − w`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Fitness {
    #[serde(rename = "wAA")]
    pub aa_dominant: f64,
    #[serde(rename = "wAa")]
    pub heterozygous: f64,
    #[serde(rename = "waa")]
    pub aa_recessive: f64,
}

impl Fitness {
    pub const NEUTRAL: Fitness = Fitness::new(1.0, 1.0, 1.0);

    pub const fn new(aa_dominant: f64, heterozygous: f64, aa_recessive: f64) -> Self {
        Self {
            aa_dominant,
            heterozygous,
            aa_recessive,
        }
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.aa_dominant, self.heterozygous, self.aa_recessive]
    }

    pub fn is_neutral(&self) -> bool {
        self.as_array().iter().all(|&w| w == 1.0)
    }
}

impl Default for Fitness {
    fn default() -> Self {
        Self::NEUTRAL
    }
}

impl FromStr for Fitness {
    type Err = String;

    /// Parses `wAA,wAa,waa`.
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        if parts.len() != 3 {
            return Err(format!("expected three comma-separated fitness values, got '{s}'"));
        }
        let mut w = [0.0; 3];
        for (slot, part) in w.iter_mut().zip(&parts) {
            *slot = part.parse().map_err(|_| format!("invalid fitness value '{part}'"))?;
        }
        Ok(Fitness::new(w[0], w[1], w[2]))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationParams {
    pub kind: ExperimentKind,
    /// Offspring population size in individuals.
    #[serde(default = "default_n")]
    pub n: u64,
    #[serde(default)]
    pub fitness: Fitness,
    #[serde(default)]
    pub migration_rate: f64,
    /// `A` frequency among migrants.
    #[serde(default)]
    pub migrant_freq: f64,
    #[serde(default = "default_generations")]
    pub generations: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub mode: Mode,
    /// Starting `A` frequency, used to build the parental population of
    /// the automated experiment.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_p: Option<f64>,
}

fn default_n() -> u64 {
    DEFAULT_POPULATION
}

fn default_generations() -> u64 {
    10
}

impl SimulationParams {
    pub fn new(kind: ExperimentKind) -> Self {
        Self {
            kind,
            n: DEFAULT_POPULATION,
            fitness: Fitness::NEUTRAL,
            migration_rate: 0.0,
            migrant_freq: 0.0,
            generations: default_generations(),
            seed: 0,
            mode: Mode::Stochastic,
            initial_p: None,
        }
    }

    pub fn with_n(mut self, n: u64) -> Self {
        self.n = n;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_generations(mut self, generations: u64) -> Self {
        self.generations = generations;
        self
    }

    pub fn with_fitness(mut self, fitness: Fitness) -> Self {
        self.fitness = fitness;
        self
    }

    pub fn with_migration(mut self, rate: f64, migrant_freq: f64) -> Self {
        self.migration_rate = rate;
        self.migrant_freq = migrant_freq;
        self
    }

    pub fn with_mode(mut self, mode: Mode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_initial_p(mut self, p: f64) -> Self {
        self.initial_p = Some(p);
        self
    }

    /// Range-checks every field, including those the kind ignores.
    pub fn validate(&self) -> Result<()> {
        let mut errs = ValidationErrors::default();
        if self.n < 1 {
            errs.push("n", "population size must be at least 1");
        }
        if self.generations < 1 {
            errs.push("generations", "must be at least 1");
        }
        for (name, w) in ["fitness.wAA", "fitness.wAa", "fitness.waa"]
            .iter()
            .zip(self.fitness.as_array())
        {
            if !(0.0..=1.0).contains(&w) {
                errs.push(*name, format!("fitness must lie in [0, 1], got {w}"));
            }
        }
        if !(0.0..=1.0).contains(&self.migration_rate) {
            errs.push(
                "migration_rate",
                format!("must lie in [0, 1], got {}", self.migration_rate),
            );
        }
        if !(0.0..=1.0).contains(&self.migrant_freq) {
            errs.push("migrant_freq", format!("must lie in [0, 1], got {}", self.migrant_freq));
        }
        match self.initial_p {
            Some(p) if !(0.0..=1.0).contains(&p) => {
                errs.push("initial_p", format!("must lie in [0, 1], got {p}"));
            }
            None if self.kind == ExperimentKind::Automated => {
                errs.push("initial_p", "required for the automated experiment");
            }
            _ => {}
        }
        errs.into_result()
    }
}
