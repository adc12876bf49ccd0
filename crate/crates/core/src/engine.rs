//! Generation-step operators.
//!
//! Stochastic operators take an explicit RNG; nothing here keeps hidden
//! state. [`step_generation`] composes the operators for one experiment
//! kind and is shared by [`run_trajectory`] and session auto-stepping, so
//! both produce the same generation from the same `(seed, t)`.
//!
//! Operator chains per kind (stochastic mode):
//!
//! | kind | chain |
//! |------|-------|
//! | ideal | gamete pool → shuffle-and-pair mating |
//! | selection | cull → rebuild 2n-token pool at survivor frequency → shuffle-and-pair |
//! | gene flow | gene counting → admixture → Wright–Fisher resample |
//! | drift | gene counting → Wright–Fisher resample |
//! | automated | cull → admixture → Wright–Fisher resample |
//!
//! Deterministic mode replaces each chain with its infinite-population
//! recurrence and reports counts as the Hardy–Weinberg expectation rounded
//! by largest remainder.

use std::fmt;

use rand::distr::{Bernoulli, Distribution};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::genetics::{estimate_gene_counting, hw_rounded_counts, AlleleFrequencies, GenotypeCounts};
use crate::params::{ExperimentKind, Fitness, Mode, SimulationParams};
use crate::rng::generation_stream;

/// The allele tokens of a population: `2N` chips, one per gene copy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GametePool {
    #[serde(rename = "nA")]
    pub dominant: u64,
    #[serde(rename = "na")]
    pub recessive: u64,
}

impl GametePool {
    pub const fn new(dominant: u64, recessive: u64) -> Self {
        Self { dominant, recessive }
    }

    pub fn size(&self) -> u64 {
        self.dominant + self.recessive
    }
}

pub fn build_gamete_pool(counts: &GenotypeCounts) -> Result<GametePool> {
    if counts.total() == 0 {
        return Err(Error::EmptyPopulation);
    }
    Ok(GametePool::new(counts.dominant_alleles(), counts.recessive_alleles()))
}

/// A `2n`-token pool whose `A` share is `p`, rounded half to even.
pub fn rebuild_pool(freqs: &AlleleFrequencies, n: u64) -> GametePool {
    let size = 2 * n;
    let dominant = ((size as f64 * freqs.p).round_ties_even() as u64).min(size);
    GametePool::new(dominant, size - dominant)
}

/// The pairing of `pool` whose heterozygote count is closest to the
/// Hardy–Weinberg expectation `2pqN`, keeping both allele counts exact.
/// Ties go to the smaller heterozygote count.
pub fn conserved_hw_counts(pool: &GametePool) -> Result<GenotypeCounts> {
    let size = pool.size();
    if size % 2 == 1 {
        return Err(Error::OddPool(size));
    }
    if size == 0 {
        return Err(Error::EmptyPopulation);
    }
    let (a, b) = (pool.dominant, pool.recessive);
    let target = (a as f64) * (b as f64) / size as f64;
    let parity = a % 2;
    let max_het = a.min(b);
    let best = (0..=max_het)
        .filter(|h| h % 2 == parity)
        .min_by(|&x, &y| (x as f64 - target).abs().total_cmp(&(y as f64 - target).abs()))
        .expect("a heterozygote count with matching parity exists");
    Ok(GenotypeCounts::new((a - best) / 2, best, (b - best) / 2))
}

/// Uniformly random perfect pairing of the pool tokens, without
/// replacement. Allele counts are conserved exactly; only the genotype
/// partition is random.
pub fn shuffle_pair_mating<R: Rng + ?Sized>(pool: &GametePool, rng: &mut R) -> Result<GenotypeCounts> {
    let size = pool.size();
    if size % 2 == 1 {
        return Err(Error::OddPool(size));
    }
    if size == 0 {
        return Err(Error::EmptyPopulation);
    }
    let mut tokens: Vec<bool> = std::iter::repeat_n(true, pool.dominant as usize)
        .chain(std::iter::repeat_n(false, pool.recessive as usize))
        .collect();
    tokens.shuffle(rng);
    let mut out = GenotypeCounts::default();
    for pair in tokens.chunks_exact(2) {
        match (pair[0], pair[1]) {
            (true, true) => out.dominant += 1,
            (false, false) => out.recessive += 1,
            _ => out.heterozygous += 1,
        }
    }
    Ok(out)
}

/// Draws `2n` gametes with replacement (`A` with probability `p`) and
/// pairs them in draw order into `n` individuals.
pub fn wright_fisher_step<R: Rng + ?Sized>(freqs: &AlleleFrequencies, n: u64, rng: &mut R) -> Result<GenotypeCounts> {
    if n == 0 {
        return Err(Error::EmptyPopulation);
    }
    let gamete = Bernoulli::new(freqs.p).map_err(|_| Error::FrequencyOutOfRange(freqs.p))?;
    let mut out = GenotypeCounts::default();
    for _ in 0..n {
        match (gamete.sample(rng), gamete.sample(rng)) {
            (true, true) => out.dominant += 1,
            (false, false) => out.recessive += 1,
            _ => out.heterozygous += 1,
        }
    }
    Ok(out)
}

/// Viability selection. Deterministic mode keeps `round_half_even(w·count)`
/// of each class; stochastic mode lets each individual survive with
/// probability `w` of its class.
pub fn apply_selection<R: Rng + ?Sized>(
    counts: &GenotypeCounts,
    fitness: &Fitness,
    mode: Mode,
    rng: &mut R,
) -> Result<GenotypeCounts> {
    let classes = [counts.dominant, counts.heterozygous, counts.recessive];
    let mut survivors = [0u64; 3];
    for ((slot, &count), w) in survivors.iter_mut().zip(&classes).zip(fitness.as_array()) {
        if !(0.0..=1.0).contains(&w) {
            return Err(Error::FrequencyOutOfRange(w));
        }
        *slot = match mode {
            Mode::Deterministic => (w * count as f64).round_ties_even() as u64,
            Mode::Stochastic if w == 1.0 => count,
            Mode::Stochastic if w == 0.0 => 0,
            Mode::Stochastic => {
                let survive = Bernoulli::new(w).map_err(|_| Error::FrequencyOutOfRange(w))?;
                (0..count).filter(|_| survive.sample(rng)).count() as u64
            }
        };
    }
    let out = GenotypeCounts::new(survivors[0], survivors[1], survivors[2]);
    if out.total() == 0 {
        return Err(Error::Extinct);
    }
    Ok(out)
}

/// One-island admixture: `p' = (1 − m)·p + m·pm`.
pub fn apply_migration(freqs: &AlleleFrequencies, rate: f64, migrant_freq: f64) -> Result<AlleleFrequencies> {
    for x in [rate, migrant_freq] {
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::FrequencyOutOfRange(x));
        }
    }
    let p = ((1.0 - rate) * freqs.p + rate * migrant_freq).clamp(0.0, 1.0);
    AlleleFrequencies::from_p(p)
}

/// Closed-form viability-selection recurrence
/// `p' = p(wAA·p + wAa·q) / w̄`, `w̄ = wAA·p² + 2wAa·pq + waa·q²`.
pub fn selection_recurrence(freqs: &AlleleFrequencies, fitness: &Fitness) -> Result<AlleleFrequencies> {
    let (p, q) = (freqs.p, freqs.q);
    let mean = fitness.aa_dominant * p * p + 2.0 * fitness.heterozygous * p * q + fitness.aa_recessive * q * q;
    if mean == 0.0 {
        return Err(Error::MeanFitnessZero);
    }
    let next = p * (fitness.aa_dominant * p + fitness.heterozygous * q) / mean;
    AlleleFrequencies::from_p(next.clamp(0.0, 1.0))
}

/// Selection as the composed real-valued chain: Hardy–Weinberg zygotes,
/// cull by viability, then gene counting over the survivors.
pub fn selection_cull_mate(freqs: &AlleleFrequencies, fitness: &Fitness) -> Result<AlleleFrequencies> {
    let (p, q) = (freqs.p, freqs.q);
    let survivors = [
        fitness.aa_dominant * p * p,
        fitness.heterozygous * 2.0 * p * q,
        fitness.aa_recessive * q * q,
    ];
    let total: f64 = survivors.iter().sum();
    if total == 0.0 {
        return Err(Error::MeanFitnessZero);
    }
    let next = (survivors[0] + 0.5 * survivors[1]) / total;
    AlleleFrequencies::from_p(next.clamp(0.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepWarning {
    /// Drift has no infinite-population form; the step was the identity.
    NoDeterministicDrift,
}

impl fmt::Display for StepWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StepWarning::NoDeterministicDrift => {
                f.write_str("drift has no deterministic form; frequencies held constant")
            }
        }
    }
}

/// Infinite-population recurrence for the kind.
pub fn deterministic_step(
    freqs: &AlleleFrequencies,
    params: &SimulationParams,
) -> Result<(AlleleFrequencies, Option<StepWarning>)> {
    if !freqs.normalized {
        return Err(Error::NotNormalized);
    }
    let next = match params.kind {
        ExperimentKind::IdealSqrt | ExperimentKind::IdealCounting => *freqs,
        ExperimentKind::Selection => selection_recurrence(freqs, &params.fitness)?,
        ExperimentKind::GeneFlow => apply_migration(freqs, params.migration_rate, params.migrant_freq)?,
        ExperimentKind::Drift => return Ok((*freqs, Some(StepWarning::NoDeterministicDrift))),
        ExperimentKind::Automated => {
            let selected = selection_recurrence(freqs, &params.fitness)?;
            apply_migration(&selected, params.migration_rate, params.migrant_freq)?
        }
    };
    Ok((next, None))
}

/// Counts and allele frequencies of one generation. In stochastic mode the
/// frequencies are the gene-counting estimate of the counts; in
/// deterministic mode they are the exact recurrence value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenerationState {
    pub counts: GenotypeCounts,
    pub freqs: AlleleFrequencies,
}

impl GenerationState {
    pub fn from_counts(counts: GenotypeCounts) -> Result<Self> {
        Ok(Self {
            freqs: estimate_gene_counting(&counts)?,
            counts,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum StepOutcome {
    Next {
        state: GenerationState,
        warning: Option<StepWarning>,
    },
    Extinct,
}

/// Produces generation `t` from generation `t − 1` using the draws of
/// sub-stream `t` of `params.seed`.
pub fn step_generation(params: &SimulationParams, prev: &GenerationState, t: u64) -> Result<StepOutcome> {
    match params.mode {
        Mode::Deterministic => deterministic_generation(params, prev),
        Mode::Stochastic => {
            let mut rng = generation_stream(params.seed, t);
            stochastic_generation(params, prev, &mut rng)
        }
    }
}

fn deterministic_generation(params: &SimulationParams, prev: &GenerationState) -> Result<StepOutcome> {
    let mut warning = None;
    let next = match params.kind {
        ExperimentKind::Selection => selection_cull_mate(&prev.freqs, &params.fitness),
        ExperimentKind::Automated => selection_cull_mate(&prev.freqs, &params.fitness)
            .and_then(|f| apply_migration(&f, params.migration_rate, params.migrant_freq)),
        _ => deterministic_step(&prev.freqs, params).map(|(f, w)| {
            warning = w;
            f
        }),
    };
    let freqs = match next {
        Ok(f) => f,
        Err(Error::MeanFitnessZero) => return Ok(StepOutcome::Extinct),
        Err(e) => return Err(e),
    };
    let counts = if params.kind.is_ideal() {
        conserved_hw_counts(&build_gamete_pool(&prev.counts)?)?
    } else {
        hw_rounded_counts(&freqs, params.n)?
    };
    Ok(StepOutcome::Next {
        state: GenerationState { counts, freqs },
        warning,
    })
}

fn stochastic_generation<R: Rng + ?Sized>(
    params: &SimulationParams,
    prev: &GenerationState,
    rng: &mut R,
) -> Result<StepOutcome> {
    let counts = match params.kind {
        ExperimentKind::IdealSqrt | ExperimentKind::IdealCounting => {
            shuffle_pair_mating(&build_gamete_pool(&prev.counts)?, rng)?
        }
        ExperimentKind::Selection => {
            let survivors = match apply_selection(&prev.counts, &params.fitness, Mode::Stochastic, rng) {
                Ok(s) => s,
                Err(Error::Extinct) => return Ok(StepOutcome::Extinct),
                Err(e) => return Err(e),
            };
            let pool = rebuild_pool(&estimate_gene_counting(&survivors)?, params.n);
            shuffle_pair_mating(&pool, rng)?
        }
        ExperimentKind::GeneFlow => {
            let mixed = apply_migration(&prev.freqs, params.migration_rate, params.migrant_freq)?;
            wright_fisher_step(&mixed, params.n, rng)?
        }
        ExperimentKind::Drift => wright_fisher_step(&prev.freqs, params.n, rng)?,
        ExperimentKind::Automated => {
            let survivors = match apply_selection(&prev.counts, &params.fitness, Mode::Stochastic, rng) {
                Ok(s) => s,
                Err(Error::Extinct) => return Ok(StepOutcome::Extinct),
                Err(e) => return Err(e),
            };
            let selected = estimate_gene_counting(&survivors)?;
            let mixed = apply_migration(&selected, params.migration_rate, params.migrant_freq)?;
            wright_fisher_step(&mixed, params.n, rng)?
        }
    };
    Ok(StepOutcome::Next {
        state: GenerationState::from_counts(counts)?,
        warning: None,
    })
}

/// True when the kind's chain can never leave the current frequencies:
/// one allele is lost and no migration can reintroduce it.
pub fn is_absorbing(params: &SimulationParams, freqs: &AlleleFrequencies) -> bool {
    if !freqs.is_fixed() {
        return false;
    }
    match params.kind {
        ExperimentKind::GeneFlow | ExperimentKind::Automated => {
            params.migration_rate == 0.0 || params.migrant_freq == freqs.p
        }
        _ => true,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Allele {
    #[serde(rename = "A")]
    Dominant,
    #[serde(rename = "a")]
    Recessive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum TerminalStatus {
    /// Ran for the requested number of generations.
    Completed,
    /// `allele` reached frequency one at `generation`.
    Fixed { allele: Allele, generation: u64 },
    /// No survivors when producing `generation`.
    Extinct { generation: u64 },
}

impl TerminalStatus {
    pub fn fixed_at(freqs: &AlleleFrequencies, generation: u64) -> Self {
        let allele = if freqs.p == 1.0 {
            Allele::Dominant
        } else {
            Allele::Recessive
        };
        TerminalStatus::Fixed { allele, generation }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Generation {
    pub t: u64,
    pub counts: GenotypeCounts,
    pub freqs: AlleleFrequencies,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub generations: Vec<Generation>,
    pub status: TerminalStatus,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<StepWarning>,
}

impl Trajectory {
    pub fn last(&self) -> &Generation {
        self.generations.last().expect("trajectory always holds generation 0")
    }
}

/// Runs `params.generations` steps from `parental`, stopping early at
/// absorption or extinction.
pub fn run_trajectory(parental: &GenotypeCounts, params: &SimulationParams) -> Result<Trajectory> {
    run_trajectory_from(GenerationState::from_counts(*parental)?, params)
}

/// Like [`run_trajectory`] but with an explicit starting state, so a
/// deterministic run can start from an exact frequency rather than the
/// estimate of its rounded counts.
pub fn run_trajectory_from(mut state: GenerationState, params: &SimulationParams) -> Result<Trajectory> {
    params.validate()?;
    if state.counts.total() == 0 {
        return Err(Error::EmptyPopulation);
    }
    let mut generations = vec![Generation {
        t: 0,
        counts: state.counts,
        freqs: state.freqs,
    }];
    let mut warnings = Vec::new();
    if is_absorbing(params, &state.freqs) {
        return Ok(Trajectory {
            generations,
            status: TerminalStatus::fixed_at(&state.freqs, 0),
            warnings,
        });
    }
    for t in 1..=params.generations {
        match step_generation(params, &state, t)? {
            StepOutcome::Extinct => {
                return Ok(Trajectory {
                    generations,
                    status: TerminalStatus::Extinct { generation: t },
                    warnings,
                })
            }
            StepOutcome::Next { state: next, warning } => {
                if let Some(w) = warning {
                    if !warnings.contains(&w) {
                        warnings.push(w);
                    }
                }
                state = next;
                generations.push(Generation {
                    t,
                    counts: state.counts,
                    freqs: state.freqs,
                });
                if is_absorbing(params, &state.freqs) {
                    return Ok(Trajectory {
                        generations,
                        status: TerminalStatus::fixed_at(&state.freqs, t),
                        warnings,
                    });
                }
            }
        }
    }
    Ok(Trajectory {
        generations,
        status: TerminalStatus::Completed,
        warnings,
    })
}
