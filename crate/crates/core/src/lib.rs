//! Model experiments in single-locus, two-allele population genetics.
//!
//! * [`genetics`]: genotype/allele bookkeeping, the gene-counting and
//!   square-root estimators, Hardy–Weinberg expectations.
//! * [`engine`]: seeded generation operators (shuffle-and-pair mating,
//!   Wright–Fisher resampling, viability selection, admixture) and the
//!   infinite-population recurrences.
//! * [`stats`]: Hardy–Weinberg chi-square test and Monte Carlo batch
//!   studies.
//! * [`session`]: the interactive experiment ledger, charts, CSV export and
//!   persistence.

pub mod engine;
pub mod error;
pub mod fmt;
pub mod genetics;
pub mod params;
pub mod rng;
pub mod session;
pub mod stats;

pub use engine::{
    apply_migration, apply_selection, build_gamete_pool, deterministic_step, run_trajectory, run_trajectory_from,
    shuffle_pair_mating, wright_fisher_step, GametePool, Generation, GenerationState, TerminalStatus, Trajectory,
};
pub use error::{Error, FieldError, Result, ValidationErrors};
pub use genetics::{
    estimate_gene_counting, estimate_sqrt_method, genotype_frequencies, hw_expected, AlleleFrequencies, GenotypeCounts,
    GenotypeFrequencies, HwExpectation,
};
pub use params::{Estimator, ExperimentKind, Fitness, Mode, SimulationParams, DEFAULT_POPULATION};
pub use session::{ChartSeries, ChartVariant, ExperimentSession, GenerationRecord, SessionId, SessionStore, Source};
pub use stats::{chi_square_hwe, fixation_study, lln_study, BatchReport, BatchRow, ChiSquareResult};
