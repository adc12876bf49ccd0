//! Stateful model-experiment sessions.
//!
//! A session is an ordered ledger of generation rows. Students fill rows by
//! hand from their token counts; every derived column (both estimators,
//! genotype frequencies, Hardy–Weinberg expectation, chi-square) is
//! recomputed from the counts whenever they are written. Rows can also be
//! produced by the engine with [`ExperimentSession::auto_step`].
//!
//! While a session is active its ledger ends with exactly one pending row
//! (no counts yet). Terminal sessions have none.

mod chart;
mod ledger;
pub mod protocol;
mod store;

use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::engine::{is_absorbing, step_generation, GenerationState, StepOutcome, StepWarning, TerminalStatus};
use crate::error::{Error, Result};
use crate::genetics::{
    estimate_gene_counting, estimate_sqrt_method, genotype_frequencies, hw_expected, hw_rounded_counts,
    AlleleFrequencies, GenotypeCounts, GenotypeFrequencies, HwExpectation,
};
use crate::params::{Estimator, ExperimentKind, Mode, SimulationParams};
use crate::rng::RNG_ALGORITHM;
use crate::stats::{chi_square_hwe, ChiSquareResult};

pub use chart::{
    ChartBody, ChartSeries, ChartVariant, HoverPayload, Line, NestedColumn, NestedGroup, Segment, StackedColumn,
};
pub use ledger::{counts_csv, import_csv, trajectory_csv, CsvRow, SESSION_CSV_HEADER};
pub use store::{SessionStore, SCHEMA_VERSION};

/// Opaque 128-bit session identifier rendered as 32 lowercase hex digits.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SessionId(String);

impl SessionId {
    pub fn generate() -> Self {
        Self(format!("{:032x}", rand::random::<u128>()))
    }

    /// Accepts only URL- and filename-safe identifiers.
    pub fn parse(s: &str) -> Result<Self> {
        let ok =
            !s.is_empty() && s.len() <= 64 && s.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'-' || b == b'_');
        if ok {
            Ok(Self(s.to_string()))
        } else {
            Err(Error::NotFound(s.to_string()))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl std::fmt::Display for SessionId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    Manual,
    Automatic,
}

impl Source {
    pub fn as_str(&self) -> &'static str {
        match self {
            Source::Manual => "manual",
            Source::Automatic => "automatic",
        }
    }
}

/// Square-root estimate together with its disagreement `p + q − 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SqrtEstimate {
    pub p: f64,
    pub q: f64,
    pub residual: f64,
}

/// Everything computed from one row's counts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Derived {
    pub gene_counting: AlleleFrequencies,
    pub sqrt_method: SqrtEstimate,
    pub genotype_frequencies: GenotypeFrequencies,
    pub hw_expected: HwExpectation,
    pub chi_square: ChiSquareResult,
    pub headline: Estimator,
}

impl Derived {
    pub fn compute(counts: &GenotypeCounts, headline: Estimator) -> Result<Self> {
        let gene_counting = estimate_gene_counting(counts)?;
        let sqrt = estimate_sqrt_method(counts)?;
        Ok(Self {
            gene_counting,
            sqrt_method: SqrtEstimate {
                p: sqrt.p,
                q: sqrt.q,
                residual: sqrt.residual(),
            },
            genotype_frequencies: genotype_frequencies(counts)?,
            hw_expected: hw_expected(&gene_counting, counts.total())?,
            chi_square: chi_square_hwe(counts)?,
            headline,
        })
    }

    /// `(p, q)` from the kind's headline estimator.
    pub fn headline_frequencies(&self) -> (f64, f64) {
        match self.headline {
            Estimator::GeneCounting => (self.gene_counting.p, self.gene_counting.q),
            Estimator::SqrtMethod => (self.sqrt_method.p, self.sqrt_method.q),
        }
    }
}

/// One ledger row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationRecord {
    t: usize,
    counts: Option<GenotypeCounts>,
    source: Source,
    #[serde(default, skip_deserializing)]
    derived: Option<Derived>,
    /// Engine frequency state for deterministic-mode rows.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    model: Option<AlleleFrequencies>,
    #[serde(default)]
    note: String,
    #[serde(default, skip_deserializing)]
    warnings: Vec<String>,
}

impl GenerationRecord {
    fn pending(t: usize) -> Self {
        Self {
            t,
            counts: None,
            source: Source::Manual,
            derived: None,
            model: None,
            note: String::new(),
            warnings: Vec::new(),
        }
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn counts(&self) -> Option<&GenotypeCounts> {
        self.counts.as_ref()
    }

    pub fn source(&self) -> Source {
        self.source
    }

    /// `None` for pending rows and for an extinct (empty) generation.
    pub fn derived(&self) -> Option<&Derived> {
        self.derived.as_ref()
    }

    pub fn model(&self) -> Option<&AlleleFrequencies> {
        self.model.as_ref()
    }

    pub fn note(&self) -> &str {
        &self.note
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    pub fn is_complete(&self) -> bool {
        self.counts.is_some()
    }

    /// The engine state this row hands to the next generation.
    fn state(&self) -> Result<GenerationState> {
        let counts = self.counts.ok_or(Error::NoParental)?;
        match self.model {
            Some(freqs) => Ok(GenerationState { counts, freqs }),
            None => GenerationState::from_counts(counts),
        }
    }

    fn set_counts(&mut self, counts: GenotypeCounts, source: Source, headline: Estimator) -> Result<()> {
        self.derived = match counts.total() {
            0 => None,
            _ => Some(Derived::compute(&counts, headline)?),
        };
        self.counts = Some(counts);
        self.source = source;
        Ok(())
    }

    fn refresh(&mut self, headline: Estimator) -> Result<()> {
        self.derived = match self.counts {
            Some(c) if c.total() > 0 => Some(Derived::compute(&c, headline)?),
            _ => None,
        };
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "state", rename_all = "snake_case")]
pub enum SessionStatus {
    Active,
    Terminal { outcome: TerminalStatus },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSession {
    id: SessionId,
    kind: ExperimentKind,
    params: SimulationParams,
    rng_algorithm: String,
    records: Vec<GenerationRecord>,
    status: SessionStatus,
    instruction_step: usize,
    created_at_ms: u64,
    updated_at_ms: u64,
}

fn now_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}

impl ExperimentSession {
    /// A fresh session. The automated experiment gets its parental row from
    /// `params.initial_p`; every other kind starts with generation 0 pending.
    pub fn create(kind: ExperimentKind, mut params: SimulationParams) -> Result<Self> {
        params.kind = kind;
        params.validate()?;
        let now = now_ms();
        let mut session = Self {
            id: SessionId::generate(),
            kind,
            params,
            rng_algorithm: RNG_ALGORITHM.to_string(),
            records: vec![GenerationRecord::pending(0)],
            status: SessionStatus::Active,
            instruction_step: 0,
            created_at_ms: now,
            updated_at_ms: now,
        };
        if kind == ExperimentKind::Automated {
            let p0 = session.params.initial_p.ok_or(Error::NoParental)?;
            let start = AlleleFrequencies::from_p(p0)?;
            let counts = hw_rounded_counts(&start, session.params.n)?;
            let headline = kind.headline();
            let row = &mut session.records[0];
            row.set_counts(counts, Source::Automatic, headline)?;
            if session.params.mode == Mode::Deterministic {
                row.model = Some(start);
            }
            session.after_fill(0)?;
        }
        Ok(session)
    }

    pub fn id(&self) -> &SessionId {
        &self.id
    }

    pub fn kind(&self) -> ExperimentKind {
        self.kind
    }

    pub fn params(&self) -> &SimulationParams {
        &self.params
    }

    pub fn records(&self) -> &[GenerationRecord] {
        &self.records
    }

    pub fn record(&self, t: usize) -> Option<&GenerationRecord> {
        self.records.get(t)
    }

    pub fn complete_records(&self) -> impl Iterator<Item = &GenerationRecord> {
        self.records.iter().filter(|r| r.is_complete())
    }

    pub fn status(&self) -> &SessionStatus {
        &self.status
    }

    pub fn is_terminal(&self) -> bool {
        matches!(self.status, SessionStatus::Terminal { .. })
    }

    pub fn instruction_step(&self) -> usize {
        self.instruction_step
    }

    /// Current protocol instruction text.
    pub fn instruction(&self) -> &'static str {
        let steps = protocol::steps(self.kind);
        steps[self.instruction_step.min(steps.len() - 1)]
    }

    pub fn created_at_ms(&self) -> u64 {
        self.created_at_ms
    }

    pub fn updated_at_ms(&self) -> u64 {
        self.updated_at_ms
    }

    pub fn rng_algorithm(&self) -> &str {
        &self.rng_algorithm
    }

    /// Index of the pending row, if the session is still active.
    pub fn next_generation(&self) -> Option<usize> {
        self.records.last().filter(|r| !r.is_complete()).map(|r| r.t)
    }

    fn ensure_active(&self) -> Result<usize> {
        match &self.status {
            SessionStatus::Terminal { outcome } => Err(Error::Terminated(describe_outcome(outcome))),
            SessionStatus::Active => self
                .next_generation()
                .ok_or(Error::Integrity("active session without a pending row".into())),
        }
    }

    fn check_total(&self, counts: &GenotypeCounts) -> Result<()> {
        let expected = self.params.n;
        let got = counts.total();
        let ok = match self.kind {
            ExperimentKind::Selection => (1..=expected).contains(&got),
            _ => got == expected,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::WrongTotal { expected, got })
        }
    }

    /// Enters hand-counted genotypes for generation `t`. `t` may be the
    /// pending row or any earlier row (a correction).
    pub fn record_manual_counts(
        &mut self,
        t: usize,
        counts: GenotypeCounts,
        note: Option<String>,
    ) -> Result<GenerationRecord> {
        let pending = self.ensure_active()?;
        if t > pending {
            return Err(Error::Sequencing {
                expected: pending,
                got: t,
            });
        }
        self.check_total(&counts)?;
        let headline = self.kind.headline();
        let row = &mut self.records[t];
        row.set_counts(counts, Source::Manual, headline)?;
        row.model = None;
        if let Some(note) = note {
            row.note = note;
        }
        if t == pending {
            self.after_fill(t)?;
        } else {
            self.refresh_warnings();
            self.updated_at_ms = now_ms();
        }
        Ok(self.records[t].clone())
    }

    /// Replaces the free-text note of a row.
    pub fn set_note(&mut self, t: usize, note: impl Into<String>) -> Result<()> {
        let row = self
            .records
            .get_mut(t)
            .ok_or(Error::Sequencing { expected: t, got: t })?;
        row.note = note.into();
        self.updated_at_ms = now_ms();
        Ok(())
    }

    /// Lets the engine produce the pending generation from the previous one.
    pub fn auto_step(&mut self) -> Result<GenerationRecord> {
        let pending = self.ensure_active()?;
        if pending == 0 {
            return Err(Error::NoParental);
        }
        let prev = self.records[pending - 1].state()?;
        let headline = self.kind.headline();
        match step_generation(&self.params, &prev, pending as u64)? {
            StepOutcome::Extinct => {
                let row = &mut self.records[pending];
                row.set_counts(GenotypeCounts::default(), Source::Automatic, headline)?;
                self.status = SessionStatus::Terminal {
                    outcome: TerminalStatus::Extinct {
                        generation: pending as u64,
                    },
                };
                self.refresh_warnings();
                self.updated_at_ms = now_ms();
            }
            StepOutcome::Next { state, .. } => {
                let row = &mut self.records[pending];
                row.set_counts(state.counts, Source::Automatic, headline)?;
                if self.params.mode == Mode::Deterministic {
                    row.model = Some(state.freqs);
                }
                self.after_fill(pending)?;
            }
        }
        Ok(self.records[pending].clone())
    }

    /// Bookkeeping after the pending row `t` was filled.
    fn after_fill(&mut self, t: usize) -> Result<()> {
        let state = self.records[t].state();
        let absorbed = match &state {
            Ok(s) if self.records[t].source == Source::Automatic => is_absorbing(&self.params, &s.freqs),
            _ => false,
        };
        if absorbed {
            let freqs = state?.freqs;
            self.status = SessionStatus::Terminal {
                outcome: TerminalStatus::fixed_at(&freqs, t as u64),
            };
        } else {
            self.records.push(GenerationRecord::pending(t + 1));
        }
        let last_step = protocol::steps(self.kind).len() - 1;
        self.instruction_step = (self.instruction_step + 1).min(last_step);
        self.refresh_warnings();
        self.updated_at_ms = now_ms();
        Ok(())
    }

    /// Rebuilds every row's warnings. Ideal-population rows entered by hand
    /// whose allele counts differ from generation 0 get a conservation
    /// warning; they are accepted regardless.
    fn refresh_warnings(&mut self) {
        let base = self
            .records
            .first()
            .and_then(|r| r.counts)
            .map(|c| c.dominant_alleles());
        let ideal = self.kind.is_ideal();
        let deterministic_drift = self.kind == ExperimentKind::Drift && self.params.mode == Mode::Deterministic;
        for row in self.records.iter_mut() {
            row.warnings.clear();
            let Some(counts) = row.counts else {
                continue;
            };
            if counts.total() == 0 {
                row.warnings.push(Error::Extinct.to_string());
            }
            if row.source == Source::Automatic && row.t > 0 && deterministic_drift {
                row.warnings.push(StepWarning::NoDeterministicDrift.to_string());
            }
            match base {
                Some(base)
                    if ideal && row.t > 0 && row.source == Source::Manual && counts.dominant_alleles() != base =>
                {
                    row.warnings.push(format!(
                        "conservation warning: 2D+H = {} but generation 0 had {base} A alleles; recount the tokens",
                        counts.dominant_alleles()
                    ));
                }
                _ => {}
            }
        }
    }

    fn recompute_all(&mut self) -> Result<()> {
        let headline = self.kind.headline();
        for row in self.records.iter_mut() {
            row.refresh(headline)?;
        }
        self.refresh_warnings();
        Ok(())
    }

    /// Checks structural invariants of a session read from outside.
    fn check_integrity(&self) -> Result<()> {
        self.params.validate().map_err(|e| Error::Integrity(e.to_string()))?;
        if self.params.kind != self.kind {
            return Err(Error::Integrity("params.kind differs from session kind".into()));
        }
        if self.records.is_empty() {
            return Err(Error::Integrity("session has no rows".into()));
        }
        for (i, row) in self.records.iter().enumerate() {
            if row.t != i {
                return Err(Error::Integrity(format!("row {i} carries generation index {}", row.t)));
            }
            let last = i + 1 == self.records.len();
            if !row.is_complete() && !last {
                return Err(Error::Integrity(format!("row {i} is pending but not last")));
            }
        }
        let pending = self.next_generation().is_some();
        match (&self.status, pending) {
            (SessionStatus::Active, false) => Err(Error::Integrity("active session without a pending row".into())),
            (SessionStatus::Terminal { .. }, true) => {
                Err(Error::Integrity("terminal session with a pending row".into()))
            }
            _ => Ok(()),
        }
    }

    pub fn chart_series(&self, variant: ChartVariant) -> Result<ChartSeries> {
        chart::build(self, variant)
    }

    /// The session ledger as CSV bytes.
    pub fn export_csv(&self) -> Result<Vec<u8>> {
        ledger::export(self)
    }

    /// Rebuilds a session from exported CSV rows; counts, sources and notes
    /// are restored, derived columns recomputed.
    pub fn from_csv(kind: ExperimentKind, params: SimulationParams, bytes: &[u8]) -> Result<Self> {
        let rows = import_csv(bytes)?;
        let mut session = Self::create(kind, params)?;
        session.records.clear();
        for (i, row) in rows.iter().enumerate() {
            if row.generation != i {
                return Err(Error::Integrity(format!(
                    "csv row {i} carries generation {}",
                    row.generation
                )));
            }
            let mut record = GenerationRecord::pending(i);
            record.counts = Some(row.counts);
            record.source = row.source;
            record.note = row.note.clone();
            session.records.push(record);
        }
        session.recompute_all()?;
        if session.records.is_empty() {
            session.records.push(GenerationRecord::pending(0));
        } else {
            let last = session.records.last().expect("nonempty").clone();
            let fixed =
                last.source == Source::Automatic && last.state().is_ok_and(|s| is_absorbing(&session.params, &s.freqs));
            let extinct = last.counts.is_some_and(|c| c.total() == 0);
            if extinct {
                session.status = SessionStatus::Terminal {
                    outcome: TerminalStatus::Extinct {
                        generation: last.t as u64,
                    },
                };
            } else if fixed {
                let freqs = last.state()?.freqs;
                session.status = SessionStatus::Terminal {
                    outcome: TerminalStatus::fixed_at(&freqs, last.t as u64),
                };
            } else {
                session.records.push(GenerationRecord::pending(last.t + 1));
            }
        }
        let last_step = protocol::steps(kind).len() - 1;
        session.instruction_step = session.complete_records().count().min(last_step);
        Ok(session)
    }
}

fn describe_outcome(outcome: &TerminalStatus) -> String {
    match outcome {
        TerminalStatus::Completed => "completed".into(),
        TerminalStatus::Fixed { allele, generation } => {
            let name = match allele {
                crate::engine::Allele::Dominant => "A",
                crate::engine::Allele::Recessive => "a",
            };
            format!("allele {name} fixed at generation {generation}")
        }
        TerminalStatus::Extinct { generation } => format!("population extinct at generation {generation}"),
    }
}

#[cfg(test)]
mod tests;
