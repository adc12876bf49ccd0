//! Ledger CSV: one row per complete generation, LF line endings, `.` as the
//! decimal separator, reals with at most 12 significant digits.

use super::{Derived, ExperimentSession, Source};
use crate::engine::Trajectory;
use crate::error::{Error, Result};
use crate::fmt::fmt_real;
use crate::genetics::GenotypeCounts;
use crate::params::Estimator;

pub const SESSION_CSV_HEADER: &str =
    "generation,D,H,R,N,p_counting,q_counting,p_sqrt,q_sqrt,sqrt_residual,fAA,fAa,faa,chi2,chi2_p,source,note";

struct LedgerRow<'a> {
    t: usize,
    counts: &'a GenotypeCounts,
    derived: Option<&'a Derived>,
    source: Source,
    note: &'a str,
}

fn write_rows<'a>(rows: impl IntoIterator<Item = LedgerRow<'a>>) -> Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(SESSION_CSV_HEADER.split(','))?;
    for row in rows {
        let counts = row.counts;
        let mut fields = vec![
            row.t.to_string(),
            counts.dominant.to_string(),
            counts.heterozygous.to_string(),
            counts.recessive.to_string(),
            counts.total().to_string(),
        ];
        match row.derived {
            Some(d) => fields.extend(
                [
                    d.gene_counting.p,
                    d.gene_counting.q,
                    d.sqrt_method.p,
                    d.sqrt_method.q,
                    d.sqrt_method.residual,
                    d.genotype_frequencies.aa_dominant,
                    d.genotype_frequencies.heterozygous,
                    d.genotype_frequencies.aa_recessive,
                    d.chi_square.statistic,
                    d.chi_square.p_value,
                ]
                .map(fmt_real),
            ),
            None => fields.extend(std::iter::repeat_n(String::new(), 10)),
        }
        fields.push(row.source.as_str().into());
        fields.push(row.note.into());
        w.write_record(&fields)?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

pub(super) fn export(session: &ExperimentSession) -> Result<Vec<u8>> {
    write_rows(session.complete_records().map(|r| LedgerRow {
        t: r.t(),
        counts: r.counts().expect("complete rows carry counts"),
        derived: r.derived(),
        source: r.source(),
        note: r.note(),
    }))
}

/// Arbitrary `(generation, counts)` rows in the ledger layout.
pub fn counts_csv(rows: &[(usize, GenotypeCounts)], headline: Estimator, source: Source) -> Result<Vec<u8>> {
    let derived = rows
        .iter()
        .map(|(_, c)| Derived::compute(c, headline))
        .collect::<Result<Vec<_>>>()?;
    write_rows(rows.iter().zip(&derived).map(|((t, counts), d)| LedgerRow {
        t: *t,
        counts,
        derived: Some(d),
        source,
        note: "",
    }))
}

/// A simulated trajectory in the ledger layout, every row automatic.
pub fn trajectory_csv(trajectory: &Trajectory, headline: Estimator) -> Result<Vec<u8>> {
    let rows: Vec<_> = trajectory
        .generations
        .iter()
        .map(|g| (g.t as usize, g.counts))
        .collect();
    counts_csv(&rows, headline, Source::Automatic)
}

/// One parsed CSV ledger row. Derived columns are `None` when the cell is
/// empty.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvRow {
    pub generation: usize,
    pub counts: GenotypeCounts,
    pub p_counting: Option<f64>,
    pub q_counting: Option<f64>,
    pub p_sqrt: Option<f64>,
    pub q_sqrt: Option<f64>,
    pub sqrt_residual: Option<f64>,
    pub f_aa: Option<f64>,
    pub f_ah: Option<f64>,
    pub f_rr: Option<f64>,
    pub chi2: Option<f64>,
    pub chi2_p: Option<f64>,
    pub source: Source,
    pub note: String,
}

fn bad(line: usize, msg: impl std::fmt::Display) -> Error {
    Error::Integrity(format!("csv line {line}: {msg}"))
}

pub fn import_csv(bytes: &[u8]) -> Result<Vec<CsvRow>> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(bytes);
    let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    if header.join(",") != SESSION_CSV_HEADER {
        return Err(Error::Integrity(format!(
            "unexpected csv header '{}'",
            header.join(",")
        )));
    }
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let line = i + 2;
        let record = record?;
        let int = |idx: usize| -> Result<u64> {
            record[idx]
                .parse()
                .map_err(|_| bad(line, format!("column {} is not an integer", idx + 1)))
        };
        let real = |idx: usize| -> Result<Option<f64>> {
            match &record[idx] {
                "" => Ok(None),
                cell => cell
                    .parse()
                    .map(Some)
                    .map_err(|_| bad(line, format!("column {} is not a number", idx + 1))),
            }
        };
        let counts = GenotypeCounts::new(int(1)?, int(2)?, int(3)?);
        if counts.total() != int(4)? {
            return Err(bad(line, "N differs from D + H + R"));
        }
        let source = match &record[15] {
            "manual" => Source::Manual,
            "automatic" => Source::Automatic,
            other => return Err(bad(line, format!("unknown source '{other}'"))),
        };
        rows.push(CsvRow {
            generation: int(0)? as usize,
            counts,
            p_counting: real(5)?,
            q_counting: real(6)?,
            p_sqrt: real(7)?,
            q_sqrt: real(8)?,
            sqrt_residual: real(9)?,
            f_aa: real(10)?,
            f_ah: real(11)?,
            f_rr: real(12)?,
            chi2: real(13)?,
            chi2_p: real(14)?,
            source,
            note: record[16].to_string(),
        });
    }
    Ok(rows)
}
