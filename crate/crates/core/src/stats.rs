//! Goodness-of-fit testing and Monte Carlo batch studies.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::engine::wright_fisher_step;
use crate::error::{Result, ValidationErrors};
use crate::fmt::fmt_real;
use crate::genetics::{estimate_gene_counting, hw_expected, AlleleFrequencies, GenotypeCounts};
use crate::rng::{generation_stream, replicate_seed};

/// Expected class counts below this trigger the small-sample warning.
pub const MIN_EXPECTED: f64 = 5.0;

const LANCZOS_G: f64 = 7.0;
// published coefficients, kept verbatim
#[allow(clippy::excessive_precision)]
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// `ln Γ(x)` for `x > 0` (Lanczos, g = 7).
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // reflection
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = LANCZOS[0];
    for (i, &c) in LANCZOS.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

const GAMMA_EPS: f64 = 1e-16;
const GAMMA_MAX_ITER: usize = 10_000;

/// Regularized upper incomplete gamma `Q(a, x) = Γ(a, x) / Γ(a)`.
pub fn regularized_gamma_q(a: f64, x: f64) -> f64 {
    assert!(a > 0.0, "shape must be positive");
    if x <= 0.0 {
        return 1.0;
    }
    if x.is_infinite() {
        return 0.0;
    }
    if x < a + 1.0 {
        1.0 - lower_series(a, x)
    } else {
        upper_continued_fraction(a, x)
    }
}

/// `P(a, x)` by its power series.
fn lower_series(a: f64, x: f64) -> f64 {
    let mut term = 1.0 / a;
    let mut sum = term;
    let mut ap = a;
    for _ in 0..GAMMA_MAX_ITER {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if term.abs() < sum.abs() * GAMMA_EPS {
            break;
        }
    }
    sum * (-x + a * x.ln() - ln_gamma(a)).exp()
}

/// `Q(a, x)` by modified Lentz evaluation of the continued fraction.
fn upper_continued_fraction(a: f64, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..GAMMA_MAX_ITER {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < GAMMA_EPS {
            break;
        }
    }
    (-x + a * x.ln() - ln_gamma(a)).exp() * h
}

/// Survival function of the chi-square distribution with `df` degrees of
/// freedom.
pub fn chi_square_sf(statistic: f64, df: u32) -> f64 {
    if statistic.is_nan() {
        return f64::NAN;
    }
    if df == 0 || statistic <= 0.0 {
        return 1.0;
    }
    regularized_gamma_q(df as f64 / 2.0, statistic / 2.0).clamp(0.0, 1.0)
}

/// Pearson `Σ (obs − exp)² / exp`. Classes with zero expectation contribute
/// nothing when also observed zero and make the statistic infinite
/// otherwise.
pub fn pearson_statistic(observed: &[f64], expected: &[f64]) -> f64 {
    observed
        .iter()
        .zip(expected)
        .map(|(&o, &e)| match (o, e) {
            (0.0, 0.0) => 0.0,
            (_, 0.0) => f64::INFINITY,
            (o, e) => (o - e) * (o - e) / e,
        })
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChiSquareResult {
    pub statistic: f64,
    pub df: u32,
    pub p_value: f64,
    /// Some expected class count is below five.
    pub low_expected_warning: bool,
    /// A single allele is present, so the test has no information.
    #[serde(default)]
    pub degenerate: bool,
}

/// Hardy–Weinberg goodness of fit with expectations from the gene-counting
/// estimate; one degree of freedom.
pub fn chi_square_hwe(counts: &GenotypeCounts) -> Result<ChiSquareResult> {
    let freqs = estimate_gene_counting(counts)?;
    let expected = hw_expected(&freqs, counts.total())?.as_array();
    let observed = [counts.dominant, counts.heterozygous, counts.recessive].map(|c| c as f64);
    let low_expected_warning = expected.iter().any(|&e| e < MIN_EXPECTED);
    if freqs.is_fixed() {
        return Ok(ChiSquareResult {
            statistic: 0.0,
            df: 1,
            p_value: 1.0,
            low_expected_warning,
            degenerate: true,
        });
    }
    let statistic = pearson_statistic(&observed, &expected);
    let p_value = if statistic.is_infinite() {
        0.0
    } else {
        chi_square_sf(statistic, 1)
    };
    Ok(ChiSquareResult {
        statistic,
        df: 1,
        p_value,
        low_expected_warning,
        degenerate: false,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Study {
    /// Spread of one-generation estimates versus population size.
    Lln,
    /// Absorption of drift trajectories.
    Fixation,
}

impl Study {
    pub fn as_str(&self) -> &'static str {
        match self {
            Study::Lln => "lln",
            Study::Fixation => "fixation",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchRow {
    pub study: Study,
    pub n: u64,
    pub p0: f64,
    pub replicates: u64,
    pub mean_p: f64,
    pub sd_p: f64,
    pub fixation_fraction: Option<f64>,
    pub loss_fraction: Option<f64>,
    pub unabsorbed: Option<u64>,
    pub mean_absorption_generations: Option<f64>,
}

impl BatchRow {
    /// Standard error of `mean_p`.
    pub fn standard_error(&self) -> f64 {
        self.sd_p / (self.replicates as f64).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchReport {
    pub seed: u64,
    pub rows: Vec<BatchRow>,
}

pub const BATCH_CSV_HEADER: &str =
    "study,n,p0,replicates,mean_p,sd_p,fixation_fraction,loss_fraction,unabsorbed,mean_absorption_generations";

impl BatchReport {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(out);
        w.write_record(BATCH_CSV_HEADER.split(','))?;
        let opt = |x: Option<f64>| x.map(fmt_real).unwrap_or_default();
        for row in &self.rows {
            w.write_record([
                row.study.as_str().to_string(),
                row.n.to_string(),
                fmt_real(row.p0),
                row.replicates.to_string(),
                fmt_real(row.mean_p),
                fmt_real(row.sd_p),
                opt(row.fixation_fraction),
                opt(row.loss_fraction),
                row.unabsorbed.map(|u| u.to_string()).unwrap_or_default(),
                opt(row.mean_absorption_generations),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is utf-8"))
    }
}

fn mean_and_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    (mean, (ss / (n - 1.0)).sqrt())
}

fn check_p0(errs: &mut ValidationErrors, p0: f64) {
    if !(0.0..=1.0).contains(&p0) {
        errs.push("p0", format!("must lie in [0, 1], got {p0}"));
    }
}

/// One Wright–Fisher generation at `p0` for each size, `replicates` times;
/// reports the spread of the gene-counting estimate. Rows are ordered by
/// `n`.
pub fn lln_study(sizes: &[u64], replicates: u64, p0: f64, seed: u64) -> Result<BatchReport> {
    let mut errs = ValidationErrors::default();
    if replicates < 2 {
        errs.push(
            "replicates",
            "at least 2 replicates are needed for a standard deviation",
        );
    }
    if sizes.is_empty() {
        errs.push("sizes", "at least one population size is required");
    }
    if sizes.contains(&0) {
        errs.push("sizes", "population sizes must be at least 1");
    }
    check_p0(&mut errs, p0);
    errs.into_result()?;

    let start = AlleleFrequencies::from_p(p0)?;
    let mut sizes = sizes.to_vec();
    sizes.sort_unstable();
    sizes.dedup();
    let rows = sizes
        .iter()
        .map(|&n| {
            let row_seed = replicate_seed(seed, n);
            let estimates: Vec<f64> = (0..replicates)
                .into_par_iter()
                .map(|i| {
                    let mut rng = generation_stream(replicate_seed(row_seed, i), 1);
                    let counts = wright_fisher_step(&start, n, &mut rng)?;
                    Ok(estimate_gene_counting(&counts)?.p)
                })
                .collect::<Result<_>>()?;
            let (mean_p, sd_p) = mean_and_sd(&estimates);
            Ok(BatchRow {
                study: Study::Lln,
                n,
                p0,
                replicates,
                mean_p,
                sd_p,
                fixation_fraction: None,
                loss_fraction: None,
                unabsorbed: None,
                mean_absorption_generations: None,
            })
        })
        .collect::<Result<_>>()?;
    Ok(BatchReport { seed, rows })
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct DriftOutcome {
    final_p: f64,
    /// Generation at which the run hit 0 or 1.
    absorbed_at: Option<u64>,
}

fn drift_replicate(start: f64, n: u64, max_generations: u64, seed: u64) -> Result<DriftOutcome> {
    let mut freqs = AlleleFrequencies::from_p(start)?;
    if freqs.is_fixed() {
        return Ok(DriftOutcome {
            final_p: freqs.p,
            absorbed_at: Some(0),
        });
    }
    for t in 1..=max_generations {
        let mut rng = generation_stream(seed, t);
        freqs = estimate_gene_counting(&wright_fisher_step(&freqs, n, &mut rng)?)?;
        if freqs.is_fixed() {
            return Ok(DriftOutcome {
                final_p: freqs.p,
                absorbed_at: Some(t),
            });
        }
    }
    Ok(DriftOutcome {
        final_p: freqs.p,
        absorbed_at: None,
    })
}

/// Pure-drift trajectories from frequency `p0` at size `n`. Reports the
/// fraction fixed for `A`, the fraction lost, unabsorbed runs, and the
/// mean absorption time among absorbed runs. `mean_p` is the mean final
/// frequency over all replicates.
pub fn fixation_study(p0: f64, n: u64, replicates: u64, max_generations: u64, seed: u64) -> Result<BatchRow> {
    let mut errs = ValidationErrors::default();
    if replicates < 1 {
        errs.push("replicates", "must be at least 1");
    }
    if n < 1 {
        errs.push("n", "population size must be at least 1");
    }
    check_p0(&mut errs, p0);
    errs.into_result()?;

    let outcomes: Vec<DriftOutcome> = (0..replicates)
        .into_par_iter()
        .map(|i| drift_replicate(p0, n, max_generations, replicate_seed(seed, i)))
        .collect::<Result<_>>()?;

    let finals: Vec<f64> = outcomes.iter().map(|o| o.final_p).collect();
    let (mean_p, sd_p) = mean_and_sd(&finals);
    let fixed = outcomes
        .iter()
        .filter(|o| o.absorbed_at.is_some() && o.final_p == 1.0)
        .count();
    let lost = outcomes
        .iter()
        .filter(|o| o.absorbed_at.is_some() && o.final_p == 0.0)
        .count();
    let times: Vec<u64> = outcomes.iter().filter_map(|o| o.absorbed_at).collect();
    let reps = replicates as f64;
    Ok(BatchRow {
        study: Study::Fixation,
        n,
        p0,
        replicates,
        mean_p,
        sd_p,
        fixation_fraction: Some(fixed as f64 / reps),
        loss_fraction: Some(lost as f64 / reps),
        unabsorbed: Some(replicates - times.len() as u64),
        mean_absorption_generations: if times.is_empty() {
            None
        } else {
            Some(times.iter().sum::<u64>() as f64 / times.len() as f64)
        },
    })
}

/// Convenience wrapper producing a one-row report.
pub fn fixation_report(p0: f64, n: u64, replicates: u64, max_generations: u64, seed: u64) -> Result<BatchReport> {
    Ok(BatchReport {
        seed,
        rows: vec![fixation_study(p0, n, replicates, max_generations, seed)?],
    })
}
