//! Genotype and allele bookkeeping for one autosomal locus with a dominant
//! allele `A` and a recessive allele `a`.
//!
//! Counts are exact integers; every frequency is computed from them in
//! double precision and never fed back into counts except through the
//! explicit sampling operators in [`crate::engine`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance within which a normalized pair must satisfy `p + q = 1`.
pub const NORMALIZED_TOLERANCE: f64 = 1e-12;

/// Counts of the three genotype classes in one generation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct GenotypeCounts {
    /// `AA` individuals.
    #[serde(rename = "D")]
    pub dominant: u64,
    /// `Aa` individuals.
    #[serde(rename = "H")]
    pub heterozygous: u64,
    /// `aa` individuals.
    #[serde(rename = "R")]
    pub recessive: u64,
}

impl GenotypeCounts {
    pub const fn new(dominant: u64, heterozygous: u64, recessive: u64) -> Self {
        Self {
            dominant,
            heterozygous,
            recessive,
        }
    }

    /// Population size `N`.
    pub fn total(&self) -> u64 {
        self.dominant + self.heterozygous + self.recessive
    }

    /// Copies of `A` in the allele pool (`2D + H`).
    pub fn dominant_alleles(&self) -> u64 {
        2 * self.dominant + self.heterozygous
    }

    /// Copies of `a` in the allele pool (`2R + H`).
    pub fn recessive_alleles(&self) -> u64 {
        2 * self.recessive + self.heterozygous
    }

    /// Counts scaled by an integer factor.
    pub fn scaled(&self, k: u64) -> Self {
        Self::new(self.dominant * k, self.heterozygous * k, self.recessive * k)
    }

    /// True when the counts sit exactly at Hardy–Weinberg proportions
    /// (`H² = 4DR`).
    pub fn is_hw_proportioned(&self) -> bool {
        let h = self.heterozygous as u128;
        h * h == 4 * self.dominant as u128 * self.recessive as u128
    }

    fn nonempty_total(&self) -> Result<f64> {
        match self.total() {
            0 => Err(Error::EmptyPopulation),
            n => Ok(n as f64),
        }
    }
}

/// Frequencies of the dominant (`p`) and recessive (`q`) alleles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlleleFrequencies {
    pub p: f64,
    pub q: f64,
    /// Set when `p + q = 1` holds by construction.
    pub normalized: bool,
}

impl AlleleFrequencies {
    /// A normalized pair from the dominant-allele frequency alone.
    pub fn from_p(p: f64) -> Result<Self> {
        check_unit(p)?;
        Ok(Self {
            p,
            q: 1.0 - p,
            normalized: true,
        })
    }

    /// An arbitrary pair; normalized only if it happens to sum to one.
    pub fn new(p: f64, q: f64) -> Result<Self> {
        check_unit(p)?;
        check_unit(q)?;
        Ok(Self {
            p,
            q,
            normalized: (p + q - 1.0).abs() <= NORMALIZED_TOLERANCE,
        })
    }

    /// `p + q − 1`; zero for normalized pairs, the disagreement of the
    /// square-root estimator otherwise.
    pub fn residual(&self) -> f64 {
        self.p + self.q - 1.0
    }

    /// True when one allele is lost.
    pub fn is_fixed(&self) -> bool {
        self.p == 0.0 || self.p == 1.0
    }
}

fn check_unit(x: f64) -> Result<()> {
    if (0.0..=1.0).contains(&x) {
        Ok(())
    } else {
        Err(Error::FrequencyOutOfRange(x))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenotypeFrequencies {
    #[serde(rename = "fAA")]
    pub aa_dominant: f64,
    #[serde(rename = "fAa")]
    pub heterozygous: f64,
    #[serde(rename = "faa")]
    pub aa_recessive: f64,
}

impl GenotypeFrequencies {
    pub fn as_array(&self) -> [f64; 3] {
        [self.aa_dominant, self.heterozygous, self.aa_recessive]
    }
}

/// Expected genotype counts under Hardy–Weinberg proportions. Components
/// may be fractional.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HwExpectation {
    #[serde(rename = "eAA")]
    pub aa_dominant: f64,
    #[serde(rename = "eAa")]
    pub heterozygous: f64,
    #[serde(rename = "eaa")]
    pub aa_recessive: f64,
}

impl HwExpectation {
    pub fn as_array(&self) -> [f64; 3] {
        [self.aa_dominant, self.heterozygous, self.aa_recessive]
    }

    pub fn total(&self) -> f64 {
        self.aa_dominant + self.heterozygous + self.aa_recessive
    }
}

/// Gene counting: `p = (D + H/2) / N`, `q = (R + H/2) / N`.
pub fn estimate_gene_counting(counts: &GenotypeCounts) -> Result<AlleleFrequencies> {
    let n = counts.nonempty_total()?;
    let half_h = 0.5 * counts.heterozygous as f64;
    Ok(AlleleFrequencies {
        p: (counts.dominant as f64 + half_h) / n,
        q: (counts.recessive as f64 + half_h) / n,
        normalized: true,
    })
}

/// Square roots of the homozygote frequencies: `p = √(D/N)`, `q = √(R/N)`.
///
/// The result is deliberately not renormalized. Away from Hardy–Weinberg
/// proportions `p + q ≠ 1`, and [`AlleleFrequencies::residual`] reports by
/// how much.
pub fn estimate_sqrt_method(counts: &GenotypeCounts) -> Result<AlleleFrequencies> {
    let n = counts.nonempty_total()?;
    let p = (counts.dominant as f64 / n).sqrt();
    let q = (counts.recessive as f64 / n).sqrt();
    Ok(AlleleFrequencies {
        p,
        q,
        normalized: counts.is_hw_proportioned(),
    })
}

pub fn genotype_frequencies(counts: &GenotypeCounts) -> Result<GenotypeFrequencies> {
    let n = counts.nonempty_total()?;
    Ok(GenotypeFrequencies {
        aa_dominant: counts.dominant as f64 / n,
        heterozygous: counts.heterozygous as f64 / n,
        aa_recessive: counts.recessive as f64 / n,
    })
}

/// `(p²n, 2pqn, q²n)` for a normalized frequency pair.
pub fn hw_expected(freqs: &AlleleFrequencies, n: u64) -> Result<HwExpectation> {
    if !freqs.normalized || freqs.residual().abs() > NORMALIZED_TOLERANCE {
        return Err(Error::NotNormalized);
    }
    if n == 0 {
        return Err(Error::EmptyPopulation);
    }
    let n = n as f64;
    let (p, q) = (freqs.p, freqs.q);
    Ok(HwExpectation {
        aa_dominant: p * p * n,
        heterozygous: 2.0 * p * q * n,
        aa_recessive: q * q * n,
    })
}

/// Integer counts summing to `n` closest to the Hardy–Weinberg expectation,
/// by largest remainder. Equal remainders go to `Aa` first, then `AA`,
/// then `aa`.
pub fn hw_rounded_counts(freqs: &AlleleFrequencies, n: u64) -> Result<GenotypeCounts> {
    let expected = hw_expected(freqs, n)?.as_array();
    let mut floors = expected.map(|e| e.floor().max(0.0) as u64);
    let assigned: u64 = floors.iter().sum();
    let mut leftover = n.saturating_sub(assigned);
    // tie-break priority: Aa, AA, aa
    let mut order = [1usize, 0, 2];
    order.sort_by(|&a, &b| {
        let ra = expected[a] - expected[a].floor();
        let rb = expected[b] - expected[b].floor();
        rb.total_cmp(&ra)
    });
    for &class in order.iter().cycle() {
        if leftover == 0 {
            break;
        }
        floors[class] += 1;
        leftover -= 1;
    }
    Ok(GenotypeCounts::new(floors[0], floors[1], floors[2]))
}
