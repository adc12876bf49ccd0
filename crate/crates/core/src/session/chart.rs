//! Plot-ready series for the three chart presentations.

use serde::{Deserialize, Serialize};

use super::ExperimentSession;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChartVariant {
    /// Frequencies against generation.
    LineGraph,
    /// One stacked column per generation with the numbers printed inside
    /// each segment.
    StackedLabeled,
    /// Per class, one column per generation placed one behind the other,
    /// narrowest (generation 0) in front to widest (latest) at the back;
    /// numbers appear on hover only.
    NestedColumns,
}

impl std::str::FromStr for ChartVariant {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.replace('-', "_").as_str() {
            "line_graph" => Ok(ChartVariant::LineGraph),
            "stacked_labeled" => Ok(ChartVariant::StackedLabeled),
            "nested_columns" => Ok(ChartVariant::NestedColumns),
            other => Err(format!("unknown chart variant '{other}'")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Line {
    pub key: String,
    pub label: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub key: String,
    pub value: f64,
    /// Text drawn inside the segment.
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StackedColumn {
    pub generation: usize,
    /// `AA`, `Aa`, `aa` shares.
    pub genotypes: Vec<Segment>,
    /// `A`, `a` shares by gene counting.
    pub alleles: Vec<Segment>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HoverPayload {
    pub generation: usize,
    pub class: String,
    pub value: f64,
    /// Individuals (genotype classes) or allele copies (allele classes).
    pub count: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NestedColumn {
    pub generation: usize,
    pub value: f64,
    /// Relative width in (0, 1]; strictly increasing with generation.
    pub width: f64,
    /// Drawing order, 0 frontmost.
    pub depth: usize,
    pub hover: HoverPayload,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NestedGroup {
    pub key: String,
    /// `genotype` or `allele`.
    pub structure: String,
    pub columns: Vec<NestedColumn>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ChartBody {
    LineGraph { lines: Vec<Line> },
    StackedLabeled { columns: Vec<StackedColumn> },
    NestedColumns { groups: Vec<NestedGroup> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChartSeries {
    pub variant: ChartVariant,
    pub generations: Vec<usize>,
    pub body: ChartBody,
}

/// Display text for a value inside a chart segment.
fn label(value: f64) -> String {
    format!("{value:.4}")
}

struct Point {
    t: usize,
    p: f64,
    q: f64,
    p_sqrt: f64,
    q_sqrt: f64,
    genotypes: [f64; 3],
    counts: [u64; 3],
    alleles: [u64; 2],
}

const GENOTYPE_KEYS: [&str; 3] = ["AA", "Aa", "aa"];
const ALLELE_KEYS: [&str; 2] = ["A", "a"];

fn points(session: &ExperimentSession) -> Vec<Point> {
    session
        .records()
        .iter()
        .filter_map(|r| {
            let d = r.derived()?;
            let c = r.counts()?;
            Some(Point {
                t: r.t(),
                p: d.gene_counting.p,
                q: d.gene_counting.q,
                p_sqrt: d.sqrt_method.p,
                q_sqrt: d.sqrt_method.q,
                genotypes: d.genotype_frequencies.as_array(),
                counts: [c.dominant, c.heterozygous, c.recessive],
                alleles: [c.dominant_alleles(), c.recessive_alleles()],
            })
        })
        .collect()
}

pub(super) fn build(session: &ExperimentSession, variant: ChartVariant) -> Result<ChartSeries> {
    let pts = points(session);
    if pts.is_empty() {
        return Err(Error::NoData);
    }
    let generations: Vec<usize> = pts.iter().map(|p| p.t).collect();
    let body = match variant {
        ChartVariant::LineGraph => {
            let line = |key: &str, label: &str, f: &dyn Fn(&Point) -> f64| Line {
                key: key.into(),
                label: label.into(),
                values: pts.iter().map(f).collect(),
            };
            ChartBody::LineGraph {
                lines: vec![
                    line("p", "p (A), gene counting", &|x| x.p),
                    line("q", "q (a), gene counting", &|x| x.q),
                    line("p_sqrt", "p (A), square root of fAA", &|x| x.p_sqrt),
                    line("q_sqrt", "q (a), square root of faa", &|x| x.q_sqrt),
                    line("fAA", "AA", &|x| x.genotypes[0]),
                    line("fAa", "Aa", &|x| x.genotypes[1]),
                    line("faa", "aa", &|x| x.genotypes[2]),
                ],
            }
        }
        ChartVariant::StackedLabeled => ChartBody::StackedLabeled {
            columns: pts
                .iter()
                .map(|x| StackedColumn {
                    generation: x.t,
                    genotypes: GENOTYPE_KEYS
                        .iter()
                        .zip(x.genotypes)
                        .map(|(k, v)| Segment {
                            key: (*k).into(),
                            value: v,
                            label: label(v),
                        })
                        .collect(),
                    alleles: ALLELE_KEYS
                        .iter()
                        .zip([x.p, x.q])
                        .map(|(k, v)| Segment {
                            key: (*k).into(),
                            value: v,
                            label: label(v),
                        })
                        .collect(),
                })
                .collect(),
        },
        ChartVariant::NestedColumns => {
            let len = pts.len();
            let column = |i: usize, x: &Point, class: &str, value: f64, count: u64| NestedColumn {
                generation: x.t,
                value,
                width: (i + 1) as f64 / len as f64,
                depth: i,
                hover: HoverPayload {
                    generation: x.t,
                    class: class.into(),
                    value,
                    count,
                },
            };
            let mut groups: Vec<NestedGroup> = GENOTYPE_KEYS
                .iter()
                .enumerate()
                .map(|(k, key)| NestedGroup {
                    key: (*key).into(),
                    structure: "genotype".into(),
                    columns: pts
                        .iter()
                        .enumerate()
                        .map(|(i, x)| column(i, x, key, x.genotypes[k], x.counts[k]))
                        .collect(),
                })
                .collect();
            groups.extend(ALLELE_KEYS.iter().enumerate().map(|(k, key)| {
                NestedGroup {
                    key: (*key).into(),
                    structure: "allele".into(),
                    columns: pts
                        .iter()
                        .enumerate()
                        .map(|(i, x)| column(i, x, key, [x.p, x.q][k], x.alleles[k]))
                        .collect(),
                }
            }));
            ChartBody::NestedColumns { groups }
        }
    };
    Ok(ChartSeries {
        variant,
        generations,
        body,
    })
}
