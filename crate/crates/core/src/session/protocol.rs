//! Step-by-step instructions shown alongside each experiment.

use crate::params::ExperimentKind;

const IDEAL_SQRT: &[&str] = &[
    "Prepare 100 allele tokens (chips) in two colours: one colour for A, one for a, in the chosen starting proportion.",
    "Put all tokens in a bag, mix, and draw them two at a time without looking. Each pair is one individual; 50 pairs make the parental generation.",
    "Count AA, Aa and aa pairs and enter them in the generation 0 row.",
    "Return the tokens to the bag, mix again and draw 50 new pairs for the next generation. Enter the counts.",
    "Repeat for each further generation. Compare the allele frequencies obtained from the square roots of the homozygote frequencies across generations.",
];

const IDEAL_COUNTING: &[&str] = &[
    "Prepare 100 allele tokens (chips) in two colours: one colour for A, one for a, in the chosen starting proportion.",
    "Put all tokens in a bag, mix, and draw them two at a time without looking. Each pair is one individual; 50 pairs make the parental generation.",
    "Count AA, Aa and aa pairs and enter them in the generation 0 row.",
    "Return the tokens to the bag, mix again and draw 50 new pairs for the next generation. Enter the counts.",
    "Repeat for each further generation. Compare the allele frequencies p = (D + H/2)/N and q = (R + H/2)/N across generations.",
];

const SELECTION: &[&str] = &[
    "Build the parental population from 100 allele tokens drawn in pairs and enter its genotype counts as generation 0.",
    "Remove the individuals that do not survive according to the chosen viabilities (for a lethal recessive, remove every aa pair).",
    "Recount the surviving alleles, restore the bag to 100 tokens in the survivors' proportion, and draw 50 new pairs.",
    "Enter the offspring counts for the next generation.",
    "Repeat and follow how the frequency of the selected-against allele changes.",
];

const GENE_FLOW: &[&str] = &[
    "Build the parental population from 100 allele tokens drawn in pairs and enter its genotype counts as generation 0.",
    "Replace the chosen share of tokens with tokens taken from the migrant population.",
    "Mix the bag, draw 50 new pairs and enter their counts for the next generation.",
    "Repeat and follow how the allele frequency approaches the migrants' frequency.",
];

const DRIFT: &[&str] = &[
    "Build the parental population from 100 allele tokens drawn in pairs and enter its genotype counts as generation 0.",
    "Draw tokens one at a time, noting each colour and returning the token before the next draw, to form the gametes of the next generation.",
    "Pair the gametes in the order drawn, count AA, Aa and aa, and enter the counts.",
    "Rebuild the bag at the new allele frequency and repeat until one allele is lost or the planned generations are done.",
];

const AUTOMATED: &[&str] = &[
    "Enter the population size and the starting frequency of allele A.",
    "The parental generation is computed from the starting frequency.",
    "Step through generations automatically and follow the genetic structure of the population.",
];

/// The protocol steps for `kind`, in order.
pub fn steps(kind: ExperimentKind) -> &'static [&'static str] {
    match kind {
        ExperimentKind::IdealSqrt => IDEAL_SQRT,
        ExperimentKind::IdealCounting => IDEAL_COUNTING,
        ExperimentKind::Selection => SELECTION,
        ExperimentKind::GeneFlow => GENE_FLOW,
        ExperimentKind::Drift => DRIFT,
        ExperimentKind::Automated => AUTOMATED,
    }
}
