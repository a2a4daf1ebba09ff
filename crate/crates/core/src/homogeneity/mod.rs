//! Two-sample and s-sample homogeneity tests driven by conditional code
//! lengths.
//!
//! Each group is split into a reference half, concatenated into one
//! sequence, and a held-out half. Every held-out sequence is scored by how
//! much cheaper it is to encode after its own group's reference than after
//! the other group's. Under H0 the signs of those scores are exchangeable
//! between groups, so a standard independence test on the sign table
//! controls the Type I error.

mod exact;
mod table;

use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::alphabet::{Alphabet, Sequence};
use crate::codecs::{Codec, CompressorSpec, Primed};
use crate::error::{Error, Result};

pub use exact::fisher_exact_2x2;
pub use table::{
    build_2x2, check_alpha, check_requirements, chi_square_2x2, chi_square_sxs, fisher_report,
    psi_test, ContingencyTable, Decision, TestMethod, TestReport, MIN_EXPECTED_COUNT,
};

/// Within-group max/min length ratio above which a warning is attached.
pub const LENGTH_RATIO_WARNING: f64 = 100.0;

/// A labelled set of sequences over one alphabet.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleGroup {
    pub label: String,
    sequences: Vec<Sequence>,
}

impl SampleGroup {
    pub fn new(label: impl Into<String>, sequences: Vec<Sequence>) -> Result<Self> {
        let label = label.into();
        let first = sequences
            .first()
            .ok_or_else(|| Error::domain(format!("group {label:?} has no sequences")))?;
        for s in &sequences {
            if s.is_empty() {
                return Err(Error::domain(format!(
                    "group {label:?} has an empty sequence"
                )));
            }
            first.check_same_alphabet(s)?;
        }
        Ok(SampleGroup { label, sequences })
    }

    pub fn sequences(&self) -> &[Sequence] {
        &self.sequences
    }

    pub fn len(&self) -> usize {
        self.sequences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sequences.is_empty()
    }

    pub fn alphabet(&self) -> &Arc<Alphabet> {
        self.sequences[0].alphabet()
    }

    /// Warning when the longest sequence is more than
    /// [`LENGTH_RATIO_WARNING`] times the shortest.
    pub fn length_ratio_warning(&self) -> Option<String> {
        let max = self.sequences.iter().map(Sequence::len).max()?;
        let min = self.sequences.iter().map(Sequence::len).min()?;
        let ratio = max as f64 / min as f64;
        (ratio > LENGTH_RATIO_WARNING).then(|| {
            format!(
                "group {:?}: longest/shortest sequence length ratio {ratio:.1} exceeds {LENGTH_RATIO_WARNING}",
                self.label
            )
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(tag = "policy", rename_all = "snake_case")]
pub enum SplitPolicy {
    #[default]
    FirstHalf,
    SeededRandom {
        seed: u64,
    },
}

/// Which sequences form the reference and which are held out, both in
/// index order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitPlan {
    pub reference_indices: Vec<usize>,
    pub heldout_indices: Vec<usize>,
}

impl SplitPlan {
    pub fn new(k: usize, policy: SplitPolicy) -> Result<Self> {
        if k < 2 {
            return Err(Error::domain(format!(
                "splitting needs at least 2 sequences, got {k}"
            )));
        }
        let half = k / 2;
        let mut order: Vec<usize> = (0..k).collect();
        if let SplitPolicy::SeededRandom { seed } = policy {
            order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        }
        let mut reference_indices = order[..half].to_vec();
        let mut heldout_indices = order[half..].to_vec();
        reference_indices.sort_unstable();
        heldout_indices.sort_unstable();
        Ok(SplitPlan {
            reference_indices,
            heldout_indices,
        })
    }
}

/// Splits a group into its concatenated reference and the held-out list.
pub fn split(group: &SampleGroup, policy: SplitPolicy) -> Result<(Sequence, Vec<Sequence>)> {
    let plan = SplitPlan::new(group.len(), policy)?;
    let reference = Sequence::concat_all(
        group.alphabet().clone(),
        plan.reference_indices.iter().map(|&i| &group.sequences[i]),
    )?;
    let heldout = plan
        .heldout_indices
        .iter()
        .map(|&i| group.sequences[i].clone())
        .collect();
    Ok((reference, heldout))
}

/// `|φ(s/against)| - |φ(s/own)|` for every `s`.
fn score_all(seqs: &[Sequence], own: &Primed, against: &Primed) -> Result<Vec<f64>> {
    seqs.par_iter()
        .map(|s| {
            let other = against.conditional_length(s)?.bits();
            let mine = own.conditional_length(s)?.bits();
            Ok(other - mine)
        })
        .collect()
}

fn prime_pair(
    spec: &CompressorSpec,
    x_star: &Sequence,
    y_star: &Sequence,
) -> Result<(Primed, Primed)> {
    x_star.check_same_alphabet(y_star)?;
    if x_star.is_empty() || y_star.is_empty() {
        return Err(Error::domain("reference sequences must be nonempty"));
    }
    let codec = Codec::new(spec, x_star.alphabet().clone())?;
    Ok((codec.prime(x_star)?, codec.prime(y_star)?))
}

/// `γ_i = |φ(x_i/Y*)| - |φ(x_i/X*)|` for the held-out members of X.
pub fn gamma_scores(
    heldout_x: &[Sequence],
    x_star: &Sequence,
    y_star: &Sequence,
    spec: &CompressorSpec,
) -> Result<Vec<f64>> {
    if heldout_x.is_empty() {
        return Err(Error::domain("no held-out sequences to score"));
    }
    let (px, py) = prime_pair(spec, x_star, y_star)?;
    score_all(heldout_x, &px, &py)
}

/// `δ_j = |φ(y_j/X*)| - |φ(y_j/Y*)|` for the held-out members of Y.
pub fn delta_scores(
    heldout_y: &[Sequence],
    x_star: &Sequence,
    y_star: &Sequence,
    spec: &CompressorSpec,
) -> Result<Vec<f64>> {
    if heldout_y.is_empty() {
        return Err(Error::domain("no held-out sequences to score"));
    }
    let (px, py) = prime_pair(spec, x_star, y_star)?;
    score_all(heldout_y, &py, &px)
}

/// Full two-sample pipeline: split, score, tabulate, test.
///
/// The table is tested with Yates-corrected chi-square when every expected
/// count is at least [`MIN_EXPECTED_COUNT`], and with Fisher's exact test
/// otherwise.
pub fn homogeneity_test(
    x: &SampleGroup,
    y: &SampleGroup,
    spec: &CompressorSpec,
    alpha: f64,
    policy: SplitPolicy,
) -> Result<TestReport> {
    check_alpha(alpha)?;
    let (x_star, x_hat) = split(x, policy)?;
    let (y_star, y_hat) = split(y, policy)?;
    let (px, py) = prime_pair(spec, &x_star, &y_star)?;
    let (gammas, deltas) = rayon::join(
        || score_all(&x_hat, &px, &py),
        || score_all(&y_hat, &py, &px),
    );
    let (gammas, deltas) = (gammas?, deltas?);
    let table = build_2x2(&gammas, &deltas)?.with_labels(
        vec![x.label.clone(), y.label.clone()],
        vec![
            format!("closer to {}", x.label),
            format!("closer to {}", y.label),
        ],
    )?;
    let mut report = if x_star == y_star {
        identical_references(&table, alpha)
    } else {
        psi_test(&table, alpha)?
    };
    report
        .requirement_warnings
        .extend([x, y].iter().filter_map(|g| g.length_ratio_warning()));
    report.gammas = gammas;
    report.deltas = deltas;
    Ok(report)
}

/// With `X* = Y*` every score is exactly zero and the tie rule puts all
/// held-out sequences on the diagonal, so the table says nothing about H1.
fn identical_references(table: &ContingencyTable, alpha: f64) -> TestReport {
    let mut warnings = check_requirements(table);
    warnings
        .push("reference halves are identical: scores carry no information, H0 retained".into());
    TestReport {
        table: table.clone(),
        statistic: 0.0,
        degrees_of_freedom: None,
        p_value: 1.0,
        alpha,
        decision: Decision::RetainH0,
        method: TestMethod::FisherExact,
        requirement_warnings: warnings,
        gammas: Vec::new(),
        deltas: Vec::new(),
    }
}

/// s×s table: cell `(i, j)` counts held-out sequences of group `i` whose
/// conditional length is smallest against reference `j` (lowest `j` wins
/// ties).
pub fn build_sxs(
    groups: &[SampleGroup],
    spec: &CompressorSpec,
    policy: SplitPolicy,
) -> Result<ContingencyTable> {
    if groups.len() < 2 {
        return Err(Error::domain("need at least 2 groups"));
    }
    let alphabet = groups[0].alphabet().clone();
    let codec = Codec::new(spec, alphabet)?;
    let mut heldouts = Vec::with_capacity(groups.len());
    let mut references = Vec::with_capacity(groups.len());
    for g in groups {
        let (reference, heldout) = split(g, policy)?;
        references.push(codec.prime(&reference)?);
        heldouts.push(heldout);
    }
    let counts = heldouts
        .iter()
        .map(|heldout| {
            let winners: Vec<usize> = heldout
                .par_iter()
                .map(|s| {
                    let scores = references
                        .iter()
                        .map(|r| r.conditional_length(s).map(|c| c.bits()))
                        .collect::<Result<Vec<_>>>()?;
                    Ok(argmin(&scores))
                })
                .collect::<Result<_>>()?;
            let mut row = vec![0u64; groups.len()];
            for w in winners {
                row[w] += 1;
            }
            Ok(row)
        })
        .collect::<Result<Vec<_>>>()?;
    let labels: Vec<String> = groups.iter().map(|g| g.label.clone()).collect();
    ContingencyTable::new(counts)?.with_labels(
        labels.clone(),
        labels.iter().map(|l| format!("closest to {l}")).collect(),
    )
}

/// Index of the smallest value; the first one wins ties.
pub(crate) fn argmin(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v < values[best] {
            best = i;
        }
    }
    best
}
