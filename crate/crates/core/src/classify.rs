//! Minimum conditional code length classification.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::alphabet::Sequence;
use crate::codecs::{Codec, CompressorSpec, Primed};
use crate::error::{Error, Result};
use crate::homogeneity::argmin;

/// Query/reference length ratio above which the result carries a warning.
pub const DEFAULT_RATIO_THRESHOLD: f64 = 0.1;

/// Labelled reference samples, one per class.
#[derive(Clone, Debug)]
pub struct TrainingBank {
    classes: Vec<(String, Sequence)>,
    spec: CompressorSpec,
}

impl TrainingBank {
    pub fn new(classes: Vec<(String, Sequence)>, spec: CompressorSpec) -> Result<Self> {
        let (_, first) = classes
            .first()
            .ok_or_else(|| Error::domain("training bank needs at least one class"))?;
        for (label, reference) in &classes {
            if reference.is_empty() {
                return Err(Error::domain(format!(
                    "class {label:?} has an empty reference"
                )));
            }
            first.check_same_alphabet(reference)?;
        }
        spec.validate()?;
        Ok(TrainingBank { classes, spec })
    }

    pub fn classes(&self) -> &[(String, Sequence)] {
        &self.classes
    }

    pub fn spec(&self) -> &CompressorSpec {
        &self.spec
    }

    pub fn min_reference_len(&self) -> usize {
        self.classes.iter().map(|(_, s)| s.len()).min().unwrap_or(0)
    }

    /// Encodes every reference once so that many queries can be scored.
    pub fn prepare(&self) -> Result<PreparedBank<'_>> {
        let codec = Codec::new(&self.spec, self.classes[0].1.alphabet().clone())?;
        let primed = self
            .classes
            .par_iter()
            .map(|(_, r)| codec.prime(r))
            .collect::<Result<Vec<_>>>()?;
        Ok(PreparedBank { bank: self, primed })
    }
}

pub struct PreparedBank<'a> {
    bank: &'a TrainingBank,
    primed: Vec<Primed>,
}

impl PreparedBank<'_> {
    pub fn classify(&self, u: &Sequence) -> Result<ClassificationResult> {
        self.classify_with_threshold(u, DEFAULT_RATIO_THRESHOLD)
    }

    pub fn classify_with_threshold(
        &self,
        u: &Sequence,
        ratio_threshold: f64,
    ) -> Result<ClassificationResult> {
        if u.is_empty() {
            return Err(Error::domain("cannot classify an empty sequence"));
        }
        let scores = self
            .primed
            .iter()
            .map(|p| p.conditional_length(u).map(|c| c.bits()))
            .collect::<Result<Vec<_>>>()?;
        let winner = argmin(&scores);
        let margin = scores
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != winner)
            .map(|(_, &s)| s - scores[winner])
            .reduce(f64::min);
        let ratio = check_length_ratio(u, self.bank, ratio_threshold);
        Ok(ClassificationResult {
            winner_label: self.bank.classes[winner].0.clone(),
            winner_index: winner,
            scores,
            margin,
            length_ratio: ratio.ratio,
            ratio_warning: ratio.warning,
        })
    }
}

/// Output of [`classify`]. `margin` is the runner-up's score minus the
/// winner's, in bits; it is a heuristic confidence proxy and is absent for
/// a single class.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassificationResult {
    pub winner_label: String,
    pub winner_index: usize,
    pub scores: Vec<f64>,
    pub margin: Option<f64>,
    pub length_ratio: f64,
    pub ratio_warning: Option<String>,
}

/// Picks the class whose reference makes `u` cheapest to encode. Ties go
/// to the lowest class index.
pub fn classify(u: &Sequence, bank: &TrainingBank) -> Result<ClassificationResult> {
    bank.prepare()?.classify(u)
}

#[derive(Clone, Debug, PartialEq)]
pub struct LengthRatio {
    pub ratio: f64,
    pub warning: Option<String>,
}

/// `|u| / min_j |ŵ^j|`, with a warning above `threshold`: the classifier
/// is only consistent when this ratio goes to zero.
pub fn check_length_ratio(u: &Sequence, bank: &TrainingBank, threshold: f64) -> LengthRatio {
    let ratio = u.len() as f64 / bank.min_reference_len() as f64;
    let warning = (ratio > threshold).then(|| {
        format!(
            "query/reference length ratio {ratio:.4} exceeds {threshold}; references may be too short"
        )
    });
    LengthRatio { ratio, warning }
}
