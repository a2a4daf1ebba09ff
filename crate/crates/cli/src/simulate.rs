//! TOML configuration for `codestat simulate`.
//!
//! ```toml
//! trials = 200
//! seed = 42
//!
//! [compressor]            # optional, defaults to PPM order 3
//! backend = "ppm"
//! order = 3
//!
//! [experiment]
//! kind = "homogeneity"    # or "classification", "delta_growth"
//! x = "a"
//! y = "b"
//! sequences_per_group = 20
//! sequence_length = 5000
//! alpha = 0.05
//!
//! [[source]]
//! label = "a"
//! alphabet = ["0", "1"]   # optional: defaults to 0..K-1
//! order = 1
//! transitions = [[0.9, 0.1], [0.1, 0.9]]
//! ```

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use codestat::homogeneity::SplitPolicy;
use codestat::sources::{DeltaGrowthConfig, ErrorRateConfig, Experiment, MarkovModel};
use codestat::{Alphabet, CompressorSpec};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    pub trials: usize,
    pub seed: u64,
    #[serde(default)]
    pub compressor: CompressorSpec,
    pub experiment: ExperimentSection,
    #[serde(rename = "source")]
    pub sources: Vec<SourceSection>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ExperimentSection {
    Homogeneity {
        x: String,
        y: String,
        sequences_per_group: usize,
        sequence_length: usize,
        #[serde(default = "default_alpha")]
        alpha: f64,
        #[serde(default)]
        split: SplitPolicy,
    },
    Classification {
        classes: Vec<String>,
        reference_length: usize,
        query_length: usize,
    },
    DeltaGrowth {
        x: String,
        y: String,
        context_length: usize,
        lengths: Vec<usize>,
    },
}

fn default_alpha() -> f64 {
    0.05
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceSection {
    pub label: String,
    #[serde(default)]
    pub alphabet: Option<Vec<String>>,
    pub order: usize,
    pub transitions: Vec<Vec<f64>>,
    #[serde(default)]
    pub initial: Option<Vec<f64>>,
}

/// A validated simulation, ready to run.
pub enum Simulation {
    ErrorRate(ErrorRateConfig),
    DeltaGrowth(DeltaGrowthConfig),
}

impl SimulationConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        toml::from_str(&text).map_err(|e| CliError::Config {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }

    fn models(&self) -> Result<BTreeMap<&str, MarkovModel>> {
        let mut models = BTreeMap::new();
        let mut shared: Option<Arc<Alphabet>> = None;
        for s in &self.sources {
            let k = s.transitions.first().map_or(0, Vec::len);
            let alphabet = match &s.alphabet {
                Some(tokens) => {
                    Alphabet::new(tokens.iter().map(|t| t.as_bytes().to_vec()).collect())?
                }
                None => Alphabet::numeric(k)?,
            };
            // every source must live on one alphabet object so sequences mix freely
            let alphabet = match &shared {
                Some(a) if **a == alphabet => a.clone(),
                Some(_) => {
                    return Err(CliError::Usage(format!(
                        "source {:?} uses a different alphabet from the others",
                        s.label
                    )))
                }
                None => {
                    let a = Arc::new(alphabet);
                    shared = Some(a.clone());
                    a
                }
            };
            let model =
                MarkovModel::new(alphabet, s.order, s.transitions.clone(), s.initial.clone())?;
            if models.insert(s.label.as_str(), model).is_some() {
                return Err(CliError::Usage(format!(
                    "duplicate source label {:?}",
                    s.label
                )));
            }
        }
        Ok(models)
    }

    pub fn build(&self) -> Result<Simulation> {
        self.compressor.validate()?;
        let models = self.models()?;
        let get = |label: &str| {
            models
                .get(label)
                .cloned()
                .ok_or_else(|| CliError::Usage(format!("unknown source label {label:?}")))
        };
        Ok(match &self.experiment {
            ExperimentSection::Homogeneity {
                x,
                y,
                sequences_per_group,
                sequence_length,
                alpha,
                split,
            } => Simulation::ErrorRate(ErrorRateConfig {
                experiment: Experiment::Homogeneity {
                    source_x: get(x)?,
                    source_y: get(y)?,
                    sequences_per_group: *sequences_per_group,
                    sequence_length: *sequence_length,
                    alpha: *alpha,
                    split: *split,
                },
                spec: self.compressor.clone(),
                trials: self.trials,
                seed: self.seed,
            }),
            ExperimentSection::Classification {
                classes,
                reference_length,
                query_length,
            } => Simulation::ErrorRate(ErrorRateConfig {
                experiment: Experiment::Classification {
                    sources: classes.iter().map(|c| get(c)).collect::<Result<_>>()?,
                    reference_length: *reference_length,
                    query_length: *query_length,
                },
                spec: self.compressor.clone(),
                trials: self.trials,
                seed: self.seed,
            }),
            ExperimentSection::DeltaGrowth {
                x,
                y,
                context_length,
                lengths,
            } => Simulation::DeltaGrowth(DeltaGrowthConfig {
                source_x: get(x)?,
                source_y: get(y)?,
                spec: self.compressor.clone(),
                context_length: *context_length,
                lengths: lengths.clone(),
                trials: self.trials,
                seed: self.seed,
            }),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const HOMOGENEITY: &str = r#"
trials = 4
seed = 9

[compressor]
backend = "ppm"
order = 2
escape = "D"

[experiment]
kind = "homogeneity"
x = "a"
y = "b"
sequences_per_group = 6
sequence_length = 100

[[source]]
label = "a"
order = 0
transitions = [[0.8, 0.2]]

[[source]]
label = "b"
order = 1
transitions = [[0.9, 0.1], [0.1, 0.9]]
"#;

    #[test]
    fn parses_and_builds() {
        let cfg: SimulationConfig = toml::from_str(HOMOGENEITY).unwrap();
        assert_eq!(
            cfg.compressor,
            CompressorSpec::Ppm {
                order: 2,
                escape: codestat::EscapeMethod::D
            }
        );
        match cfg.build().unwrap() {
            Simulation::ErrorRate(c) => match c.experiment {
                Experiment::Homogeneity { alpha, split, .. } => {
                    assert_eq!(alpha, 0.05);
                    assert_eq!(split, SplitPolicy::FirstHalf);
                }
                _ => panic!("wrong experiment"),
            },
            Simulation::DeltaGrowth(_) => panic!("wrong simulation"),
        }
    }

    #[test]
    fn unknown_label_and_fields_are_rejected() {
        let bad = HOMOGENEITY.replace("y = \"b\"", "y = \"c\"");
        let cfg: SimulationConfig = toml::from_str(&bad).unwrap();
        assert!(matches!(cfg.build(), Err(CliError::Usage(_))));
        let extra = HOMOGENEITY.replace("seed = 9", "seed = 9\ncolour = 1");
        assert!(toml::from_str::<SimulationConfig>(&extra).is_err());
    }

    #[test]
    fn mismatched_alphabets_are_rejected() {
        let bad = HOMOGENEITY.replace("label = \"b\"", "label = \"b\"\nalphabet = [\"x\", \"y\"]");
        let cfg: SimulationConfig = toml::from_str(&bad).unwrap();
        assert!(cfg.build().is_err());
    }
}
