//! The JSON document every subcommand emits.

use codestat::association::AssociationReport;
use codestat::classify::ClassificationResult;
use codestat::homogeneity::TestReport;
use codestat::sources::{DeltaGrowthReport, ErrorRateReport};
use codestat::CompressorSpec;
use serde::{Deserialize, Serialize};

use crate::ingest::{InputDigest, Tokenize};

/// Bumped whenever a field is renamed or removed.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub tool: Tool,
    pub command: String,
    pub config: ResolvedConfig,
    pub inputs: Vec<InputDigest>,
    pub warnings: Vec<String>,
    pub result: Payload,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timings: Option<Timings>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tool {
    pub name: String,
    pub version: String,
}

impl Default for Tool {
    fn default() -> Self {
        Tool {
            name: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
        }
    }
}

/// Every setting that influenced the result, after defaults are applied.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ResolvedConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub compressor: Option<CompressorSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tokenize: Option<Tokenize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vocab_cap: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delimiter: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split: Option<codestat::homogeneity::SplitPolicy>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub confidence: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ratio_threshold: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulation: Option<crate::simulate::SimulationConfig>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "data", rename_all = "snake_case")]
pub enum Payload {
    Homogeneity(TestReport),
    Association(AssociationReport),
    Classification(Vec<QueryResult>),
    ErrorRate(ErrorRateReport),
    DeltaGrowth(DeltaGrowthReport),
    Selftest(Vec<SelftestCheck>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QueryResult {
    pub query: String,
    pub length: usize,
    pub labels: Vec<String>,
    #[serde(flatten)]
    pub result: ClassificationResult,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelftestCheck {
    pub name: String,
    pub value: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub ingest_ms: f64,
    pub analysis_ms: f64,
}
