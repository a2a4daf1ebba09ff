//! Association coefficients for 2×2 tables.
//!
//! `V` uses the phi-coefficient denominator
//! `sqrt((n11+n12)(n21+n22)(n11+n21)(n12+n22))`, the product of the four
//! margins.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::homogeneity::ContingencyTable;

pub const DEFAULT_CONFIDENCE: f64 = 0.95;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AssociationReport {
    pub q: f64,
    pub v: f64,
    pub se_q: f64,
    pub se_v: f64,
    pub ci_q: (f64, f64),
    pub ci_v: (f64, f64),
    pub confidence: f64,
    pub table: ContingencyTable,
    pub warnings: Vec<String>,
}

fn as_f64(table: &ContingencyTable) -> Result<[f64; 4]> {
    let (a, b, c, d) = table.cells()?;
    Ok([a as f64, b as f64, c as f64, d as f64])
}

/// Yule's `Q = (n11 n22 - n12 n21) / (n11 n22 + n12 n21)`.
pub fn yule_q(table: &ContingencyTable) -> Result<f64> {
    let [a, b, c, d] = as_f64(table)?;
    let (ad, bc) = (a * d, b * c);
    if ad + bc == 0.0 {
        return Err(Error::Undefined(
            "Yule's Q: both cross products are zero".into(),
        ));
    }
    Ok((ad - bc) / (ad + bc))
}

/// `V = (n11 n22 - n12 n21) / sqrt(product of the four margins)`.
pub fn coefficient_v(table: &ContingencyTable) -> Result<f64> {
    let [a, b, c, d] = as_f64(table)?;
    let denom = (a + b) * (c + d) * (a + c) * (b + d);
    if denom == 0.0 {
        return Err(Error::Undefined("V: the table has a zero margin".into()));
    }
    Ok((a * d - b * c) / denom.sqrt())
}

/// Large-sample standard errors with clamped normal confidence intervals.
#[derive(Clone, Debug, PartialEq)]
pub struct StandardErrors {
    pub se_q: f64,
    pub se_v: f64,
    pub ci_q: (f64, f64),
    pub ci_v: (f64, f64),
    /// Set when a zero cell makes Yule's SE degenerate.
    pub zero_cell: bool,
}

/// `se_q = (1 - Q²)/2 · sqrt(Σ 1/n_ij)` and `se_v = sqrt((1 - V²)/N)`.
///
/// A zero cell forces `|Q| = 1`; the SE is then reported as 0 (the
/// `(1 - Q²)` factor) and `zero_cell` is set, since the reciprocal sum
/// does not exist.
pub fn standard_errors(table: &ContingencyTable, confidence: f64) -> Result<StandardErrors> {
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(Error::domain(format!(
            "confidence level must lie in (0, 1), got {confidence}"
        )));
    }
    let cells = as_f64(table)?;
    let q = yule_q(table)?;
    let v = coefficient_v(table)?;
    let n: f64 = cells.iter().sum();
    let zero_cell = cells.contains(&0.0);
    let se_q = if zero_cell {
        0.0
    } else {
        (1.0 - q * q) / 2.0 * cells.iter().map(|x| 1.0 / x).sum::<f64>().sqrt()
    };
    let se_v = ((1.0 - v * v).max(0.0) / n).sqrt();
    let z = Normal::standard().inverse_cdf(0.5 + confidence / 2.0);
    let ci = |est: f64, se: f64| ((est - z * se).max(-1.0), (est + z * se).min(1.0));
    Ok(StandardErrors {
        se_q,
        se_v,
        ci_q: ci(q, se_q),
        ci_v: ci(v, se_v),
        zero_cell,
    })
}

pub fn associate(table: &ContingencyTable, confidence: f64) -> Result<AssociationReport> {
    let se = standard_errors(table, confidence)?;
    let mut warnings = Vec::new();
    if se.zero_cell {
        warnings.push("zero cell: Yule's standard error is degenerate and reported as 0".into());
    }
    Ok(AssociationReport {
        q: yule_q(table)?,
        v: coefficient_v(table)?,
        se_q: se.se_q,
        se_v: se.se_v,
        ci_q: se.ci_q,
        ci_v: se.ci_v,
        confidence,
        table: table.clone(),
        warnings,
    })
}
