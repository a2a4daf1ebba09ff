use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use super::exact::fisher_exact_2x2;
use crate::error::{Error, Result};

/// Minimum expected cell count for the chi-square approximation.
pub const MIN_EXPECTED_COUNT: f64 = 5.0;

/// r×c table of nonnegative counts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContingencyTable {
    pub counts: Vec<Vec<u64>>,
    pub row_labels: Vec<String>,
    pub col_labels: Vec<String>,
}

impl ContingencyTable {
    pub fn new(counts: Vec<Vec<u64>>) -> Result<Self> {
        let rows = counts.len();
        let cols = counts.first().map_or(0, Vec::len);
        if rows == 0 || cols == 0 || counts.iter().any(|r| r.len() != cols) {
            return Err(Error::domain(
                "contingency table must be a nonempty rectangle",
            ));
        }
        Ok(ContingencyTable {
            counts,
            row_labels: (1..=rows).map(|i| format!("row{i}")).collect(),
            col_labels: (1..=cols).map(|j| format!("col{j}")).collect(),
        })
    }

    /// `[[n11, n12], [n21, n22]]`.
    pub fn two_by_two(n11: u64, n12: u64, n21: u64, n22: u64) -> Self {
        ContingencyTable::new(vec![vec![n11, n12], vec![n21, n22]]).expect("2x2 is rectangular")
    }

    pub fn with_labels(mut self, rows: Vec<String>, cols: Vec<String>) -> Result<Self> {
        if rows.len() != self.rows() || cols.len() != self.cols() {
            return Err(Error::domain("label count does not match table shape"));
        }
        self.row_labels = rows;
        self.col_labels = cols;
        Ok(self)
    }

    pub fn rows(&self) -> usize {
        self.counts.len()
    }

    pub fn cols(&self) -> usize {
        self.counts[0].len()
    }

    pub fn is_2x2(&self) -> bool {
        self.rows() == 2 && self.cols() == 2
    }

    /// Cells of a 2×2 table as `(n11, n12, n21, n22)`.
    pub fn cells(&self) -> Result<(u64, u64, u64, u64)> {
        if !self.is_2x2() {
            return Err(Error::domain(format!(
                "expected a 2x2 table, got {}x{}",
                self.rows(),
                self.cols()
            )));
        }
        let c = &self.counts;
        Ok((c[0][0], c[0][1], c[1][0], c[1][1]))
    }

    pub fn row_sums(&self) -> Vec<u64> {
        self.counts.iter().map(|r| r.iter().sum()).collect()
    }

    pub fn col_sums(&self) -> Vec<u64> {
        (0..self.cols())
            .map(|j| self.counts.iter().map(|r| r[j]).sum())
            .collect()
    }

    pub fn total(&self) -> u64 {
        self.row_sums().iter().sum()
    }

    pub fn transpose(&self) -> Self {
        let counts = (0..self.cols())
            .map(|j| self.counts.iter().map(|r| r[j]).collect())
            .collect();
        ContingencyTable {
            counts,
            row_labels: self.col_labels.clone(),
            col_labels: self.row_labels.clone(),
        }
    }

    pub fn swap_columns(&self) -> Self {
        let mut t = self.clone();
        for row in &mut t.counts {
            row.reverse();
        }
        t.col_labels.reverse();
        t
    }

    fn has_zero_margin(&self) -> bool {
        self.row_sums().contains(&0) || self.col_sums().contains(&0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Decision {
    RejectH0,
    RetainH0,
}

impl Decision {
    pub fn from_p_value(p_value: f64, alpha: f64) -> Self {
        if p_value < alpha {
            Decision::RejectH0
        } else {
            Decision::RetainH0
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum TestMethod {
    ChiSquareYates,
    /// 2×2 Pearson chi-square without continuity correction.
    ChiSquare,
    FisherExact,
    ChiSquareSxs,
}

/// Outcome of one homogeneity test. For Fisher's test the statistic is
/// `n11`, the count the exact distribution is conditioned on.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub table: ContingencyTable,
    pub statistic: f64,
    pub degrees_of_freedom: Option<u64>,
    pub p_value: f64,
    pub alpha: f64,
    pub decision: Decision,
    pub method: TestMethod,
    pub requirement_warnings: Vec<String>,
    pub gammas: Vec<f64>,
    pub deltas: Vec<f64>,
}

impl TestReport {
    fn new(
        table: ContingencyTable,
        statistic: f64,
        degrees_of_freedom: Option<u64>,
        p_value: f64,
        alpha: f64,
        method: TestMethod,
        requirement_warnings: Vec<String>,
    ) -> Self {
        TestReport {
            table,
            statistic,
            degrees_of_freedom,
            p_value,
            alpha,
            decision: Decision::from_p_value(p_value, alpha),
            method,
            requirement_warnings,
            gammas: Vec::new(),
            deltas: Vec::new(),
        }
    }
}

pub fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::domain(format!(
            "alpha must lie in (0, 1), got {alpha}"
        )))
    }
}

/// Tabulates score signs: `n11 = #{γ ≥ 0}`, `n12 = #{γ < 0}`,
/// `n21 = #{δ < 0}`, `n22 = #{δ ≥ 0}`.
pub fn build_2x2(gammas: &[f64], deltas: &[f64]) -> Result<ContingencyTable> {
    if gammas.is_empty() || deltas.is_empty() {
        return Err(Error::domain("both score lists must be nonempty"));
    }
    let n11 = gammas.iter().filter(|&&g| g >= 0.0).count() as u64;
    let n22 = deltas.iter().filter(|&&d| d >= 0.0).count() as u64;
    Ok(ContingencyTable::two_by_two(
        n11,
        gammas.len() as u64 - n11,
        deltas.len() as u64 - n22,
        n22,
    ))
}

/// Conditions under which the chi-square approximation is doubtful.
/// An empty list means the approximation is admissible.
pub fn check_requirements(table: &ContingencyTable) -> Vec<String> {
    let mut warnings = Vec::new();
    let rows = table.row_sums();
    let cols = table.col_sums();
    let total = table.total();
    for (i, &r) in rows.iter().enumerate() {
        if r == 0 {
            warnings.push(format!("row {} has a zero margin", i + 1));
        }
    }
    for (j, &c) in cols.iter().enumerate() {
        if c == 0 {
            warnings.push(format!("column {} has a zero margin", j + 1));
        }
    }
    if total > 0 {
        let min_expected = rows
            .iter()
            .flat_map(|&r| cols.iter().map(move |&c| (r * c) as f64 / total as f64))
            .fold(f64::INFINITY, f64::min);
        if min_expected < MIN_EXPECTED_COUNT {
            warnings.push(format!(
                "minimum expected cell count {min_expected:.3} is below {MIN_EXPECTED_COUNT}"
            ));
        }
    } else {
        warnings.push("table is empty".into());
    }
    warnings
}

fn degenerate(table: &ContingencyTable, alpha: f64, method: TestMethod, df: u64) -> TestReport {
    let mut warnings = check_requirements(table);
    warnings.push("degenerate table: statistic undefined, H0 retained".into());
    TestReport::new(table.clone(), 0.0, Some(df), 1.0, alpha, method, warnings)
}

fn chi_square_sf(statistic: f64, df: u64) -> f64 {
    let dist = ChiSquared::new(df as f64).expect("positive degrees of freedom");
    dist.sf(statistic).clamp(0.0, 1.0)
}

/// Pearson's chi-square for a 2×2 table, with Yates' continuity
/// correction when `yates` is set.
pub fn chi_square_2x2(table: &ContingencyTable, alpha: f64, yates: bool) -> Result<TestReport> {
    check_alpha(alpha)?;
    let (a, b, c, d) = table.cells()?;
    let method = if yates {
        TestMethod::ChiSquareYates
    } else {
        TestMethod::ChiSquare
    };
    if table.total() == 0 {
        return Err(Error::domain("table has no observations"));
    }
    if table.has_zero_margin() {
        return Ok(degenerate(table, alpha, method, 1));
    }
    let n = (a + b + c + d) as f64;
    let cross = (a as f64 * d as f64 - b as f64 * c as f64).abs();
    let cross = if yates {
        (cross - n / 2.0).max(0.0)
    } else {
        cross
    };
    let denom = (a + b) as f64 * (c + d) as f64 * (a + c) as f64 * (b + d) as f64;
    let statistic = n * cross * cross / denom;
    let p_value = chi_square_sf(statistic, 1);
    Ok(TestReport::new(
        table.clone(),
        statistic,
        Some(1),
        p_value,
        alpha,
        method,
        check_requirements(table),
    ))
}

/// Fisher's exact test as a report; the statistic is `n11`.
pub fn fisher_report(table: &ContingencyTable, alpha: f64) -> Result<TestReport> {
    check_alpha(alpha)?;
    let (a, ..) = table.cells()?;
    let p_value = fisher_exact_2x2(table)?;
    Ok(TestReport::new(
        table.clone(),
        a as f64,
        None,
        p_value,
        alpha,
        TestMethod::FisherExact,
        check_requirements(table),
    ))
}

/// Chi-square when the table meets the expected-count rule, Fisher's exact
/// test otherwise.
pub fn psi_test(table: &ContingencyTable, alpha: f64) -> Result<TestReport> {
    if check_requirements(table).is_empty() {
        chi_square_2x2(table, alpha, true)
    } else {
        fisher_report(table, alpha)
    }
}

/// Pearson's chi-square homogeneity statistic for an r×c table with
/// `(r-1)(c-1)` degrees of freedom.
pub fn chi_square_sxs(table: &ContingencyTable, alpha: f64) -> Result<TestReport> {
    check_alpha(alpha)?;
    let (r, c) = (table.rows(), table.cols());
    if r < 2 || c < 2 {
        return Err(Error::domain("chi-square needs at least a 2x2 table"));
    }
    let df = ((r - 1) * (c - 1)) as u64;
    if table.total() == 0 {
        return Err(Error::domain("table has no observations"));
    }
    if table.has_zero_margin() {
        return Ok(degenerate(table, alpha, TestMethod::ChiSquareSxs, df));
    }
    let rows = table.row_sums();
    let cols = table.col_sums();
    let n = table.total() as f64;
    let mut statistic = 0.0;
    for (i, row) in table.counts.iter().enumerate() {
        for (j, &obs) in row.iter().enumerate() {
            let expected = rows[i] as f64 * cols[j] as f64 / n;
            let diff = obs as f64 - expected;
            statistic += diff * diff / expected;
        }
    }
    Ok(TestReport::new(
        table.clone(),
        statistic,
        Some(df),
        chi_square_sf(statistic, df),
        alpha,
        TestMethod::ChiSquareSxs,
        check_requirements(table),
    ))
}
