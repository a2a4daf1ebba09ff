use statrs::function::factorial::ln_factorial;

use super::table::ContingencyTable;
use crate::error::Result;

/// Relative slack when comparing table probabilities against the observed one.
const TIE_TOLERANCE: f64 = 1e-7;

/// Two-sided Fisher exact p-value: the total hypergeometric probability of
/// the margin-preserving tables that are no more likely than the observed one.
pub fn fisher_exact_2x2(table: &ContingencyTable) -> Result<f64> {
    let (a, b, c, d) = table.cells()?;
    let row1 = a + b;
    let col1 = a + c;
    let n = a + b + c + d;
    if n == 0 {
        return Ok(1.0);
    }
    let lo = (row1 + col1).saturating_sub(n);
    let hi = row1.min(col1);
    let log_const =
        ln_factorial(row1) + ln_factorial(n - row1) + ln_factorial(col1) + ln_factorial(n - col1)
            - ln_factorial(n);
    let log_p = |x: u64| {
        log_const
            - ln_factorial(x)
            - ln_factorial(row1 - x)
            - ln_factorial(col1 - x)
            - ln_factorial(n + x - row1 - col1)
    };
    let observed = log_p(a);
    let threshold = observed + TIE_TOLERANCE.ln_1p();
    let p: f64 = (lo..=hi)
        .map(log_p)
        .filter(|&lp| lp <= threshold)
        .map(f64::exp)
        .sum();
    Ok(p.min(1.0))
}
