//! Shannon entropy and Kullback-Leibler divergence of finite distributions,
//! in bits.

use crate::error::{Error, Result};

const SUM_TOLERANCE: f64 = 1e-9;

fn check_distribution(p: &[f64], name: &str) -> Result<()> {
    if p.is_empty() {
        return Err(Error::domain(format!("{name} is empty")));
    }
    if p.iter().any(|&x| x < 0.0 || !x.is_finite()) {
        return Err(Error::domain(format!(
            "{name} has a negative or non-finite entry"
        )));
    }
    let sum: f64 = p.iter().sum();
    if (sum - 1.0).abs() > SUM_TOLERANCE {
        return Err(Error::domain(format!("{name} sums to {sum}, not 1")));
    }
    Ok(())
}

pub fn entropy(p: &[f64]) -> Result<f64> {
    check_distribution(p, "distribution")?;
    Ok(entropy_unchecked(p))
}

pub(crate) fn entropy_unchecked(p: &[f64]) -> f64 {
    -p.iter()
        .filter(|&&x| x > 0.0)
        .map(|&x| x * x.log2())
        .sum::<f64>()
}

/// `h(p) = -p log2 p - (1-p) log2 (1-p)`.
pub fn binary_entropy(p: f64) -> f64 {
    entropy_unchecked(&[p, 1.0 - p])
}

/// `D(p‖q) = Σ p(b) log2(p(b)/q(b))`.
///
/// Returns `f64::INFINITY` when `q` vanishes somewhere `p` does not.
pub fn kl_divergence(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::domain(format!(
            "distributions have different supports ({} vs {})",
            p.len(),
            q.len()
        )));
    }
    check_distribution(p, "p")?;
    check_distribution(q, "q")?;
    let mut d = 0.0;
    for (&pb, &qb) in p.iter().zip(q) {
        if pb == 0.0 {
            continue;
        }
        if qb == 0.0 {
            return Ok(f64::INFINITY);
        }
        d += pb * (pb / qb).log2();
    }
    Ok(d.max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_values() {
        assert_eq!(binary_entropy(0.5), 1.0);
        assert!((binary_entropy(0.2) - 0.721928).abs() < 1e-6);
        assert!((binary_entropy(0.1) - 0.468996).abs() < 1e-6);
        let d = kl_divergence(&[0.5, 0.5], &[0.25, 0.75]).unwrap();
        assert!((d - (0.5 + 0.5 * (2.0f64 / 3.0).log2())).abs() < 1e-12);
        assert!((d - 0.207519).abs() < 1e-6);
    }

    #[test]
    fn kl_edge_cases() {
        assert_eq!(kl_divergence(&[0.3, 0.7], &[0.3, 0.7]).unwrap(), 0.0);
        assert_eq!(
            kl_divergence(&[0.5, 0.5], &[1.0, 0.0]).unwrap(),
            f64::INFINITY
        );
        assert_eq!(kl_divergence(&[1.0, 0.0], &[0.5, 0.5]).unwrap(), 1.0);
        assert!(kl_divergence(&[0.5, 0.5], &[1.0]).is_err());
        assert!(kl_divergence(&[0.5, 0.6], &[0.5, 0.5]).is_err());
        assert!(entropy(&[-0.1, 1.1]).is_err());
    }
}
