//! Seeded Monte Carlo harnesses.
//!
//! Every trial derives its own seed from the master seed, so trials run in
//! parallel and results are assembled in trial order: output is
//! bit-for-bit reproducible from `(config, seed)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use super::{generate, MarkovModel};
use crate::alphabet::Sequence;
use crate::classify::TrainingBank;
use crate::codecs::{Codec, CompressorSpec};
use crate::error::{Error, Result};
use crate::homogeneity::{check_alpha, homogeneity_test, Decision, SampleGroup, SplitPolicy};

/// Confidence level of every interval reported here.
pub const CI_LEVEL: f64 = 0.99;

fn z_value(level: f64) -> f64 {
    Normal::standard().inverse_cdf(0.5 + level / 2.0)
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for stream `path` below `master`, e.g. `trial_seed(master, &[grid, trial])`.
pub fn trial_seed(master: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(splitmix(master), |acc, &p| splitmix(acc ^ splitmix(p)))
}

/// Wilson score interval for `successes` out of `n` at `level`.
pub fn wilson_interval(successes: usize, n: usize, level: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let z = z_value(level);
    let n = n as f64;
    let p = successes as f64 / n;
    let denom = 1.0 + z * z / n;
    let centre = (p + z * z / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z * z / (4.0 * n * n)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

/// Growth of the mean Δ statistic with the length of the scored word.
#[derive(Clone, Debug, PartialEq)]
pub struct DeltaGrowthConfig {
    pub source_x: MarkovModel,
    pub source_y: MarkovModel,
    pub spec: CompressorSpec,
    pub context_length: usize,
    pub lengths: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeltaGrowthReport {
    pub lengths: Vec<usize>,
    pub mean_delta: Vec<f64>,
    pub se_delta: Vec<f64>,
    pub slope: f64,
    pub slope_ci: (f64, f64),
    pub intercept: f64,
    pub intercept_ci: (f64, f64),
    pub ci_level: f64,
    pub trials: usize,
    pub seed: u64,
}

/// For each `m` in the grid, averages `Δ = |φ(w/y_ctx)| - |φ(w/x_ctx)|`
/// over fresh draws of `w ~ μx` (length `m`), `x_ctx ~ μx`, `y_ctx ~ μy`,
/// then fits `mean Δ ≈ intercept + slope · m` by least squares over the
/// per-`m` means. Interval widths propagate the per-`m` sampling variances
/// through the least-squares weights.
pub fn delta_growth_experiment(config: &DeltaGrowthConfig) -> Result<DeltaGrowthReport> {
    let (mx, my) = (&config.source_x, &config.source_y);
    if mx.alphabet() != my.alphabet() {
        return Err(Error::domain("sources must share an alphabet"));
    }
    if config.trials < 2 {
        return Err(Error::domain("need at least 2 trials"));
    }
    if config.lengths.len() < 2 || config.lengths.contains(&0) {
        return Err(Error::domain("need at least 2 positive lengths"));
    }
    if config.context_length == 0 {
        return Err(Error::domain("context length must be positive"));
    }
    let codec = Codec::new(&config.spec, mx.alphabet().clone())?;
    let mut means = Vec::with_capacity(config.lengths.len());
    let mut ses = Vec::with_capacity(config.lengths.len());
    for (gi, &m) in config.lengths.iter().enumerate() {
        let deltas = (0..config.trials)
            .into_par_iter()
            .map(|t| {
                let seed = trial_seed(config.seed, &[gi as u64, t as u64]);
                let x_ctx = generate(mx, config.context_length, trial_seed(seed, &[0]))?;
                let y_ctx = generate(my, config.context_length, trial_seed(seed, &[1]))?;
                let w = generate(mx, m, trial_seed(seed, &[2]))?;
                let given_y = codec.prime(&y_ctx)?.conditional_length(&w)?.bits();
                let given_x = codec.prime(&x_ctx)?.conditional_length(&w)?.bits();
                Ok(given_y - given_x)
            })
            .collect::<Result<Vec<f64>>>()?;
        let n = deltas.len() as f64;
        let mean = deltas.iter().sum::<f64>() / n;
        let var = deltas.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1.0);
        means.push(mean);
        ses.push((var / n).sqrt());
    }
    let xs: Vec<f64> = config.lengths.iter().map(|&m| m as f64).collect();
    let fit = LinearFit::new(&xs, &means, &ses)?;
    let z = z_value(CI_LEVEL);
    Ok(DeltaGrowthReport {
        lengths: config.lengths.clone(),
        mean_delta: means,
        se_delta: ses,
        slope: fit.slope,
        slope_ci: (fit.slope - z * fit.slope_se, fit.slope + z * fit.slope_se),
        intercept: fit.intercept,
        intercept_ci: (
            fit.intercept - z * fit.intercept_se,
            fit.intercept + z * fit.intercept_se,
        ),
        ci_level: CI_LEVEL,
        trials: config.trials,
        seed: config.seed,
    })
}

/// Ordinary least squares of `ys` on `xs`, with standard errors derived
/// from known per-point standard errors.
struct LinearFit {
    slope: f64,
    intercept: f64,
    slope_se: f64,
    intercept_se: f64,
}

impl LinearFit {
    fn new(xs: &[f64], ys: &[f64], point_se: &[f64]) -> Result<Self> {
        let n = xs.len() as f64;
        let mx = xs.iter().sum::<f64>() / n;
        let my = ys.iter().sum::<f64>() / n;
        let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
        if sxx == 0.0 {
            return Err(Error::domain("lengths must not all be equal"));
        }
        let slope_w: Vec<f64> = xs.iter().map(|x| (x - mx) / sxx).collect();
        let slope: f64 = slope_w.iter().zip(ys).map(|(c, y)| c * y).sum();
        let intercept = my - slope * mx;
        let slope_var: f64 = slope_w
            .iter()
            .zip(point_se)
            .map(|(c, s)| (c * s).powi(2))
            .sum();
        let intercept_var: f64 = slope_w
            .iter()
            .zip(point_se)
            .map(|(c, s)| ((1.0 / n - mx * c) * s).powi(2))
            .sum();
        Ok(LinearFit {
            slope,
            intercept,
            slope_se: slope_var.sqrt(),
            intercept_se: intercept_var.sqrt(),
        })
    }
}

/// What an error-rate experiment simulates.
#[derive(Clone, Debug, PartialEq)]
pub enum Experiment {
    /// Two groups of `sequences_per_group` sequences, each of
    /// `sequence_length` symbols, tested at level `alpha`.
    Homogeneity {
        source_x: MarkovModel,
        source_y: MarkovModel,
        sequences_per_group: usize,
        sequence_length: usize,
        alpha: f64,
        split: SplitPolicy,
    },
    /// One reference of `reference_length` per source; the query of
    /// `query_length` comes from source `trial % k`.
    Classification {
        sources: Vec<MarkovModel>,
        reference_length: usize,
        query_length: usize,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct ErrorRateConfig {
    pub experiment: Experiment,
    pub spec: CompressorSpec,
    pub trials: usize,
    pub seed: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RateKind {
    /// Rejection rate when both groups come from the same source.
    TypeI,
    /// Retention rate when the sources differ.
    #[serde(rename = "type_ii")]
    TypeII,
    /// Fraction of correctly classified queries.
    Accuracy,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorRateReport {
    pub kind: RateKind,
    pub rate: f64,
    /// Rejection rate of H0 (homogeneity experiments only).
    pub rejection_rate: Option<f64>,
    pub successes: usize,
    pub trials: usize,
    pub ci: (f64, f64),
    pub ci_half_width: f64,
    pub ci_level: f64,
    pub trial_seeds: Vec<u64>,
}

fn rate_report(kind: RateKind, hits: usize, trials: usize, seeds: Vec<u64>) -> ErrorRateReport {
    let ci = wilson_interval(hits, trials, CI_LEVEL);
    ErrorRateReport {
        kind,
        rate: hits as f64 / trials as f64,
        rejection_rate: None,
        successes: hits,
        trials,
        ci,
        ci_half_width: (ci.1 - ci.0) / 2.0,
        ci_level: CI_LEVEL,
        trial_seeds: seeds,
    }
}

/// Runs `trials` independent homogeneity tests or classifications on fresh
/// seeded data and reports the empirical error rate (or accuracy).
pub fn error_rate_experiment(config: &ErrorRateConfig) -> Result<ErrorRateReport> {
    if config.trials == 0 {
        return Err(Error::domain("need at least 1 trial"));
    }
    let seeds: Vec<u64> = (0..config.trials)
        .map(|t| trial_seed(config.seed, &[t as u64]))
        .collect();
    match &config.experiment {
        Experiment::Homogeneity {
            source_x,
            source_y,
            sequences_per_group,
            sequence_length,
            alpha,
            split,
        } => {
            check_alpha(*alpha)?;
            if source_x.alphabet() != source_y.alphabet() {
                return Err(Error::domain("sources must share an alphabet"));
            }
            if *sequences_per_group < 2 || *sequence_length == 0 {
                return Err(Error::domain(
                    "need at least 2 sequences per group and a positive length",
                ));
            }
            let draw = |model: &MarkovModel, label: &str, seed: u64, stream: u64| {
                let seqs = (0..*sequences_per_group)
                    .map(|j| {
                        generate(
                            model,
                            *sequence_length,
                            trial_seed(seed, &[stream, j as u64]),
                        )
                    })
                    .collect::<Result<Vec<_>>>()?;
                SampleGroup::new(label, seqs)
            };
            let rejections = seeds
                .par_iter()
                .map(|&seed| {
                    let x = draw(source_x, "x", seed, 0)?;
                    let y = draw(source_y, "y", seed, 1)?;
                    let report = homogeneity_test(&x, &y, &config.spec, *alpha, *split)?;
                    Ok(report.decision == Decision::RejectH0)
                })
                .collect::<Result<Vec<bool>>>()?;
            let rejected = rejections.iter().filter(|&&r| r).count();
            let same = source_x == source_y;
            let (kind, hits) = if same {
                (RateKind::TypeI, rejected)
            } else {
                (RateKind::TypeII, config.trials - rejected)
            };
            let mut report = rate_report(kind, hits, config.trials, seeds);
            report.rejection_rate = Some(rejected as f64 / config.trials as f64);
            Ok(report)
        }
        Experiment::Classification {
            sources,
            reference_length,
            query_length,
        } => {
            if sources.is_empty() {
                return Err(Error::domain("classification needs at least one source"));
            }
            if sources
                .iter()
                .any(|s| s.alphabet() != sources[0].alphabet())
            {
                return Err(Error::domain("sources must share an alphabet"));
            }
            let outcomes = seeds
                .par_iter()
                .enumerate()
                .map(|(t, &seed)| {
                    let classes = sources
                        .iter()
                        .enumerate()
                        .map(|(i, s)| {
                            let r =
                                generate(s, *reference_length, trial_seed(seed, &[0, i as u64]))?;
                            Ok((format!("source{i}"), r))
                        })
                        .collect::<Result<Vec<(String, Sequence)>>>()?;
                    let bank = TrainingBank::new(classes, config.spec.clone())?;
                    let truth = t % sources.len();
                    let u = generate(&sources[truth], *query_length, trial_seed(seed, &[1]))?;
                    Ok(bank.prepare()?.classify(&u)?.winner_index == truth)
                })
                .collect::<Result<Vec<bool>>>()?;
            let correct = outcomes.iter().filter(|&&c| c).count();
            Ok(rate_report(
                RateKind::Accuracy,
                correct,
                config.trials,
                seeds,
            ))
        }
    }
}
