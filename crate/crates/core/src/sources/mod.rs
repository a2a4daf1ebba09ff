//! Finite-memory Markov sources and their entropies.

mod experiment;
mod info;

use std::sync::Arc;

use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::alphabet::{Alphabet, Sequence, Symbol};
use crate::error::{Error, Result};

pub use experiment::{
    delta_growth_experiment, error_rate_experiment, trial_seed, wilson_interval, DeltaGrowthConfig,
    DeltaGrowthReport, ErrorRateConfig, ErrorRateReport, Experiment, RateKind, CI_LEVEL,
};
pub use info::{binary_entropy, entropy, kl_divergence};

/// Largest number of contexts enumerated by entropy and stationary-law
/// computations.
pub const CONTEXT_LIMIT: usize = 1 << 20;

const ROW_TOLERANCE: f64 = 1e-12;
/// L1 change between power-iteration steps at which the stationary law is
/// accepted; a few ulps above the rounding floor of a probability vector.
const STATIONARY_TOLERANCE: f64 = 1e-14;

/// A stationary source whose next-symbol law depends on the last `order`
/// symbols.
///
/// Contexts are indexed as base-`|A|` numbers with the most recent symbol
/// least significant; `transitions[ctx][a]` is `P(a | ctx)`.
#[derive(Clone, Debug, PartialEq)]
pub struct MarkovModel {
    alphabet: Arc<Alphabet>,
    order: usize,
    transitions: Vec<Vec<f64>>,
    initial: Vec<f64>,
    cumulative: Vec<Vec<f64>>,
}

fn context_count(k: usize, order: usize) -> Result<usize> {
    u32::try_from(order)
        .ok()
        .and_then(|m| k.checked_pow(m))
        .filter(|&n| n <= CONTEXT_LIMIT)
        .ok_or_else(|| {
            Error::Resource(format!(
                "{k}^{order} contexts exceeds the limit of {CONTEXT_LIMIT}"
            ))
        })
}

fn check_row(row: &[f64], k: usize, what: &str) -> Result<()> {
    if row.len() != k {
        return Err(Error::domain(format!(
            "{what} has {} entries, expected {k}",
            row.len()
        )));
    }
    if row.iter().any(|&p| p < 0.0 || !p.is_finite()) {
        return Err(Error::domain(format!(
            "{what} has a negative or non-finite probability"
        )));
    }
    let sum: f64 = row.iter().sum();
    if (sum - 1.0).abs() > ROW_TOLERANCE {
        return Err(Error::domain(format!("{what} sums to {sum}, not 1")));
    }
    Ok(())
}

impl MarkovModel {
    /// With `initial: None` the chain starts from its stationary law, which
    /// must then be unique.
    pub fn new(
        alphabet: Arc<Alphabet>,
        order: usize,
        transitions: Vec<Vec<f64>>,
        initial: Option<Vec<f64>>,
    ) -> Result<Self> {
        let k = alphabet.size();
        let contexts = context_count(k, order)?;
        if transitions.len() != contexts {
            return Err(Error::domain(format!(
                "order-{order} model over {k} symbols needs {contexts} transition rows, got {}",
                transitions.len()
            )));
        }
        for (i, row) in transitions.iter().enumerate() {
            check_row(row, k, &format!("transition row {i}"))?;
        }
        let cumulative = transitions.iter().map(|r| cumulate(r)).collect();
        let mut model = MarkovModel {
            alphabet,
            order,
            transitions,
            initial: Vec::new(),
            cumulative,
        };
        model.initial = match initial {
            Some(init) => {
                check_row(&init, contexts, "initial distribution")
                    .map_err(|e| Error::domain(e.to_string()))?;
                init
            }
            None => model.stationary()?,
        };
        Ok(model)
    }

    /// I.i.d. source with the given symbol distribution.
    pub fn iid(alphabet: Arc<Alphabet>, dist: Vec<f64>) -> Result<Self> {
        MarkovModel::new(alphabet, 0, vec![dist], None)
    }

    /// Binary i.i.d. source emitting `1` with probability `p`.
    pub fn bernoulli(p: f64) -> Result<Self> {
        MarkovModel::iid(Arc::new(Alphabet::binary()), vec![1.0 - p, p])
    }

    /// Binary order-1 chain: `P(1|0) = p01`, `P(0|1) = p10`.
    pub fn binary_chain(p01: f64, p10: f64) -> Result<Self> {
        MarkovModel::new(
            Arc::new(Alphabet::binary()),
            1,
            vec![vec![1.0 - p01, p01], vec![p10, 1.0 - p10]],
            None,
        )
    }

    pub fn alphabet(&self) -> &Arc<Alphabet> {
        &self.alphabet
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn transitions(&self) -> &[Vec<f64>] {
        &self.transitions
    }

    pub fn initial(&self) -> &[f64] {
        &self.initial
    }

    fn next_context(&self, ctx: usize, sym: usize) -> usize {
        if self.order == 0 {
            0
        } else {
            (ctx * self.alphabet.size() + sym) % self.transitions.len()
        }
    }

    /// Stationary law over contexts, by power iteration on the lazy chain
    /// `(P + I)/2`, which shares its stationary law and is aperiodic.
    pub fn stationary(&self) -> Result<Vec<f64>> {
        let n = self.transitions.len();
        if n == 1 {
            return Ok(vec![1.0]);
        }
        self.check_unique_stationary()?;
        let k = self.alphabet.size();
        let mut pi = vec![1.0 / n as f64; n];
        let mut next = vec![0.0; n];
        for _ in 0..10_000_000 {
            next.iter_mut().zip(&pi).for_each(|(x, &p)| *x = 0.5 * p);
            for (ctx, row) in self.transitions.iter().enumerate() {
                let mass = 0.5 * pi[ctx];
                if mass == 0.0 {
                    continue;
                }
                for (a, &p) in row.iter().enumerate().take(k) {
                    if p > 0.0 {
                        next[self.next_context(ctx, a)] += mass * p;
                    }
                }
            }
            let change: f64 = next.iter().zip(&pi).map(|(a, b)| (a - b).abs()).sum();
            std::mem::swap(&mut pi, &mut next);
            if change < STATIONARY_TOLERANCE {
                let total: f64 = pi.iter().sum();
                pi.iter_mut().for_each(|p| *p /= total);
                return Ok(pi);
            }
        }
        Err(Error::Resource("stationary law did not converge".into()))
    }

    /// The stationary law is unique iff the context graph has exactly one
    /// closed communicating class.
    fn check_unique_stationary(&self) -> Result<()> {
        let n = self.transitions.len();
        let mut graph = DiGraph::<(), ()>::with_capacity(n, n * self.alphabet.size());
        let nodes: Vec<_> = (0..n).map(|_| graph.add_node(())).collect();
        for (ctx, row) in self.transitions.iter().enumerate() {
            for (a, &p) in row.iter().enumerate() {
                if p > 0.0 {
                    graph.add_edge(nodes[ctx], nodes[self.next_context(ctx, a)], ());
                }
            }
        }
        let sccs = tarjan_scc(&graph);
        let mut component = vec![0usize; n];
        for (c, members) in sccs.iter().enumerate() {
            for node in members {
                component[node.index()] = c;
            }
        }
        let closed = (0..sccs.len())
            .filter(|&c| {
                sccs[c].iter().all(|node| {
                    graph
                        .neighbors(*node)
                        .all(|next| component[next.index()] == c)
                })
            })
            .count();
        if closed == 1 {
            Ok(())
        } else {
            Err(Error::domain(format!(
                "chain is not irreducible ({closed} closed classes): stationary law is not unique"
            )))
        }
    }
}

fn cumulate(row: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    row.iter()
        .map(|&p| {
            acc += p;
            acc
        })
        .collect()
}

fn sample(cumulative: &[f64], rng: &mut impl Rng) -> usize {
    let u: f64 = rng.random::<f64>() * cumulative[cumulative.len() - 1];
    let i = cumulative.partition_point(|&c| c <= u);
    // skip zero-probability symbols at the top end if rounding landed there
    i.min(cumulative.len() - 1)
}

/// Draws a sequence of `length` symbols. The initial context comes from
/// the model's initial law; only the symbols after it are returned.
pub fn generate(model: &MarkovModel, length: usize, seed: u64) -> Result<Sequence> {
    if length == 0 {
        return Err(Error::domain("sequence length must be at least 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ctx = if model.order == 0 {
        0
    } else {
        sample(&cumulate(&model.initial), &mut rng)
    };
    let mut data = Vec::with_capacity(length);
    for _ in 0..length {
        let a = sample(&model.cumulative[ctx], &mut rng);
        data.push(a as Symbol);
        ctx = model.next_context(ctx, a);
    }
    Sequence::new(model.alphabet.clone(), data)
}

/// Order-`m` conditional entropy `h_m` under the stationary law, in bits.
pub fn entropy_m(model: &MarkovModel, m: usize) -> Result<f64> {
    let k = model.alphabet.size();
    let m = m.min(model.order);
    let suffixes = context_count(k, m)?;
    let pi = model.stationary()?;
    // joint law of (last m symbols, next symbol)
    let mut joint = vec![0.0; suffixes * k];
    for (ctx, row) in model.transitions.iter().enumerate() {
        let v = ctx % suffixes;
        for (a, &p) in row.iter().enumerate() {
            joint[v * k + a] += pi[ctx] * p;
        }
    }
    let mut h = 0.0;
    for v in 0..suffixes {
        let cell = &joint[v * k..(v + 1) * k];
        let tv: f64 = cell.iter().sum();
        if tv > 0.0 {
            h -= cell
                .iter()
                .filter(|&&j| j > 0.0)
                .map(|&j| j * (j / tv).log2())
                .sum::<f64>();
        }
    }
    Ok(h.max(0.0))
}

/// `h_∞`, which equals `h_M` for a source with memory `M`.
pub fn limit_entropy(model: &MarkovModel) -> Result<f64> {
    entropy_m(model, model.order)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_source_is_constant() {
        let m = MarkovModel::bernoulli(1.0).unwrap();
        let s = generate(&m, 50, 3).unwrap();
        assert!(s.symbols().iter().all(|&x| x == 1));
        let chain = MarkovModel::binary_chain(1.0, 0.0).unwrap();
        let s = generate(&chain, 20, 9).unwrap();
        assert!(s.symbols().iter().skip(1).all(|&x| x == 1));
    }

    #[test]
    fn same_seed_same_sequence() {
        let m = MarkovModel::binary_chain(0.3, 0.1).unwrap();
        assert_eq!(
            generate(&m, 500, 11).unwrap(),
            generate(&m, 500, 11).unwrap()
        );
        assert_ne!(
            generate(&m, 500, 11).unwrap(),
            generate(&m, 500, 12).unwrap()
        );
    }

    #[test]
    fn rejects_bad_rows() {
        let ab = Arc::new(Alphabet::binary());
        assert!(MarkovModel::iid(ab.clone(), vec![0.5, 0.6]).is_err());
        assert!(MarkovModel::iid(ab.clone(), vec![1.5, -0.5]).is_err());
        assert!(MarkovModel::new(ab, 1, vec![vec![0.5, 0.5]], None).is_err());
        assert!(generate(&MarkovModel::bernoulli(0.5).unwrap(), 0, 1).is_err());
    }

    #[test]
    fn reducible_chain_is_rejected() {
        // two absorbing states
        let ab = Arc::new(Alphabet::binary());
        let err = MarkovModel::new(ab.clone(), 1, vec![vec![1.0, 0.0], vec![0.0, 1.0]], None);
        assert!(matches!(err, Err(Error::Domain(_))));
        // with an explicit start it may be built, but it has no unique entropy rate
        let m = MarkovModel::new(
            ab,
            1,
            vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            Some(vec![0.5, 0.5]),
        )
        .unwrap();
        assert!(limit_entropy(&m).is_err());
    }

    #[test]
    fn stationary_of_asymmetric_chain() {
        let m = MarkovModel::binary_chain(0.3, 0.1).unwrap();
        let pi = m.stationary().unwrap();
        assert!((pi[0] - 0.25).abs() < 1e-10);
        assert!((pi[1] - 0.75).abs() < 1e-10);
        // periodic chain still converges through the lazy iteration
        let flip = MarkovModel::binary_chain(1.0, 1.0).unwrap();
        let pi = flip.stationary().unwrap();
        assert!((pi[0] - 0.5).abs() < 1e-10);
    }

    #[test]
    fn entropy_values() {
        let fair = MarkovModel::bernoulli(0.5).unwrap();
        for m in 0..4 {
            assert_eq!(entropy_m(&fair, m).unwrap(), 1.0);
        }
        let b = MarkovModel::bernoulli(0.2).unwrap();
        assert!((entropy_m(&b, 0).unwrap() - 0.72192809).abs() < 1e-6);
        assert_eq!(limit_entropy(&b).unwrap(), entropy_m(&b, 0).unwrap());

        let sym = MarkovModel::binary_chain(0.1, 0.1).unwrap();
        let h_inf = limit_entropy(&sym).unwrap();
        assert!((h_inf - binary_entropy(0.1)).abs() < 1e-12);
        assert!((h_inf - 0.46900).abs() < 1e-5);
        assert!((entropy_m(&sym, 0).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(entropy_m(&sym, 2).unwrap(), h_inf);
    }

    #[test]
    fn entropy_is_nonincreasing_for_order_two() {
        let ab = Arc::new(Alphabet::numeric(3).unwrap());
        let rows: Vec<Vec<f64>> = (0..9)
            .map(|i| {
                let a = 0.1 + 0.08 * i as f64;
                let b = 0.5 * (1.0 - a);
                vec![a, b, 1.0 - a - b]
            })
            .collect();
        let m = MarkovModel::new(ab, 2, rows, None).unwrap();
        let h: Vec<f64> = (0..=4).map(|k| entropy_m(&m, k).unwrap()).collect();
        assert!(h.windows(2).all(|w| w[0] >= w[1] - 1e-12), "{h:?}");
        assert_eq!(h[2], h[4]);
    }

    #[test]
    fn context_guard() {
        let ab = Arc::new(Alphabet::numeric(256).unwrap());
        assert!(matches!(
            MarkovModel::new(ab, 3, vec![], None),
            Err(Error::Resource(_))
        ));
    }
}
