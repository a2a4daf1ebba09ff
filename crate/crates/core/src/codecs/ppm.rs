//! Prediction by partial matching with ideal (un-rounded) code lengths.
//!
//! Contexts of order `0..=k` live in a trie keyed by the most recent
//! symbol first. Coding a symbol walks from the longest existing context
//! down, paying an escape at every context that has not seen it and
//! excluding the symbols of the context just left. Below order 0 sits a
//! uniform distribution over the symbols never seen at all, so every
//! symbol has positive probability. A context that has already seen every
//! symbol of the alphabet assigns no mass to the escape, which keeps the
//! per-step distribution summing to exactly 1. All orders are updated
//! after each symbol.

use std::collections::{HashMap, VecDeque};
use std::hash::{BuildHasherDefault, Hasher};

use super::EscapeMethod;
use crate::alphabet::Symbol;

#[derive(Clone, Debug)]
pub struct Ppm {
    order: usize,
    escape: EscapeMethod,
    alphabet_size: usize,
}

impl Ppm {
    pub fn new(order: usize, escape: EscapeMethod, alphabet_size: usize) -> Self {
        Ppm {
            order,
            escape,
            alphabet_size,
        }
    }

    pub fn length(&self, symbols: &[Symbol]) -> f64 {
        self.state_after(symbols).bits()
    }

    pub(crate) fn state_after(&self, symbols: &[Symbol]) -> PpmState {
        let mut state = PpmState {
            order: self.order,
            escape: self.escape,
            alphabet_size: self.alphabet_size,
            nodes: vec![Node::default()],
            children: ChildMap::default(),
            history: VecDeque::with_capacity(self.order + 1),
            bits: 0.0,
            marks: vec![0; self.alphabet_size],
            stamp: 0,
        };
        state.extend(symbols);
        state
    }
}

#[derive(Clone, Debug, Default)]
struct Node {
    counts: Vec<(Symbol, u32)>,
    total: u64,
}

impl Node {
    fn count(&self, sym: Symbol) -> u32 {
        self.counts
            .iter()
            .find(|(s, _)| *s == sym)
            .map_or(0, |&(_, c)| c)
    }

    fn bump(&mut self, sym: Symbol) {
        match self.counts.iter_mut().find(|(s, _)| *s == sym) {
            Some((_, c)) => *c += 1,
            None => self.counts.push((sym, 1)),
        }
        self.total += 1;
    }
}

/// Multiplicative hash for packed `(node, symbol)` keys.
#[derive(Default)]
struct PairHasher(u64);

impl Hasher for PairHasher {
    fn finish(&self) -> u64 {
        self.0
    }

    fn write(&mut self, bytes: &[u8]) {
        for &b in bytes {
            self.0 = (self.0.rotate_left(5) ^ u64::from(b)).wrapping_mul(0x51_7c_c1_b7_27_22_0a_95);
        }
    }

    fn write_u64(&mut self, n: u64) {
        self.0 = (self.0.rotate_left(5) ^ n).wrapping_mul(0x51_7c_c1_b7_27_22_0a_95);
    }
}

type ChildMap = HashMap<u64, u32, BuildHasherDefault<PairHasher>>;

fn key(node: u32, sym: Symbol) -> u64 {
    (u64::from(node) << 32) | u64::from(sym)
}

#[derive(Clone, Debug)]
pub(crate) struct PpmState {
    order: usize,
    escape: EscapeMethod,
    alphabet_size: usize,
    nodes: Vec<Node>,
    children: ChildMap,
    /// Most recent symbol at the back; at most `order` entries.
    history: VecDeque<Symbol>,
    bits: f64,
    marks: Vec<u64>,
    stamp: u64,
}

impl PpmState {
    pub fn bits(&self) -> f64 {
        self.bits
    }

    pub fn extend(&mut self, symbols: &[Symbol]) {
        let mut path = Vec::with_capacity(self.order + 1);
        for &sym in symbols {
            self.context_path(&mut path);
            let p = self.probability(&path, sym);
            self.bits -= p.log2();
            self.update(&mut path, sym);
        }
    }

    /// Nodes for contexts of order 0, 1, ... that exist, shortest first.
    fn context_path(&self, path: &mut Vec<u32>) {
        path.clear();
        path.push(0);
        let mut node = 0u32;
        for &sym in self.history.iter().rev() {
            match self.children.get(&key(node, sym)) {
                Some(&child) => {
                    node = child;
                    path.push(child);
                }
                None => break,
            }
        }
    }

    fn probability(&mut self, path: &[u32], sym: Symbol) -> f64 {
        let mut prob = 1.0;
        // distinct symbols excluded so far (those of the last context left)
        let mut excluded: Option<u32> = None;
        for &id in path.iter().rev() {
            let node = &self.nodes[id as usize];
            let (n_avail, q_avail) = match excluded {
                None => (node.total, node.counts.len() as u64),
                Some(ex) => {
                    self.stamp += 1;
                    let stamp = self.stamp;
                    let ex_node = &self.nodes[ex as usize];
                    for &(s, _) in &ex_node.counts {
                        self.marks[s as usize] = stamp;
                    }
                    let hidden: u64 = node
                        .counts
                        .iter()
                        .filter(|(s, _)| self.marks[*s as usize] == stamp)
                        .map(|&(_, c)| u64::from(c))
                        .sum();
                    (
                        node.total - hidden,
                        (node.counts.len() - ex_node.counts.len()) as u64,
                    )
                }
            };
            if n_avail == 0 {
                // everything here was already excluded: no escape is coded
                continue;
            }
            let count = u64::from(node.count(sym));
            let (n, q) = (n_avail as f64, q_avail as f64);
            // a context that has seen the whole alphabet never escapes
            let can_escape = node.counts.len() < self.alphabet_size;
            if count > 0 {
                let c = count as f64;
                prob *= match (self.escape, can_escape) {
                    (EscapeMethod::A, true) => c / (n + 1.0),
                    (EscapeMethod::C, true) => c / (n + q),
                    (EscapeMethod::D, true) => (2.0 * c - 1.0) / (2.0 * n),
                    (EscapeMethod::A | EscapeMethod::C, false) => c / n,
                    (EscapeMethod::D, false) => (2.0 * c - 1.0) / (2.0 * n - q),
                };
                return prob;
            }
            debug_assert!(can_escape);
            prob *= match self.escape {
                EscapeMethod::A => 1.0 / (n + 1.0),
                EscapeMethod::C => q / (n + q),
                EscapeMethod::D => q / (2.0 * n),
            };
            excluded = Some(id);
        }
        let seen = self.nodes[0].counts.len();
        prob / (self.alphabet_size - seen) as f64
    }

    fn update(&mut self, path: &mut Vec<u32>, sym: Symbol) {
        let depth = self.history.len();
        // extend the path with fresh nodes up to the full available order
        while path.len() <= depth {
            let parent = *path.last().expect("root is always present");
            let ctx_sym = self.history[depth - path.len()];
            let id = self.nodes.len() as u32;
            self.nodes.push(Node::default());
            self.children.insert(key(parent, ctx_sym), id);
            path.push(id);
        }
        for &id in path.iter() {
            self.nodes[id as usize].bump(sym);
        }
        if self.order > 0 {
            if self.history.len() == self.order {
                self.history.pop_front();
            }
            self.history.push_back(sym);
        }
    }
}
