//! Burrows-Wheeler transform, move-to-front, and an adaptive order-0 coder
//! over the MTF ranks.
//!
//! Each block is transformed with an implicit end-of-block sentinel. The
//! sentinel's row costs `log2(n + 1)` bits; every rank costs
//! `-log2((count + 1) / (seen + |A|))` under a Laplace estimator.

use crate::alphabet::Symbol;

#[derive(Clone, Debug)]
pub struct BwtMtf {
    block_size: Option<usize>,
    alphabet_size: usize,
}

impl BwtMtf {
    pub fn new(block_size: Option<usize>, alphabet_size: usize) -> Self {
        BwtMtf {
            block_size,
            alphabet_size,
        }
    }

    pub fn length(&self, symbols: &[Symbol]) -> f64 {
        let block = self.block_size.unwrap_or(symbols.len()).max(1);
        symbols
            .chunks(block)
            .map(|chunk| self.block_length(chunk))
            .sum()
    }

    fn block_length(&self, block: &[Symbol]) -> f64 {
        let (last_column, sentinel_row) = bwt(block);
        let ranks = move_to_front(&last_column, self.alphabet_size);
        let k = self.alphabet_size as f64;
        let mut counts = vec![0u64; self.alphabet_size];
        let mut bits = ((block.len() + 1) as f64).log2();
        debug_assert!(sentinel_row <= block.len());
        for (seen, &r) in ranks.iter().enumerate() {
            let c = &mut counts[r as usize];
            bits -= ((*c as f64 + 1.0) / (seen as f64 + k)).log2();
            *c += 1;
        }
        bits
    }
}

/// Suffix array by prefix doubling. Shorter suffixes sort first on ties,
/// which is the order an end sentinel smaller than every symbol induces.
pub fn suffix_array(s: &[Symbol]) -> Vec<usize> {
    let n = s.len();
    let mut sa: Vec<usize> = (0..n).collect();
    if n <= 1 {
        return sa;
    }
    let mut rank: Vec<i64> = s.iter().map(|&c| i64::from(c)).collect();
    let mut next = vec![0i64; n];
    let mut k = 1;
    loop {
        let key = |i: usize| (rank[i], if i + k < n { rank[i + k] } else { -1 });
        sa.sort_unstable_by_key(|&i| key(i));
        next[sa[0]] = 0;
        for w in 1..n {
            let bump = i64::from(key(sa[w - 1]) != key(sa[w]));
            next[sa[w]] = next[sa[w - 1]] + bump;
        }
        std::mem::swap(&mut rank, &mut next);
        if rank[sa[n - 1]] as usize == n - 1 {
            break;
        }
        k *= 2;
    }
    sa
}

/// Last column of the sorted rotations of `s$`, with the sentinel removed,
/// and the row where the sentinel stood (in `0..=n`).
pub fn bwt(s: &[Symbol]) -> (Vec<Symbol>, usize) {
    let n = s.len();
    if n == 0 {
        return (Vec::new(), 0);
    }
    let sa = suffix_array(s);
    let mut out = Vec::with_capacity(n);
    // row 0 is the rotation starting at the sentinel
    out.push(s[n - 1]);
    let mut sentinel_row = 0;
    for (row, &p) in sa.iter().enumerate() {
        if p == 0 {
            sentinel_row = row + 1;
        } else {
            out.push(s[p - 1]);
        }
    }
    (out, sentinel_row)
}

pub fn move_to_front(s: &[Symbol], alphabet_size: usize) -> Vec<Symbol> {
    let mut table: Vec<Symbol> = (0..alphabet_size as Symbol).collect();
    s.iter()
        .map(|&c| {
            let pos = table
                .iter()
                .position(|&t| t == c)
                .expect("symbol within alphabet");
            table[..=pos].rotate_right(1);
            pos as Symbol
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Inverse transform, used only to check that (last column, row) loses nothing.
    fn inverse(last: &[Symbol], sentinel_row: usize) -> Vec<Symbol> {
        let n = last.len();
        // None plays the sentinel and sorts lowest
        let mut l: Vec<Option<Symbol>> = last.iter().map(|&c| Some(c)).collect();
        l.insert(sentinel_row, None);
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by_key(|&i| (l[i], i));
        // order[j] = row whose last symbol is the j-th symbol of the first column
        let mut out = Vec::with_capacity(n);
        let mut row = 0;
        for _ in 0..n {
            row = order[row];
            out.push(l[order[row]].expect("sentinel is never a first symbol here"));
        }
        out
    }

    #[test]
    fn banana() {
        // b=1 a=0 n=2
        let s = [1, 0, 2, 0, 2, 0];
        assert_eq!(suffix_array(&s), vec![5, 3, 1, 0, 4, 2]);
        let (last, row) = bwt(&s);
        // annb$aa with the sentinel at row 4
        assert_eq!(last, vec![0, 2, 2, 1, 0, 0]);
        assert_eq!(row, 4);
        assert_eq!(inverse(&last, row), s);
    }

    #[test]
    fn transform_is_invertible() {
        for n in 1..=8 {
            for index in 0..(1u32 << n) {
                let s: Vec<Symbol> = (0..n).map(|b| (index >> b) & 1).collect();
                let (last, row) = bwt(&s);
                assert_eq!(inverse(&last, row), s, "{s:?}");
            }
        }
    }

    #[test]
    fn mtf_ranks() {
        assert_eq!(
            move_to_front(&[1, 1, 0, 2, 2, 0], 3),
            vec![1, 0, 1, 2, 0, 1]
        );
    }

    #[test]
    fn blocks_are_independent() {
        let codec = BwtMtf::new(Some(2), 2);
        let whole = BwtMtf::new(None, 2);
        let expected = whole.length(&[0, 1]) + whole.length(&[1, 1]) + whole.length(&[0]);
        assert!((codec.length(&[0, 1, 1, 1, 0]) - expected).abs() < 1e-12);
    }
}
