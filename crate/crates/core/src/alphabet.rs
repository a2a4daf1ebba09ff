//! Finite alphabets and sequences of symbol indices over them.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Symbol index into an [`Alphabet`].
pub type Symbol = u32;

/// An ordered set of distinct tokens. Tokens are raw bytes so that byte,
/// code point and word tokenizations share one representation.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Alphabet {
    symbols: Vec<Vec<u8>>,
}

impl Alphabet {
    pub fn new(symbols: Vec<Vec<u8>>) -> Result<Self> {
        if symbols.len() < 2 {
            return Err(Error::domain(format!(
                "alphabet needs at least 2 symbols, got {}",
                symbols.len()
            )));
        }
        if symbols.len() > u32::MAX as usize {
            return Err(Error::Resource("alphabet too large".into()));
        }
        let mut sorted: Vec<&Vec<u8>> = symbols.iter().collect();
        sorted.sort();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::domain("alphabet symbols must be distinct"));
        }
        Ok(Alphabet { symbols })
    }

    /// Alphabet whose tokens are the decimal digits `0..size` rendered as text.
    pub fn numeric(size: usize) -> Result<Self> {
        Alphabet::new((0..size).map(|i| i.to_string().into_bytes()).collect())
    }

    /// The binary alphabet `{0, 1}`.
    pub fn binary() -> Self {
        Alphabet::numeric(2).expect("two distinct symbols")
    }

    pub fn size(&self) -> usize {
        self.symbols.len()
    }

    pub fn symbols(&self) -> &[Vec<u8>] {
        &self.symbols
    }

    pub fn token(&self, symbol: Symbol) -> Option<&[u8]> {
        self.symbols.get(symbol as usize).map(Vec::as_slice)
    }

    pub fn index_of(&self, token: &[u8]) -> Option<Symbol> {
        self.symbols
            .iter()
            .position(|s| s == token)
            .map(|i| i as Symbol)
    }
}

impl fmt::Debug for Alphabet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list()
            .entries(self.symbols.iter().map(|s| String::from_utf8_lossy(s)))
            .finish()
    }
}

/// A word over an alphabet, stored as symbol indices.
#[derive(Clone, Debug)]
pub struct Sequence {
    alphabet: Arc<Alphabet>,
    data: Vec<Symbol>,
}

impl PartialEq for Sequence {
    fn eq(&self, other: &Self) -> bool {
        self.data == other.data && same_alphabet(&self.alphabet, &other.alphabet)
    }
}

impl Sequence {
    pub fn new(alphabet: Arc<Alphabet>, data: Vec<Symbol>) -> Result<Self> {
        let size = alphabet.size() as Symbol;
        if let Some(bad) = data.iter().find(|&&s| s >= size) {
            return Err(Error::domain(format!(
                "symbol index {bad} out of range for alphabet of size {size}"
            )));
        }
        Ok(Sequence { alphabet, data })
    }

    pub fn empty(alphabet: Arc<Alphabet>) -> Self {
        Sequence {
            alphabet,
            data: Vec::new(),
        }
    }

    /// Builds a sequence from text, one character per symbol.
    pub fn from_chars(alphabet: Arc<Alphabet>, text: &str) -> Result<Self> {
        let mut buf = [0u8; 4];
        let data = text
            .chars()
            .map(|c| {
                alphabet
                    .index_of(c.encode_utf8(&mut buf).as_bytes())
                    .ok_or_else(|| Error::domain(format!("character {c:?} not in alphabet")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Sequence { alphabet, data })
    }

    pub fn alphabet(&self) -> &Arc<Alphabet> {
        &self.alphabet
    }

    pub fn symbols(&self) -> &[Symbol] {
        &self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// `self‖other`, with no separator.
    pub fn concat(&self, other: &Sequence) -> Result<Sequence> {
        self.check_same_alphabet(other)?;
        let mut data = Vec::with_capacity(self.len() + other.len());
        data.extend_from_slice(&self.data);
        data.extend_from_slice(&other.data);
        Ok(Sequence {
            alphabet: self.alphabet.clone(),
            data,
        })
    }

    /// Concatenation of several sequences in order. All must share one alphabet.
    pub fn concat_all<'a>(
        alphabet: Arc<Alphabet>,
        parts: impl IntoIterator<Item = &'a Sequence>,
    ) -> Result<Sequence> {
        let mut out = Sequence::empty(alphabet);
        for part in parts {
            out.check_same_alphabet(part)?;
            out.data.extend_from_slice(&part.data);
        }
        Ok(out)
    }

    pub fn check_same_alphabet(&self, other: &Sequence) -> Result<()> {
        if same_alphabet(&self.alphabet, &other.alphabet) {
            Ok(())
        } else {
            Err(Error::domain("sequences are over different alphabets"))
        }
    }

    /// Concatenated token bytes.
    pub fn render(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.data.len());
        for &s in &self.data {
            out.extend_from_slice(&self.alphabet.symbols[s as usize]);
        }
        out
    }
}

fn same_alphabet(a: &Arc<Alphabet>, b: &Arc<Alphabet>) -> bool {
    Arc::ptr_eq(a, b) || a == b
}
