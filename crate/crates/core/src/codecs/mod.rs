//! Compressor backends and the code-length operations built on them.
//!
//! Every backend maps a word to a length in bits. Lengths are carried as
//! `f64`: the PPM backend reports ideal arithmetic-coding lengths
//! (`-log2` of the modeled probability), the LZ78 and BWT-MTF backends
//! report their own bit counts. The conditional length of `v` given `u`
//! is `len(u‖v) - len(u)`, so it is additive by construction.

mod bwt;
mod external;
mod lz78;
mod ppm;

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::alphabet::{Alphabet, Sequence, Symbol};
use crate::error::{Error, Result};

pub use bwt::BwtMtf;
pub use external::External;
pub use lz78::Lz78;
pub use ppm::Ppm;

/// Largest number of words [`kraft_sum`] will enumerate.
pub const KRAFT_ENUMERATION_LIMIT: usize = 1 << 20;

/// Escape estimator used by the PPM backend.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum EscapeMethod {
    /// Escape count 1.
    A,
    /// Escape count equal to the number of distinct symbols seen (PPMC).
    #[default]
    C,
    /// Half-count variant of C (PPMD).
    D,
}

/// Backend selection and parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "backend", rename_all = "snake_case")]
pub enum CompressorSpec {
    Lz78,
    Ppm {
        order: usize,
        #[serde(default)]
        escape: EscapeMethod,
    },
    /// `block_size: None` means one block spanning the whole message.
    BwtMtf {
        #[serde(default)]
        block_size: Option<usize>,
    },
    /// Shell command reading the input on stdin, or from the file named by
    /// an `{input}` placeholder, and writing the compressed data to stdout.
    External {
        command: String,
    },
}

impl Default for CompressorSpec {
    fn default() -> Self {
        CompressorSpec::Ppm {
            order: 3,
            escape: EscapeMethod::C,
        }
    }
}

impl CompressorSpec {
    pub fn ppm(order: usize) -> Self {
        CompressorSpec::Ppm {
            order,
            escape: EscapeMethod::C,
        }
    }

    pub fn bwt() -> Self {
        CompressorSpec::BwtMtf { block_size: None }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            CompressorSpec::BwtMtf {
                block_size: Some(0),
            } => Err(Error::domain("BWT block size must be at least 1")),
            CompressorSpec::External { command } if command.trim().is_empty() => {
                Err(Error::domain("external command template is empty"))
            }
            _ => Ok(()),
        }
    }
}

/// A code length in bits.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CodeLength(f64);

impl CodeLength {
    pub fn new(bits: f64) -> Self {
        CodeLength(bits)
    }

    pub fn bits(self) -> f64 {
        self.0
    }

    /// `2^-bits`, the probability this length induces.
    pub fn probability(self) -> f64 {
        (-self.0).exp2()
    }
}

impl fmt::Display for CodeLength {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} bits", self.0)
    }
}

#[derive(Clone, Debug)]
enum Backend {
    Lz78(Lz78),
    Ppm(Ppm),
    Bwt(BwtMtf),
    External(External),
}

/// A backend instantiated for one alphabet.
#[derive(Clone, Debug)]
pub struct Codec {
    backend: Backend,
    alphabet: Arc<Alphabet>,
}

impl Codec {
    pub fn new(spec: &CompressorSpec, alphabet: Arc<Alphabet>) -> Result<Self> {
        spec.validate()?;
        let size = alphabet.size();
        let backend = match spec {
            CompressorSpec::Lz78 => Backend::Lz78(Lz78::new(size)),
            CompressorSpec::Ppm { order, escape } => Backend::Ppm(Ppm::new(*order, *escape, size)),
            CompressorSpec::BwtMtf { block_size } => Backend::Bwt(BwtMtf::new(*block_size, size)),
            CompressorSpec::External { command } => {
                Backend::External(External::new(command.clone()))
            }
        };
        Ok(Codec { backend, alphabet })
    }

    pub fn alphabet(&self) -> &Arc<Alphabet> {
        &self.alphabet
    }

    /// Length of a raw symbol slice. The empty word has length 0.
    pub fn length_of(&self, symbols: &[Symbol]) -> Result<f64> {
        if symbols.is_empty() {
            return Ok(0.0);
        }
        match &self.backend {
            Backend::Lz78(c) => Ok(c.length(symbols)),
            Backend::Ppm(c) => Ok(c.length(symbols)),
            Backend::Bwt(c) => Ok(c.length(symbols)),
            Backend::External(c) => c.length(&self.render(symbols)),
        }
    }

    pub fn length(&self, seq: &Sequence) -> Result<CodeLength> {
        self.check(seq)?;
        if seq.is_empty() {
            return Err(Error::domain("cannot compress an empty sequence"));
        }
        self.length_of(seq.symbols()).map(CodeLength)
    }

    /// Encodes `context` once so that many targets can be scored against it.
    pub fn prime(&self, context: &Sequence) -> Result<Primed> {
        self.check(context)?;
        let symbols = context.symbols();
        let state = match &self.backend {
            Backend::Lz78(c) => PrimedState::Lz78(c.state_after(symbols)),
            Backend::Ppm(c) => PrimedState::Ppm(Box::new(c.state_after(symbols))),
            Backend::Bwt(_) | Backend::External(_) => PrimedState::Generic {
                context: symbols.to_vec(),
                bits: self.length_of(symbols)?,
            },
        };
        Ok(Primed {
            codec: self.clone(),
            state,
        })
    }

    pub fn conditional_length(&self, target: &Sequence, context: &Sequence) -> Result<CodeLength> {
        self.prime(context)?.conditional_length(target)
    }

    fn check(&self, seq: &Sequence) -> Result<()> {
        if seq.alphabet().as_ref() == self.alphabet.as_ref() {
            Ok(())
        } else {
            Err(Error::domain("sequence alphabet does not match the codec"))
        }
    }

    fn render(&self, symbols: &[Symbol]) -> Vec<u8> {
        let mut out = Vec::with_capacity(symbols.len());
        for &s in symbols {
            out.extend_from_slice(self.alphabet.token(s).unwrap_or_default());
        }
        out
    }
}

#[derive(Clone, Debug)]
enum PrimedState {
    Lz78(lz78::Lz78State),
    Ppm(Box<ppm::PpmState>),
    Generic { context: Vec<Symbol>, bits: f64 },
}

/// A codec that has already consumed a context.
#[derive(Clone, Debug)]
pub struct Primed {
    codec: Codec,
    state: PrimedState,
}

impl Primed {
    /// Length of the context alone.
    pub fn context_length(&self) -> f64 {
        match &self.state {
            PrimedState::Lz78(s) => s.bits(),
            PrimedState::Ppm(s) => s.bits(),
            PrimedState::Generic { bits, .. } => *bits,
        }
    }

    /// `len(context‖target) - len(context)`.
    pub fn conditional_length(&self, target: &Sequence) -> Result<CodeLength> {
        self.codec.check(target)?;
        if target.is_empty() {
            return Err(Error::domain("conditional length of an empty target"));
        }
        let target = target.symbols();
        let bits = match &self.state {
            PrimedState::Lz78(s) => {
                let mut s = s.clone();
                let before = s.bits();
                s.extend(target);
                s.bits() - before
            }
            PrimedState::Ppm(s) => {
                let mut s = s.as_ref().clone();
                let before = s.bits();
                s.extend(target);
                s.bits() - before
            }
            PrimedState::Generic { context, bits } => {
                let mut joined = Vec::with_capacity(context.len() + target.len());
                joined.extend_from_slice(context);
                joined.extend_from_slice(target);
                self.codec.length_of(&joined)? - bits
            }
        };
        Ok(CodeLength(bits))
    }
}

/// Length in bits of `seq` under `spec`.
pub fn compress_length(spec: &CompressorSpec, seq: &Sequence) -> Result<CodeLength> {
    Codec::new(spec, seq.alphabet().clone())?.length(seq)
}

/// `|φ(context‖target)| - |φ(context)|`; equals `compress_length` of the
/// target when the context is empty.
pub fn conditional_length(
    spec: &CompressorSpec,
    target: &Sequence,
    context: &Sequence,
) -> Result<CodeLength> {
    target.check_same_alphabet(context)?;
    Codec::new(spec, target.alphabet().clone())?.conditional_length(target, context)
}

/// `2^-compress_length`.
pub fn induced_probability(spec: &CompressorSpec, seq: &Sequence) -> Result<f64> {
    compress_length(spec, seq).map(CodeLength::probability)
}

/// Sum of `2^-|φ(u)|` over every word `u` of length `n`.
pub fn kraft_sum(spec: &CompressorSpec, n: usize, alphabet: Arc<Alphabet>) -> Result<f64> {
    if n == 0 {
        return Err(Error::domain("word length must be at least 1"));
    }
    let k = alphabet.size();
    let count = u32::try_from(n)
        .ok()
        .and_then(|n| k.checked_pow(n))
        .filter(|&c| c <= KRAFT_ENUMERATION_LIMIT)
        .ok_or_else(|| {
            Error::Resource(format!(
                "{k}^{n} words exceeds the enumeration limit of {KRAFT_ENUMERATION_LIMIT}"
            ))
        })?;
    let codec = Codec::new(spec, alphabet)?;
    let mut word = vec![0 as Symbol; n];
    let mut sum = 0.0;
    for index in 0..count {
        let mut rest = index;
        for slot in word.iter_mut().rev() {
            *slot = (rest % k) as Symbol;
            rest /= k;
        }
        sum += (-codec.length_of(&word)?).exp2();
    }
    Ok(sum)
}

/// `|φ(w/y_ctx)| - |φ(w/x_ctx)|`: positive when `w` compresses better
/// after `x_ctx`.
pub fn delta_statistic(
    spec: &CompressorSpec,
    w: &Sequence,
    x_ctx: &Sequence,
    y_ctx: &Sequence,
) -> Result<f64> {
    w.check_same_alphabet(x_ctx)?;
    w.check_same_alphabet(y_ctx)?;
    let codec = Codec::new(spec, w.alphabet().clone())?;
    let given_y = codec.conditional_length(w, y_ctx)?;
    let given_x = codec.conditional_length(w, x_ctx)?;
    Ok(given_y.bits() - given_x.bits())
}

fn ceil_log2(n: u64) -> u64 {
    if n <= 1 {
        0
    } else {
        u64::from(64 - (n - 1).leading_zeros())
    }
}
