//! Lossless compressors as statistical instruments.
//!
//! Conditional code lengths `|φ(v/u)| = |φ(uv)| - |φ(u)|` drive a
//! two-sample (and s-sample) homogeneity test, association coefficients
//! over the resulting 2×2 table, and a minimum-conditional-length
//! classifier. The [`sources`] module supplies finite-memory Markov
//! sources, their entropies, and Monte Carlo harnesses that check the
//! asymptotic behaviour of those procedures.

pub mod alphabet;
pub mod association;
pub mod classify;
pub mod codecs;
pub mod error;
pub mod homogeneity;
pub mod sources;

pub use alphabet::{Alphabet, Sequence, Symbol};
pub use codecs::{CodeLength, Codec, CompressorSpec, EscapeMethod};
pub use error::{Error, Result};
