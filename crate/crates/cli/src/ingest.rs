//! Corpus ingestion: files and directories to sequences over one shared
//! alphabet.
//!
//! A directory contributes one record per regular file, in lexicographic
//! file-name order. A plain file is split into records on a delimiter.
//! Empty records are skipped with a warning.

use std::collections::{BTreeSet, HashMap};
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::ValueEnum;
use codestat::{Alphabet, Sequence};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Tokenize {
    Bytes,
    Utf8,
    Words,
}

/// Token standing for every word outside the vocabulary.
const OOV: &str = "\u{fffd}OOV";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InputDigest {
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

/// One record of raw input and where it came from.
#[derive(Clone, Debug)]
pub struct Record {
    pub origin: String,
    pub bytes: Vec<u8>,
}

#[derive(Debug, Default)]
pub struct Reader {
    pub digests: Vec<InputDigest>,
    pub warnings: Vec<String>,
}

impl Reader {
    /// Records the digest of a file that is read elsewhere.
    pub fn digest_file(&mut self, path: &Path) -> Result<()> {
        self.read_file(path).map(drop)
    }

    fn read_file(&mut self, path: &Path) -> Result<Vec<u8>> {
        let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
        self.digests.push(InputDigest {
            path: path.display().to_string(),
            bytes: bytes.len() as u64,
            sha256: hex::encode(Sha256::digest(&bytes)),
        });
        Ok(bytes)
    }

    /// Records of a directory (one per file) or a delimited file.
    pub fn records(&mut self, path: &Path, delimiter: &[u8]) -> Result<Vec<Record>> {
        let meta = fs::metadata(path).map_err(|e| CliError::io(path, e))?;
        let mut out = Vec::new();
        if meta.is_dir() {
            let mut files: Vec<PathBuf> = fs::read_dir(path)
                .map_err(|e| CliError::io(path, e))?
                .map(|entry| entry.map(|e| e.path()).map_err(|e| CliError::io(path, e)))
                .collect::<Result<Vec<_>>>()?
                .into_iter()
                .filter(|p| p.is_file())
                .collect();
            files.sort_by(|a, b| a.file_name().cmp(&b.file_name()));
            for file in files {
                let bytes = self.read_file(&file)?;
                let origin = file.display().to_string();
                if bytes.is_empty() {
                    self.warnings.push(format!("skipped empty file {origin}"));
                } else {
                    out.push(Record { origin, bytes });
                }
            }
        } else {
            let bytes = self.read_file(path)?;
            for (i, chunk) in split_on(&bytes, delimiter).into_iter().enumerate() {
                let origin = format!("{}#{}", path.display(), i + 1);
                if chunk.is_empty() {
                    self.warnings.push(format!("skipped empty record {origin}"));
                } else {
                    out.push(Record {
                        origin,
                        bytes: chunk.to_vec(),
                    });
                }
            }
        }
        if out.is_empty() {
            return Err(CliError::Usage(format!(
                "{} contains no nonempty records",
                path.display()
            )));
        }
        Ok(out)
    }
}

fn split_on<'a>(data: &'a [u8], delimiter: &[u8]) -> Vec<&'a [u8]> {
    if delimiter.is_empty() {
        return vec![data];
    }
    let mut parts = Vec::new();
    let mut start = 0;
    let mut i = 0;
    while i + delimiter.len() <= data.len() {
        if &data[i..i + delimiter.len()] == delimiter {
            parts.push(&data[start..i]);
            i += delimiter.len();
            start = i;
        } else {
            i += 1;
        }
    }
    parts.push(&data[start..]);
    // a trailing delimiter does not open a record
    if parts.len() > 1 && parts.last().is_some_and(|p| p.is_empty()) {
        parts.pop();
    }
    parts
}

fn tokens(record: &Record, mode: Tokenize) -> Result<Vec<Vec<u8>>> {
    Ok(match mode {
        Tokenize::Bytes => record.bytes.iter().map(|&b| vec![b]).collect(),
        Tokenize::Utf8 => std::str::from_utf8(&record.bytes)
            .map_err(|e| CliError::Usage(format!("{} is not valid UTF-8: {e}", record.origin)))?
            .chars()
            .map(|c| c.to_string().into_bytes())
            .collect(),
        // the trailing space keeps rendered output word-separated for external compressors
        Tokenize::Words => record
            .bytes
            .split(|b| b.is_ascii_whitespace())
            .filter(|w| !w.is_empty())
            .map(|w| {
                let mut t = w.to_vec();
                t.push(b' ');
                t
            })
            .collect(),
    })
}

/// Tokenizes every record against one alphabet, built as the union of the
/// observed tokens (sorted), or for words the `vocab_cap` most frequent
/// words plus an out-of-vocabulary symbol.
pub fn tokenize_all(
    batches: &[Vec<Record>],
    mode: Tokenize,
    vocab_cap: usize,
) -> Result<(Arc<Alphabet>, Vec<Vec<Sequence>>)> {
    let tokenized: Vec<Vec<Vec<Vec<u8>>>> = batches
        .iter()
        .map(|b| {
            b.iter()
                .map(|r| tokens(r, mode))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let all = tokenized.iter().flatten().flatten();
    let mut oov_token = None;
    let symbols: Vec<Vec<u8>> = match mode {
        Tokenize::Words => {
            let mut freq: HashMap<&[u8], u64> = HashMap::new();
            for t in all {
                *freq.entry(t.as_slice()).or_default() += 1;
            }
            let mut ranked: Vec<(&[u8], u64)> = freq.into_iter().collect();
            ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
            let overflow = ranked.len() > vocab_cap;
            let mut vocab: Vec<Vec<u8>> = ranked
                .iter()
                .take(vocab_cap)
                .map(|(w, _)| w.to_vec())
                .collect();
            if overflow {
                let mut oov = format!("{OOV} ").into_bytes();
                while vocab.contains(&oov) {
                    oov.insert(0, b'_');
                }
                vocab.push(oov.clone());
                oov_token = Some(oov);
            }
            vocab.sort();
            vocab
        }
        _ => all.cloned().collect::<BTreeSet<_>>().into_iter().collect(),
    };
    let alphabet = Arc::new(
        Alphabet::new(symbols)
            .map_err(|e| CliError::Usage(format!("corpus alphabet is unusable: {e}")))?,
    );
    let index: HashMap<&[u8], u32> = alphabet
        .symbols()
        .iter()
        .enumerate()
        .map(|(i, s)| (s.as_slice(), i as u32))
        .collect();
    let oov_index = oov_token.and_then(|t| alphabet.index_of(&t));
    let sequences = tokenized
        .iter()
        .map(|batch| {
            batch
                .iter()
                .map(|toks| {
                    let data =
                        toks.iter()
                            .map(|t| match index.get(t.as_slice()) {
                                Some(&i) => i,
                                None => oov_index
                                    .expect("words outside the vocabulary imply an OOV symbol"),
                            })
                            .collect();
                    Sequence::new(alphabet.clone(), data).map_err(CliError::from)
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((alphabet, sequences))
}
