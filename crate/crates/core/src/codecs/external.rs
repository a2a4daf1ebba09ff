//! Adapter for an arbitrary command-line compressor.
//!
//! The command runs under `sh -c`. If the template contains `{input}`, the
//! input is written to a temporary file and the placeholder is replaced by
//! its path; otherwise the input is piped to stdin. The code length is the
//! number of bytes the command writes to stdout, times 8.

use std::io::{Read, Write};
use std::process::{Command, Stdio};

use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct External {
    template: String,
}

impl External {
    pub fn new(template: String) -> Self {
        External { template }
    }

    pub fn length(&self, input: &[u8]) -> Result<f64> {
        let bytes = if self.template.contains("{input}") {
            self.run_with_file(input)?
        } else {
            self.run_with_stdin(input)?
        };
        Ok(bytes as f64 * 8.0)
    }

    fn run_with_file(&self, input: &[u8]) -> Result<u64> {
        let mut file = tempfile::NamedTempFile::new().map_err(|e| backend("temp file", e))?;
        file.write_all(input).map_err(|e| backend("temp file", e))?;
        file.flush().map_err(|e| backend("temp file", e))?;
        let path = file.path().to_string_lossy().replace('\'', r"'\''");
        let command = self.template.replace("{input}", &format!("'{path}'"));
        let child = Command::new("sh")
            .arg("-c")
            .arg(&command)
            .stdin(Stdio::null())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .spawn()
            .map_err(|e| backend("spawn", e))?;
        self.collect(child)
    }

    fn run_with_stdin(&self, input: &[u8]) -> Result<u64> {
        let mut child = Command::new("sh")
            .arg("-c")
            .arg(&self.template)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .spawn()
            .map_err(|e| backend("spawn", e))?;
        let mut stdin = child.stdin.take().expect("stdin is piped");
        let data = input.to_vec();
        // feed stdin from a thread so a compressor that streams output cannot deadlock
        let writer = std::thread::spawn(move || stdin.write_all(&data));
        let out = self.collect(child);
        match writer.join() {
            Ok(Err(e)) if out.is_ok() && e.kind() != std::io::ErrorKind::BrokenPipe => {
                Err(backend("writing stdin", e))
            }
            _ => out,
        }
    }

    fn collect(&self, mut child: std::process::Child) -> Result<u64> {
        let mut stdout = child.stdout.take().expect("stdout is piped");
        let mut stderr = child.stderr.take().expect("stderr is piped");
        let err_reader = std::thread::spawn(move || {
            let mut buf = Vec::new();
            let _ = stderr.read_to_end(&mut buf);
            buf
        });
        let mut count = 0u64;
        let mut buf = [0u8; 1 << 16];
        loop {
            match stdout.read(&mut buf) {
                Ok(0) => break,
                Ok(n) => count += n as u64,
                Err(e) if e.kind() == std::io::ErrorKind::Interrupted => {}
                Err(e) => return Err(backend("reading stdout", e)),
            }
        }
        let status = child.wait().map_err(|e| backend("wait", e))?;
        let diagnostics =
            String::from_utf8_lossy(&err_reader.join().unwrap_or_default()).into_owned();
        if !status.success() {
            return Err(Error::Backend {
                message: format!("`{}` exited with {status}", self.template),
                diagnostics,
            });
        }
        Ok(count)
    }
}

fn backend(stage: &str, e: std::io::Error) -> Error {
    Error::Backend {
        message: format!("external compressor {stage} failed: {e}"),
        diagnostics: String::new(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_stdout_bytes() {
        let cat = External::new("cat".into());
        assert_eq!(cat.length(b"hello").unwrap(), 40.0);
        let file = External::new("cat {input}".into());
        assert_eq!(file.length(b"hey").unwrap(), 24.0);
    }

    #[test]
    fn failure_carries_diagnostics() {
        let bad = External::new("echo oops >&2; exit 3".into());
        match bad.length(b"x") {
            Err(Error::Backend { diagnostics, .. }) => assert!(diagnostics.contains("oops")),
            other => panic!("expected backend error, got {other:?}"),
        }
    }

    #[test]
    fn deterministic_for_fixed_input() {
        let gz = External::new("gzip -n -c".into());
        let a = gz.length(&[b'a'; 1000]).unwrap();
        assert_eq!(a, gz.length(&[b'a'; 1000]).unwrap());
        assert!(a < 8000.0);
    }
}
