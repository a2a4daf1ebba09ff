//! `codestat`: batch front end for compression-based homogeneity tests,
//! association measures, classification and simulations.
//!
//! Every run writes one JSON report (to stdout or `--out`). Exit status is
//! 0 on success, 2 when a homogeneity test rejects H0 and 1 on any error;
//! errors are printed to stderr as `{"error": {"code", "message"}}`.

mod error;
mod ingest;
mod report;
mod simulate;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use codestat::association::{associate, DEFAULT_CONFIDENCE};
use codestat::classify::{TrainingBank, DEFAULT_RATIO_THRESHOLD};
use codestat::homogeneity::{
    build_sxs, chi_square_sxs, homogeneity_test, ContingencyTable, Decision, SampleGroup,
    SplitPolicy,
};
use codestat::sources::{delta_growth_experiment, error_rate_experiment};
use codestat::{codecs, Alphabet, CompressorSpec, EscapeMethod, Sequence};
use rayon::prelude::*;

use crate::error::{CliError, Result};
use crate::ingest::{Reader, Record, Tokenize};
use crate::report::{
    Payload, QueryResult, ResolvedConfig, RunReport, SelftestCheck, Timings, Tool, SCHEMA_VERSION,
};
use crate::simulate::{Simulation, SimulationConfig};

#[derive(Parser, Debug)]
#[command(name = "codestat", version, about = "Compression-based statistics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Include wall-clock timings (makes reports differ between runs).
    #[arg(long, global = true)]
    timings: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Test whether samples come from the same source. Two inputs give the
    /// 2×2 sign test; three or more give the s×s table test.
    Homogeneity {
        /// One input per group: a directory (one sequence per file) or a
        /// file of delimiter-separated sequences.
        #[arg(required = true, num_args = 2..)]
        inputs: Vec<PathBuf>,
        /// Group labels, comma separated (default: input file names).
        #[arg(long, value_delimiter = ',')]
        labels: Vec<String>,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        #[command(flatten)]
        split: SplitArgs,
        #[command(flatten)]
        codec: CodecArgs,
        #[command(flatten)]
        corpus: CorpusArgs,
    },
    /// Yule's Q and the V coefficient, for a given 2×2 table or for the
    /// sign table of two corpora.
    Associate {
        /// Cell counts n11,n12,n21,n22.
        #[arg(long, value_delimiter = ',', conflicts_with = "inputs")]
        table: Option<Vec<u64>>,
        #[arg(num_args = 2, required_unless_present = "table")]
        inputs: Vec<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_CONFIDENCE)]
        confidence: f64,
        #[command(flatten)]
        split: SplitArgs,
        #[command(flatten)]
        codec: CodecArgs,
        #[command(flatten)]
        corpus: CorpusArgs,
    },
    /// Assign each query sequence to the class whose reference compresses
    /// it best.
    Classify {
        /// Queries: a directory or a delimited file.
        query: PathBuf,
        /// A class as LABEL=PATH; all sequences in PATH are concatenated
        /// into the reference. Repeat for each class.
        #[arg(long = "class", required = true, num_args = 1, value_parser = parse_class)]
        classes: Vec<(String, PathBuf)>,
        /// Warn when |query| / min |reference| exceeds this.
        #[arg(long, default_value_t = DEFAULT_RATIO_THRESHOLD)]
        ratio_threshold: f64,
        #[command(flatten)]
        codec: CodecArgs,
        #[command(flatten)]
        corpus: CorpusArgs,
    },
    /// Run a Monte Carlo experiment described by a TOML file.
    Simulate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Quick internal consistency checks of the built-in backends.
    Selftest,
}

#[derive(Args, Debug)]
struct CodecArgs {
    #[arg(long, value_enum, default_value_t = Backend::Ppm)]
    backend: Backend,
    #[arg(long, default_value_t = 3)]
    ppm_order: usize,
    #[arg(long, value_enum, default_value_t = Escape::C)]
    escape: Escape,
    /// BWT block size in symbols (default: one block).
    #[arg(long)]
    bwt_block: Option<usize>,
    /// Shell command for the external backend; `{input}` is replaced by a
    /// temporary file name, otherwise the data arrives on stdin.
    #[arg(long, required_if_eq("backend", "external"))]
    external_cmd: Option<String>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Backend {
    Lz78,
    Ppm,
    Bwt,
    External,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Escape {
    A,
    C,
    D,
}

impl CodecArgs {
    fn spec(&self) -> Result<CompressorSpec> {
        let spec = match self.backend {
            Backend::Lz78 => CompressorSpec::Lz78,
            Backend::Ppm => CompressorSpec::Ppm {
                order: self.ppm_order,
                escape: match self.escape {
                    Escape::A => EscapeMethod::A,
                    Escape::C => EscapeMethod::C,
                    Escape::D => EscapeMethod::D,
                },
            },
            Backend::Bwt => CompressorSpec::BwtMtf {
                block_size: self.bwt_block,
            },
            Backend::External => CompressorSpec::External {
                command: self.external_cmd.clone().unwrap_or_default(),
            },
        };
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Args, Debug)]
struct CorpusArgs {
    #[arg(long, value_enum, default_value_t = Tokenize::Bytes)]
    tokenize: Tokenize,
    /// Vocabulary size for word tokens; rarer words share one symbol.
    #[arg(long, default_value_t = 5000)]
    vocab_cap: usize,
    /// Record separator inside a file (escapes \n, \t and \0 allowed).
    #[arg(long, default_value = "\\n")]
    delimiter: String,
}

impl CorpusArgs {
    fn delimiter_bytes(&self) -> Vec<u8> {
        self.delimiter
            .replace("\\n", "\n")
            .replace("\\t", "\t")
            .replace("\\0", "\0")
            .into_bytes()
    }

    fn resolve(&self, config: &mut ResolvedConfig) {
        config.tokenize = Some(self.tokenize);
        config.vocab_cap = Some(self.vocab_cap);
        config.delimiter = Some(self.delimiter.clone());
    }
}

#[derive(Args, Debug)]
struct SplitArgs {
    /// How each group is split into reference and held-out halves.
    #[arg(long, value_enum, default_value_t = SplitMode::First)]
    split: SplitMode,
    /// Seed for `--split random`.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SplitMode {
    First,
    Random,
}

impl SplitArgs {
    fn policy(&self) -> SplitPolicy {
        match self.split {
            SplitMode::First => SplitPolicy::FirstHalf,
            SplitMode::Random => SplitPolicy::SeededRandom { seed: self.seed },
        }
    }
}

fn parse_class(s: &str) -> std::result::Result<(String, PathBuf), String> {
    match s.split_once('=') {
        Some((label, path)) if !label.is_empty() && !path.is_empty() => {
            Ok((label.to_string(), PathBuf::from(path)))
        }
        _ => Err(format!("expected LABEL=PATH, got {s:?}")),
    }
}

fn label_of(path: &Path) -> String {
    path.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

/// What a subcommand produced, before the common envelope is added.
struct Outcome {
    config: ResolvedConfig,
    reader: Reader,
    payload: Payload,
    ingest_ms: f64,
}

fn elapsed_ms(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

fn load_corpora(
    paths: &[PathBuf],
    corpus: &CorpusArgs,
) -> Result<(Reader, Arc<Alphabet>, Vec<Vec<Sequence>>)> {
    let mut reader = Reader::default();
    let delimiter = corpus.delimiter_bytes();
    let batches: Vec<Vec<Record>> = paths
        .iter()
        .map(|p| reader.records(p, &delimiter))
        .collect::<Result<_>>()?;
    let (alphabet, sequences) = ingest::tokenize_all(&batches, corpus.tokenize, corpus.vocab_cap)?;
    Ok((reader, alphabet, sequences))
}

fn groups_from(
    paths: &[PathBuf],
    labels: &[String],
    corpus: &CorpusArgs,
) -> Result<(Reader, Vec<SampleGroup>)> {
    if !labels.is_empty() && labels.len() != paths.len() {
        return Err(CliError::Usage(format!(
            "{} labels given for {} inputs",
            labels.len(),
            paths.len()
        )));
    }
    let (reader, _, sequences) = load_corpora(paths, corpus)?;
    let groups = sequences
        .into_iter()
        .enumerate()
        .map(|(i, seqs)| {
            let label = labels
                .get(i)
                .cloned()
                .unwrap_or_else(|| label_of(&paths[i]));
            SampleGroup::new(label, seqs).map_err(CliError::from)
        })
        .collect::<Result<_>>()?;
    Ok((reader, groups))
}

fn sign_table_report(
    groups: &[SampleGroup],
    spec: &CompressorSpec,
    alpha: f64,
    policy: SplitPolicy,
) -> Result<codestat::homogeneity::TestReport> {
    Ok(match groups {
        [x, y] => homogeneity_test(x, y, spec, alpha, policy)?,
        _ => {
            let mut report = chi_square_sxs(&build_sxs(groups, spec, policy)?, alpha)?;
            report
                .requirement_warnings
                .extend(groups.iter().filter_map(SampleGroup::length_ratio_warning));
            report
        }
    })
}

fn run_homogeneity(
    inputs: &[PathBuf],
    labels: &[String],
    alpha: f64,
    split: &SplitArgs,
    codec: &CodecArgs,
    corpus: &CorpusArgs,
) -> Result<Outcome> {
    let spec = codec.spec()?;
    let start = Instant::now();
    let (reader, groups) = groups_from(inputs, labels, corpus)?;
    let ingest_ms = elapsed_ms(start);
    let report = sign_table_report(&groups, &spec, alpha, split.policy())?;
    let mut config = ResolvedConfig {
        compressor: Some(spec),
        alpha: Some(alpha),
        split: Some(split.policy()),
        ..Default::default()
    };
    corpus.resolve(&mut config);
    Ok(Outcome {
        config,
        reader,
        payload: Payload::Homogeneity(report),
        ingest_ms,
    })
}

fn run_associate(
    table: Option<&[u64]>,
    inputs: &[PathBuf],
    confidence: f64,
    split: &SplitArgs,
    codec: &CodecArgs,
    corpus: &CorpusArgs,
) -> Result<Outcome> {
    let mut config = ResolvedConfig {
        confidence: Some(confidence),
        ..Default::default()
    };
    let start = Instant::now();
    let (reader, table, ingest_ms) = match table {
        Some(&[a, b, c, d]) => (
            Reader::default(),
            ContingencyTable::two_by_two(a, b, c, d),
            0.0,
        ),
        Some(_) => return Err(CliError::Usage("--table needs exactly 4 counts".into())),
        None => {
            let spec = codec.spec()?;
            let (reader, groups) = groups_from(inputs, &[], corpus)?;
            let ingest_ms = elapsed_ms(start);
            // the alpha level does not affect the table itself
            let report = sign_table_report(&groups, &spec, 0.05, split.policy())?;
            config.compressor = Some(spec);
            config.split = Some(split.policy());
            corpus.resolve(&mut config);
            (reader, report.table, ingest_ms)
        }
    };
    let report = associate(&table, confidence)?;
    Ok(Outcome {
        config,
        reader,
        payload: Payload::Association(report),
        ingest_ms,
    })
}

fn run_classify(
    query: &Path,
    classes: &[(String, PathBuf)],
    ratio_threshold: f64,
    codec: &CodecArgs,
    corpus: &CorpusArgs,
) -> Result<Outcome> {
    let spec = codec.spec()?;
    let start = Instant::now();
    let mut paths = vec![query.to_path_buf()];
    paths.extend(classes.iter().map(|(_, p)| p.clone()));
    let mut reader = Reader::default();
    let delimiter = corpus.delimiter_bytes();
    let batches: Vec<Vec<Record>> = paths
        .iter()
        .map(|p| reader.records(p, &delimiter))
        .collect::<Result<_>>()?;
    let (alphabet, mut sequences) =
        ingest::tokenize_all(&batches, corpus.tokenize, corpus.vocab_cap)?;
    let queries = sequences.remove(0);
    let references = sequences
        .into_iter()
        .zip(classes)
        .map(|(seqs, (label, _))| {
            Ok((
                label.clone(),
                Sequence::concat_all(alphabet.clone(), &seqs)?,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    let ingest_ms = elapsed_ms(start);
    let labels: Vec<String> = references.iter().map(|(l, _)| l.clone()).collect();
    let bank = TrainingBank::new(references, spec.clone())?;
    let prepared = bank.prepare()?;
    let results = queries
        .par_iter()
        .zip(&batches[0])
        .map(|(u, record)| {
            Ok(QueryResult {
                query: record.origin.clone(),
                length: u.len(),
                labels: labels.clone(),
                result: prepared.classify_with_threshold(u, ratio_threshold)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut config = ResolvedConfig {
        compressor: Some(spec),
        ratio_threshold: Some(ratio_threshold),
        ..Default::default()
    };
    corpus.resolve(&mut config);
    reader.warnings.extend(results.iter().filter_map(|r| {
        r.result
            .ratio_warning
            .as_ref()
            .map(|w| format!("{}: {w}", r.query))
    }));
    Ok(Outcome {
        config,
        reader,
        payload: Payload::Classification(results),
        ingest_ms,
    })
}

fn run_simulate(path: &Path) -> Result<Outcome> {
    let start = Instant::now();
    let mut reader = Reader::default();
    let sim = SimulationConfig::load(path)?;
    reader.digest_file(path)?;
    let ingest_ms = elapsed_ms(start);
    let payload = match sim.build()? {
        Simulation::ErrorRate(c) => Payload::ErrorRate(error_rate_experiment(&c)?),
        Simulation::DeltaGrowth(c) => Payload::DeltaGrowth(delta_growth_experiment(&c)?),
    };
    Ok(Outcome {
        config: ResolvedConfig {
            compressor: Some(sim.compressor.clone()),
            simulation: Some(sim),
            ..Default::default()
        },
        reader,
        payload,
        ingest_ms,
    })
}

fn run_selftest() -> Result<Outcome> {
    let binary = Arc::new(Alphabet::binary());
    let mut checks = Vec::new();
    for spec in [
        CompressorSpec::Lz78,
        CompressorSpec::ppm(0),
        CompressorSpec::ppm(3),
        CompressorSpec::bwt(),
    ] {
        for n in 1..=8 {
            let sum = codecs::kraft_sum(&spec, n, binary.clone())?;
            checks.push(SelftestCheck {
                name: format!(
                    "kraft {} n={n}",
                    serde_json::to_string(&spec).unwrap_or_default()
                ),
                value: sum,
                passed: sum <= 1.0 + 1e-9,
            });
        }
    }
    Ok(Outcome {
        config: ResolvedConfig::default(),
        reader: Reader::default(),
        payload: Payload::Selftest(checks),
        ingest_ms: 0.0,
    })
}

fn run(cli: &Cli) -> Result<ExitCode> {
    if let Some(threads) = cli.threads {
        if threads == 0 {
            return Err(CliError::Usage("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| CliError::Usage(e.to_string()))?;
    }
    let start = Instant::now();
    let (command, outcome) = match &cli.command {
        Command::Homogeneity {
            inputs,
            labels,
            alpha,
            split,
            codec,
            corpus,
        } => (
            "homogeneity",
            run_homogeneity(inputs, labels, *alpha, split, codec, corpus)?,
        ),
        Command::Associate {
            table,
            inputs,
            confidence,
            split,
            codec,
            corpus,
        } => (
            "associate",
            run_associate(table.as_deref(), inputs, *confidence, split, codec, corpus)?,
        ),
        Command::Classify {
            query,
            classes,
            ratio_threshold,
            codec,
            corpus,
        } => (
            "classify",
            run_classify(query, classes, *ratio_threshold, codec, corpus)?,
        ),
        Command::Simulate { config } => ("simulate", run_simulate(config)?),
        Command::Selftest => ("selftest", run_selftest()?),
    };
    let total_ms = elapsed_ms(start);
    let exit = match &outcome.payload {
        Payload::Homogeneity(r) if r.decision == Decision::RejectH0 => ExitCode::from(2),
        Payload::Selftest(checks) if checks.iter().any(|c| !c.passed) => ExitCode::FAILURE,
        _ => ExitCode::SUCCESS,
    };
    let report = RunReport {
        schema_version: SCHEMA_VERSION,
        tool: Tool::default(),
        command: command.into(),
        config: outcome.config,
        inputs: outcome.reader.digests,
        warnings: outcome.reader.warnings,
        result: outcome.payload,
        timings: cli.timings.then_some(Timings {
            ingest_ms: outcome.ingest_ms,
            analysis_ms: total_ms - outcome.ingest_ms,
        }),
    };
    let mut text =
        serde_json::to_string_pretty(&report).map_err(|e| CliError::Output(e.to_string()))?;
    text.push('\n');
    match &cli.out {
        Some(path) => std::fs::write(path, text).map_err(|e| CliError::io(path, e))?,
        None => print!("{text}"),
    }
    Ok(exit)
}

fn print_error(code: &str, message: &str) {
    let body = serde_json::json!({ "error": { "code": code, "message": message } });
    eprintln!("{body}");
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            print_error("E_USAGE", e.to_string().trim());
            return ExitCode::FAILURE;
        }
    };
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            print_error(e.code(), &e.to_string());
            ExitCode::FAILURE
        }
    }
}
