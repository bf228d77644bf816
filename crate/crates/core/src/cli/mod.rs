//! The `pipdim` command-line tool.

pub mod matrix_file;
pub mod report;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::corpus::{build_vocab, cooc_count, split_corpus, tokenize, DEFAULT_CHUNK_SIZE, DEFAULT_WINDOW};
use crate::error::{Error, Result};
use crate::estimate::{estimate_noise, estimate_spectrum, Spectrum};
use crate::exec::Exec;
use crate::linalg::{factorize, pip_distance, Embedding};
use crate::montecarlo::{mc_curve, MonteCarloConfig, PipCurve, DEFAULT_SAMPLES};
use crate::select::{select_dimension, stability_matrix};
use crate::theory::{BoundSweep, GapPolicy};
use crate::transforms::{transform, SignalMatrix, TransformKind, TransformParams};

use matrix_file::{read_matrix, write_matrix, write_vocab};
use report::{EstimateFile, ReportFile, SpectrumInput, SCHEMA_VERSION};

#[derive(Debug, Parser)]
#[command(name = "pipdim", version, about = "Select embedding dimensionality by minimizing the PIP loss")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Count window co-occurrences of a whitespace-tokenized corpus.
    Cooc(CoocArgs),
    /// Estimate the noise level and clean spectrum of a transformed count matrix.
    Estimate(EstimateArgs),
    /// Choose a dimensionality from a spectrum and noise level.
    Select(SelectArgs),
    /// Print the PIP distance between two embedding files.
    Pipdist(PipdistArgs),
    /// Write the NSR grid between two directories of embeddings.
    Stability(StabilityArgs),
    /// Factorize a matrix file into embedding files.
    Embed(EmbedArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct CoocArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long, default_value_t = 10_000)]
    pub vocab_size: usize,
    #[arg(long, default_value_t = DEFAULT_WINDOW)]
    pub window: usize,
    #[arg(long)]
    pub out: PathBuf,
    /// Vocabulary sidecar; defaults to the output path with a `.vocab` extension.
    #[arg(long)]
    pub vocab_out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct EstimateArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    /// One of pmi, ppmi, sppmi, log_count, raw.
    #[arg(long, default_value = "ppmi")]
    pub transform: String,
    #[arg(long, default_value_t = 10_000)]
    pub vocab_size: usize,
    #[arg(long, default_value_t = DEFAULT_WINDOW)]
    pub window: usize,
    /// Tokens per chunk when splitting the corpus in two.
    #[arg(long, default_value_t = DEFAULT_CHUNK_SIZE)]
    pub chunk_size: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Negative-sample count for sppmi.
    #[arg(long)]
    pub negative_samples: Option<f64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectMethod {
    Bound,
    Montecarlo,
}

#[derive(Debug, Args, Serialize)]
pub struct SelectArgs {
    /// Spectrum JSON (as written by `estimate`) or an inline comma-separated list.
    #[arg(long)]
    pub spectrum: String,
    /// Noise level; overrides the value in the spectrum file.
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Ambient dimension; defaults to the file's value or the list length.
    #[arg(long)]
    pub ambient: Option<usize>,
    #[arg(long, default_value_t = 0.5)]
    pub alpha: f64,
    #[arg(long, value_enum, default_value_t = SelectMethod::Montecarlo)]
    pub method: SelectMethod,
    #[arg(long, default_value_t = DEFAULT_SAMPLES)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_delimiter = ',', default_value = "5,10,20,50")]
    pub p: Vec<f64>,
    /// Simulate a symmetric signal and symmetric noise.
    #[arg(long)]
    pub symmetric: bool,
    /// Floor tied spectral gaps instead of excluding the affected k.
    #[arg(long)]
    pub clamp_gaps: bool,
    /// Report path; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct PipdistArgs {
    #[arg(long)]
    pub e1: PathBuf,
    #[arg(long)]
    pub e2: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct StabilityArgs {
    #[arg(long)]
    pub dir1: PathBuf,
    #[arg(long)]
    pub dir2: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
#[command(group = clap::ArgGroup::new("target").required(true).args(["out", "out_dir"]))]
pub struct EmbedArgs {
    #[arg(long)]
    pub matrix: PathBuf,
    #[arg(long, default_value_t = 0.5)]
    pub alpha: f64,
    /// Dimensionalities, comma-separated.
    #[arg(long, value_delimiter = ',', required = true)]
    pub k: Vec<usize>,
    /// Output file; only valid with a single k.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Directory receiving one `<k>.mat` per dimensionality.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

/// Runs a parsed command. Results go to `out`, warnings to `warn`.
pub fn run(command: &Command, out: &mut dyn Write, warn: &mut dyn Write) -> Result<()> {
    match command {
        Command::Cooc(args) => cmd_cooc(args),
        Command::Estimate(args) => cmd_estimate(args, warn),
        Command::Select(args) => cmd_select(args, out, warn),
        Command::Pipdist(args) => cmd_pipdist(args, out),
        Command::Stability(args) => cmd_stability(args, warn),
        Command::Embed(args) => cmd_embed(args),
    }
}

fn stdio(path: &Path, e: std::io::Error) -> Error {
    Error::io(path, e)
}

fn emit_warnings(warn: &mut dyn Write, warnings: &[String]) {
    for w in warnings {
        let _ = writeln!(warn, "warning: {w}");
    }
}

fn config_echo<T: Serialize>(args: &T) -> serde_json::Value {
    serde_json::to_value(args).expect("arguments serialize to JSON")
}

fn read_tokens(path: &Path) -> Result<String> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    if tokenize(&text).is_empty() {
        return Err(Error::Data(format!("{}: corpus is empty", path.display())));
    }
    Ok(text)
}

fn cmd_cooc(args: &CoocArgs) -> Result<()> {
    if args.vocab_size == 0 {
        return Err(Error::InvalidArgument("vocabulary size must be at least 1".into()));
    }
    let text = read_tokens(&args.corpus)?;
    let tokens = tokenize(&text);
    let vocab = build_vocab(&tokens, args.vocab_size);
    let counts = cooc_count(&tokens, &vocab, args.window)?;
    write_matrix(&args.out, &counts.counts)?;
    let vocab_path = args.vocab_out.clone().unwrap_or_else(|| args.out.with_extension("vocab"));
    write_vocab(&vocab_path, &vocab)
}

fn cmd_estimate(args: &EstimateArgs, warn: &mut dyn Write) -> Result<()> {
    let kind: TransformKind = args.transform.parse()?;
    if matches!(kind, TransformKind::Tf | TransformKind::TfIdf) {
        return Err(Error::InvalidArgument(format!(
            "{kind} needs term-document counts; estimate works on co-occurrence counts"
        )));
    }
    if args.vocab_size == 0 {
        return Err(Error::InvalidArgument("vocabulary size must be at least 1".into()));
    }
    let params = TransformParams {
        negative_samples: args.negative_samples,
    };
    let text = read_tokens(&args.corpus)?;
    let tokens = tokenize(&text);
    let vocab = build_vocab(&tokens, args.vocab_size);
    let (first, second) = split_corpus(&tokens, args.chunk_size, args.seed)?;
    let mut warnings = Vec::new();
    if first.is_empty() || second.is_empty() {
        return Err(Error::Data(format!(
            "corpus of {} tokens does not fill two halves at chunk size {}",
            tokens.len(),
            args.chunk_size
        )));
    }
    let half = |part: &[&str]| -> Result<SignalMatrix> {
        let counts = cooc_count(part, &vocab, args.window)?;
        transform(&counts, kind, params)
    };
    let noise = estimate_noise(&half(&first)?, &half(&second)?)?.with_split_seed(args.seed);
    let full = transform(&cooc_count(&tokens, &vocab, args.window)?, kind, params)?;
    let spectrum = estimate_spectrum(&full, noise.sigma)?;
    if spectrum.rank() == 0 {
        warnings.push("thresholding removed every singular value; the spectrum has rank 0".into());
    }
    let doc = EstimateFile {
        version: SCHEMA_VERSION,
        transform: kind.name().to_owned(),
        sigma: noise.sigma,
        spectrum: spectrum.values().to_vec(),
        rank_d: spectrum.rank(),
        ambient: spectrum.ambient(),
        config: config_echo(args),
        warnings,
    };
    emit_warnings(warn, &doc.warnings);
    let json = serde_json::to_string_pretty(&doc)?;
    fs::write(&args.out, json + "\n").map_err(|e| stdio(&args.out, e))
}

/// Reads `--spectrum` as a JSON file if it names one, else as an inline list.
fn load_spectrum(arg: &str) -> Result<SpectrumInput> {
    let path = Path::new(arg);
    if path.is_file() {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        return serde_json::from_str(&text).map_err(|e| Error::Parse {
            path: path.to_owned(),
            line: e.line(),
            message: e.to_string(),
        });
    }
    let spectrum = arg
        .split(',')
        .map(|v| v.trim().parse::<f64>())
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|_| {
            Error::InvalidArgument(format!(
                "--spectrum {arg:?} is neither a readable file nor a comma-separated list of numbers"
            ))
        })?;
    Ok(SpectrumInput {
        spectrum,
        sigma: None,
        ambient: None,
        transform: None,
    })
}

fn cmd_select(args: &SelectArgs, out: &mut dyn Write, warn: &mut dyn Write) -> Result<()> {
    let input = load_spectrum(&args.spectrum)?;
    let sigma = args
        .sigma
        .or(input.sigma)
        .ok_or_else(|| Error::InvalidArgument("--sigma is required when the spectrum carries none".into()))?;
    let ambient = args.ambient.or(input.ambient).unwrap_or(input.spectrum.len());
    let spectrum = Spectrum::new(input.spectrum, ambient).map_err(|e| match e {
        Error::InvalidArgument(m) => Error::Data(m),
        other => other,
    })?;
    if spectrum.rank() == 0 {
        return Err(Error::Data("spectrum has no positive values".into()));
    }
    let mut warnings = Vec::new();
    let curve = match args.method {
        SelectMethod::Bound => {
            let policy = if args.clamp_gaps {
                GapPolicy::clamped()
            } else {
                GapPolicy::Strict
            };
            let sweep = BoundSweep::new(&spectrum, sigma, args.alpha, policy)?;
            let excluded = sweep.excluded();
            if !excluded.is_empty() {
                // Surfaces the degenerate-gap error when nothing is left.
                if sweep.valid().is_empty() {
                    sweep.at(1)?;
                }
                warnings.push(format!(
                    "tied singular values: k = {}..={} excluded from the bound curve",
                    excluded.start(),
                    excluded.end()
                ));
            }
            PipCurve::from_bounds(&sweep, &spectrum, sigma, args.alpha)
        }
        SelectMethod::Montecarlo => {
            let config = MonteCarloConfig {
                samples: args.samples,
                base_seed: args.seed,
                symmetric: args.symmetric,
                exec: Exec::Parallel,
            };
            mc_curve(&spectrum, sigma, args.alpha, &config)?
        }
    };
    let report = select_dimension(&curve, &args.p)?;
    let doc = ReportFile::new(&report, &spectrum, input.transform, config_echo(args), warnings);
    emit_warnings(warn, &doc.warnings);
    let json = serde_json::to_string_pretty(&doc)? + "\n";
    match &args.out {
        Some(path) => fs::write(path, json).map_err(|e| stdio(path, e)),
        None => out
            .write_all(json.as_bytes())
            .map_err(|e| stdio(Path::new("<stdout>"), e)),
    }
}

fn cmd_pipdist(args: &PipdistArgs, out: &mut dyn Write) -> Result<()> {
    let e1 = read_matrix(&args.e1)?;
    let e2 = read_matrix(&args.e2)?;
    let d = pip_distance(e1.view(), e2.view())?;
    writeln!(out, "{d:.16e}").map_err(|e| stdio(Path::new("<stdout>"), e))
}

/// `<dim>.mat` files of a directory, sorted by dimensionality.
fn embedding_dir(dir: &Path, warn: &mut dyn Write) -> Result<Vec<Embedding>> {
    let mut found = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if !path.is_file() {
            continue;
        }
        let dim = (path.extension().and_then(|e| e.to_str()) == Some("mat"))
            .then(|| path.file_stem().and_then(|s| s.to_str()).and_then(|s| s.parse::<usize>().ok()))
            .flatten();
        match dim {
            Some(dim) => found.push((dim, path)),
            None => emit_warnings(warn, &[format!("skipping {}: not named <dim>.mat", path.display())]),
        }
    }
    found.sort();
    if found.is_empty() {
        return Err(Error::Data(format!("{}: no <dim>.mat files", dir.display())));
    }
    found
        .into_iter()
        .map(|(dim, path)| {
            let values = read_matrix(&path)?;
            if values.ncols() != dim {
                emit_warnings(
                    warn,
                    &[format!("{} holds {} columns", path.display(), values.ncols())],
                );
            }
            Ok(Embedding::new(values))
        })
        .collect()
}

fn cmd_stability(args: &StabilityArgs, warn: &mut dyn Write) -> Result<()> {
    let run1 = embedding_dir(&args.dir1, warn)?;
    let run2 = embedding_dir(&args.dir2, warn)?;
    let grid = stability_matrix(&run1, &run2, Exec::Parallel);
    for (i, j, reason) in &grid.missing {
        emit_warnings(
            warn,
            &[format!("nsr({}, {}) unavailable: {reason}", grid.dims1[*i], grid.dims2[*j])],
        );
    }
    let mut csv = String::from("dim");
    for d in &grid.dims2 {
        csv.push_str(&format!(",{d}"));
    }
    csv.push('\n');
    for (i, d) in grid.dims1.iter().enumerate() {
        csv.push_str(&d.to_string());
        for v in grid.nsr.row(i) {
            csv.push_str(&format!(",{v:.16e}"));
        }
        csv.push('\n');
    }
    fs::write(&args.out, csv).map_err(|e| stdio(&args.out, e))
}

fn cmd_embed(args: &EmbedArgs) -> Result<()> {
    let m = SignalMatrix::raw(read_matrix(&args.matrix)?);
    match (&args.out, &args.out_dir) {
        (Some(path), None) => {
            let [k] = args.k[..] else {
                return Err(Error::InvalidArgument("--out takes a single k; use --out-dir".into()));
            };
            write_matrix(path, &factorize(&m, args.alpha, k)?.values)
        }
        (None, Some(dir)) => {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
            for &k in &args.k {
                write_matrix(&dir.join(format!("{k}.mat")), &factorize(&m, args.alpha, k)?.values)?;
            }
            Ok(())
        }
        _ => Err(Error::InvalidArgument("exactly one of --out and --out-dir is required".into())),
    }
}
