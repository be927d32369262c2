use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use clap::Args;
use hlta::corpus::select_vocabulary;
use hlta::inference::{brute_force_joint, row_posteriors};
use hlta::structure::{pem_hlta, HltaOptions};
use hlta::topics::{
    coherence, extract_topics, heldout_loglik, independent_baseline, RenderFormat, DEFAULT_COHERENCE_M,
    DEFAULT_WORDS_PER_TOPIC,
};
use hlta::{BinaryDataset, Bits};
use serde::Serialize;

use crate::input::{load, load_for_model, read_corpus, read_model, CorpusArg, DataArgs};
use crate::report::{Heldout, RunReport};
use crate::{emit, CliError, OutputFormat};

#[derive(Debug, Args)]
pub struct VocabArgs {
    /// Corpus directory or UCI docword file.
    pub corpus: PathBuf,
    #[arg(long, value_enum, default_value = "plain-dir")]
    pub format: CorpusArg,
    /// Number of words to keep.
    #[arg(long, default_value_t = 1000, value_parser = clap::value_parser!(u64).range(1..))]
    pub size: u64,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

pub fn vocab(args: VocabArgs) -> Result<(), CliError> {
    let raw = read_corpus(&args.corpus, args.format.into())?;
    let vocab = select_vocabulary(&raw, args.size as usize)?;
    emit(args.output.as_deref(), &vocab.to_text())
}

#[derive(Debug, Args)]
pub struct BinarizeArgs {
    #[command(flatten)]
    pub input: DataArgs,
    /// Vocabulary size when a raw corpus is given without --vocab.
    #[arg(long, default_value_t = 1000, value_parser = clap::value_parser!(u64).range(1..))]
    pub vocab_size: u64,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

pub fn binarize(args: BinarizeArgs) -> Result<(), CliError> {
    let size = args.vocab_size as usize;
    let input = load(&args.input, |raw| Ok(select_vocabulary(raw, size)?))?;
    emit(args.output.as_deref(), &input.data.to_text())
}

#[derive(Debug, Args)]
pub struct LearnArgs {
    #[command(flatten)]
    pub input: DataArgs,
    /// Vocabulary size when a raw corpus is given without --vocab.
    #[arg(long, default_value_t = 1000, value_parser = clap::value_parser!(u64).range(1..))]
    pub vocab_size: u64,
    /// Stop once a level has fewer islands than this.
    #[arg(long, default_value_t = 30, value_parser = clap::value_parser!(u64).range(1..))]
    pub tau: u64,
    /// UD-test threshold.
    #[arg(long, default_value_t = 3.0)]
    pub delta: f64,
    /// EM steps on the final model.
    #[arg(long, default_value_t = 50)]
    pub kappa: usize,
    /// Learn structure on the first batch and run one stochastic EM sweep over all.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    pub batches: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    pub max_levels: Option<u32>,
    /// Hold out this fraction of documents and report their likelihood.
    #[arg(long)]
    pub test_fraction: Option<f64>,
    /// Model file to write.
    #[arg(short, long)]
    pub output: PathBuf,
    /// Report file (stdout when omitted).
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "text")]
    pub report_format: OutputFormat,
    /// Leave wall-clock timings and the timestamp out of the report.
    #[arg(long)]
    pub no_timestamp: bool,
}

fn split(data: &BinaryDataset, test_fraction: Option<f64>, seed: u64) -> Result<Option<(BinaryDataset, BinaryDataset)>, CliError> {
    match test_fraction {
        None => Ok(None),
        Some(f) if f > 0.0 && f < 1.0 => Ok(Some(data.split(1.0 - f, seed)?)),
        Some(f) => Err(CliError::Usage(format!("--test-fraction must lie strictly between 0 and 1, got {f}"))),
    }
}

pub fn learn(args: LearnArgs) -> Result<(), CliError> {
    if !args.delta.is_finite() {
        return Err(CliError::Usage("--delta must be finite".into()));
    }
    let size = args.vocab_size as usize;
    let input = load(&args.input, |raw| Ok(select_vocabulary(raw, size)?))?;
    let parts = split(&input.data, args.test_fraction, args.seed)?;
    let train = parts.as_ref().map_or(&input.data, |(train, _)| train);
    if args.batches > train.total_weight() {
        return Err(CliError::Usage(format!("--batches {} exceeds the {} training documents", args.batches, train.total_weight())));
    }
    let opts = HltaOptions {
        tau: args.tau as usize,
        delta: args.delta,
        kappa: args.kappa,
        max_levels: args.max_levels,
        batches: args.batches as usize,
        seed: args.seed,
        ..HltaOptions::default()
    };
    let outcome = pem_hlta(train, &opts)?;
    emit(Some(&args.output), &outcome.model.to_text())?;

    let mut report =
        RunReport::new(&outcome.report, args.seed, train.total_weight(), train.num_variables(), !args.no_timestamp);
    if let Some((train, test)) = &parts {
        report.heldout = Some(Heldout {
            documents: test.total_weight(),
            loglik: heldout_loglik(&outcome.model, test)?,
            baseline: independent_baseline(train, test)?,
        });
    }
    let text = match args.report_format {
        OutputFormat::Text => report.to_text(),
        OutputFormat::Json => report.to_json(),
    };
    emit(args.report.as_deref(), &text)
}

#[derive(Debug, Args)]
pub struct TopicsArgs {
    pub model: PathBuf,
    #[command(flatten)]
    pub input: DataArgs,
    /// Words listed per topic.
    #[arg(long, default_value_t = DEFAULT_WORDS_PER_TOPIC, value_parser = clap::builder::RangedU64ValueParser::<usize>::new().range(1..))]
    pub words: usize,
    #[arg(long, value_enum, default_value = "text")]
    pub output_format: OutputFormat,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

pub fn topics(args: TopicsArgs) -> Result<(), CliError> {
    let model = read_model(&args.model)?;
    let input = load_for_model(&args.input, &model)?;
    let hierarchy = extract_topics(&model, &input.data, args.words)?;
    let format = match args.output_format {
        OutputFormat::Text => RenderFormat::Text,
        OutputFormat::Json => RenderFormat::Json,
    };
    emit(args.output.as_deref(), &hierarchy.render(format))
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    pub model: PathBuf,
    #[command(flatten)]
    pub input: DataArgs,
    /// Evaluate on this held-out fraction; the rest fits the baseline.
    #[arg(long)]
    pub test_fraction: Option<f64>,
    /// Top words per topic used for coherence.
    #[arg(long = "coherence-m", default_value_t = DEFAULT_COHERENCE_M)]
    pub coherence_m: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value = "text")]
    pub output_format: OutputFormat,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
struct Metrics {
    format: &'static str,
    version: u32,
    documents: u64,
    coherence: hlta::topics::CoherenceReport,
    heldout_loglik: f64,
    baseline_loglik: f64,
}

pub fn eval(args: EvalArgs) -> Result<(), CliError> {
    if args.coherence_m < 2 {
        return Err(CliError::Usage("--coherence-m must be at least 2".into()));
    }
    let model = read_model(&args.model)?;
    let input = load_for_model(&args.input, &model)?;
    let parts = split(&input.data, args.test_fraction, args.seed)?;
    let (train, test) = parts.as_ref().map_or((&input.data, &input.data), |(a, b)| (a, b));
    let hierarchy = extract_topics(&model, test, args.coherence_m)?;
    let metrics = Metrics {
        format: "hlta-metrics",
        version: 1,
        documents: test.total_weight(),
        coherence: coherence(&hierarchy, test, args.coherence_m)?,
        heldout_loglik: heldout_loglik(&model, test)?,
        baseline_loglik: independent_baseline(train, test)?,
    };
    let text = match args.output_format {
        OutputFormat::Json => serde_json::to_string_pretty(&metrics).expect("metrics always serialize") + "\n",
        OutputFormat::Text => {
            let mut out = String::new();
            let _ = writeln!(out, "documents: {}", metrics.documents);
            let _ = writeln!(out, "topics: {}", metrics.coherence.per_topic.len());
            let _ = writeln!(out, "average coherence (M={}): {:.6}", metrics.coherence.m, metrics.coherence.average);
            let _ = writeln!(out, "held-out loglik per doc: {:.6}", metrics.heldout_loglik);
            let _ = writeln!(out, "independent baseline per doc: {:.6}", metrics.baseline_loglik);
            if !metrics.coherence.flagged.is_empty() {
                let _ = writeln!(out, "topics with unseen words: {}", metrics.coherence.flagged.join(" "));
            }
            out
        }
    };
    emit(args.output.as_deref(), &text)
}

#[derive(Debug, Args)]
pub struct AssignArgs {
    pub model: PathBuf,
    #[command(flatten)]
    pub input: DataArgs,
    /// Latent level to assign (defaults to the top level).
    #[arg(long)]
    pub level: Option<u32>,
    #[arg(long, value_enum, default_value = "text")]
    pub output_format: OutputFormat,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
struct Assignment {
    id: String,
    weight: u64,
    states: Vec<usize>,
}

#[derive(Debug, Serialize)]
struct AssignmentTable {
    format: &'static str,
    version: u32,
    level: u32,
    latents: Vec<String>,
    rows: Vec<Assignment>,
}

pub fn assign(args: AssignArgs) -> Result<(), CliError> {
    let model = read_model(&args.model)?;
    let level = args.level.unwrap_or_else(|| model.top_level());
    let latents = model.latents_at_level(level);
    if level == 0 || latents.is_empty() {
        return Err(CliError::Usage(format!("model has no latent variables at level {level}")));
    }
    let input = load_for_model(&args.input, &model)?;
    let posteriors = row_posteriors(&model, &input.data, &latents)?;
    let states: Vec<Vec<usize>> =
        posteriors.iter().map(|row| row.iter().map(|p| usize::from(p[1] > p[0])).collect()).collect();
    let rows = match &input.docs {
        Some(docs) => {
            let index: HashMap<&Bits, usize> = input.data.rows().iter().enumerate().map(|(i, r)| (&r.bits, i)).collect();
            docs.iter()
                .map(|(id, bits)| Assignment { id: id.clone(), weight: 1, states: states[index[bits]].clone() })
                .collect()
        }
        None => input
            .data
            .rows()
            .iter()
            .zip(&states)
            .enumerate()
            .map(|(i, (r, s))| Assignment { id: format!("row{}", i + 1), weight: r.weight, states: s.clone() })
            .collect(),
    };
    let table = AssignmentTable {
        format: "hlta-assignment",
        version: 1,
        level,
        latents: latents.iter().map(|&v| model.name(v).to_string()).collect(),
        rows,
    };
    let text = match args.output_format {
        OutputFormat::Json => serde_json::to_string_pretty(&table).expect("assignments always serialize") + "\n",
        OutputFormat::Text => {
            let mut out = format!("id\tweight\t{}\n", table.latents.join("\t"));
            for row in &table.rows {
                let states: Vec<String> = row.states.iter().map(|s| s.to_string()).collect();
                let _ = writeln!(out, "{}\t{}\t{}", row.id, row.weight, states.join("\t"));
            }
            out
        }
    };
    emit(args.output.as_deref(), &text)
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    pub model: PathBuf,
}

pub fn validate(args: ValidateArgs) -> Result<(), CliError> {
    match read_model(&args.model) {
        Ok(model) => {
            let latents = model.latents().count();
            emit(
                None,
                &format!(
                    "ok: {} variables, {} observed, {} latent, {} levels\n",
                    model.len(),
                    model.len() - latents,
                    latents,
                    model.top_level()
                ),
            )
        }
        Err(CliError::Data(hlta::Error::InvalidModel(violations))) => {
            for v in &violations {
                eprintln!("{v}");
            }
            Err(hlta::Error::InvalidModel(violations).into())
        }
        Err(e) => Err(e),
    }
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    pub model: PathBuf,
    #[arg(long, value_enum, default_value = "text")]
    pub output_format: OutputFormat,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
struct Joint<'a> {
    format: &'static str,
    version: u32,
    variables: &'a [String],
    cardinalities: &'a [usize],
    probabilities: &'a [f64],
}

pub fn oracle(args: OracleArgs) -> Result<(), CliError> {
    let model = read_model(&args.model)?;
    let joint = brute_force_joint(&model)?;
    let text = match args.output_format {
        OutputFormat::Json => {
            let doc = Joint {
                format: "hlta-joint",
                version: 1,
                variables: &joint.variables,
                cardinalities: &joint.cardinalities,
                probabilities: &joint.probabilities,
            };
            serde_json::to_string_pretty(&doc).expect("joints always serialize") + "\n"
        }
        OutputFormat::Text => {
            let mut out = format!("{}\tprobability\n", joint.variables.join("\t"));
            for (i, p) in joint.probabilities.iter().enumerate() {
                let config: Vec<String> = joint.config_of(i).iter().map(|s| s.to_string()).collect();
                let _ = writeln!(out, "{}\t{p:.16e}", config.join("\t"));
            }
            out
        }
    };
    emit(args.output.as_deref(), &text)
}
