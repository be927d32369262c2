use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use hlta::corpus::{self, CorpusFormat, RawCorpus};
use hlta::{BinaryDataset, Bits, LatentTreeModel, Vocabulary};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InputFormat {
    /// Directory of whitespace-tokenized text files.
    PlainDir,
    /// UCI bag-of-words triples with a vocab sidecar.
    UciBow,
    /// Binary dataset file as written by this tool.
    Dataset,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CorpusArg {
    PlainDir,
    UciBow,
}

impl From<CorpusArg> for CorpusFormat {
    fn from(f: CorpusArg) -> Self {
        match f {
            CorpusArg::PlainDir => CorpusFormat::PlainDir,
            CorpusArg::UciBow => CorpusFormat::UciBow,
        }
    }
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// Corpus directory, UCI docword file, or dataset file.
    pub data: PathBuf,

    #[arg(long, value_enum, default_value = "dataset")]
    pub format: InputFormat,

    /// Vocabulary file, one word per line.
    #[arg(long)]
    pub vocab: Option<PathBuf>,
}

pub struct Input {
    pub data: BinaryDataset,
    /// Document ids and bits over `data`'s variables, for corpus inputs.
    pub docs: Option<Vec<(String, Bits)>>,
}

pub fn read_vocabulary(path: &Path) -> Result<Vocabulary, CliError> {
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    Ok(Vocabulary::read_from(BufReader::new(file))?)
}

pub fn read_model(path: &Path) -> Result<LatentTreeModel, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    Ok(LatentTreeModel::from_text(&text)?)
}

pub fn read_corpus(path: &Path, format: CorpusFormat) -> Result<RawCorpus, CliError> {
    if !path.exists() {
        return Err(CliError::io(path, std::io::ErrorKind::NotFound.into()));
    }
    Ok(corpus::load_corpus(path, format)?)
}

/// Load `args`, building the vocabulary of a raw corpus with `fallback`
/// unless a vocabulary file was given.
pub fn load(
    args: &DataArgs,
    fallback: impl FnOnce(&RawCorpus) -> Result<Vocabulary, CliError>,
) -> Result<Input, CliError> {
    let vocab = args.vocab.as_deref().map(read_vocabulary).transpose()?;
    let format = match args.format {
        InputFormat::PlainDir => CorpusFormat::PlainDir,
        InputFormat::UciBow => CorpusFormat::UciBow,
        InputFormat::Dataset => {
            let file = File::open(&args.data).map_err(|e| CliError::io(&args.data, e))?;
            let data = BinaryDataset::read_from(BufReader::new(file))?;
            let data = match vocab {
                Some(v) => data.project(v.words())?,
                None => data,
            };
            return Ok(Input { data, docs: None });
        }
    };
    let raw = read_corpus(&args.data, format)?;
    let vocab = match vocab {
        Some(v) => v,
        None => fallback(&raw)?,
    };
    let data = corpus::binarize(&raw, &vocab)?;
    Ok(Input { data, docs: Some(corpus::document_bits(&raw, &vocab)) })
}

/// Load data for an existing model: raw corpora are binarized over the
/// model's words, and every input is restricted to the words the model has.
pub fn load_for_model(args: &DataArgs, model: &LatentTreeModel) -> Result<Input, CliError> {
    let words = model.observed_names();
    let input = load(args, |_| Ok(Vocabulary::new(words.clone())?))?;
    let keep: Vec<usize> = words.iter().filter_map(|w| input.data.column(w)).collect();
    if keep.is_empty() {
        return Err(hlta::Error::VariableMismatch("none of the model's words occur in the data".into()).into());
    }
    let data = input.data.project_columns(&keep)?;
    let docs = input.docs.map(|docs| docs.into_iter().map(|(id, bits)| (id, bits.select(&keep))).collect());
    Ok(Input { data, docs })
}
