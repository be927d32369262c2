//! Document ingestion, vocabulary selection and binary datasets.

mod bits;
mod dataset;

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};
use std::str::FromStr;

pub use bits::Bits;
pub use dataset::{BinaryDataset, Row};

use crate::error::{Error, Result};

/// Ordered list of distinct words.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    words: Vec<String>,
    index: HashMap<String, usize>,
}

impl Vocabulary {
    pub fn new(words: Vec<String>) -> Result<Self> {
        let mut index = HashMap::with_capacity(words.len());
        for (i, w) in words.iter().enumerate() {
            if w.is_empty() || w.contains(char::is_whitespace) {
                return Err(Error::precondition(format!("invalid vocabulary word `{w}`")));
            }
            if index.insert(w.clone(), i).is_some() {
                return Err(Error::precondition(format!("duplicate vocabulary word `{w}`")));
            }
        }
        Ok(Vocabulary { words, index })
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn position(&self, word: &str) -> Option<usize> {
        self.index.get(word).copied()
    }

    /// One word per line; blank lines are skipped.
    pub fn read_from(r: impl BufRead) -> Result<Self> {
        let mut words = Vec::new();
        for line in r.lines() {
            let line = line?;
            let word = line.trim();
            if !word.is_empty() {
                words.push(word.to_string());
            }
        }
        Self::new(words)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for w in &self.words {
            out.push_str(w);
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    pub id: String,
    pub counts: BTreeMap<String, u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RawCorpus {
    docs: Vec<Document>,
}

impl RawCorpus {
    pub fn new(docs: Vec<Document>) -> Result<Self> {
        let mut seen = HashSet::new();
        for d in &docs {
            if !seen.insert(d.id.as_str()) {
                return Err(Error::precondition(format!("duplicate document id `{}`", d.id)));
            }
            if d.counts.values().any(|&c| c == 0) {
                return Err(Error::precondition(format!("zero count in document `{}`", d.id)));
            }
        }
        Ok(RawCorpus { docs })
    }

    pub fn docs(&self) -> &[Document] {
        &self.docs
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorpusFormat {
    /// Directory of whitespace-tokenized text files, one document per file.
    PlainDir,
    /// UCI bag-of-words triples with a sidecar vocabulary file.
    UciBow,
}

impl FromStr for CorpusFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "plain-dir" => Ok(CorpusFormat::PlainDir),
            "uci-bow" => Ok(CorpusFormat::UciBow),
            other => Err(Error::precondition(format!("unknown corpus format `{other}`"))),
        }
    }
}

pub fn load_corpus(path: &Path, format: CorpusFormat) -> Result<RawCorpus> {
    let corpus = match format {
        CorpusFormat::PlainDir => load_plain_dir(path)?,
        CorpusFormat::UciBow => load_uci(path)?,
    };
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    Ok(corpus)
}

fn load_plain_dir(dir: &Path) -> Result<RawCorpus> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file())
        .filter(|p| !p.file_name().and_then(|n| n.to_str()).is_some_and(|n| n.starts_with('.')))
        .collect();
    files.sort();
    let mut docs = Vec::with_capacity(files.len());
    for file in files {
        let text = fs::read_to_string(&file)?;
        let mut counts = BTreeMap::new();
        for token in text.split_whitespace() {
            *counts.entry(token.to_string()).or_insert(0) += 1;
        }
        let id = file.file_name().unwrap().to_string_lossy().into_owned();
        docs.push(Document { id, counts });
    }
    RawCorpus::new(docs)
}

/// Resolve the docword file and its vocabulary sidecar. `path` may be the
/// docword file itself or a directory holding `docword*.txt` and `vocab*.txt`.
fn uci_paths(path: &Path) -> Result<(PathBuf, PathBuf)> {
    let missing = |what: &str| Error::parse(0, format!("missing {what} near {}", path.display()));
    if path.is_dir() {
        let mut entries: Vec<PathBuf> =
            fs::read_dir(path)?.filter_map(|e| e.ok().map(|e| e.path())).collect();
        entries.sort();
        let find = |prefix: &str| {
            entries
                .iter()
                .find(|p| p.file_name().and_then(|n| n.to_str()).is_some_and(|n| n.starts_with(prefix)))
                .cloned()
        };
        let docword = find("docword").ok_or_else(|| missing("docword file"))?;
        let vocab = find("vocab").ok_or_else(|| missing("vocab file"))?;
        return Ok((docword, vocab));
    }
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or_default();
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    let candidates = [dir.join(name.replacen("docword", "vocab", 1)), dir.join("vocab.txt")];
    let vocab = candidates
        .into_iter()
        .find(|p| p.as_path() != path && p.is_file())
        .ok_or_else(|| missing("vocab file"))?;
    Ok((path.to_path_buf(), vocab))
}

fn load_uci(path: &Path) -> Result<RawCorpus> {
    let (docword, vocab_path) = uci_paths(path)?;
    let words: Vec<String> = BufReader::new(fs::File::open(&vocab_path)?)
        .lines()
        .collect::<std::io::Result<Vec<_>>>()?
        .into_iter()
        .map(|l| l.trim().to_string())
        .collect();
    parse_uci(BufReader::new(fs::File::open(&docword)?), &words)
}

/// Parse UCI triples given the vocabulary words (1-based word ids index into `words`).
pub fn parse_uci(r: impl BufRead, words: &[String]) -> Result<RawCorpus> {
    let mut header = [0usize; 3];
    let mut counts: Vec<BTreeMap<String, u64>> = Vec::new();
    let mut triples = 0usize;
    let mut line_no = 0;
    for line in r.lines() {
        let line = line?;
        line_no += 1;
        let trimmed = line.trim();
        if line_no <= 3 {
            header[line_no - 1] = trimmed
                .parse()
                .map_err(|_| Error::parse(line_no, "header lines must be non-negative integers"))?;
            if line_no == 3 {
                if header[1] > words.len() {
                    return Err(Error::parse(
                        line_no,
                        format!("vocab file has {} words, header declares {}", words.len(), header[1]),
                    ));
                }
                counts = vec![BTreeMap::new(); header[0]];
            }
            continue;
        }
        if trimmed.is_empty() {
            continue;
        }
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        let [doc, word, count] = fields.as_slice() else {
            return Err(Error::parse(line_no, "expected `docID wordID count`"));
        };
        let parse = |s: &str, what: &str| -> Result<usize> {
            s.parse().map_err(|_| Error::parse(line_no, format!("bad {what} `{s}`")))
        };
        let (doc, word, count) = (parse(doc, "docID")?, parse(word, "wordID")?, parse(count, "count")?);
        if doc == 0 || doc > header[0] {
            return Err(Error::parse(line_no, format!("docID {doc} out of range")));
        }
        if word == 0 || word > header[1] {
            return Err(Error::parse(line_no, format!("wordID {word} out of range")));
        }
        if count == 0 {
            return Err(Error::parse(line_no, "count must be at least 1"));
        }
        *counts[doc - 1].entry(words[word - 1].clone()).or_insert(0) += count as u64;
        triples += 1;
    }
    if line_no < 3 {
        return Err(Error::parse(line_no, "missing header lines"));
    }
    if triples != header[2] {
        return Err(Error::parse(
            line_no,
            format!("header declares {} entries, found {triples}", header[2]),
        ));
    }
    let docs = counts
        .into_iter()
        .enumerate()
        .map(|(i, counts)| Document { id: (i + 1).to_string(), counts })
        .collect();
    let corpus = RawCorpus::new(docs)?;
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    Ok(corpus)
}

/// Average TF-IDF of every word: (1/N)·Σ_d tf(w,d)·ln(N/df(w)).
pub fn average_tfidf(corpus: &RawCorpus) -> BTreeMap<String, f64> {
    let n = corpus.len() as f64;
    let mut tf: BTreeMap<&str, (u64, u64)> = BTreeMap::new();
    for doc in corpus.docs() {
        for (w, &c) in &doc.counts {
            let e = tf.entry(w.as_str()).or_insert((0, 0));
            e.0 += c;
            e.1 += 1;
        }
    }
    tf.into_iter()
        .map(|(w, (total, df))| (w.to_string(), total as f64 * (n / df as f64).ln() / n))
        .collect()
}

/// The `size` words with highest average TF-IDF; ties go to the lexicographically smaller word.
pub fn select_vocabulary(corpus: &RawCorpus, size: usize) -> Result<Vocabulary> {
    if size == 0 {
        return Err(Error::precondition("vocabulary size must be at least 1"));
    }
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let mut scored: Vec<(String, f64)> = average_tfidf(corpus).into_iter().collect();
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    scored.truncate(size);
    Vocabulary::new(scored.into_iter().map(|(w, _)| w).collect())
}

/// Presence/absence bit pattern of every document, in corpus order.
pub fn document_bits(corpus: &RawCorpus, vocab: &Vocabulary) -> Vec<(String, Bits)> {
    corpus
        .docs()
        .iter()
        .map(|doc| {
            let ones = doc.counts.keys().filter_map(|w| vocab.position(w));
            (doc.id.clone(), Bits::from_ones(vocab.len(), ones))
        })
        .collect()
}

pub fn binarize(corpus: &RawCorpus, vocab: &Vocabulary) -> Result<BinaryDataset> {
    if vocab.is_empty() {
        return Err(Error::precondition("vocabulary must not be empty"));
    }
    let docs = document_bits(corpus, vocab).into_iter().map(|(_, b)| b);
    BinaryDataset::from_documents(vocab.words().to_vec(), docs)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doc(id: &str, counts: &[(&str, u64)]) -> Document {
        Document {
            id: id.to_string(),
            counts: counts.iter().map(|(w, c)| (w.to_string(), *c)).collect(),
        }
    }

    fn words(ws: &[&str]) -> Vec<String> {
        ws.iter().map(|w| w.to_string()).collect()
    }

    #[test]
    fn uci_triples_parse() {
        let text = "3\n5\n6\n1 1 2\n1 3 1\n2 2 4\n2 5 1\n3 4 1\n3 1 1\n";
        let corpus = parse_uci(text.as_bytes(), &words(&["a", "b", "c", "d", "e"])).unwrap();
        assert_eq!(corpus.len(), 3);
        assert_eq!(corpus.docs()[0].counts["a"], 2);
        assert_eq!(corpus.docs()[1].counts["e"], 1);
    }

    #[test]
    fn uci_zero_count_is_parse_error() {
        let text = "1\n2\n1\n1 2 0\n";
        match parse_uci(text.as_bytes(), &words(&["a", "b"])) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 4),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn uci_malformed_line_reports_line() {
        let text = "1\n2\n1\n1 2\n";
        assert!(matches!(parse_uci(text.as_bytes(), &words(&["a", "b"])), Err(Error::Parse { line: 4, .. })));
    }

    #[test]
    fn uci_empty_corpus_errors() {
        let text = "0\n2\n0\n";
        assert!(matches!(parse_uci(text.as_bytes(), &words(&["a", "b"])), Err(Error::EmptyCorpus)));
    }

    #[test]
    fn tfidf_prefers_discriminative_word() {
        let corpus = RawCorpus::new(vec![doc("d1", &[("a", 2), ("b", 1)]), doc("d2", &[("b", 3)])]).unwrap();
        let scores = average_tfidf(&corpus);
        assert!((scores["a"] - 2f64.ln()).abs() < 1e-12);
        assert_eq!(scores["b"], 0.0);
        assert_eq!(select_vocabulary(&corpus, 1).unwrap().words(), &["a"]);
        assert_eq!(select_vocabulary(&corpus, 10).unwrap().words(), &["a", "b"]);
        assert!(select_vocabulary(&corpus, 0).is_err());
    }

    #[test]
    fn tfidf_ties_are_lexicographic() {
        let corpus = RawCorpus::new(vec![doc("1", &[("z", 1)]), doc("2", &[("y", 1)])]).unwrap();
        assert_eq!(select_vocabulary(&corpus, 2).unwrap().words(), &["y", "z"]);
    }

    #[test]
    fn binarize_presence_and_absence() {
        let corpus = RawCorpus::new(vec![doc("1", &[("a", 5)]), doc("2", &[("zzz", 1)])]).unwrap();
        let vocab = Vocabulary::new(words(&["a", "b"])).unwrap();
        let data = binarize(&corpus, &vocab).unwrap();
        assert_eq!(data.total_weight(), 2);
        let patterns: Vec<Vec<bool>> = data.rows().iter().map(|r| r.bits.to_bools()).collect();
        assert!(patterns.contains(&vec![true, false]));
        assert!(patterns.contains(&vec![false, false]));
    }

    #[test]
    fn duplicate_doc_ids_rejected() {
        assert!(RawCorpus::new(vec![doc("x", &[]), doc("x", &[])]).is_err());
    }
}
