//! Topic hierarchies read off a learned model, plus topic coherence and
//! held-out likelihood scores.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::corpus::BinaryDataset;
use crate::error::{Error, Result};
use crate::inference::{log_likelihood, path_conditional, row_posteriors};
use crate::ltm::LatentTreeModel;
use crate::structure::mi_from_joint;

pub const DEFAULT_WORDS_PER_TOPIC: usize = 5;
pub const DEFAULT_COHERENCE_M: usize = 4;
const FORMAT_NAME: &str = "hlta-topics";
const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicWord {
    pub word: String,
    /// P(word = 1 | genuine state).
    pub probability: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicNode {
    pub latent: String,
    pub level: u32,
    /// The latent state reported as the topic; the other one is background.
    pub state: usize,
    pub words: Vec<TopicWord>,
    pub doc_fraction: f64,
    pub children: Vec<TopicNode>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TopicHierarchy {
    pub topics: Vec<TopicNode>,
}

#[derive(Serialize, Deserialize)]
struct Document {
    format: String,
    version: u32,
    topics: Vec<TopicNode>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RenderFormat {
    Text,
    Json,
}

impl TopicHierarchy {
    /// Every topic in depth-first order.
    pub fn iter(&self) -> impl Iterator<Item = &TopicNode> {
        let mut stack: Vec<&TopicNode> = self.topics.iter().rev().collect();
        std::iter::from_fn(move || {
            let node = stack.pop()?;
            stack.extend(node.children.iter().rev());
            Some(node)
        })
    }

    pub fn len(&self) -> usize {
        self.iter().count()
    }

    pub fn is_empty(&self) -> bool {
        self.topics.is_empty()
    }

    pub fn render(&self, format: RenderFormat) -> String {
        match format {
            RenderFormat::Text => self.to_text(),
            RenderFormat::Json => self.to_json(),
        }
    }

    /// Numbered outline, one topic per line, children indented.
    pub fn to_text(&self) -> String {
        fn walk(out: &mut String, nodes: &[TopicNode], prefix: &str, depth: usize) {
            for (i, node) in nodes.iter().enumerate() {
                let number = format!("{prefix}{}", i + 1);
                let words: Vec<&str> = node.words.iter().map(|w| w.word.as_str()).collect();
                let _ = writeln!(out, "{}{number}. [{:.2}] {}", "  ".repeat(depth), node.doc_fraction, words.join(" "));
                walk(out, &node.children, &format!("{number}."), depth + 1);
            }
        }
        let mut out = String::new();
        walk(&mut out, &self.topics, "", 0);
        out
    }

    pub fn to_json(&self) -> String {
        let doc = Document { format: FORMAT_NAME.into(), version: FORMAT_VERSION, topics: self.topics.clone() };
        serde_json::to_string_pretty(&doc).expect("topic documents always serialize") + "\n"
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: Document = serde_json::from_str(text)
            .map_err(|e| Error::parse(e.line(), e.to_string()))?;
        if doc.format != FORMAT_NAME || doc.version != FORMAT_VERSION {
            return Err(Error::parse(1, format!("unsupported topic document {} v{}", doc.format, doc.version)));
        }
        Ok(TopicHierarchy { topics: doc.topics })
    }
}

/// Observed variables reachable from `z` through edges that go down a level.
fn topic_words(model: &LatentTreeModel, z: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut stack = vec![z];
    while let Some(v) = stack.pop() {
        for &c in model.children(v).iter().rev() {
            let var = model.variable(c);
            if !var.is_latent() {
                out.push(c);
            } else if var.level < model.variable(v).level {
                stack.push(c);
            }
        }
    }
    out.sort_unstable();
    out
}

struct Summary {
    state: usize,
    words: Vec<TopicWord>,
}

fn summarize(model: &LatentTreeModel, z: usize, prior: &[f64], words_per_topic: usize) -> Summary {
    let mut ranked: Vec<(usize, f64, Vec<Vec<f64>>)> = topic_words(model, z)
        .into_iter()
        .filter_map(|w| {
            let cond = path_conditional(model, z, w)?;
            let joint = [
                [prior[0] * cond[0][0], prior[0] * cond[0][1]],
                [prior[1] * cond[1][0], prior[1] * cond[1][1]],
            ];
            Some((w, mi_from_joint(&joint), cond))
        })
        .collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    ranked.truncate(words_per_topic);
    let presence = |s: usize| ranked.iter().map(|(_, _, c)| c[s][1]).sum::<f64>();
    let state = if presence(1) < presence(0) { 0 } else { 1 };
    Summary {
        state,
        words: ranked
            .into_iter()
            .map(|(w, _, c)| TopicWord { word: model.name(w).to_string(), probability: c[state][1] })
            .collect(),
    }
}

/// Topic hierarchy of `model`. Words are ranked by their mutual information
/// with each latent under the model; the state with lower overall presence
/// of the top words is treated as background. Document fractions come from
/// hard-assigning the documents of `data`.
pub fn extract_topics(model: &LatentTreeModel, data: &BinaryDataset, words_per_topic: usize) -> Result<TopicHierarchy> {
    if words_per_topic == 0 {
        return Err(Error::precondition("words_per_topic must be at least 1"));
    }
    let latents: Vec<usize> = model.latents().filter(|&v| model.cardinality(v) == 2).collect();
    let marginals = model.node_marginals();
    let summaries: BTreeMap<usize, Summary> =
        latents.iter().map(|&z| (z, summarize(model, z, &marginals[z], words_per_topic))).collect();

    let mut genuine = vec![0.0; model.len()];
    if !data.is_empty() {
        let post = row_posteriors(model, data, &latents)?;
        for (row, p) in data.rows().iter().zip(&post) {
            for (k, &z) in latents.iter().enumerate() {
                let assigned = usize::from(p[k][1] > p[k][0]);
                if assigned == summaries[&z].state {
                    genuine[z] += row.weight as f64;
                }
            }
        }
        for g in &mut genuine {
            *g /= data.total_weight() as f64;
        }
    }

    fn build(model: &LatentTreeModel, z: usize, summaries: &BTreeMap<usize, Summary>, fraction: &[f64]) -> TopicNode {
        let level = model.variable(z).level;
        let children = model
            .children(z)
            .iter()
            .filter(|&&c| summaries.contains_key(&c) && model.variable(c).level < level)
            .map(|&c| build(model, c, summaries, fraction))
            .collect();
        TopicNode {
            latent: model.name(z).to_string(),
            level,
            state: summaries[&z].state,
            words: summaries[&z].words.clone(),
            doc_fraction: fraction[z],
            children,
        }
    }
    let top = model.top_level();
    let mut roots: Vec<usize> =
        latents.iter().copied().filter(|&z| model.variable(z).level == top).collect();
    roots.sort_by_key(|&z| model.pre_order().iter().position(|&v| v == z));
    Ok(TopicHierarchy { topics: roots.into_iter().map(|z| build(model, z, &summaries, &genuine)).collect() })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoherenceReport {
    pub per_topic: BTreeMap<String, f64>,
    pub average: f64,
    #[serde(rename = "M")]
    pub m: usize,
    /// Topics with a word that never occurs in the evaluation data.
    pub flagged: Vec<String>,
}

/// Mimno-style coherence of each topic's top-`m` words:
/// Σ_{i<j} ln((D(w_j, w_i) + 1) / D(w_i)), with D a weighted document frequency.
pub fn coherence(topics: &TopicHierarchy, data: &BinaryDataset, m: usize) -> Result<CoherenceReport> {
    if m < 2 {
        return Err(Error::precondition("coherence needs M of at least 2"));
    }
    let mut per_topic = BTreeMap::new();
    let mut flagged = Vec::new();
    for topic in topics.iter() {
        let cols = topic
            .words
            .iter()
            .take(m)
            .map(|w| data.column(&w.word).ok_or_else(|| Error::UnknownVariable(w.word.clone())))
            .collect::<Result<Vec<_>>>()?;
        let mut single = vec![0u64; cols.len()];
        let mut pair = vec![vec![0u64; cols.len()]; cols.len()];
        for row in data.rows() {
            for (i, &ci) in cols.iter().enumerate() {
                if row.bits.get(ci) {
                    single[i] += row.weight;
                    for (j, &cj) in cols.iter().enumerate().take(i) {
                        if row.bits.get(cj) {
                            pair[i][j] += row.weight;
                        }
                    }
                }
            }
        }
        let mut score = 0.0;
        let mut zero = false;
        for i in 1..cols.len() {
            for l in 0..i {
                let d = if single[l] == 0 {
                    zero = true;
                    1.0
                } else {
                    single[l] as f64
                };
                score += ((pair[i][l] as f64 + 1.0) / d).ln();
            }
        }
        if zero {
            flagged.push(topic.latent.clone());
        }
        per_topic.insert(topic.latent.clone(), score);
    }
    let average = if per_topic.is_empty() { 0.0 } else { per_topic.values().sum::<f64>() / per_topic.len() as f64 };
    Ok(CoherenceReport { per_topic, average, m, flagged })
}

/// Average log-likelihood per test document.
pub fn heldout_loglik(model: &LatentTreeModel, test: &BinaryDataset) -> Result<f64> {
    if test.is_empty() {
        return Err(Error::EmptyData);
    }
    Ok(log_likelihood(model, test)? / test.total_weight() as f64)
}

/// Per-document held-out log-likelihood of independent words whose
/// presence rates are estimated on `train` with add-one smoothing.
pub fn independent_baseline(train: &BinaryDataset, test: &BinaryDataset) -> Result<f64> {
    if train.is_empty() || test.is_empty() {
        return Err(Error::EmptyData);
    }
    let n = train.total_weight() as f64;
    let mut total = 0.0;
    for (j, name) in test.variables().iter().enumerate() {
        let p = (train.ones(train.column_of(name)?) as f64 + 1.0) / (n + 2.0);
        let on = test.ones(j) as f64;
        total += on * p.ln() + (test.total_weight() as f64 - on) * (1.0 - p).ln();
    }
    Ok(total / test.total_weight() as f64)
}
