#![allow(dead_code)]

use hlta::corpus::{BinaryDataset, Bits};
use hlta::inference::sample;
use hlta::ltm::{ConditionalTable, LatentTreeModel, Node, Variable};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Binary table with P(child = 1 | parent = s) = `on[s]`.
pub fn binary(on: &[f64]) -> ConditionalTable {
    ConditionalTable::from_rows(&on.iter().map(|&p| vec![1.0 - p, p]).collect::<Vec<_>>())
}

/// Table where the child copies the parent's state with probability `agree`.
pub fn coupling(agree: f64) -> ConditionalTable {
    binary(&[1.0 - agree, agree])
}

pub fn lcm(latent: &str, leaves: &[(&str, [f64; 2])], prior: f64) -> LatentTreeModel {
    let mut nodes = vec![Node::new(Variable::latent(latent, 1), None, binary(&[prior]))];
    for (name, on) in leaves {
        nodes.push(Node::new(Variable::observed(*name), Some(latent), binary(on)));
    }
    LatentTreeModel::new(nodes).unwrap()
}

/// Random model with `latents` binary latents (a random tree) and
/// `observed` binary leaves, every latent keeping at least one observed child.
pub fn random_tree(rng: &mut impl Rng, latents: usize, observed: usize) -> LatentTreeModel {
    assert!(latents >= 1 && observed >= latents);
    let mut parent_of = vec![None];
    for i in 1..latents {
        parent_of.push(Some(rng.gen_range(0..i)));
    }
    let mut nodes = Vec::new();
    for (i, p) in parent_of.iter().enumerate() {
        let rows = if p.is_some() { 2 } else { 1 };
        nodes.push(Node::new(
            Variable::latent(format!("H{i}"), 1),
            p.map(|p| format!("H{p}")).as_deref(),
            ConditionalTable::random(rows, 2, rng),
        ));
    }
    for j in 0..observed {
        let p = if j < latents { j } else { rng.gen_range(0..latents) };
        nodes.push(Node::new(
            Variable::observed(format!("x{j}")),
            Some(&format!("H{p}")),
            ConditionalTable::random(2, 2, rng),
        ));
    }
    LatentTreeModel::new(nodes).unwrap()
}

/// Two-level generator: a root over `groups` level-1 latents, each with
/// `per_group` word leaves. Leaf names are `g<group>w<index>`.
pub fn two_level(groups: usize, per_group: usize, couple: f64, leaf: [f64; 2]) -> LatentTreeModel {
    let mut nodes = vec![Node::new(Variable::latent("R", 2), None, binary(&[0.5]))];
    for g in 0..groups {
        let h = format!("H{g}");
        nodes.push(Node::new(Variable::latent(&h, 1), Some("R"), coupling(couple)));
        for w in 0..per_group {
            nodes.push(Node::new(Variable::observed(format!("g{g}w{w}")), Some(&h), binary(&leaf)));
        }
    }
    LatentTreeModel::new(nodes).unwrap()
}

pub fn draw(model: &LatentTreeModel, n: usize, seed: u64) -> BinaryDataset {
    sample(model, n, &mut rng(seed)).unwrap()
}

/// Random dataset over `names` with independent fair bits.
pub fn noise(names: &[String], n: usize, rng: &mut impl Rng) -> BinaryDataset {
    let docs: Vec<Bits> = (0..n)
        .map(|_| Bits::from_bools(&(0..names.len()).map(|_| rng.gen_bool(0.5)).collect::<Vec<_>>()))
        .collect();
    BinaryDataset::from_documents(names.to_vec(), docs).unwrap()
}

/// Adjusted Rand index between two labelings of the same items.
pub fn adjusted_rand_index(a: &[usize], b: &[usize]) -> f64 {
    assert_eq!(a.len(), b.len());
    let ka = a.iter().max().map_or(0, |m| m + 1);
    let kb = b.iter().max().map_or(0, |m| m + 1);
    let mut table = vec![vec![0u64; kb]; ka];
    for (&x, &y) in a.iter().zip(b) {
        table[x][y] += 1;
    }
    let c2 = |n: u64| (n * n.saturating_sub(1)) as f64 / 2.0;
    let index: f64 = table.iter().flatten().map(|&n| c2(n)).sum();
    let rows: f64 = table.iter().map(|r| c2(r.iter().sum())).sum();
    let cols: f64 = (0..kb).map(|j| c2(table.iter().map(|r| r[j]).sum())).sum();
    let total = c2(a.len() as u64);
    let expected = rows * cols / total;
    let max = (rows + cols) / 2.0;
    if max == expected {
        return 1.0;
    }
    (index - expected) / (max - expected)
}

/// Cluster label of every observed variable: the index of its parent latent
/// among the model's level-1 latents.
pub fn leaf_partition(model: &LatentTreeModel, leaves: &[String]) -> Vec<usize> {
    let level1 = model.latents_at_level(1);
    leaves
        .iter()
        .map(|l| {
            let p = model.parent(model.require(l).unwrap()).unwrap();
            level1.iter().position(|&v| v == p).unwrap()
        })
        .collect()
}

/// Sparse three-level corpus generator: `words` leaves in groups of
/// `group` under level-1 topics, which sit in blocks of 5 under level-2
/// topics below a single root.
pub fn sparse_corpus_model(words: usize, group: usize) -> LatentTreeModel {
    let topics = words.div_ceil(group);
    let supers = topics.div_ceil(5);
    let mut nodes = vec![Node::new(Variable::latent("R", 3), None, binary(&[0.5]))];
    for s in 0..supers {
        nodes.push(Node::new(Variable::latent(format!("S{s}"), 2), Some("R"), binary(&[0.1, 0.5])));
    }
    for t in 0..topics {
        nodes.push(Node::new(Variable::latent(format!("T{t}"), 1), Some(&format!("S{}", t / 5)), binary(&[0.03, 0.6])));
    }
    for w in 0..words {
        nodes.push(Node::new(Variable::observed(format!("w{w:04}")), Some(&format!("T{}", w / group)), binary(&[0.01, 0.5])));
    }
    LatentTreeModel::new(nodes).unwrap()
}

/// Text corpus of `docs` documents drawn from `topics` themes of `per_topic`
/// words each plus a shared pool of common words. Each document mixes one or
/// two themes.
pub fn themed_corpus(docs: usize, topics: usize, per_topic: usize, seed: u64) -> hlta::corpus::RawCorpus {
    use hlta::corpus::{Document, RawCorpus};
    use std::collections::BTreeMap;
    let mut rng = rng(seed);
    let theme = |t: usize, i: usize| format!("t{t:02}_{i:02}");
    let mut out = Vec::with_capacity(docs);
    for d in 0..docs {
        let mut counts: BTreeMap<String, u64> = BTreeMap::new();
        let first = rng.gen_range(0..topics);
        let mut chosen = vec![first];
        if rng.gen_bool(0.3) {
            chosen.push((first + 1 + rng.gen_range(0..topics - 1)) % topics);
        }
        let length = rng.gen_range(20..60);
        for _ in 0..length {
            let word = if rng.gen_bool(0.25) {
                format!("common{:02}", rng.gen_range(0..20))
            } else {
                let t = chosen[rng.gen_range(0..chosen.len())];
                // a few words per theme dominate
                let i = if rng.gen_bool(0.6) { rng.gen_range(0..4) } else { rng.gen_range(0..per_topic) };
                theme(t, i)
            };
            *counts.entry(word).or_insert(0) += 1;
        }
        out.push(Document { id: format!("doc{d:05}"), counts });
    }
    RawCorpus::new(out).unwrap()
}
