mod common;

use common::*;
use hlta::corpus::{BinaryDataset, Bits};
use hlta::inference::marginal;
use hlta::ltm::{LatentTreeModel, Node, Variable};
use hlta::structure::{pem_hlta, HltaOptions};
use hlta::topics::{
    coherence, extract_topics, heldout_loglik, independent_baseline, RenderFormat, TopicHierarchy, TopicNode,
    TopicWord,
};

fn doubled(data: &BinaryDataset) -> BinaryDataset {
    BinaryDataset::from_rows(data.variables().to_vec(), data.rows().iter().map(|r| (r.bits.clone(), r.weight * 2)))
        .unwrap()
}

fn planted() -> LatentTreeModel {
    two_level(4, 5, 0.7, [0.05, 0.7])
}

#[test]
fn planted_groups_become_level_one_topics() {
    for seed in 0..5 {
        let data = draw(&planted(), 4000, 700 + seed);
        let out = pem_hlta(&data, &HltaOptions { seed, kappa: 10, ..HltaOptions::default() }).unwrap();
        let topics = extract_topics(&out.model, &data, 5).unwrap();
        let level1: Vec<&TopicNode> = topics.iter().filter(|t| t.level == 1).collect();
        assert!(!level1.is_empty());
        for t in level1 {
            let group = &t.words[0].word[..2];
            assert!(t.words.iter().all(|w| w.word.starts_with(group)), "seed {seed}: {:?}", t.words);
        }
    }
}

#[test]
fn genuine_state_raises_the_top_word() {
    let model = planted();
    let data = draw(&model, 1000, 710);
    let topics = extract_topics(&model, &data, 5).unwrap();
    for t in topics.iter() {
        let joint = marginal(&model, &[t.latent.as_str(), t.words[0].word.as_str()]).unwrap();
        let on = |s: usize| joint.get(&[s, 1]) / (joint.get(&[s, 0]) + joint.get(&[s, 1]));
        assert!((on(t.state) - t.words[0].probability).abs() < 1e-9);
        assert!(on(t.state) > on(1 - t.state), "{}", t.latent);
    }
}

#[test]
fn state_one_is_background_when_it_lowers_words() {
    let model = lcm("Y", &[("a", [0.8, 0.1]), ("b", [0.7, 0.2]), ("c", [0.9, 0.05])], 0.5);
    let data = draw(&model, 200, 720);
    let topics = extract_topics(&model, &data, 3).unwrap();
    assert_eq!(topics.topics[0].state, 0);
    let flipped = lcm("Y", &[("a", [0.1, 0.8]), ("b", [0.2, 0.7]), ("c", [0.05, 0.9])], 0.5);
    assert_eq!(extract_topics(&flipped, &data, 3).unwrap().topics[0].state, 1);
}

#[test]
fn doc_fraction_ignores_duplication() {
    let model = planted();
    let data = draw(&model, 1500, 730);
    let once = extract_topics(&model, &data, 5).unwrap();
    let twice = extract_topics(&model, &doubled(&data), 5).unwrap();
    assert_eq!(once, twice);
    assert!(once.iter().all(|t| (0.0..=1.0).contains(&t.doc_fraction)));
}

#[test]
fn word_ranking_depends_only_on_the_model() {
    let model = planted();
    let a = extract_topics(&model, &draw(&model, 300, 740), 5).unwrap();
    let b = extract_topics(&model, &draw(&model, 300, 741), 5).unwrap();
    let words = |h: &TopicHierarchy| h.iter().map(|t| t.words.clone()).collect::<Vec<_>>();
    assert_eq!(words(&a), words(&b));
}

#[test]
fn heldout_scores() {
    let model = planted();
    let train = draw(&model, 3000, 750);
    let test = draw(&model, 1000, 751);
    let out = pem_hlta(&train, &HltaOptions { kappa: 20, ..HltaOptions::default() }).unwrap();
    let score = heldout_loglik(&out.model, &test).unwrap();
    assert!((score - heldout_loglik(&out.model, &doubled(&test)).unwrap()).abs() < 1e-9);
    assert!(score > independent_baseline(&train, &test).unwrap());
    assert!(score > 20.0 * 0.5f64.ln());

    let uniform = lcm("Y", &[("a", [0.5, 0.5]), ("b", [0.5, 0.5]), ("c", [0.5, 0.5])], 0.5);
    let data = draw(&uniform, 50, 752);
    assert!((heldout_loglik(&uniform, &data).unwrap() - 3.0 * 0.5f64.ln()).abs() < 1e-12);
}

fn topic(latent: &str, words: &[&str], fraction: f64, children: Vec<TopicNode>) -> TopicNode {
    TopicNode {
        latent: latent.into(),
        level: 1,
        state: 1,
        words: words.iter().map(|w| TopicWord { word: w.to_string(), probability: 0.5 }).collect(),
        doc_fraction: fraction,
        children,
    }
}

#[test]
fn coherence_hand_sums() {
    let names: Vec<String> = ["w1", "w2", "w3", "w4"].iter().map(|s| s.to_string()).collect();
    let docs = [
        [1, 1, 0, 0],
        [1, 1, 1, 0],
        [1, 0, 1, 0],
        [1, 0, 0, 1],
        [0, 1, 1, 1],
        [1, 1, 1, 1],
        [0, 0, 1, 0],
        [1, 0, 0, 0],
        [0, 1, 0, 0],
        [0, 0, 0, 1],
    ];
    let rows = docs.iter().map(|d| Bits::from_bools(&d.iter().map(|&b| b == 1).collect::<Vec<_>>()));
    let data = BinaryDataset::from_documents(names, rows).unwrap();
    let hierarchy = TopicHierarchy { topics: vec![topic("T", &["w1", "w2", "w3", "w4"], 0.5, vec![])] };

    // D(w1)=6 D(w2)=5 D(w3)=5; D(w2,w1)=3 D(w3,w1)=3 D(w3,w2)=3 D(w4,w1)=2 D(w4,w2)=2 D(w4,w3)=2
    let expected = (4.0f64 / 6.0).ln()
        + (4.0f64 / 6.0).ln()
        + (4.0f64 / 5.0).ln()
        + (3.0f64 / 6.0).ln()
        + (3.0f64 / 5.0).ln()
        + (3.0f64 / 5.0).ln();
    let report = coherence(&hierarchy, &data, 4).unwrap();
    assert!((report.per_topic["T"] - expected).abs() < 1e-12);
    assert!((report.average - expected).abs() < 1e-12);

    let pair = TopicHierarchy { topics: vec![topic("P", &["w1", "w2"], 0.5, vec![])] };
    assert!((coherence(&pair, &data, 2).unwrap().per_topic["P"] - (4.0f64 / 6.0).ln()).abs() < 1e-12);
    assert!(coherence(&pair, &data, 1).is_err());
}

#[test]
fn rendering() {
    let single = TopicHierarchy { topics: vec![topic("T", &["w1", "w2", "w3", "w4", "w5"], 0.22, vec![])] };
    assert_eq!(single.render(RenderFormat::Text), "1. [0.22] w1 w2 w3 w4 w5\n");
    assert_eq!(TopicHierarchy::default().render(RenderFormat::Text), "");

    let nested = TopicHierarchy {
        topics: vec![
            topic("A", &["a", "b"], 0.4, vec![topic("C", &["c"], 0.1, vec![]), topic("D", &["d"], 0.2, vec![])]),
            topic("B", &["e"], 0.3, vec![]),
        ],
    };
    assert_eq!(nested.to_text(), "1. [0.40] a b\n  1.1. [0.10] c\n  1.2. [0.20] d\n2. [0.30] e\n");
    assert_eq!(TopicHierarchy::from_json(&nested.render(RenderFormat::Json)).unwrap(), nested);
    assert!(TopicHierarchy::from_json("{\"format\":\"other\",\"version\":1,\"topics\":[]}").is_err());
}

#[test]
fn sub_tree_words_skip_same_level_neighbours() {
    let model = LatentTreeModel::new(vec![
        Node::new(Variable::latent("A", 1), None, binary(&[0.5])),
        Node::new(Variable::latent("B", 1), Some("A"), coupling(0.8)),
        Node::new(Variable::observed("a1"), Some("A"), coupling(0.9)),
        Node::new(Variable::observed("a2"), Some("A"), coupling(0.9)),
        Node::new(Variable::observed("b1"), Some("B"), coupling(0.9)),
        Node::new(Variable::observed("b2"), Some("B"), coupling(0.9)),
    ])
    .unwrap();
    let data = draw(&model, 100, 760);
    let topics = extract_topics(&model, &data, 5).unwrap();
    let a = topics.iter().find(|t| t.latent == "A").unwrap();
    let mut words: Vec<&str> = a.words.iter().map(|w| w.word.as_str()).collect();
    words.sort_unstable();
    assert_eq!(words, ["a1", "a2"]);
}
