use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn hlta(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hlta")).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = hlta(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn code(args: &[&str]) -> i32 {
    hlta(args).status.code().expect("exit code")
}

/// xorshift64*, enough to scatter words without a dependency.
struct Noise(u64);

impl Noise {
    fn next(&mut self) -> u64 {
        self.0 ^= self.0 >> 12;
        self.0 ^= self.0 << 25;
        self.0 ^= self.0 >> 27;
        self.0.wrapping_mul(0x2545_f491_4f6c_dd1d)
    }

    fn chance(&mut self, p: f64) -> bool {
        (self.next() >> 11) as f64 / (1u64 << 53) as f64 <= p
    }

    fn below(&mut self, n: u64) -> u64 {
        self.next() % n
    }
}

/// Plain-text corpus with four themes of six words and ten common words.
fn toy_corpus(dir: &Path, docs: usize) {
    let mut rng = Noise(0x9e37_79b9_7f4a_7c15);
    fs::create_dir_all(dir).unwrap();
    for d in 0..docs {
        let theme = rng.below(4);
        let mut words: Vec<String> = (0..6).filter(|_| rng.chance(0.7)).map(|i| format!("t{theme}w{i}")).collect();
        words.extend((0..3).map(|_| format!("c{}", rng.below(10))));
        if rng.chance(0.2) {
            let other = rng.below(4);
            words.extend((0..6).filter(|_| rng.chance(0.5)).map(|i| format!("t{other}w{i}")));
        }
        fs::write(dir.join(format!("d{d:04}.txt")), words.join(" ") + "\n").unwrap();
    }
}

struct Workspace {
    dir: TempDir,
}

impl Workspace {
    fn new(docs: usize) -> Self {
        let dir = tempfile::tempdir().unwrap();
        toy_corpus(&dir.path().join("docs"), docs);
        Workspace { dir }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn arg(&self, name: &str) -> String {
        self.path(name).to_string_lossy().into_owned()
    }

    fn learn(&self, model: &str, extra: &[&str]) -> String {
        let (docs, out) = (self.arg("docs"), self.arg(model));
        let mut args = vec!["learn", &docs, "--format", "plain-dir", "--vocab-size", "24", "--tau", "3", "--kappa", "20"];
        args.extend_from_slice(&["--no-timestamp", "-o", &out]);
        args.extend_from_slice(extra);
        ok(&args)
    }
}

fn golden(name: &str, actual: &str) {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name);
    if std::env::var_os("HLTA_BLESS").is_some() {
        fs::create_dir_all(path.parent().unwrap()).unwrap();
        fs::write(&path, actual).unwrap();
    }
    let expected = fs::read_to_string(&path).unwrap_or_else(|_| panic!("missing golden file {}", path.display()));
    assert_eq!(actual, expected, "output differs from {name}");
}

#[test]
fn golden_pipeline() {
    let ws = Workspace::new(400);
    let docs = ws.arg("docs");
    golden("vocab.txt", &ok(&["vocab", &docs, "--size", "24"]));
    golden("report.txt", &ws.learn("model.txt", &["--test-fraction", "0.2", "--seed", "3"]));
    let model = ws.arg("model.txt");
    golden("model.txt", &fs::read_to_string(&model).unwrap());
    golden("topics.txt", &ok(&["topics", &model, &docs, "--format", "plain-dir"]));
    golden("eval.txt", &ok(&["eval", &model, &docs, "--format", "plain-dir", "--test-fraction", "0.2", "--seed", "3"]));
}

#[test]
fn learning_is_thread_count_invariant() {
    let ws = Workspace::new(300);
    let mut models = Vec::new();
    for threads in ["1", "2", "4"] {
        let name = format!("model{threads}.txt");
        let report = ws.learn(&name, &["--threads", threads, "--seed", "11"]);
        models.push((fs::read_to_string(ws.path(&name)).unwrap(), report));
    }
    assert!(models.windows(2).all(|w| w[0] == w[1]));
}

#[test]
fn structured_outputs_parse() {
    let ws = Workspace::new(300);
    let report = ws.learn("model.txt", &["--report-format", "json", "--batches", "5"]);
    let report: serde_json::Value = serde_json::from_str(&report).unwrap();
    assert_eq!(report["format"], "hlta-report");
    assert_eq!(report["final_updates"], 5);
    assert!(report.get("timestamp").is_none());

    let (model, docs) = (ws.arg("model.txt"), ws.arg("docs"));
    let topics = ok(&["topics", &model, &docs, "--format", "plain-dir", "--output-format", "json"]);
    let topics = hlta::TopicHierarchy::from_json(&topics).unwrap();
    assert!(!topics.is_empty());

    let metrics: serde_json::Value =
        serde_json::from_str(&ok(&["eval", &model, &docs, "--format", "plain-dir", "--output-format", "json"])).unwrap();
    assert_eq!(metrics["coherence"]["M"], 4);
    assert!(metrics["heldout_loglik"].as_f64().unwrap() > metrics["baseline_loglik"].as_f64().unwrap());

    let assigned: serde_json::Value = serde_json::from_str(&ok(&[
        "assign", &model, &docs, "--format", "plain-dir", "--level", "1", "--output-format", "json",
    ]))
    .unwrap();
    assert_eq!(assigned["rows"].as_array().unwrap().len(), 300);
    assert_eq!(assigned["latents"].as_array().unwrap().len(), assigned["rows"][0]["states"].as_array().unwrap().len());
}

#[test]
fn timestamps_are_optional() {
    let ws = Workspace::new(120);
    let docs = ws.arg("docs");
    let out = ws.arg("m.txt");
    let report = ok(&["learn", &docs, "--format", "plain-dir", "--vocab-size", "12", "--kappa", "5", "-o", &out]);
    assert!(report.lines().any(|l| l.starts_with("timestamp: ")));
    assert!(report.lines().filter(|l| l.starts_with("pass ")).all(|l| l.ends_with('s')));
}

#[test]
fn dataset_and_uci_inputs_agree_with_plain_text() {
    let ws = Workspace::new(200);
    let docs = ws.arg("docs");
    let vocab = ws.arg("vocab.txt");
    ok(&["vocab", &docs, "--size", "16", "-o", &vocab]);
    let data = ws.arg("data.txt");
    ok(&["binarize", &docs, "--format", "plain-dir", "--vocab", &vocab, "-o", &data]);

    let words: Vec<String> = fs::read_to_string(&vocab).unwrap().lines().map(String::from).collect();
    let uci = ws.path("uci");
    fs::create_dir_all(&uci).unwrap();
    let mut triples = Vec::new();
    let mut files: Vec<PathBuf> = fs::read_dir(ws.path("docs")).unwrap().map(|e| e.unwrap().path()).collect();
    files.sort();
    for (d, file) in files.iter().enumerate() {
        let text = fs::read_to_string(file).unwrap();
        for (w, word) in words.iter().enumerate() {
            let count = text.split_whitespace().filter(|t| t == word).count();
            if count > 0 {
                triples.push(format!("{} {} {count}", d + 1, w + 1));
            }
        }
    }
    let header = format!("{}\n{}\n{}\n", files.len(), words.len(), triples.len());
    fs::write(uci.join("docword.toy.txt"), header + &triples.join("\n") + "\n").unwrap();
    fs::write(uci.join("vocab.toy.txt"), words.join("\n") + "\n").unwrap();

    let uci_data = ok(&["binarize", &uci.to_string_lossy(), "--format", "uci-bow"]);
    assert_eq!(uci_data, fs::read_to_string(&data).unwrap());

    let (a, b) = (ws.arg("a.txt"), ws.arg("b.txt"));
    ok(&["learn", &data, "--kappa", "5", "--no-timestamp", "-o", &a]);
    ok(&["learn", &docs, "--format", "plain-dir", "--vocab", &vocab, "--kappa", "5", "--no-timestamp", "-o", &b]);
    assert_eq!(fs::read_to_string(&a).unwrap(), fs::read_to_string(&b).unwrap());
}

#[test]
fn validate_and_oracle() {
    let ws = Workspace::new(10);
    let model = ws.path("small.txt");
    fs::write(
        &model,
        "hlta-model v1\nvariables 3\nvariable Y 2 latent 1\nvariable a 2 observed 0\nvariable b 2 observed 0\n\
         root Y\nedges 2\nedge Y a\nedge Y b\ntables 3\ntable Y 1 2\n0.5 0.5\ntable a 2 2\n0.9 0.1\n0.2 0.8\n\
         table b 2 2\n0.7 0.3\n0.4 0.6\nend\n",
    )
    .unwrap();
    let path = model.to_string_lossy();
    assert_eq!(ok(&["validate", &path]), "ok: 3 variables, 2 observed, 1 latent, 1 levels\n");
    let joint = ok(&["oracle", &path]);
    let lines: Vec<&str> = joint.lines().collect();
    assert_eq!(lines[0], "Y\ta\tb\tprobability");
    assert_eq!(lines.len(), 9);
    let total: f64 = lines[1..].iter().map(|l| l.rsplit('\t').next().unwrap().parse::<f64>().unwrap()).sum();
    assert!((total - 1.0).abs() < 1e-12);

    let broken = ws.path("broken.txt");
    fs::write(&broken, fs::read_to_string(&model).unwrap().replace("0.2 0.8", "0.2 0.9")).unwrap();
    let out = hlta(&["validate", &broken.to_string_lossy()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("not stochastic"));
}

#[test]
fn exit_codes() {
    let ws = Workspace::new(30);
    let docs = ws.arg("docs");
    let out = ws.arg("m.txt");
    assert_eq!(code(&["--help"]), 0);
    assert_eq!(code(&[]), 1);
    assert_eq!(code(&["frobnicate"]), 1);
    assert_eq!(code(&["vocab", &docs, "--size", "0"]), 1);
    assert_eq!(code(&["learn", &docs, "--format", "plain-dir", "--tau", "0", "-o", &out]), 1);
    assert_eq!(code(&["learn", &docs, "--format", "plain-dir", "--test-fraction", "1.5", "-o", &out]), 1);
    assert_eq!(code(&["learn", &docs, "--format", "plain-dir", "--batches", "31", "-o", &out]), 1);
    assert_eq!(code(&["learn", &ws.arg("missing"), "--format", "plain-dir", "-o", &out]), 2);
    assert_eq!(code(&["learn", &docs, "-o", &out]), 2);
    let empty = ws.path("empty");
    fs::create_dir_all(&empty).unwrap();
    assert_eq!(code(&["vocab", &empty.to_string_lossy()]), 2);
    assert_eq!(code(&["validate", &docs]), 2);
}
