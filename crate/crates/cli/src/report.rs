use std::fmt::Write as _;
use std::time::{SystemTime, UNIX_EPOCH};

use hlta::structure::LearnReport;
use serde::Serialize;

#[derive(Debug, Serialize)]
pub struct Pass {
    pub level: u32,
    pub variables: usize,
    pub islands: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seconds: Option<f64>,
}

#[derive(Debug, Serialize)]
pub struct Heldout {
    pub documents: u64,
    pub loglik: f64,
    pub baseline: f64,
}

#[derive(Debug, Serialize)]
pub struct RunReport {
    pub format: &'static str,
    pub version: u32,
    pub seed: u64,
    pub documents: u64,
    pub words: usize,
    pub levels: u32,
    pub latents_per_level: Vec<usize>,
    pub passes: Vec<Pass>,
    pub final_updates: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub final_em_seconds: Option<f64>,
    pub final_loglik: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub heldout: Option<Heldout>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<u64>,
}

impl RunReport {
    /// `timed` keeps wall-clock figures and the timestamp; without it the
    /// report is a pure function of the inputs.
    pub fn new(learn: &LearnReport, seed: u64, documents: u64, words: usize, timed: bool) -> Self {
        let secs = |s: f64| timed.then_some(s);
        RunReport {
            format: "hlta-report",
            version: 1,
            seed,
            documents,
            words,
            levels: learn.levels,
            latents_per_level: learn.latents_per_level.clone(),
            passes: learn
                .passes
                .iter()
                .map(|p| Pass { level: p.level, variables: p.variables, islands: p.islands, seconds: secs(p.seconds) })
                .collect(),
            final_updates: learn.final_updates,
            final_em_seconds: secs(learn.final_em_seconds),
            final_loglik: learn.final_loglik,
            heldout: None,
            timestamp: timed.then(|| SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())),
        }
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "documents: {}", self.documents);
        let _ = writeln!(out, "words: {}", self.words);
        let _ = writeln!(out, "seed: {}", self.seed);
        let _ = writeln!(out, "levels: {}", self.levels);
        let per_level: Vec<String> = self.latents_per_level.iter().map(|n| n.to_string()).collect();
        let _ = writeln!(out, "latents per level: {}", per_level.join(" "));
        for (i, p) in self.passes.iter().enumerate() {
            let _ = write!(out, "pass {}: level {}, {} variables, {} islands", i + 1, p.level, p.variables, p.islands);
            if let Some(s) = p.seconds {
                let _ = write!(out, ", {s:.2}s");
            }
            out.push('\n');
        }
        let _ = write!(out, "final em: {} updates", self.final_updates);
        if let Some(s) = self.final_em_seconds {
            let _ = write!(out, ", {s:.2}s");
        }
        out.push('\n');
        let _ = writeln!(out, "final loglik: {:.6}", self.final_loglik);
        if let Some(h) = &self.heldout {
            let _ = writeln!(out, "held-out documents: {}", h.documents);
            let _ = writeln!(out, "held-out loglik per doc: {:.6}", h.loglik);
            let _ = writeln!(out, "independent baseline per doc: {:.6}", h.baseline);
        }
        if let Some(t) = self.timestamp {
            let _ = writeln!(out, "timestamp: {t}");
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports always serialize") + "\n"
    }
}
