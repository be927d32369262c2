//! Parameter estimation: EM with frozen tables, progressive EM on small
//! sub-models, BIC scoring and a single-sweep stochastic EM.

mod pem;

use std::collections::BTreeSet;

use rayon::prelude::*;

pub use pem::{estimate_latent_edge, learn_lcm, pem_lcm, pem_ltm_2l};

use crate::corpus::BinaryDataset;
use crate::error::{Error, Result};
use crate::inference::engine::{ColumnMap, Engine, CHUNK_ROWS};
use crate::inference::log_likelihood;
use crate::ltm::{ConditionalTable, LatentTreeModel};
use crate::seed;

#[derive(Debug, Clone, PartialEq)]
pub struct EmOptions {
    pub max_iterations: usize,
    /// Stop once an iteration improves the objective by less than this.
    pub loglik_tolerance: f64,
    pub restarts: usize,
    pub seed: u64,
    /// Pseudo-count added to every table cell in the M-step.
    pub smoothing: f64,
}

impl Default for EmOptions {
    fn default() -> Self {
        EmOptions { max_iterations: 100, loglik_tolerance: 1e-4, restarts: 16, seed: 0, smoothing: 1.0 }
    }
}

impl EmOptions {
    /// Same options on an independent random stream.
    pub fn stream(&self, label: &str, index: u64) -> Self {
        EmOptions { seed: seed::derive_seed(self.seed, label, index), ..self.clone() }
    }

    fn check(&self) -> Result<()> {
        if self.max_iterations == 0 || self.restarts == 0 {
            return Err(Error::precondition("max_iterations and restarts must be at least 1"));
        }
        if self.loglik_tolerance.is_nan() || self.loglik_tolerance <= 0.0 || self.smoothing.is_nan() || self.smoothing < 0.0 {
            return Err(Error::precondition("tolerance must be positive and smoothing non-negative"));
        }
        Ok(())
    }
}

/// Which tables EM may change; everything else stays bit-identical.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FreeParameterSet {
    All,
    Only(BTreeSet<String>),
}

impl FreeParameterSet {
    pub fn only<S: AsRef<str>>(names: &[S]) -> Self {
        FreeParameterSet::Only(names.iter().map(|s| s.as_ref().to_string()).collect())
    }

    pub fn mask(&self, model: &LatentTreeModel) -> Result<Vec<bool>> {
        match self {
            FreeParameterSet::All => Ok(vec![true; model.len()]),
            FreeParameterSet::Only(names) => {
                let mut mask = vec![false; model.len()];
                for n in names {
                    mask[model.require(n)?] = true;
                }
                Ok(mask)
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct EmOutcome {
    pub model: LatentTreeModel,
    /// Training log-likelihood of `model`.
    pub loglik: f64,
    /// Log-likelihood before the first and after every M-step of the returned run.
    pub loglik_trace: Vec<f64>,
    /// Penalized objective (log-likelihood plus the smoothing log-prior of the
    /// free tables) along the same run; EM never decreases it.
    pub objective_trace: Vec<f64>,
    pub iterations: usize,
}

/// Expected sufficient statistics, one flat block per table.
struct Stats {
    loglik: f64,
    counts: Vec<f64>,
}

struct Layout {
    offsets: Vec<usize>,
    total: usize,
}

impl Layout {
    fn new(model: &LatentTreeModel) -> Self {
        let mut offsets = Vec::with_capacity(model.len());
        let mut total = 0;
        for t in model.tables() {
            offsets.push(total);
            total += t.values().len();
        }
        Layout { offsets, total }
    }
}

fn e_step(model: &LatentTreeModel, data: &BinaryDataset, map: &ColumnMap, free: &[bool]) -> Stats {
    let engine = Engine::new(model);
    let layout = Layout::new(model);
    let free_nodes: Vec<usize> = (0..model.len()).filter(|&v| free[v]).collect();
    let root = model.root();
    let partial: Vec<Stats> = data
        .rows()
        .par_chunks(CHUNK_ROWS)
        .map(|chunk| {
            let mut ws = engine.workspace();
            let mut stats = Stats { loglik: 0.0, counts: vec![0.0; layout.total] };
            let mut edge = Vec::new();
            for row in chunk {
                map.load(&row.bits, &mut ws);
                let ll = engine.collect(&mut ws);
                if ll == f64::NEG_INFINITY {
                    stats.loglik = f64::NEG_INFINITY;
                    continue;
                }
                let w = row.weight as f64;
                stats.loglik += w * ll;
                engine.distribute(&mut ws);
                for &v in &free_nodes {
                    let o = layout.offsets[v];
                    if v == root {
                        for (x, p) in engine.node_posterior(&ws, v).into_iter().enumerate() {
                            stats.counts[o + x] += w * p;
                        }
                    } else {
                        engine.edge_posterior(&ws, v, &mut edge);
                        for (k, p) in edge.iter().enumerate() {
                            stats.counts[o + k] += w * p;
                        }
                    }
                }
            }
            stats
        })
        .collect();
    let mut total = Stats { loglik: 0.0, counts: vec![0.0; layout.total] };
    for s in partial {
        total.loglik += s.loglik;
        for (t, c) in total.counts.iter_mut().zip(&s.counts) {
            *t += c;
        }
    }
    total
}

fn m_step(model: &LatentTreeModel, stats: &Stats, free: &[bool], smoothing: f64) -> LatentTreeModel {
    let layout = Layout::new(model);
    let mut out = model.clone();
    for (v, table) in out.tables_mut().iter_mut().enumerate() {
        if !free[v] {
            continue;
        }
        let (rows, cols) = (table.rows(), table.cols());
        let counts = &stats.counts[layout.offsets[v]..layout.offsets[v] + rows * cols];
        let mut values = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            let row = &counts[r * cols..(r + 1) * cols];
            let denom: f64 = row.iter().sum::<f64>() + smoothing * cols as f64;
            if denom > 0.0 {
                values.extend(row.iter().map(|c| (c + smoothing) / denom));
            } else {
                values.extend_from_slice(table.row(r));
            }
        }
        *table = ConditionalTable::new(rows, cols, values);
    }
    out
}

fn log_prior(model: &LatentTreeModel, free: &[bool], smoothing: f64) -> f64 {
    if smoothing == 0.0 {
        return 0.0;
    }
    let sum: f64 = (0..model.len())
        .filter(|&v| free[v])
        .flat_map(|v| model.table(v).values().iter().map(|p| p.ln()))
        .sum();
    smoothing * sum
}

struct Run {
    model: LatentTreeModel,
    stats: Stats,
    loglik_trace: Vec<f64>,
    objective_trace: Vec<f64>,
    iterations: usize,
    converged: bool,
}

impl Run {
    fn start(model: LatentTreeModel, data: &BinaryDataset, map: &ColumnMap, free: &[bool], smoothing: f64) -> Self {
        let stats = e_step(&model, data, map, free);
        let objective = stats.loglik + log_prior(&model, free, smoothing);
        Run {
            loglik_trace: vec![stats.loglik],
            objective_trace: vec![objective],
            model,
            stats,
            iterations: 0,
            converged: false,
        }
    }

    fn objective(&self) -> f64 {
        *self.objective_trace.last().unwrap()
    }

    fn advance(&mut self, steps: usize, data: &BinaryDataset, map: &ColumnMap, free: &[bool], opts: &EmOptions) {
        for _ in 0..steps {
            if self.converged {
                return;
            }
            let next = m_step(&self.model, &self.stats, free, opts.smoothing);
            let stats = e_step(&next, data, map, free);
            let objective = stats.loglik + log_prior(&next, free, opts.smoothing);
            let gain = objective - self.objective();
            self.model = next;
            self.stats = stats;
            self.loglik_trace.push(self.stats.loglik);
            self.objective_trace.push(objective);
            self.iterations += 1;
            if gain < opts.loglik_tolerance {
                self.converged = true;
            }
        }
    }
}

fn randomize(model: &LatentTreeModel, free: &[bool], rng: &mut impl rand::Rng) -> LatentTreeModel {
    let mut out = model.clone();
    for (v, table) in out.tables_mut().iter_mut().enumerate() {
        if free[v] {
            *table = ConditionalTable::random(table.rows(), table.cols(), rng);
        }
    }
    out
}

/// Relabel latent states so that state 0 is the one under which the
/// children's state 0 is most probable in total. Only latents whose own
/// table and all child tables are free are touched.
pub(crate) fn canonicalize(model: &mut LatentTreeModel, free: &[bool]) {
    let order: Vec<usize> = model.pre_order().iter().rev().copied().collect();
    for v in order {
        let var = model.variable(v);
        if !var.is_latent() || var.cardinality != 2 || !free[v] {
            continue;
        }
        let children = model.children(v).to_vec();
        if children.is_empty() || children.iter().any(|&c| !free[c]) {
            continue;
        }
        let score = |s: usize| children.iter().map(|&c| model.table(c).get(s, 0)).sum::<f64>();
        if score(1) > score(0) {
            let tables = model.tables_mut();
            tables[v].swap_cols(0, 1);
            for &c in &children {
                tables[c].swap_rows(0, 1);
            }
        }
    }
}

/// EM on `model` with the tables outside `free` held fixed.
///
/// With `restarts > 1`, the first candidate starts from the model's current
/// parameters and the others from random free tables; each runs a short
/// burn-in, the best one by penalized objective is continued.
pub fn em(
    model: &LatentTreeModel,
    data: &BinaryDataset,
    opts: &EmOptions,
    free: &FreeParameterSet,
) -> Result<EmOutcome> {
    opts.check()?;
    if data.is_empty() {
        return Err(Error::EmptyData);
    }
    let mask = free.mask(model)?;
    let map = ColumnMap::new(model, data)?;
    let mut best = if opts.restarts == 1 {
        let mut run = Run::start(model.clone(), data, &map, &mask, opts.smoothing);
        run.advance(opts.max_iterations, data, &map, &mask, opts);
        run
    } else {
        let burn_in = opts.max_iterations.min(10);
        let mut best: Option<Run> = None;
        for r in 0..opts.restarts {
            let init = if r == 0 {
                model.clone()
            } else {
                randomize(model, &mask, &mut seed::stream(opts.seed, "em-restart", r as u64))
            };
            let mut run = Run::start(init, data, &map, &mask, opts.smoothing);
            run.advance(burn_in, data, &map, &mask, opts);
            if best.as_ref().is_none_or(|b| run.objective() > b.objective()) {
                best = Some(run);
            }
        }
        let mut run = best.unwrap();
        run.advance(opts.max_iterations - run.iterations, data, &map, &mask, opts);
        run
    };
    canonicalize(&mut best.model, &mask);
    Ok(EmOutcome {
        loglik: best.stats.loglik,
        model: best.model,
        loglik_trace: best.loglik_trace,
        objective_trace: best.objective_trace,
        iterations: best.iterations,
    })
}

/// log-likelihood − (d/2)·ln N with d the number of free parameters.
pub fn bic(model: &LatentTreeModel, data: &BinaryDataset) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::EmptyData);
    }
    let d = model.num_free_parameters() as f64;
    Ok(log_likelihood(model, data)? - d / 2.0 * (data.total_weight() as f64).ln())
}

#[derive(Debug, Clone)]
pub struct StochasticOutcome {
    pub model: LatentTreeModel,
    /// One parameter update per batch.
    pub updates: usize,
}

/// One sweep over `batches`: a single EM update (all tables free) per batch,
/// each starting from the parameters left by the previous one.
pub fn stochastic_em(
    model: &LatentTreeModel,
    batches: &[BinaryDataset],
    smoothing: f64,
) -> Result<StochasticOutcome> {
    if batches.is_empty() {
        return Err(Error::precondition("stochastic EM needs at least one batch"));
    }
    let mask = vec![true; model.len()];
    let mut current = model.clone();
    let mut updates = 0;
    for batch in batches {
        if batch.is_empty() {
            return Err(Error::EmptyData);
        }
        let map = ColumnMap::new(&current, batch)?;
        let stats = e_step(&current, batch, &map, &mask);
        current = m_step(&current, &stats, &mask, smoothing);
        updates += 1;
    }
    canonicalize(&mut current, &mask);
    Ok(StochasticOutcome { model: current, updates })
}
