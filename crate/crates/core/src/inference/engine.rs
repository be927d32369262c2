//! Two-pass message passing in log space.
//!
//! The upward pass collects `lambda[v](x) = ln P(evidence below v | v = x)`
//! and the log-likelihood at the root; the optional downward pass computes
//! `pi[v](x) = ln P(evidence outside v's subtree, v = x)`, from which node
//! and edge posteriors follow.

use crate::corpus::BinaryDataset;
use crate::error::{Error, Result};
use crate::ltm::LatentTreeModel;

#[inline]
pub(crate) fn log_sum_exp(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let max = values.clone().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + values.map(|v| (v - max).exp()).sum::<f64>().ln()
}

#[derive(Debug)]
pub(crate) struct Engine<'m> {
    pub model: &'m LatentTreeModel,
    log_tables: Vec<Vec<f64>>,
    /// Offset of each node's state vector in the flat buffers.
    offsets: Vec<usize>,
    /// Offset of each node's message (sized by its parent's cardinality).
    msg_offsets: Vec<usize>,
    total_states: usize,
    total_msg: usize,
}

#[derive(Debug, Clone)]
pub(crate) struct Workspace {
    pub evidence: Vec<Option<usize>>,
    lambda: Vec<f64>,
    pi: Vec<f64>,
    msg: Vec<f64>,
    outside: Vec<f64>,
    has_evidence: Vec<bool>,
    pub loglik: f64,
}

impl<'m> Engine<'m> {
    pub fn new(model: &'m LatentTreeModel) -> Self {
        let n = model.len();
        let log_tables = model.tables().iter().map(|t| t.values().iter().map(|p| p.ln()).collect()).collect();
        let mut offsets = Vec::with_capacity(n);
        let mut msg_offsets = Vec::with_capacity(n);
        let (mut total_states, mut total_msg) = (0, 0);
        for i in 0..n {
            offsets.push(total_states);
            total_states += model.cardinality(i);
            msg_offsets.push(total_msg);
            total_msg += model.parent(i).map_or(0, |p| model.cardinality(p));
        }
        Engine { model, log_tables, offsets, msg_offsets, total_states, total_msg }
    }

    pub fn workspace(&self) -> Workspace {
        Workspace {
            evidence: vec![None; self.model.len()],
            lambda: vec![0.0; self.total_states],
            pi: vec![0.0; self.total_states],
            msg: vec![0.0; self.total_msg],
            outside: vec![0.0; self.total_msg],
            has_evidence: vec![false; self.model.len()],
            loglik: 0.0,
        }
    }

    #[inline]
    fn log_p(&self, v: usize, parent_state: usize, state: usize) -> f64 {
        self.log_tables[v][parent_state * self.model.cardinality(v) + state]
    }

    /// Upward pass; returns ln P(evidence).
    pub fn collect(&self, ws: &mut Workspace) -> f64 {
        let m = self.model;
        for v in 0..m.len() {
            let card = m.cardinality(v);
            let lam = &mut ws.lambda[self.offsets[v]..self.offsets[v] + card];
            match ws.evidence[v] {
                Some(e) => {
                    for (x, l) in lam.iter_mut().enumerate() {
                        *l = if x == e { 0.0 } else { f64::NEG_INFINITY };
                    }
                    ws.has_evidence[v] = true;
                }
                None => {
                    lam.fill(0.0);
                    ws.has_evidence[v] = false;
                }
            }
        }
        for &v in m.pre_order().iter().rev() {
            let Some(p) = m.parent(v) else { continue };
            let pc = m.cardinality(p);
            let mo = self.msg_offsets[v];
            if !ws.has_evidence[v] {
                ws.msg[mo..mo + pc].fill(0.0);
                continue;
            }
            ws.has_evidence[p] = true;
            let card = m.cardinality(v);
            let lo = self.offsets[v];
            let observed_leaf = m.is_leaf(v) && ws.evidence[v].is_some();
            for u in 0..pc {
                let msg = if observed_leaf {
                    self.log_p(v, u, ws.evidence[v].unwrap())
                } else {
                    log_sum_exp((0..card).map(|x| self.log_p(v, u, x) + ws.lambda[lo + x]))
                };
                ws.msg[mo + u] = msg;
                ws.lambda[self.offsets[p] + u] += msg;
            }
        }
        let r = m.root();
        let lo = self.offsets[r];
        ws.loglik = log_sum_exp((0..m.cardinality(r)).map(|x| self.log_p(r, 0, x) + ws.lambda[lo + x]));
        ws.loglik
    }

    /// Downward pass; requires a preceding [`Engine::collect`] with finite likelihood.
    pub fn distribute(&self, ws: &mut Workspace) {
        let m = self.model;
        let r = m.root();
        for x in 0..m.cardinality(r) {
            ws.pi[self.offsets[r] + x] = self.log_p(r, 0, x);
        }
        for &v in m.pre_order() {
            let Some(p) = m.parent(v) else { continue };
            let pc = m.cardinality(p);
            let (po, mo) = (self.offsets[p], self.msg_offsets[v]);
            for u in 0..pc {
                let own = ws.msg[mo + u];
                ws.outside[mo + u] = if own.is_finite() {
                    ws.pi[po + u] + ws.lambda[po + u] - own
                } else {
                    // recompute without subtracting an infinite message
                    let ev = match ws.evidence[p] {
                        Some(e) if e != u => f64::NEG_INFINITY,
                        _ => 0.0,
                    };
                    let others: f64 = m
                        .children(p)
                        .iter()
                        .filter(|&&c| c != v)
                        .map(|&c| ws.msg[self.msg_offsets[c] + u])
                        .sum();
                    ws.pi[po + u] + ev + others
                };
            }
            let vo = self.offsets[v];
            for x in 0..m.cardinality(v) {
                ws.pi[vo + x] = log_sum_exp((0..pc).map(|u| ws.outside[mo + u] + self.log_p(v, u, x)));
            }
        }
    }

    /// Posterior of `v` after both passes.
    pub fn node_posterior(&self, ws: &Workspace, v: usize) -> Vec<f64> {
        let o = self.offsets[v];
        let card = self.model.cardinality(v);
        let logs: Vec<f64> = (0..card).map(|x| ws.pi[o + x] + ws.lambda[o + x]).collect();
        normalize_logs(&logs)
    }

    /// Joint posterior P(parent = u, v = x | evidence), row-major in (u, x).
    pub fn edge_posterior(&self, ws: &Workspace, v: usize, out: &mut Vec<f64>) {
        let p = self.model.parent(v).expect("edge posterior needs a parent");
        let (pc, card) = (self.model.cardinality(p), self.model.cardinality(v));
        let (mo, vo) = (self.msg_offsets[v], self.offsets[v]);
        out.clear();
        for u in 0..pc {
            for x in 0..card {
                out.push(ws.outside[mo + u] + self.log_p(v, u, x) + ws.lambda[vo + x]);
            }
        }
        let max = out.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for l in out.iter_mut() {
            *l = (*l - max).exp();
            sum += *l;
        }
        for l in out.iter_mut() {
            *l /= sum;
        }
    }
}

pub(crate) fn normalize_logs(logs: &[f64]) -> Vec<f64> {
    let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logs.iter().map(|l| (l - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Maps dataset columns onto model variables.
#[derive(Debug, Clone)]
pub(crate) struct ColumnMap {
    pub targets: Vec<usize>,
}

impl ColumnMap {
    /// Every dataset variable must be an observed variable of the model.
    pub fn new(model: &LatentTreeModel, data: &BinaryDataset) -> Result<Self> {
        let targets = data
            .variables()
            .iter()
            .map(|name| match model.index_of(name) {
                Some(i) if !model.variable(i).is_latent() => Ok(i),
                Some(_) => Err(Error::VariableMismatch(format!("`{name}` is latent in the model"))),
                None => Err(Error::VariableMismatch(format!("`{name}` is not in the model"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(ColumnMap { targets })
    }

    pub fn load(&self, bits: &crate::corpus::Bits, ws: &mut Workspace) {
        for (col, &v) in self.targets.iter().enumerate() {
            ws.evidence[v] = Some(usize::from(bits.get(col)));
        }
    }
}

/// Rows per parallel work unit. Fixed so reductions happen in the same
/// order at any thread count.
pub(crate) const CHUNK_ROWS: usize = 32;
