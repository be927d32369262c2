//! Exact inference on latent tree models.

pub(crate) mod engine;
mod moments;
mod oracle;

use std::collections::BTreeMap;
use std::fmt;

use rand::Rng;
use rayon::prelude::*;

pub use moments::{moments_diagnostic, MomentsDiagnostic};
pub use oracle::brute_force_joint;

use crate::corpus::{BinaryDataset, Bits};
use crate::error::{Error, Result};
use crate::ltm::LatentTreeModel;
use engine::{ColumnMap, Engine, CHUNK_ROWS};

/// Largest subset [`marginal`] will tabulate.
pub const MAX_MARGINAL_VARIABLES: usize = 20;

/// Observed states keyed by variable name.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Evidence {
    assignment: BTreeMap<String, usize>,
}

impl Evidence {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, variable: impl Into<String>, state: usize) -> Self {
        self.assignment.insert(variable.into(), state);
        self
    }

    pub fn set(&mut self, variable: impl Into<String>, state: usize) {
        self.assignment.insert(variable.into(), state);
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, usize)> {
        self.assignment.iter().map(|(k, &v)| (k.as_str(), v))
    }

    pub fn is_empty(&self) -> bool {
        self.assignment.is_empty()
    }

    fn apply(&self, model: &LatentTreeModel, target: &mut [Option<usize>], allow_latent: bool) -> Result<()> {
        for (name, state) in self.iter() {
            let v = model.require(name)?;
            if model.variable(v).is_latent() && !allow_latent {
                return Err(Error::precondition(format!("evidence on latent variable `{name}`")));
            }
            if state >= model.cardinality(v) {
                return Err(Error::precondition(format!("state {state} out of range for `{name}`")));
            }
            target[v] = Some(state);
        }
        Ok(())
    }
}

/// Explicit distribution over every configuration of a few variables.
/// Configurations are indexed in mixed radix, first variable most significant.
#[derive(Debug, Clone, PartialEq)]
pub struct JointTable {
    pub variables: Vec<String>,
    pub cardinalities: Vec<usize>,
    pub probabilities: Vec<f64>,
}

impl JointTable {
    pub fn index_of(&self, config: &[usize]) -> usize {
        config.iter().zip(&self.cardinalities).fold(0, |acc, (&s, &c)| acc * c + s)
    }

    pub fn config_of(&self, mut index: usize) -> Vec<usize> {
        let mut config = vec![0; self.cardinalities.len()];
        for (slot, &c) in config.iter_mut().zip(&self.cardinalities).rev() {
            *slot = index % c;
            index /= c;
        }
        config
    }

    pub fn get(&self, config: &[usize]) -> f64 {
        self.probabilities[self.index_of(config)]
    }

    pub fn total(&self) -> f64 {
        self.probabilities.iter().sum()
    }

    /// Sum out everything not in `keep` (kept in the order given).
    pub fn marginalize<S: AsRef<str>>(&self, keep: &[S]) -> Result<JointTable> {
        let pos = keep
            .iter()
            .map(|k| {
                self.variables
                    .iter()
                    .position(|v| v == k.as_ref())
                    .ok_or_else(|| Error::UnknownVariable(k.as_ref().to_string()))
            })
            .collect::<Result<Vec<_>>>()?;
        let cards: Vec<usize> = pos.iter().map(|&p| self.cardinalities[p]).collect();
        let mut out = JointTable {
            variables: keep.iter().map(|k| k.as_ref().to_string()).collect(),
            probabilities: vec![0.0; cards.iter().product()],
            cardinalities: cards,
        };
        for (i, &p) in self.probabilities.iter().enumerate() {
            let config = self.config_of(i);
            let sub: Vec<usize> = pos.iter().map(|&j| config[j]).collect();
            let k = out.index_of(&sub);
            out.probabilities[k] += p;
        }
        Ok(out)
    }
}

impl fmt::Display for JointTable {
    /// Sorted `config<TAB>probability` lines under a header naming the variables.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{}\tp", self.variables.join(" "))?;
        for (i, p) in self.probabilities.iter().enumerate() {
            let config: Vec<String> = self.config_of(i).iter().map(|s| s.to_string()).collect();
            writeln!(f, "{}\t{p:.17e}", config.join(" "))?;
        }
        Ok(())
    }
}

/// Σ_rows weight · ln P(row). Model leaves absent from the data are summed out.
/// Returns −∞ when some row is impossible under the model.
pub fn log_likelihood(model: &LatentTreeModel, data: &BinaryDataset) -> Result<f64> {
    let map = ColumnMap::new(model, data)?;
    let engine = Engine::new(model);
    let partial: Vec<f64> = data
        .rows()
        .par_chunks(CHUNK_ROWS)
        .map(|chunk| {
            let mut ws = engine.workspace();
            chunk
                .iter()
                .map(|row| {
                    map.load(&row.bits, &mut ws);
                    row.weight as f64 * engine.collect(&mut ws)
                })
                .sum::<f64>()
        })
        .collect();
    Ok(partial.into_iter().sum())
}

/// Per-row log-probabilities, in row order.
pub fn row_log_probabilities(model: &LatentTreeModel, data: &BinaryDataset) -> Result<Vec<f64>> {
    let map = ColumnMap::new(model, data)?;
    let engine = Engine::new(model);
    Ok(data
        .rows()
        .par_chunks(CHUNK_ROWS)
        .flat_map_iter(|chunk| {
            let mut ws = engine.workspace();
            chunk
                .iter()
                .map(|row| {
                    map.load(&row.bits, &mut ws);
                    engine.collect(&mut ws)
                })
                .collect::<Vec<_>>()
        })
        .collect())
}

/// Posterior distribution of `target` given observed evidence.
pub fn posterior(model: &LatentTreeModel, target: &str, evidence: &Evidence) -> Result<Vec<f64>> {
    let t = model.require(target)?;
    let engine = Engine::new(model);
    let mut ws = engine.workspace();
    evidence.apply(model, &mut ws.evidence, false)?;
    if engine.collect(&mut ws) == f64::NEG_INFINITY {
        return Err(Error::ImpossibleEvidence);
    }
    engine.distribute(&mut ws);
    Ok(engine.node_posterior(&ws, t))
}

/// Posteriors of the listed variables for every dataset row, in row order.
/// Impossible rows fall back to the prior marginals.
pub fn row_posteriors(
    model: &LatentTreeModel,
    data: &BinaryDataset,
    targets: &[usize],
) -> Result<Vec<Vec<Vec<f64>>>> {
    let map = ColumnMap::new(model, data)?;
    let engine = Engine::new(model);
    let prior = model.node_marginals();
    Ok(data
        .rows()
        .par_chunks(CHUNK_ROWS)
        .flat_map_iter(|chunk| {
            let mut ws = engine.workspace();
            chunk
                .iter()
                .map(|row| {
                    map.load(&row.bits, &mut ws);
                    if engine.collect(&mut ws) == f64::NEG_INFINITY {
                        return targets.iter().map(|&t| prior[t].clone()).collect();
                    }
                    engine.distribute(&mut ws);
                    targets.iter().map(|&t| engine.node_posterior(&ws, t)).collect()
                })
                .collect::<Vec<_>>()
        })
        .collect())
}

/// Exact joint marginal of `subset`, which may include latent variables.
pub fn marginal<S: AsRef<str>>(model: &LatentTreeModel, subset: &[S]) -> Result<JointTable> {
    if subset.len() > MAX_MARGINAL_VARIABLES {
        return Err(Error::TooLarge { what: "marginal subset", size: subset.len(), limit: MAX_MARGINAL_VARIABLES });
    }
    let vars = subset.iter().map(|s| model.require(s.as_ref())).collect::<Result<Vec<_>>>()?;
    for (i, v) in vars.iter().enumerate() {
        if vars[..i].contains(v) {
            return Err(Error::precondition(format!("`{}` listed twice", model.name(*v))));
        }
    }
    let cards: Vec<usize> = vars.iter().map(|&v| model.cardinality(v)).collect();
    let mut table = JointTable {
        variables: vars.iter().map(|&v| model.name(v).to_string()).collect(),
        probabilities: vec![0.0; cards.iter().product()],
        cardinalities: cards.clone(),
    };
    let Some((&last, head)) = vars.split_last() else {
        table.probabilities = vec![1.0];
        return Ok(table);
    };
    let engine = Engine::new(model);
    let mut ws = engine.workspace();
    let last_card = model.cardinality(last);
    // Clamp all but the last variable, read the last one's posterior.
    let head_configs: usize = cards[..head.len()].iter().product();
    for h in 0..head_configs {
        let mut rem = h;
        for (k, &v) in head.iter().enumerate().rev() {
            ws.evidence[v] = Some(rem % cards[k]);
            rem /= cards[k];
        }
        let ll = engine.collect(&mut ws);
        if ll == f64::NEG_INFINITY {
            continue;
        }
        engine.distribute(&mut ws);
        let post = engine.node_posterior(&ws, last);
        let p = ll.exp();
        for x in 0..last_card {
            table.probabilities[h * last_card + x] = p * post[x];
        }
    }
    Ok(table)
}

/// Draw `n` documents from the model, keeping only observed variables.
pub fn sample(model: &LatentTreeModel, n: usize, rng: &mut impl Rng) -> Result<BinaryDataset> {
    let observed: Vec<usize> = model.observed().collect();
    if observed.iter().any(|&v| model.cardinality(v) != 2) {
        return Err(Error::precondition("sampling into binary data needs binary observed variables"));
    }
    let mut states = vec![0usize; model.len()];
    let mut docs = Vec::with_capacity(n);
    for _ in 0..n {
        for &v in model.pre_order() {
            let row = model.parent(v).map_or(0, |p| states[p]);
            let probs = model.table(v).row(row);
            let mut u: f64 = rng.gen();
            let mut s = probs.len() - 1;
            for (x, &p) in probs.iter().enumerate() {
                if u < p {
                    s = x;
                    break;
                }
                u -= p;
            }
            states[v] = s;
        }
        docs.push(Bits::from_bools(&observed.iter().map(|&v| states[v] == 1).collect::<Vec<_>>()));
    }
    BinaryDataset::from_documents(model.observed_names(), docs)
}

/// P(descendant | ancestor) obtained by multiplying tables along the path.
pub(crate) fn path_conditional(model: &LatentTreeModel, ancestor: usize, descendant: usize) -> Option<Vec<Vec<f64>>> {
    let mut path = vec![descendant];
    while *path.last().unwrap() != ancestor {
        path.push(model.parent(*path.last().unwrap())?);
    }
    let ac = model.cardinality(ancestor);
    let mut cond: Vec<Vec<f64>> = (0..ac).map(|a| (0..ac).map(|b| f64::from(u8::from(a == b))).collect()).collect();
    for &v in path.iter().rev().skip(1) {
        let t = model.table(v);
        cond = cond
            .iter()
            .map(|row| (0..t.cols()).map(|x| row.iter().enumerate().map(|(u, &r)| r * t.get(u, x)).sum()).collect())
            .collect();
    }
    Some(cond)
}
