//! Rooted latent tree models: observed leaves, latent internal nodes,
//! a marginal at the root and one conditional table per other node.

mod format;
mod reroot;
mod table;

use std::collections::{HashMap, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

pub use table::{ConditionalTable, STOCHASTIC_TOLERANCE};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VarKind {
    Observed,
    Latent,
}

impl fmt::Display for VarKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            VarKind::Observed => "observed",
            VarKind::Latent => "latent",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Variable {
    pub name: String,
    pub cardinality: usize,
    pub kind: VarKind,
    pub level: u32,
}

impl Variable {
    /// Binary observed word variable.
    pub fn observed(name: impl Into<String>) -> Self {
        Variable { name: name.into(), cardinality: 2, kind: VarKind::Observed, level: 0 }
    }

    /// Binary latent variable at `level`.
    pub fn latent(name: impl Into<String>, level: u32) -> Self {
        Variable { name: name.into(), cardinality: 2, kind: VarKind::Latent, level }
    }

    pub fn is_latent(&self) -> bool {
        self.kind == VarKind::Latent
    }
}

/// Name for the `index`-th latent created at `level`.
pub fn latent_name(level: u32, index: usize) -> String {
    format!("Z{level}.{index}")
}

/// A variable together with its parent and conditional table, used to
/// assemble and take apart models.
#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub variable: Variable,
    pub parent: Option<String>,
    pub table: ConditionalTable,
}

impl Node {
    pub fn new(variable: Variable, parent: Option<&str>, table: ConditionalTable) -> Self {
        Node { variable, parent: parent.map(str::to_string), table }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    NotATree(String),
    ObservedNonLeaf(String),
    LatentLeaf(String),
    ObservedRoot(String),
    ObservedLevel(String),
    Cardinality(String),
    TableShape { variable: String, expected: (usize, usize), found: (usize, usize) },
    NotStochastic { variable: String, reason: String },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NotATree(why) => write!(f, "not a tree: {why}"),
            Violation::ObservedNonLeaf(v) => write!(f, "observed non-leaf: {v}"),
            Violation::LatentLeaf(v) => write!(f, "latent leaf: {v}"),
            Violation::ObservedRoot(v) => write!(f, "observed root: {v}"),
            Violation::ObservedLevel(v) => write!(f, "observed variable with nonzero level: {v}"),
            Violation::Cardinality(v) => write!(f, "unsupported cardinality: {v}"),
            Violation::TableShape { variable, expected, found } => write!(
                f,
                "table shape for {variable}: expected {}x{}, found {}x{}",
                expected.0, expected.1, found.0, found.1
            ),
            Violation::NotStochastic { variable, reason } => {
                write!(f, "table for {variable} not stochastic: {reason}")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LatentTreeModel {
    vars: Vec<Variable>,
    parents: Vec<Option<usize>>,
    tables: Vec<ConditionalTable>,
    index: HashMap<String, usize>,
    children: Vec<Vec<usize>>,
    root: usize,
    /// Pre-order from the root (only reachable nodes for malformed models).
    order: Vec<usize>,
}

impl LatentTreeModel {
    /// Assemble and validate.
    pub fn new(nodes: Vec<Node>) -> Result<Self> {
        let model = Self::new_unchecked(nodes)?;
        let violations = model.validate();
        if violations.is_empty() {
            Ok(model)
        } else {
            Err(Error::InvalidModel(violations))
        }
    }

    /// Assemble without checking tree structure or tables. Fails only when
    /// names are duplicated or a parent name is unknown.
    pub fn new_unchecked(nodes: Vec<Node>) -> Result<Self> {
        let mut index = HashMap::with_capacity(nodes.len());
        for (i, n) in nodes.iter().enumerate() {
            if index.insert(n.variable.name.clone(), i).is_some() {
                return Err(Error::precondition(format!("duplicate variable `{}`", n.variable.name)));
            }
        }
        let mut vars = Vec::with_capacity(nodes.len());
        let mut parents = Vec::with_capacity(nodes.len());
        let mut tables = Vec::with_capacity(nodes.len());
        for n in nodes {
            let parent = match &n.parent {
                Some(p) => Some(*index.get(p).ok_or_else(|| Error::UnknownVariable(p.clone()))?),
                None => None,
            };
            vars.push(n.variable);
            parents.push(parent);
            tables.push(n.table);
        }
        let mut children = vec![Vec::new(); vars.len()];
        for (i, p) in parents.iter().enumerate() {
            if let Some(p) = *p {
                children[p].push(i);
            }
        }
        let root = parents.iter().position(Option::is_none).unwrap_or(0);
        let mut model = LatentTreeModel { vars, parents, tables, index, children, root, order: Vec::new() };
        model.order = model.compute_order();
        Ok(model)
    }

    fn compute_order(&self) -> Vec<usize> {
        if self.vars.is_empty() {
            return Vec::new();
        }
        let mut seen = vec![false; self.vars.len()];
        let mut order = Vec::with_capacity(self.vars.len());
        let mut stack = vec![self.root];
        while let Some(v) = stack.pop() {
            if std::mem::replace(&mut seen[v], true) {
                continue;
            }
            order.push(v);
            stack.extend(self.children[v].iter().rev().copied());
        }
        order
    }

    /// Every structural and numerical problem with the model.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        if self.vars.is_empty() {
            out.push(Violation::NotATree("model has no variables".into()));
            return out;
        }
        let roots: Vec<&str> = (0..self.len())
            .filter(|&i| self.parents[i].is_none())
            .map(|i| self.vars[i].name.as_str())
            .collect();
        match roots.len() {
            0 => out.push(Violation::NotATree("no root (cycle through every node)".into())),
            1 => {
                if self.order.len() != self.len() {
                    out.push(Violation::NotATree(format!(
                        "{} variables unreachable from root (cycle)",
                        self.len() - self.order.len()
                    )));
                }
            }
            _ => out.push(Violation::NotATree(format!("multiple roots: {}", roots.join(", ")))),
        }
        if roots.len() == 1 && !self.vars[self.root].is_latent() {
            out.push(Violation::ObservedRoot(self.vars[self.root].name.clone()));
        }
        for (i, v) in self.vars.iter().enumerate() {
            let leaf = self.children[i].is_empty();
            match v.kind {
                VarKind::Observed if !leaf => out.push(Violation::ObservedNonLeaf(v.name.clone())),
                VarKind::Latent if leaf && self.len() > 1 => {
                    out.push(Violation::LatentLeaf(v.name.clone()))
                }
                _ => {}
            }
            if v.kind == VarKind::Observed && v.level != 0 {
                out.push(Violation::ObservedLevel(v.name.clone()));
            }
            if v.cardinality < 2 || (v.is_latent() && v.cardinality != 2) {
                out.push(Violation::Cardinality(format!("{} has {}", v.name, v.cardinality)));
            }
            let t = &self.tables[i];
            let expected = (self.parents[i].map_or(1, |p| self.vars[p].cardinality), v.cardinality);
            if (t.rows(), t.cols()) != expected {
                out.push(Violation::TableShape {
                    variable: v.name.clone(),
                    expected,
                    found: (t.rows(), t.cols()),
                });
            } else if let Some(reason) = t.problem() {
                out.push(Violation::NotStochastic { variable: v.name.clone(), reason });
            }
        }
        out
    }

    pub fn len(&self) -> usize {
        self.vars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vars.is_empty()
    }

    pub fn variables(&self) -> &[Variable] {
        &self.vars
    }

    pub fn variable(&self, i: usize) -> &Variable {
        &self.vars[i]
    }

    pub fn name(&self, i: usize) -> &str {
        &self.vars[i].name
    }

    pub fn cardinality(&self, i: usize) -> usize {
        self.vars[i].cardinality
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn require(&self, name: &str) -> Result<usize> {
        self.index_of(name).ok_or_else(|| Error::UnknownVariable(name.to_string()))
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn parent(&self, i: usize) -> Option<usize> {
        self.parents[i]
    }

    pub fn children(&self, i: usize) -> &[usize] {
        &self.children[i]
    }

    pub fn table(&self, i: usize) -> &ConditionalTable {
        &self.tables[i]
    }

    pub fn tables(&self) -> &[ConditionalTable] {
        &self.tables
    }

    /// Nodes in pre-order from the root: every parent precedes its children.
    pub fn pre_order(&self) -> &[usize] {
        &self.order
    }

    pub fn is_leaf(&self, i: usize) -> bool {
        self.children[i].is_empty()
    }

    pub fn observed(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(|&i| !self.vars[i].is_latent())
    }

    pub fn latents(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(|&i| self.vars[i].is_latent())
    }

    pub fn observed_names(&self) -> Vec<String> {
        self.observed().map(|i| self.vars[i].name.clone()).collect()
    }

    /// Highest latent level present (0 when there are no latents).
    pub fn top_level(&self) -> u32 {
        self.latents().map(|i| self.vars[i].level).max().unwrap_or(0)
    }

    pub fn latents_at_level(&self, level: u32) -> Vec<usize> {
        self.latents().filter(|&i| self.vars[i].level == level).collect()
    }

    /// All nodes in the subtree rooted at `i`, `i` first.
    pub fn subtree(&self, i: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let mut queue = VecDeque::from([i]);
        while let Some(v) = queue.pop_front() {
            out.push(v);
            queue.extend(self.children[v].iter().copied());
        }
        out
    }

    /// Σ over tables of rows × (cardinality − 1).
    pub fn num_free_parameters(&self) -> usize {
        self.tables.iter().map(ConditionalTable::num_free_parameters).sum()
    }

    pub fn nodes(&self) -> Vec<Node> {
        (0..self.len())
            .map(|i| Node {
                variable: self.vars[i].clone(),
                parent: self.parents[i].map(|p| self.vars[p].name.clone()),
                table: self.tables[i].clone(),
            })
            .collect()
    }

    /// Copy with one table replaced; the shape must match.
    pub fn with_table(&self, i: usize, table: ConditionalTable) -> Result<Self> {
        let old = &self.tables[i];
        if (old.rows(), old.cols()) != (table.rows(), table.cols()) {
            return Err(Error::InvalidTable {
                variable: self.vars[i].name.clone(),
                reason: format!(
                    "shape {}x{} does not match {}x{}",
                    table.rows(),
                    table.cols(),
                    old.rows(),
                    old.cols()
                ),
            });
        }
        if let Some(reason) = table.problem() {
            return Err(Error::InvalidTable { variable: self.vars[i].name.clone(), reason });
        }
        let mut out = self.clone();
        out.tables[i] = table;
        Ok(out)
    }

    pub(crate) fn tables_mut(&mut self) -> &mut [ConditionalTable] {
        &mut self.tables
    }

    /// Copy with the named variables (and anything below them) removed.
    pub fn without(&self, names: &[&str]) -> Result<Self> {
        let mut drop = vec![false; self.len()];
        for n in names {
            for v in self.subtree(self.require(n)?) {
                drop[v] = true;
            }
        }
        let nodes = self.nodes().into_iter().enumerate().filter(|(i, _)| !drop[*i]).map(|(_, n)| n);
        LatentTreeModel::new(nodes.collect())
    }
}

/// Latent class model: a single latent variable with observed children.
#[derive(Debug, Clone, PartialEq)]
pub struct Island(LatentTreeModel);

impl Island {
    pub fn new(model: LatentTreeModel) -> Result<Self> {
        let latents = model.latents().count();
        if latents != 1 || !model.variable(model.root()).is_latent() {
            return Err(Error::precondition(format!("an island has one latent variable, found {latents}")));
        }
        Ok(Island(model))
    }

    pub fn latent(&self) -> &Variable {
        self.0.variable(self.0.root())
    }

    pub fn members(&self) -> Vec<String> {
        self.0.observed_names()
    }

    pub fn model(&self) -> &LatentTreeModel {
        &self.0
    }

    pub fn into_model(self) -> LatentTreeModel {
        self.0
    }
}

/// Star-shaped model rooted at `latent`. `tables`, when given, holds P(latent)
/// followed by P(observed_i | latent) in order; otherwise all tables are uniform.
pub fn new_lcm(
    latent: Variable,
    observed: Vec<Variable>,
    tables: Option<Vec<ConditionalTable>>,
) -> Result<Island> {
    if observed.is_empty() {
        return Err(Error::precondition("a latent class model needs at least one observed variable"));
    }
    let tables = match tables {
        Some(t) => {
            if t.len() != observed.len() + 1 {
                return Err(Error::precondition(format!(
                    "expected {} tables, got {}",
                    observed.len() + 1,
                    t.len()
                )));
            }
            t
        }
        None => std::iter::once(ConditionalTable::uniform(1, latent.cardinality))
            .chain(observed.iter().map(|o| ConditionalTable::uniform(latent.cardinality, o.cardinality)))
            .collect(),
    };
    let names: Vec<String> =
        std::iter::once(&latent).chain(&observed).map(|v| v.name.clone()).collect();
    for (name, t) in names.iter().zip(&tables) {
        if let Some(reason) = t.problem() {
            return Err(Error::InvalidTable { variable: name.clone(), reason });
        }
    }
    let mut tables = tables.into_iter();
    let mut nodes = vec![Node::new(latent.clone(), None, tables.next().unwrap())];
    nodes.extend(observed.into_iter().zip(tables).map(|(v, t)| Node::new(v, Some(&latent.name), t)));
    Island::new(LatentTreeModel::new(nodes)?)
}
