//! Versioned text document for models.
//!
//! ```text
//! hlta-model v1
//! variables <n>
//! variable <name> <cardinality> <observed|latent> <level>
//! root <name>
//! edges <n-1>
//! edge <parent> <child>
//! tables <n>
//! table <name> <rows> <cols>
//! <row values, 17 significant digits>
//! end
//! ```

use std::collections::HashMap;
use std::fmt::Write as _;

use super::{ConditionalTable, LatentTreeModel, Node, VarKind, Variable};
use crate::error::{Error, Result};

const FORMAT_TAG: &str = "hlta-model v1";

impl LatentTreeModel {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "{FORMAT_TAG}").unwrap();
        writeln!(out, "variables {}", self.len()).unwrap();
        for v in self.variables() {
            writeln!(out, "variable {} {} {} {}", v.name, v.cardinality, v.kind, v.level).unwrap();
        }
        writeln!(out, "root {}", self.name(self.root())).unwrap();
        writeln!(out, "edges {}", self.len() - 1).unwrap();
        for i in 0..self.len() {
            if let Some(p) = self.parent(i) {
                writeln!(out, "edge {} {}", self.name(p), self.name(i)).unwrap();
            }
        }
        writeln!(out, "tables {}", self.len()).unwrap();
        for i in 0..self.len() {
            let t = self.table(i);
            writeln!(out, "table {} {} {}", self.name(i), t.rows(), t.cols()).unwrap();
            for r in 0..t.rows() {
                let row: Vec<String> = t.row(r).iter().map(|x| format!("{x:.16e}")).collect();
                writeln!(out, "{}", row.join(" ")).unwrap();
            }
        }
        writeln!(out, "end").unwrap();
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let mut next = |what: &str| {
            lines
                .next()
                .ok_or_else(|| Error::parse(0, format!("unexpected end of document, expected {what}")))
        };

        let (n, tag) = next("format tag")?;
        if tag != FORMAT_TAG {
            return Err(Error::parse(n, format!("expected `{FORMAT_TAG}`")));
        }
        let count = header(next("variables")?, "variables")?;
        let mut vars = Vec::with_capacity(count);
        for _ in 0..count {
            let (n, line) = next("variable")?;
            let f: Vec<&str> = line.split_whitespace().collect();
            let ["variable", name, card, kind, level] = f.as_slice() else {
                return Err(Error::parse(n, "expected `variable <name> <cardinality> <kind> <level>`"));
            };
            let kind = match *kind {
                "observed" => VarKind::Observed,
                "latent" => VarKind::Latent,
                k => return Err(Error::parse(n, format!("unknown kind `{k}`"))),
            };
            vars.push(Variable {
                name: name.to_string(),
                cardinality: card.parse().map_err(|_| Error::parse(n, "bad cardinality"))?,
                kind,
                level: level.parse().map_err(|_| Error::parse(n, "bad level"))?,
            });
        }
        let index: HashMap<&str, usize> =
            vars.iter().enumerate().map(|(i, v)| (v.name.as_str(), i)).collect();
        let lookup = |n: usize, name: &str| {
            index.get(name).copied().ok_or_else(|| Error::parse(n, format!("unknown variable `{name}`")))
        };

        let (n, line) = next("root")?;
        let root = match line.split_whitespace().collect::<Vec<_>>().as_slice() {
            ["root", name] => lookup(n, name)?,
            _ => return Err(Error::parse(n, "expected `root <name>`")),
        };
        let mut parents: Vec<Option<String>> = vec![None; vars.len()];
        let edges = header(next("edges")?, "edges")?;
        for _ in 0..edges {
            let (n, line) = next("edge")?;
            let ["edge", p, c] = line.split_whitespace().collect::<Vec<_>>()[..] else {
                return Err(Error::parse(n, "expected `edge <parent> <child>`"));
            };
            let (p, c) = (lookup(n, p)?, lookup(n, c)?);
            if c == root || parents[c].is_some() {
                return Err(Error::parse(n, format!("`{}` given a second parent", vars[c].name)));
            }
            parents[c] = Some(vars[p].name.clone());
        }

        let mut tables: Vec<Option<ConditionalTable>> = vec![None; vars.len()];
        let count = header(next("tables")?, "tables")?;
        for _ in 0..count {
            let (n, line) = next("table")?;
            let ["table", name, rows, cols] = line.split_whitespace().collect::<Vec<_>>()[..] else {
                return Err(Error::parse(n, "expected `table <name> <rows> <cols>`"));
            };
            let v = lookup(n, name)?;
            let rows: usize = rows.parse().map_err(|_| Error::parse(n, "bad row count"))?;
            let cols: usize = cols.parse().map_err(|_| Error::parse(n, "bad column count"))?;
            let mut values = Vec::with_capacity(rows * cols);
            for _ in 0..rows {
                let (n, line) = next("table row")?;
                let row = line
                    .split_whitespace()
                    .map(|x| x.parse::<f64>().map_err(|_| Error::parse(n, format!("bad number `{x}`"))))
                    .collect::<Result<Vec<_>>>()?;
                if row.len() != cols {
                    return Err(Error::parse(n, format!("expected {cols} values, found {}", row.len())));
                }
                values.extend(row);
            }
            if tables[v].replace(ConditionalTable::new(rows, cols, values)).is_some() {
                return Err(Error::parse(n, format!("duplicate table for `{name}`")));
            }
        }
        let (n, end) = next("end")?;
        if end != "end" {
            return Err(Error::parse(n, "expected `end`"));
        }

        let mut nodes = Vec::with_capacity(vars.len());
        for ((variable, parent), table) in vars.into_iter().zip(parents).zip(tables) {
            let table = table
                .ok_or_else(|| Error::parse(n, format!("missing table for `{}`", variable.name)))?;
            nodes.push(Node { variable, parent, table });
        }
        LatentTreeModel::new(nodes)
    }
}

fn header((n, line): (usize, &str), key: &str) -> Result<usize> {
    line.strip_prefix(key)
        .and_then(|rest| rest.trim().parse().ok())
        .ok_or_else(|| Error::parse(n, format!("expected `{key} <count>`")))
}
