use std::collections::HashMap;
use std::fmt::Write as _;
use std::io::{BufRead, Write};

use rand::seq::SliceRandom;

use super::Bits;
use crate::error::{Error, Result};
use crate::seed;

const FORMAT_TAG: &str = "hlta-dataset v1";

/// One distinct bit pattern and the number of documents that share it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Row {
    pub bits: Bits,
    pub weight: u64,
}

/// Deduplicated binary document-term data.
///
/// Rows are kept sorted by bit pattern, so two datasets holding the same
/// documents compare equal regardless of how they were assembled.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryDataset {
    variables: Vec<String>,
    index: HashMap<String, usize>,
    rows: Vec<Row>,
    total_weight: u64,
}

impl BinaryDataset {
    /// Build from (bits, weight) pairs, merging identical patterns.
    pub fn from_rows(
        variables: Vec<String>,
        rows: impl IntoIterator<Item = (Bits, u64)>,
    ) -> Result<Self> {
        let index = build_index(&variables)?;
        let mut merged: HashMap<Bits, u64> = HashMap::new();
        for (bits, weight) in rows {
            if bits.len() != variables.len() {
                return Err(Error::VariableMismatch(format!(
                    "row has {} bits but dataset has {} variables",
                    bits.len(),
                    variables.len()
                )));
            }
            if weight == 0 {
                return Err(Error::precondition("row weight must be at least 1"));
            }
            *merged.entry(bits).or_insert(0) += weight;
        }
        Ok(Self::from_merged(variables, index, merged))
    }

    /// Build from one bit pattern per document.
    pub fn from_documents(
        variables: Vec<String>,
        docs: impl IntoIterator<Item = Bits>,
    ) -> Result<Self> {
        Self::from_rows(variables, docs.into_iter().map(|b| (b, 1)))
    }

    fn from_merged(
        variables: Vec<String>,
        index: HashMap<String, usize>,
        merged: HashMap<Bits, u64>,
    ) -> Self {
        let mut rows: Vec<Row> =
            merged.into_iter().map(|(bits, weight)| Row { bits, weight }).collect();
        rows.sort_by(|a, b| a.bits.cmp(&b.bits));
        let total_weight = rows.iter().map(|r| r.weight).sum();
        BinaryDataset { variables, index, rows, total_weight }
    }

    pub fn variables(&self) -> &[String] {
        &self.variables
    }

    pub fn num_variables(&self) -> usize {
        self.variables.len()
    }

    pub fn rows(&self) -> &[Row] {
        &self.rows
    }

    pub fn total_weight(&self) -> u64 {
        self.total_weight
    }

    pub fn is_empty(&self) -> bool {
        self.total_weight == 0
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn column_of(&self, name: &str) -> Result<usize> {
        self.column(name).ok_or_else(|| Error::UnknownVariable(name.to_string()))
    }

    /// Weighted number of documents with the given column set.
    pub fn ones(&self, col: usize) -> u64 {
        self.rows.iter().filter(|r| r.bits.get(col)).map(|r| r.weight).sum()
    }

    /// Restrict to `subset` (in the given order) and re-merge identical rows.
    pub fn project<S: AsRef<str>>(&self, subset: &[S]) -> Result<Self> {
        let cols = subset
            .iter()
            .map(|s| self.column_of(s.as_ref()))
            .collect::<Result<Vec<_>>>()?;
        self.project_columns(&cols)
    }

    pub fn project_columns(&self, cols: &[usize]) -> Result<Self> {
        let variables: Vec<String> = cols.iter().map(|&c| self.variables[c].clone()).collect();
        let index = build_index(&variables)?;
        let mut merged: HashMap<Bits, u64> = HashMap::with_capacity(self.rows.len());
        for row in &self.rows {
            *merged.entry(row.bits.select(cols)).or_insert(0) += row.weight;
        }
        Ok(Self::from_merged(variables, index, merged))
    }

    /// Every document as an index into `rows`, in canonical row order.
    fn documents(&self) -> Vec<usize> {
        let mut docs = Vec::with_capacity(self.total_weight as usize);
        for (i, row) in self.rows.iter().enumerate() {
            docs.extend(std::iter::repeat_n(i, row.weight as usize));
        }
        docs
    }

    fn shuffled_documents(&self, seed: u64, label: &str) -> Vec<usize> {
        let mut docs = self.documents();
        docs.shuffle(&mut seed::stream(seed, label, 0));
        docs
    }

    fn collect(&self, docs: &[usize]) -> Self {
        let mut merged: HashMap<Bits, u64> = HashMap::new();
        for &d in docs {
            *merged.entry(self.rows[d].bits.clone()).or_insert(0) += 1;
        }
        Self::from_merged(self.variables.clone(), self.index.clone(), merged)
    }

    /// Random document-level train/test split; train gets ⌈fraction·N⌉ documents.
    pub fn split(&self, train_fraction: f64, seed: u64) -> Result<(Self, Self)> {
        if self.is_empty() {
            return Err(Error::EmptyData);
        }
        if !(train_fraction > 0.0 && train_fraction < 1.0) {
            return Err(Error::precondition("train fraction must lie in (0, 1)"));
        }
        let n = self.total_weight as usize;
        let n_train = ((train_fraction * n as f64) - 1e-9).ceil().max(0.0) as usize;
        if n_train == 0 || n_train >= n {
            return Err(Error::precondition(format!(
                "split of {n} documents at fraction {train_fraction} leaves an empty part"
            )));
        }
        let docs = self.shuffled_documents(seed, "split");
        Ok((self.collect(&docs[..n_train]), self.collect(&docs[n_train..])))
    }

    /// Random document-level partition into `batches` parts whose sizes differ by at most one.
    pub fn partition_batches(&self, batches: usize, seed: u64) -> Result<Vec<Self>> {
        let n = self.total_weight as usize;
        if batches == 0 || batches > n {
            return Err(Error::precondition(format!(
                "cannot partition {n} documents into {batches} batches"
            )));
        }
        if batches == 1 {
            return Ok(vec![self.clone()]);
        }
        let docs = self.shuffled_documents(seed, "batches");
        let (base, extra) = (n / batches, n % batches);
        let mut out = Vec::with_capacity(batches);
        let mut start = 0;
        for b in 0..batches {
            let size = base + usize::from(b < extra);
            out.push(self.collect(&docs[start..start + size]));
            start += size;
        }
        Ok(out)
    }

    /// Serialize to the sparse text format: a header with variable names, then
    /// one line per row holding the weight followed by the set-bit indices.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "{FORMAT_TAG}").unwrap();
        writeln!(out, "variables {}", self.variables.len()).unwrap();
        for v in &self.variables {
            writeln!(out, "{v}").unwrap();
        }
        writeln!(out, "rows {} total {}", self.rows.len(), self.total_weight).unwrap();
        for row in &self.rows {
            write!(out, "{}", row.weight).unwrap();
            for i in row.bits.iter_ones() {
                write!(out, " {i}").unwrap();
            }
            out.push('\n');
        }
        out
    }

    pub fn write_to(&self, mut w: impl Write) -> Result<()> {
        w.write_all(self.to_text().as_bytes())?;
        Ok(())
    }

    pub fn read_from(r: impl BufRead) -> Result<Self> {
        let mut lines = r.lines().enumerate().map(|(i, l)| (i + 1, l));
        let mut next = |what: &str| -> Result<(usize, String)> {
            match lines.next() {
                Some((n, Ok(l))) => Ok((n, l)),
                Some((_, Err(e))) => Err(e.into()),
                None => Err(Error::parse(0, format!("unexpected end of input, expected {what}"))),
            }
        };
        let (n, tag) = next("format tag")?;
        if tag.trim() != FORMAT_TAG {
            return Err(Error::parse(n, format!("expected `{FORMAT_TAG}`")));
        }
        let (n, header) = next("variable count")?;
        let count: usize = header
            .strip_prefix("variables ")
            .and_then(|s| s.trim().parse().ok())
            .ok_or_else(|| Error::parse(n, "expected `variables <count>`"))?;
        let mut variables = Vec::with_capacity(count);
        for _ in 0..count {
            let (n, name) = next("variable name")?;
            let name = name.trim();
            if name.is_empty() || name.contains(char::is_whitespace) {
                return Err(Error::parse(n, "variable names must be non-empty tokens"));
            }
            variables.push(name.to_string());
        }
        let (n, header) = next("row header")?;
        let parts: Vec<&str> = header.split_whitespace().collect();
        let (num_rows, total): (usize, u64) = match parts.as_slice() {
            ["rows", r, "total", t] => (
                r.parse().map_err(|_| Error::parse(n, "bad row count"))?,
                t.parse().map_err(|_| Error::parse(n, "bad total weight"))?,
            ),
            _ => return Err(Error::parse(n, "expected `rows <count> total <weight>`")),
        };
        let mut rows = Vec::with_capacity(num_rows);
        for _ in 0..num_rows {
            let (n, line) = next("row")?;
            let mut fields = line.split_whitespace();
            let weight: u64 = fields
                .next()
                .and_then(|w| w.parse().ok())
                .filter(|&w| w >= 1)
                .ok_or_else(|| Error::parse(n, "row weight must be a positive integer"))?;
            let mut bits = Bits::zeros(variables.len());
            for f in fields {
                let i: usize = f.parse().map_err(|_| Error::parse(n, format!("bad index `{f}`")))?;
                if i >= variables.len() {
                    return Err(Error::parse(n, format!("index {i} out of range")));
                }
                bits.set(i, true);
            }
            rows.push((bits, weight));
        }
        let data = Self::from_rows(variables, rows)?;
        if data.total_weight != total {
            return Err(Error::parse(n, "total weight does not match row weights"));
        }
        Ok(data)
    }
}

fn build_index(variables: &[String]) -> Result<HashMap<String, usize>> {
    let mut index = HashMap::with_capacity(variables.len());
    for (i, v) in variables.iter().enumerate() {
        if index.insert(v.clone(), i).is_some() {
            return Err(Error::precondition(format!("duplicate variable `{v}`")));
        }
    }
    Ok(index)
}
