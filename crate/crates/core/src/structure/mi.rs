use rayon::prelude::*;

use crate::corpus::BinaryDataset;
use crate::error::{Error, Result};

/// Mutual information of two binary variables from weighted counts:
/// `n` documents, `na`/`nb` with each variable on, `nab` with both on.
pub(crate) fn mi_from_counts(n: f64, na: f64, nb: f64, nab: f64) -> f64 {
    if n <= 0.0 {
        return 0.0;
    }
    let cells = [
        (n - na - nb + nab, n - na, n - nb),
        (nb - nab, n - na, nb),
        (na - nab, na, n - nb),
        (nab, na, nb),
    ];
    let mi: f64 = cells
        .iter()
        .filter(|(c, _, _)| *c > 0.0)
        .map(|&(c, x, y)| c / n * (c * n / (x * y)).ln())
        .sum();
    mi.max(0.0)
}

/// Mutual information of a 2×2 joint distribution given as `p[a][b]`.
pub(crate) fn mi_from_joint(p: &[[f64; 2]; 2]) -> f64 {
    let px = [p[0][0] + p[0][1], p[1][0] + p[1][1]];
    let py = [p[0][0] + p[1][0], p[0][1] + p[1][1]];
    let mut mi = 0.0;
    for a in 0..2 {
        for b in 0..2 {
            if p[a][b] > 0.0 {
                mi += p[a][b] * (p[a][b] / (px[a] * py[b])).ln();
            }
        }
    }
    mi.max(0.0)
}

/// Plug-in mutual information (natural log) between two dataset columns.
pub fn mi_pair(data: &BinaryDataset, x: &str, y: &str) -> Result<f64> {
    let (cx, cy) = (data.column_of(x)?, data.column_of(y)?);
    let (mut na, mut nb, mut nab) = (0u64, 0u64, 0u64);
    for row in data.rows() {
        let (a, b) = (row.bits.get(cx), row.bits.get(cy));
        na += u64::from(a) * row.weight;
        nb += u64::from(b) * row.weight;
        nab += u64::from(a && b) * row.weight;
    }
    Ok(mi_from_counts(data.total_weight() as f64, na as f64, nb as f64, nab as f64))
}

/// Pairwise mutual information between all dataset columns.
#[derive(Debug, Clone, PartialEq)]
pub struct MIMatrix {
    variables: Vec<String>,
    values: Vec<f64>,
}

impl MIMatrix {
    pub fn variables(&self) -> &[String] {
        &self.variables
    }

    pub fn len(&self) -> usize {
        self.variables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.variables.is_empty()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.variables.len() + j]
    }

    pub fn by_name(&self, x: &str, y: &str) -> Option<f64> {
        let i = self.variables.iter().position(|v| v == x)?;
        let j = self.variables.iter().position(|v| v == y)?;
        Some(self.get(i, j))
    }
}

/// All pairwise MI values from a single pass of co-occurrence counting.
pub fn mi_matrix(data: &BinaryDataset) -> Result<MIMatrix> {
    let n = data.num_variables();
    if n < 2 {
        return Err(Error::precondition("MI matrix needs at least two variables"));
    }
    let mut single = vec![0u64; n];
    let mut pair = vec![0u64; n * n];
    let mut ones = Vec::new();
    for row in data.rows() {
        ones.clear();
        ones.extend(row.bits.iter_ones());
        for (k, &i) in ones.iter().enumerate() {
            single[i] += row.weight;
            for &j in &ones[k + 1..] {
                pair[i * n + j] += row.weight;
            }
        }
    }
    let total = data.total_weight() as f64;
    let mut values = vec![0.0; n * n];
    values.par_chunks_mut(n).enumerate().for_each(|(i, out)| {
        for (j, slot) in out.iter_mut().enumerate() {
            if i != j {
                let nab = if i < j { pair[i * n + j] } else { pair[j * n + i] };
                *slot = mi_from_counts(total, single[i] as f64, single[j] as f64, nab as f64);
            }
        }
    });
    Ok(MIMatrix { variables: data.variables().to_vec(), values })
}
