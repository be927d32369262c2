use rand::Rng;

/// Tolerance on row sums of a conditional table.
pub const STOCHASTIC_TOLERANCE: f64 = 1e-9;

/// Row-stochastic table P(child | parent), one row per parent state
/// (a single row for the root marginal).
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalTable {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

impl ConditionalTable {
    /// Shape-checked constructor; stochasticity is checked by [`ConditionalTable::problem`].
    pub fn new(rows: usize, cols: usize, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), rows * cols, "table values do not match shape {rows}x{cols}");
        ConditionalTable { rows, cols, values }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == cols), "ragged table rows");
        ConditionalTable::new(rows.len(), cols, rows.concat())
    }

    pub fn uniform(rows: usize, cols: usize) -> Self {
        ConditionalTable::new(rows, cols, vec![1.0 / cols as f64; rows * cols])
    }

    /// Rows drawn as normalized uniform variates.
    pub fn random(rows: usize, cols: usize, rng: &mut impl Rng) -> Self {
        let mut values = Vec::with_capacity(rows * cols);
        for _ in 0..rows {
            let draws: Vec<f64> = (0..cols).map(|_| rng.gen::<f64>() + 1e-3).collect();
            let sum: f64 = draws.iter().sum();
            values.extend(draws.into_iter().map(|d| d / sum));
        }
        ConditionalTable::new(rows, cols, values)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.cols + col]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.values[row * self.cols..(row + 1) * self.cols]
    }

    pub fn num_free_parameters(&self) -> usize {
        self.rows * (self.cols - 1)
    }

    /// Swap two parent states (rows).
    pub(crate) fn swap_rows(&mut self, a: usize, b: usize) {
        for c in 0..self.cols {
            self.values.swap(a * self.cols + c, b * self.cols + c);
        }
    }

    /// Swap two child states (columns).
    pub(crate) fn swap_cols(&mut self, a: usize, b: usize) {
        for r in 0..self.rows {
            self.values.swap(r * self.cols + a, r * self.cols + b);
        }
    }

    /// First stochasticity problem found, if any.
    pub fn problem(&self) -> Option<String> {
        for r in 0..self.rows {
            let row = self.row(r);
            if let Some(v) = row.iter().find(|v| !(0.0..=1.0).contains(*v)) {
                return Some(format!("row {r} has entry {v} outside [0, 1]"));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > STOCHASTIC_TOLERANCE {
                return Some(format!("row {r} sums to {sum}"));
            }
        }
        None
    }
}
