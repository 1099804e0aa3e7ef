//! Symmetric sparse matrices stored with a full (both triangles) CSR pattern.

use std::sync::Arc;

#[derive(Debug, Clone, PartialEq)]
pub struct SparsityPattern {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    /// Sorted column indices per row.
    pub col_idx: Vec<usize>,
}

impl SparsityPattern {
    /// Builds a pattern from per-row column lists (need not be sorted or unique).
    pub fn from_rows(mut rows: Vec<Vec<usize>>) -> Self {
        let n = rows.len();
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx = Vec::new();
        row_ptr.push(0);
        for row in &mut rows {
            row.sort_unstable();
            row.dedup();
            col_idx.extend_from_slice(row);
            row_ptr.push(col_idx.len());
        }
        SparsityPattern {
            n,
            row_ptr,
            col_idx,
        }
    }

    /// Value index of entry `(i, j)`, if it is part of the pattern.
    pub fn position(&self, i: usize, j: usize) -> Option<usize> {
        let lo = self.row_ptr[i];
        let hi = self.row_ptr[i + 1];
        self.col_idx[lo..hi].binary_search(&j).ok().map(|k| lo + k)
    }

    pub fn nnz(&self) -> usize {
        self.col_idx.len()
    }

    pub fn row(&self, i: usize) -> &[usize] {
        &self.col_idx[self.row_ptr[i]..self.row_ptr[i + 1]]
    }
}

/// Symmetric matrix over a shared pattern.
#[derive(Debug, Clone)]
pub struct SparseSym {
    pub pattern: Arc<SparsityPattern>,
    pub values: Vec<f64>,
}

impl SparseSym {
    pub fn zeros(pattern: Arc<SparsityPattern>) -> Self {
        let values = vec![0.0; pattern.nnz()];
        SparseSym { pattern, values }
    }

    /// Builds a matrix from `(row, col, value)` triplets of one triangle; each
    /// off-diagonal triplet is mirrored and duplicates are summed.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut rows = vec![Vec::new(); n];
        for &(i, j, _) in triplets {
            rows[i].push(j);
            rows[j].push(i);
        }
        let pattern = Arc::new(SparsityPattern::from_rows(rows));
        let mut m = SparseSym::zeros(pattern);
        for &(i, j, v) in triplets {
            let p = m.pattern.position(i, j).expect("entry in pattern");
            m.values[p] += v;
            if i != j {
                let q = m.pattern.position(j, i).expect("entry in pattern");
                m.values[q] += v;
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.pattern.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.pattern.position(i, j).map_or(0.0, |p| self.values[p])
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.get(i, i)).collect()
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.dim()];
        self.mul_vec_into(x, &mut y);
        y
    }

    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) {
        let p = &self.pattern;
        for (i, yi) in y.iter_mut().enumerate() {
            let mut s = 0.0;
            for k in p.row_ptr[i]..p.row_ptr[i + 1] {
                s += self.values[k] * x[p.col_idx[k]];
            }
            *yi = s;
        }
    }

    /// Largest `|a_ij - a_ji|` over stored entries.
    pub fn asymmetry(&self) -> f64 {
        let p = &self.pattern;
        let mut worst = 0.0f64;
        for i in 0..p.n {
            for k in p.row_ptr[i]..p.row_ptr[i + 1] {
                let j = p.col_idx[k];
                worst = worst.max((self.values[k] - self.get(j, i)).abs());
            }
        }
        worst
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}
