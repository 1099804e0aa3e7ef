//! Up-looking sparse Cholesky factorization `P K_ff P^T = L L^T`.

use super::{nested_dissection, NOT_FREE};
use crate::error::{Error, Result};
use crate::sparse::{SparseSym, SparsityPattern};

const NONE: usize = usize::MAX;
/// Pivots below this fraction of the original diagonal are treated as singular.
const PIVOT_TOL: f64 = 1e-13;

#[derive(Debug, Clone)]
pub(super) struct Symbolic {
    m: usize,
    /// `perm[new] = reduced`
    perm: Vec<usize>,
    /// Upper triangle of the permuted reduced matrix, compressed by column.
    cp: Vec<usize>,
    ci: Vec<usize>,
    /// For every stored value of `K`, its slot in the permuted upper triangle.
    value_map: Vec<usize>,
    parent: Vec<usize>,
    lp: Vec<usize>,
}

pub(super) struct Factor<'a> {
    sym: &'a Symbolic,
    li: Vec<usize>,
    lx: Vec<f64>,
}

impl Symbolic {
    pub(super) fn analyze(pattern: &SparsityPattern, free: &[usize], reduced_index: &[usize]) -> Self {
        let m = free.len();
        let adj: Vec<Vec<usize>> = free
            .iter()
            .map(|&i| {
                pattern
                    .row(i)
                    .iter()
                    .map(|&j| reduced_index[j])
                    .filter(|&r| r != NOT_FREE && r != reduced_index[i])
                    .collect()
            })
            .collect();
        let perm = nested_dissection(&adj);
        let mut pinv = vec![0; m];
        for (new, &old) in perm.iter().enumerate() {
            pinv[old] = new;
        }

        // Count entries per permuted column (rows <= column).
        let mut counts = vec![0usize; m];
        for (r, &i) in free.iter().enumerate() {
            for &j in pattern.row(i) {
                let c = reduced_index[j];
                if c == NOT_FREE {
                    continue;
                }
                let (pi, pj) = (pinv[r], pinv[c]);
                if pi <= pj {
                    counts[pj] += 1;
                }
            }
        }
        let mut cp = vec![0; m + 1];
        for k in 0..m {
            cp[k + 1] = cp[k] + counts[k];
        }
        let mut next = cp.clone();
        let mut ci = vec![0; cp[m]];
        let mut value_map = vec![NONE; pattern.nnz()];
        for (r, &i) in free.iter().enumerate() {
            for q in pattern.row_ptr[i]..pattern.row_ptr[i + 1] {
                let c = reduced_index[pattern.col_idx[q]];
                if c == NOT_FREE {
                    continue;
                }
                let (pi, pj) = (pinv[r], pinv[c]);
                if pi <= pj {
                    let slot = next[pj];
                    next[pj] += 1;
                    ci[slot] = pi;
                    value_map[q] = slot;
                }
            }
        }

        let parent = etree(m, &cp, &ci);
        let mut sym = Symbolic {
            m,
            perm,
            cp,
            ci,
            value_map,
            parent,
            lp: Vec::new(),
        };
        let mut colcount = vec![1usize; m];
        let mut reach = Reach::new(m);
        for k in 0..m {
            let top = reach.ereach(&sym, k);
            for &i in &reach.stack[top..] {
                colcount[i] += 1;
            }
        }
        let mut lp = vec![0; m + 1];
        for k in 0..m {
            lp[k + 1] = lp[k] + colcount[k];
        }
        sym.lp = lp;
        sym
    }

    pub(super) fn factor(&self, k: &SparseSym) -> Result<Factor<'_>> {
        let m = self.m;
        let mut cx = vec![0.0; self.ci.len()];
        for (q, &slot) in self.value_map.iter().enumerate() {
            if slot != NONE {
                cx[slot] += k.values[q];
            }
        }
        let nnz = self.lp[m];
        let mut li = vec![0usize; nnz];
        let mut lx = vec![0.0; nnz];
        let mut c: Vec<usize> = self.lp[..m].to_vec();
        let mut x = vec![0.0; m];
        let mut reach = Reach::new(m);
        for col in 0..m {
            let top = reach.ereach(self, col);
            x[col] = 0.0;
            let mut diag_orig = 0.0;
            for p in self.cp[col]..self.cp[col + 1] {
                let i = self.ci[p];
                x[i] += cx[p];
                if i == col {
                    diag_orig += cx[p];
                }
            }
            let mut d = x[col];
            x[col] = 0.0;
            for &i in &reach.stack[top..] {
                let lki = x[i] / lx[self.lp[i]];
                x[i] = 0.0;
                for p in self.lp[i] + 1..c[i] {
                    x[li[p]] -= lx[p] * lki;
                }
                d -= lki * lki;
                let p = c[i];
                c[i] += 1;
                li[p] = col;
                lx[p] = lki;
            }
            if !(d > PIVOT_TOL * diag_orig.abs()) || !d.is_finite() {
                return Err(Error::LinearSolver {
                    reason: format!(
                        "matrix is not positive definite (pivot {d:.3e} at column {col}, diagonal {diag_orig:.3e})"
                    ),
                    residual: f64::NAN,
                });
            }
            let p = c[col];
            c[col] += 1;
            li[p] = col;
            lx[p] = d.sqrt();
        }
        Ok(Factor { sym: self, li, lx })
    }
}

impl Factor<'_> {
    /// Solves the reduced system for a right-hand side in reduced numbering.
    pub(super) fn solve(&self, b: &[f64]) -> Vec<f64> {
        let s = self.sym;
        let m = s.m;
        let mut y: Vec<f64> = s.perm.iter().map(|&old| b[old]).collect();
        for j in 0..m {
            let p0 = s.lp[j];
            y[j] /= self.lx[p0];
            let yj = y[j];
            for p in p0 + 1..s.lp[j + 1] {
                y[self.li[p]] -= self.lx[p] * yj;
            }
        }
        for j in (0..m).rev() {
            let p0 = s.lp[j];
            let mut acc = y[j];
            for p in p0 + 1..s.lp[j + 1] {
                acc -= self.lx[p] * y[self.li[p]];
            }
            y[j] = acc / self.lx[p0];
        }
        let mut x = vec![0.0; m];
        for (new, &old) in s.perm.iter().enumerate() {
            x[old] = y[new];
        }
        x
    }
}

fn etree(m: usize, cp: &[usize], ci: &[usize]) -> Vec<usize> {
    let mut parent = vec![NONE; m];
    let mut ancestor = vec![NONE; m];
    for k in 0..m {
        for &row in &ci[cp[k]..cp[k + 1]] {
            let mut i = row;
            while i != NONE && i < k {
                let next = ancestor[i];
                ancestor[i] = k;
                if next == NONE {
                    parent[i] = k;
                }
                i = next;
            }
        }
    }
    parent
}

/// Row-pattern search along the elimination tree.
struct Reach {
    stack: Vec<usize>,
    mark: Vec<usize>,
}

impl Reach {
    fn new(m: usize) -> Self {
        Reach {
            stack: vec![0; m],
            mark: vec![NONE; m],
        }
    }

    /// Nonzero columns of row `k` of `L` (excluding the diagonal), returned in
    /// `stack[top..]` in topological order.
    fn ereach(&mut self, sym: &Symbolic, k: usize) -> usize {
        let m = sym.m;
        let mut top = m;
        self.mark[k] = k;
        for &row in &sym.ci[sym.cp[k]..sym.cp[k + 1]] {
            let mut i = row;
            if i > k {
                continue;
            }
            let mut len = 0;
            while self.mark[i] != k {
                self.stack[len] = i;
                len += 1;
                self.mark[i] = k;
                i = sym.parent[i];
            }
            while len > 0 {
                top -= 1;
                len -= 1;
                self.stack[top] = self.stack[len];
            }
        }
        top
    }
}
