//! Solution of symmetric positive definite systems with Dirichlet elimination.
//!
//! Constrained dofs are removed from the system and their prescribed values
//! folded into the right-hand side. Two interchangeable back ends satisfy the
//! same relative-residual contract: a sparse Cholesky factorization under a
//! nested-dissection ordering (default) and Jacobi-preconditioned conjugate
//! gradients.

mod cholesky;
mod ordering;
mod pcg;

use crate::error::{Error, Result};
use crate::sparse::{SparseSym, SparsityPattern};

pub use ordering::nested_dissection;

/// Relative residual every successful solve satisfies on the free dofs.
pub const RESIDUAL_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LinearSolverKind {
    #[default]
    Cholesky,
    Pcg,
}

/// Reusable solver for one sparsity pattern and one set of constrained dofs.
///
/// The symbolic analysis is computed once at construction; each call to
/// [`SpdSolver::solve`] refactors the current values.
#[derive(Debug, Clone)]
pub struct SpdSolver {
    kind: LinearSolverKind,
    n: usize,
    free: Vec<usize>,
    reduced_index: Vec<usize>,
    symbolic: Option<cholesky::Symbolic>,
}

const NOT_FREE: usize = usize::MAX;

impl SpdSolver {
    pub fn new(pattern: &SparsityPattern, fixed: &[bool], kind: LinearSolverKind) -> Self {
        let n = pattern.n;
        assert_eq!(fixed.len(), n, "constraint mask length");
        let free: Vec<usize> = (0..n).filter(|&i| !fixed[i]).collect();
        let mut reduced_index = vec![NOT_FREE; n];
        for (r, &i) in free.iter().enumerate() {
            reduced_index[i] = r;
        }
        let symbolic = match kind {
            LinearSolverKind::Cholesky => Some(cholesky::Symbolic::analyze(pattern, &free, &reduced_index)),
            LinearSolverKind::Pcg => None,
        };
        SpdSolver {
            kind,
            n,
            free,
            reduced_index,
            symbolic,
        }
    }

    pub fn kind(&self) -> LinearSolverKind {
        self.kind
    }

    pub fn num_free(&self) -> usize {
        self.free.len()
    }

    /// Solves `K x = rhs` on the free dofs with `x = prescribed` on the fixed
    /// ones. Entries of `prescribed` at free dofs are ignored.
    pub fn solve(&self, k: &SparseSym, rhs: &[f64], prescribed: &[f64]) -> Result<Vec<f64>> {
        if k.dim() != self.n || rhs.len() != self.n || prescribed.len() != self.n {
            return Err(Error::SizeMismatch {
                what: "linear system",
                got: rhs.len().min(k.dim()).min(prescribed.len()),
                expected: self.n,
            });
        }
        // b_f = rhs_f - K_fc x_c
        let mut x_fixed = vec![0.0; self.n];
        for i in 0..self.n {
            if self.reduced_index[i] == NOT_FREE {
                x_fixed[i] = prescribed[i];
            }
        }
        let coupling = k.mul_vec(&x_fixed);
        let b: Vec<f64> = self.free.iter().map(|&i| rhs[i] - coupling[i]).collect();

        let x_free = if b.iter().all(|&v| v == 0.0) {
            vec![0.0; b.len()]
        } else {
            match self.kind {
                LinearSolverKind::Cholesky => {
                    let sym = self.symbolic.as_ref().expect("symbolic analysis");
                    let factor = sym.factor(k)?;
                    let mut x = factor.solve(&b);
                    // Refinement sweeps against the reduced operator.
                    let mut res = self.reduced_residual(k, &x, &b);
                    let bnorm = norm(&b);
                    for _ in 0..3 {
                        if norm(&res) <= RESIDUAL_TOL * bnorm {
                            break;
                        }
                        let dx = factor.solve(&res);
                        for (xi, di) in x.iter_mut().zip(&dx) {
                            *xi += di;
                        }
                        res = self.reduced_residual(k, &x, &b);
                    }
                    let rel = norm(&res) / bnorm;
                    if !(rel <= RESIDUAL_TOL) {
                        return Err(Error::LinearSolver {
                            reason: "Cholesky solution misses the residual contract".into(),
                            residual: rel,
                        });
                    }
                    x
                }
                LinearSolverKind::Pcg => pcg::solve(k, &self.free, &self.reduced_index, &b, RESIDUAL_TOL)?,
            }
        };

        let mut x = x_fixed;
        for (r, &i) in self.free.iter().enumerate() {
            x[i] = x_free[r];
        }
        Ok(x)
    }

    /// `b - K_ff x` on the reduced system.
    fn reduced_residual(&self, k: &SparseSym, x: &[f64], b: &[f64]) -> Vec<f64> {
        let p = &k.pattern;
        self.free
            .iter()
            .enumerate()
            .map(|(r, &i)| {
                let mut s = 0.0;
                for q in p.row_ptr[i]..p.row_ptr[i + 1] {
                    let j = self.reduced_index[p.col_idx[q]];
                    if j != NOT_FREE {
                        s += k.values[q] * x[j];
                    }
                }
                b[r] - s
            })
            .collect()
    }
}

/// One-shot solve of `K x = rhs` with `prescribed` `(dof, value)` pairs.
pub fn solve_spd(k: &SparseSym, rhs: &[f64], prescribed: &[(usize, f64)]) -> Result<Vec<f64>> {
    let mut fixed = vec![false; k.dim()];
    let mut values = vec![0.0; k.dim()];
    for &(i, v) in prescribed {
        fixed[i] = true;
        values[i] = v;
    }
    SpdSolver::new(&k.pattern, &fixed, LinearSolverKind::default()).solve(k, rhs, &values)
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}
