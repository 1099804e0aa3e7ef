use super::{norm, NOT_FREE};
use crate::error::{Error, Result};
use crate::sparse::SparseSym;

/// Jacobi-preconditioned conjugate gradients on the free block `K_ff`.
pub(super) fn solve(
    k: &SparseSym,
    free: &[usize],
    reduced_index: &[usize],
    b: &[f64],
    tol: f64,
) -> Result<Vec<f64>> {
    let m = free.len();
    let p = &k.pattern;
    let apply = |x: &[f64], y: &mut [f64]| {
        for (r, &i) in free.iter().enumerate() {
            let mut s = 0.0;
            for q in p.row_ptr[i]..p.row_ptr[i + 1] {
                let j = reduced_index[p.col_idx[q]];
                if j != NOT_FREE {
                    s += k.values[q] * x[j];
                }
            }
            y[r] = s;
        }
    };
    let inv_diag: Vec<f64> = free
        .iter()
        .map(|&i| {
            let d = k.get(i, i);
            if d > 0.0 {
                1.0 / d
            } else {
                1.0
            }
        })
        .collect();

    let bnorm = norm(b);
    let mut x = vec![0.0; m];
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(a, w)| a * w).collect();
    let mut dir = z.clone();
    let mut ad = vec![0.0; m];
    let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
    let cap = 10 * m.max(1);
    for _ in 0..cap {
        if norm(&r) <= tol * bnorm {
            return Ok(x);
        }
        apply(&dir, &mut ad);
        let curvature: f64 = dir.iter().zip(&ad).map(|(a, b)| a * b).sum();
        if !(curvature > 0.0) {
            return Err(Error::LinearSolver {
                reason: "conjugate gradient breakdown (non-positive curvature)".into(),
                residual: norm(&r) / bnorm,
            });
        }
        let alpha = rz / curvature;
        for i in 0..m {
            x[i] += alpha * dir[i];
            r[i] -= alpha * ad[i];
        }
        for i in 0..m {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..m {
            dir[i] = z[i] + beta * dir[i];
        }
    }
    // Re-evaluate the true residual before giving up.
    let mut kx = vec![0.0; m];
    apply(&x, &mut kx);
    let res: Vec<f64> = b.iter().zip(&kx).map(|(a, c)| a - c).collect();
    let rel = norm(&res) / bnorm;
    if rel <= tol {
        Ok(x)
    } else {
        Err(Error::LinearSolver {
            reason: format!("conjugate gradients hit the iteration cap {cap}"),
            residual: rel,
        })
    }
}
