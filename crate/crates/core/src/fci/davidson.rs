use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::SolverOptions;
use crate::error::{Error, Result};
use crate::scalar::{lit, to_f64, Real};

#[derive(Clone, Debug)]
pub struct DavidsonOutcome<T> {
    /// Lowest eigenvalues, ascending.
    pub values: Vec<T>,
    pub vectors: Vec<DVector<T>>,
    pub iterations: usize,
    /// Largest residual norm among the returned roots.
    pub residual: T,
}

/// Orthogonalizes `t` against `basis` (two Gram–Schmidt passes) and
/// normalizes it. Returns `None` if nothing new survives.
fn orthonormalize<T: Real>(mut t: DVector<T>, basis: &[DVector<T>]) -> Option<DVector<T>> {
    let start = t.norm();
    if start == T::zero() {
        return None;
    }
    for _ in 0..2 {
        for v in basis {
            let c = v.dot(&t);
            t.axpy(-c, v, T::one());
        }
    }
    let n = t.norm();
    if n <= start * lit(1e-10) {
        return None;
    }
    Some(t / n)
}

/// Lowest `nroots` eigenpairs of a symmetric operator, diagonal-preconditioned.
pub fn davidson<T: Real>(
    matvec: impl Fn(&DVector<T>) -> DVector<T>,
    diag: &DVector<T>,
    nroots: usize,
    opts: &SolverOptions,
) -> Result<DavidsonOutcome<T>> {
    let n = diag.len();
    if n == 0 || nroots == 0 {
        return Err(Error::Argument("Davidson needs a nonempty space and at least one root".into()));
    }
    let k = nroots.min(n);
    let max_sub = opts.max_subspace.max(3 * k).min(n);
    let tol: T = lit(opts.residual_tol);

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        diag[a]
            .partial_cmp(&diag[b])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    let mut v: Vec<DVector<T>> = order[..k]
        .iter()
        .map(|&i| {
            let mut e = DVector::zeros(n);
            e[i] = T::one();
            e
        })
        .collect();
    let mut w: Vec<DVector<T>> = Vec::new();
    let mut residual = T::zero();

    for iter in 1..=opts.max_iter {
        while w.len() < v.len() {
            w.push(matvec(&v[w.len()]));
        }
        let m = v.len();
        let s = DMatrix::from_fn(m, m, |a, b| {
            let x = v[a].dot(&w[b]);
            let y = v[b].dot(&w[a]);
            (x + y) * lit(0.5)
        });
        let eig = SymmetricEigen::new(s);
        let mut idx: Vec<usize> = (0..m).collect();
        idx.sort_by(|&a, &b| {
            eig.eigenvalues[a]
                .partial_cmp(&eig.eigenvalues[b])
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.cmp(&b))
        });
        let roots = k.min(m);

        let mut values = Vec::with_capacity(roots);
        let mut xs = Vec::with_capacity(roots);
        let mut residuals = Vec::with_capacity(roots);
        residual = T::zero();
        for &r in &idx[..roots] {
            let theta = eig.eigenvalues[r];
            let y = eig.eigenvectors.column(r);
            let mut x = DVector::zeros(n);
            let mut hx = DVector::zeros(n);
            for a in 0..m {
                x.axpy(y[a], &v[a], T::one());
                hx.axpy(y[a], &w[a], T::one());
            }
            let res = &hx - &x * theta;
            let rn = res.norm();
            if rn > residual {
                residual = rn;
            }
            values.push(theta);
            xs.push(x);
            residuals.push(res);
        }

        if residual < tol || m == n {
            return Ok(DavidsonOutcome {
                values,
                vectors: xs,
                iterations: iter,
                residual,
            });
        }

        if m + roots > max_sub {
            let mut nv: Vec<DVector<T>> = Vec::with_capacity(roots);
            for x in &xs {
                if let Some(q) = orthonormalize(x.clone(), &nv) {
                    nv.push(q);
                }
            }
            w = nv.iter().map(&matvec).collect();
            v = nv;
        }

        let mut added = false;
        for (res, &theta) in residuals.iter().zip(&values) {
            if res.norm() < tol {
                continue;
            }
            let floor: T = lit(1e-8);
            let t = DVector::from_fn(n, |i, _| {
                let mut d = theta - diag[i];
                if d.abs() < floor {
                    d = if d < T::zero() { -floor } else { floor };
                }
                res[i] / d
            });
            if let Some(q) = orthonormalize(t, &v) {
                v.push(q);
                added = true;
            } else if let Some(q) = orthonormalize(res.clone(), &v) {
                v.push(q);
                added = true;
            }
        }
        if !added {
            return Err(Error::Convergence {
                iterations: iter,
                residual: to_f64(residual),
            });
        }
    }
    Err(Error::Convergence {
        iterations: opts.max_iter,
        residual: to_f64(residual),
    })
}
