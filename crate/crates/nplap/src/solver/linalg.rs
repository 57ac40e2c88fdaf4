//! Sparse CSR matrices and a Jacobi-preconditioned BiCGSTAB solve.
//!
//! The frozen-coefficient systems are nonsymmetric whenever p != 2, so a
//! plain CG is not an option. Any method reaching the requested relative
//! residual is conforming; BiCGSTAB with diagonal preconditioning is robust
//! for these stencils.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum LinearError {
    #[error("iterative solve stalled: relative residual {rel_residual} after {iters} iterations")]
    Stalled { rel_residual: f64, iters: usize },
    #[error("BiCGSTAB breakdown (omega ~ 0) at iteration {0}")]
    Breakdown(usize),
}

/// Compressed sparse row matrix.
#[derive(Debug, Clone)]
pub struct Csr {
    pub n: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    data: Vec<f64>,
}

impl Csr {
    /// Build from per-row (column, value) lists; columns need not be sorted.
    pub fn from_rows(rows: Vec<Vec<(usize, f64)>>) -> Csr {
        let n = rows.len();
        let mut indptr = Vec::with_capacity(n + 1);
        let mut indices = Vec::new();
        let mut data = Vec::new();
        indptr.push(0);
        for mut row in rows {
            row.sort_unstable_by_key(|&(c, _)| c);
            for (c, v) in row {
                debug_assert!(c < n);
                indices.push(c);
                data.push(v);
            }
            indptr.push(indices.len());
        }
        Csr {
            n,
            indptr,
            indices,
            data,
        }
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n);
        debug_assert_eq!(y.len(), self.n);
        for (i, out) in y.iter_mut().enumerate() {
            let mut acc = 0.0;
            for idx in self.indptr[i]..self.indptr[i + 1] {
                acc += self.data[idx] * x[self.indices[idx]];
            }
            *out = acc;
        }
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        (self.indptr[i]..self.indptr[i + 1]).map(|idx| (self.indices[idx], self.data[idx]))
    }

    pub fn diagonal(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.n];
        for (i, out) in d.iter_mut().enumerate() {
            for (j, v) in self.row(i) {
                if j == i {
                    *out = v;
                }
            }
        }
        d
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Preconditioned BiCGSTAB. Returns (solution, iterations, relative
/// residual). The initial guess is returned untouched if it already meets
/// the tolerance.
pub fn bicgstab(
    a: &Csr,
    b: &[f64],
    x0: &[f64],
    rel_tol: f64,
    max_iter: usize,
) -> Result<(Vec<f64>, usize, f64), LinearError> {
    let n = a.n;
    let b_norm = norm(b);
    if b_norm == 0.0 {
        return Ok((vec![0.0; n], 0, 0.0));
    }
    let inv_diag: Vec<f64> = a
        .diagonal()
        .iter()
        .map(|&d| if d.abs() > 1e-300 { 1.0 / d } else { 1.0 })
        .collect();
    let precond = |v: &[f64], out: &mut [f64]| {
        for i in 0..v.len() {
            out[i] = v[i] * inv_diag[i];
        }
    };

    let mut x = x0.to_vec();
    let mut r = vec![0.0; n];
    a.matvec(&x, &mut r);
    for i in 0..n {
        r[i] = b[i] - r[i];
    }
    if norm(&r) / b_norm <= rel_tol {
        return Ok((x, 0, norm(&r) / b_norm));
    }

    let mut r_hat = r.clone();
    let mut rho = 1.0;
    let mut alpha = 1.0;
    let mut omega = 1.0;
    let mut v = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut p_hat = vec![0.0; n];
    let mut s_hat = vec![0.0; n];
    let mut t = vec![0.0; n];

    for iter in 1..=max_iter {
        let mut rho_new = dot(&r_hat, &r);
        if rho_new.abs() < 1e-290 {
            // Lost biorthogonality; restart the shadow residual.
            r_hat.copy_from_slice(&r);
            rho_new = dot(&r, &r);
            if rho_new == 0.0 {
                return Ok((x, iter, 0.0));
            }
        }
        let beta = (rho_new / rho) * (alpha / omega);
        for i in 0..n {
            p[i] = r[i] + beta * (p[i] - omega * v[i]);
        }
        precond(&p, &mut p_hat);
        a.matvec(&p_hat, &mut v);
        let denom = dot(&r_hat, &v);
        if denom.abs() < 1e-290 {
            r_hat.copy_from_slice(&r);
            rho = dot(&r, &r);
            omega = 1.0;
            alpha = 1.0;
            continue;
        }
        alpha = rho_new / denom;
        // s = r - alpha v, reusing r.
        for i in 0..n {
            r[i] -= alpha * v[i];
        }
        if norm(&r) / b_norm <= rel_tol {
            for i in 0..n {
                x[i] += alpha * p_hat[i];
            }
            return Ok((x, iter, norm(&r) / b_norm));
        }
        precond(&r, &mut s_hat);
        a.matvec(&s_hat, &mut t);
        let tt = dot(&t, &t);
        if tt == 0.0 {
            return Err(LinearError::Breakdown(iter));
        }
        omega = dot(&t, &r) / tt;
        if omega == 0.0 {
            return Err(LinearError::Breakdown(iter));
        }
        for i in 0..n {
            x[i] += alpha * p_hat[i] + omega * s_hat[i];
            r[i] -= omega * t[i];
        }
        let rel = norm(&r) / b_norm;
        if rel <= rel_tol {
            return Ok((x, iter, rel));
        }
        rho = rho_new;
    }

    // Report the true residual, not the recursive one.
    let mut res = vec![0.0; n];
    a.matvec(&x, &mut res);
    for i in 0..n {
        res[i] = b[i] - res[i];
    }
    let rel = norm(&res) / b_norm;
    if rel <= rel_tol {
        Ok((x, max_iter, rel))
    } else {
        Err(LinearError::Stalled {
            rel_residual: rel,
            iters: max_iter,
        })
    }
}
