//! Linear solves for the Newton step.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Row-wise sparse matrix.
#[derive(Debug, Clone, Default)]
pub(crate) struct SparseRows {
    pub rows: Vec<Vec<(usize, f64)>>,
}

impl SparseRows {
    pub fn new(n: usize) -> Self {
        Self { rows: vec![Vec::new(); n] }
    }

    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        match self.rows[i].iter_mut().find(|(c, _)| *c == j) {
            Some(e) => e.1 += v,
            None => self.rows[i].push((j, v)),
        }
    }

    pub fn mul(&self, x: &[f64]) -> Vec<f64> {
        self.rows.iter().map(|r| r.iter().map(|&(j, v)| v * x[j]).sum()).collect()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        self.rows
            .iter()
            .enumerate()
            .map(|(i, r)| r.iter().find(|(j, _)| *j == i).map_or(0.0, |e| e.1))
            .collect()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.rows.len();
        let mut m = DMatrix::zeros(n, n);
        for (i, r) in self.rows.iter().enumerate() {
            for &(j, v) in r {
                m[(i, j)] += v;
            }
        }
        m
    }
}

pub(crate) fn dense_solve(a: &SparseRows, b: &[f64]) -> Result<Vec<f64>> {
    let lu = a.to_dense().lu();
    lu.solve(&DVector::from_column_slice(b))
        .map(|x| x.iter().copied().collect())
        .ok_or_else(|| Error::Divergent("singular Newton matrix".into()))
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Restarted GMRES with Jacobi preconditioning (applied on the left).
pub(crate) fn gmres(a: &SparseRows, b: &[f64], rel_tol: f64, restart: usize, max_iter: usize) -> Result<Vec<f64>> {
    let n = b.len();
    let diag: Vec<f64> = a.diagonal().iter().map(|d| if d.abs() > 0.0 { 1.0 / d } else { 1.0 }).collect();
    let precond = |v: Vec<f64>| -> Vec<f64> { v.iter().zip(&diag).map(|(x, d)| x * d).collect() };
    let pb = precond(b.to_vec());
    let target = rel_tol * norm2(&pb);
    let mut x = vec![0.0; n];
    let mut iters = 0;
    loop {
        let ax = a.mul(&x);
        let r = precond(b.iter().zip(&ax).map(|(p, q)| p - q).collect());
        let beta = norm2(&r);
        if beta <= target || beta == 0.0 {
            return Ok(x);
        }
        if iters >= max_iter {
            return Err(Error::NonConvergence { iterations: iters, best_residual: beta });
        }
        let mut basis = vec![r.iter().map(|v| v / beta).collect::<Vec<f64>>()];
        let mut h = vec![vec![0.0; restart]; restart + 1];
        let (mut cs, mut sn) = (vec![0.0; restart], vec![0.0; restart]);
        let mut g = vec![0.0; restart + 1];
        g[0] = beta;
        let mut used = 0;
        for j in 0..restart {
            iters += 1;
            let mut w = precond(a.mul(&basis[j]));
            for (i, v) in basis.iter().enumerate() {
                let hij: f64 = w.iter().zip(v).map(|(p, q)| p * q).sum();
                h[i][j] = hij;
                w.iter_mut().zip(v).for_each(|(p, q)| *p -= hij * q);
            }
            let wn = norm2(&w);
            h[j + 1][j] = wn;
            for i in 0..j {
                let t = cs[i] * h[i][j] + sn[i] * h[i + 1][j];
                h[i + 1][j] = -sn[i] * h[i][j] + cs[i] * h[i + 1][j];
                h[i][j] = t;
            }
            let d = (h[j][j] * h[j][j] + h[j + 1][j] * h[j + 1][j]).sqrt();
            cs[j] = h[j][j] / d;
            sn[j] = h[j + 1][j] / d;
            h[j][j] = d;
            h[j + 1][j] = 0.0;
            g[j + 1] = -sn[j] * g[j];
            g[j] *= cs[j];
            used = j + 1;
            if g[j + 1].abs() <= target || wn == 0.0 || iters >= max_iter {
                break;
            }
            basis.push(w.iter().map(|v| v / wn).collect());
        }
        let mut y = vec![0.0; used];
        for i in (0..used).rev() {
            let s: f64 = (i + 1..used).map(|k| h[i][k] * y[k]).sum();
            y[i] = (g[i] - s) / h[i][i];
        }
        for (k, yk) in y.iter().enumerate() {
            x.iter_mut().zip(&basis[k]).for_each(|(p, q)| *p += yk * q);
        }
    }
}
