use nalgebra::{DMatrix, SymmetricEigen};

use super::sparse::Csr;
use crate::error::{param, Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SolverOptions {
    /// Stop when `‖Av - λv‖ <= tol · max(λ, 1)` for unit `v`.
    pub tol: f64,
    pub max_iter: usize,
    /// Start vector; all ones when absent.
    pub start: Option<Vec<f64>>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { tol: 1e-9, max_iter: 100_000, start: None }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Eigenpair {
    pub value: f64,
    pub vector: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
    y.iter_mut().zip(x).for_each(|(yi, xi)| *yi += a * xi);
}

/// Smallest eigenpair of a symmetric positive semidefinite matrix by
/// single-vector LOBPCG: each step minimizes the Rayleigh quotient over
/// `span{x, r, p}` with `r` the residual and `p` the previous step.
pub(crate) fn lobpcg(a: &Csr, opts: &SolverOptions) -> Result<Eigenpair> {
    let n = a.rows();
    if n == 0 {
        return Err(param("operator has no unknowns"));
    }
    if !(opts.tol > 0.0) {
        return Err(param("tolerance must be positive"));
    }
    let mut x = match &opts.start {
        Some(s) if s.len() == n => s.clone(),
        Some(s) => return Err(param(format!("start vector has length {}, expected {n}", s.len()))),
        None => vec![1.0; n],
    };
    let nx = norm(&x);
    if !(nx > 0.0 && nx.is_finite()) {
        return Err(param("start vector must be nonzero and finite"));
    }
    x.iter_mut().for_each(|v| *v /= nx);
    let mut ax = a.matvec(&x);
    let mut lambda = dot(&x, &ax);
    let mut p: Option<(Vec<f64>, Vec<f64>)> = None;
    let mut r = vec![0.0; n];
    let mut aw = vec![0.0; n];

    for it in 0..opts.max_iter {
        if it % 64 == 63 {
            // refresh images accumulated through linear combinations
            let nx = norm(&x);
            x.iter_mut().for_each(|v| *v /= nx);
            a.matvec_into(&x, &mut ax);
            lambda = dot(&x, &ax);
        }
        for i in 0..n {
            r[i] = ax[i] - lambda * x[i];
        }
        let res = norm(&r);
        if res <= opts.tol * lambda.abs().max(1.0) {
            // confirm with an exact product
            let nx = norm(&x);
            x.iter_mut().for_each(|v| *v /= nx);
            a.matvec_into(&x, &mut ax);
            lambda = dot(&x, &ax);
            for i in 0..n {
                r[i] = ax[i] - lambda * x[i];
            }
            let res = norm(&r);
            if res <= opts.tol * lambda.abs().max(1.0) {
                return Ok(Eigenpair { value: lambda, vector: x, residual: res, iterations: it });
            }
        }

        // orthonormal basis Q = [x, w, p] with images AQ
        let mut basis: Vec<(Vec<f64>, Vec<f64>)> = vec![(x.clone(), ax.clone())];
        let mut w = r.clone();
        a.matvec_into(&w, &mut aw);
        let mut cands = vec![(std::mem::take(&mut w), aw.clone())];
        if let Some(pp) = p.take() {
            cands.push(pp);
        }
        for (mut v, mut av) in cands {
            let before = norm(&v);
            for _ in 0..2 {
                for (q, aq) in &basis {
                    let c = dot(q, &v);
                    axpy(&mut v, -c, q);
                    axpy(&mut av, -c, aq);
                }
            }
            let nv = norm(&v);
            if nv > 1e-10 * before && nv > 0.0 {
                v.iter_mut().for_each(|t| *t /= nv);
                av.iter_mut().for_each(|t| *t /= nv);
                basis.push((v, av));
            }
        }
        let k = basis.len();
        if k == 1 {
            return Err(Error::Numeric(format!("search space collapsed at iteration {it}, residual {res:e}")));
        }
        let mut g = DMatrix::<f64>::zeros(k, k);
        for i in 0..k {
            for j in i..k {
                let v = 0.5 * (dot(&basis[i].0, &basis[j].1) + dot(&basis[j].0, &basis[i].1));
                g[(i, j)] = v;
                g[(j, i)] = v;
            }
        }
        let eig = SymmetricEigen::new(g);
        let (imin, _) = eig
            .eigenvalues
            .iter()
            .enumerate()
            .fold((0, f64::INFINITY), |(bi, bv), (i, &v)| if v < bv { (i, v) } else { (bi, bv) });
        let c: Vec<f64> = eig.eigenvectors.column(imin).iter().copied().collect();

        let mut pn = vec![0.0; n];
        let mut apn = vec![0.0; n];
        for j in 1..k {
            axpy(&mut pn, c[j], &basis[j].0);
            axpy(&mut apn, c[j], &basis[j].1);
        }
        x.iter_mut().zip(&basis[0].0).for_each(|(xi, b)| *xi = c[0] * b);
        ax.iter_mut().zip(&basis[0].1).for_each(|(yi, b)| *yi = c[0] * b);
        axpy(&mut x, 1.0, &pn);
        axpy(&mut ax, 1.0, &apn);
        let nx = norm(&x);
        x.iter_mut().for_each(|v| *v /= nx);
        ax.iter_mut().for_each(|v| *v /= nx);
        lambda = dot(&x, &ax);
        p = Some((pn, apn));
    }
    Err(Error::Numeric(format!(
        "eigensolver did not converge in {} iterations (n = {n}, λ ≈ {lambda})",
        opts.max_iter
    )))
}
