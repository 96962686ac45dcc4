//! Davidson eigensolver for the lowest eigenpair of a real symmetric operator.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

pub(crate) struct DavidsonOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub max_subspace: usize,
}

/// Returns `(eigenvalue, eigenvector, residual_norm)`.
pub(crate) fn lowest_eigenpair(
    diag: &[f64],
    apply: impl Fn(&[f64]) -> Vec<f64>,
    opts: &DavidsonOptions,
) -> Result<(f64, Vec<f64>, f64)> {
    let n = diag.len();
    let start = diag
        .iter()
        .enumerate()
        .fold(0, |best, (i, &d)| if d < diag[best] { i } else { best });
    let mut basis: Vec<Vec<f64>> = vec![unit(n, start)];
    let mut images: Vec<Vec<f64>> = vec![apply(&basis[0])];
    let mut last_residual = f64::INFINITY;

    for _ in 0..opts.max_iter {
        let k = basis.len();
        let mut t = DMatrix::zeros(k, k);
        for a in 0..k {
            for b in 0..=a {
                let x = dot(&basis[a], &images[b]);
                t[(a, b)] = x;
                t[(b, a)] = x;
            }
        }
        let eig = SymmetricEigen::new(t);
        let low = eig.eigenvalues.imin();
        let theta = eig.eigenvalues[low];
        let y: DVector<f64> = eig.eigenvectors.column(low).into_owned();

        let mut x = vec![0.0; n];
        let mut ax = vec![0.0; n];
        for c in 0..k {
            axpy(y[c], &basis[c], &mut x);
            axpy(y[c], &images[c], &mut ax);
        }
        let r: Vec<f64> = ax.iter().zip(&x).map(|(a, b)| a - theta * b).collect();
        let rnorm = dot(&r, &r).sqrt();
        last_residual = rnorm;
        if rnorm < opts.tol {
            let norm = dot(&x, &x).sqrt();
            x.iter_mut().for_each(|v| *v /= norm);
            return Ok((theta, x, rnorm / norm));
        }

        if k >= opts.max_subspace {
            let norm = dot(&x, &x).sqrt();
            x.iter_mut().for_each(|v| *v /= norm);
            ax.iter_mut().for_each(|v| *v /= norm);
            basis = vec![x];
            images = vec![ax];
        }

        let mut corr: Vec<f64> = r
            .iter()
            .zip(diag)
            .map(|(&ri, &di)| {
                let d = theta - di;
                ri / if d.abs() < 1e-8 { 1e-8f64.copysign(d) } else { d }
            })
            .collect();
        for _ in 0..2 {
            for v in &basis {
                let c = dot(v, &corr);
                axpy(-c, v, &mut corr);
            }
        }
        let cn = dot(&corr, &corr).sqrt();
        if cn < 1e-14 {
            break;
        }
        corr.iter_mut().for_each(|v| *v /= cn);
        images.push(apply(&corr));
        basis.push(corr);
    }
    Err(Error::Convergence(format!(
        "Davidson did not converge: residual {last_residual:e} after {} iterations",
        opts.max_iter
    )))
}

fn unit(n: usize, i: usize) -> Vec<f64> {
    let mut v = vec![0.0; n];
    v[i] = 1.0;
    v
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}
