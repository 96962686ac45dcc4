//! Pivoted modified Cholesky factorization of the two-electron integrals.

use nalgebra::DMatrix;

use super::Hamiltonian;
use crate::error::{Error, Result};

pub const DEFAULT_CHOLESKY_THRESHOLD: f64 = 1e-6;

/// Symmetric vectors `L^g` with `(pq|rs) ~= sum_g L^g_pq L^g_rs`.
#[derive(Debug, Clone, PartialEq)]
pub struct CholeskyFactors {
    pub vectors: Vec<DMatrix<f64>>,
    pub threshold: f64,
    /// Largest remaining diagonal of the residual matrix.
    pub residual: f64,
}

impl CholeskyFactors {
    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    /// `sum_g L^g_pq L^g_rs`.
    pub fn reconstruct(&self, p: usize, q: usize, r: usize, s: usize) -> f64 {
        self.vectors.iter().map(|l| l[(p, q)] * l[(r, s)]).sum()
    }
}

/// Factorizes the `(pq),(rs)` supermatrix, pivoting on the largest residual
/// diagonal until it drops to `threshold`. Since the supermatrix is positive
/// semidefinite, every element of the residual is bounded by its diagonal.
pub fn cholesky_factorize(h: &Hamiltonian, threshold: f64) -> Result<CholeskyFactors> {
    if !(threshold > 0.0) || !threshold.is_finite() {
        return Err(Error::Input(format!("Cholesky threshold must be positive, got {threshold}")));
    }
    let n = h.n_orb;
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|p| (0..=p).map(move |q| (p, q))).collect();
    let m = pairs.len();
    let mut diag: Vec<f64> = pairs.iter().map(|&(p, q)| h.eri(p, q, p, q)).collect();
    let mut cols: Vec<Vec<f64>> = Vec::new();

    loop {
        if let Some((i, &d)) = diag.iter().enumerate().find(|(_, &d)| d < -threshold) {
            let (p, q) = pairs[i];
            return Err(Error::Factorization(format!(
                "negative residual diagonal {d:e} at pair ({p},{q}); integrals are not positive semidefinite"
            )));
        }
        let (piv, dmax) = diag
            .iter()
            .copied()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (i, d)| if d > acc.1 { (i, d) } else { acc });
        if m == 0 || dmax <= threshold || cols.len() == m {
            let residual = if m == 0 { 0.0 } else { dmax.max(0.0) };
            let vectors = cols
                .into_iter()
                .map(|c| {
                    let mut l = DMatrix::zeros(n, n);
                    for (k, &(p, q)) in pairs.iter().enumerate() {
                        l[(p, q)] = c[k];
                        l[(q, p)] = c[k];
                    }
                    l
                })
                .collect();
            return Ok(CholeskyFactors {
                vectors,
                threshold,
                residual,
            });
        }
        let (r, s) = pairs[piv];
        let scale = dmax.sqrt().recip();
        let mut col = vec![0.0; m];
        for (k, &(p, q)) in pairs.iter().enumerate() {
            let mut x = h.eri(p, q, r, s);
            for c in &cols {
                x -= c[k] * c[piv];
            }
            col[k] = x * scale;
        }
        for (d, &x) in diag.iter_mut().zip(&col) {
            *d -= x * x;
        }
        diag[piv] = 0.0;
        cols.push(col);
    }
}
