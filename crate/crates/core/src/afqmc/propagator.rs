//! The short-time propagator: a symmetric split of the one-body part around
//! the Hubbard–Stratonovich two-body exponential.
//!
//! With `v_g = sum_pq L^g_pq E_pq` and mean fields `vbar_g = <T|v_g|T>`,
//! `H = e_core + sum_pq h'_pq E_pq + 1/2 sum_g (v_g - vbar_g)^2 + const`, where
//! `h' = h - 1/2 sum_g L^g L^g + sum_g vbar_g L^g`.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64 as C;

use super::linalg::{complex_times, real_times};
use super::trial::Operators;
use crate::error::{Error, Result};

const ZERO: C = C::new(0.0, 0.0);
/// Taylor order always applied to the two-body exponential.
pub const TAYLOR_MIN_ORDER: usize = 6;
/// Truncation criterion on `|term| / |phi|`.
pub const TAYLOR_TOL: f64 = 1e-10;
const TAYLOR_MAX_ORDER: usize = 50;

#[derive(Debug, Clone)]
pub struct Propagator {
    pub dt: f64,
    pub n_orb: usize,
    /// `exp(-dt/2 h')`, row-major.
    pub h1_exp_half: Vec<f64>,
    /// Cholesky vectors, row-major.
    pub chol: Vec<Vec<f64>>,
    /// `vbar_g`.
    pub mean_field: Vec<f64>,
    /// Running energy shift `E_0`.
    pub e0: f64,
}

impl Propagator {
    pub fn new(ops: &Operators, mean_field: Vec<f64>, dt: f64, e0: f64) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::Propagator(format!("time step must be positive, got {dt}")));
        }
        if mean_field.len() != ops.n_fields() {
            return Err(Error::Dimension(format!(
                "{} mean fields for {} Cholesky vectors",
                mean_field.len(),
                ops.n_fields()
            )));
        }
        let n = ops.n_orb;
        let mut h_eff = DMatrix::from_row_slice(n, n, &ops.h1);
        for (l, &vb) in ops.chol.iter().zip(&mean_field) {
            let l = DMatrix::from_row_slice(n, n, l);
            h_eff -= 0.5 * &l * &l;
            h_eff += vb * &l;
        }
        let h_eff = 0.5 * (&h_eff + h_eff.transpose());
        let eig = SymmetricEigen::new(h_eff);
        let d = DMatrix::from_diagonal(&eig.eigenvalues.map(|e| (-0.5 * dt * e).exp()));
        let expm = &eig.eigenvectors * d * eig.eigenvectors.transpose();
        if expm.iter().any(|x| !x.is_finite()) {
            return Err(Error::Propagator("one-body exponential is not finite".into()));
        }
        Ok(Propagator {
            dt,
            n_orb: n,
            h1_exp_half: (0..n * n).map(|i| expm[(i / n, i % n)]).collect(),
            chol: ops.chol.clone(),
            mean_field,
            e0,
        })
    }

    pub fn n_fields(&self) -> usize {
        self.chol.len()
    }

    /// Applies `exp(-dt/2 h') exp(i sqrt(dt) sum_g x_g L^g) exp(-dt/2 h')` to
    /// an `n x k` orbital matrix. Returns the scalar
    /// `exp(-i sqrt(dt) sum_g x_g vbar_g)` that completes the propagator.
    pub fn apply(&self, x: &[C], phi: &mut [C], k: usize) -> C {
        let n = self.n_orb;
        let mut tmp = vec![ZERO; n * k];
        real_times(&self.h1_exp_half, n, phi, k, &mut tmp);
        let scalar = if self.chol.is_empty() {
            phi.copy_from_slice(&tmp);
            C::new(1.0, 0.0)
        } else {
            let sq = self.dt.sqrt();
            let mut a = vec![ZERO; n * n];
            let mut phase = ZERO;
            for ((l, &xg), &vb) in self.chol.iter().zip(x).zip(&self.mean_field) {
                let f = C::new(0.0, sq) * xg;
                for (aij, &lij) in a.iter_mut().zip(l) {
                    *aij += f * lij;
                }
                phase -= f * vb;
            }
            exp_apply(&a, n, &mut tmp, k);
            phase.exp()
        };
        real_times(&self.h1_exp_half, n, &tmp, k, phi);
        scalar
    }
}

/// `phi <- exp(A) phi` by Taylor series.
pub(crate) fn exp_apply(a: &[C], n: usize, phi: &mut [C], k: usize) {
    let norm_phi = phi.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    let mut term = phi.to_vec();
    let mut next = vec![ZERO; n * k];
    for order in 1..=TAYLOR_MAX_ORDER {
        complex_times(a, n, &term, k, &mut next);
        let inv = 1.0 / order as f64;
        let mut tn = 0.0;
        for (t, nx) in term.iter_mut().zip(&next) {
            *t = nx * inv;
            tn += t.norm_sqr();
        }
        for (p, t) in phi.iter_mut().zip(&term) {
            *p += t;
        }
        if order >= TAYLOR_MIN_ORDER && tn.sqrt() <= TAYLOR_TOL * norm_phi {
            break;
        }
    }
}
