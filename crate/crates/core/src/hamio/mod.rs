//! Electronic-structure Hamiltonians: storage, FCIDUMP ingestion, frozen-core
//! active spaces and Cholesky factorization of the two-electron integrals.
//!
//! Two-electron integrals are kept in chemists' notation, `(pq|rs)`, as a dense
//! `n^4` tensor with every permutational image populated.

mod active;
mod cholesky;
mod fcidump;

pub use active::{extract_active_space, ActiveSpaceSpec};
pub use cholesky::{cholesky_factorize, CholeskyFactors, DEFAULT_CHOLESKY_THRESHOLD};
pub use fcidump::{parse_fcidump, read_fcidump, write_fcidump};

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Symmetry tolerance for `h` and `(pq|rs)`.
pub const SYMMETRY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct Hamiltonian {
    pub n_orb: usize,
    pub n_elec: usize,
    /// Twice the spin projection, `n_alpha - n_beta`.
    pub ms2: i64,
    /// Constant energy offset (nuclear repulsion plus any frozen core).
    pub e_core: f64,
    /// One-electron integrals `h_pq`.
    pub h: DMatrix<f64>,
    eri: Vec<f64>,
}

impl Hamiltonian {
    /// Builds a Hamiltonian from a dense `(pq|rs)` tensor, row-major in
    /// `p, q, r, s`. Symmetry and electron-count invariants are checked.
    pub fn new(
        n_orb: usize,
        n_elec: usize,
        ms2: i64,
        e_core: f64,
        h: DMatrix<f64>,
        eri: Vec<f64>,
    ) -> Result<Self> {
        if h.nrows() != n_orb || h.ncols() != n_orb {
            return Err(Error::Dimension(format!(
                "one-electron matrix is {}x{}, expected {n_orb}x{n_orb}",
                h.nrows(),
                h.ncols()
            )));
        }
        if eri.len() != n_orb.pow(4) {
            return Err(Error::Dimension(format!(
                "two-electron tensor has {} entries, expected {}",
                eri.len(),
                n_orb.pow(4)
            )));
        }
        check_electron_counts(n_orb, n_elec, ms2)?;
        let ham = Hamiltonian {
            n_orb,
            n_elec,
            ms2,
            e_core,
            h,
            eri,
        };
        ham.check_symmetry()?;
        Ok(ham)
    }

    pub fn n_alpha(&self) -> usize {
        ((self.n_elec as i64 + self.ms2) / 2) as usize
    }

    pub fn n_beta(&self) -> usize {
        ((self.n_elec as i64 - self.ms2) / 2) as usize
    }

    #[inline]
    pub fn eri(&self, p: usize, q: usize, r: usize, s: usize) -> f64 {
        let n = self.n_orb;
        self.eri[((p * n + q) * n + r) * n + s]
    }

    /// Dense `(pq|rs)` tensor, row-major in `p, q, r, s`.
    pub fn eri_tensor(&self) -> &[f64] {
        &self.eri
    }

    /// Same one-body part and core energy with all two-electron integrals zeroed.
    pub fn without_two_body(&self) -> Self {
        Hamiltonian {
            eri: vec![0.0; self.eri.len()],
            ..self.clone()
        }
    }

    fn check_symmetry(&self) -> Result<()> {
        let n = self.n_orb;
        for p in 0..n {
            for q in 0..n {
                let d = (self.h[(p, q)] - self.h[(q, p)]).abs();
                if d > SYMMETRY_TOL {
                    return Err(Error::Consistency(format!(
                        "h is not symmetric at ({p},{q}): |diff| = {d:e}"
                    )));
                }
            }
        }
        for p in 0..n {
            for q in 0..n {
                for r in 0..n {
                    for s in 0..n {
                        let x = self.eri(p, q, r, s);
                        for y in [self.eri(q, p, r, s), self.eri(p, q, s, r), self.eri(r, s, p, q)] {
                            if (x - y).abs() > SYMMETRY_TOL {
                                return Err(Error::Consistency(format!(
                                    "two-electron integrals break 8-fold symmetry at ({p}{q}|{r}{s})"
                                )));
                            }
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// A synthetic Hamiltonian with positive semidefinite integrals, built as
    /// `(pq|rs) = sum_g L^g_pq L^g_rs` from random symmetric `L^g`. Useful as a
    /// stand-in molecule for tests and benchmarks.
    pub fn synthetic(n_orb: usize, n_elec: usize, ms2: i64, seed: u64) -> Result<Self> {
        check_electron_counts(n_orb, n_elec, ms2)?;
        let mut rng = crate::rng::stream(seed, crate::rng::Domain::SubSeed, 0x5947, n_orb as u64);
        let n = n_orb;
        let mut h = DMatrix::zeros(n, n);
        for p in 0..n {
            h[(p, p)] = -2.0 + 0.6 * p as f64;
            for q in 0..p {
                let x: f64 = rng.sample::<f64, _>(StandardNormal) * 0.15;
                h[(p, q)] = x;
                h[(q, p)] = x;
            }
        }
        let mut eri = vec![0.0; n.pow(4)];
        for _ in 0..n {
            let mut l = DMatrix::<f64>::zeros(n, n);
            for p in 0..n {
                for q in 0..=p {
                    let x: f64 = rng.sample::<f64, _>(StandardNormal) * 0.25
                        + if p == q { 0.35 } else { 0.0 };
                    l[(p, q)] = x;
                    l[(q, p)] = x;
                }
            }
            for p in 0..n {
                for q in 0..n {
                    for r in 0..n {
                        for s in 0..n {
                            eri[((p * n + q) * n + r) * n + s] += l[(p, q)] * l[(r, s)];
                        }
                    }
                }
            }
        }
        let e_core = rng.random_range(0.5..2.0);
        Hamiltonian::new(n_orb, n_elec, ms2, e_core, h, eri)
    }
}

fn check_electron_counts(n_orb: usize, n_elec: usize, ms2: i64) -> Result<()> {
    if ms2.unsigned_abs() as usize > n_elec {
        return Err(Error::Consistency(format!("|MS2| = {} exceeds NELEC = {n_elec}", ms2.abs())));
    }
    if (n_elec as i64 + ms2) % 2 != 0 {
        return Err(Error::Consistency(format!(
            "NELEC = {n_elec} and MS2 = {ms2} have different parity"
        )));
    }
    let n_alpha = (n_elec as i64 + ms2) / 2;
    if n_elec > 2 * n_orb || n_alpha as usize > n_orb || (n_elec as i64 - n_alpha) as usize > n_orb {
        return Err(Error::Consistency(format!(
            "{n_elec} electrons (MS2 = {ms2}) do not fit in {n_orb} orbitals"
        )));
    }
    Ok(())
}
