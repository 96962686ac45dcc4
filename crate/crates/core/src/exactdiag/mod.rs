//! Full configuration interaction in a fixed `(n_alpha, n_beta)` sector.
//!
//! Determinants are ordered lexicographically on `(alpha, beta)` bitmasks.
//! The ground state is the stand-in for the state prepared on a quantum
//! device, so its amplitudes map one-to-one onto computational-basis
//! amplitudes (see [`Determinant::basis_index`]).

mod davidson;
mod determinant;
mod slater;

pub use determinant::{
    format_bitstring, parse_bitstring, strings, CiSpace, Determinant, MAX_ORBITALS,
};
pub use slater::diagonal_element;

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::hamio::Hamiltonian;

/// Tolerance on `sum |c|^2 = 1`.
pub const NORM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct CIVector {
    pub n_orb: usize,
    pub basis: Vec<Determinant>,
    pub amplitudes: Vec<Complex64>,
    pub energy: Option<f64>,
}

impl CIVector {
    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn n_qubits(&self) -> usize {
        2 * self.n_orb
    }

    /// `<self|other>` over the union of both bases.
    pub fn inner(&self, other: &CIVector) -> Complex64 {
        let map: std::collections::HashMap<Determinant, Complex64> =
            other.basis.iter().copied().zip(other.amplitudes.iter().copied()).collect();
        self.basis
            .iter()
            .zip(&self.amplitudes)
            .filter_map(|(d, c)| map.get(d).map(|o| c.conj() * o))
            .sum()
    }

    /// Serializes as `bitstring re im` lines (qubit 0 first). Lines of
    /// `header` are written first as `# ` comments, then the energy if set.
    pub fn to_text(&self, header: &[String]) -> String {
        let mut out = String::new();
        for line in header {
            let _ = writeln!(out, "# {line}");
        }
        if let Some(e) = self.energy {
            let _ = writeln!(out, "# energy = {e:.17e}");
        }
        let nq = self.n_qubits();
        for (d, c) in self.basis.iter().zip(&self.amplitudes) {
            let _ = writeln!(out, "{}  {:.17e}  {:.17e}", format_bitstring(d.basis_index(self.n_orb), nq), c.re, c.im);
        }
        out
    }

    /// Parses the format written by [`CIVector::to_text`]. `#` lines are
    /// comments except for an `energy = x` entry.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut basis = Vec::new();
        let mut amplitudes = Vec::new();
        let mut energy = None;
        let mut n_qubits = None;
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(comment) = line.strip_prefix('#') {
                if let Some(v) = comment.trim().strip_prefix("energy =") {
                    energy = Some(v.trim().parse().map_err(|_| Error::Parse {
                        line: line_no,
                        msg: format!("invalid energy `{}`", v.trim()),
                    })?);
                }
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            let bad = |msg: String| Error::Parse { line: line_no, msg };
            if fields.len() != 3 {
                return Err(bad(format!("expected `bitstring re im`, found {} fields", fields.len())));
            }
            let bits = fields[0];
            if bits.len() % 2 != 0 || bits.len() > 2 * MAX_ORBITALS {
                return Err(bad(format!("bitstring `{bits}` must have an even length up to {}", 2 * MAX_ORBITALS)));
            }
            if *n_qubits.get_or_insert(bits.len()) != bits.len() {
                return Err(bad("bitstrings have different lengths".into()));
            }
            let idx = parse_bitstring(bits).ok_or_else(|| bad(format!("invalid bitstring `{bits}`")))?;
            let re: f64 = fields[1].parse().map_err(|_| bad(format!("invalid number `{}`", fields[1])))?;
            let im: f64 = fields[2].parse().map_err(|_| bad(format!("invalid number `{}`", fields[2])))?;
            basis.push(Determinant::from_basis_index(idx, bits.len() / 2));
            amplitudes.push(Complex64::new(re, im));
        }
        let n_qubits = n_qubits.ok_or(Error::Parse { line: 1, msg: "no amplitudes".into() })?;
        let mut seen = std::collections::HashSet::new();
        for d in &basis {
            if !seen.insert(*d) {
                return Err(Error::Consistency("state lists a determinant twice".into()));
            }
        }
        Ok(CIVector {
            n_orb: n_qubits / 2,
            basis,
            amplitudes,
            energy,
        })
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        CIVector::from_text(&text)
    }
}

/// Solver settings for [`fci_ground_state_with`].
#[derive(Debug, Clone)]
pub struct SolverOptions {
    /// Largest CI dimension accepted.
    pub max_dim: usize,
    /// Dimensions up to this use dense diagonalization; larger use Davidson.
    pub dense_limit: usize,
    /// Davidson residual-norm tolerance.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            max_dim: 1_000_000,
            dense_limit: 2000,
            tol: 1e-10,
            max_iter: 2000,
        }
    }
}

pub fn ci_space(h: &Hamiltonian, max_dim: usize) -> Result<CiSpace> {
    CiSpace::new(h.n_orb, h.n_alpha(), h.n_beta(), max_dim)
}

/// Lowest eigenpair with default [`SolverOptions`].
pub fn fci_ground_state(h: &Hamiltonian) -> Result<CIVector> {
    fci_ground_state_with(h, &SolverOptions::default())
}

/// Lowest eigenpair over the whole sector of `h`, normalized, with the
/// largest-magnitude amplitude real and positive.
pub fn fci_ground_state_with(h: &Hamiltonian, opts: &SolverOptions) -> Result<CIVector> {
    let space = ci_space(h, opts.max_dim)?;
    let dim = space.dim();
    let (energy, vec) = if dim <= opts.dense_limit {
        let m = hamiltonian_matrix(h, &space);
        let eig = SymmetricEigen::new(m);
        let low = eig.eigenvalues.imin();
        (eig.eigenvalues[low], eig.eigenvectors.column(low).iter().copied().collect::<Vec<f64>>())
    } else {
        let diag: Vec<f64> = (0..dim).into_par_iter().map(|i| diagonal_element(h, &space.det(i))).collect();
        let apply = |x: &[f64]| apply_real(h, &space, &diag, x);
        let (e, v, _) = davidson::lowest_eigenpair(
            &diag,
            apply,
            &davidson::DavidsonOptions {
                tol: opts.tol,
                max_iter: opts.max_iter,
                max_subspace: 40,
            },
        )?;
        (e, v)
    };
    let mut amplitudes: Vec<Complex64> = vec.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    fix_phase(&mut amplitudes);
    Ok(CIVector {
        n_orb: h.n_orb,
        basis: space.determinants().collect(),
        amplitudes,
        energy: Some(energy),
    })
}

/// Rotates the global phase so the largest-magnitude amplitude (first on
/// ties) is real and positive, then normalizes.
pub fn fix_phase(amps: &mut [Complex64]) {
    let norm = amps.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    let Some(big) = amps
        .iter()
        .enumerate()
        .fold(None, |best: Option<(usize, f64)>, (i, c)| match best {
            Some((_, m)) if c.norm() <= m => best,
            _ => Some((i, c.norm())),
        })
    else {
        return;
    };
    if big.1 == 0.0 {
        return;
    }
    let rot = amps[big.0].conj() / (amps[big.0].norm() * norm);
    for c in amps.iter_mut() {
        *c *= rot;
    }
    amps[big.0] = Complex64::new(amps[big.0].re, 0.0);
}

/// Dense Hamiltonian matrix over `space`.
pub fn hamiltonian_matrix(h: &Hamiltonian, space: &CiSpace) -> DMatrix<f64> {
    let dim = space.dim();
    let mut m = DMatrix::zeros(dim, dim);
    for i in 0..dim {
        m[(i, i)] = diagonal_element(h, &space.det(i));
        slater::for_each_connected(h, space, i, |j, x| m[(i, j)] += x);
    }
    m
}

fn apply_real(h: &Hamiltonian, space: &CiSpace, diag: &[f64], x: &[f64]) -> Vec<f64> {
    (0..space.dim())
        .into_par_iter()
        .map(|i| {
            let mut acc = diag[i] * x[i];
            slater::for_each_connected(h, space, i, |j, v| acc += v * x[j]);
            acc
        })
        .collect()
}

/// `H v` expressed over the full sector of `v`'s determinants, in canonical
/// order. `v` may list any subset of that sector in any order.
pub fn apply_hamiltonian(h: &Hamiltonian, v: &CIVector) -> Result<CIVector> {
    if v.n_orb != h.n_orb {
        return Err(Error::Dimension(format!(
            "vector has {} orbitals, Hamiltonian {}",
            v.n_orb, h.n_orb
        )));
    }
    if v.basis.len() != v.amplitudes.len() {
        return Err(Error::Dimension("basis and amplitude lengths differ".into()));
    }
    let (na, nb) = match v.basis.first() {
        Some(d) => (d.n_alpha(), d.n_beta()),
        None => (h.n_alpha(), h.n_beta()),
    };
    let space = CiSpace::new(h.n_orb, na, nb, SolverOptions::default().max_dim)?;
    let mut x = vec![Complex64::new(0.0, 0.0); space.dim()];
    for (d, c) in v.basis.iter().zip(&v.amplitudes) {
        let idx = space.index(d).filter(|_| d.n_alpha() == na && d.n_beta() == nb).ok_or_else(|| {
            Error::Dimension(format!("determinant {d:?} is outside the ({na}, {nb}) sector of {} orbitals", h.n_orb))
        })?;
        x[idx] += c;
    }
    let out: Vec<Complex64> = (0..space.dim())
        .into_par_iter()
        .map(|i| {
            let mut acc = x[i] * diagonal_element(h, &space.det(i));
            slater::for_each_connected(h, &space, i, |j, val| acc += x[j] * val);
            acc
        })
        .collect();
    Ok(CIVector {
        n_orb: h.n_orb,
        basis: space.determinants().collect(),
        amplitudes: out,
        energy: None,
    })
}

/// `<v|H|v> / <v|v>`.
pub fn expectation(h: &Hamiltonian, v: &CIVector) -> Result<f64> {
    let hv = apply_hamiltonian(h, v)?;
    Ok(v.inner(&hv).re / v.norm_sqr())
}

#[cfg(test)]
mod tests;
