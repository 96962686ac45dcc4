//! Dense statevector simulation: computational-basis sampling and the
//! Clifford interference circuits used for phase tomography.
//!
//! Qubit `q` of an `N`-qubit register is bit `N - 1 - q` of the basis index,
//! so a bitstring printed qubit 0 first reads as the binary index.

mod circuit;

pub use circuit::{apply_gates, build_interference_circuit, Gate, InterferenceCircuit, Variant};

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::exactdiag::CIVector;
use crate::rng::{stream, Domain};

/// Largest register held in memory (2^24 complex amplitudes, 256 MiB).
pub const MAX_QUBITS: usize = 24;
/// Shots drawn from one random stream.
const SHOT_CHUNK: u64 = 1 << 16;

#[derive(Debug, Clone, PartialEq)]
pub struct Statevector {
    pub n_qubits: usize,
    pub amps: Vec<Complex64>,
}

impl Statevector {
    /// The basis state `|index>`.
    pub fn basis(n_qubits: usize, index: u64) -> Result<Self> {
        check_size(n_qubits)?;
        if index >> n_qubits != 0 {
            return Err(Error::Dimension(format!("basis index {index} needs more than {n_qubits} qubits")));
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n_qubits];
        amps[index as usize] = Complex64::new(1.0, 0.0);
        Ok(Statevector { n_qubits, amps })
    }

    /// Wraps raw amplitudes; the length must be `2^n_qubits` and the norm 1.
    pub fn from_amplitudes(n_qubits: usize, amps: Vec<Complex64>) -> Result<Self> {
        check_size(n_qubits)?;
        if amps.len() != 1 << n_qubits {
            return Err(Error::Dimension(format!(
                "{} amplitudes for {n_qubits} qubits",
                amps.len()
            )));
        }
        let sv = Statevector { n_qubits, amps };
        let norm = sv.norm_sqr();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(Error::Input(format!("statevector norm^2 is {norm}, expected 1")));
        }
        Ok(sv)
    }

    /// Embeds a CI vector. Its `2 * n_orb` qubits come first; any additional
    /// qubits start in `|0>`.
    pub fn from_civector(v: &CIVector, n_qubits: usize) -> Result<Self> {
        let needed = v.n_qubits();
        if n_qubits < needed {
            return Err(Error::Capacity(format!(
                "{} orbitals need {needed} qubits, register has {n_qubits}",
                v.n_orb
            )));
        }
        check_size(n_qubits)?;
        let shift = n_qubits - needed;
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n_qubits];
        for (d, c) in v.basis.iter().zip(&v.amplitudes) {
            let idx = (d.basis_index(v.n_orb) << shift) as usize;
            if amps[idx] != Complex64::new(0.0, 0.0) {
                return Err(Error::Consistency(format!("determinant {d:?} appears twice")));
            }
            amps[idx] = *c;
        }
        Ok(Statevector { n_qubits, amps })
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn probability(&self, index: u64) -> f64 {
        self.amps[index as usize].norm_sqr()
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &Statevector) -> Complex64 {
        self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum()
    }

    /// `|<self|other>|^2`.
    pub fn fidelity(&self, other: &Statevector) -> f64 {
        self.inner(other).norm_sqr()
    }
}

fn check_size(n_qubits: usize) -> Result<()> {
    if n_qubits > MAX_QUBITS {
        Err(Error::Capacity(format!("{n_qubits} qubits exceed the {MAX_QUBITS}-qubit limit")))
    } else {
        Ok(())
    }
}

/// Applies `c` to `sv`; see [`InterferenceCircuit::apply`].
pub fn apply_circuit(c: &InterferenceCircuit, sv: &Statevector) -> Result<Statevector> {
    c.apply(sv)
}

/// Draws `shots` i.i.d. computational-basis outcomes by inverse-CDF lookup.
/// Shots are split into fixed chunks with one random stream each, so the
/// histogram depends only on `seed`.
pub fn sample_basis(sv: &Statevector, shots: u64, seed: u64) -> BTreeMap<u64, u64> {
    let mut cdf = Vec::with_capacity(sv.amps.len());
    let mut acc = 0.0;
    for a in &sv.amps {
        acc += a.norm_sqr();
        cdf.push(acc);
    }
    let total = acc;
    let n_chunks = shots.div_ceil(SHOT_CHUNK);
    let partial: Vec<BTreeMap<u64, u64>> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = stream(seed, Domain::BasisSampling, c, 0);
            let take = SHOT_CHUNK.min(shots - c * SHOT_CHUNK);
            let mut hist = BTreeMap::new();
            for _ in 0..take {
                let u = rng.random::<f64>() * total;
                let idx = cdf.partition_point(|&x| x <= u).min(cdf.len() - 1);
                *hist.entry(idx as u64).or_insert(0) += 1;
            }
            hist
        })
        .collect();
    let mut hist = BTreeMap::new();
    for part in partial {
        for (k, v) in part {
            *hist.entry(k).or_insert(0) += v;
        }
    }
    hist
}

/// Number of `|0...0>` outcomes in `shots` measurements of a state whose
/// zero-outcome probability is `p0`. This is the exact marginal of drawing
/// every shot individually.
pub fn sample_zero_count(p0: f64, shots: u64, seed: u64, a: u64, b: u64) -> u64 {
    let p = p0.clamp(0.0, 1.0);
    let mut rng = stream(seed, Domain::Interference, a, b);
    Binomial::new(shots, p).expect("probability clamped to [0, 1]").sample(&mut rng)
}
