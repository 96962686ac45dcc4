//! Determinants, the fixed-sector CI space and the qubit encoding.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest orbital count representable by the 64-bit qubit encoding.
pub const MAX_ORBITALS: usize = 32;

/// A Slater determinant as two occupation bitmasks; bit `p` set means spatial
/// orbital `p` holds an electron of that spin.
///
/// The state is `prod_{p in alpha, ascending} a+_{p,up} prod_{p in beta,
/// ascending} a+_{p,down} |vac>`: alpha operators stand to the left of beta.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Determinant {
    pub alpha: u64,
    pub beta: u64,
}

impl Determinant {
    pub fn new(alpha: u64, beta: u64) -> Self {
        Determinant { alpha, beta }
    }

    /// Aufbau determinant filling the lowest orbitals.
    pub fn aufbau(n_alpha: usize, n_beta: usize) -> Self {
        Determinant {
            alpha: low_mask(n_alpha),
            beta: low_mask(n_beta),
        }
    }

    pub fn n_alpha(&self) -> usize {
        self.alpha.count_ones() as usize
    }

    pub fn n_beta(&self) -> usize {
        self.beta.count_ones() as usize
    }

    /// Computational-basis index on `2 * n_orb` qubits. Alpha orbital `p` sits
    /// on qubit `2p`, beta orbital `p` on qubit `2p + 1`, and qubit `q` is bit
    /// `2 * n_orb - 1 - q` of the index, so printing the index in binary lists
    /// qubit 0 first.
    pub fn basis_index(&self, n_orb: usize) -> u64 {
        let nq = 2 * n_orb;
        let mut idx = 0u64;
        for p in 0..n_orb {
            if self.alpha >> p & 1 == 1 {
                idx |= 1 << (nq - 1 - 2 * p);
            }
            if self.beta >> p & 1 == 1 {
                idx |= 1 << (nq - 2 - 2 * p);
            }
        }
        idx
    }

    /// Inverse of [`Determinant::basis_index`].
    pub fn from_basis_index(idx: u64, n_orb: usize) -> Self {
        let nq = 2 * n_orb;
        let mut alpha = 0;
        let mut beta = 0;
        for p in 0..n_orb {
            alpha |= (idx >> (nq - 1 - 2 * p) & 1) << p;
            beta |= (idx >> (nq - 2 - 2 * p) & 1) << p;
        }
        Determinant { alpha, beta }
    }
}

/// `q`-qubit bitstring of a basis index, qubit 0 first.
pub fn format_bitstring(idx: u64, n_qubits: usize) -> String {
    (0..n_qubits)
        .map(|q| if idx >> (n_qubits - 1 - q) & 1 == 1 { '1' } else { '0' })
        .collect()
}

/// Parses a bitstring written qubit 0 first.
pub fn parse_bitstring(s: &str) -> Option<u64> {
    if s.is_empty() || s.len() > 64 {
        return None;
    }
    s.bytes().try_fold(0u64, |acc, b| match b {
        b'0' => Some(acc << 1),
        b'1' => Some(acc << 1 | 1),
        _ => None,
    })
}

pub(crate) fn low_mask(k: usize) -> u64 {
    if k >= 64 {
        u64::MAX
    } else {
        (1u64 << k) - 1
    }
}

/// Positions of set bits, ascending.
pub(crate) fn occupied(bits: u64) -> Vec<usize> {
    let mut out = Vec::with_capacity(bits.count_ones() as usize);
    let mut b = bits;
    while b != 0 {
        out.push(b.trailing_zeros() as usize);
        b &= b - 1;
    }
    out
}

/// Sign of `a+_a a_i` acting on the string `s` (with `i` occupied, `a` empty).
#[inline]
pub(crate) fn excitation_sign(s: u64, i: usize, a: usize) -> f64 {
    let (lo, hi) = if i < a { (i, a) } else { (a, i) };
    let between = low_mask(hi) & !low_mask(lo + 1);
    if (s & between).count_ones() % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// All strings of `k` electrons in `n` orbitals, ascending.
pub fn strings(n: usize, k: usize) -> Vec<u64> {
    let mut out = Vec::new();
    if k > n {
        return out;
    }
    if k == 0 {
        out.push(0);
        return out;
    }
    // Gosper's hack walks combinations in increasing numeric order.
    let mut s = low_mask(k);
    let limit = 1u64 << n;
    while s < limit {
        out.push(s);
        let c = s & s.wrapping_neg();
        let r = s + c;
        s = (((r ^ s) >> 2) / c) | r;
    }
    out
}

fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// The determinants with fixed `(n_alpha, n_beta)` in `n_orb` orbitals,
/// ordered lexicographically on `(alpha, beta)`.
#[derive(Debug, Clone)]
pub struct CiSpace {
    pub n_orb: usize,
    pub n_alpha: usize,
    pub n_beta: usize,
    alpha_strings: Vec<u64>,
    beta_strings: Vec<u64>,
    alpha_rank: HashMap<u64, usize>,
    beta_rank: HashMap<u64, usize>,
}

impl CiSpace {
    pub fn new(n_orb: usize, n_alpha: usize, n_beta: usize, max_dim: usize) -> Result<Self> {
        if n_orb > MAX_ORBITALS {
            return Err(Error::Capacity(format!(
                "{n_orb} orbitals exceed the {MAX_ORBITALS}-orbital limit"
            )));
        }
        if n_alpha > n_orb || n_beta > n_orb {
            return Err(Error::Dimension(format!(
                "({n_alpha}, {n_beta}) electrons do not fit in {n_orb} orbitals"
            )));
        }
        let dim = binomial(n_orb, n_alpha) * binomial(n_orb, n_beta);
        if dim > max_dim as u128 {
            return Err(Error::Capacity(format!(
                "CI dimension {dim} exceeds the cap of {max_dim}"
            )));
        }
        let alpha_strings = strings(n_orb, n_alpha);
        let beta_strings = strings(n_orb, n_beta);
        let alpha_rank = alpha_strings.iter().enumerate().map(|(i, &s)| (s, i)).collect();
        let beta_rank = beta_strings.iter().enumerate().map(|(i, &s)| (s, i)).collect();
        Ok(CiSpace {
            n_orb,
            n_alpha,
            n_beta,
            alpha_strings,
            beta_strings,
            alpha_rank,
            beta_rank,
        })
    }

    pub fn dim(&self) -> usize {
        self.alpha_strings.len() * self.beta_strings.len()
    }

    pub fn det(&self, idx: usize) -> Determinant {
        let nb = self.beta_strings.len();
        Determinant::new(self.alpha_strings[idx / nb], self.beta_strings[idx % nb])
    }

    pub fn index(&self, det: &Determinant) -> Option<usize> {
        let a = self.alpha_rank.get(&det.alpha)?;
        let b = self.beta_rank.get(&det.beta)?;
        Some(a * self.beta_strings.len() + b)
    }

    pub(crate) fn alpha_index(&self, s: u64) -> usize {
        self.alpha_rank[&s]
    }

    pub(crate) fn beta_index(&self, s: u64) -> usize {
        self.beta_rank[&s]
    }

    pub(crate) fn n_beta_strings(&self) -> usize {
        self.beta_strings.len()
    }

    pub fn determinants(&self) -> impl Iterator<Item = Determinant> + '_ {
        (0..self.dim()).map(|i| self.det(i))
    }
}
