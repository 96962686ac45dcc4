//! Interference circuits mapping a pair of basis states onto `|0...0>`.

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::Statevector;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Gate {
    H(usize),
    X(usize),
    S(usize),
    /// Adjoint of `S`; only produced by [`InterferenceCircuit::inverse`].
    Sdg(usize),
    Cnot { control: usize, target: usize },
}

impl Gate {
    pub fn inverse(self) -> Gate {
        match self {
            Gate::S(q) => Gate::Sdg(q),
            Gate::Sdg(q) => Gate::S(q),
            g => g,
        }
    }

    pub fn is_two_qubit(&self) -> bool {
        matches!(self, Gate::Cnot { .. })
    }

    fn max_qubit(&self) -> usize {
        match *self {
            Gate::H(q) | Gate::X(q) | Gate::S(q) | Gate::Sdg(q) => q,
            Gate::Cnot { control, target } => control.max(target),
        }
    }
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Gate::H(q) => write!(f, "H {q}"),
            Gate::X(q) => write!(f, "X {q}"),
            Gate::S(q) => write!(f, "S {q}"),
            Gate::Sdg(q) => write!(f, "SDG {q}"),
            Gate::Cnot { control, target } => write!(f, "CNOT {control} {target}"),
        }
    }
}

/// `U` interferes the pair with relative phase `+1`, `V` with `-i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Variant {
    U,
    V,
}

/// A Clifford circuit `C` with `C^dagger |0> = (|m> + |n>)/sqrt(2)` (variant
/// `U`) or `(|m> - i|n>)/sqrt(2)` (variant `V`). Measuring `|0...0>` after `C`
/// therefore has amplitude `(<m| + <n|)|psi>/sqrt(2)` or
/// `(<m| + i<n|)|psi>/sqrt(2)`. Gates are stored in application order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InterferenceCircuit {
    pub n_qubits: usize,
    pub m: u64,
    pub n: u64,
    pub flag_qubit: usize,
    pub variant: Variant,
    pub gates: Vec<Gate>,
}

/// Builds the interference circuit for the basis states `m != n`.
///
/// The flag is the lowest-order qubit on which `m` reads 0 and `n` reads 1
/// (falling back to any differing qubit when `n`'s set bits are a subset of
/// `m`'s). Its Hadamard fans out through one CNOT per other differing qubit,
/// and X gates dress the result onto `m`.
pub fn build_interference_circuit(
    m: u64,
    n: u64,
    n_qubits: usize,
    variant: Variant,
) -> Result<InterferenceCircuit> {
    if m == n {
        return Err(Error::DegeneratePair(m));
    }
    if n_qubits == 0 || n_qubits > 64 || (n_qubits < 64 && (m >> n_qubits != 0 || n >> n_qubits != 0)) {
        return Err(Error::Circuit(format!(
            "bitstrings {m} and {n} do not fit in {n_qubits} qubits"
        )));
    }
    let qubit_of_bit = |b: u32| n_qubits - 1 - b as usize;
    let diff = m ^ n;
    let preferred = n & !m;
    let flag_bit = if preferred != 0 { preferred.trailing_zeros() } else { diff.trailing_zeros() };
    let flag = qubit_of_bit(flag_bit);

    let mut gates = Vec::new();
    if m >> flag_bit & 1 == 1 {
        gates.push(Gate::X(flag));
    }
    let mut targets: Vec<usize> = (0..64u32)
        .filter(|&b| b != flag_bit && diff >> b & 1 == 1)
        .map(qubit_of_bit)
        .collect();
    targets.sort_unstable();
    for t in targets {
        gates.push(Gate::Cnot { control: flag, target: t });
    }
    if variant == Variant::V {
        gates.push(Gate::S(flag));
    }
    let mut dress: Vec<usize> = (0..64u32)
        .filter(|&b| b != flag_bit && m >> b & 1 == 1)
        .map(qubit_of_bit)
        .collect();
    dress.sort_unstable();
    for q in dress {
        gates.push(Gate::X(q));
    }
    gates.push(Gate::H(flag));
    Ok(InterferenceCircuit {
        n_qubits,
        m,
        n,
        flag_qubit: flag,
        variant,
        gates,
    })
}

impl InterferenceCircuit {
    pub fn cnot_count(&self) -> usize {
        self.gates.iter().filter(|g| g.is_two_qubit()).count()
    }

    /// `C^dagger`, as a circuit over the same pair.
    pub fn inverse(&self) -> InterferenceCircuit {
        InterferenceCircuit {
            gates: self.gates.iter().rev().map(|g| g.inverse()).collect(),
            ..self.clone()
        }
    }

    /// One gate per line, e.g. `CNOT 2 0`.
    pub fn dump(&self) -> String {
        self.gates.iter().map(|g| format!("{g}\n")).collect()
    }

    /// Applies the circuit to `sv`.
    pub fn apply(&self, sv: &Statevector) -> Result<Statevector> {
        if sv.n_qubits != self.n_qubits {
            return Err(Error::Circuit(format!(
                "circuit acts on {} qubits, state has {}",
                self.n_qubits, sv.n_qubits
            )));
        }
        apply_gates(&self.gates, sv)
    }
}

/// Applies `gates` in order.
pub fn apply_gates(gates: &[Gate], sv: &Statevector) -> Result<Statevector> {
    let nq = sv.n_qubits;
    for g in gates {
        if g.max_qubit() >= nq {
            return Err(Error::Circuit(format!("gate `{g}` addresses a qubit outside 0..{nq}")));
        }
        if let Gate::Cnot { control, target } = g {
            if control == target {
                return Err(Error::Circuit(format!("gate `{g}` uses one qubit twice")));
            }
        }
    }
    let mut amps = sv.amps.clone();
    let bit = |q: usize| 1usize << (nq - 1 - q);
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let i = Complex64::new(0.0, 1.0);
    for g in gates {
        match *g {
            Gate::H(q) => {
                let b = bit(q);
                for k in 0..amps.len() {
                    if k & b == 0 {
                        let (a0, a1) = (amps[k], amps[k | b]);
                        amps[k] = (a0 + a1) * r;
                        amps[k | b] = (a0 - a1) * r;
                    }
                }
            }
            Gate::X(q) => {
                let b = bit(q);
                for k in 0..amps.len() {
                    if k & b == 0 {
                        amps.swap(k, k | b);
                    }
                }
            }
            Gate::S(q) | Gate::Sdg(q) => {
                let b = bit(q);
                let ph = if matches!(g, Gate::S(_)) { i } else { -i };
                for (k, a) in amps.iter_mut().enumerate() {
                    if k & b != 0 {
                        *a *= ph;
                    }
                }
            }
            Gate::Cnot { control, target } => {
                let (c, t) = (bit(control), bit(target));
                for k in 0..amps.len() {
                    if k & c != 0 && k & t == 0 {
                        amps.swap(k, k | t);
                    }
                }
            }
        }
    }
    Ok(Statevector { n_qubits: nq, amps })
}
