//! Classical pipeline for quantum-classical AFQMC with computational basis
//! tomography (CBT) trial wavefunctions.
//!
//! The stages are:
//!
//! * [`hamio`]: FCIDUMP ingestion, frozen-core active spaces and the Cholesky
//!   factorization of the two-electron integrals.
//! * [`exactdiag`]: full CI in a fixed `(n_alpha, n_beta)` sector. The ground
//!   state stands in for the state a quantum device would prepare.
//! * [`qsim`]: a small statevector simulator with computational-basis sampling
//!   and the Clifford interference circuits used by CBT.
//! * [`cbt`]: magnitude and phase reconstruction from finite (or infinite) shot
//!   counts, yielding a multi-determinant trial wavefunction.
//! * [`afqmc`]: phaseless AFQMC driven by that trial.
//! * [`energy`]: the composite active-space corrected energy.
//! * [`cbs`]: complete-basis-set extrapolation schemes and barrier assembly.

pub mod afqmc;
pub mod cbs;
pub mod cbt;
pub mod energy;
pub mod error;
pub mod exactdiag;
pub mod hamio;
pub mod qsim;
pub mod rng;

pub use error::{Error, ErrorKind, Result};
pub use num_complex::Complex64;

/// Hartree to kcal/mol.
pub const HARTREE_TO_KCAL_PER_MOL: f64 = 627.509;
