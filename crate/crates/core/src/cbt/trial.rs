//! Trial wavefunctions produced by tomography and their text format.

use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::Shots;
use crate::error::{Error, Result};
use crate::exactdiag::{CIVector, Determinant};
use crate::qsim::Statevector;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub n_f: Shots,
    pub n_a: Shots,
    pub n_b: Shots,
    pub r_max: usize,
    /// Number of retained determinants.
    pub r: usize,
    pub seed: u64,
    /// `n_f + (r - 1)(n_a + n_b)`; absent when any stage is exact.
    pub total_measurements: Option<u64>,
    /// Label of the tomographed state.
    pub source: String,
    /// Standard error of each interference factor (0 for the reference).
    pub sigma: Vec<f64>,
}

/// `sum_k c_k |D_k>`, with `dets[0]` the phase reference.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialWavefunction {
    pub n_orb: usize,
    pub dets: Vec<Determinant>,
    pub coeffs: Vec<Complex64>,
    pub provenance: Provenance,
}

const PROVENANCE_KEY: &str = "provenance =";

impl TrialWavefunction {
    /// A trial that reproduces `v` exactly, e.g. an eigenstate from the
    /// exact solver.
    pub fn from_civector(v: &CIVector, source: &str) -> Self {
        let r = v.basis.len();
        TrialWavefunction {
            n_orb: v.n_orb,
            dets: v.basis.clone(),
            coeffs: v.amplitudes.clone(),
            provenance: Provenance {
                n_f: Shots::Infinite,
                n_a: Shots::Infinite,
                n_b: Shots::Infinite,
                r_max: r,
                r,
                seed: 0,
                total_measurements: None,
                source: source.to_string(),
                sigma: vec![0.0; r],
            },
        }
    }

    pub fn to_civector(&self) -> CIVector {
        CIVector {
            n_orb: self.n_orb,
            basis: self.dets.clone(),
            amplitudes: self.coeffs.clone(),
            energy: None,
        }
    }

    /// `|<trial|psi>|^2` with both states normalized.
    pub fn fidelity(&self, sv: &Statevector) -> Result<f64> {
        if sv.n_qubits < 2 * self.n_orb {
            return Err(Error::Dimension(format!(
                "trial needs {} qubits, state has {}",
                2 * self.n_orb,
                sv.n_qubits
            )));
        }
        let shift = sv.n_qubits - 2 * self.n_orb;
        let mut ov = Complex64::new(0.0, 0.0);
        let mut norm = 0.0;
        for (d, c) in self.dets.iter().zip(&self.coeffs) {
            ov += c.conj() * sv.amps[(d.basis_index(self.n_orb) << shift) as usize];
            norm += c.norm_sqr();
        }
        Ok(ov.norm_sqr() / (norm * sv.norm_sqr()))
    }

    /// Header lines carrying the provenance, then `bitstring re im` lines.
    pub fn to_text(&self, header: &[String]) -> String {
        let mut lines = header.to_vec();
        lines.push(format!(
            "R = {}  total_measurements = {}  seed = {}",
            self.provenance.r,
            self.provenance
                .total_measurements
                .map_or_else(|| "inf".to_string(), |t| t.to_string()),
            self.provenance.seed
        ));
        lines.push(format!(
            "{PROVENANCE_KEY} {}",
            serde_json::to_string(&self.provenance).expect("provenance serializes")
        ));
        self.to_civector().to_text(&lines)
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let v = CIVector::from_text(text)?;
        let mut provenance = None;
        for (idx, line) in text.lines().enumerate() {
            if let Some(json) = line.trim().strip_prefix('#').map(str::trim).and_then(|l| l.strip_prefix(PROVENANCE_KEY)) {
                provenance = Some(serde_json::from_str(json.trim()).map_err(|e| Error::Parse {
                    line: idx + 1,
                    msg: format!("invalid provenance: {e}"),
                })?);
            }
        }
        let mut trial = TrialWavefunction::from_civector(&v, "file");
        if let Some(p) = provenance {
            trial.provenance = p;
        }
        Ok(trial)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        TrialWavefunction::from_text(&text)
    }
}
