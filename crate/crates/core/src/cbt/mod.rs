//! Computational basis tomography: coefficient magnitudes from basis-sampling
//! frequencies, relative phases from interference measurements against a
//! reference bitstring, assembled into a multi-determinant trial state.
//!
//! For a retained bitstring `n` and the reference `m`, the interference factor
//! `<n|psi><psi|m>` equals `A + iB - (1 + i)(P_n + P_m)/2`, where `A` and `B`
//! are the probabilities of reading `|0...0>` after the `U` and `V`
//! interference circuits and `P_k = |<k|psi>|^2`.

mod trial;

pub use trial::{Provenance, TrialWavefunction};

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qsim::{build_interference_circuit, sample_basis, sample_zero_count, Statevector, Variant};

/// Probabilities at or below this are outside the support in exact mode.
pub const EXACT_SUPPORT_CUTOFF: f64 = 1e-20;

/// A shot budget; `Infinite` uses exact outcome probabilities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "ShotsRepr", into = "ShotsRepr")]
pub enum Shots {
    Finite(u64),
    Infinite,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum ShotsRepr {
    Count(u64),
    Text(String),
}

impl TryFrom<ShotsRepr> for Shots {
    type Error = String;
    fn try_from(r: ShotsRepr) -> std::result::Result<Self, String> {
        match r {
            ShotsRepr::Count(0) => Err("shot counts must be at least 1".into()),
            ShotsRepr::Count(n) => Ok(Shots::Finite(n)),
            ShotsRepr::Text(s) => s.parse(),
        }
    }
}

impl From<Shots> for ShotsRepr {
    fn from(s: Shots) -> Self {
        match s {
            Shots::Finite(n) => ShotsRepr::Count(n),
            Shots::Infinite => ShotsRepr::Text("inf".into()),
        }
    }
}

impl FromStr for Shots {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let t = s.trim();
        if t.eq_ignore_ascii_case("inf") || t.eq_ignore_ascii_case("infinite") {
            return Ok(Shots::Infinite);
        }
        let v: f64 = t.parse().map_err(|_| format!("invalid shot count `{s}`"))?;
        if v < 1.0 || v.fract() != 0.0 || v > u64::MAX as f64 {
            return Err(format!("shot count `{s}` must be a positive integer or `inf`"));
        }
        Ok(Shots::Finite(v as u64))
    }
}

impl fmt::Display for Shots {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Shots::Finite(n) => write!(f, "{n}"),
            Shots::Infinite => write!(f, "inf"),
        }
    }
}

impl Shots {
    pub fn count(&self) -> Option<u64> {
        match self {
            Shots::Finite(n) => Some(*n),
            Shots::Infinite => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CbtConfig {
    /// Shots for the magnitude stage.
    pub n_f: Shots,
    /// Shots per pair for the `U` circuit.
    pub n_a: Shots,
    /// Shots per pair for the `V` circuit.
    pub n_b: Shots,
    pub r_max: usize,
    pub seed: u64,
}

impl CbtConfig {
    /// The same budget for every stage.
    pub fn uniform(shots: Shots, r_max: usize, seed: u64) -> Self {
        CbtConfig {
            n_f: shots,
            n_a: shots,
            n_b: shots,
            r_max,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.r_max == 0 {
            return Err(Error::Input("r_max must be at least 1".into()));
        }
        for (name, s) in [("n_f", self.n_f), ("n_a", self.n_a), ("n_b", self.n_b)] {
            if s == Shots::Finite(0) {
                return Err(Error::Input(format!("{name} must be at least 1")));
            }
        }
        Ok(())
    }
}

/// `n_f + (r - 1)(n_a + n_b)`, or `None` if any stage is exact.
pub fn total_measurements(n_f: Shots, n_a: Shots, n_b: Shots, r: usize) -> Option<u64> {
    let pairs = r.saturating_sub(1) as u64;
    Some(n_f.count()? + pairs * (n_a.count()? + n_b.count()?))
}

/// Observed bitstrings with magnitude `sqrt(N_k / n_f)`, sorted by magnitude
/// descending then bitstring ascending. With infinite shots the magnitudes
/// are the exact `|<k|psi>|` over the support.
pub fn estimate_magnitudes(sv: &Statevector, n_f: Shots, seed: u64) -> Vec<(u64, f64)> {
    let mut out: Vec<(u64, f64)> = match n_f {
        Shots::Infinite => sv
            .amps
            .iter()
            .enumerate()
            .filter(|(_, a)| a.norm_sqr() > EXACT_SUPPORT_CUTOFF)
            .map(|(k, a)| (k as u64, a.norm()))
            .collect(),
        Shots::Finite(n) => sample_basis(sv, n, seed)
            .into_iter()
            .map(|(k, c)| (k, (c as f64 / n as f64).sqrt()))
            .collect(),
    };
    out.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    out
}

/// The first `min(r_max, len)` bitstrings; the first is the phase reference.
pub fn select_top_r(entries: &[(u64, f64)], r_max: usize) -> Result<Vec<u64>> {
    if entries.is_empty() {
        return Err(Error::Protocol("no outcomes to select from".into()));
    }
    Ok(entries.iter().take(r_max.max(1)).map(|e| e.0).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InterferenceEstimate {
    pub n: u64,
    /// Reference bitstring.
    pub m: u64,
    /// Estimate of `A_{n,m}`.
    pub a: f64,
    /// Estimate of `B_{n,m}`.
    pub b: f64,
    /// Estimate of `<n|psi><psi|m>`.
    pub overlap: Complex64,
    /// Standard error of `overlap` per component.
    pub sigma: f64,
}

/// Estimates `<n|psi><psi|m>` given the magnitude-stage probabilities `p_n`
/// and `p_m`.
pub fn estimate_interference(
    sv: &Statevector,
    n: u64,
    m: u64,
    p_n: f64,
    p_m: f64,
    cfg: &CbtConfig,
) -> Result<InterferenceEstimate> {
    if n == m {
        return Err(Error::DegeneratePair(n));
    }
    let zero_probability = |first: u64, second: u64, variant: Variant| -> Result<f64> {
        let circ = build_interference_circuit(first, second, sv.n_qubits, variant)?;
        Ok(circ.apply(sv)?.probability(0))
    };
    let pa = zero_probability(n, m, Variant::U)?;
    let pb = zero_probability(n, m, Variant::V)?;
    let estimate = |p: f64, shots: Shots, tag: u64| -> (f64, f64) {
        match shots {
            Shots::Infinite => (p, 0.0),
            Shots::Finite(k) => {
                let zeros = sample_zero_count(p, k, cfg.seed, n, m.wrapping_mul(2).wrapping_add(tag));
                let est = zeros as f64 / k as f64;
                (est, est * (1.0 - est) / k as f64)
            }
        }
    };
    let (a, va) = estimate(pa, cfg.n_a, 0);
    let (b, vb) = estimate(pb, cfg.n_b, 1);
    let shift = 0.5 * (p_n + p_m);
    Ok(InterferenceEstimate {
        n,
        m,
        a,
        b,
        overlap: Complex64::new(a - shift, b - shift),
        sigma: (va + vb).sqrt(),
    })
}

/// Runs the three tomography stages on `sv` and returns the renormalized
/// trial state `sum_n |<n|psi>| e^{i(phi_n - phi_m)} |n>`.
pub fn reconstruct_trial(sv: &Statevector, cfg: &CbtConfig, source: &str) -> Result<TrialWavefunction> {
    cfg.validate()?;
    if sv.n_qubits % 2 != 0 {
        return Err(Error::Protocol(format!(
            "{} qubits do not encode spin orbitals in pairs",
            sv.n_qubits
        )));
    }
    let mags = estimate_magnitudes(sv, cfg.n_f, cfg.seed);
    let selected = select_top_r(&mags, cfg.r_max)?;
    let (m, mag_m) = mags[0];
    if mag_m == 0.0 {
        return Err(Error::Protocol("reference magnitude is zero".into()));
    }
    let estimates: Vec<InterferenceEstimate> = mags[1..selected.len()]
        .par_iter()
        .map(|&(n, mag_n)| estimate_interference(sv, n, m, mag_n * mag_n, mag_m * mag_m, cfg))
        .collect::<Result<_>>()?;

    let mut coeffs = vec![Complex64::new(mag_m, 0.0)];
    let mut sigma = vec![0.0];
    for (est, &(_, mag_n)) in estimates.iter().zip(&mags[1..]) {
        let r = est.overlap.norm();
        let phase = if r > 0.0 { est.overlap / r } else { Complex64::new(1.0, 0.0) };
        coeffs.push(phase * mag_n);
        sigma.push(est.sigma);
    }
    let norm = coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    coeffs.iter_mut().for_each(|c| *c /= norm);

    let n_orb = sv.n_qubits / 2;
    Ok(TrialWavefunction {
        n_orb,
        dets: selected
            .iter()
            .map(|&k| crate::exactdiag::Determinant::from_basis_index(k, n_orb))
            .collect(),
        coeffs,
        provenance: Provenance {
            n_f: cfg.n_f,
            n_a: cfg.n_a,
            n_b: cfg.n_b,
            r_max: cfg.r_max,
            r: selected.len(),
            seed: cfg.seed,
            total_measurements: total_measurements(cfg.n_f, cfg.n_a, cfg.n_b, selected.len()),
            source: source.to_string(),
            sigma,
        },
    })
}

/// One row of a fidelity-versus-shots sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub shots: Shots,
    pub seed: u64,
    pub r: usize,
    pub total_measurements: Option<u64>,
    pub fidelity: f64,
}

/// Tomographs `sv` for every `(shots, seed)` pair with a uniform budget.
pub fn fidelity_sweep(sv: &Statevector, shots: &[Shots], seeds: &[u64], r_max: usize) -> Result<Vec<SweepRow>> {
    let jobs: Vec<(Shots, u64)> = shots.iter().flat_map(|&s| seeds.iter().map(move |&d| (s, d))).collect();
    jobs.par_iter()
        .map(|&(s, seed)| {
            let trial = reconstruct_trial(sv, &CbtConfig::uniform(s, r_max, seed), "sweep")?;
            Ok(SweepRow {
                shots: s,
                seed,
                r: trial.provenance.r,
                total_measurements: trial.provenance.total_measurements,
                fidelity: trial.fidelity(sv)?,
            })
        })
        .collect()
}
