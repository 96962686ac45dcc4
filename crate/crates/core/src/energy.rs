//! Composite energy: an exact active-space reference corrected by the
//! difference of full-space and active-space AFQMC runs that share one
//! tomographed trial,
//!
//! `total = E_act_ref + (E_full_afqmc - E_act_afqmc)`.

use serde::{Deserialize, Serialize};

use crate::afqmc::{run_afqmc, AfqmcConfig, EnergyTrace};
use crate::cbt::{reconstruct_trial, CbtConfig, TrialWavefunction};
use crate::error::{Error, Result};
use crate::exactdiag::{fci_ground_state, CIVector, Determinant};
use crate::hamio::{extract_active_space, ActiveSpaceSpec, Hamiltonian};
use crate::qsim::Statevector;
use crate::rng::derive_seed;

/// Sub-seed tags for the two AFQMC runs.
pub const FULL_RUN_TAG: u64 = 1;
pub const ACTIVE_RUN_TAG: u64 = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompositeEnergy {
    pub e_act_ref: f64,
    pub e_full_afqmc: EnergyTrace,
    pub e_act_afqmc: EnergyTrace,
    pub total: f64,
    pub total_stderr: f64,
    pub seeds: CompositeSeeds,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompositeSeeds {
    pub cbt: u64,
    pub afqmc_full: u64,
    pub afqmc_active: u64,
}

impl CompositeEnergy {
    /// Combines the three stage results.
    pub fn assemble(e_act_ref: f64, full: EnergyTrace, active: EnergyTrace, seeds: CompositeSeeds) -> Self {
        CompositeEnergy {
            total: e_act_ref + (full.mean - active.mean),
            total_stderr: full.stderr.hypot(active.stderr),
            e_act_ref,
            e_full_afqmc: full,
            e_act_afqmc: active,
            seeds,
        }
    }
}

/// The deterministic part of a composite calculation: the two Hamiltonians
/// and the exact active-space ground state.
#[derive(Debug, Clone)]
pub struct CompositeSetup {
    pub h_full: Hamiltonian,
    pub h_active: Hamiltonian,
    pub spec: ActiveSpaceSpec,
    pub active_orbitals: Vec<usize>,
    pub ground_state: CIVector,
    pub e_act_ref: f64,
}

impl CompositeSetup {
    pub fn new(h_full: &Hamiltonian, spec: &ActiveSpaceSpec) -> Result<Self> {
        let active_orbitals = spec.resolve(h_full)?;
        let h_active = extract_active_space(h_full, spec)?;
        let ground_state = fci_ground_state(&h_active)?;
        let e_act_ref = ground_state
            .energy
            .ok_or_else(|| Error::Convergence("exact solver returned no energy".into()))?;
        Ok(CompositeSetup {
            h_full: h_full.clone(),
            h_active,
            spec: spec.clone(),
            active_orbitals,
            ground_state,
            e_act_ref,
        })
    }

    /// Tomographs the active ground state.
    pub fn tomograph(&self, cbt: &CbtConfig) -> Result<TrialWavefunction> {
        let sv = Statevector::from_civector(&self.ground_state, 2 * self.h_active.n_orb)?;
        reconstruct_trial(&sv, cbt, "active ground state")
    }

    /// Runs both AFQMC calculations with `trial` (an active-space trial).
    pub fn run_with_trial(&self, trial: &TrialWavefunction, afqmc: &AfqmcConfig, cbt_seed: u64) -> Result<CompositeEnergy> {
        let full_trial = pad_trial(trial, &self.h_full, &self.spec.frozen_orbitals, &self.active_orbitals)?;
        let seeds = CompositeSeeds {
            cbt: cbt_seed,
            afqmc_full: derive_seed(afqmc.seed, FULL_RUN_TAG),
            afqmc_active: derive_seed(afqmc.seed, ACTIVE_RUN_TAG),
        };
        let full_cfg = AfqmcConfig {
            seed: seeds.afqmc_full,
            ..afqmc.clone()
        };
        let act_cfg = AfqmcConfig {
            seed: seeds.afqmc_active,
            ..afqmc.clone()
        };
        let (full, active) = rayon::join(
            || run_afqmc(&self.h_full, &full_trial, &full_cfg),
            || run_afqmc(&self.h_active, trial, &act_cfg),
        );
        Ok(CompositeEnergy::assemble(self.e_act_ref, full?, active?, seeds))
    }

    pub fn run(&self, cbt: &CbtConfig, afqmc: &AfqmcConfig) -> Result<CompositeEnergy> {
        let trial = self.tomograph(cbt)?;
        self.run_with_trial(&trial, afqmc, cbt.seed)
    }
}

/// Exact active-space reference, tomography, then the two AFQMC runs.
pub fn composite_energy(
    h_full: &Hamiltonian,
    spec: &ActiveSpaceSpec,
    cbt: &CbtConfig,
    afqmc: &AfqmcConfig,
) -> Result<CompositeEnergy> {
    CompositeSetup::new(h_full, spec)?.run(cbt, afqmc)
}

/// Embeds an active-space trial in the full space by adding the doubly
/// occupied frozen orbitals to every determinant.
///
/// Full-space states are read as `F^dagger A^dagger |0>` with the frozen
/// operators first, which is the ordering the frozen-core Hamiltonian
/// assumes; the sign of bringing each spin string into ascending order is
/// folded into the coefficient.
pub fn pad_trial(
    trial: &TrialWavefunction,
    h_full: &Hamiltonian,
    frozen: &[usize],
    active: &[usize],
) -> Result<TrialWavefunction> {
    if trial.n_orb != active.len() {
        return Err(Error::Dimension(format!(
            "trial has {} orbitals but the active space has {}",
            trial.n_orb,
            active.len()
        )));
    }
    let mut frozen = frozen.to_vec();
    frozen.sort_unstable();
    let frozen_bits = frozen.iter().fold(0u64, |b, &f| b | 1 << f);
    if frozen.is_empty() && active.iter().copied().eq(0..h_full.n_orb) {
        return Ok(trial.clone());
    }

    let embed = |bits: u64| -> (u64, bool) {
        let mut order = frozen.clone();
        order.extend((0..active.len()).filter(|&i| bits >> i & 1 == 1).map(|i| active[i]));
        let inversions: usize = (0..order.len())
            .map(|i| order[i + 1..].iter().filter(|&&x| x < order[i]).count())
            .sum();
        let full = order.iter().fold(0u64, |b, &p| b | 1 << p);
        (full, inversions % 2 == 1)
    };

    let mut dets = Vec::with_capacity(trial.dets.len());
    let mut coeffs = Vec::with_capacity(trial.dets.len());
    for (d, &c) in trial.dets.iter().zip(&trial.coeffs) {
        let (alpha, sa) = embed(d.alpha);
        let (beta, sb) = embed(d.beta);
        debug_assert_eq!(alpha & frozen_bits, frozen_bits);
        dets.push(Determinant::new(alpha, beta));
        coeffs.push(if sa ^ sb { -c } else { c });
    }
    Ok(TrialWavefunction {
        n_orb: h_full.n_orb,
        dets,
        coeffs,
        provenance: trial.provenance.clone(),
    })
}
