//! Phaseless auxiliary-field quantum Monte Carlo.
//!
//! Walkers are Slater determinants `(phi_alpha, phi_beta)` with real,
//! non-negative weights. Each step samples Gaussian fields shifted by the
//! (capped) force bias, applies the split propagator, and scales the weight by
//! `exp(-dt (Re E_L - E_0)) max(0, cos dtheta)` using the mean of the local
//! energies before and after the step. Weights are pair-branched and `E_0`
//! refreshed once per block.

mod blocking;
mod linalg;
mod propagator;
mod trial;

pub use blocking::blocking_analysis;
pub use propagator::{Propagator, TAYLOR_MIN_ORDER, TAYLOR_TOL};
pub use trial::{unit_columns, Evaluation, Operators, TrialState};

use std::fmt::Write as _;

use num_complex::Complex64 as C;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cbt::TrialWavefunction;
use crate::error::{Error, Result};
use crate::hamio::{cholesky_factorize, CholeskyFactors, Hamiltonian, DEFAULT_CHOLESKY_THRESHOLD};
use crate::rng::{stream, Domain};

/// How walkers are initialized.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WalkerInit {
    /// Every walker starts as the trial determinant with the largest `|c_k|`.
    #[default]
    Dominant,
    /// Each walker draws a trial determinant with probability `|c_k|^2`.
    Sampled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AfqmcConfig {
    pub blocks: usize,
    pub steps_per_block: usize,
    pub n_walkers: usize,
    /// Imaginary-time step (1/Hartree).
    pub dt: f64,
    pub seed: u64,
    /// Leading blocks excluded from the statistics.
    #[serde(default = "default_equilibration")]
    pub n_equilibration: usize,
    #[serde(default = "default_cholesky_threshold")]
    pub cholesky_threshold: f64,
    #[serde(default)]
    pub init: WalkerInit,
    /// Steps between column re-orthonormalizations.
    #[serde(default = "default_reorthonormalize")]
    pub reorthonormalize_every: usize,
    /// Largest allowed modulus of each force-bias component.
    #[serde(default = "default_force_bias_cap")]
    pub force_bias_cap: f64,
}

fn default_equilibration() -> usize {
    1000
}
fn default_cholesky_threshold() -> f64 {
    DEFAULT_CHOLESKY_THRESHOLD
}
fn default_reorthonormalize() -> usize {
    5
}
fn default_force_bias_cap() -> f64 {
    1.0
}

impl Default for AfqmcConfig {
    fn default() -> Self {
        AfqmcConfig {
            blocks: 10_000,
            steps_per_block: 10,
            n_walkers: 480,
            dt: 0.005,
            seed: 0,
            n_equilibration: default_equilibration(),
            cholesky_threshold: default_cholesky_threshold(),
            init: WalkerInit::Dominant,
            reorthonormalize_every: default_reorthonormalize(),
            force_bias_cap: default_force_bias_cap(),
        }
    }
}

impl AfqmcConfig {
    pub fn validate(&self) -> Result<()> {
        if self.blocks == 0 || self.steps_per_block == 0 || self.n_walkers == 0 {
            return Err(Error::Input("blocks, steps_per_block and n_walkers must be positive".into()));
        }
        if self.n_equilibration >= self.blocks {
            return Err(Error::Input(format!(
                "n_equilibration = {} leaves no blocks out of {}",
                self.n_equilibration, self.blocks
            )));
        }
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::Input(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.cholesky_threshold > 0.0) {
            return Err(Error::Input("cholesky_threshold must be positive".into()));
        }
        if self.reorthonormalize_every == 0 {
            return Err(Error::Input("reorthonormalize_every must be positive".into()));
        }
        if !(self.force_bias_cap > 0.0) {
            return Err(Error::Input("force_bias_cap must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Walker {
    /// `n_orb x n_alpha`, column-major.
    pub phi_alpha: Vec<C>,
    /// `n_orb x n_beta`, column-major.
    pub phi_beta: Vec<C>,
    pub weight: f64,
    /// `<T|phi>`.
    pub overlap: C,
    pub local_energy: C,
    /// Mixed estimates `<T|v_g|phi> / <T|phi>`.
    pub mixed_fields: Vec<C>,
    /// Accumulated `dtheta`.
    pub hybrid_phase: f64,
}

impl Walker {
    /// A walker on `phi` with unit weight.
    pub fn new(trial: &TrialState, ops: &Operators, phi_alpha: Vec<C>, phi_beta: Vec<C>) -> Result<Self> {
        let ev = trial.evaluate(ops, &phi_alpha, &phi_beta)?;
        Ok(Walker {
            phi_alpha,
            phi_beta,
            weight: 1.0,
            overlap: ev.overlap,
            local_energy: ev.local_energy,
            mixed_fields: ev.mixed_fields,
            hybrid_phase: 0.0,
        })
    }
}

/// Weighted block averages and their statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyTrace {
    pub block_energies: Vec<f64>,
    /// Total walker weight at the end of each block, before population control.
    pub block_weights: Vec<f64>,
    pub mean: f64,
    pub stderr: f64,
    pub n_equilibration: usize,
    /// Walkers zeroed because their local energy or weight was not finite.
    pub nonfinite_events: usize,
    /// Variational energy of the trial.
    pub trial_energy: f64,
}

impl EnergyTrace {
    /// `block,total_weight,block_energy` rows after `# ` header lines.
    pub fn to_csv(&self, header: &[String]) -> String {
        let mut out = String::new();
        for line in header {
            let _ = writeln!(out, "# {line}");
        }
        out.push_str("block,total_weight,block_energy\n");
        for (i, (w, e)) in self.block_weights.iter().zip(&self.block_energies).enumerate() {
            let _ = writeln!(out, "{i},{w:.17e},{e:.17e}");
        }
        out
    }
}

/// State visible to an observer after every step.
pub struct StepReport<'a> {
    pub block: usize,
    /// Step index counted from the start of the run.
    pub step: usize,
    pub walkers: &'a [Walker],
    pub e0: f64,
}

/// Runs AFQMC on `h` with the given trial.
pub fn run_afqmc(h: &Hamiltonian, trial: &TrialWavefunction, cfg: &AfqmcConfig) -> Result<EnergyTrace> {
    run_afqmc_observed(h, trial, cfg, |_| {})
}

/// [`run_afqmc`] with a callback after each step.
pub fn run_afqmc_observed(
    h: &Hamiltonian,
    trial: &TrialWavefunction,
    cfg: &AfqmcConfig,
    observer: impl FnMut(&StepReport<'_>),
) -> Result<EnergyTrace> {
    cfg.validate()?;
    let chol = cholesky_factorize(h, cfg.cholesky_threshold)?;
    run_afqmc_with_factors(h, &chol, trial, cfg, observer)
}

/// [`run_afqmc_observed`] with a precomputed Cholesky factorization.
pub fn run_afqmc_with_factors(
    h: &Hamiltonian,
    chol: &CholeskyFactors,
    trial: &TrialWavefunction,
    cfg: &AfqmcConfig,
    mut observer: impl FnMut(&StepReport<'_>),
) -> Result<EnergyTrace> {
    cfg.validate()?;
    if trial.n_orb != h.n_orb {
        return Err(Error::Dimension(format!(
            "trial has {} orbitals, Hamiltonian {}",
            trial.n_orb, h.n_orb
        )));
    }
    let ops = Operators::new(h, chol)?;
    let tstate = TrialState::new(trial)?;
    if (tstate.n_alpha, tstate.n_beta) != (h.n_alpha(), h.n_beta()) {
        return Err(Error::Dimension(format!(
            "trial has ({}, {}) electrons, Hamiltonian ({}, {})",
            tstate.n_alpha,
            tstate.n_beta,
            h.n_alpha(),
            h.n_beta()
        )));
    }
    let (trial_energy, mean_field) = tstate.expectations(&ops)?;
    let mut walkers = initial_walkers(&tstate, &ops, cfg)?;
    let e_init = weighted_energy(&walkers).0;
    let mut prop = Propagator::new(&ops, mean_field, cfg.dt, if e_init.is_finite() { e_init } else { trial_energy })?;

    let mut block_energies = Vec::with_capacity(cfg.blocks);
    let mut block_weights = Vec::with_capacity(cfg.blocks);
    let mut nonfinite_events = 0;
    let mut step = 0usize;
    for block in 0..cfg.blocks {
        let mut num = 0.0;
        let mut den = 0.0;
        for _ in 0..cfg.steps_per_block {
            nonfinite_events += step_walkers(&prop, &tstate, &ops, &mut walkers, cfg, step);
            step += 1;
            if step % cfg.reorthonormalize_every == 0 {
                walkers.par_iter_mut().for_each(|w| reorthonormalize(w, h.n_orb));
            }
            let (n, d) = weighted_sums(&walkers, prop.e0, cfg.dt);
            num += n;
            den += d;
            observer(&StepReport {
                block,
                step: step - 1,
                walkers: &walkers,
                e0: prop.e0,
            });
        }
        let total: f64 = walkers.iter().map(|w| w.weight).sum();
        if !(total >= 1e-10 * cfg.n_walkers as f64) {
            return Err(Error::WeightCollapse {
                block,
                total_weight: total,
            });
        }
        let energy = num / den;
        block_energies.push(energy);
        block_weights.push(total);

        let mut rng = stream(cfg.seed, Domain::PopulationControl, block as u64, 0);
        pair_branch(&mut walkers, &mut rng);
        prop.e0 = energy;
        let scale = cfg.n_walkers as f64 / walkers.iter().map(|w| w.weight).sum::<f64>();
        walkers.iter_mut().for_each(|w| w.weight *= scale);
    }

    let (mean, stderr) = blocking_analysis(&block_energies[cfg.n_equilibration..]);
    Ok(EnergyTrace {
        block_energies,
        block_weights,
        mean,
        stderr,
        n_equilibration: cfg.n_equilibration,
        nonfinite_events,
        trial_energy,
    })
}

fn initial_walkers(trial: &TrialState, ops: &Operators, cfg: &AfqmcConfig) -> Result<Vec<Walker>> {
    let n = trial.n_orb;
    let make = |d: crate::exactdiag::Determinant| Walker::new(trial, ops, unit_columns(n, d.alpha), unit_columns(n, d.beta));
    match cfg.init {
        WalkerInit::Dominant => {
            let w = make(trial.dominant_determinant())?;
            Ok(vec![w; cfg.n_walkers])
        }
        WalkerInit::Sampled => {
            let probs: Vec<f64> = trial.coeffs.iter().map(|c| c.norm_sqr()).collect();
            let total: f64 = probs.iter().sum();
            (0..cfg.n_walkers)
                .map(|w| {
                    let mut rng = stream(cfg.seed, Domain::WalkerInit, w as u64, 0);
                    let mut u = rng.random::<f64>() * total;
                    let mut k = 0;
                    while k + 1 < probs.len() && u >= probs[k] {
                        u -= probs[k];
                        k += 1;
                    }
                    make(trial.dets[k])
                })
                .collect()
        }
    }
}

fn clamp_energy(e: f64, e0: f64, dt: f64) -> f64 {
    let bound = 10.0 / dt.sqrt();
    e.clamp(e0 - bound, e0 + bound)
}

/// `(sum W Re E_L, sum W)` with clamped local energies.
fn weighted_sums(walkers: &[Walker], e0: f64, dt: f64) -> (f64, f64) {
    walkers.iter().fold((0.0, 0.0), |(n, d), w| {
        if w.weight > 0.0 {
            (n + w.weight * clamp_energy(w.local_energy.re, e0, dt), d + w.weight)
        } else {
            (n, d)
        }
    })
}

fn weighted_energy(walkers: &[Walker]) -> (f64, f64) {
    let (n, d) = walkers
        .iter()
        .fold((0.0, 0.0), |(n, d), w| (n + w.weight * w.local_energy.re, d + w.weight));
    (n / d, d)
}

/// Advances every walker by one step; returns the number of walkers zeroed
/// for non-finite values.
pub fn step_walkers(
    prop: &Propagator,
    trial: &TrialState,
    ops: &Operators,
    walkers: &mut [Walker],
    cfg: &AfqmcConfig,
    step: usize,
) -> usize {
    walkers
        .par_iter_mut()
        .enumerate()
        .map(|(i, w)| {
            let mut rng = stream(cfg.seed, Domain::WalkerField, i as u64, step as u64);
            usize::from(!step_one(prop, trial, ops, w, cfg, &mut rng))
        })
        .collect::<Vec<usize>>()
        .into_iter()
        .sum()
}

/// Force bias `-i sqrt(dt) (<v_g>_mix - vbar_g)`, each component capped in
/// modulus.
pub fn force_bias(prop: &Propagator, mixed_fields: &[C], cap: f64) -> Vec<C> {
    let sq = prop.dt.sqrt();
    mixed_fields
        .iter()
        .zip(&prop.mean_field)
        .map(|(v, &vb)| {
            let fb = C::new(0.0, -sq) * (v - vb);
            let m = fb.norm();
            if m > cap {
                fb * (cap / m)
            } else {
                fb
            }
        })
        .collect()
}

/// Returns false if the walker was zeroed for a non-finite value.
fn step_one(
    prop: &Propagator,
    trial: &TrialState,
    ops: &Operators,
    w: &mut Walker,
    cfg: &AfqmcConfig,
    rng: &mut impl Rng,
) -> bool {
    if w.weight == 0.0 {
        return true;
    }
    let xbar = force_bias(prop, &w.mixed_fields, cfg.force_bias_cap);
    let shifted: Vec<C> = xbar
        .iter()
        .map(|&fb| C::new(rng.sample::<f64, _>(StandardNormal), 0.0) - fb)
        .collect();
    let scalar = prop.apply(&shifted, &mut w.phi_alpha, trial.n_alpha);
    prop.apply(&shifted, &mut w.phi_beta, trial.n_beta);

    let ev = match trial.evaluate(ops, &w.phi_alpha, &w.phi_beta) {
        Ok(ev) if ev.local_energy.is_finite() => ev,
        _ => {
            w.weight = 0.0;
            return false;
        }
    };
    let ratio = ev.overlap / w.overlap * scalar;
    let dtheta = ratio.arg();
    let e_old = clamp_energy(w.local_energy.re, prop.e0, prop.dt);
    let e_new = clamp_energy(ev.local_energy.re, prop.e0, prop.dt);
    let factor = (-prop.dt * (0.5 * (e_old + e_new) - prop.e0)).exp() * dtheta.cos().max(0.0);
    w.weight *= factor;
    w.overlap = ev.overlap;
    w.local_energy = ev.local_energy;
    w.mixed_fields = ev.mixed_fields;
    w.hybrid_phase += dtheta;
    if !w.weight.is_finite() {
        w.weight = 0.0;
        return false;
    }
    true
}

/// Orthonormalizes the orbital columns; the overlap cache absorbs `det R`.
fn reorthonormalize(w: &mut Walker, n_orb: usize) {
    if w.weight == 0.0 {
        return;
    }
    let ka = w.phi_alpha.len() / n_orb;
    let kb = w.phi_beta.len() / n_orb;
    let ra = linalg::orthonormalize(&mut w.phi_alpha, n_orb, ka);
    let rb = linalg::orthonormalize(&mut w.phi_beta, n_orb, kb);
    w.overlap /= ra * rb;
}

/// Pair branching: the heaviest walker above twice the mean weight is paired
/// with the lightest below half the mean; one of the two configurations,
/// chosen with probability proportional to its weight, replaces both, each
/// carrying half the pair's weight. Total weight is conserved exactly.
pub fn pair_branch(walkers: &mut [Walker], rng: &mut impl Rng) {
    let n = walkers.len();
    if n < 2 {
        return;
    }
    let total: f64 = walkers.iter().map(|w| w.weight).sum();
    let mean = total / n as f64;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| walkers[b].weight.total_cmp(&walkers[a].weight).then(a.cmp(&b)));
    let (mut i, mut j) = (0, n - 1);
    while i < j {
        let (big, small) = (order[i], order[j]);
        let (wb, ws) = (walkers[big].weight, walkers[small].weight);
        if !(ws < 0.5 * mean && (wb > 2.0 * mean || ws == 0.0)) {
            break;
        }
        let sum = wb + ws;
        if rng.random::<f64>() < wb / sum {
            walkers[small] = walkers[big].clone();
        } else {
            walkers[big] = walkers[small].clone();
        }
        walkers[big].weight = 0.5 * sum;
        walkers[small].weight = sum - 0.5 * sum;
        i += 1;
        j -= 1;
    }
}

#[cfg(test)]
mod tests;
