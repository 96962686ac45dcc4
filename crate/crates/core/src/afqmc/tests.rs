use num_complex::Complex64 as C;
use rand::Rng;

use super::linalg::det;
use super::*;
use crate::cbt::TrialWavefunction;
use crate::exactdiag::{apply_hamiltonian, ci_space, fci_ground_state, CIVector, Determinant};
use crate::hamio::parse_fcidump;

fn h2() -> Hamiltonian {
    parse_fcidump(include_str!("../../data/h2_sto3g.fcidump")).unwrap()
}

fn trial_from(n_orb: usize, dets: &[(u64, u64)], coeffs: &[C]) -> TrialWavefunction {
    let v = CIVector {
        n_orb,
        basis: dets.iter().map(|&(a, b)| Determinant::new(a, b)).collect(),
        amplitudes: coeffs.to_vec(),
        energy: None,
    };
    TrialWavefunction::from_civector(&v, "test")
}

fn random_orbitals(n: usize, k: usize, rng: &mut impl Rng) -> Vec<C> {
    (0..n * k)
        .map(|_| C::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect()
}

/// The walker expanded in the determinant basis of its sector.
fn expand(n: usize, phi_a: &[C], phi_b: &[C], na: usize, nb: usize) -> CIVector {
    let space = crate::exactdiag::CiSpace::new(n, na, nb, 100_000).unwrap();
    let minor = |phi: &[C], bits: u64, k: usize| {
        let occ: Vec<usize> = (0..n).filter(|&p| bits >> p & 1 == 1).collect();
        let mut m = vec![C::new(0.0, 0.0); k * k];
        for j in 0..k {
            for (i, &p) in occ.iter().enumerate() {
                m[i + k * j] = phi[p + n * j];
            }
        }
        det(&m, k)
    };
    let basis: Vec<Determinant> = space.determinants().collect();
    let amplitudes = basis.iter().map(|d| minor(phi_a, d.alpha, na) * minor(phi_b, d.beta, nb)).collect();
    CIVector {
        n_orb: n,
        basis,
        amplitudes,
        energy: None,
    }
}

fn tight(h: &Hamiltonian) -> Operators {
    Operators::new(h, &cholesky_factorize(h, 1e-13).unwrap()).unwrap()
}

#[test]
fn single_determinant_overlaps() {
    let h = h2();
    let ops = tight(&h);
    let t = TrialState::new(&trial_from(2, &[(1, 1)], &[C::new(0.3, 0.4)])).unwrap();
    let ev = t.evaluate(&ops, &unit_columns(2, 1), &unit_columns(2, 1)).unwrap();
    assert!((ev.overlap - C::new(1.0, 0.0)).norm() < 1e-15);
    assert_eq!(t.overlap(&unit_columns(2, 2), &unit_columns(2, 1)), C::new(0.0, 0.0));
    assert!(t.evaluate(&ops, &unit_columns(2, 2), &unit_columns(2, 1)).is_err());
}

#[test]
fn multideterminant_overlap_and_local_energy_match_expansion() {
    let mut rng = crate::rng::stream(5, crate::rng::Domain::SubSeed, 0, 0);
    for seed in 0..6 {
        let (n, na, nb) = (4, 2, 1);
        let h = Hamiltonian::synthetic(n, na + nb, 1, seed).unwrap();
        let ops = tight(&h);
        let dets = [(0b0011, 0b0001), (0b0101, 0b0010), (0b1100, 0b0001)];
        let coeffs = [C::new(0.8, 0.1), C::new(-0.3, 0.2), C::new(0.1, -0.4)];
        let tw = trial_from(n, &dets, &coeffs);
        let t = TrialState::new(&tw).unwrap();
        let phi_a = random_orbitals(n, na, &mut rng);
        let phi_b = random_orbitals(n, nb, &mut rng);
        let walker = expand(n, &phi_a, &phi_b, na, nb);
        let trial_vec = CIVector {
            n_orb: n,
            basis: t.dets.clone(),
            amplitudes: t.coeffs.clone(),
            energy: None,
        };
        let ov = trial_vec.inner(&walker);
        let ev = t.evaluate(&ops, &phi_a, &phi_b).unwrap();
        assert!((ev.overlap - ov).norm() < 1e-10 * ov.norm().max(1.0));
        assert!((t.overlap(&phi_a, &phi_b) - ov).norm() < 1e-10);
        let e = trial_vec.inner(&apply_hamiltonian(&h, &walker).unwrap()) / ov;
        assert!((ev.local_energy - e).norm() < 1e-8, "{} vs {}", ev.local_energy, e);
    }
}

#[test]
fn hf_local_energy_is_hf_energy() {
    let h = h2();
    let ops = tight(&h);
    let t = TrialState::new(&trial_from(2, &[(1, 1)], &[C::new(1.0, 0.0)])).unwrap();
    let ev = t.evaluate(&ops, &unit_columns(2, 1), &unit_columns(2, 1)).unwrap();
    let hf = crate::exactdiag::diagonal_element(&h, &Determinant::aufbau(1, 1));
    assert!((ev.local_energy.re - hf).abs() < 1e-10);
    assert!((ev.local_energy.re - -1.1167593073964255).abs() < 1e-8);
}

#[test]
fn exact_trial_has_constant_local_energy() {
    let h = Hamiltonian::synthetic(4, 4, 0, 17).unwrap();
    let ops = tight(&h);
    let gs = fci_ground_state(&h).unwrap();
    let e0 = gs.energy.unwrap();
    let t = TrialState::new(&TrialWavefunction::from_civector(&gs, "fci")).unwrap();
    let mut rng = crate::rng::stream(9, crate::rng::Domain::SubSeed, 0, 0);
    for _ in 0..20 {
        let phi_a = random_orbitals(4, 2, &mut rng);
        let phi_b = random_orbitals(4, 2, &mut rng);
        let ev = t.evaluate(&ops, &phi_a, &phi_b).unwrap();
        assert!((ev.local_energy - e0).norm() < 1e-8, "{}", ev.local_energy - e0);
    }
    // Single determinants, including ones where some trial strings are singular.
    for d in ci_space(&h, 100).unwrap().determinants() {
        let ev = t.evaluate(&ops, &unit_columns(4, d.alpha), &unit_columns(4, d.beta)).unwrap();
        assert!((ev.local_energy - e0).norm() < 1e-8);
    }
    let (et, _) = t.expectations(&ops).unwrap();
    assert!((et - e0).abs() < 1e-8);
}

#[test]
fn one_body_local_energy_matches_dense_algebra() {
    let h = Hamiltonian::synthetic(4, 2, 0, 3).unwrap().without_two_body();
    let chol = cholesky_factorize(&h, 1e-8).unwrap();
    assert!(chol.is_empty());
    let ops = Operators::new(&h, &chol).unwrap();
    let t = TrialState::new(&trial_from(4, &[(1, 1)], &[C::new(1.0, 0.0)])).unwrap();
    let mut rng = crate::rng::stream(2, crate::rng::Domain::SubSeed, 0, 0);
    let phi_a = random_orbitals(4, 1, &mut rng);
    let phi_b = random_orbitals(4, 1, &mut rng);
    let ev = t.evaluate(&ops, &phi_a, &phi_b).unwrap();
    // One electron per spin: E_L = e_core + (h phi)_0 / phi_0 per spin.
    let one = |phi: &[C]| (0..4).map(|q| h.h[(0, q)] * phi[q]).sum::<C>() / phi[0];
    let expected = h.e_core + one(&phi_a) + one(&phi_b);
    assert!((ev.local_energy - expected).norm() < 1e-12);
    assert!(ev.mixed_fields.is_empty());
}

#[test]
fn force_bias_vanishes_on_the_trial_and_matches_finite_differences() {
    let h = Hamiltonian::synthetic(4, 4, 0, 6).unwrap();
    let chol = cholesky_factorize(&h, 1e-12).unwrap();
    let ops = Operators::new(&h, &chol).unwrap();
    let single = TrialState::new(&trial_from(4, &[(3, 3)], &[C::new(1.0, 0.0)])).unwrap();
    let (_, vbar) = single.expectations(&ops).unwrap();
    let prop = Propagator::new(&ops, vbar, 0.01, 0.0).unwrap();
    let w = Walker::new(&single, &ops, unit_columns(4, 3), unit_columns(4, 3)).unwrap();
    assert!(force_bias(&prop, &w.mixed_fields, 1.0).iter().all(|f| f.norm() < 1e-14));

    let tw = trial_from(4, &[(3, 3), (5, 5), (3, 6)], &[C::new(0.9, 0.0), C::new(0.3, 0.1), C::new(-0.2, 0.2)]);
    let t = TrialState::new(&tw).unwrap();
    let mut rng = crate::rng::stream(1, crate::rng::Domain::SubSeed, 0, 0);
    let phi_a = random_orbitals(4, 2, &mut rng);
    let phi_b = random_orbitals(4, 2, &mut rng);
    let ev = t.evaluate(&ops, &phi_a, &phi_b).unwrap();
    let eps = 1e-5;
    for (g, l) in ops.chol.iter().enumerate() {
        // d/dt log <T| exp(t v_g) |phi> at t = 0, by central differences.
        let shifted = |t_: f64| {
            let a: Vec<C> = l.iter().map(|&x| C::new(t_ * x, 0.0)).collect();
            let mut pa = phi_a.clone();
            let mut pb = phi_b.clone();
            propagator::exp_apply(&a, 4, &mut pa, 2);
            propagator::exp_apply(&a, 4, &mut pb, 2);
            t.overlap(&pa, &pb).ln()
        };
        let fd = (shifted(eps) - shifted(-eps)) / (2.0 * eps);
        let rel = (fd - ev.mixed_fields[g]).norm() / ev.mixed_fields[g].norm().max(1e-3);
        assert!(rel < 1e-6, "field {g}: {fd} vs {}", ev.mixed_fields[g]);
    }
}

#[test]
fn propagator_tends_to_identity() {
    let h = Hamiltonian::synthetic(4, 4, 0, 2).unwrap();
    let chol = cholesky_factorize(&h, 1e-8).unwrap();
    let ops = Operators::new(&h, &chol).unwrap();
    let mut rng = crate::rng::stream(3, crate::rng::Domain::SubSeed, 0, 0);
    let phi = random_orbitals(4, 2, &mut rng);
    let x: Vec<C> = (0..ops.n_fields()).map(|_| C::new(rng.random_range(-1.0..1.0), 0.0)).collect();
    let zero = vec![C::new(0.0, 0.0); ops.n_fields()];
    let change = |dt: f64, field: &[C]| {
        let prop = Propagator::new(&ops, vec![0.0; ops.n_fields()], dt, 0.0).unwrap();
        let mut p = phi.clone();
        prop.apply(field, &mut p, 2);
        p.iter().zip(&phi).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt()
    };
    let dts = [0.02, 0.01, 0.005, 0.0025];
    let c0: Vec<f64> = dts.iter().map(|&dt| change(dt, &zero) / dt).collect();
    let cx: Vec<f64> = dts.iter().map(|&dt| change(dt, &x) / dt.sqrt()).collect();
    for w in c0.windows(2).chain(cx.windows(2)) {
        assert!((w[1] / w[0] - 1.0).abs() < 0.1, "{c0:?} {cx:?}");
    }
    assert!(Propagator::new(&ops, vec![0.0; ops.n_fields()], 0.0, 0.0).is_err());
}

#[test]
fn pair_branching_conserves_weight() {
    let h = h2();
    let ops = tight(&h);
    let t = TrialState::new(&trial_from(2, &[(1, 1)], &[C::new(1.0, 0.0)])).unwrap();
    let base = Walker::new(&t, &ops, unit_columns(2, 1), unit_columns(2, 1)).unwrap();
    for seed in 0..50u64 {
        let mut rng = crate::rng::stream(seed, crate::rng::Domain::SubSeed, 0, 0);
        let mut walkers: Vec<Walker> = (0..37)
            .map(|i| {
                let mut w = base.clone();
                w.weight = if i % 7 == 0 { 0.0 } else { rng.random_range(0.0..4.0f64).powi(3) };
                w
            })
            .collect();
        let before: f64 = walkers.iter().map(|w| w.weight).sum();
        pair_branch(&mut walkers, &mut rng);
        let after: f64 = walkers.iter().map(|w| w.weight).sum();
        assert!((before - after).abs() <= 1e-12 * before);
        assert!(walkers.iter().all(|w| w.weight >= 0.0));
        assert!(walkers.iter().all(|w| w.weight > 0.0), "zero-weight walkers are replaced");
    }
}

fn short_config(seed: u64) -> AfqmcConfig {
    AfqmcConfig {
        blocks: 30,
        steps_per_block: 10,
        n_walkers: 24,
        dt: 0.01,
        seed,
        n_equilibration: 10,
        cholesky_threshold: 1e-8,
        ..AfqmcConfig::default()
    }
}

#[test]
fn free_fermion_limit() {
    let h = Hamiltonian::synthetic(4, 2, 0, 12).unwrap().without_two_body();
    let t = trial_from(4, &[(1, 1)], &[C::new(1.0, 0.0)]);
    let eig = nalgebra::SymmetricEigen::new(h.h.clone());
    let exact = h.e_core + 2.0 * eig.eigenvalues.min();
    let cfg = AfqmcConfig {
        blocks: 400,
        n_equilibration: 300,
        ..short_config(1)
    };
    let mut weights_ok = true;
    let trace = run_afqmc_observed(&h, &t, &cfg, |r| {
        if r.block >= 300 {
            weights_ok &= r.walkers.iter().all(|w| (w.weight - 1.0).abs() < 1e-3);
        }
    })
    .unwrap();
    assert!((trace.mean - exact).abs() < 1e-8, "{} vs {exact}", trace.mean);
    assert!(weights_ok);
}

#[test]
fn determinism_and_seed_dependence() {
    let h = h2();
    let t = trial_from(2, &[(1, 1)], &[C::new(1.0, 0.0)]);
    let a = run_afqmc(&h, &t, &short_config(3)).unwrap();
    let b = run_afqmc(&h, &t, &short_config(3)).unwrap();
    let c = run_afqmc(&h, &t, &short_config(4)).unwrap();
    assert_eq!(a, b);
    assert_ne!(a.block_energies, c.block_energies);
}

#[test]
fn weights_stay_non_negative() {
    let h = Hamiltonian::synthetic(4, 4, 0, 5).unwrap();
    let t = trial_from(4, &[(3, 3)], &[C::new(1.0, 0.0)]);
    let mut ok = true;
    run_afqmc_observed(&h, &t, &short_config(2), |r| {
        ok &= r.walkers.iter().all(|w| w.weight >= 0.0 && w.weight.is_finite());
    })
    .unwrap();
    assert!(ok);
}

#[test]
fn trial_scaling_invariance() {
    let h = Hamiltonian::synthetic(4, 4, 0, 8).unwrap();
    let gs = fci_ground_state(&h).unwrap();
    let mut tw = TrialWavefunction::from_civector(&gs, "fci");
    tw.dets.truncate(5);
    tw.coeffs.truncate(5);
    let cfg = short_config(6);
    let reference = run_afqmc(&h, &tw, &cfg).unwrap();
    for lambda in [C::new(4.0, 0.0), C::new(0.0, -0.5), C::new(-8.0, 0.0)] {
        let mut scaled = tw.clone();
        scaled.coeffs.iter_mut().for_each(|c| *c *= lambda);
        assert_eq!(run_afqmc(&h, &scaled, &cfg).unwrap().block_energies, reference.block_energies);
    }
    let mut scaled = tw.clone();
    scaled.coeffs.iter_mut().for_each(|c| *c *= C::new(0.37, -1.91));
    let other = run_afqmc(&h, &scaled, &cfg).unwrap();
    for (a, b) in other.block_energies.iter().zip(&reference.block_energies) {
        assert!((a - b).abs() < 1e-10);
    }
}

#[test]
fn config_validation() {
    let h = h2();
    let t = trial_from(2, &[(1, 1)], &[C::new(1.0, 0.0)]);
    let mut cfg = short_config(1);
    cfg.n_equilibration = 30;
    assert!(matches!(run_afqmc(&h, &t, &cfg), Err(Error::Input(_))));
    let bad = trial_from(2, &[(3, 0)], &[C::new(1.0, 0.0)]);
    assert!(matches!(run_afqmc(&h, &bad, &short_config(1)), Err(Error::Dimension(_))));
}
