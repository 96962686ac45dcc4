use std::collections::HashMap;

use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;

use super::*;
use crate::hamio::{extract_active_space, parse_fcidump, ActiveSpaceSpec};

/// Fock-space state keyed by mode occupation; mode `p` is alpha orbital `p`,
/// mode `n + p` is beta orbital `p`, matching the determinant ordering.
type Fock = HashMap<u64, f64>;

fn ann(m: usize, s: u64) -> Option<(u64, f64)> {
    if s >> m & 1 == 0 {
        return None;
    }
    let sign = if (s & ((1u64 << m) - 1)).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
    Some((s ^ (1 << m), sign))
}

fn cre(m: usize, s: u64) -> Option<(u64, f64)> {
    if s >> m & 1 == 1 {
        return None;
    }
    let sign = if (s & ((1u64 << m) - 1)).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
    Some((s | (1 << m), sign))
}

/// Applies the operator string `ops` (rightmost acts first); `true` = create.
fn apply_ops(ops: &[(bool, usize)], s: u64) -> Option<(u64, f64)> {
    let mut st = s;
    let mut sign = 1.0;
    for &(c, m) in ops.iter().rev() {
        let (n, sg) = if c { cre(m, st)? } else { ann(m, st)? };
        st = n;
        sign *= sg;
    }
    Some((st, sign))
}

fn brute_force_apply(h: &Hamiltonian, psi: &Fock) -> Fock {
    let n = h.n_orb;
    let mut out: Fock = HashMap::new();
    for (&s, &c) in psi {
        *out.entry(s).or_default() += h.e_core * c;
        for sigma in 0..2 {
            for p in 0..n {
                for q in 0..n {
                    if let Some((t, sg)) = apply_ops(&[(true, p + sigma * n), (false, q + sigma * n)], s) {
                        *out.entry(t).or_default() += h.h[(p, q)] * sg * c;
                    }
                }
            }
        }
        for sigma in 0..2 {
            for tau in 0..2 {
                for p in 0..n {
                    for q in 0..n {
                        for r in 0..n {
                            for t_ in 0..n {
                                let v = h.eri(p, q, r, t_);
                                if v == 0.0 {
                                    continue;
                                }
                                let ops = [
                                    (true, p + sigma * n),
                                    (true, r + tau * n),
                                    (false, t_ + tau * n),
                                    (false, q + sigma * n),
                                ];
                                if let Some((t, sg)) = apply_ops(&ops, s) {
                                    *out.entry(t).or_default() += 0.5 * v * sg * c;
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    out
}

fn fock_key(d: &Determinant, n: usize) -> u64 {
    d.alpha | d.beta << n
}

fn brute_force_matrix(h: &Hamiltonian, space: &CiSpace) -> DMatrix<f64> {
    let dim = space.dim();
    let mut m = DMatrix::zeros(dim, dim);
    for j in 0..dim {
        let mut psi = HashMap::new();
        psi.insert(fock_key(&space.det(j), h.n_orb), 1.0);
        let out = brute_force_apply(h, &psi);
        for i in 0..dim {
            m[(i, j)] = out.get(&fock_key(&space.det(i), h.n_orb)).copied().unwrap_or(0.0);
        }
    }
    m
}

fn h2() -> Hamiltonian {
    parse_fcidump(include_str!("../../data/h2_sto3g.fcidump")).unwrap()
}

fn h4() -> Hamiltonian {
    parse_fcidump(include_str!("../../data/h4_chain_sto3g.fcidump")).unwrap()
}

fn random_vector(space: &CiSpace, n_orb: usize, seed: u64) -> CIVector {
    use rand::Rng;
    let mut rng = crate::rng::stream(seed, crate::rng::Domain::SubSeed, 99, 0);
    CIVector {
        n_orb,
        basis: space.determinants().collect(),
        amplitudes: (0..space.dim())
            .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect(),
        energy: None,
    }
}

#[test]
fn slater_condon_matches_second_quantization() {
    for (n, na, nb, seed) in [(3, 2, 1, 1), (4, 2, 2, 2), (4, 3, 1, 3), (5, 2, 2, 4)] {
        let h = Hamiltonian::synthetic(n, na + nb, na as i64 - nb as i64, seed).unwrap();
        let space = ci_space(&h, 1_000_000).unwrap();
        let sc = hamiltonian_matrix(&h, &space);
        let bf = brute_force_matrix(&h, &space);
        let err = (sc - bf).abs().max();
        assert!(err < 1e-12, "({n},{na},{nb}) max error {err:e}");
    }
}

#[test]
fn one_orbital_two_electrons() {
    let text = "&FCI NORB=1,NELEC=2,MS2=0,\n&END\n0.5 1 1 1 1\n-1.0 1 1 0 0\n";
    let v = fci_ground_state(&parse_fcidump(text).unwrap()).unwrap();
    assert!((v.energy.unwrap() + 1.5).abs() < 1e-14);
    assert_eq!(v.amplitudes, vec![Complex64::new(1.0, 0.0)]);
}

#[test]
fn h2_matches_reference_fci() {
    let v = fci_ground_state(&h2()).unwrap();
    assert!((v.energy.unwrap() - -1.1372838344885023).abs() < 1e-8);
    assert_eq!(v.basis.len(), 4);
    assert!((v.norm_sqr() - 1.0).abs() < NORM_TOL);
    assert!(v.amplitudes[0].re > 0.9 && v.amplitudes[0].im == 0.0);
}

#[test]
fn h4_matches_reference_fci_and_casci() {
    let h = h4();
    let v = fci_ground_state(&h).unwrap();
    assert!((v.energy.unwrap() - -2.1663874486347625).abs() < 1e-8);

    let spec = ActiveSpaceSpec {
        n_active_orb: 2,
        n_active_elec: 2,
        frozen_orbitals: vec![0],
        active_orbitals: None,
    };
    let cas = fci_ground_state(&extract_active_space(&h, &spec).unwrap()).unwrap();
    assert!((cas.energy.unwrap() - -2.122499896888444).abs() < 1e-8);
}

#[test]
fn frozen_core_matches_brute_force_projection() {
    // CASCI by projecting the full Hamiltonian onto determinants with orbital 0
    // doubly occupied and orbitals 3.. empty.
    let h = Hamiltonian::synthetic(4, 4, 0, 21).unwrap();
    let space = ci_space(&h, 1000).unwrap();
    let full = hamiltonian_matrix(&h, &space);
    let keep: Vec<usize> = (0..space.dim())
        .filter(|&i| {
            let d = space.det(i);
            d.alpha & 1 == 1 && d.beta & 1 == 1 && d.alpha & 0b1000 == 0 && d.beta & 0b1000 == 0
        })
        .collect();
    let sub = DMatrix::from_fn(keep.len(), keep.len(), |a, b| full[(keep[a], keep[b])]);
    let projected = SymmetricEigen::new(sub).eigenvalues.min();
    let spec = ActiveSpaceSpec {
        n_active_orb: 2,
        n_active_elec: 2,
        frozen_orbitals: vec![0],
        active_orbitals: None,
    };
    let reduced = fci_ground_state(&extract_active_space(&h, &spec).unwrap()).unwrap();
    assert!((reduced.energy.unwrap() - projected).abs() < 1e-10);
}

#[test]
fn hf_energy_invariant_under_freezing() {
    for seed in 0..5 {
        let h = Hamiltonian::synthetic(5, 6, 0, seed).unwrap();
        let hf = diagonal_element(&h, &Determinant::aufbau(3, 3));
        for frozen in [vec![0], vec![0, 1], vec![1, 0]] {
            let nf = frozen.len();
            let spec = ActiveSpaceSpec {
                n_active_orb: 5 - nf,
                n_active_elec: 6 - 2 * nf,
                frozen_orbitals: frozen,
                active_orbitals: None,
            };
            let red = extract_active_space(&h, &spec).unwrap();
            let e = diagonal_element(&red, &Determinant::aufbau(3 - nf, 3 - nf));
            assert!((e - hf).abs() < 1e-10, "seed {seed}: {e} vs {hf}");
        }
    }
}

#[test]
fn eigen_residual_and_variational_bound() {
    let h = Hamiltonian::synthetic(6, 6, 0, 8).unwrap();
    let v = fci_ground_state(&h).unwrap();
    let e = v.energy.unwrap();
    let hv = apply_hamiltonian(&h, &v).unwrap();
    let res: f64 = hv
        .amplitudes
        .iter()
        .zip(&v.amplitudes)
        .map(|(a, b)| (a - b * e).norm_sqr())
        .sum::<f64>()
        .sqrt();
    assert!(res < 1e-8, "residual {res:e}");
    assert!(e <= diagonal_element(&h, &Determinant::aufbau(3, 3)));
}

#[test]
fn davidson_agrees_with_dense() {
    let h = Hamiltonian::synthetic(6, 6, 0, 13).unwrap();
    let dense = fci_ground_state(&h).unwrap();
    let opts = SolverOptions {
        dense_limit: 10,
        ..SolverOptions::default()
    };
    let dav = fci_ground_state_with(&h, &opts).unwrap();
    assert!((dense.energy.unwrap() - dav.energy.unwrap()).abs() < 1e-10);
    let ov = dense.inner(&dav).norm();
    assert!((ov - 1.0).abs() < 1e-9);
    let hv = apply_hamiltonian(&h, &dav).unwrap();
    let e = dav.energy.unwrap();
    let res: f64 = hv.amplitudes.iter().zip(&dav.amplitudes).map(|(a, b)| (a - b * e).norm_sqr()).sum::<f64>().sqrt();
    assert!(res < 1e-8);
}

#[test]
fn capacity_cap_is_enforced() {
    let h = Hamiltonian::synthetic(6, 6, 0, 13).unwrap();
    let opts = SolverOptions {
        max_dim: 100,
        ..SolverOptions::default()
    };
    assert!(matches!(fci_ground_state_with(&h, &opts), Err(Error::Capacity(_))));
}

#[test]
fn hand_evaluated_double_excitation() {
    // Two orbitals, HF = |0a 0b>, doubly excited = |1a 1b>: the coupling is (10|10).
    let h = h2();
    let hf = CIVector {
        n_orb: 2,
        basis: vec![Determinant::aufbau(1, 1)],
        amplitudes: vec![Complex64::new(1.0, 0.0)],
        energy: None,
    };
    let out = apply_hamiltonian(&h, &hf).unwrap();
    let idx = out.basis.iter().position(|d| *d == Determinant::new(0b10, 0b10)).unwrap();
    assert!((out.amplitudes[idx].re - h.eri(1, 0, 1, 0)).abs() < 1e-15);
    let e_hf = out.amplitudes[0].re;
    let by_hand = 2.0 * h.h[(0, 0)] + h.eri(0, 0, 0, 0) + h.e_core;
    assert!((e_hf - by_hand).abs() < 1e-14);
}

#[test]
fn zero_vector_and_basis_mismatch() {
    let h = h2();
    let zero = CIVector {
        n_orb: 2,
        basis: vec![Determinant::aufbau(1, 1), Determinant::new(0b10, 0b01)],
        amplitudes: vec![Complex64::new(0.0, 0.0); 2],
        energy: None,
    };
    let out = apply_hamiltonian(&h, &zero).unwrap();
    assert!(out.amplitudes.iter().all(|c| c.norm() == 0.0));
    let bad = CIVector {
        n_orb: 2,
        basis: vec![Determinant::aufbau(1, 1), Determinant::new(0b11, 0b00)],
        amplitudes: vec![Complex64::new(1.0, 0.0); 2],
        energy: None,
    };
    assert!(matches!(apply_hamiltonian(&h, &bad), Err(Error::Dimension(_))));
}

#[test]
fn text_round_trip() {
    let v = fci_ground_state(&h2()).unwrap();
    let text = v.to_text(&["config_hash=abc seed=1".into()]);
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 4);
    assert!(text.lines().nth(2).unwrap().starts_with("1100 "));
    assert_eq!(CIVector::from_text(&text).unwrap(), v);
    assert!(CIVector::from_text("1100 1.0\n").is_err());
    assert!(CIVector::from_text("110 1.0 0.0\n").is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn hamiltonian_action_is_hermitian(seed in 0u64..1000, n in 2usize..5) {
        let h = Hamiltonian::synthetic(n, 2, 0, seed).unwrap();
        let space = ci_space(&h, 1000).unwrap();
        let u = random_vector(&space, n, seed);
        let v = random_vector(&space, n, seed + 7);
        let hv = apply_hamiltonian(&h, &v).unwrap();
        let hu = apply_hamiltonian(&h, &u).unwrap();
        let lhs = u.inner(&hv);
        let rhs = v.inner(&hu).conj();
        prop_assert!((lhs - rhs).norm() < 1e-10);
    }

    #[test]
    fn sector_is_preserved(seed in 0u64..1000, na in 0usize..4, nb in 0usize..4) {
        let h = Hamiltonian::synthetic(4, na + nb, na as i64 - nb as i64, seed).unwrap();
        let space = ci_space(&h, 1000).unwrap();
        let out = apply_hamiltonian(&h, &random_vector(&space, 4, seed)).unwrap();
        for d in &out.basis {
            prop_assert_eq!((d.n_alpha(), d.n_beta()), (na, nb));
        }
    }
}
