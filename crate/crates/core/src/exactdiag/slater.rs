//! Slater–Condon matrix elements in a fixed-sector CI space.

use super::determinant::{excitation_sign, occupied, CiSpace, Determinant};
use crate::hamio::Hamiltonian;

/// `<D|H|D>`, including the core energy.
pub fn diagonal_element(h: &Hamiltonian, det: &Determinant) -> f64 {
    let oa = occupied(det.alpha);
    let ob = occupied(det.beta);
    let mut e = h.e_core;
    for &i in oa.iter().chain(&ob) {
        e += h.h[(i, i)];
    }
    for occ in [&oa, &ob] {
        for (x, &i) in occ.iter().enumerate() {
            for &j in &occ[..x] {
                e += h.eri(i, i, j, j) - h.eri(i, j, j, i);
            }
        }
    }
    for &i in &oa {
        for &j in &ob {
            e += h.eri(i, i, j, j);
        }
    }
    e
}

/// Calls `f(j, H_ij)` for every determinant `j != i` connected to `i`, in a
/// fixed order.
pub(crate) fn for_each_connected(
    h: &Hamiltonian,
    space: &CiSpace,
    i: usize,
    mut f: impl FnMut(usize, f64),
) {
    let n = space.n_orb;
    let det = space.det(i);
    let nbs = space.n_beta_strings();
    let full = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
    let oa = occupied(det.alpha);
    let ob = occupied(det.beta);
    let va = occupied(!det.alpha & full);
    let vb = occupied(!det.beta & full);
    let ia = space.alpha_index(det.alpha);
    let ib = space.beta_index(det.beta);

    // Singles.
    for (same, other, virt, spin_is_alpha) in [(&oa, &ob, &va, true), (&ob, &oa, &vb, false)] {
        let s = if spin_is_alpha { det.alpha } else { det.beta };
        for &p in same {
            for &a in virt {
                let mut x = h.h[(a, p)];
                for &k in same {
                    x += h.eri(a, p, k, k) - h.eri(a, k, k, p);
                }
                for &k in other {
                    x += h.eri(a, p, k, k);
                }
                if x == 0.0 {
                    continue;
                }
                let sign = excitation_sign(s, p, a);
                let s2 = s ^ (1 << p) ^ (1 << a);
                let j = if spin_is_alpha {
                    space.alpha_index(s2) * nbs + ib
                } else {
                    ia * nbs + space.beta_index(s2)
                };
                f(j, sign * x);
            }
        }
    }

    // Same-spin doubles.
    for (occ, virt, spin_is_alpha) in [(&oa, &va, true), (&ob, &vb, false)] {
        let s = if spin_is_alpha { det.alpha } else { det.beta };
        for (x1, &p) in occ.iter().enumerate() {
            for &q in &occ[x1 + 1..] {
                for (y1, &a) in virt.iter().enumerate() {
                    for &b in &virt[y1 + 1..] {
                        let x = h.eri(a, p, b, q) - h.eri(a, q, b, p);
                        if x == 0.0 {
                            continue;
                        }
                        let s1 = s ^ (1 << p) ^ (1 << a);
                        let sign = excitation_sign(s, p, a) * excitation_sign(s1, q, b);
                        let s2 = s1 ^ (1 << q) ^ (1 << b);
                        let j = if spin_is_alpha {
                            space.alpha_index(s2) * nbs + ib
                        } else {
                            ia * nbs + space.beta_index(s2)
                        };
                        f(j, sign * x);
                    }
                }
            }
        }
    }

    // Opposite-spin doubles.
    for &p in &oa {
        for &a in &va {
            let sa = excitation_sign(det.alpha, p, a);
            let ja = space.alpha_index(det.alpha ^ (1 << p) ^ (1 << a)) * nbs;
            for &q in &ob {
                for &b in &vb {
                    let x = h.eri(a, p, b, q);
                    if x == 0.0 {
                        continue;
                    }
                    let sign = sa * excitation_sign(det.beta, q, b);
                    f(ja + space.beta_index(det.beta ^ (1 << q) ^ (1 << b)), sign * x);
                }
            }
        }
    }
}
