//! Frozen-core active spaces.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::Hamiltonian;
use crate::error::{Error, Result};

/// Frozen-core active space. Active orbitals default to the lowest
/// `n_active_orb` orbitals not in `frozen_orbitals`; orbitals that are neither
/// frozen nor active are discarded.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActiveSpaceSpec {
    pub n_active_orb: usize,
    pub n_active_elec: usize,
    #[serde(default)]
    pub frozen_orbitals: Vec<usize>,
    /// Explicit active orbital indices, in the order they appear in the
    /// reduced Hamiltonian.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub active_orbitals: Option<Vec<usize>>,
}

impl ActiveSpaceSpec {
    /// The whole orbital space with nothing frozen.
    pub fn full(h: &Hamiltonian) -> Self {
        ActiveSpaceSpec {
            n_active_orb: h.n_orb,
            n_active_elec: h.n_elec,
            frozen_orbitals: Vec::new(),
            active_orbitals: None,
        }
    }

    /// Validates this active space against `h` and returns the active orbital indices.
    pub fn resolve(&self, h: &Hamiltonian) -> Result<Vec<usize>> {
        let n = h.n_orb;
        let mut seen = vec![false; n];
        for &f in &self.frozen_orbitals {
            if f >= n {
                return Err(Error::ActiveSpace(format!("frozen orbital {f} outside 0..{n}")));
            }
            if std::mem::replace(&mut seen[f], true) {
                return Err(Error::ActiveSpace(format!("frozen orbital {f} listed twice")));
            }
        }
        let active: Vec<usize> = match &self.active_orbitals {
            Some(list) => {
                if list.len() != self.n_active_orb {
                    return Err(Error::ActiveSpace(format!(
                        "{} active orbitals listed but n_active_orb = {}",
                        list.len(),
                        self.n_active_orb
                    )));
                }
                let mut used = vec![false; n];
                for &a in list {
                    if a >= n {
                        return Err(Error::ActiveSpace(format!("active orbital {a} outside 0..{n}")));
                    }
                    if seen[a] {
                        return Err(Error::ActiveSpace(format!(
                            "orbital {a} is both frozen and active"
                        )));
                    }
                    if std::mem::replace(&mut used[a], true) {
                        return Err(Error::ActiveSpace(format!("active orbital {a} listed twice")));
                    }
                }
                list.clone()
            }
            None => {
                let free: Vec<usize> = (0..n).filter(|&p| !seen[p]).collect();
                if free.len() < self.n_active_orb {
                    return Err(Error::ActiveSpace(format!(
                        "{} active orbitals requested but only {} are not frozen",
                        self.n_active_orb,
                        free.len()
                    )));
                }
                free[..self.n_active_orb].to_vec()
            }
        };
        let frozen_elec = 2 * self.frozen_orbitals.len();
        if frozen_elec > h.n_elec || self.n_active_elec != h.n_elec - frozen_elec {
            return Err(Error::ActiveSpace(format!(
                "n_active_elec = {} but {} electrons minus {} frozen leaves {}",
                self.n_active_elec,
                h.n_elec,
                frozen_elec,
                h.n_elec as i64 - frozen_elec as i64
            )));
        }
        let n_alpha = (self.n_active_elec as i64 + h.ms2) / 2;
        let n_beta = self.n_active_elec as i64 - n_alpha;
        if n_alpha < 0 || n_beta < 0 || n_alpha as usize > active.len() || n_beta as usize > active.len() {
            return Err(Error::ActiveSpace(format!(
                "{} active electrons with MS2 = {} do not fit in {} active orbitals",
                self.n_active_elec,
                h.ms2,
                active.len()
            )));
        }
        Ok(active)
    }
}

/// Folds the frozen orbitals into the core energy and a dressed one-body
/// operator, and restricts the integrals to the active orbitals.
pub fn extract_active_space(h: &Hamiltonian, spec: &ActiveSpaceSpec) -> Result<Hamiltonian> {
    let active = spec.resolve(h)?;
    let frozen = &spec.frozen_orbitals;
    if frozen.is_empty() && active.iter().copied().eq(0..h.n_orb) {
        return Ok(h.clone());
    }

    let mut e_core = h.e_core;
    for &f in frozen {
        e_core += 2.0 * h.h[(f, f)];
        for &g in frozen {
            e_core += 2.0 * h.eri(f, f, g, g) - h.eri(f, g, g, f);
        }
    }

    let na = active.len();
    let mut h1 = DMatrix::zeros(na, na);
    for (i, &p) in active.iter().enumerate() {
        for (j, &q) in active.iter().enumerate() {
            let mut x = h.h[(p, q)];
            for &f in frozen {
                x += 2.0 * h.eri(p, q, f, f) - h.eri(p, f, f, q);
            }
            h1[(i, j)] = x;
        }
    }
    // Exact symmetry is restored after the frozen sums.
    for i in 0..na {
        for j in 0..i {
            let avg = 0.5 * (h1[(i, j)] + h1[(j, i)]);
            h1[(i, j)] = avg;
            h1[(j, i)] = avg;
        }
    }

    let mut eri = vec![0.0; na.pow(4)];
    for (i, &p) in active.iter().enumerate() {
        for (j, &q) in active.iter().enumerate() {
            for (k, &r) in active.iter().enumerate() {
                for (l, &s) in active.iter().enumerate() {
                    eri[((i * na + j) * na + k) * na + l] = h.eri(p, q, r, s);
                }
            }
        }
    }
    Hamiltonian::new(na, spec.n_active_elec, h.ms2, e_core, h1, eri)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(n_orb: usize, n_elec: usize, frozen: &[usize]) -> ActiveSpaceSpec {
        ActiveSpaceSpec {
            n_active_orb: n_orb,
            n_active_elec: n_elec,
            frozen_orbitals: frozen.to_vec(),
            active_orbitals: None,
        }
    }

    #[test]
    fn empty_frozen_set_is_identity() {
        let h = Hamiltonian::synthetic(4, 4, 0, 5).unwrap();
        let out = extract_active_space(&h, &ActiveSpaceSpec::full(&h)).unwrap();
        assert_eq!(out, h);
    }

    #[test]
    fn restricted_integrals_and_counts() {
        let h = Hamiltonian::synthetic(5, 6, 0, 2).unwrap();
        let out = extract_active_space(&h, &spec(3, 4, &[0])).unwrap();
        assert_eq!((out.n_orb, out.n_elec, out.ms2), (3, 4, 0));
        assert_eq!(out.eri(0, 1, 2, 0), h.eri(1, 2, 3, 1));
    }

    #[test]
    fn overlapping_or_invalid_specs_are_rejected() {
        let h = Hamiltonian::synthetic(4, 4, 0, 5).unwrap();
        let mut s = spec(2, 2, &[0]);
        s.active_orbitals = Some(vec![0, 1]);
        assert!(matches!(extract_active_space(&h, &s), Err(Error::ActiveSpace(_))));
        assert!(extract_active_space(&h, &spec(2, 4, &[0])).is_err());
        assert!(extract_active_space(&h, &spec(4, 2, &[0])).is_err());
        assert!(extract_active_space(&h, &spec(2, 2, &[0, 0])).is_err());
        assert!(extract_active_space(&h, &spec(2, 2, &[7])).is_err());
        let mut s = spec(2, 2, &[0]);
        s.active_orbitals = Some(vec![3, 2]);
        let out = extract_active_space(&h, &s).unwrap();
        assert_eq!(out.h[(0, 0)], extract_active_space(&h, &{
            let mut t = spec(2, 2, &[0]);
            t.active_orbitals = Some(vec![2, 3]);
            t
        })
        .unwrap()
        .h[(1, 1)]);
    }
}
