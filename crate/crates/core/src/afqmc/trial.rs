//! Trial-side evaluation: overlaps, local energies and mixed estimates of
//! the Cholesky one-body operators for multi-determinant trials.
//!
//! For a spin string with occupied rows `occ`, let `S = phi[occ, :]` and
//! `K = (M phi)[occ, :]` for a one-body matrix `M`. The coefficients of
//! `det(S + tK) = c0 + c1 t + c2 t^2 + ...` give `<D|phi>`, `<D|M|phi>` and the
//! normal-ordered two-body contraction; they stay finite when `S` is singular.

use std::collections::HashMap;

use num_complex::Complex64 as C;

use super::linalg::{det, real_times, select_rows, Lu};
use crate::cbt::TrialWavefunction;
use crate::error::{Error, Result};
use crate::exactdiag::Determinant;
use crate::hamio::{CholeskyFactors, Hamiltonian};

const ZERO: C = C::new(0.0, 0.0);
/// Below this LU pivot ratio the column-replacement expansion is used.
const SINGULAR_PIVOT_RATIO: f64 = 1e-6;

/// One-body data shared by every evaluation.
#[derive(Debug, Clone)]
pub struct Operators {
    pub n_orb: usize,
    pub e_core: f64,
    /// `h`, row-major.
    pub h1: Vec<f64>,
    /// Cholesky vectors, row-major.
    pub chol: Vec<Vec<f64>>,
}

impl Operators {
    pub fn new(h: &Hamiltonian, chol: &CholeskyFactors) -> Result<Self> {
        let n = h.n_orb;
        for l in &chol.vectors {
            if l.nrows() != n || l.ncols() != n {
                return Err(Error::Dimension(format!(
                    "Cholesky vector is {}x{}, Hamiltonian has {n} orbitals",
                    l.nrows(),
                    l.ncols()
                )));
            }
        }
        let row_major = |m: &nalgebra::DMatrix<f64>| (0..n * n).map(|i| m[(i / n, i % n)]).collect();
        Ok(Operators {
            n_orb: n,
            e_core: h.e_core,
            h1: row_major(&h.h),
            chol: chol.vectors.iter().map(row_major).collect(),
        })
    }

    pub fn n_fields(&self) -> usize {
        self.chol.len()
    }
}

/// The trial prepared for evaluation: coefficients canonicalized (divided by
/// the dominant one, then normalized) and spin strings deduplicated.
#[derive(Debug, Clone)]
pub struct TrialState {
    pub n_orb: usize,
    pub n_alpha: usize,
    pub n_beta: usize,
    pub dets: Vec<Determinant>,
    pub coeffs: Vec<C>,
    alpha: Vec<Vec<usize>>,
    beta: Vec<Vec<usize>>,
    /// `(alpha string, beta string, conj(c_k))`.
    terms: Vec<(usize, usize, C)>,
    dominant: usize,
}

/// Mixed estimates `<T|X|phi>` accumulated over the trial.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub overlap: C,
    /// `<T|H|phi> / <T|phi>`.
    pub local_energy: C,
    /// `<T|v_g|phi> / <T|phi>` with `v_g = sum_pq L^g_pq E_pq`.
    pub mixed_fields: Vec<C>,
}

/// Per-string `det(S + tK)` coefficients.
struct StringTerms {
    c0: C,
    c1_h: C,
    c1: Vec<C>,
    c2: Vec<C>,
}

impl TrialState {
    pub fn new(trial: &TrialWavefunction) -> Result<Self> {
        let n_orb = trial.n_orb;
        if trial.dets.is_empty() || trial.dets.len() != trial.coeffs.len() {
            return Err(Error::Dimension("trial needs matching, non-empty determinants and coefficients".into()));
        }
        let (n_alpha, n_beta) = (trial.dets[0].n_alpha(), trial.dets[0].n_beta());
        let limit = if n_orb >= 64 { u64::MAX } else { (1u64 << n_orb) - 1 };
        for d in &trial.dets {
            if d.n_alpha() != n_alpha || d.n_beta() != n_beta || d.alpha & !limit != 0 || d.beta & !limit != 0 {
                return Err(Error::Dimension(format!(
                    "trial determinant {d:?} is outside the ({n_alpha}, {n_beta}) sector of {n_orb} orbitals"
                )));
            }
        }
        let dominant = trial
            .coeffs
            .iter()
            .enumerate()
            .fold(0, |b, (i, c)| if c.norm() > trial.coeffs[b].norm() { i } else { b });
        let lead = trial.coeffs[dominant];
        if lead.norm() == 0.0 || !lead.is_finite() {
            return Err(Error::Input("trial coefficients are all zero or non-finite".into()));
        }
        let mut coeffs: Vec<C> = trial.coeffs.iter().map(|c| c / lead).collect();
        let norm = coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        coeffs.iter_mut().for_each(|c| *c /= norm);

        let mut alpha = Vec::new();
        let mut beta = Vec::new();
        let mut amap: HashMap<u64, usize> = HashMap::new();
        let mut bmap: HashMap<u64, usize> = HashMap::new();
        let mut terms = Vec::new();
        for (d, c) in trial.dets.iter().zip(&coeffs) {
            let ia = *amap.entry(d.alpha).or_insert_with(|| {
                alpha.push(occupied(d.alpha));
                alpha.len() - 1
            });
            let ib = *bmap.entry(d.beta).or_insert_with(|| {
                beta.push(occupied(d.beta));
                beta.len() - 1
            });
            terms.push((ia, ib, c.conj()));
        }
        Ok(TrialState {
            n_orb,
            n_alpha,
            n_beta,
            dets: trial.dets.clone(),
            coeffs,
            alpha,
            beta,
            terms,
            dominant,
        })
    }

    pub fn dominant_determinant(&self) -> Determinant {
        self.dets[self.dominant]
    }

    /// `<T|phi>` only.
    pub fn overlap(&self, phi_a: &[C], phi_b: &[C]) -> C {
        let n = self.n_orb;
        let ov = |strings: &[Vec<usize>], phi: &[C]| -> Vec<C> {
            let mut buf = vec![ZERO; strings.first().map_or(0, |s| s.len().pow(2))];
            strings
                .iter()
                .map(|occ| {
                    select_rows(phi, n, occ, &mut buf);
                    det(&buf, occ.len())
                })
                .collect()
        };
        let oa = ov(&self.alpha, phi_a);
        let ob = ov(&self.beta, phi_b);
        self.terms.iter().map(|&(ia, ib, w)| w * oa[ia] * ob[ib]).sum()
    }

    /// Overlap, local energy and mixed Cholesky-operator estimates.
    pub fn evaluate(&self, ops: &Operators, phi_a: &[C], phi_b: &[C]) -> Result<Evaluation> {
        let ta = string_terms(ops, &self.alpha, phi_a, self.n_alpha);
        let tb = string_terms(ops, &self.beta, phi_b, self.n_beta);
        let ng = ops.n_fields();
        let mut overlap = ZERO;
        let mut one = ZERO;
        let mut two = ZERO;
        let mut fields = vec![ZERO; ng];
        for &(ia, ib, w) in &self.terms {
            let (a, b) = (&ta[ia], &tb[ib]);
            overlap += w * a.c0 * b.c0;
            one += w * (a.c1_h * b.c0 + a.c0 * b.c1_h);
            let mut t2 = ZERO;
            for g in 0..ng {
                t2 += a.c2[g] * b.c0 + a.c1[g] * b.c1[g] + a.c0 * b.c2[g];
                fields[g] += w * (a.c1[g] * b.c0 + a.c0 * b.c1[g]);
            }
            two += w * t2;
        }
        if overlap.norm() == 0.0 || !overlap.is_finite() {
            return Err(Error::LocalEnergy(format!("trial overlap is {overlap}")));
        }
        let inv = overlap.inv();
        fields.iter_mut().for_each(|f| *f *= inv);
        Ok(Evaluation {
            overlap,
            local_energy: ops.e_core + (one + two) * inv,
            mixed_fields: fields,
        })
    }

    /// Variational energy `<T|H|T>` and one-body expectations `<T|v_g|T>`,
    /// each divided by `<T|T>`.
    pub fn expectations(&self, ops: &Operators) -> Result<(f64, Vec<f64>)> {
        let n = self.n_orb;
        let ng = ops.n_fields();
        let mut energy = ZERO;
        let mut fields = vec![ZERO; ng];
        let mut norm = 0.0;
        for (d, c) in self.dets.iter().zip(&self.coeffs) {
            let phi_a = unit_columns(n, d.alpha);
            let phi_b = unit_columns(n, d.beta);
            let ta = string_terms(ops, &self.alpha, &phi_a, self.n_alpha);
            let tb = string_terms(ops, &self.beta, &phi_b, self.n_beta);
            for &(ia, ib, w) in &self.terms {
                let (a, b) = (&ta[ia], &tb[ib]);
                let mut e = ops.e_core * a.c0 * b.c0 + a.c1_h * b.c0 + a.c0 * b.c1_h;
                for g in 0..ng {
                    e += a.c2[g] * b.c0 + a.c1[g] * b.c1[g] + a.c0 * b.c2[g];
                    fields[g] += c * w * (a.c1[g] * b.c0 + a.c0 * b.c1[g]);
                }
                energy += c * w * e;
            }
            norm += c.norm_sqr();
        }
        Ok((energy.re / norm, fields.iter().map(|f| f.re / norm).collect()))
    }
}

/// Orbital matrix whose columns are the unit vectors of the set bits.
pub fn unit_columns(n: usize, bits: u64) -> Vec<C> {
    let occ = occupied(bits);
    let mut phi = vec![ZERO; n * occ.len()];
    for (i, &p) in occ.iter().enumerate() {
        phi[p + n * i] = C::new(1.0, 0.0);
    }
    phi
}

fn occupied(bits: u64) -> Vec<usize> {
    (0..64).filter(|&p| bits >> p & 1 == 1).collect()
}

fn string_terms(ops: &Operators, strings: &[Vec<usize>], phi: &[C], k: usize) -> Vec<StringTerms> {
    let n = ops.n_orb;
    let ng = ops.n_fields();
    if k == 0 {
        return strings
            .iter()
            .map(|_| StringTerms {
                c0: C::new(1.0, 0.0),
                c1_h: ZERO,
                c1: vec![ZERO; ng],
                c2: vec![ZERO; ng],
            })
            .collect();
    }
    let mut h_phi = vec![ZERO; n * k];
    real_times(&ops.h1, n, phi, k, &mut h_phi);
    let mut l_phi = vec![ZERO; n * k * ng];
    for (g, l) in ops.chol.iter().enumerate() {
        real_times(l, n, phi, k, &mut l_phi[g * n * k..(g + 1) * n * k]);
    }
    let kk = k * k;
    let mut s = vec![ZERO; kk];
    let mut x = vec![ZERO; kk];
    strings
        .iter()
        .map(|occ| {
            select_rows(phi, n, occ, &mut s);
            let lu = Lu::new(&s, k);
            let regular = lu.pivot_ratio > SINGULAR_PIVOT_RATIO;
            let c0 = lu.det;
            let mut coeffs = |m_phi: &[C], need_c2: bool| -> (C, C) {
                select_rows(m_phi, n, occ, &mut x);
                if regular {
                    lu.solve_in_place(&mut x, k);
                    let tr: C = (0..k).map(|i| x[i + k * i]).sum();
                    if !need_c2 {
                        return (c0 * tr, ZERO);
                    }
                    let mut tr2 = ZERO;
                    for i in 0..k {
                        for j in 0..k {
                            tr2 += x[i + k * j] * x[j + k * i];
                        }
                    }
                    (c0 * tr, c0 * 0.5 * (tr * tr - tr2))
                } else {
                    replacement_expansion(&s, &x, k, need_c2)
                }
            };
            let (c1_h, _) = coeffs(&h_phi, false);
            let mut c1 = Vec::with_capacity(ng);
            let mut c2 = Vec::with_capacity(ng);
            for g in 0..ng {
                let (a, b) = coeffs(&l_phi[g * n * k..(g + 1) * n * k], true);
                c1.push(a);
                c2.push(b);
            }
            StringTerms { c0, c1_h, c1, c2 }
        })
        .collect()
}

/// First- and second-order coefficients of `det(S + tK)` as sums of
/// determinants with one or two columns of `S` replaced by those of `K`.
fn replacement_expansion(s: &[C], kmat: &[C], k: usize, need_c2: bool) -> (C, C) {
    let mut m = s.to_vec();
    let mut c1 = ZERO;
    let mut c2 = ZERO;
    for j in 0..k {
        m[k * j..k * (j + 1)].copy_from_slice(&kmat[k * j..k * (j + 1)]);
        c1 += det(&m, k);
        if need_c2 {
            for l in j + 1..k {
                m[k * l..k * (l + 1)].copy_from_slice(&kmat[k * l..k * (l + 1)]);
                c2 += det(&m, k);
                m[k * l..k * (l + 1)].copy_from_slice(&s[k * l..k * (l + 1)]);
            }
        }
        m[k * j..k * (j + 1)].copy_from_slice(&s[k * j..k * (j + 1)]);
    }
    (c1, c2)
}
