//! Small dense complex kernels on flat column-major buffers.
//!
//! Orbital matrices are `n x k` with entry `(p, i)` at `p + n * i`; square
//! real operators are `n x n` row-major.

use num_complex::Complex64 as C;

const ZERO: C = C::new(0.0, 0.0);

/// `out = a * x` with `a` real `n x n` row-major and `x` complex `n x k`.
pub(crate) fn real_times(a: &[f64], n: usize, x: &[C], k: usize, out: &mut [C]) {
    for i in 0..k {
        let col = &x[n * i..n * (i + 1)];
        for p in 0..n {
            let row = &a[p * n..(p + 1) * n];
            let mut acc = ZERO;
            for (q, &v) in row.iter().enumerate() {
                acc += col[q] * v;
            }
            out[p + n * i] = acc;
        }
    }
}

/// `out = a * x` with `a` complex `n x n` row-major.
pub(crate) fn complex_times(a: &[C], n: usize, x: &[C], k: usize, out: &mut [C]) {
    for i in 0..k {
        let col = &x[n * i..n * (i + 1)];
        for p in 0..n {
            let row = &a[p * n..(p + 1) * n];
            let mut acc = ZERO;
            for (q, v) in row.iter().enumerate() {
                acc += col[q] * v;
            }
            out[p + n * i] = acc;
        }
    }
}

/// Rows `occ` of an `n x k` matrix, as a `k x k` column-major matrix.
pub(crate) fn select_rows(x: &[C], n: usize, occ: &[usize], out: &mut [C]) {
    let k = occ.len();
    for j in 0..k {
        for (i, &p) in occ.iter().enumerate() {
            out[i + k * j] = x[p + n * j];
        }
    }
}

/// LU factorization with partial pivoting of a `k x k` column-major matrix.
pub(crate) struct Lu {
    k: usize,
    lu: Vec<C>,
    perm: Vec<usize>,
    pub det: C,
    /// `min |u_ii| / max |u_ii|`; 0 for an exactly singular matrix.
    pub pivot_ratio: f64,
}

impl Lu {
    pub(crate) fn new(m: &[C], k: usize) -> Lu {
        let mut lu = m.to_vec();
        let mut perm: Vec<usize> = (0..k).collect();
        let mut det = C::new(1.0, 0.0);
        let mut min_p = f64::INFINITY;
        let mut max_p: f64 = 0.0;
        for c in 0..k {
            let mut piv = c;
            let mut best = lu[c + k * c].norm_sqr();
            for r in c + 1..k {
                let v = lu[r + k * c].norm_sqr();
                if v > best {
                    best = v;
                    piv = r;
                }
            }
            if piv != c {
                for j in 0..k {
                    lu.swap(c + k * j, piv + k * j);
                }
                perm.swap(c, piv);
                det = -det;
            }
            let d = lu[c + k * c];
            let dn = d.norm();
            min_p = min_p.min(dn);
            max_p = max_p.max(dn);
            det *= d;
            if dn == 0.0 {
                continue;
            }
            let inv = d.inv();
            for r in c + 1..k {
                let f = lu[r + k * c] * inv;
                lu[r + k * c] = f;
                if f != ZERO {
                    for j in c + 1..k {
                        let u = lu[c + k * j];
                        lu[r + k * j] -= f * u;
                    }
                }
            }
        }
        let pivot_ratio = if k == 0 {
            1.0
        } else if max_p == 0.0 {
            0.0
        } else {
            min_p / max_p
        };
        Lu {
            k,
            lu,
            perm,
            det,
            pivot_ratio,
        }
    }

    /// Solves `S X = B` in place for a `k x m` column-major `b`.
    pub(crate) fn solve_in_place(&self, b: &mut [C], m: usize) {
        let k = self.k;
        let mut tmp = [ZERO; 32];
        let buf: &mut [C] = if k <= 32 { &mut tmp[..k] } else { &mut vec![ZERO; k][..] };
        for col in 0..m {
            let x = &mut b[k * col..k * (col + 1)];
            for i in 0..k {
                buf[i] = x[self.perm[i]];
            }
            for i in 0..k {
                let mut acc = buf[i];
                for j in 0..i {
                    acc -= self.lu[i + k * j] * buf[j];
                }
                buf[i] = acc;
            }
            for i in (0..k).rev() {
                let mut acc = buf[i];
                for j in i + 1..k {
                    acc -= self.lu[i + k * j] * buf[j];
                }
                buf[i] = acc / self.lu[i + k * i];
            }
            x.copy_from_slice(buf);
        }
    }
}

pub(crate) fn det(m: &[C], k: usize) -> C {
    match k {
        0 => C::new(1.0, 0.0),
        1 => m[0],
        2 => m[0] * m[3] - m[2] * m[1],
        _ => Lu::new(m, k).det,
    }
}

/// Modified Gram–Schmidt on the columns of an `n x k` matrix; returns
/// `det(R)`.
pub(crate) fn orthonormalize(x: &mut [C], n: usize, k: usize) -> C {
    let mut det_r = C::new(1.0, 0.0);
    for i in 0..k {
        for j in 0..i {
            let (prev, cur) = x.split_at_mut(n * i);
            let qj = &prev[n * j..n * (j + 1)];
            let ci = &mut cur[..n];
            let r: C = qj.iter().zip(ci.iter()).map(|(a, b)| a.conj() * b).sum();
            for (c, q) in ci.iter_mut().zip(qj) {
                *c -= r * q;
            }
        }
        let col = &mut x[n * i..n * (i + 1)];
        let norm = col.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        for c in col.iter_mut() {
            *c /= norm;
        }
        det_r *= norm;
    }
    det_r
}
