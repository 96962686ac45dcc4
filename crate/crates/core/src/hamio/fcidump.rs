//! FCIDUMP reader and writer.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use nalgebra::DMatrix;

use super::Hamiltonian;
use crate::error::{Error, Result};

/// Maximum disagreement tolerated between repeated entries for one integral.
const DUPLICATE_TOL: f64 = 1e-10;

struct Header {
    norb: usize,
    nelec: usize,
    ms2: i64,
    /// Index of the first body line.
    body_start: usize,
}

pub fn read_fcidump(path: impl AsRef<Path>) -> Result<Hamiltonian> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_fcidump(&text)
}

/// Parses an FCIDUMP document. Indices are 1-based; `0 0 0 0` carries the core
/// energy, `i j 0 0` the one-electron integrals and `i 0 0 0` (orbital
/// energies) is ignored. Each entry populates all of its symmetry images.
pub fn parse_fcidump(text: &str) -> Result<Hamiltonian> {
    let lines: Vec<&str> = text.lines().collect();
    let header = parse_header(&lines)?;
    let n = header.norb;

    let mut e_core: Option<(f64, usize)> = None;
    let mut one: HashMap<(usize, usize), (f64, usize)> = HashMap::new();
    let mut two: HashMap<[usize; 4], (f64, usize)> = HashMap::new();

    for (idx, raw) in lines.iter().enumerate().skip(header.body_start) {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('!') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 5 {
            return Err(Error::Parse {
                line: line_no,
                msg: format!("expected `value i j k l`, found {} fields", fields.len()),
            });
        }
        let value = parse_real(fields[0]).ok_or_else(|| Error::Parse {
            line: line_no,
            msg: format!("invalid number `{}`", fields[0]),
        })?;
        let mut ix = [0usize; 4];
        for (slot, tok) in ix.iter_mut().zip(&fields[1..]) {
            let v: i64 = tok.parse().map_err(|_| Error::Parse {
                line: line_no,
                msg: format!("invalid index `{tok}`"),
            })?;
            if v < 0 || v as usize > n {
                return Err(Error::Parse {
                    line: line_no,
                    msg: format!("index {v} outside [0, {n}]"),
                });
            }
            *slot = v as usize;
        }
        let [i, j, k, l] = ix;
        let conflict = |prev: f64, prev_line: usize| -> Result<()> {
            if (prev - value).abs() > DUPLICATE_TOL {
                Err(Error::Consistency(format!(
                    "line {line_no} gives {value:e} for an element already set to {prev:e} on line {prev_line}"
                )))
            } else {
                Ok(())
            }
        };
        match (i, j, k, l) {
            (0, 0, 0, 0) => {
                if let Some((prev, at)) = e_core {
                    conflict(prev, at)?;
                }
                e_core = Some((value, line_no));
            }
            (_, 0, 0, 0) => {}
            (i, j, 0, 0) if i > 0 && j > 0 => {
                let key = (i.max(j) - 1, i.min(j) - 1);
                if let Some(&(prev, at)) = one.get(&key) {
                    conflict(prev, at)?;
                }
                one.insert(key, (value, line_no));
            }
            (i, j, k, l) if i > 0 && j > 0 && k > 0 && l > 0 => {
                let key = canonical_quad(i - 1, j - 1, k - 1, l - 1);
                if let Some(&(prev, at)) = two.get(&key) {
                    conflict(prev, at)?;
                }
                two.insert(key, (value, line_no));
            }
            _ => {
                return Err(Error::Parse {
                    line: line_no,
                    msg: format!("unsupported index pattern {i} {j} {k} {l}"),
                })
            }
        }
    }

    let mut h = DMatrix::zeros(n, n);
    for (&(p, q), &(v, _)) in &one {
        h[(p, q)] = v;
        h[(q, p)] = v;
    }
    let mut eri = vec![0.0; n.pow(4)];
    for (&[p, q, r, s], &(v, _)) in &two {
        for [a, b, c, d] in symmetry_images(p, q, r, s) {
            eri[((a * n + b) * n + c) * n + d] = v;
        }
    }
    Hamiltonian::new(n, header.nelec, header.ms2, e_core.map_or(0.0, |x| x.0), h, eri)
}

/// Serializes with full round-trip precision; only the canonical member of
/// each symmetry class is written, and zeros are skipped.
pub fn write_fcidump(ham: &Hamiltonian) -> String {
    let n = ham.n_orb;
    let mut out = String::new();
    let _ = writeln!(out, "&FCI NORB={},NELEC={},MS2={},", n, ham.n_elec, ham.ms2);
    let _ = writeln!(out, "  ORBSYM={}", "1,".repeat(n));
    let _ = writeln!(out, "  ISYM=1,");
    let _ = writeln!(out, "&END");
    for p in 0..n {
        for q in 0..=p {
            for r in 0..n {
                for s in 0..=r {
                    if p * (p + 1) / 2 + q < r * (r + 1) / 2 + s {
                        continue;
                    }
                    let v = ham.eri(p, q, r, s);
                    if v != 0.0 {
                        let _ = writeln!(out, "{v:.17e} {} {} {} {}", p + 1, q + 1, r + 1, s + 1);
                    }
                }
            }
        }
    }
    for p in 0..n {
        for q in 0..=p {
            let v = ham.h[(p, q)];
            if v != 0.0 {
                let _ = writeln!(out, "{v:.17e} {} {} 0 0", p + 1, q + 1);
            }
        }
    }
    let _ = writeln!(out, "{:.17e} 0 0 0 0", ham.e_core);
    out
}

fn parse_real(tok: &str) -> Option<f64> {
    tok.replace(['D', 'd'], "E").parse().ok()
}

fn canonical_quad(p: usize, q: usize, r: usize, s: usize) -> [usize; 4] {
    let (p, q) = (p.max(q), p.min(q));
    let (r, s) = (r.max(s), r.min(s));
    if (p, q) >= (r, s) {
        [p, q, r, s]
    } else {
        [r, s, p, q]
    }
}

fn symmetry_images(p: usize, q: usize, r: usize, s: usize) -> [[usize; 4]; 8] {
    [
        [p, q, r, s],
        [q, p, r, s],
        [p, q, s, r],
        [q, p, s, r],
        [r, s, p, q],
        [s, r, p, q],
        [r, s, q, p],
        [s, r, q, p],
    ]
}

fn parse_header(lines: &[&str]) -> Result<Header> {
    let start = lines
        .iter()
        .position(|l| !l.trim().is_empty())
        .ok_or(Error::Parse { line: 1, msg: "empty FCIDUMP".into() })?;
    let first = lines[start].trim_start();
    if !first.to_ascii_uppercase().starts_with("&FCI") {
        return Err(Error::Parse {
            line: start + 1,
            msg: "missing `&FCI` namelist header".into(),
        });
    }

    // Gather (line number, text) for the namelist body up to its terminator.
    let mut pieces: Vec<(usize, String)> = Vec::new();
    let mut end = None;
    for (idx, raw) in lines.iter().enumerate().skip(start) {
        let mut text = raw.trim().to_string();
        if idx == start {
            text = text[4..].to_string();
        }
        let upper = text.to_ascii_uppercase();
        if let Some(pos) = upper.find("&END") {
            pieces.push((idx + 1, text[..pos].to_string()));
            end = Some(idx);
            break;
        }
        if let Some(stripped) = text.strip_suffix('/') {
            pieces.push((idx + 1, stripped.to_string()));
            end = Some(idx);
            break;
        }
        pieces.push((idx + 1, text));
    }
    let end = end.ok_or(Error::Parse {
        line: start + 1,
        msg: "namelist header is not terminated by `&END` or `/`".into(),
    })?;

    let mut values: HashMap<String, (usize, Vec<String>)> = HashMap::new();
    let mut current: Option<String> = None;
    for (line_no, text) in &pieces {
        let normalized = text.replace(" =", "=").replace("= ", "=");
        for tok in normalized.split(|c: char| c == ',' || c.is_whitespace()) {
            if tok.is_empty() {
                continue;
            }
            if let Some((key, val)) = tok.split_once('=') {
                let key = key.trim().to_ascii_uppercase();
                if key.is_empty() {
                    return Err(Error::Parse { line: *line_no, msg: format!("malformed token `{tok}`") });
                }
                let entry = values.entry(key.clone()).or_insert((*line_no, Vec::new()));
                if !val.is_empty() {
                    entry.1.push(val.to_string());
                }
                current = Some(key);
            } else if let Some(key) = &current {
                values.get_mut(key).expect("key registered").1.push(tok.to_string());
            } else {
                return Err(Error::Parse { line: *line_no, msg: format!("value `{tok}` without a key") });
            }
        }
    }

    let scalar = |key: &str, required: bool| -> Result<Option<i64>> {
        match values.get(key) {
            None if required => Err(Error::Parse {
                line: start + 1,
                msg: format!("header lacks {key}"),
            }),
            None => Ok(None),
            Some((line, vals)) => {
                let [v] = vals.as_slice() else {
                    return Err(Error::Parse { line: *line, msg: format!("{key} needs exactly one value") });
                };
                v.parse::<i64>().map(Some).map_err(|_| Error::Parse {
                    line: *line,
                    msg: format!("{key} value `{v}` is not an integer"),
                })
            }
        }
    };
    let norb = scalar("NORB", true)?.expect("required");
    let nelec = scalar("NELEC", true)?.expect("required");
    let ms2 = scalar("MS2", false)?.unwrap_or(0);
    if norb < 0 || nelec < 0 {
        return Err(Error::Parse {
            line: start + 1,
            msg: "NORB and NELEC must be non-negative".into(),
        });
    }
    Ok(Header {
        norb: norb as usize,
        nelec: nelec as usize,
        ms2,
        body_start: end + 1,
    })
}
