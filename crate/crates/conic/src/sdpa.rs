//! SDPA sparse format (`.dat-s`) writer and reader.
//!
//! SDPA states the constraint as `sum_k x_k F_k - F_0 >= 0`, so the constant
//! block is written with its sign flipped. Orthant blocks appear with a
//! negative size in the block structure line; second-order cones have no
//! representation and are rejected.

use std::fmt::Write as _;

use crate::error::ConicError;
use crate::problem::{Block, Cone, ConicProblem};

/// Upper bound on variable count and block dimension accepted by the reader.
pub const MAX_DIM: usize = 1 << 20;

/// Write `p` in SDPA sparse format.
///
/// Entries are emitted as `k block i j value` with 1-based `i <= j`, sorted
/// by matrix, block, row and column. Exact zeros are skipped. Floats use
/// the shortest representation that parses back to the same `f64`.
pub fn export(p: &ConicProblem) -> Result<String, ConicError> {
    p.validate()?;
    if let Some(b) = p.blocks.iter().find(|b| matches!(b.cone, Cone::Soc(_))) {
        return Err(ConicError::UnsupportedCone(b.label.clone()));
    }
    let mut out = String::new();
    let _ = writeln!(out, "\"{} variables, {} blocks", p.n_vars, p.blocks.len());
    let _ = writeln!(out, "{}", p.n_vars);
    let _ = writeln!(out, "{}", p.blocks.len());
    let sizes: Vec<String> = p
        .blocks
        .iter()
        .map(|b| match b.cone {
            Cone::Psd(n) => n.to_string(),
            Cone::Nonneg(n) => format!("-{n}"),
            Cone::Soc(_) => unreachable!(),
        })
        .collect();
    let _ = writeln!(out, "{}", sizes.join(" "));
    let c: Vec<String> = p.objective.iter().map(|v| format!("{v:e}")).collect();
    let _ = writeln!(out, "{}", c.join(" "));

    for (bi, b) in p.blocks.iter().enumerate() {
        for (&(r, col), &v) in &b.constant {
            if v != 0.0 {
                let _ = writeln!(out, "0 {} {} {} {:e}", bi + 1, r + 1, col + 1, -v);
            }
        }
    }
    for k in 0..p.n_vars {
        for (bi, b) in p.blocks.iter().enumerate() {
            let Some(m) = b.coeffs.get(&k) else { continue };
            for (&(r, col), &v) in m {
                if v != 0.0 {
                    let _ = writeln!(out, "{} {} {} {} {:e}", k + 1, bi + 1, r + 1, col + 1, v);
                }
            }
        }
    }
    Ok(out)
}

struct Tokens<'a> {
    items: Vec<(usize, &'a str)>,
    pos: usize,
}

impl<'a> Tokens<'a> {
    fn next(&mut self, what: &str) -> Result<(usize, &'a str), ConicError> {
        let line = self.items.last().map_or(1, |t| t.0);
        let t = self.items.get(self.pos).copied().ok_or(ConicError::Parse {
            line,
            msg: format!("unexpected end of input, expected {what}"),
        })?;
        self.pos += 1;
        Ok(t)
    }

    fn int(&mut self, what: &str) -> Result<(usize, i64), ConicError> {
        let (line, s) = self.next(what)?;
        if let Ok(v) = s.parse::<i64>() {
            return Ok((line, v));
        }
        match s.parse::<f64>() {
            Ok(f) if f.fract() == 0.0 && f.abs() < 1e15 => Ok((line, f as i64)),
            _ => Err(ConicError::Parse {
                line,
                msg: format!("expected integer {what}, found {s:?}"),
            }),
        }
    }

    fn float(&mut self, what: &str) -> Result<(usize, f64), ConicError> {
        let (line, s) = self.next(what)?;
        match s.parse::<f64>() {
            Ok(f) if f.is_finite() => Ok((line, f)),
            _ => Err(ConicError::Parse {
                line,
                msg: format!("expected finite number {what}, found {s:?}"),
            }),
        }
    }

    fn index(&mut self, what: &str, lo: i64, hi: i64) -> Result<usize, ConicError> {
        let (line, v) = self.int(what)?;
        if v < lo || v > hi {
            return Err(ConicError::Parse {
                line,
                msg: format!("{what} {v} outside [{lo}, {hi}]"),
            });
        }
        Ok(v as usize)
    }
}

/// Parse SDPA sparse text. Leading lines starting with `"` or `*` are
/// comments; `{ } ( ) ,` count as whitespace. Duplicate entries accumulate.
pub fn parse(text: &str) -> Result<ConicProblem, ConicError> {
    let mut items = Vec::new();
    let mut header = true;
    for (ln, line) in text.lines().enumerate() {
        let t = line.trim_start();
        if header && (t.starts_with('"') || t.starts_with('*')) {
            continue;
        }
        if !t.is_empty() {
            header = false;
        }
        items.extend(
            line.split(|c: char| c.is_whitespace() || "{}(),".contains(c))
                .filter(|s| !s.is_empty())
                .map(|s| (ln + 1, s)),
        );
    }
    let mut tok = Tokens { items, pos: 0 };

    let m = tok.index("variable count", 0, MAX_DIM as i64)?;
    let nblocks = tok.index("block count", 0, MAX_DIM as i64)?;
    let mut cones = Vec::with_capacity(nblocks.min(1024));
    for _ in 0..nblocks {
        let (line, s) = tok.int("block size")?;
        if s == 0 || s.unsigned_abs() > MAX_DIM as u64 {
            return Err(ConicError::Parse {
                line,
                msg: format!("block size {s} out of range"),
            });
        }
        cones.push(if s > 0 {
            Cone::Psd(s as usize)
        } else {
            Cone::Nonneg(s.unsigned_abs() as usize)
        });
    }
    let mut p = ConicProblem::with_anonymous_vars(m);
    for k in 0..m {
        p.objective[k] = tok.float("objective coefficient")?.1;
    }
    let mut blocks: Vec<Block> = cones
        .iter()
        .enumerate()
        .map(|(i, &c)| Block::new(c, format!("block{}", i + 1)))
        .collect();
    while tok.pos < tok.items.len() {
        let k = tok.index("matrix number", 0, m as i64)?;
        let bi = tok.index("block number", 1, nblocks as i64)? - 1;
        let size = cones[bi].size() as i64;
        let line = tok.items.get(tok.pos).map_or(0, |t| t.0);
        let i = tok.index("row", 1, size)? - 1;
        let j = tok.index("column", 1, size)? - 1;
        let v = tok.float("entry value")?.1;
        let b = &mut blocks[bi];
        if matches!(b.cone, Cone::Nonneg(_)) && i != j {
            return Err(ConicError::Parse {
                line,
                msg: "off-diagonal entry in a diagonal block".into(),
            });
        }
        if k == 0 {
            b.add_constant(i, j, -v);
        } else {
            b.add_coeff(k - 1, i, j, v);
        }
    }
    for mut b in blocks {
        b.prune();
        p.push(b);
    }
    Ok(p)
}
