//! Standard-form container for block-diagonal conic programs.
//!
//! A [`ConicProblem`] is
//!
//! ```text
//! minimize    c . x
//! subject to  F0_b + sum_k x_k F_kb  in  K_b     for every block b
//! ```
//!
//! where each `K_b` is a nonnegative orthant, a second-order cone or a cone
//! of real symmetric positive semidefinite matrices. Coefficients are kept
//! sparse; PSD entries are stored on the upper triangle (`row <= col`),
//! vector-cone entries use `row == col == position`.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::ConicError;

/// Cone attached to a constraint block.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Cone {
    /// `count` independent scalars, each `>= 0`.
    Nonneg(usize),
    /// `(t, u)` with `t >= |u|`; the dimension counts `t`.
    Soc(usize),
    /// Real symmetric `size x size` matrices, PSD.
    Psd(usize),
}

impl Cone {
    /// Side length for PSD blocks, element count for vector cones.
    pub fn size(&self) -> usize {
        match *self {
            Cone::Nonneg(n) | Cone::Soc(n) | Cone::Psd(n) => n,
        }
    }

    /// Length of the vectorized representation used by the solver.
    pub fn vec_len(&self) -> usize {
        match *self {
            Cone::Nonneg(n) | Cone::Soc(n) => n,
            Cone::Psd(n) => n * (n + 1) / 2,
        }
    }

    /// Barrier degree (contribution to the complementarity normalizer).
    pub fn degree(&self) -> usize {
        match *self {
            Cone::Nonneg(n) | Cone::Psd(n) => n,
            Cone::Soc(_) => 1,
        }
    }
}

/// Real or imaginary part of a complex matrix entry.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Part {
    Re,
    Im,
}

/// What a decision variable stands for.
#[derive(Clone, Debug, PartialEq)]
pub enum VarRole {
    /// Entry `(row, col)` of a named Hermitian matrix variable.
    MatrixEntry {
        matrix: String,
        row: usize,
        col: usize,
        part: Part,
    },
    /// Named scalar auxiliary.
    Aux(String),
}

impl VarRole {
    pub fn name(&self) -> String {
        match self {
            VarRole::MatrixEntry {
                matrix,
                row,
                col,
                part,
            } => {
                let p = match part {
                    Part::Re => "re",
                    Part::Im => "im",
                };
                format!("{matrix}[{row},{col}].{p}")
            }
            VarRole::Aux(name) => name.clone(),
        }
    }
}

/// Sparse symmetric coefficient pattern, keyed by `(row, col)` with `row <= col`.
pub type SparseSym = BTreeMap<(usize, usize), f64>;

/// One constraint block `F0 + sum_k x_k F_k in K`.
#[derive(Clone, Debug, PartialEq)]
pub struct Block {
    pub cone: Cone,
    pub label: String,
    pub constant: SparseSym,
    pub coeffs: BTreeMap<usize, SparseSym>,
}

fn key(cone: Cone, row: usize, col: usize) -> (usize, usize) {
    match cone {
        Cone::Psd(_) => (row.min(col), row.max(col)),
        Cone::Nonneg(_) | Cone::Soc(_) => {
            debug_assert_eq!(row, col, "vector cones take row == col");
            (row, row)
        }
    }
}

impl Block {
    pub fn new(cone: Cone, label: impl Into<String>) -> Self {
        Self {
            cone,
            label: label.into(),
            constant: SparseSym::new(),
            coeffs: BTreeMap::new(),
        }
    }

    pub fn psd(size: usize, label: impl Into<String>) -> Self {
        Self::new(Cone::Psd(size), label)
    }

    pub fn soc(dim: usize, label: impl Into<String>) -> Self {
        Self::new(Cone::Soc(dim), label)
    }

    pub fn nonneg(count: usize, label: impl Into<String>) -> Self {
        Self::new(Cone::Nonneg(count), label)
    }

    /// Accumulate `value` into the constant term at `(row, col)`.
    pub fn add_constant(&mut self, row: usize, col: usize, value: f64) {
        if value != 0.0 {
            *self.constant.entry(key(self.cone, row, col)).or_insert(0.0) += value;
        }
    }

    /// Accumulate `value` into the coefficient matrix of variable `var`.
    pub fn add_coeff(&mut self, var: usize, row: usize, col: usize, value: f64) {
        if value != 0.0 {
            *self
                .coeffs
                .entry(var)
                .or_default()
                .entry(key(self.cone, row, col))
                .or_insert(0.0) += value;
        }
    }

    /// Vector-cone shorthand for [`Block::add_constant`].
    pub fn add_constant_at(&mut self, pos: usize, value: f64) {
        self.add_constant(pos, pos, value);
    }

    /// Vector-cone shorthand for [`Block::add_coeff`].
    pub fn add_coeff_at(&mut self, var: usize, pos: usize, value: f64) {
        self.add_coeff(var, pos, pos, value);
    }

    /// Drop exact zeros left over from cancellation.
    pub fn prune(&mut self) {
        self.constant.retain(|_, v| *v != 0.0);
        for m in self.coeffs.values_mut() {
            m.retain(|_, v| *v != 0.0);
        }
        self.coeffs.retain(|_, m| !m.is_empty());
    }

    /// Value of the affine map at `x`, as a dense symmetric matrix (PSD) or
    /// a column vector (vector cones).
    pub fn evaluate(&self, x: &[f64]) -> DMatrix<f64> {
        let mut out = match self.cone {
            Cone::Psd(n) => DMatrix::zeros(n, n),
            Cone::Nonneg(n) | Cone::Soc(n) => DMatrix::zeros(n, 1),
        };
        let mut put = |(r, c): (usize, usize), v: f64| match self.cone {
            Cone::Psd(_) => {
                out[(r, c)] += v;
                if r != c {
                    out[(c, r)] += v;
                }
            }
            _ => out[(r, 0)] += v,
        };
        for (&k, &v) in &self.constant {
            put(k, v);
        }
        for (&var, m) in &self.coeffs {
            let xv = x[var];
            if xv == 0.0 {
                continue;
            }
            for (&k, &v) in m {
                put(k, v * xv);
            }
        }
        out
    }

    /// Signed distance-like cone margin of the block value at `x`: minimum
    /// eigenvalue (PSD), minimum entry (orthant) or `t - |u|` (SOC).
    /// Nonnegative iff the value lies in the cone.
    pub fn margin(&self, x: &[f64]) -> f64 {
        let v = self.evaluate(x);
        match self.cone {
            Cone::Psd(_) => SymmetricEigen::new(v).eigenvalues.min(),
            Cone::Nonneg(_) => v.min(),
            Cone::Soc(_) => v[0] - v.rows(1, v.nrows() - 1).norm(),
        }
    }

    /// Frobenius norm of the constant term (off-diagonal PSD entries count twice).
    pub fn constant_norm(&self) -> f64 {
        self.constant
            .iter()
            .map(|(&(r, c), v)| {
                let w = if matches!(self.cone, Cone::Psd(_)) && r != c {
                    2.0
                } else {
                    1.0
                };
                w * v * v
            })
            .sum::<f64>()
            .sqrt()
    }
}

/// A block-diagonal conic program with variable metadata.
#[derive(Clone, Debug, PartialEq)]
pub struct ConicProblem {
    pub n_vars: usize,
    pub objective: Vec<f64>,
    pub blocks: Vec<Block>,
    pub vars: Vec<VarRole>,
}

impl ConicProblem {
    pub fn new(vars: Vec<VarRole>) -> Self {
        let n = vars.len();
        Self {
            n_vars: n,
            objective: vec![0.0; n],
            blocks: Vec::new(),
            vars,
        }
    }

    /// A problem with anonymous auxiliaries `x0, x1, ...`.
    pub fn with_anonymous_vars(n: usize) -> Self {
        Self::new((0..n).map(|k| VarRole::Aux(format!("x{k}"))).collect())
    }

    pub fn push(&mut self, block: Block) -> usize {
        self.blocks.push(block);
        self.blocks.len() - 1
    }

    /// Structural checks: objective length, index ranges, variable ids.
    pub fn validate(&self) -> Result<(), ConicError> {
        if self.objective.len() != self.n_vars || self.vars.len() != self.n_vars {
            return Err(ConicError::Malformed(format!(
                "objective has {} entries and layout {} for {} variables",
                self.objective.len(),
                self.vars.len(),
                self.n_vars
            )));
        }
        if self.objective.iter().any(|c| !c.is_finite()) {
            return Err(ConicError::Malformed("non-finite objective".into()));
        }
        for (b, block) in self.blocks.iter().enumerate() {
            let n = block.cone.size();
            if n == 0 {
                return Err(ConicError::Malformed(format!("block {b} is empty")));
            }
            let check = |m: &SparseSym| -> Result<(), ConicError> {
                for (&(r, c), v) in m {
                    if r >= n || c >= n || r > c || !v.is_finite() {
                        return Err(ConicError::Malformed(format!(
                            "block {b} ({}) has bad entry ({r},{c})={v}",
                            block.label
                        )));
                    }
                    if !matches!(block.cone, Cone::Psd(_)) && r != c {
                        return Err(ConicError::Malformed(format!(
                            "vector block {b} has off-diagonal entry"
                        )));
                    }
                }
                Ok(())
            };
            check(&block.constant)?;
            for (&var, m) in &block.coeffs {
                if var >= self.n_vars {
                    return Err(ConicError::Malformed(format!(
                        "block {b} references variable {var} >= {}",
                        self.n_vars
                    )));
                }
                check(m)?;
            }
        }
        Ok(())
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    /// Smallest cone margin over all blocks (see [`Block::margin`]).
    pub fn min_margin(&self, x: &[f64]) -> f64 {
        self.blocks
            .iter()
            .map(|b| b.margin(x))
            .fold(f64::INFINITY, f64::min)
    }

    /// Count blocks per cone kind and size, e.g. for structure checks.
    pub fn block_census(&self) -> BTreeMap<(char, usize), usize> {
        let mut out = BTreeMap::new();
        for b in &self.blocks {
            let k = match b.cone {
                Cone::Nonneg(n) => ('l', n),
                Cone::Soc(n) => ('q', n),
                Cone::Psd(n) => ('s', n),
            };
            *out.entry(k).or_insert(0) += 1;
        }
        out
    }

    /// Index of the first variable with the given name.
    pub fn var_index(&self, name: &str) -> Option<usize> {
        self.vars.iter().position(|v| v.name() == name)
    }

    pub fn has_soc(&self) -> bool {
        self.blocks.iter().any(|b| matches!(b.cone, Cone::Soc(_)))
    }

    /// Multiply every coefficient of the objective by `factor`.
    pub fn scale_objective(&mut self, factor: f64) {
        for c in &mut self.objective {
            *c *= factor;
        }
    }
}
