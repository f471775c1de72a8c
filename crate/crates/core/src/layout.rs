//! Real parameterization of the Hermitian matrix variables.
//!
//! Each `M x M` Hermitian matrix uses `M^2` real parameters: the `M`
//! diagonal entries, then for every `r < c` (row-major) the real and the
//! imaginary part of entry `(r, c)`. Matrices are ordered `W_1..W_U`,
//! `V_1..V_N`; method-specific scalar auxiliaries follow.

use conic::{Block, Part, VarRole};
use nalgebra::DMatrix;

use crate::linalg::{ComplexVector, HermitianMatrix, C64};
use crate::quadforms::BeamformerSet;

#[derive(Clone, Debug, PartialEq)]
pub struct VarLayout {
    pub m: usize,
    pub u: usize,
    pub n: usize,
    pub aux: Vec<String>,
}

impl VarLayout {
    pub fn new(m: usize, u: usize, n: usize, aux: Vec<String>) -> Self {
        Self { m, u, n, aux }
    }

    pub fn per_matrix(&self) -> usize {
        self.m * self.m
    }

    pub fn n_matrices(&self) -> usize {
        self.u + self.n
    }

    pub fn n_matrix_params(&self) -> usize {
        self.n_matrices() * self.per_matrix()
    }

    pub fn n_vars(&self) -> usize {
        self.n_matrix_params() + self.aux.len()
    }

    /// First parameter of matrix `j` (`W_i` is `j = i`, `V_t` is `j = U + t`).
    pub fn matrix_offset(&self, j: usize) -> usize {
        j * self.per_matrix()
    }

    pub fn aux_offset(&self) -> usize {
        self.n_matrix_params()
    }

    pub fn aux_index(&self, name: &str) -> Option<usize> {
        self.aux.iter().position(|a| a == name).map(|p| self.aux_offset() + p)
    }

    pub fn matrix_name(&self, j: usize) -> String {
        if j < self.u {
            format!("W{}", j + 1)
        } else {
            format!("V{}", j - self.u + 1)
        }
    }

    pub fn roles(&self) -> Vec<VarRole> {
        let mut out = Vec::with_capacity(self.n_vars());
        for j in 0..self.n_matrices() {
            let name = self.matrix_name(j);
            for (r, c, part) in param_entries(self.m) {
                out.push(VarRole::MatrixEntry {
                    matrix: name.clone(),
                    row: r,
                    col: c,
                    part,
                });
            }
        }
        out.extend(self.aux.iter().cloned().map(VarRole::Aux));
        out
    }

    pub fn read_matrix(&self, x: &[f64], j: usize) -> HermitianMatrix {
        let off = self.matrix_offset(j);
        let mut h = HermitianMatrix::zeros(self.m);
        let mut re_part = 0.0;
        for (k, (r, c, part)) in param_entries(self.m).into_iter().enumerate() {
            let v = x[off + k];
            match part {
                Part::Re if r == c => h.set(r, r, C64::new(v, 0.0)),
                Part::Re => re_part = v,
                Part::Im => h.set(r, c, C64::new(re_part, v)),
            }
        }
        h
    }

    pub fn decode(&self, x: &[f64]) -> BeamformerSet {
        BeamformerSet {
            w: (0..self.u).map(|j| self.read_matrix(x, j)).collect(),
            v: (0..self.n).map(|t| self.read_matrix(x, self.u + t)).collect(),
        }
    }

    /// Matrix parameters of `bf`; auxiliaries are left at zero.
    pub fn encode(&self, bf: &BeamformerSet) -> Vec<f64> {
        let mut x = vec![0.0; self.n_vars()];
        for (j, mat) in bf.w.iter().chain(&bf.v).enumerate() {
            let off = self.matrix_offset(j);
            for (k, (r, c, part)) in param_entries(self.m).into_iter().enumerate() {
                let z = mat.get(r, c);
                x[off + k] = match part {
                    Part::Re => z.re,
                    Part::Im => z.im,
                };
            }
        }
        x
    }
}

/// `(row, col, part)` of each real parameter in layout order.
pub fn param_entries(m: usize) -> Vec<(usize, usize, Part)> {
    let mut out: Vec<_> = (0..m).map(|r| (r, r, Part::Re)).collect();
    for r in 0..m {
        for c in r + 1..m {
            out.push((r, c, Part::Re));
            out.push((r, c, Part::Im));
        }
    }
    out
}

/// Basis matrices `E_k` with `X = sum_k x_k E_k`.
pub fn hermitian_basis(m: usize) -> Vec<DMatrix<C64>> {
    param_entries(m)
        .into_iter()
        .map(|(r, c, part)| {
            let mut e = DMatrix::zeros(m, m);
            match part {
                Part::Re if r == c => e[(r, r)] = C64::new(1.0, 0.0),
                Part::Re => {
                    e[(r, c)] = C64::new(1.0, 0.0);
                    e[(c, r)] = C64::new(1.0, 0.0);
                }
                Part::Im => {
                    e[(r, c)] = C64::new(0.0, 1.0);
                    e[(c, r)] = C64::new(0.0, -1.0);
                }
            }
            e
        })
        .collect()
}

/// Add a complex Hermitian matrix `z` (times `scale`) to a real PSD block
/// through `[[Re, -Im], [Im, Re]]`, starting at complex offset 0. With
/// `var = None` the constant term is updated.
pub(crate) fn add_embedded(block: &mut Block, var: Option<usize>, z: &DMatrix<C64>, scale: f64) {
    let n = z.nrows();
    let mut put = |r: usize, c: usize, v: f64| {
        let v = scale * v;
        match var {
            Some(k) => block.add_coeff(k, r, c, v),
            None => block.add_constant(r, c, v),
        }
    };
    for r in 0..n {
        for c in r..n {
            let v = z[(r, c)];
            put(r, c, v.re);
            put(r + n, c + n, v.re);
            // lower-left block Im(z); entry (c + n, r) is mirrored to (r, c + n)
            put(r, c + n, -v.im);
            if r != c {
                put(c, r + n, v.im);
            }
        }
    }
}

/// Evaluate `X -> P^H X P` on a dense Hermitian argument.
pub(crate) fn congruence(p: &DMatrix<C64>, x: &DMatrix<C64>) -> DMatrix<C64> {
    p.adjoint() * x * p
}

/// `[S, h]`: the `M x (M+1)` factor whose congruence gives the S-procedure block.
pub(crate) fn sqrt_and_channel(s: &HermitianMatrix, h: &ComplexVector) -> DMatrix<C64> {
    let m = s.dim();
    let mut p = DMatrix::zeros(m, m + 1);
    p.columns_mut(0, m).copy_from(&s.to_dmatrix());
    p.column_mut(m).copy_from(&h.0);
    p
}

#[cfg(test)]
mod tests {
    use super::*;
    use conic::Cone;

    fn sample(m: usize) -> HermitianMatrix {
        let mut h = HermitianMatrix::zeros(m);
        for r in 0..m {
            for c in r..m {
                let im = if r == c { 0.0 } else { (r + 2 * c) as f64 * 0.1 };
                h.set(r, c, C64::new((r * m + c) as f64 - 1.5, im));
            }
        }
        h
    }

    #[test]
    fn encode_decode_round_trip() {
        let lay = VarLayout::new(3, 1, 1, vec!["a".into()]);
        let bf = BeamformerSet {
            w: vec![sample(3)],
            v: vec![sample(3).scaled(-2.0)],
        };
        let x = lay.encode(&bf);
        assert_eq!(x.len(), 2 * 9 + 1);
        assert_eq!(lay.decode(&x), bf);
    }

    #[test]
    fn basis_reconstructs_matrix() {
        let lay = VarLayout::new(3, 1, 0, vec![]);
        let a = sample(3);
        let x = lay.encode(&BeamformerSet { w: vec![a.clone()], v: vec![] });
        let mut acc = DMatrix::<C64>::zeros(3, 3);
        for (k, e) in hermitian_basis(3).iter().enumerate() {
            acc += e * C64::new(x[k], 0.0);
        }
        assert!((acc - a.to_dmatrix()).norm() < 1e-14);
    }

    #[test]
    fn embedded_block_matches_dense_embedding() {
        let a = sample(3);
        let mut b = Block::psd(6, "t");
        add_embedded(&mut b, None, &a.to_dmatrix(), 1.0);
        assert_eq!(b.cone, Cone::Psd(6));
        let dense = b.evaluate(&[]);
        assert!((dense - crate::linalg::embed_real(&a)).norm() < 1e-14);
    }

    #[test]
    fn roles_name_every_parameter() {
        let lay = VarLayout::new(2, 1, 1, vec!["alpha1".into()]);
        let names: Vec<String> = lay.roles().iter().map(VarRole::name).collect();
        assert_eq!(names[0], "W1[0,0].re");
        assert_eq!(names[2], "W1[0,1].re");
        assert_eq!(names[3], "W1[0,1].im");
        assert_eq!(names[4], "V1[0,0].re");
        assert_eq!(names[8], "alpha1");
    }
}
