//! Complex Hermitian matrices, their real symmetric embedding, spectral
//! helpers and the chi-square quantile function.

use std::ops::{Deref, DerefMut};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex;
use statrs::function::gamma::gamma_lr;

use crate::error::CoreError;

pub type C64 = Complex<f64>;

/// Relative eigenvalue floor below which a matrix is not treated as PSD.
pub const PSD_FLOOR: f64 = 1e-10;

/// Hermitian matrix stored as its packed upper triangle, row by row.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianMatrix {
    dim: usize,
    data: Vec<C64>,
}

fn packed(dim: usize, r: usize, c: usize) -> usize {
    debug_assert!(r <= c && c < dim);
    r * dim - r * r.saturating_sub(1) / 2 - r + c
}

impl HermitianMatrix {
    pub fn zeros(dim: usize) -> Self {
        assert!(dim >= 1, "Hermitian matrix needs dim >= 1");
        Self {
            dim,
            data: vec![C64::new(0.0, 0.0); dim * (dim + 1) / 2],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.set(i, i, C64::new(1.0, 0.0));
        }
        m
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, d) in diag.iter().enumerate() {
            m.set(i, i, C64::new(*d, 0.0));
        }
        m
    }

    /// Hermitian part `(A + A^H) / 2` of a square matrix.
    pub fn from_dmatrix(a: &DMatrix<C64>) -> Self {
        assert!(a.is_square(), "square matrix required");
        let n = a.nrows();
        let mut m = Self::zeros(n);
        for r in 0..n {
            for c in r..n {
                m.set(r, c, (a[(r, c)] + a[(c, r)].conj()) * 0.5);
            }
        }
        m
    }

    /// Rank-one `v v^H`.
    pub fn outer(v: &ComplexVector) -> Self {
        let n = v.len();
        let mut m = Self::zeros(n);
        for r in 0..n {
            for c in r..n {
                m.set(r, c, v[r] * v[c].conj());
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, r: usize, c: usize) -> C64 {
        if r <= c {
            self.data[packed(self.dim, r, c)]
        } else {
            self.data[packed(self.dim, c, r)].conj()
        }
    }

    /// Set entry `(r, c)` and, implicitly, its mirror. Diagonal imaginary
    /// parts are discarded.
    pub fn set(&mut self, r: usize, c: usize, v: C64) {
        let (r, c, v) = if r <= c { (r, c, v) } else { (c, r, v.conj()) };
        let v = if r == c { C64::new(v.re, 0.0) } else { v };
        self.data[packed(self.dim, r, c)] = v;
    }

    pub fn to_dmatrix(&self) -> DMatrix<C64> {
        DMatrix::from_fn(self.dim, self.dim, |r, c| self.get(r, c))
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.get(i, i).re).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        let mut acc = 0.0;
        for r in 0..self.dim {
            for c in r..self.dim {
                let w = if r == c { 1.0 } else { 2.0 };
                acc += w * self.get(r, c).norm_sqr();
            }
        }
        acc.sqrt()
    }

    pub fn scaled(&self, f: f64) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|v| v * f).collect(),
        }
    }

    /// `self + f * other`.
    pub fn add_scaled(&mut self, other: &Self, f: f64) {
        assert_eq!(self.dim, other.dim, "dimension mismatch");
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b * f;
        }
    }

    /// `x^H A x`, real for Hermitian `A`.
    pub fn quad_form(&self, x: &ComplexVector) -> f64 {
        x.dotc(&(self.to_dmatrix() * &x.0)).re
    }

    /// Eigenvalues in ascending order with matching unit eigenvectors as columns.
    pub fn eigen(&self) -> (Vec<f64>, DMatrix<C64>) {
        let eig = SymmetricEigen::new(self.to_dmatrix());
        let mut order: Vec<usize> = (0..self.dim).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let vectors = DMatrix::from_fn(self.dim, self.dim, |r, c| eig.eigenvectors[(r, order[c])]);
        (values, vectors)
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        self.eigen().0
    }

    pub fn max_eigenvalue(&self) -> f64 {
        *self.eigenvalues().last().expect("dim >= 1")
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues()[0]
    }
}

/// Complex column vector.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexVector(pub DVector<C64>);

impl ComplexVector {
    pub fn zeros(dim: usize) -> Self {
        Self(DVector::zeros(dim))
    }

    pub fn from_vec(v: Vec<C64>) -> Self {
        Self(DVector::from_vec(v))
    }

    pub fn norm_sqr(&self) -> f64 {
        self.0.iter().map(|v| v.norm_sqr()).sum()
    }
}

impl Deref for ComplexVector {
    type Target = DVector<C64>;
    fn deref(&self) -> &Self::Target {
        &self.0
    }
}

impl DerefMut for ComplexVector {
    fn deref_mut(&mut self) -> &mut Self::Target {
        &mut self.0
    }
}

/// PSD square root. Eigenvalues slightly below zero (relative floor
/// [`PSD_FLOOR`]) are clamped.
pub fn herm_sqrt(a: &HermitianMatrix) -> Result<HermitianMatrix, CoreError> {
    let (vals, vecs) = a.eigen();
    let top = vals.last().copied().unwrap_or(0.0).max(1.0);
    if vals[0] < -PSD_FLOOR * top {
        return Err(CoreError::NotPsd { min_eig: vals[0] });
    }
    let roots: Vec<f64> = vals.iter().map(|v| v.max(0.0).sqrt()).collect();
    let mut scaled = vecs.clone();
    for (c, r) in roots.iter().enumerate() {
        scaled.column_mut(c).scale_mut(*r);
    }
    Ok(HermitianMatrix::from_dmatrix(&(scaled * vecs.adjoint())))
}

/// Real symmetric embedding `[[Re A, -Im A], [Im A, Re A]]`.
pub fn embed_real(a: &HermitianMatrix) -> DMatrix<f64> {
    embed_real_dense(&a.to_dmatrix())
}

pub(crate) fn embed_real_dense(a: &DMatrix<C64>) -> DMatrix<f64> {
    let n = a.nrows();
    let mut out = DMatrix::zeros(2 * n, 2 * n);
    for r in 0..n {
        for c in 0..n {
            let v = a[(r, c)];
            out[(r, c)] = v.re;
            out[(r + n, c + n)] = v.re;
            out[(r, c + n)] = -v.im;
            out[(r + n, c)] = v.im;
        }
    }
    out
}

/// `max(largest eigenvalue, 0)`.
pub fn s_plus(a: &HermitianMatrix) -> f64 {
    a.max_eigenvalue().max(0.0)
}

/// Chi-square CDF with `m` degrees of freedom.
pub fn chi2_cdf(m: u32, x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        gamma_lr(m as f64 / 2.0, x / 2.0)
    }
}

fn chi2_pdf(m: u32, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let k = m as f64 / 2.0;
    ((k - 1.0) * x.ln() - x / 2.0 - k * std::f64::consts::LN_2 - statrs::function::gamma::ln_gamma(k)).exp()
}

/// Inverse chi-square CDF by bracketed bisection and a Newton polish.
pub fn chi2_inv_cdf(m: u32, p: f64) -> Result<f64, CoreError> {
    if m == 0 {
        return Err(CoreError::Domain("chi-square needs m >= 1".into()));
    }
    if !(p > 0.0 && p < 1.0) {
        return Err(CoreError::Domain(format!("probability {p} outside (0, 1)")));
    }
    let mut lo = 0.0;
    let mut hi = m as f64 + 10.0;
    while chi2_cdf(m, hi) < p {
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if chi2_cdf(m, mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-12 * hi.max(1e-300) {
            break;
        }
    }
    let mut x = 0.5 * (lo + hi);
    for _ in 0..4 {
        let f = chi2_cdf(m, x) - p;
        let d = chi2_pdf(m, x);
        if d <= 0.0 || f.abs() < 1e-15 {
            break;
        }
        let next = x - f / d;
        if !(next > lo && next < hi) {
            break;
        }
        x = next;
    }
    Ok(x)
}
