//! Vectorized cone algebra for the interior-point iterations.
//!
//! PSD blocks are stored as `svec`: the lower triangle, column-major, with
//! off-diagonal entries multiplied by `sqrt(2)` so the Euclidean inner
//! product matches the trace inner product.

use nalgebra::{DMatrix, SymmetricEigen, SVD};

use crate::problem::Cone;

pub(crate) const SQRT2: f64 = std::f64::consts::SQRT_2;

/// Position of lower-triangular entry `(row, col)`, `row >= col`.
pub(crate) fn svec_index(n: usize, row: usize, col: usize) -> usize {
    debug_assert!(row >= col && row < n);
    col * n - col * col.saturating_sub(1) / 2 + (row - col)
}

pub(crate) fn smat(v: &[f64], n: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(n, n);
    let mut k = 0;
    for c in 0..n {
        m[(c, c)] = v[k];
        k += 1;
        for r in c + 1..n {
            let x = v[k] / SQRT2;
            m[(r, c)] = x;
            m[(c, r)] = x;
            k += 1;
        }
    }
    m
}

pub(crate) fn svec_into(m: &DMatrix<f64>, out: &mut [f64]) {
    let n = m.nrows();
    let mut k = 0;
    for c in 0..n {
        out[k] = m[(c, c)];
        k += 1;
        for r in c + 1..n {
            out[k] = 0.5 * (m[(r, c)] + m[(c, r)]) * SQRT2;
            k += 1;
        }
    }
}

fn psd_n(cone: Cone) -> usize {
    match cone {
        Cone::Psd(n) => n,
        _ => unreachable!(),
    }
}

/// Identity element of the cone.
pub(crate) fn identity(cone: Cone, out: &mut [f64]) {
    out.iter_mut().for_each(|v| *v = 0.0);
    match cone {
        Cone::Nonneg(_) => out.iter_mut().for_each(|v| *v = 1.0),
        Cone::Soc(_) => out[0] = 1.0,
        Cone::Psd(n) => {
            for c in 0..n {
                out[svec_index(n, c, c)] = 1.0;
            }
        }
    }
}

/// Jordan product `x o y`.
pub(crate) fn jordan(cone: Cone, x: &[f64], y: &[f64], out: &mut [f64]) {
    match cone {
        Cone::Nonneg(_) => {
            for i in 0..x.len() {
                out[i] = x[i] * y[i];
            }
        }
        Cone::Soc(_) => {
            out[0] = dot(x, y);
            for i in 1..x.len() {
                out[i] = x[0] * y[i] + y[0] * x[i];
            }
        }
        Cone::Psd(n) => {
            let a = smat(x, n);
            let b = smat(y, n);
            let p = &a * &b;
            let sym = (&p + p.transpose()) * 0.5;
            svec_into(&sym, out);
        }
    }
}

/// Solve `lambda o u = v` for `u`, where `lambda` is a scaled point
/// (diagonal for PSD blocks).
pub(crate) fn jordan_div(cone: Cone, lambda: &[f64], v: &[f64], out: &mut [f64]) {
    match cone {
        Cone::Nonneg(_) => {
            for i in 0..v.len() {
                out[i] = v[i] / lambda[i];
            }
        }
        Cone::Soc(_) => {
            let l0 = lambda[0];
            let l1v1 = dot(&lambda[1..], &v[1..]);
            let det = l0 * l0 - dot(&lambda[1..], &lambda[1..]);
            let u0 = (l0 * v[0] - l1v1) / det;
            out[0] = u0;
            for i in 1..v.len() {
                out[i] = (v[i] - u0 * lambda[i]) / l0;
            }
        }
        Cone::Psd(n) => {
            let d: Vec<f64> = (0..n).map(|c| lambda[svec_index(n, c, c)]).collect();
            let mut k = 0;
            for c in 0..n {
                for r in c..n {
                    out[k] = 2.0 * v[k] / (d[r] + d[c]);
                    k += 1;
                }
            }
        }
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Smallest `a` with `x + a e` in the cone (negative when `x` is interior).
pub(crate) fn interior_shift(cone: Cone, x: &[f64]) -> f64 {
    match cone {
        Cone::Nonneg(_) => -x.iter().cloned().fold(f64::INFINITY, f64::min),
        Cone::Soc(_) => dot(&x[1..], &x[1..]).sqrt() - x[0],
        Cone::Psd(n) => -SymmetricEigen::new(smat(x, n)).eigenvalues.min(),
    }
}

/// Largest step `a <= cap` keeping `lambda + a d` in the cone, for a
/// scaled point `lambda` (diagonal for PSD blocks).
pub(crate) fn max_step(cone: Cone, lambda: &[f64], d: &[f64], cap: f64) -> f64 {
    match cone {
        Cone::Nonneg(_) => {
            let mut a = cap;
            for i in 0..d.len() {
                if d[i] < 0.0 {
                    a = a.min(-lambda[i] / d[i]);
                }
            }
            a
        }
        Cone::Soc(_) => soc_step(lambda, d, cap),
        Cone::Psd(n) => {
            let mut m = smat(d, n);
            let root: Vec<f64> = (0..n)
                .map(|c| 1.0 / lambda[svec_index(n, c, c)].sqrt())
                .collect();
            for c in 0..n {
                for r in 0..n {
                    m[(r, c)] *= root[r] * root[c];
                }
            }
            let e = SymmetricEigen::new(m).eigenvalues.min();
            if e < 0.0 {
                cap.min(-1.0 / e)
            } else {
                cap
            }
        }
    }
}

fn soc_step(x: &[f64], d: &[f64], cap: f64) -> f64 {
    let a = d[0] * d[0] - dot(&d[1..], &d[1..]);
    let b = 2.0 * (x[0] * d[0] - dot(&x[1..], &d[1..]));
    let c = (x[0] * x[0] - dot(&x[1..], &x[1..])).max(0.0);
    let mut best = cap;
    if d[0] < 0.0 {
        best = best.min(-x[0] / d[0]);
    }
    let scale = a.abs().max(b.abs()).max(c.abs());
    if scale == 0.0 {
        return best;
    }
    if a.abs() <= 1e-14 * scale {
        if b < 0.0 {
            best = best.min(-c / b);
        }
        return best;
    }
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return best;
    }
    let sq = disc.sqrt();
    let q = -0.5 * (b + b.signum() * sq);
    let mut roots = [f64::INFINITY; 2];
    if q != 0.0 {
        roots[0] = q / a;
        roots[1] = c / q;
    } else {
        roots[0] = 0.0;
    }
    for r in roots {
        if r > 0.0 {
            best = best.min(r);
        }
    }
    best
}

/// `x0^2 - |x1|^2`, factored to limit cancellation near the boundary.
fn soc_det(x: &[f64]) -> f64 {
    let r = dot(&x[1..], &x[1..]).sqrt();
    (x[0] - r) * (x[0] + r)
}

/// Strict interiority test, cheaper than building a scaling.
pub(crate) fn is_interior(cone: Cone, x: &[f64]) -> bool {
    match cone {
        Cone::Nonneg(_) => x.iter().all(|v| *v > 0.0),
        Cone::Soc(_) => x[0] > 0.0 && soc_det(x) > 0.0,
        Cone::Psd(n) => smat(x, n).cholesky().is_some(),
    }
}

/// Nesterov-Todd scaling `W` of one block: `W z = W^{-T} s = lambda`.
#[derive(Clone, Debug)]
pub(crate) enum Scaling {
    Nonneg { w: Vec<f64> },
    Soc { eta: f64, w: Vec<f64> },
    Psd { rt: DMatrix<f64>, rinv: DMatrix<f64> },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Op {
    W,
    Wt,
    Winv,
    Winvt,
}

impl Scaling {
    /// NT scaling for interior `s`, `z`; also returns `lambda`.
    /// `None` if either point is not numerically interior.
    pub(crate) fn new(cone: Cone, s: &[f64], z: &[f64]) -> Option<(Self, Vec<f64>)> {
        match cone {
            Cone::Nonneg(_) => {
                if s.iter().chain(z).any(|v| !(*v > 0.0)) {
                    return None;
                }
                let w: Vec<f64> = s.iter().zip(z).map(|(a, b)| (a / b).sqrt()).collect();
                let lambda = s.iter().zip(z).map(|(a, b)| (a * b).sqrt()).collect();
                Some((Scaling::Nonneg { w }, lambda))
            }
            Cone::Soc(_) => {
                let sj = soc_det(s);
                let zj = soc_det(z);
                if !(sj > 0.0 && zj > 0.0 && s[0] > 0.0 && z[0] > 0.0) {
                    return None;
                }
                let sn = sj.sqrt();
                let zn = zj.sqrt();
                let sb: Vec<f64> = s.iter().map(|v| v / sn).collect();
                let zb: Vec<f64> = z.iter().map(|v| v / zn).collect();
                let gamma = ((1.0 + dot(&sb, &zb)) / 2.0).sqrt();
                let mut w = vec![0.0; s.len()];
                w[0] = (sb[0] + zb[0]) / (2.0 * gamma);
                for i in 1..s.len() {
                    w[i] = (sb[i] - zb[i]) / (2.0 * gamma);
                }
                let eta = (sn / zn).sqrt();
                let sc = Scaling::Soc { eta, w };
                let mut lambda = vec![0.0; s.len()];
                sc.apply(cone, Op::W, z, &mut lambda);
                Some((sc, lambda))
            }
            Cone::Psd(n) => {
                let sm = smat(s, n);
                let zm = smat(z, n);
                let ls = sm.cholesky()?.l();
                let lz = zm.cholesky()?.l();
                let prod = lz.transpose() * &ls;
                let svd = SVD::new(prod, true, true);
                let u = svd.u?;
                let vt = svd.v_t?;
                let sig = svd.singular_values;
                if sig.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
                    return None;
                }
                let isq: Vec<f64> = sig.iter().map(|v| 1.0 / v.sqrt()).collect();
                // R = Ls V diag(isq), R^{-1} = diag(isq) U^T Lz^T
                let mut r = ls * vt.transpose();
                for c in 0..n {
                    for i in 0..n {
                        r[(i, c)] *= isq[c];
                    }
                }
                let mut rinv = u.transpose() * lz.transpose();
                for i in 0..n {
                    for c in 0..n {
                        rinv[(i, c)] *= isq[i];
                    }
                }
                let mut lambda = vec![0.0; s.len()];
                for c in 0..n {
                    lambda[svec_index(n, c, c)] = sig[c];
                }
                Some((
                    Scaling::Psd {
                        rt: r.transpose(),
                        rinv,
                    },
                    lambda,
                ))
            }
        }
    }

    /// `out = op(v)`.
    pub(crate) fn apply(&self, cone: Cone, op: Op, v: &[f64], out: &mut [f64]) {
        match self {
            Scaling::Nonneg { w } => {
                let inv = matches!(op, Op::Winv | Op::Winvt);
                for i in 0..v.len() {
                    out[i] = if inv { v[i] / w[i] } else { v[i] * w[i] };
                }
            }
            Scaling::Soc { eta, w } => {
                let inv = matches!(op, Op::Winv | Op::Winvt);
                let w1v1 = dot(&w[1..], &v[1..]);
                let sign = if inv { -1.0 } else { 1.0 };
                let f = if inv { 1.0 / eta } else { *eta };
                let coef = w1v1 / (1.0 + w[0]);
                out[0] = f * (w[0] * v[0] + sign * w1v1);
                for i in 1..v.len() {
                    out[i] = f * (sign * v[0] * w[i] + v[i] + coef * w[i]);
                }
            }
            Scaling::Psd { rt, rinv } => {
                let n = psd_n(cone);
                let y = smat(v, n);
                // op(Y) = A Y A^T
                let res = match op {
                    Op::W => rt * y * rt.transpose(),
                    Op::Wt => rt.transpose() * y * rt,
                    Op::Winv => rinv.transpose() * y * rinv,
                    Op::Winvt => rinv * y * rinv.transpose(),
                };
                svec_into(&res, out);
            }
        }
    }

    /// Apply `W^{-T}` to every column of `g` (rows = block vector length).
    pub(crate) fn winvt_columns(&self, cone: Cone, g: &DMatrix<f64>) -> DMatrix<f64> {
        let (d, k) = g.shape();
        let mut out = DMatrix::zeros(d, k);
        match self {
            Scaling::Psd { rinv, .. } => {
                let n = psd_n(cone);
                if k == 0 {
                    return out;
                }
                // Batched congruence: R^{-1} [X_1 .. X_k], then stacked * R^{-T}.
                let mut wide = DMatrix::zeros(n, n * k);
                for j in 0..k {
                    let x = smat(g.column(j).as_slice(), n);
                    wide.columns_mut(j * n, n).copy_from(&x);
                }
                let left = rinv * wide;
                let mut tall = DMatrix::zeros(n * k, n);
                for j in 0..k {
                    tall.rows_mut(j * n, n)
                        .copy_from(&left.columns(j * n, n));
                }
                let full = tall * rinv.transpose();
                let mut buf = vec![0.0; d];
                for j in 0..k {
                    let m = full.rows(j * n, n).into_owned();
                    svec_into(&m, &mut buf);
                    out.column_mut(j).copy_from_slice(&buf);
                }
            }
            _ => {
                let mut buf = vec![0.0; d];
                for j in 0..k {
                    self.apply(cone, Op::Winvt, g.column(j).as_slice(), &mut buf);
                    out.column_mut(j).copy_from_slice(&buf);
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol * (1.0 + y.abs()))
    }

    #[test]
    fn svec_round_trip_and_inner_product() {
        let n = 3;
        let m = DMatrix::from_row_slice(3, 3, &[1.0, 2.0, 3.0, 2.0, 5.0, 6.0, 3.0, 6.0, 9.0]);
        let mut v = vec![0.0; 6];
        svec_into(&m, &mut v);
        assert_eq!(smat(&v, n), m);
        let tr: f64 = (&m * &m).trace();
        assert!((dot(&v, &v) - tr).abs() < 1e-12);
        assert_eq!(svec_index(3, 2, 1), 4);
        assert_eq!(svec_index(3, 1, 1), 3);
    }

    fn check_scaling(cone: Cone, s: &[f64], z: &[f64]) {
        let (w, lambda) = Scaling::new(cone, s, z).expect("interior");
        let d = s.len();
        let mut wz = vec![0.0; d];
        let mut wis = vec![0.0; d];
        w.apply(cone, Op::W, z, &mut wz);
        w.apply(cone, Op::Winvt, s, &mut wis);
        assert!(close(&wz, &lambda, 1e-10), "{wz:?} vs {lambda:?}");
        assert!(close(&wis, &lambda, 1e-10), "{wis:?} vs {lambda:?}");
        // W^{-1} W = I and <W x, y> = <x, W^T y>
        let x: Vec<f64> = (0..d).map(|i| (i as f64 * 0.7).sin()).collect();
        let y: Vec<f64> = (0..d).map(|i| (i as f64 * 1.3).cos()).collect();
        let mut t = vec![0.0; d];
        let mut back = vec![0.0; d];
        w.apply(cone, Op::W, &x, &mut t);
        w.apply(cone, Op::Winv, &t, &mut back);
        assert!(close(&back, &x, 1e-10));
        let lhs = dot(&t, &y);
        w.apply(cone, Op::Wt, &y, &mut back);
        assert!((lhs - dot(&x, &back)).abs() < 1e-10);
    }

    #[test]
    fn nt_scaling_identities() {
        check_scaling(Cone::Nonneg(3), &[1.0, 2.0, 0.5], &[3.0, 0.1, 1.0]);
        check_scaling(Cone::Soc(3), &[3.0, 1.0, -1.0], &[2.0, -0.5, 1.2]);
        let mut s = vec![0.0; 6];
        let mut z = vec![0.0; 6];
        svec_into(
            &DMatrix::from_row_slice(3, 3, &[4.0, 1.0, 0.5, 1.0, 3.0, 0.2, 0.5, 0.2, 2.0]),
            &mut s,
        );
        svec_into(
            &DMatrix::from_row_slice(3, 3, &[1.0, -0.3, 0.0, -0.3, 2.0, 0.4, 0.0, 0.4, 1.5]),
            &mut z,
        );
        check_scaling(Cone::Psd(3), &s, &z);
    }

    #[test]
    fn batched_columns_match_single_application() {
        let cone = Cone::Psd(3);
        let mut s = vec![0.0; 6];
        svec_into(
            &DMatrix::from_row_slice(3, 3, &[4.0, 1.0, 0.5, 1.0, 3.0, 0.2, 0.5, 0.2, 2.0]),
            &mut s,
        );
        let mut z = vec![0.0; 6];
        identity(cone, &mut z);
        let (w, _) = Scaling::new(cone, &s, &z).unwrap();
        let g = DMatrix::from_fn(6, 4, |i, j| ((i * 4 + j) as f64).sin());
        let all = w.winvt_columns(cone, &g);
        for j in 0..4 {
            let mut one = vec![0.0; 6];
            w.apply(cone, Op::Winvt, g.column(j).as_slice(), &mut one);
            assert!(close(all.column(j).as_slice(), &one, 1e-12));
        }
    }

    #[test]
    fn jordan_division_inverts_product() {
        let lam = [2.0, 0.5, -0.3];
        let v = [0.3, 1.0, 2.0];
        let mut u = [0.0; 3];
        jordan_div(Cone::Soc(3), &lam, &v, &mut u);
        let mut back = [0.0; 3];
        jordan(Cone::Soc(3), &lam, &u, &mut back);
        assert!(close(&back, &v, 1e-12));

        let cone = Cone::Psd(2);
        let lam = [2.0, 0.0, 0.5];
        let v = [0.3, 1.0, 2.0];
        let mut u = [0.0; 3];
        jordan_div(cone, &lam, &v, &mut u);
        let mut back = [0.0; 3];
        jordan(cone, &lam, &u, &mut back);
        assert!(close(&back, &v, 1e-12));
    }

    #[test]
    fn soc_step_hits_boundary() {
        let x = [2.0, 0.0, 0.0];
        let d = [0.0, 1.0, 0.0];
        assert!((soc_step(&x, &d, 1e9) - 2.0).abs() < 1e-12);
        let d = [-1.0, 0.0, 0.0];
        assert!((soc_step(&x, &d, 1e9) - 2.0).abs() < 1e-12);
        let d = [1.0, 0.5, 0.0];
        assert_eq!(soc_step(&x, &d, 7.0), 7.0);
    }

    #[test]
    fn psd_step_from_diagonal_point() {
        let cone = Cone::Psd(2);
        let lam = [1.0, 0.0, 4.0];
        let d = [0.0, 0.0, -2.0];
        assert!((max_step(cone, &lam, &d, 1e9) - 2.0).abs() < 1e-12);
    }
}
