//! Spectral and chi-square routines against independent reference code.

use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use swipt_core::linalg::{chi2_cdf, chi2_inv_cdf, embed_real, herm_sqrt, s_plus};
use swipt_core::{HermitianMatrix, C64};

/// Cyclic Jacobi rotations; sorted ascending.
fn jacobi_eigenvalues(a: &DMatrix<f64>) -> Vec<f64> {
    let n = a.nrows();
    let mut a = a.clone();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)] * a[(i, j)])
            .sum();
        if off < 1e-26 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[(p, q)].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * a[(p, q)]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| a[(i, i)]).collect();
    ev.sort_by(f64::total_cmp);
    ev
}

fn random_complex(rng: &mut ChaCha8Rng, r: usize, c: usize) -> DMatrix<C64> {
    DMatrix::from_fn(r, c, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
}

fn random_hermitian(seed: u64, n: usize) -> HermitianMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let b = random_complex(&mut rng, n, n);
    HermitianMatrix::from_dmatrix(&((&b + b.adjoint()) * C64::new(0.5, 0.0)))
}

fn random_psd(seed: u64, n: usize) -> HermitianMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let b = random_complex(&mut rng, n, n);
    HermitianMatrix::from_dmatrix(&(&b * b.adjoint()))
}

/// Composite Simpson rule on the density, in log space for stability.
fn chi2_cdf_simpson(m: u32, x: f64) -> f64 {
    let k = m as f64 / 2.0;
    let ln_norm = k * std::f64::consts::LN_2 + ln_gamma_lanczos(k);
    let pdf = |t: f64| {
        if t <= 0.0 {
            if m == 2 { 0.5 } else { 0.0 }
        } else {
            ((k - 1.0) * t.ln() - t / 2.0 - ln_norm).exp()
        }
    };
    let n = 20_000;
    let h = x / n as f64;
    let mut s = pdf(0.0) + pdf(x);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * pdf(i as f64 * h);
    }
    s * h / 3.0
}

fn ln_gamma_lanczos(x: f64) -> f64 {
    const G: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.5203681218851,
        -1259.1392167224028,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507343278686905,
        -0.13857109526572012,
        9.984_369_578_019_572e-6,
        1.5056327351493116e-7,
    ];
    let x = x - 1.0;
    let mut a = G[0];
    let t = x + 7.5;
    for (i, g) in G.iter().enumerate().skip(1) {
        a += g / (x + i as f64);
    }
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

fn invert_by_bisection(m: u32, p: f64) -> f64 {
    let (mut lo, mut hi) = (0.0, 200.0);
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if chi2_cdf_simpson(m, mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn sqrt_of_identity_and_diagonal() {
    let i2 = HermitianMatrix::identity(2);
    assert_eq!(herm_sqrt(&i2).unwrap().to_dmatrix(), i2.to_dmatrix());
    let s = herm_sqrt(&HermitianMatrix::from_diagonal(&[4.0, 9.0])).unwrap();
    assert!((s.get(0, 0).re - 2.0).abs() < 1e-14);
    assert!((s.get(1, 1).re - 3.0).abs() < 1e-14);
    assert!(s.get(0, 1).norm() < 1e-14);
}

#[test]
fn sqrt_squares_back_and_matches_jacobi_spectrum() {
    let a = random_psd(11, 4);
    let s = herm_sqrt(&a).unwrap();
    let back = s.to_dmatrix() * s.to_dmatrix();
    assert!((back - a.to_dmatrix()).norm() < 1e-9);
    // eigenvalues of the root are the roots of the eigenvalues
    let ea = jacobi_eigenvalues(&embed_real(&a));
    let es = jacobi_eigenvalues(&embed_real(&s));
    for (x, y) in ea.iter().zip(&es) {
        assert!((x.max(0.0).sqrt() - y).abs() < 1e-9, "{x} {y}");
    }
}

#[test]
fn embedding_of_pauli_y() {
    let mut a = HermitianMatrix::zeros(2);
    a.set(0, 1, C64::new(0.0, 1.0));
    let ev = jacobi_eigenvalues(&embed_real(&a));
    let want = [-1.0, -1.0, 1.0, 1.0];
    for (x, y) in ev.iter().zip(want) {
        assert!((x - y).abs() < 1e-12);
    }
    let one = embed_real(&HermitianMatrix::identity(1));
    assert_eq!(one, DMatrix::identity(2, 2));
}

#[test]
fn library_eigenvalues_agree_with_jacobi() {
    let a = random_hermitian(3, 3);
    let mut doubled: Vec<f64> = a.eigenvalues().iter().flat_map(|v| [*v, *v]).collect();
    doubled.sort_by(f64::total_cmp);
    for (x, y) in doubled.iter().zip(jacobi_eigenvalues(&embed_real(&a))) {
        assert!((x - y).abs() < 1e-10);
    }
}

#[test]
fn s_plus_cases() {
    assert_eq!(s_plus(&HermitianMatrix::identity(3)), 1.0);
    assert_eq!(s_plus(&HermitianMatrix::identity(3).scaled(-1.0)), 0.0);
    assert!((s_plus(&HermitianMatrix::from_diagonal(&[3.0, -1.0])) - 3.0).abs() < 1e-14);
}

#[test]
fn two_degrees_of_freedom_is_exponential() {
    assert!((chi2_inv_cdf(2, 0.5).unwrap() - 1.3862944).abs() < 1e-7);
    assert!((chi2_inv_cdf(2, 0.9).unwrap() - 4.6051702).abs() < 1e-7);
    for p in [0.01f64, 0.1, 0.3, 0.5, 0.9, 0.99] {
        let closed = -2.0 * (1.0f64 - p).ln();
        assert!((chi2_inv_cdf(2, p).unwrap() - closed).abs() < 1e-9);
    }
}

#[test]
fn inverse_matches_integrated_density() {
    let oracle = invert_by_bisection(12, 0.9);
    let got = chi2_inv_cdf(12, 0.9).unwrap();
    assert!((got - oracle).abs() < 1e-6, "{got} vs {oracle}");
    assert!((chi2_cdf(12, got) - 0.9).abs() < 1e-10);
    for m in [4, 12, 16] {
        let x = chi2_inv_cdf(m, 0.7).unwrap();
        assert!((chi2_cdf_simpson(m, x) - 0.7).abs() < 1e-7);
    }
}

proptest! {
    #[test]
    fn embedding_doubles_the_spectrum(seed in 0u64..1000, n in 1usize..5) {
        let a = random_hermitian(seed, n);
        let mut doubled: Vec<f64> = a.eigenvalues().iter().flat_map(|v| [*v, *v]).collect();
        doubled.sort_by(f64::total_cmp);
        let emb = jacobi_eigenvalues(&embed_real(&a));
        for (x, y) in doubled.iter().zip(&emb) {
            prop_assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn root_is_psd_and_reconstructs(seed in 0u64..1000, n in 1usize..6) {
        let a = random_psd(seed, n);
        let s = herm_sqrt(&a).unwrap();
        prop_assert!(s.min_eigenvalue() > -1e-12);
        let err = (s.to_dmatrix() * s.to_dmatrix() - a.to_dmatrix()).norm();
        prop_assert!(err < 1e-9 * (1.0 + a.frobenius_norm()));
    }

    #[test]
    fn cdf_and_inverse_round_trip(m in 1u32..30, p in 0.001f64..0.999) {
        let x = chi2_inv_cdf(m, p).unwrap();
        prop_assert!((chi2_cdf(m, x) - p).abs() < 1e-10);
    }
}
