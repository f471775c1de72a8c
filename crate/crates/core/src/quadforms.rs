//! Coupling matrices and the event / metric evaluators.

use crate::error::CoreError;
use crate::linalg::{ComplexVector, HermitianMatrix};
use crate::scenario::{ErrorSample, Scenario, SystemConfig};

/// Data beamforming matrices `W_i` and artificial-noise matrices `V_t`.
#[derive(Clone, Debug, PartialEq)]
pub struct BeamformerSet {
    pub w: Vec<HermitianMatrix>,
    pub v: Vec<HermitianMatrix>,
}

impl BeamformerSet {
    pub fn zeros(m: usize, u: usize, n: usize) -> Self {
        Self {
            w: vec![HermitianMatrix::zeros(m); u],
            v: vec![HermitianMatrix::zeros(m); n],
        }
    }

    pub fn from_vectors(w: &[ComplexVector], v: &[ComplexVector]) -> Self {
        Self {
            w: w.iter().map(HermitianMatrix::outer).collect(),
            v: v.iter().map(HermitianMatrix::outer).collect(),
        }
    }

    pub fn total_power(&self) -> f64 {
        self.w.iter().chain(&self.v).map(HermitianMatrix::trace).sum()
    }

    /// Check dimensions against `config` and PSD-ness within `1e-8 * trace`.
    pub fn validate(&self, config: &SystemConfig) -> Result<(), CoreError> {
        if self.w.len() != config.u || self.v.len() != config.n {
            return Err(CoreError::Config("beamformer count mismatch".into()));
        }
        for x in self.w.iter().chain(&self.v) {
            if x.dim() != config.m {
                return Err(CoreError::Config("beamformer dimension mismatch".into()));
            }
            let min_eig = x.min_eigenvalue();
            if min_eig < -1e-8 * x.trace().abs().max(f64::MIN_POSITIVE) {
                return Err(CoreError::NotPsd { min_eig });
            }
        }
        Ok(())
    }
}

/// `A_i`, `B_i^(t)` (indexed `[i][t]`) and `C`.
#[derive(Clone, Debug, PartialEq)]
pub struct CouplingMatrices {
    pub a: Vec<HermitianMatrix>,
    pub b: Vec<Vec<HermitianMatrix>>,
    pub c: HermitianMatrix,
}

pub fn build_couplings(bf: &BeamformerSet, config: &SystemConfig) -> CouplingMatrices {
    let mut c = HermitianMatrix::zeros(config.m);
    for x in bf.w.iter().chain(&bf.v) {
        c.add_scaled(x, 1.0);
    }
    let a = bf
        .w
        .iter()
        .zip(&config.gamma)
        .map(|(w, g)| {
            let mut a = w.scaled(1.0 + 1.0 / g);
            a.add_scaled(&c, -1.0);
            a
        })
        .collect();
    let b = bf
        .w
        .iter()
        .zip(&config.gamma_leak)
        .map(|(w, caps)| {
            caps.iter()
                .map(|g| {
                    let mut b = c.clone();
                    b.add_scaled(w, -(1.0 + 1.0 / g));
                    b
                })
                .collect()
        })
        .collect();
    CouplingMatrices { a, b, c }
}

/// Event values; nonnegative means the constraint holds for that draw.
#[derive(Clone, Debug, PartialEq)]
pub struct EventValues {
    pub f: Vec<f64>,
    pub k: Vec<Vec<f64>>,
    pub d: Vec<f64>,
}

/// `x^H S A S x + 2 Re{x^H S A h} + h^H A h` with `S = cov^{1/2}`.
fn expanded(a: &HermitianMatrix, s: &HermitianMatrix, h: &ComplexVector, x: &ComplexVector) -> f64 {
    let am = a.to_dmatrix();
    let sm = s.to_dmatrix();
    let sx = &sm * &x.0;
    let quad = sx.dotc(&(&am * &sx)).re;
    let lin = 2.0 * sx.dotc(&(&am * &h.0)).re;
    quad + lin + a.quad_form(h)
}

pub fn eval_events(cm: &CouplingMatrices, scenario: &Scenario, sample: &ErrorSample) -> EventValues {
    let cfg = &scenario.config;
    let f = (0..cfg.u)
        .map(|i| {
            expanded(&cm.a[i], scenario.h_sqrt(i), &scenario.h_est[i], &sample.e[i]) - cfg.sigma2_i[i]
        })
        .collect();
    let k = (0..cfg.u)
        .map(|i| {
            (0..cfg.n)
                .map(|t| {
                    expanded(&cm.b[i][t], scenario.g_sqrt(t), &scenario.g_est[t], &sample.r[t])
                        + cfg.sigma2_e[t]
                })
                .collect()
        })
        .collect();
    let d = (0..cfg.n)
        .map(|t| expanded(&cm.c, scenario.g_sqrt(t), &scenario.g_est[t], &sample.r[t]) - cfg.p_req[t])
        .collect();
    EventValues { f, k, d }
}

/// Realized SINRs, leakage SINRs (`[i][t]`) and harvested powers.
#[derive(Clone, Debug, PartialEq)]
pub struct RealizedMetrics {
    pub sinr: Vec<f64>,
    pub leak_sinr: Vec<Vec<f64>>,
    pub power: Vec<f64>,
}

fn perturbed(est: &ComplexVector, s: &HermitianMatrix, x: &ComplexVector) -> ComplexVector {
    ComplexVector(&est.0 + s.to_dmatrix() * &x.0)
}

/// Metrics from per-beam received powers; `rx[j]` is the power of data beam
/// `j` and `an` the total artificial-noise power at one receiver.
fn sinr(rx: &[f64], an: f64, i: usize, noise: f64) -> f64 {
    let interference: f64 = rx.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, p)| p).sum();
    rx[i] / (interference + an + noise)
}

pub fn eval_realized(bf: &BeamformerSet, scenario: &Scenario, sample: &ErrorSample) -> RealizedMetrics {
    let cfg = &scenario.config;
    let sinr_vals = (0..cfg.u)
        .map(|i| {
            let h = perturbed(&scenario.h_est[i], scenario.h_sqrt(i), &sample.e[i]);
            let rx: Vec<f64> = bf.w.iter().map(|w| w.quad_form(&h)).collect();
            let an: f64 = bf.v.iter().map(|v| v.quad_form(&h)).sum();
            sinr(&rx, an, i, cfg.sigma2_i[i])
        })
        .collect();
    let mut leak = vec![vec![0.0; cfg.n]; cfg.u];
    let mut power = vec![0.0; cfg.n];
    for t in 0..cfg.n {
        let g = perturbed(&scenario.g_est[t], scenario.g_sqrt(t), &sample.r[t]);
        let rx: Vec<f64> = bf.w.iter().map(|w| w.quad_form(&g)).collect();
        let an: f64 = bf.v.iter().map(|v| v.quad_form(&g)).sum();
        for (i, row) in leak.iter_mut().enumerate() {
            row[t] = sinr(&rx, an, i, cfg.sigma2_e[t]);
        }
        power[t] = rx.iter().sum::<f64>() + an;
    }
    RealizedMetrics {
        sinr: sinr_vals,
        leak_sinr: leak,
        power,
    }
}

/// Same metrics computed directly from beamforming vectors.
pub fn eval_realized_vectors(
    w: &[ComplexVector],
    v: &[ComplexVector],
    scenario: &Scenario,
    sample: &ErrorSample,
) -> RealizedMetrics {
    let cfg = &scenario.config;
    let gain = |b: &ComplexVector, h: &ComplexVector| b.0.dotc(&h.0).norm_sqr();
    let sinr_vals = (0..cfg.u)
        .map(|i| {
            let h = perturbed(&scenario.h_est[i], scenario.h_sqrt(i), &sample.e[i]);
            let rx: Vec<f64> = w.iter().map(|b| gain(b, &h)).collect();
            let an: f64 = v.iter().map(|b| gain(b, &h)).sum();
            sinr(&rx, an, i, cfg.sigma2_i[i])
        })
        .collect();
    let mut leak = vec![vec![0.0; cfg.n]; cfg.u];
    let mut power = vec![0.0; cfg.n];
    for t in 0..cfg.n {
        let g = perturbed(&scenario.g_est[t], scenario.g_sqrt(t), &sample.r[t]);
        let rx: Vec<f64> = w.iter().map(|b| gain(b, &g)).collect();
        let an: f64 = v.iter().map(|b| gain(b, &g)).sum();
        for (i, row) in leak.iter_mut().enumerate() {
            row[t] = sinr(&rx, an, i, cfg.sigma2_e[t]);
        }
        power[t] = rx.iter().sum::<f64>() + an;
    }
    RealizedMetrics {
        sinr: sinr_vals,
        leak_sinr: leak,
        power,
    }
}

/// Which chance constraint a row of the design problem encodes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Family {
    Sinr(usize),
    Leakage(usize, usize),
    Power(usize),
}

impl Family {
    pub fn label(&self) -> String {
        match *self {
            Family::Sinr(i) => format!("sinr{}", i + 1),
            Family::Leakage(i, t) => format!("leak{}_{}", i + 1, t + 1),
            Family::Power(t) => format!("power{}", t + 1),
        }
    }
}

/// One chance constraint `Pr(x^H S Q S x + 2 Re{x^H S Q h} + h^H Q h + constant >= 0)`
/// where `Q = sum_j coefs[j] X_j` over the matrices `W_1..W_U, V_1..V_N`.
#[derive(Clone, Debug)]
pub struct ChanceConstraint {
    pub family: Family,
    pub sqrt_cov: HermitianMatrix,
    pub channel: ComplexVector,
    pub coefs: Vec<f64>,
    pub constant: f64,
    pub tolerance: f64,
}

impl ChanceConstraint {
    /// `Q` at the given beamformers.
    pub fn coupling(&self, bf: &BeamformerSet) -> HermitianMatrix {
        let mut q = HermitianMatrix::zeros(self.channel.len());
        for (x, c) in bf.w.iter().chain(&bf.v).zip(&self.coefs) {
            if *c != 0.0 {
                q.add_scaled(x, *c);
            }
        }
        q
    }

    /// Channel energy `||h||^2 + tr(S^2)`, used to normalise conic rows.
    pub fn unit(&self) -> f64 {
        let e = self.channel.norm_sqr() + self.sqrt_cov.frobenius_norm().powi(2);
        if e > 0.0 { e } else { 1.0 }
    }
}

/// All chance constraints in the order SINR (per IR), leakage (IR outer,
/// ER inner), power (per ER). Leakage rows are skipped unless requested.
pub fn chance_constraints(scenario: &Scenario, include_leakage: bool) -> Vec<ChanceConstraint> {
    let cfg = &scenario.config;
    let nm = cfg.u + cfg.n;
    let mut out = Vec::new();
    for i in 0..cfg.u {
        let mut coefs = vec![-1.0; nm];
        coefs[i] = 1.0 / cfg.gamma[i];
        out.push(ChanceConstraint {
            family: Family::Sinr(i),
            sqrt_cov: scenario.h_sqrt(i).clone(),
            channel: scenario.h_est[i].clone(),
            coefs,
            constant: -cfg.sigma2_i[i],
            tolerance: cfg.rho[i],
        });
    }
    if include_leakage {
        for i in 0..cfg.u {
            for t in 0..cfg.n {
                let mut coefs = vec![1.0; nm];
                coefs[i] = -1.0 / cfg.gamma_leak[i][t];
                out.push(ChanceConstraint {
                    family: Family::Leakage(i, t),
                    sqrt_cov: scenario.g_sqrt(t).clone(),
                    channel: scenario.g_est[t].clone(),
                    coefs,
                    constant: cfg.sigma2_e[t],
                    tolerance: cfg.rho_leak[i][t],
                });
            }
        }
    }
    for t in 0..cfg.n {
        out.push(ChanceConstraint {
            family: Family::Power(t),
            sqrt_cov: scenario.g_sqrt(t).clone(),
            channel: scenario.g_est[t].clone(),
            coefs: vec![1.0; nm],
            constant: -cfg.p_req[t],
            tolerance: cfg.varrho[t],
        });
    }
    out
}
