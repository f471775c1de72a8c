//! System configuration, channel estimates, error covariances and the
//! counter-based CSI-error sampler.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::CoreError;
use crate::linalg::{herm_sqrt, ComplexVector, HermitianMatrix, C64};

pub const SPEED_OF_LIGHT: f64 = 3e8;

/// RNG stream reserved for channel generation; error samples use their index.
const CHANNEL_STREAM: u64 = u64::MAX;

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn watts_to_dbm(w: f64) -> f64 {
    10.0 * w.log10() + 30.0
}

/// QoS targets, tolerances and noise levels, all in linear units / watts.
/// Per-pair quantities are indexed `[ir][er]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    pub m: usize,
    pub u: usize,
    pub n: usize,
    pub sigma2_i: Vec<f64>,
    pub sigma2_e: Vec<f64>,
    pub gamma: Vec<f64>,
    pub gamma_leak: Vec<Vec<f64>>,
    pub p_req: Vec<f64>,
    pub rho: Vec<f64>,
    pub rho_leak: Vec<Vec<f64>>,
    pub varrho: Vec<f64>,
}

/// Scalar settings that expand into a [`SystemConfig`] with identical
/// per-receiver values.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UniformTargets {
    pub gamma_db: f64,
    pub gamma_leak_db: f64,
    pub p_req_dbm: f64,
    pub noise_i_dbm: f64,
    pub noise_e_dbm: f64,
    pub rho: f64,
    pub rho_leak: f64,
    pub varrho: f64,
}

impl Default for UniformTargets {
    fn default() -> Self {
        Self {
            gamma_db: 10.0,
            gamma_leak_db: -5.0,
            p_req_dbm: -10.0,
            noise_i_dbm: -70.0,
            noise_e_dbm: -70.0,
            rho: 0.1,
            rho_leak: 0.1,
            varrho: 0.1,
        }
    }
}

impl SystemConfig {
    pub fn uniform(m: usize, u: usize, n: usize, t: &UniformTargets) -> Self {
        Self {
            m,
            u,
            n,
            sigma2_i: vec![dbm_to_watts(t.noise_i_dbm); u],
            sigma2_e: vec![dbm_to_watts(t.noise_e_dbm); n],
            gamma: vec![db_to_linear(t.gamma_db); u],
            gamma_leak: vec![vec![db_to_linear(t.gamma_leak_db); n]; u],
            p_req: vec![dbm_to_watts(t.p_req_dbm); n],
            rho: vec![t.rho; u],
            rho_leak: vec![vec![t.rho_leak; n]; u],
            varrho: vec![t.varrho; n],
        }
    }

    /// Set every outage tolerance to `rho`.
    pub fn with_outage(mut self, rho: f64) -> Self {
        self.rho.iter_mut().for_each(|v| *v = rho);
        self.rho_leak.iter_mut().flatten().for_each(|v| *v = rho);
        self.varrho.iter_mut().for_each(|v| *v = rho);
        self
    }

    pub fn validate(&self) -> Result<(), CoreError> {
        let bad = |msg: String| Err(CoreError::Config(msg));
        if self.m < 2 {
            return bad(format!("antenna count {} must exceed 1", self.m));
        }
        if self.u < 1 {
            return bad("at least one information receiver is required".into());
        }
        let lens = [
            ("sigma2_i", self.sigma2_i.len(), self.u),
            ("gamma", self.gamma.len(), self.u),
            ("rho", self.rho.len(), self.u),
            ("sigma2_e", self.sigma2_e.len(), self.n),
            ("p_req", self.p_req.len(), self.n),
            ("varrho", self.varrho.len(), self.n),
            ("gamma_leak", self.gamma_leak.len(), self.u),
            ("rho_leak", self.rho_leak.len(), self.u),
        ];
        for (name, got, want) in lens {
            if got != want {
                return bad(format!("{name} has {got} entries, expected {want}"));
            }
        }
        for (name, rows) in [("gamma_leak", &self.gamma_leak), ("rho_leak", &self.rho_leak)] {
            if rows.iter().any(|r| r.len() != self.n) {
                return bad(format!("{name} rows must have {} entries", self.n));
            }
        }
        let positive = self
            .sigma2_i
            .iter()
            .chain(&self.sigma2_e)
            .chain(&self.gamma)
            .chain(self.gamma_leak.iter().flatten())
            .chain(&self.p_req);
        if positive.clone().any(|v| !(*v > 0.0 && v.is_finite())) {
            return bad("targets and noise powers must be positive and finite".into());
        }
        let tolerances = self
            .rho
            .iter()
            .chain(self.rho_leak.iter().flatten())
            .chain(&self.varrho);
        if tolerances.clone().any(|v| !(*v > 0.0 && *v <= 1.0)) {
            return bad("outage tolerances must lie in (0, 1]".into());
        }
        Ok(())
    }
}

/// Free-space style amplitude gain `(c / (4 pi fc)) * l^(-kappa/2)`.
pub fn path_gain(l: f64, fc: f64, kappa: f64) -> Result<f64, CoreError> {
    if !(l > 0.0) || !(fc > 0.0) {
        return Err(CoreError::Domain(format!(
            "distance {l} and carrier {fc} must be positive"
        )));
    }
    Ok(SPEED_OF_LIGHT / (4.0 * std::f64::consts::PI * fc) * l.powf(-kappa / 2.0))
}

/// Distances and propagation constants used to draw channel estimates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Geometry {
    pub l_ir: Vec<f64>,
    pub l_er: Vec<f64>,
    pub fc: f64,
    pub kappa: f64,
    /// Error covariance as a fraction of the squared path gain.
    pub epsilon: f64,
}

impl Geometry {
    /// IRs at 100 m, ERs at 9 m, 900 MHz, exponent 2.7, epsilon 0.001.
    pub fn reference(u: usize, n: usize) -> Self {
        Self {
            l_ir: vec![100.0; u],
            l_er: vec![9.0; n],
            fc: 9e8,
            kappa: 2.7,
            epsilon: 1e-3,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Scenario {
    pub config: SystemConfig,
    pub h_est: Vec<ComplexVector>,
    pub g_est: Vec<ComplexVector>,
    pub h_cov: Vec<HermitianMatrix>,
    pub g_cov: Vec<HermitianMatrix>,
    pub seed: u64,
    h_sqrt: Vec<HermitianMatrix>,
    g_sqrt: Vec<HermitianMatrix>,
}

impl Scenario {
    pub fn new(
        config: SystemConfig,
        h_est: Vec<ComplexVector>,
        g_est: Vec<ComplexVector>,
        h_cov: Vec<HermitianMatrix>,
        g_cov: Vec<HermitianMatrix>,
        seed: u64,
    ) -> Result<Self, CoreError> {
        config.validate()?;
        let m = config.m;
        if h_est.len() != config.u || h_cov.len() != config.u {
            return Err(CoreError::Config("IR channel count differs from U".into()));
        }
        if g_est.len() != config.n || g_cov.len() != config.n {
            return Err(CoreError::Config("ER channel count differs from N".into()));
        }
        if h_est.iter().chain(&g_est).any(|v| v.len() != m)
            || h_cov.iter().chain(&g_cov).any(|c| c.dim() != m)
        {
            return Err(CoreError::Config(format!("channel dimensions must equal M = {m}")));
        }
        let h_sqrt = h_cov.iter().map(herm_sqrt).collect::<Result<_, _>>()?;
        let g_sqrt = g_cov.iter().map(herm_sqrt).collect::<Result<_, _>>()?;
        Ok(Self {
            config,
            h_est,
            g_est,
            h_cov,
            g_cov,
            seed,
            h_sqrt,
            g_sqrt,
        })
    }

    /// `H_i^{1/2}`.
    pub fn h_sqrt(&self, i: usize) -> &HermitianMatrix {
        &self.h_sqrt[i]
    }

    /// `G_t^{1/2}`.
    pub fn g_sqrt(&self, t: usize) -> &HermitianMatrix {
        &self.g_sqrt[t]
    }

    /// Copy with every error covariance set to zero.
    pub fn without_errors(&self) -> Self {
        let m = self.config.m;
        let zero = |k| vec![HermitianMatrix::zeros(m); k];
        Self {
            h_cov: zero(self.config.u),
            g_cov: zero(self.config.n),
            h_sqrt: zero(self.config.u),
            g_sqrt: zero(self.config.n),
            ..self.clone()
        }
    }

    /// Copy with a different configuration of the same dimensions.
    pub fn with_config(&self, config: SystemConfig) -> Result<Self, CoreError> {
        config.validate()?;
        if (config.m, config.u, config.n) != (self.config.m, self.config.u, self.config.n) {
            return Err(CoreError::Config("dimensions must not change".into()));
        }
        Ok(Self {
            config,
            ..self.clone()
        })
    }
}

fn complex_normal(rng: &mut ChaCha8Rng, m: usize) -> ComplexVector {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    ComplexVector::from_vec(
        (0..m)
            .map(|_| {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                C64::new(s * re, s * im)
            })
            .collect(),
    )
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Draw estimated channels `gain * CN(0, I)` and covariances
/// `epsilon * gain^2 * I`. Deterministic in `seed`.
pub fn generate_scenario(
    config: &SystemConfig,
    geometry: &Geometry,
    seed: u64,
) -> Result<Scenario, CoreError> {
    config.validate()?;
    if geometry.l_ir.len() != config.u || geometry.l_er.len() != config.n {
        return Err(CoreError::Config("one distance per receiver is required".into()));
    }
    if !(geometry.epsilon >= 0.0) {
        return Err(CoreError::Domain("epsilon must be nonnegative".into()));
    }
    let m = config.m;
    let mut rng = stream_rng(seed, CHANNEL_STREAM);
    let mut draw = |l: f64| -> Result<(ComplexVector, HermitianMatrix), CoreError> {
        let gain = path_gain(l, geometry.fc, geometry.kappa)?;
        let mut v = complex_normal(&mut rng, m);
        v.scale_mut(gain);
        let cov = HermitianMatrix::identity(m).scaled(geometry.epsilon * gain * gain);
        Ok((v, cov))
    };
    let (h_est, h_cov): (Vec<_>, Vec<_>) = geometry
        .l_ir
        .iter()
        .map(|&l| draw(l))
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .unzip();
    let (g_est, g_cov): (Vec<_>, Vec<_>) = geometry
        .l_er
        .iter()
        .map(|&l| draw(l))
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .unzip();
    Scenario::new(config.clone(), h_est, g_est, h_cov, g_cov, seed)
}

/// Unit-covariance error vectors for one Monte-Carlo draw.
#[derive(Clone, Debug, PartialEq)]
pub struct ErrorSample {
    pub e: Vec<ComplexVector>,
    pub r: Vec<ComplexVector>,
}

/// Sample `index` of the error stream for `seed`; independent of any other index.
pub fn draw_error(config: &SystemConfig, seed: u64, index: u64) -> ErrorSample {
    let mut rng = stream_rng(seed, index);
    let e = (0..config.u).map(|_| complex_normal(&mut rng, config.m)).collect();
    let r = (0..config.n).map(|_| complex_normal(&mut rng, config.m)).collect();
    ErrorSample { e, r }
}

pub fn draw_errors(scenario: &Scenario, count: usize, seed: u64) -> Vec<ErrorSample> {
    (0..count as u64)
        .map(|k| draw_error(&scenario.config, seed, k))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> SystemConfig {
        SystemConfig::uniform(6, 2, 2, &UniformTargets::default())
    }

    #[test]
    fn unit_distance_gain() {
        let g = path_gain(1.0, 9e8, 2.7).unwrap();
        assert!((g - 2.6526e-2).abs() < 1e-6);
        assert!(path_gain(0.0, 9e8, 2.7).is_err());
        assert!(path_gain(1.0, -1.0, 2.7).is_err());
    }

    #[test]
    fn unit_conversions() {
        assert!((dbm_to_watts(-70.0) - 1e-10).abs() < 1e-22);
        assert!((dbm_to_watts(-10.0) - 1e-4).abs() < 1e-16);
        assert!((db_to_linear(-5.0) - 0.316227766).abs() < 1e-9);
        assert!((watts_to_dbm(1.0) - 30.0).abs() < 1e-12);
    }

    #[test]
    fn config_validation() {
        assert!(cfg().validate().is_ok());
        let mut c = cfg();
        c.m = 1;
        assert!(c.validate().is_err());
        let mut c = cfg();
        c.rho[0] = 0.0;
        assert!(c.validate().is_err());
        let mut c = cfg();
        c.gamma_leak[1].pop();
        assert!(c.validate().is_err());
    }

    #[test]
    fn zero_epsilon_gives_zero_covariances_and_roots() {
        let mut geo = Geometry::reference(2, 2);
        geo.epsilon = 0.0;
        let sc = generate_scenario(&cfg(), &geo, 3).unwrap();
        for i in 0..2 {
            assert_eq!(sc.h_cov[i], HermitianMatrix::zeros(6));
            assert_eq!(sc.h_sqrt(i).frobenius_norm(), 0.0);
            assert_eq!(sc.g_sqrt(i).frobenius_norm(), 0.0);
        }
    }

    #[test]
    fn scenario_is_deterministic() {
        let geo = Geometry::reference(2, 2);
        let a = generate_scenario(&cfg(), &geo, 42).unwrap();
        let b = generate_scenario(&cfg(), &geo, 42).unwrap();
        let c = generate_scenario(&cfg(), &geo, 43).unwrap();
        assert_eq!(a.h_est, b.h_est);
        assert_eq!(a.g_est, b.g_est);
        assert_ne!(a.h_est, c.h_est);
    }

    #[test]
    fn error_stream_is_indexed() {
        let sc = generate_scenario(&cfg(), &Geometry::reference(2, 2), 1).unwrap();
        let all = draw_errors(&sc, 5, 9);
        assert_eq!(all[3], draw_error(&sc.config, 9, 3));
        assert_ne!(all[3], all[4]);
        assert!(draw_errors(&sc, 0, 9).is_empty());
    }
}
