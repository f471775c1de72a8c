//! Versioned JSON scenario files.
//!
//! Targets are given in dB / dBm and converted on load. Any per-receiver
//! field takes either one number (applied to every receiver) or a list with
//! one entry per receiver; leakage fields take `U * N` entries in IR-major
//! order. Every field except `version` has a default, so `{"version": 1}`
//! is the reference setup.

use serde::{Deserialize, Serialize};
use swipt_core::scenario::{db_to_linear, dbm_to_watts, generate_scenario, Geometry, SystemConfig};
use swipt_core::Scenario;

use crate::error::CliError;

pub const FORMAT_VERSION: u32 = 1;

/// Upper bound on antennas and receivers accepted from a file.
pub const MAX_DIM: usize = 1024;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany {
    One(f64),
    Many(Vec<f64>),
}

impl OneOrMany {
    fn expand(&self, len: usize, name: &str) -> Result<Vec<f64>, CliError> {
        match self {
            OneOrMany::One(x) => Ok(vec![*x; len]),
            OneOrMany::Many(v) if v.len() == len => Ok(v.clone()),
            OneOrMany::Many(v) => Err(CliError::Config(format!("{name}: expected 1 or {len} values, got {}", v.len()))),
        }
    }
}

impl From<f64> for OneOrMany {
    fn from(x: f64) -> Self {
        OneOrMany::One(x)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GeometryFile {
    pub ir_distance_m: OneOrMany,
    pub er_distance_m: OneOrMany,
    pub carrier_hz: f64,
    pub path_loss_exponent: f64,
    /// Error variance relative to the squared path gain.
    pub error_variance: f64,
}

impl Default for GeometryFile {
    fn default() -> Self {
        Self {
            ir_distance_m: 100.0.into(),
            er_distance_m: 9.0.into(),
            carrier_hz: 9e8,
            path_loss_exponent: 2.7,
            error_variance: 1e-3,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioFile {
    pub version: u32,
    pub antennas: usize,
    pub info_receivers: usize,
    pub energy_receivers: usize,
    pub sinr_db: OneOrMany,
    pub leakage_sinr_db: OneOrMany,
    pub power_req_dbm: OneOrMany,
    pub noise_ir_dbm: OneOrMany,
    pub noise_er_dbm: OneOrMany,
    pub outage_sinr: OneOrMany,
    pub outage_leakage: OneOrMany,
    pub outage_power: OneOrMany,
    pub geometry: GeometryFile,
    pub seed: u64,
}

impl Default for ScenarioFile {
    fn default() -> Self {
        Self {
            version: FORMAT_VERSION,
            antennas: 6,
            info_receivers: 2,
            energy_receivers: 2,
            sinr_db: 10.0.into(),
            leakage_sinr_db: (-5.0).into(),
            power_req_dbm: (-10.0).into(),
            noise_ir_dbm: (-70.0).into(),
            noise_er_dbm: (-70.0).into(),
            outage_sinr: 0.1.into(),
            outage_leakage: 0.1.into(),
            outage_power: 0.1.into(),
            geometry: GeometryFile::default(),
            seed: 1,
        }
    }
}

fn rows(flat: Vec<f64>, u: usize, n: usize) -> Vec<Vec<f64>> {
    if n == 0 {
        return vec![Vec::new(); u];
    }
    flat.chunks(n).map(<[f64]>::to_vec).collect()
}

impl ScenarioFile {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let raw: serde_json::Value = serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        if raw.get("version").is_none() {
            return Err(CliError::Config("missing field `version`".into()));
        }
        let f: ScenarioFile = serde_json::from_value(raw).map_err(|e| CliError::Config(e.to_string()))?;
        if f.version != FORMAT_VERSION {
            return Err(CliError::Config(format!("unsupported format version {} (expected {FORMAT_VERSION})", f.version)));
        }
        Ok(f)
    }

    pub fn load(path: &std::path::Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn system(&self) -> Result<SystemConfig, CliError> {
        let (m, u, n) = (self.antennas, self.info_receivers, self.energy_receivers);
        if m > MAX_DIM || u > MAX_DIM || n > MAX_DIM {
            return Err(CliError::Config(format!("dimensions above {MAX_DIM} are not supported")));
        }
        let db = |v: Vec<f64>| v.into_iter().map(db_to_linear).collect::<Vec<_>>();
        let dbm = |v: Vec<f64>| v.into_iter().map(dbm_to_watts).collect::<Vec<_>>();
        let gamma_leak = rows(db(self.leakage_sinr_db.expand(u * n, "leakage_sinr_db")?), u, n);
        let rho_leak = rows(self.outage_leakage.expand(u * n, "outage_leakage")?, u, n);
        let cfg = SystemConfig {
            m,
            u,
            n,
            sigma2_i: dbm(self.noise_ir_dbm.expand(u, "noise_ir_dbm")?),
            sigma2_e: dbm(self.noise_er_dbm.expand(n, "noise_er_dbm")?),
            gamma: db(self.sinr_db.expand(u, "sinr_db")?),
            gamma_leak,
            p_req: dbm(self.power_req_dbm.expand(n, "power_req_dbm")?),
            rho: self.outage_sinr.expand(u, "outage_sinr")?,
            rho_leak,
            varrho: self.outage_power.expand(n, "outage_power")?,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn geometry(&self) -> Result<Geometry, CliError> {
        if self.info_receivers > MAX_DIM || self.energy_receivers > MAX_DIM {
            return Err(CliError::Config(format!("dimensions above {MAX_DIM} are not supported")));
        }
        let g = &self.geometry;
        Ok(Geometry {
            l_ir: g.ir_distance_m.expand(self.info_receivers, "ir_distance_m")?,
            l_er: g.er_distance_m.expand(self.energy_receivers, "er_distance_m")?,
            fc: g.carrier_hz,
            kappa: g.path_loss_exponent,
            epsilon: g.error_variance,
        })
    }

    /// Channels drawn from the file's seed.
    pub fn scenario(&self) -> Result<Scenario, CliError> {
        self.scenario_with_seed(self.seed)
    }

    pub fn scenario_with_seed(&self, seed: u64) -> Result<Scenario, CliError> {
        Ok(generate_scenario(&self.system()?, &self.geometry()?, seed)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use swipt_core::scenario::UniformTargets;

    #[test]
    fn minimal_file_is_the_reference_setup() {
        let f = ScenarioFile::parse(r#"{"version": 1}"#).unwrap();
        let want = SystemConfig::uniform(6, 2, 2, &UniformTargets::default());
        assert_eq!(f.system().unwrap(), want);
        assert_eq!(f.geometry().unwrap(), Geometry::reference(2, 2));
    }

    #[test]
    fn lists_and_scalars() {
        let f = ScenarioFile::parse(
            r#"{"version": 1, "info_receivers": 2, "energy_receivers": 1,
                "sinr_db": [0, 10], "leakage_sinr_db": [-5, -10]}"#,
        )
        .unwrap();
        let cfg = f.system().unwrap();
        assert_eq!(cfg.gamma, vec![1.0, 10.0]);
        assert_eq!(cfg.gamma_leak, vec![vec![db_to_linear(-5.0)], vec![0.1]]);
    }

    #[test]
    fn rejects_bad_files() {
        assert!(ScenarioFile::parse(r#"{"version": 2}"#).is_err());
        assert!(ScenarioFile::parse(r#"{"version": 1, "antenas": 4}"#).is_err());
        assert!(ScenarioFile::parse("{").is_err());
        assert!(ScenarioFile::parse("{}").is_err());
        assert!(ScenarioFile::parse("[1]").is_err());
        let f = ScenarioFile::parse(r#"{"version": 1, "sinr_db": [1, 2, 3]}"#).unwrap();
        assert!(f.system().is_err());
        let f = ScenarioFile::parse(r#"{"version": 1, "antennas": 1}"#).unwrap();
        assert!(f.system().is_err());
        let f = ScenarioFile::parse(r#"{"version": 1, "energy_receivers": 100000000000}"#).unwrap();
        assert!(f.system().is_err() && f.geometry().is_err());
    }

    #[test]
    fn no_energy_receivers() {
        let f = ScenarioFile::parse(r#"{"version": 1, "energy_receivers": 0}"#).unwrap();
        let cfg = f.system().unwrap();
        assert_eq!(cfg.gamma_leak, vec![Vec::<f64>::new(); 2]);
        assert!(f.scenario().is_ok());
    }
}
