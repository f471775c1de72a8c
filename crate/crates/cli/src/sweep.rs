//! Parameter sweeps over seeded channel realizations.
//!
//! Each grid value reuses the same realization seeds, so curves compare the
//! same channels. A realization counts towards the averages only if every
//! requested method is feasible on it.

use std::io::Write;
use std::panic::{catch_unwind, AssertUnwindSafe};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use swipt_core::scenario::{db_to_linear, watts_to_dbm};
use swipt_core::solution::{average_metrics, default_settings, design, validate_outage, Method};
use swipt_core::{CoreError, Scenario};

use crate::config::{ScenarioFile, FORMAT_VERSION};
use crate::error::CliError;
use crate::seeds;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepParam {
    #[serde(rename = "gamma_db", alias = "gamma_dB")]
    GammaDb,
    #[serde(rename = "p_req_dbm", alias = "P_req_dBm")]
    PReqDbm,
    #[serde(rename = "outage_rho")]
    OutageRho,
    #[serde(rename = "antennas", alias = "M")]
    Antennas,
}

impl SweepParam {
    pub fn name(&self) -> &'static str {
        match self {
            SweepParam::GammaDb => "gamma_db",
            SweepParam::PReqDbm => "p_req_dbm",
            SweepParam::OutageRho => "outage_rho",
            SweepParam::Antennas => "antennas",
        }
    }
}

fn default_draws() -> usize {
    1000
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub version: u32,
    pub parameter: SweepParam,
    pub values: Vec<f64>,
    pub realizations: usize,
    pub methods: Vec<String>,
    /// Inline scenario; mutually exclusive with `base_path`.
    #[serde(default)]
    pub base: Option<ScenarioFile>,
    /// Scenario file, relative to the spec file.
    #[serde(default)]
    pub base_path: Option<String>,
    pub seed: u64,
    /// Monte-Carlo draws per design for the outage columns; 0 skips them.
    #[serde(default = "default_draws")]
    pub validation_draws: usize,
}

impl SweepSpec {
    /// Parse and check everything that does not need the file system.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let s: SweepSpec = serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        if s.version != FORMAT_VERSION {
            return Err(CliError::Config(format!("unsupported format version {}", s.version)));
        }
        if s.values.is_empty() {
            return Err(CliError::Config("the grid is empty".into()));
        }
        if s.values.iter().any(|v| !v.is_finite()) {
            return Err(CliError::Config("grid values must be finite".into()));
        }
        if s.realizations == 0 {
            return Err(CliError::Config("at least one realization is required".into()));
        }
        if s.methods.is_empty() {
            return Err(CliError::Config("no methods requested".into()));
        }
        s.method_list()?;
        if s.base.is_some() == s.base_path.is_some() {
            return Err(CliError::Config("give exactly one of `base` and `base_path`".into()));
        }
        Ok(s)
    }

    /// Parse and resolve `base_path` against the spec's directory.
    pub fn load(path: &std::path::Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        let mut s = Self::parse(&text)?;
        if let Some(rel) = s.base_path.take() {
            let dir = path.parent().unwrap_or_else(|| std::path::Path::new("."));
            s.base = Some(ScenarioFile::load(&dir.join(rel))?);
        }
        Ok(s)
    }

    pub fn method_list(&self) -> Result<Vec<Method>, CliError> {
        self.methods
            .iter()
            .map(|m| Method::parse(m).ok_or_else(|| CliError::Config(format!("unknown method `{m}`"))))
            .collect()
    }

    fn base(&self) -> Result<&ScenarioFile, CliError> {
        self.base.as_ref().ok_or_else(|| CliError::Config("base scenario not resolved".into()))
    }

    /// The base scenario with the swept parameter set to `value`.
    pub fn config_at(&self, value: f64) -> Result<ScenarioFile, CliError> {
        let mut f = self.base()?.clone();
        match self.parameter {
            SweepParam::GammaDb => f.sinr_db = value.into(),
            SweepParam::PReqDbm => f.power_req_dbm = value.into(),
            SweepParam::OutageRho => {
                f.outage_sinr = value.into();
                f.outage_leakage = value.into();
                f.outage_power = value.into();
            }
            SweepParam::Antennas => {
                if value.fract() != 0.0 || value < 2.0 {
                    return Err(CliError::Config(format!("antenna count {value} is not an integer above 1")));
                }
                f.antennas = value as usize;
            }
        }
        f.system()?;
        Ok(f)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Status {
    Optimal,
    Infeasible,
    Failed(String),
}

/// One design on one realization.
#[derive(Clone, Debug, PartialEq)]
pub struct Outcome {
    pub method: Method,
    pub status: Status,
    pub power: f64,
    pub iterations: usize,
    pub max_rank_ratio: f64,
    pub rank_one: bool,
    /// Largest empirical outage in each family, if validated.
    pub outage: Option<[f64; 3]>,
    pub leakage_sinr: Option<f64>,
}

impl Outcome {
    fn failed(method: Method, status: Status) -> Self {
        Self {
            method,
            status,
            power: f64::NAN,
            iterations: 0,
            max_rank_ratio: f64::NAN,
            rank_one: false,
            outage: None,
            leakage_sinr: None,
        }
    }

    pub fn feasible(&self) -> bool {
        self.status == Status::Optimal
    }
}

/// Design with `method` on `scenario` and, if `draws > 0`, validate it.
pub fn run_design(scenario: &Scenario, method: Method, draws: usize) -> Outcome {
    let attempt = catch_unwind(AssertUnwindSafe(|| -> Result<Outcome, CoreError> {
        let sol = design(scenario, method, &default_settings())?;
        let (outage, leakage_sinr) = if draws > 0 {
            let vs = seeds::validation(scenario.seed);
            let rep = validate_outage(&sol, scenario, draws, vs)?;
            let avg = average_metrics(&sol, scenario, draws, vs)?;
            let leak = (scenario.config.n > 0).then_some(db_to_linear(avg.leakage_sinr_db));
            (Some([rep.max_sinr(), rep.max_leakage(), rep.max_power()]), leak)
        } else {
            (None, None)
        };
        Ok(Outcome {
            method,
            status: Status::Optimal,
            power: sol.total_power,
            iterations: sol.solver.iterations,
            max_rank_ratio: sol.rank_ratios.iter().copied().fold(0.0, f64::max),
            rank_one: sol.rank_one,
            outage,
            leakage_sinr,
        })
    }));
    match attempt {
        Ok(Ok(o)) => o,
        Ok(Err(CoreError::Infeasible)) => Outcome::failed(method, Status::Infeasible),
        Ok(Err(e)) => Outcome::failed(method, Status::Failed(e.to_string())),
        Err(_) => Outcome::failed(method, Status::Failed("panic".into())),
    }
}

/// All methods on every realization of one grid value, in realization order.
pub fn run_point(spec: &SweepSpec, value: f64) -> Result<Vec<Vec<Outcome>>, CliError> {
    let file = spec.config_at(value)?;
    let methods = spec.method_list()?;
    (0..spec.realizations as u64)
        .into_par_iter()
        .map(|r| {
            let sc = file.scenario_with_seed(seeds::realization(spec.seed, r))?;
            Ok(methods.iter().map(|&m| run_design(&sc, m, spec.validation_draws)).collect())
        })
        .collect()
}

pub const HEADER: [&str; 15] = [
    "method",
    "parameter",
    "value",
    "realizations",
    "included",
    "feasibility_rate",
    "solver_failures",
    "power_dbm",
    "mean_iterations",
    "mean_rank_ratio",
    "rank_one_rate",
    "max_sinr_outage",
    "max_leakage_outage",
    "max_power_outage",
    "leakage_sinr_db",
];

/// One CSV line; averages run over the realizations where every method was
/// feasible (`included`).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub method: String,
    pub parameter: String,
    pub value: f64,
    pub realizations: usize,
    pub included: usize,
    pub feasibility_rate: f64,
    pub solver_failures: usize,
    pub power_dbm: Option<f64>,
    pub mean_iterations: Option<f64>,
    pub mean_rank_ratio: Option<f64>,
    pub rank_one_rate: Option<f64>,
    pub max_sinr_outage: Option<f64>,
    pub max_leakage_outage: Option<f64>,
    pub max_power_outage: Option<f64>,
    pub leakage_sinr_db: Option<f64>,
}

fn mean(xs: impl Iterator<Item = f64>) -> Option<f64> {
    let (s, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    (n > 0).then(|| s / n as f64)
}

fn max(xs: impl Iterator<Item = f64>) -> Option<f64> {
    xs.fold(None, |a: Option<f64>, x| Some(a.map_or(x, |a| a.max(x))))
}

pub fn summarize(spec: &SweepSpec, value: f64, outcomes: &[Vec<Outcome>]) -> Vec<SweepRow> {
    let all_ok: Vec<&Vec<Outcome>> = outcomes.iter().filter(|row| row.iter().all(Outcome::feasible)).collect();
    let total = outcomes.len();
    let n_methods = outcomes.first().map_or(0, Vec::len);
    (0..n_methods)
        .map(|k| {
            let mine = || all_ok.iter().map(move |row| &row[k]);
            let feasible = outcomes.iter().filter(|row| row[k].feasible()).count();
            let failures = outcomes.iter().filter(|row| matches!(row[k].status, Status::Failed(_))).count();
            let outage = |j: usize| max(mine().filter_map(move |o| o.outage.map(|a| a[j])));
            SweepRow {
                method: outcomes[0][k].method.name().to_string(),
                parameter: spec.parameter.name().to_string(),
                value,
                realizations: total,
                included: all_ok.len(),
                feasibility_rate: feasible as f64 / total as f64,
                solver_failures: failures,
                // mean in watts, then converted
                power_dbm: mean(mine().map(|o| o.power)).map(watts_to_dbm),
                mean_iterations: mean(mine().map(|o| o.iterations as f64)),
                mean_rank_ratio: mean(mine().map(|o| o.max_rank_ratio)),
                rank_one_rate: mean(mine().map(|o| o.rank_one as u8 as f64)),
                max_sinr_outage: outage(0),
                max_leakage_outage: outage(1),
                max_power_outage: outage(2),
                leakage_sinr_db: mean(mine().filter_map(|o| o.leakage_sinr)).map(|x| 10.0 * x.log10()),
            }
        })
        .collect()
}

/// Run the sweep, writing and flushing the rows of each grid value as soon
/// as it completes. On error a `FAILED` marker row is written for the grid
/// value that failed before the error is returned.
pub fn run_sweep<W: Write>(spec: &SweepSpec, out: W) -> Result<Vec<SweepRow>, CliError> {
    let mut wtr = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    wtr.write_record(HEADER)?;
    wtr.flush()?;
    let mut rows = Vec::new();
    for &value in &spec.values {
        match run_point(spec, value) {
            Ok(outcomes) => {
                for row in summarize(spec, value, &outcomes) {
                    wtr.serialize(&row)?;
                    rows.push(row);
                }
                wtr.flush()?;
            }
            Err(e) => {
                let mut marker = vec!["FAILED".to_string(), spec.parameter.name().to_string(), format!("{value:?}")];
                marker.resize(HEADER.len(), String::new());
                wtr.write_record(&marker)?;
                wtr.flush()?;
                return Err(e);
            }
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(text: &str) -> Result<SweepSpec, CliError> {
        SweepSpec::parse(text)
    }

    const OK: &str = r#"{"version": 1, "parameter": "gamma_dB", "values": [0, 2],
        "realizations": 2, "methods": ["method1", "benchmark"], "base": {"version": 1}, "seed": 3}"#;

    #[test]
    fn parses_and_rejects() {
        let s = spec(OK).unwrap();
        assert_eq!(s.parameter, SweepParam::GammaDb);
        assert_eq!(s.validation_draws, 1000);
        assert!(spec(&OK.replace("[0, 2]", "[]")).is_err());
        assert!(spec(&OK.replace("\"realizations\": 2", "\"realizations\": 0")).is_err());
        assert!(spec(&OK.replace("\"benchmark\"", "\"nope\"")).is_err());
        assert!(spec(&OK.replace("\"base\": {\"version\": 1}", "\"base_path\": \"x.json\", \"base\": {\"version\": 1}")).is_err());
        assert!(spec(&OK.replace("\"version\": 1, \"parameter\"", "\"version\": 3, \"parameter\"")).is_err());
    }

    #[test]
    fn grid_values_reach_the_config() {
        let s = spec(OK).unwrap();
        let f = s.config_at(4.0).unwrap();
        assert_eq!(f.system().unwrap().gamma, vec![db_to_linear(4.0); 2]);
        let mut m = s.clone();
        m.parameter = SweepParam::Antennas;
        assert_eq!(m.config_at(8.0).unwrap().antennas, 8);
        assert!(m.config_at(6.5).is_err());
        m.parameter = SweepParam::OutageRho;
        assert_eq!(m.config_at(0.05).unwrap().system().unwrap().varrho, vec![0.05; 2]);
        assert!(m.config_at(1.5).is_err());
    }

    #[test]
    fn summary_filters_on_joint_feasibility() {
        let s = spec(OK).unwrap();
        let ok = |m, p| Outcome {
            method: m,
            status: Status::Optimal,
            power: p,
            iterations: 10,
            max_rank_ratio: 0.0,
            rank_one: true,
            outage: Some([0.01, 0.02, 0.0]),
            leakage_sinr: Some(0.1),
        };
        let outcomes = vec![
            vec![ok(Method::Method1, 1.0), ok(Method::Benchmark, 0.5)],
            vec![Outcome::failed(Method::Method1, Status::Infeasible), ok(Method::Benchmark, 7.0)],
            vec![ok(Method::Method1, 3.0), ok(Method::Benchmark, 1.5)],
        ];
        let rows = summarize(&s, 0.0, &outcomes);
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].included, 2);
        assert!((rows[0].feasibility_rate - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(rows[1].feasibility_rate, 1.0);
        assert!((rows[0].power_dbm.unwrap() - watts_to_dbm(2.0)).abs() < 1e-12);
        assert!((rows[1].power_dbm.unwrap() - watts_to_dbm(1.0)).abs() < 1e-12);
        assert_eq!(rows[1].max_leakage_outage, Some(0.02));
        assert!((rows[1].leakage_sinr_db.unwrap() + 10.0).abs() < 1e-12);
    }
}
