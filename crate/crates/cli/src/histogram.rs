//! Per-realization average leakage SINR of the secure designs and the
//! leakage-free baseline.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;
use swipt_core::scenario::watts_to_dbm;
use swipt_core::solution::{average_metrics, default_settings, design, Method};
use swipt_core::CoreError;

use crate::config::ScenarioFile;
use crate::error::CliError;
use crate::seeds;

/// Methods compared, in output order. The baseline shares the Bernstein
/// approximation with method 2.
pub const METHODS: [Method; 3] = [Method::Method1, Method::Method2Soc, Method::Baseline2];

pub const HEADER: [&str; 7] = ["realization", "seed", "method", "leakage_sinr_db", "sinr_db", "er_power_dbm", "total_power_dbm"];

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HistogramRow {
    pub realization: u64,
    pub seed: u64,
    pub method: String,
    pub leakage_sinr_db: f64,
    pub sinr_db: f64,
    pub er_power_dbm: f64,
    pub total_power_dbm: f64,
}

/// Rows for each realization on which all three designs are feasible, in
/// realization order; also returns how many realizations were kept.
pub fn run_histogram(base: &ScenarioFile, realizations: usize, draws: usize) -> Result<(Vec<HistogramRow>, usize), CliError> {
    if draws == 0 {
        return Err(CliError::Config("at least one draw per realization is required".into()));
    }
    if realizations == 0 {
        return Err(CliError::Config("at least one realization is required".into()));
    }
    base.system()?;
    let per: Vec<Option<Vec<HistogramRow>>> = (0..realizations as u64)
        .into_par_iter()
        .map(|r| -> Result<_, CliError> {
            let seed = seeds::realization(base.seed, r);
            let sc = base.scenario_with_seed(seed)?;
            let mut rows = Vec::new();
            for m in METHODS {
                let sol = match design(&sc, m, &default_settings()) {
                    Ok(s) => s,
                    Err(CoreError::Infeasible | CoreError::Solver(_)) => return Ok(None),
                    Err(e) => return Err(e.into()),
                };
                let avg = average_metrics(&sol, &sc, draws, seeds::validation(seed))?;
                rows.push(HistogramRow {
                    realization: r,
                    seed,
                    method: m.name().to_string(),
                    leakage_sinr_db: avg.leakage_sinr_db,
                    sinr_db: avg.sinr_db,
                    er_power_dbm: avg.power_dbm,
                    total_power_dbm: watts_to_dbm(sol.total_power),
                });
            }
            Ok(Some(rows))
        })
        .collect::<Result<_, _>>()?;
    let kept = per.iter().filter(|r| r.is_some()).count();
    Ok((per.into_iter().flatten().flatten().collect(), kept))
}

pub fn write_csv<W: Write>(rows: &[HistogramRow], out: W) -> Result<(), CliError> {
    let mut wtr = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    wtr.write_record(HEADER)?;
    for r in rows {
        wtr.serialize(r)?;
    }
    wtr.flush()?;
    Ok(())
}
