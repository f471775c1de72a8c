//! JSON form of a design.

use serde::Serialize;
use swipt_core::solution::{BeamformingSolution, OutageReport, SolverSummary};
use swipt_core::scenario::watts_to_dbm;
use swipt_core::{ComplexVector, HermitianMatrix};

/// Complex numbers as `[re, im]`.
pub type Entry = [f64; 2];

#[derive(Debug, Serialize)]
pub struct SolutionReport {
    pub method: String,
    pub seed: u64,
    pub total_power: f64,
    pub total_power_dbm: f64,
    pub rank_one: bool,
    /// `lambda_2 / lambda_1` of `W_1..W_U, V_1..V_N`.
    pub rank_ratios: Vec<f64>,
    pub w: Vec<Vec<Entry>>,
    pub v: Vec<Vec<Entry>>,
    pub w_matrices: Vec<Vec<Vec<Entry>>>,
    pub v_matrices: Vec<Vec<Vec<Entry>>>,
    pub solver: SolverSummary,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub outage: Option<OutageReport>,
}

fn vector(v: &ComplexVector) -> Vec<Entry> {
    v.iter().map(|z| [z.re, z.im]).collect()
}

fn matrix(a: &HermitianMatrix) -> Vec<Vec<Entry>> {
    let d = a.to_dmatrix();
    (0..d.nrows()).map(|r| (0..d.ncols()).map(|c| [d[(r, c)].re, d[(r, c)].im]).collect()).collect()
}

impl SolutionReport {
    pub fn new(sol: &BeamformingSolution, seed: u64) -> Self {
        Self {
            method: sol.method.name().to_string(),
            seed,
            total_power: sol.total_power,
            total_power_dbm: watts_to_dbm(sol.total_power),
            rank_one: sol.rank_one,
            rank_ratios: sol.rank_ratios.clone(),
            w: sol.w.iter().map(vector).collect(),
            v: sol.v.iter().map(vector).collect(),
            w_matrices: sol.bf.w.iter().map(matrix).collect(),
            v_matrices: sol.bf.v.iter().map(matrix).collect(),
            solver: sol.solver.clone(),
            outage: None,
        }
    }
}
