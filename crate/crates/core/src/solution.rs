//! Designs, rank-one extraction and Monte-Carlo outage validation.

use conic::{solve_with, Block, ConicProblem, Settings, SolveResult, Status};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::CoreError;
use crate::layout::VarLayout;
use crate::linalg::{ComplexVector, HermitianMatrix, C64};
use crate::method1::{assemble_method1_with, matrix_variables};
use crate::method2::{assemble_method2_with, Encoding};
use crate::quadforms::{build_couplings, chance_constraints, eval_events, eval_realized_vectors, BeamformerSet};
use crate::scenario::{draw_error, linear_to_db, watts_to_dbm, Scenario};

/// Largest accepted `lambda_2 / lambda_1` for a rank-one matrix.
pub const RANK_TOL: f64 = 1e-5;

/// Matrices whose trace is below this fraction of the total power are
/// treated as rank zero.
pub const ZERO_POWER_FRACTION: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Method1,
    Method2Soc,
    Method2Lmi,
    /// S-procedure design without leakage constraints.
    Baseline1,
    /// Bernstein design without leakage constraints.
    Baseline2,
    /// Perfect-CSI design on the estimated channels.
    Benchmark,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::Method1,
        Method::Method2Soc,
        Method::Method2Lmi,
        Method::Baseline1,
        Method::Baseline2,
        Method::Benchmark,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Method::Method1 => "method1",
            Method::Method2Soc => "method2-soc",
            Method::Method2Lmi => "method2-lmi",
            Method::Baseline1 => "baseline1",
            Method::Baseline2 => "baseline2",
            Method::Benchmark => "benchmark",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        let s = s.to_ascii_lowercase();
        match s.as_str() {
            "1" | "method1" => Some(Method::Method1),
            "2" | "method2" | "method2-soc" => Some(Method::Method2Soc),
            "method2-lmi" | "lmi" => Some(Method::Method2Lmi),
            "baseline" | "baseline2" => Some(Method::Baseline2),
            "baseline1" => Some(Method::Baseline1),
            "benchmark" => Some(Method::Benchmark),
            _ => None,
        }
    }

    pub fn includes_leakage(&self) -> bool {
        !matches!(self, Method::Baseline1 | Method::Baseline2)
    }
}

/// `(is_rank_one, lambda_2 / lambda_1)`; a matrix without a positive
/// eigenvalue reports `(false, 0)`.
pub fn check_rank_one(a: &HermitianMatrix, ratio_tol: f64) -> (bool, f64) {
    let ev = a.eigenvalues();
    let l1 = ev[ev.len() - 1];
    if !(l1 > 0.0) {
        return (false, 0.0);
    }
    let l2 = if ev.len() > 1 { ev[ev.len() - 2].max(0.0) } else { 0.0 };
    let ratio = l2 / l1;
    (ratio <= ratio_tol, ratio)
}

/// `sqrt(lambda_1) z_1` with the largest-magnitude entry made real and
/// nonnegative. Ignores the remaining spectrum.
pub fn principal_component(a: &HermitianMatrix) -> ComplexVector {
    let (vals, vecs) = a.eigen();
    let n = vals.len();
    let l1 = vals[n - 1];
    if !(l1 > 0.0) {
        return ComplexVector::zeros(n);
    }
    let z = vecs.column(n - 1);
    let pivot = z.iter().copied().fold(C64::new(0.0, 0.0), |best, v| if v.norm() > best.norm() { v } else { best });
    let phase = if pivot.norm() > 0.0 { pivot.conj() / pivot.norm() } else { C64::new(1.0, 0.0) };
    ComplexVector(z.map(|v| v * phase * l1.sqrt()))
}

/// Every constraint sees the noise covariances only through their sum, so
/// any split of `sum V` is equally optimal. Interior-point solvers return
/// the even split, which has the rank of the sum; this hands the leading
/// eigencomponents to `V_1, ..., V_{N-1}` and the remainder to `V_N`.
pub fn spread_noise(v: &[HermitianMatrix]) -> Vec<HermitianMatrix> {
    let Some(first) = v.first() else {
        return Vec::new();
    };
    let mut total = HermitianMatrix::zeros(first.dim());
    for x in v {
        total.add_scaled(x, 1.0);
    }
    let (vals, vecs) = total.eigen();
    let m = vals.len();
    let mut out = Vec::with_capacity(v.len());
    for t in 0..v.len() - 1 {
        let k = m.checked_sub(t + 1);
        match k {
            Some(k) if vals[k] > 0.0 => {
                let z = ComplexVector(vecs.column(k).into_owned());
                let part = HermitianMatrix::outer(&z).scaled(vals[k]);
                total.add_scaled(&part, -1.0);
                out.push(part);
            }
            _ => out.push(HermitianMatrix::zeros(m)),
        }
    }
    out.push(total);
    out
}

pub fn extract(a: &HermitianMatrix) -> Result<ComplexVector, CoreError> {
    let (ok, ratio) = check_rank_one(a, RANK_TOL);
    if ratio == 0.0 && !ok {
        return Ok(ComplexVector::zeros(a.dim()));
    }
    if !ok {
        return Err(CoreError::NotRankOne { ratio });
    }
    Ok(principal_component(a))
}

/// Solver statistics carried with a design.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverSummary {
    pub status: String,
    pub objective: f64,
    pub dual_objective: f64,
    pub gap: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub iterations: usize,
    pub wall_time: f64,
}

impl From<&SolveResult> for SolverSummary {
    fn from(r: &SolveResult) -> Self {
        Self {
            status: format!("{:?}", r.status),
            objective: r.objective,
            dual_objective: r.dual_objective,
            gap: r.gap,
            primal_residual: r.primal_residual,
            dual_residual: r.dual_residual,
            iterations: r.iterations,
            wall_time: r.wall_time,
        }
    }
}

#[derive(Clone, Debug)]
pub struct BeamformingSolution {
    pub method: Method,
    pub bf: BeamformerSet,
    pub w: Vec<ComplexVector>,
    pub v: Vec<ComplexVector>,
    pub total_power: f64,
    /// `lambda_2 / lambda_1` per matrix (`W` then `V`); 0 for rank-zero matrices.
    pub rank_ratios: Vec<f64>,
    /// Every matrix is rank one or rank zero.
    pub rank_one: bool,
    pub solver: SolverSummary,
    pub problem: ConicProblem,
    pub layout: VarLayout,
    pub x: Vec<f64>,
}

impl BeamformingSolution {
    pub fn vectors(&self) -> BeamformerSet {
        BeamformerSet::from_vectors(&self.w, &self.v)
    }

    /// Solver point with the matrix parameters replaced by `w w^H`, `v v^H`.
    pub fn rank_one_point(&self) -> Vec<f64> {
        let mut x = self.layout.encode(&self.vectors());
        let off = self.layout.aux_offset();
        x[off..].copy_from_slice(&self.x[off..]);
        x
    }
}

/// Zero-error problem: one scalar row `h^H Q h + constant >= 0` per constraint.
pub fn assemble_benchmark(scenario: &Scenario) -> (ConicProblem, VarLayout) {
    let cfg = &scenario.config;
    let layout = VarLayout::new(cfg.m, cfg.u, cfg.n, vec![]);
    let mut p = ConicProblem::new(layout.roles());
    let rows = chance_constraints(scenario, true);
    let mut lin = Block::nonneg(rows.len(), "deterministic");
    let basis = crate::layout::hermitian_basis(cfg.m);
    for (row, c) in rows.iter().enumerate() {
        let unit = c.unit();
        for (j, coef) in c.coefs.iter().enumerate() {
            for (k, e) in basis.iter().enumerate() {
                let v = c.channel.0.dotc(&(e * &c.channel.0)).re;
                lin.add_coeff_at(layout.matrix_offset(j) + k, row, coef * v / unit);
            }
        }
        lin.add_constant_at(row, c.constant / unit);
    }
    lin.prune();
    p.push(lin);
    for b in matrix_variables(&layout, &mut p) {
        p.push(b);
    }
    (p, layout)
}

pub fn assemble(scenario: &Scenario, method: Method) -> Result<(ConicProblem, VarLayout), CoreError> {
    Ok(match method {
        Method::Method1 => assemble_method1_with(scenario, true)?,
        Method::Baseline1 => assemble_method1_with(scenario, false)?,
        Method::Method2Soc => strip(assemble_method2_with(scenario, Encoding::NativeSoc, true)?),
        Method::Method2Lmi => strip(assemble_method2_with(scenario, Encoding::Lmi, true)?),
        Method::Baseline2 => strip(assemble_method2_with(scenario, Encoding::NativeSoc, false)?),
        Method::Benchmark => assemble_benchmark(scenario),
    })
}

fn strip<A>((p, l, _): (ConicProblem, VarLayout, A)) -> (ConicProblem, VarLayout) {
    (p, l)
}

pub fn default_settings() -> Settings {
    Settings::default()
}

/// Assemble, solve and extract.
pub fn design(scenario: &Scenario, method: Method, settings: &Settings) -> Result<BeamformingSolution, CoreError> {
    let (problem, layout) = assemble(scenario, method)?;
    let res = solve_with(&problem, settings)?;
    match res.status {
        Status::Optimal => {}
        Status::Infeasible => return Err(CoreError::Infeasible),
        s => return Err(CoreError::Solver(s)),
    }
    let mut bf = layout.decode(&res.x);
    bf.v = spread_noise(&bf.v);
    let mut x = layout.encode(&bf);
    let aux = layout.aux_offset();
    x[aux..].copy_from_slice(&res.x[aux..]);
    let total_power = bf.total_power();
    let mut rank_ratios = Vec::new();
    let mut rank_one = true;
    let mut vecs = Vec::new();
    for mat in bf.w.iter().chain(&bf.v) {
        if mat.trace() <= ZERO_POWER_FRACTION * total_power.abs() {
            rank_ratios.push(0.0);
            vecs.push(ComplexVector::zeros(mat.dim()));
            continue;
        }
        let (ok, ratio) = check_rank_one(mat, RANK_TOL);
        rank_one &= ok;
        rank_ratios.push(ratio);
        vecs.push(principal_component(mat));
    }
    let v = vecs.split_off(bf.w.len());
    Ok(BeamformingSolution {
        method,
        bf,
        w: vecs,
        v,
        total_power,
        rank_ratios,
        rank_one,
        solver: SolverSummary::from(&res),
        problem,
        layout,
        x,
    })
}

pub fn design_benchmark(scenario: &Scenario, settings: &Settings) -> Result<BeamformingSolution, CoreError> {
    design(scenario, Method::Benchmark, settings)
}

/// Leakage-free design with the S-procedure (`bernstein = false`) or the
/// Bernstein approximation.
pub fn design_baseline(scenario: &Scenario, bernstein: bool, settings: &Settings) -> Result<BeamformingSolution, CoreError> {
    let m = if bernstein { Method::Baseline2 } else { Method::Baseline1 };
    design(scenario, m, settings)
}

/// Empirical outage frequencies with binomial standard errors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutageReport {
    pub samples: usize,
    pub sinr: Vec<f64>,
    pub leakage: Vec<Vec<f64>>,
    pub power: Vec<f64>,
}

pub fn standard_error(p: f64, n: usize) -> f64 {
    (p * (1.0 - p) / n as f64).sqrt()
}

impl OutageReport {
    /// `(frequency, tolerance)` pairs over every constraint.
    pub fn pairs(&self, scenario: &Scenario) -> Vec<(f64, f64)> {
        let cfg = &scenario.config;
        let mut out: Vec<(f64, f64)> = self.sinr.iter().copied().zip(cfg.rho.iter().copied()).collect();
        for (row, tol) in self.leakage.iter().zip(&cfg.rho_leak) {
            out.extend(row.iter().copied().zip(tol.iter().copied()));
        }
        out.extend(self.power.iter().copied().zip(cfg.varrho.iter().copied()));
        out
    }

    /// Every frequency is at most `tolerance + k * SE`, with the standard
    /// error taken at the tolerance (the null hypothesis).
    pub fn within(&self, scenario: &Scenario, k: f64) -> bool {
        self.pairs(scenario)
            .iter()
            .all(|&(p, tol)| p <= tol + k * standard_error(tol, self.samples))
    }

    pub fn max_sinr(&self) -> f64 {
        self.sinr.iter().copied().fold(0.0, f64::max)
    }

    pub fn max_leakage(&self) -> f64 {
        self.leakage.iter().flatten().copied().fold(0.0, f64::max)
    }

    pub fn max_power(&self) -> f64 {
        self.power.iter().copied().fold(0.0, f64::max)
    }
}

/// Count violations of the original events for the extracted beamformers
/// over `n_samples` indexed error draws.
pub fn validate_outage(sol: &BeamformingSolution, scenario: &Scenario, n_samples: usize, seed: u64) -> Result<OutageReport, CoreError> {
    validate_beamformers(&sol.vectors(), scenario, n_samples, seed)
}

pub fn validate_beamformers(bf: &BeamformerSet, scenario: &Scenario, n_samples: usize, seed: u64) -> Result<OutageReport, CoreError> {
    if n_samples == 0 {
        return Err(CoreError::Domain("at least one validation sample is required".into()));
    }
    let cfg = &scenario.config;
    let cm = build_couplings(bf, cfg);
    let (u, n) = (cfg.u, cfg.n);
    let counts = (0..n_samples as u64)
        .into_par_iter()
        .map(|k| {
            let ev = eval_events(&cm, scenario, &draw_error(cfg, seed, k));
            let mut c = vec![0usize; u + u * n + n];
            for i in 0..u {
                c[i] += (ev.f[i] < 0.0) as usize;
                for t in 0..n {
                    c[u + i * n + t] += (ev.k[i][t] < 0.0) as usize;
                }
            }
            for t in 0..n {
                c[u + u * n + t] += (ev.d[t] < 0.0) as usize;
            }
            c
        })
        .reduce(
            || vec![0usize; u + u * n + n],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                a
            },
        );
    let freq = |c: usize| c as f64 / n_samples as f64;
    Ok(OutageReport {
        samples: n_samples,
        sinr: counts[..u].iter().map(|&c| freq(c)).collect(),
        leakage: (0..u).map(|i| (0..n).map(|t| freq(counts[u + i * n + t])).collect()).collect(),
        power: counts[u + u * n..].iter().map(|&c| freq(c)).collect(),
    })
}

/// Realized metrics averaged over error draws, IRs and ERs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricAverages {
    pub sinr_db: f64,
    pub leakage_sinr_db: f64,
    pub power_dbm: f64,
}

pub fn average_metrics(sol: &BeamformingSolution, scenario: &Scenario, n_samples: usize, seed: u64) -> Result<MetricAverages, CoreError> {
    if n_samples == 0 {
        return Err(CoreError::Domain("at least one sample is required".into()));
    }
    let cfg = &scenario.config;
    let sums = (0..n_samples as u64)
        .into_par_iter()
        .map(|k| {
            let rm = eval_realized_vectors(&sol.w, &sol.v, scenario, &draw_error(cfg, seed, k));
            let s: f64 = rm.sinr.iter().sum::<f64>() / cfg.u as f64;
            let cnt = (cfg.u * cfg.n).max(1) as f64;
            let l: f64 = rm.leak_sinr.iter().flatten().sum::<f64>() / cnt;
            let p: f64 = rm.power.iter().sum::<f64>() / cfg.n.max(1) as f64;
            [s, l, p]
        })
        .collect::<Vec<_>>()
        // summed in index order so the result does not depend on the thread split
        .into_iter()
        .fold([0.0; 3], |a, b| [a[0] + b[0], a[1] + b[1], a[2] + b[2]]);
    let nf = n_samples as f64;
    Ok(MetricAverages {
        sinr_db: linear_to_db(sums[0] / nf),
        leakage_sinr_db: linear_to_db(sums[1] / nf),
        power_dbm: watts_to_dbm(sums[2] / nf),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vec3(a: [(f64, f64); 3]) -> ComplexVector {
        ComplexVector::from_vec(a.iter().map(|&(r, i)| C64::new(r, i)).collect())
    }

    #[test]
    fn outer_product_is_rank_one() {
        let z = vec3([(1.0, 2.0), (-0.5, 0.25), (0.0, -3.0)]);
        let (ok, ratio) = check_rank_one(&HermitianMatrix::outer(&z), RANK_TOL);
        assert!(ok && ratio <= 1e-14, "{ratio}");
        let (ok, ratio) = check_rank_one(&HermitianMatrix::identity(2), RANK_TOL);
        assert!(!ok);
        assert!((ratio - 1.0).abs() < 1e-14);
    }

    #[test]
    fn extraction_cases() {
        let a = HermitianMatrix::from_diagonal(&[4.0, 0.0, 0.0]);
        let v = extract(&a).unwrap();
        assert!((v[0] - C64::new(2.0, 0.0)).norm() < 1e-14);
        assert_eq!(extract(&HermitianMatrix::zeros(3)).unwrap(), ComplexVector::zeros(3));
        assert!(matches!(extract(&HermitianMatrix::identity(3)), Err(CoreError::NotRankOne { .. })));
    }

    #[test]
    fn extraction_recovers_vector_up_to_phase() {
        let z = vec3([(0.3, -1.0), (2.0, 0.5), (-0.1, 0.0)]);
        let v = extract(&HermitianMatrix::outer(&z)).unwrap();
        let inner = v.0.dotc(&z.0).norm();
        assert!((inner - z.norm_sqr()).abs() < 1e-10 * z.norm_sqr());
        let pivot = v.iter().max_by(|a, b| a.norm().total_cmp(&b.norm())).unwrap();
        assert!(pivot.im.abs() < 1e-14 && pivot.re > 0.0);
    }

    #[test]
    fn method_names_parse_back() {
        for m in Method::ALL {
            assert_eq!(Method::parse(m.name()), Some(m));
        }
    }
}
