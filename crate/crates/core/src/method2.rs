//! Bernstein-type approximation: linear rows, second-order cones (or their
//! arrow-LMI encoding), spectral-shift LMIs and nonnegative auxiliaries.

use conic::{Block, ConicProblem};
use nalgebra::DMatrix;

use crate::error::CoreError;
use crate::layout::{add_embedded, hermitian_basis, VarLayout};
use crate::linalg::{s_plus, ComplexVector, HermitianMatrix, C64};
use crate::method1::matrix_variables;
use crate::quadforms::{chance_constraints, BeamformerSet, ChanceConstraint, Family};
use crate::scenario::Scenario;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Encoding {
    NativeSoc,
    Lmi,
}

/// `delta = -ln(rho)` per constraint family.
#[derive(Clone, Debug, PartialEq)]
pub struct BernsteinParams {
    pub delta: Vec<f64>,
    pub delta_leak: Vec<Vec<f64>>,
    pub mu: Vec<f64>,
}

impl BernsteinParams {
    pub fn from_config(config: &crate::scenario::SystemConfig) -> Self {
        let f = |r: &f64| -r.ln();
        Self {
            delta: config.rho.iter().map(f).collect(),
            delta_leak: config.rho_leak.iter().map(|row| row.iter().map(f).collect()).collect(),
            mu: config.varrho.iter().map(f).collect(),
        }
    }
}

/// Indices of the norm bound (`theta`-like) and spectral shift
/// (`vartheta`-like) auxiliaries of each constraint, in constraint order.
#[derive(Clone, Debug, PartialEq)]
pub struct AuxLayout {
    pub families: Vec<Family>,
    pub theta: Vec<usize>,
    pub shift: Vec<usize>,
}

fn aux_names(f: Family) -> [String; 2] {
    match f {
        Family::Sinr(i) => [format!("theta{}", i + 1), format!("vartheta{}", i + 1)],
        Family::Leakage(i, t) => [
            format!("theta{}_{}", i + 1, t + 1),
            format!("vartheta{}_{}", i + 1, t + 1),
        ],
        Family::Power(t) => [format!("a{}", t + 1), format!("b{}", t + 1)],
    }
}

fn delta(tolerance: f64) -> f64 {
    -tolerance.ln()
}

/// `[sqrt2 S Q h; vec(S Q S)]` (column-major `vec`).
fn soc_vector(s: &DMatrix<C64>, q: &DMatrix<C64>, h: &ComplexVector) -> Vec<C64> {
    let m = s.nrows();
    let sq = s * q;
    let top = (&sq * &h.0) * C64::new(std::f64::consts::SQRT_2, 0.0);
    let y = &sq * s;
    let mut out: Vec<C64> = top.iter().copied().collect();
    for c in 0..m {
        for r in 0..m {
            out.push(y[(r, c)]);
        }
    }
    out
}

/// Factors of the arrow-LMI recipe for one constraint.
struct ArrowRecipe {
    t: DMatrix<C64>,
    p: DMatrix<C64>,
    u: Vec<DMatrix<C64>>,
    k: Vec<DMatrix<C64>>,
    s: DMatrix<C64>,
}

impl ArrowRecipe {
    fn new(c: &ChanceConstraint) -> Self {
        let m = c.channel.len();
        let size = m * m + m + 1;
        let one = C64::new(1.0, 0.0);
        let s = c.sqrt_cov.to_dmatrix();
        // T(h) = sqrt2 e_last h^H
        let mut t = DMatrix::zeros(size, m);
        for j in 0..m {
            t[(size - 1, j)] = c.channel[j].conj() * std::f64::consts::SQRT_2;
        }
        // P(S) = S [I_M 0 .. 0]
        let mut sel = DMatrix::zeros(m, size);
        for j in 0..m {
            sel[(j, j)] = one;
        }
        let p = &s * sel;
        let mut u = Vec::with_capacity(m);
        let mut k = Vec::with_capacity(m);
        for idx in 0..m {
            let mut up = DMatrix::zeros(size, m);
            up[(size - 1, idx)] = one;
            u.push(up);
            // identity in block idx + 1; block 0 carries the sqrt2 term
            let mut kp = DMatrix::zeros(m, size);
            for j in 0..m {
                kp[(j, (idx + 1) * m + j)] = one;
            }
            k.push(kp);
        }
        Self { t, p, u, k, s }
    }

    /// `D + D^H + E + E^H` for coupling `q`.
    fn off_diagonal(&self, q: &DMatrix<C64>) -> DMatrix<C64> {
        let d = &self.t * q * &self.p;
        let y = &self.s * q * &self.s;
        let mut e = DMatrix::zeros(d.nrows(), d.ncols());
        for (up, kp) in self.u.iter().zip(&self.k) {
            e += up * &y * kp;
        }
        &d + d.adjoint() + &e + e.adjoint()
    }
}

/// Assemble the Bernstein problem with the chosen cone encoding.
pub fn assemble_method2_with(
    scenario: &Scenario,
    encoding: Encoding,
    include_leakage: bool,
) -> Result<(ConicProblem, VarLayout, AuxLayout), CoreError> {
    let cfg = &scenario.config;
    let m = cfg.m;
    let rows = chance_constraints(scenario, include_leakage);
    if let Some(c) = rows.iter().find(|c| !(c.tolerance > 0.0 && c.tolerance <= 1.0)) {
        return Err(CoreError::Domain(format!("tolerance {} outside (0, 1]", c.tolerance)));
    }
    let names: Vec<String> = rows.iter().flat_map(|c| aux_names(c.family)).collect();
    let layout = VarLayout::new(m, cfg.u, cfg.n, names);
    let base = layout.aux_offset();
    let aux = AuxLayout {
        families: rows.iter().map(|c| c.family).collect(),
        theta: (0..rows.len()).map(|r| base + 2 * r).collect(),
        shift: (0..rows.len()).map(|r| base + 2 * r + 1).collect(),
    };
    let mut p = ConicProblem::new(layout.roles());
    let basis = hermitian_basis(m);
    let eta = rows.len();

    let mut lin = Block::nonneg(2 * eta, "bernstein");
    let mut cones = Vec::with_capacity(eta);
    let mut shifts = Vec::with_capacity(eta);
    for (row, c) in rows.iter().enumerate() {
        let dl = delta(c.tolerance);
        // Rows are divided by the channel energy; theta and vartheta scale along.
        let unit = c.unit();
        let s = c.sqrt_cov.to_dmatrix();
        let mean_weight = &s * &s + &c.channel.0 * c.channel.0.adjoint();
        let recipe = (encoding == Encoding::Lmi).then(|| ArrowRecipe::new(c));
        let soc_dim = m * m + m + 1;
        let mut cone = match encoding {
            Encoding::NativeSoc => Block::soc(2 * (m * m + m) + 1, format!("{}.norm", c.family.label())),
            Encoding::Lmi => Block::psd(2 * soc_dim, format!("{}.norm", c.family.label())),
        };
        let mut shift = Block::psd(2 * m, format!("{}.shift", c.family.label()));
        for (j, coef) in c.coefs.iter().enumerate() {
            let off = layout.matrix_offset(j);
            for (k, e) in basis.iter().enumerate() {
                let var = off + k;
                let q = e * C64::new(*coef / unit, 0.0);
                // Tr(S Q S) + h^H Q h
                let mean: f64 = mean_weight.component_mul(&q.transpose()).sum().re;
                lin.add_coeff_at(var, row, mean);
                match &recipe {
                    None => {
                        for (idx, v) in soc_vector(&s, &q, &c.channel).iter().enumerate() {
                            cone.add_coeff_at(var, 1 + 2 * idx, v.re);
                            cone.add_coeff_at(var, 2 + 2 * idx, v.im);
                        }
                    }
                    Some(r) => add_embedded(&mut cone, Some(var), &r.off_diagonal(&q), 1.0),
                }
                add_embedded(&mut shift, Some(var), &(&s * &q * &s), 1.0);
            }
        }
        let (theta, shift_var) = (aux.theta[row], aux.shift[row]);
        lin.add_coeff_at(theta, row, -(2.0 * dl).sqrt());
        lin.add_coeff_at(shift_var, row, -dl);
        lin.add_constant_at(row, c.constant / unit);
        lin.add_coeff_at(shift_var, eta + row, 1.0);
        match encoding {
            Encoding::NativeSoc => cone.add_coeff_at(theta, 0, 1.0),
            Encoding::Lmi => {
                for d in 0..2 * soc_dim {
                    cone.add_coeff(theta, d, d, 1.0);
                }
            }
        }
        for d in 0..2 * m {
            shift.add_coeff(shift_var, d, d, 1.0);
        }
        cone.prune();
        shift.prune();
        cones.push(cone);
        shifts.push(shift);
    }
    lin.prune();
    p.push(lin);
    for b in cones.into_iter().chain(shifts) {
        p.push(b);
    }
    for b in matrix_variables(&layout, &mut p) {
        p.push(b);
    }
    Ok((p, layout, aux))
}

pub fn assemble_method2(
    scenario: &Scenario,
    encoding: Encoding,
) -> Result<(ConicProblem, VarLayout, AuxLayout), CoreError> {
    assemble_method2_with(scenario, encoding, true)
}

/// Deterministic Bernstein left-hand side of one chance constraint at a
/// beamformer point; nonnegative means the chance constraint is certified.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundSlack {
    pub family: Family,
    pub slack: f64,
    /// `sqrt(|Y|_F^2 + 2|u|^2)`, the optimal norm bound.
    pub norm: f64,
    /// `s+(-Y)`, the optimal spectral shift.
    pub shift: f64,
}

pub fn bernstein_bound_check(scenario: &Scenario, bf: &BeamformerSet, include_leakage: bool) -> Vec<BoundSlack> {
    chance_constraints(scenario, include_leakage)
        .iter()
        .map(|c| {
            let q = c.coupling(bf);
            let s = c.sqrt_cov.to_dmatrix();
            let y = HermitianMatrix::from_dmatrix(&(&s * q.to_dmatrix() * &s));
            let u = ComplexVector(&s * q.to_dmatrix() * &c.channel.0);
            let dl = delta(c.tolerance);
            let norm = (y.frobenius_norm().powi(2) + 2.0 * u.norm_sqr()).sqrt();
            let shift = s_plus(&y.scaled(-1.0));
            let slack = y.trace() - (2.0 * dl).sqrt() * norm - dl * shift + q.quad_form(&c.channel) + c.constant;
            BoundSlack {
                family: c.family,
                slack,
                norm,
                shift,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{generate_scenario, Geometry, SystemConfig, UniformTargets};

    fn scenario(m: usize) -> Scenario {
        let cfg = SystemConfig::uniform(m, 2, 2, &UniformTargets::default());
        generate_scenario(&cfg, &Geometry::reference(2, 2), 11).unwrap()
    }

    #[test]
    fn native_census() {
        let (p, lay, aux) = assemble_method2(&scenario(6), Encoding::NativeSoc).unwrap();
        assert_eq!(p.n_vars, 4 * 36 + 16);
        assert_eq!(aux.theta.len(), 8);
        assert_eq!(lay.aux[0], "theta1");
        assert_eq!(lay.aux[15], "b2");
        let census = p.block_census();
        assert_eq!(census[&('l', 16)], 1);
        assert_eq!(census[&('q', 85)], 8);
        assert_eq!(census[&('s', 12)], 12);
    }

    #[test]
    fn lmi_census() {
        let (p, _, _) = assemble_method2(&scenario(3), Encoding::Lmi).unwrap();
        let census = p.block_census();
        assert_eq!(census[&('s', 26)], 8);
        assert_eq!(census[&('s', 6)], 12);
        assert!(!p.has_soc());
    }

    #[test]
    fn arrow_matrix_matches_direct_construction() {
        let sc = scenario(3);
        let c = &chance_constraints(&sc, true)[3];
        let r = ArrowRecipe::new(c);
        let mut q = HermitianMatrix::zeros(3);
        q.set(0, 1, C64::new(0.3, -1.2));
        q.set(2, 2, C64::new(2.0, 0.0));
        let qd = q.to_dmatrix();
        let z = r.off_diagonal(&qd);
        let v = soc_vector(&r.s, &qd, &c.channel);
        let last = z.nrows() - 1;
        for (j, vj) in v.iter().enumerate() {
            assert!((z[(j, last)] - vj).norm() < 1e-15);
            assert!((z[(last, j)] - vj.conj()).norm() < 1e-15);
        }
        let mut rest = z.clone();
        rest.column_mut(last).fill(C64::new(0.0, 0.0));
        rest.row_mut(last).fill(C64::new(0.0, 0.0));
        assert_eq!(rest.norm(), 0.0);
    }

    #[test]
    fn zero_beamformers_bound_is_constant() {
        let sc = scenario(3);
        let bf = BeamformerSet::zeros(3, 2, 2);
        let rep = bernstein_bound_check(&sc, &bf, true);
        assert_eq!(rep[0].slack, -sc.config.sigma2_i[0]);
        assert_eq!(rep[2].slack, sc.config.sigma2_e[0]);
    }
}
