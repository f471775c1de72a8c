//! Sphere-bounding / S-procedure approximation as a real conic program.

use conic::{Block, ConicProblem};

use crate::error::CoreError;
use crate::layout::{add_embedded, congruence, hermitian_basis, sqrt_and_channel, VarLayout};
use crate::linalg::chi2_inv_cdf;
use crate::quadforms::{chance_constraints, Family};
use crate::scenario::{Scenario, SystemConfig};

/// Squared radii `T_2M(1 - tolerance) / 2` of the error balls.
#[derive(Clone, Debug, PartialEq)]
pub struct SphereRadii {
    pub r2: Vec<f64>,
    pub q2_leak: Vec<Vec<f64>>,
    pub q2_pow: Vec<f64>,
}

pub fn squared_radius(m: usize, tolerance: f64) -> Result<f64, CoreError> {
    Ok(chi2_inv_cdf(2 * m as u32, 1.0 - tolerance)? / 2.0)
}

pub fn compute_radii(config: &SystemConfig) -> Result<SphereRadii, CoreError> {
    let r = |t: &f64| squared_radius(config.m, *t);
    Ok(SphereRadii {
        r2: config.rho.iter().map(r).collect::<Result<_, _>>()?,
        q2_leak: config
            .rho_leak
            .iter()
            .map(|row| row.iter().map(r).collect::<Result<_, _>>())
            .collect::<Result<_, _>>()?,
        q2_pow: config.varrho.iter().map(r).collect::<Result<_, _>>()?,
    })
}

fn aux_name(f: Family) -> String {
    match f {
        Family::Sinr(i) => format!("alpha{}", i + 1),
        Family::Leakage(i, t) => format!("lambda{}_{}", i + 1, t + 1),
        Family::Power(t) => format!("beta{}", t + 1),
    }
}

/// Objective `sum tr W + sum tr V` and one PSD block per matrix variable.
pub(crate) fn matrix_variables(layout: &VarLayout, p: &mut ConicProblem) -> Vec<Block> {
    let basis = hermitian_basis(layout.m);
    (0..layout.n_matrices())
        .map(|j| {
            let off = layout.matrix_offset(j);
            for k in 0..layout.m {
                p.objective[off + k] = 1.0;
            }
            let mut b = Block::psd(2 * layout.m, layout.matrix_name(j));
            for (k, e) in basis.iter().enumerate() {
                add_embedded(&mut b, Some(off + k), e, 1.0);
            }
            b
        })
        .collect()
}

/// Assemble the S-procedure problem. With `include_leakage = false` the
/// leakage rows are dropped (the baseline design).
pub fn assemble_method1_with(scenario: &Scenario, include_leakage: bool) -> Result<(ConicProblem, VarLayout), CoreError> {
    let cfg = &scenario.config;
    let m = cfg.m;
    let rows = chance_constraints(scenario, include_leakage);
    let radii = rows
        .iter()
        .map(|c| squared_radius(m, c.tolerance))
        .collect::<Result<Vec<_>, _>>()?;
    let layout = VarLayout::new(m, cfg.u, cfg.n, rows.iter().map(|c| aux_name(c.family)).collect());
    let mut p = ConicProblem::new(layout.roles());
    let basis = hermitian_basis(m);

    let mut lmis = Vec::with_capacity(rows.len());
    for (row, (c, r2)) in rows.iter().zip(&radii).enumerate() {
        let mut b = Block::psd(2 * (m + 1), c.family.label());
        let factor = sqrt_and_channel(&c.sqrt_cov, &c.channel);
        // Dividing the block by the channel energy keeps the duals O(1); the
        // multiplier is implicitly rescaled by the same amount.
        let unit = c.unit();
        for (j, coef) in c.coefs.iter().enumerate() {
            let off = layout.matrix_offset(j);
            for (k, e) in basis.iter().enumerate() {
                add_embedded(&mut b, Some(off + k), &congruence(&factor, e), *coef / unit);
            }
        }
        let aux = layout.aux_offset() + row;
        for d in 0..m {
            b.add_coeff(aux, d, d, 1.0);
            b.add_coeff(aux, d + m + 1, d + m + 1, 1.0);
        }
        for corner in [m, 2 * m + 1] {
            b.add_coeff(aux, corner, corner, -r2);
            b.add_constant(corner, corner, c.constant / unit);
        }
        b.prune();
        lmis.push(b);
    }
    for b in lmis {
        p.push(b);
    }
    for b in matrix_variables(&layout, &mut p) {
        p.push(b);
    }
    let mut nn = Block::nonneg(rows.len(), "multipliers");
    for k in 0..rows.len() {
        nn.add_coeff_at(layout.aux_offset() + k, k, 1.0);
    }
    p.push(nn);
    Ok((p, layout))
}

pub fn assemble_method1(scenario: &Scenario) -> Result<(ConicProblem, VarLayout), CoreError> {
    assemble_method1_with(scenario, true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{generate_scenario, Geometry, UniformTargets};

    #[test]
    fn single_antenna_radius_is_log() {
        let r = squared_radius(1, 0.1).unwrap();
        assert!((r - 2.302585093).abs() < 1e-8);
        assert!(squared_radius(1, 1.0).is_err());
        assert!(squared_radius(6, 0.999).unwrap() < squared_radius(6, 0.5).unwrap());
    }

    #[test]
    fn census_for_two_by_two() {
        let cfg = SystemConfig::uniform(6, 2, 2, &UniformTargets::default());
        let sc = generate_scenario(&cfg, &Geometry::reference(2, 2), 5).unwrap();
        let (p, lay) = assemble_method1(&sc).unwrap();
        assert_eq!(p.n_vars, 4 * 36 + 8);
        assert_eq!(lay.aux[2], "lambda1_1");
        let census = p.block_census();
        assert_eq!(census[&('s', 14)], 8);
        assert_eq!(census[&('s', 12)], 4);
        assert_eq!(census[&('l', 8)], 1);
        let (base, _) = assemble_method1_with(&sc, false).unwrap();
        assert_eq!(base.block_census()[&('s', 14)], 4);
    }
}
