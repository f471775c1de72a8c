//! Worst-case interior-point cost model for both approximations.

use serde::{Deserialize, Serialize};

use crate::error::CoreError;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComplexityEstimate {
    pub method: u8,
    pub zeta: f64,
    pub eta: f64,
    pub n: f64,
    pub epsilon: f64,
    pub iteration_factor: f64,
    pub per_iteration_cost: f64,
    pub total: f64,
}

/// Cost with `n = (U + N) M^2`, all order constants set to one.
pub fn estimate(method: u8, u: usize, n_er: usize, m: usize, epsilon: f64) -> Result<ComplexityEstimate, CoreError> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(CoreError::Domain(format!("accuracy {epsilon} outside (0, 1)")));
    }
    if u < 1 || n_er < 1 || m < 2 {
        return Err(CoreError::Domain("need U, N >= 1 and M > 1".into()));
    }
    let mf = m as f64;
    let zeta = (u + n_er) as f64;
    let eta = zeta + (u * n_er) as f64;
    let n = zeta * mf * mf;
    let log = (1.0 / epsilon).ln();
    let (root, bracket) = match method {
        1 => (
            (eta * (mf + 1.0) + zeta * mf).sqrt(),
            eta * (mf + 1.0).powi(2) * (mf + 1.0 + n) + zeta * mf * mf * (mf + n) + n * n,
        ),
        2 => {
            let k = mf * mf + mf + 1.0;
            (
                ((zeta + eta) * mf + 4.0 * eta).sqrt(),
                eta * (k * k + 2.0 * n + 2.0) + (zeta + eta) * mf * mf * (mf + n) + n * n,
            )
        }
        _ => return Err(CoreError::Domain(format!("unknown method {method}"))),
    };
    let iteration_factor = log * root;
    let per_iteration_cost = bracket * n;
    Ok(ComplexityEstimate {
        method,
        zeta,
        eta,
        n,
        epsilon,
        iteration_factor,
        per_iteration_cost,
        total: iteration_factor * per_iteration_cost,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_log_factor() {
        let e = estimate(1, 2, 2, 6, (-1.0f64).exp()).unwrap();
        assert!((e.iteration_factor - (8.0 * 7.0 + 4.0 * 6.0f64).sqrt()).abs() < 1e-12);
        assert_eq!(e.total, e.iteration_factor * e.per_iteration_cost);
    }

    #[test]
    fn domain() {
        assert!(estimate(1, 2, 2, 6, 0.0).is_err());
        assert!(estimate(2, 2, 2, 6, 1.0).is_err());
        assert!(estimate(3, 2, 2, 6, 0.5).is_err());
    }
}
