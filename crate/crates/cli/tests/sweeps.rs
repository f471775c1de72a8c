//! Sweep invariants checked per realization through the library.

use proptest::prelude::*;
use swipt_cli::sweep::{run_point, summarize, Outcome, Status, SweepParam, SweepSpec};
use swipt_cli::ScenarioFile;
use swipt_core::solution::Method;

fn spec(parameter: SweepParam, values: Vec<f64>, realizations: usize, methods: &[&str]) -> SweepSpec {
    SweepSpec {
        version: 1,
        parameter,
        values,
        realizations,
        methods: methods.iter().map(|m| m.to_string()).collect(),
        base: Some(ScenarioFile::default()),
        base_path: None,
        seed: 11,
        validation_draws: 0,
    }
}

/// Power never drops as the target grows, on every realization; a target
/// that is feasible stays feasible when lowered.
fn assert_monotone(s: &SweepSpec) {
    let points: Vec<_> = s.values.iter().map(|&v| run_point(s, v).unwrap()).collect();
    for pair in points.windows(2) {
        for (lo, hi) in pair[0].iter().zip(&pair[1]) {
            for (a, b) in lo.iter().zip(hi) {
                if b.feasible() {
                    assert!(a.feasible(), "{:?} feasible only at the higher target", a.method);
                    assert!(b.power >= a.power * (1.0 - 1e-6), "{:?}: {} then {}", a.method, a.power, b.power);
                }
            }
        }
    }
}

#[test]
fn power_grows_with_the_sinr_target() {
    assert_monotone(&spec(SweepParam::GammaDb, vec![4.0, 12.0, 20.0], 3, &["method1", "method2", "benchmark"]));
}

#[test]
fn power_grows_with_the_harvesting_target() {
    assert_monotone(&spec(SweepParam::PReqDbm, vec![-15.0, -10.0, -5.0], 3, &["method1", "method2", "benchmark"]));
}

#[test]
fn more_antennas_lower_the_mean_power() {
    // Channels differ across M, so only the means are compared.
    let s = spec(SweepParam::Antennas, vec![6.0, 8.0], 100, &["benchmark"]);
    let mean = |v: f64| {
        let rows = summarize(&s, v, &run_point(&s, v).unwrap());
        assert_eq!(rows[0].included, 100);
        rows[0].power_dbm.unwrap()
    };
    let (six, eight) = (mean(6.0), mean(8.0));
    assert!(eight <= six, "M=8 {eight} dBm, M=6 {six} dBm");
}

fn outcome(method: Method, code: u8, power: f64) -> Outcome {
    Outcome {
        method,
        status: match code {
            0 => Status::Optimal,
            1 => Status::Infeasible,
            _ => Status::Failed("x".into()),
        },
        power,
        iterations: 5,
        max_rank_ratio: 0.0,
        rank_one: true,
        outage: None,
        leakage_sinr: None,
    }
}

proptest! {
    #[test]
    fn summary_rates_are_probabilities(codes in prop::collection::vec((0u8..3, 0u8..3, 0.1f64..10.0), 1..20)) {
        let s = spec(SweepParam::GammaDb, vec![0.0], codes.len(), &["method1", "method2"]);
        let outcomes: Vec<Vec<Outcome>> = codes
            .iter()
            .map(|&(a, b, p)| vec![outcome(Method::Method1, a, p), outcome(Method::Method2Soc, b, p / 2.0)])
            .collect();
        let rows = summarize(&s, 0.0, &outcomes);
        let joint = codes.iter().filter(|c| c.0 == 0 && c.1 == 0).count();
        for row in &rows {
            prop_assert!((0.0..=1.0).contains(&row.feasibility_rate));
            prop_assert_eq!(row.included, joint);
            prop_assert_eq!(row.power_dbm.is_some(), joint > 0);
        }
        if joint > 0 {
            // method 2 was given half the power on every realization
            let gap = rows[0].power_dbm.unwrap() - rows[1].power_dbm.unwrap();
            prop_assert!((gap - 10.0 * 2f64.log10()).abs() < 1e-9);
        }
    }
}
