use proptest::prelude::*;
use twolevel::{run_monte_carlo_par, LatticeEvaluator, MultiSubjectTable};
use twolevel_core::estimators::{Normalization, SingleSubjectRule, DEFAULT_TAU, DEFAULT_TAU1, DEFAULT_TAU2};
use twolevel_core::risk::{run_monte_carlo, EstimatorSpec, RegressionScenario, Scenario};
use twolevel_core::sim::{study1_grids, ModelConfig, SeriesEvaluator};
use twolevel_core::{FunctionSeries, Spectrum};

fn plan() -> Vec<EstimatorSpec> {
    vec![
        EstimatorSpec::AdaptiveG { tau: DEFAULT_TAU },
        EstimatorSpec::FixedG { beta: 0.5 },
        EstimatorSpec::AdaptiveF { tau1: DEFAULT_TAU1, tau2: DEFAULT_TAU2 },
        EstimatorSpec::SingleSubjectF { rule: SingleSubjectRule::default() },
    ]
}

#[test]
fn parallel_matches_sequential_in_sequence_mode() {
    let s = Spectrum::with_decay(0.5).unwrap();
    let cfg = ModelConfig::sequence(30, 12, s, s).unwrap();
    let a = run_monte_carlo(&cfg, &plan(), Scenario::Sequence, 16, 5).unwrap();
    let b = run_monte_carlo_par(&cfg, &plan(), Scenario::Sequence, 16, 5).unwrap();
    assert_eq!(a, b);
}

#[test]
fn parallel_matches_sequential_in_regression_mode() {
    let (n, m, lattice) = (40, 6, 20_000);
    let s = Spectrum::with_decay(0.5).unwrap();
    let cfg = ModelConfig::regression(n, m, s, s, 200).unwrap();
    let grids: Vec<Vec<f64>> = (1..=m).map(|j| study1_grids(n, m, j, lattice).unwrap().train).collect();
    let eval = study1_grids(n, m, 1, lattice).unwrap().eval;
    let fft = LatticeEvaluator::new(lattice);
    let scenario = Scenario::Regression(RegressionScenario {
        grids: &grids,
        g_eval: &eval,
        f_eval: &eval,
        width: 20,
        normalization: Normalization::Mean,
        evaluator: &fft,
    });
    let a = run_monte_carlo(&cfg, &plan(), scenario, 6, 9).unwrap();
    let b = run_monte_carlo_par(&cfg, &plan(), scenario, 6, 9).unwrap();
    assert_eq!(a, b);
}

#[test]
fn lattice_evaluator_matches_direct_sum_on_and_off_lattice() {
    let coeffs: Vec<f64> = (1..=301).map(|k| ((k * 7919) % 113) as f64 / 113.0 - 0.5).collect();
    let series = FunctionSeries::new(coeffs).unwrap();
    let fft = LatticeEvaluator::new(2048);
    let on: Vec<f64> = (0..2048).map(|i| i as f64 / 2048.0).collect();
    let off = [0.1234567, 0.5 + 1e-7, 0.999];
    for points in [&on[..], &off[..]] {
        let fast = fft.eval(&series, points);
        let slow = series.eval_many(points);
        for (x, y) in fast.iter().zip(&slow) {
            assert!((x - y).abs() < 1e-10, "{x} vs {y}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn table_parser_never_panics(text in "(subject,i,t,y\n)?([A-C0-9.,e+\\- \n#]{0,200})") {
        let _ = MultiSubjectTable::parse(&text);
    }

    #[test]
    fn table_parser_survives_arbitrary_bytes(text in "\\PC{0,300}") {
        let _ = MultiSubjectTable::parse(&text);
    }

    #[test]
    fn well_formed_tables_load(m in 1usize..5, n in 2usize..12, seed in 0u64..1000) {
        let mut text = String::from("subject,i,t,y\n");
        for j in 0..m {
            for i in 1..=n {
                let y = ((seed + (j * n + i) as u64) % 17) as f64 * 0.25 - 2.0;
                text.push_str(&format!("S{j},{i},{},{y}\n", (i - 1) as f64 / n as f64));
            }
        }
        let t = MultiSubjectTable::parse(&text).unwrap();
        prop_assert_eq!((t.m(), t.n()), (m, n));
    }
}
