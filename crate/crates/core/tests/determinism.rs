use std::f64::consts::PI;

use spinhalf::analytic::StrategyId;
use spinhalf::montecarlo::{run_trials, TrialPlan};

fn in_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .unwrap()
        .install(f)
}

#[test]
fn reports_do_not_depend_on_thread_count() {
    for strategy in [
        StrategyId::BayesJoint,
        StrategyId::JointBiased,
        StrategyId::ThreeJoint,
    ] {
        let plan = TrialPlan::with_angle(strategy, 4, PI / 6.0, 10_000, 31);
        let one = in_pool(1, || run_trials(&plan).unwrap());
        let eight = in_pool(8, || run_trials(&plan).unwrap());
        assert_eq!(one, eight);
        assert_eq!(
            one.empirical_error.to_bits(),
            eight.empirical_error.to_bits()
        );
        assert_eq!(one.standard_error.to_bits(), eight.standard_error.to_bits());
    }
}

#[test]
fn trial_count_not_a_multiple_of_the_chunk() {
    let plan = TrialPlan::with_angle(StrategyId::SepBiased, 2, 0.4, 3_001, 5);
    let one = in_pool(1, || run_trials(&plan).unwrap());
    let three = in_pool(3, || run_trials(&plan).unwrap());
    assert_eq!(one, three);
    assert_eq!(one.trials, 3_001);
}
