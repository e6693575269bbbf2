//! Seeded Monte Carlo estimation of `ε_T` for every strategy.
//!
//! Each trial draws a uniformly random pure state, simulates the strategy's
//! measurements on its copies, forms the estimates and records the squared
//! error summed over observables. Trial `i` always consumes its own ChaCha
//! stream `(master_seed, i)`, and trials are reduced in fixed-size chunks
//! combined in index order, so a report depends only on its plan and never
//! on the rayon thread count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::analytic::{self, ErrorQuery, StrategyId};
use crate::bloch::{angle_between, sample_pure_state, trace_distance, BlochVector};
use crate::error::{Error, Result};
use crate::estimators::{
    bayes_single_estimate, cross_weighted_estimate, is_physical, joint_biased_estimate,
    joint_rescaled_estimate, mean_estimate, shrinkage_estimate, AxisCounts, BayesJointKernel,
    OutcomeCounts,
};
use crate::povm::{
    distribution_unchecked, joint_povm_three, joint_povm_two, optimal_sharpness_pair,
    projective_povm, validate_povm, Povm,
};

pub type RngStream = ChaCha8Rng;

/// Trials per reduction chunk. Part of the reproducibility contract:
/// changing it changes the rounding of reported sums.
const CHUNK: u64 = 1024;

/// Independent stream for one trial.
pub fn derive_substream(master_seed: u64, trial_index: u64) -> RngStream {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(trial_index);
    rng
}

/// Draws `copies` i.i.d. outcomes of `povm` on `state` and tallies the `+`
/// results per axis.
pub fn simulate_counts<R: Rng + ?Sized>(
    povm: &Povm,
    state: BlochVector,
    copies: u64,
    rng: &mut R,
) -> Result<OutcomeCounts> {
    let report = validate_povm(povm);
    if !report.pass {
        return Err(Error::InvalidPovm(format!(
            "positivity residual {}",
            report.min_positivity_residual
        )));
    }
    if copies == 0 {
        return Err(Error::NoShots);
    }
    if state.norm() > 1.0 + 1e-12 {
        return Err(Error::OutOfRange {
            name: "|state|",
            value: state.norm(),
            range: "[0, 1]",
        });
    }
    let mut ups = [0u64; 3];
    tally(povm, state, copies, rng, &mut ups);
    Ok(OutcomeCounts {
        axes: ups[..povm.arity()]
            .iter()
            .map(|&up| AxisCounts { up, shots: copies })
            .collect(),
    })
}

fn tally<R: Rng + ?Sized>(
    povm: &Povm,
    state: BlochVector,
    copies: u64,
    rng: &mut R,
    ups: &mut [u64; 3],
) {
    let probs = distribution_unchecked(povm, state);
    let total: f64 = probs.iter().sum();
    let labels = povm.labels();
    for _ in 0..copies {
        let mut u = rng.random::<f64>() * total;
        let mut pick = probs.len() - 1;
        for (i, p) in probs.iter().enumerate() {
            if u < *p {
                pick = i;
                break;
            }
            u -= p;
        }
        // Rounding can leave `u` past the last non-zero outcome.
        while probs[pick] == 0.0 && pick > 0 {
            pick -= 1;
        }
        for (axis, sign) in labels[pick].iter().enumerate() {
            if *sign == 1 {
                ups[axis] += 1;
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialPlan {
    pub strategy: StrategyId,
    /// Copies per observable.
    pub n: u32,
    /// Observable directions for two-observable strategies. Three-observable
    /// strategies always measure σx, σy, σz.
    pub a: BlochVector,
    pub b: BlochVector,
    /// Copies given to `a` by the split strategy; defaults to `n`.
    pub split: Option<u32>,
    pub trials: u64,
    pub master_seed: u64,
}

impl TrialPlan {
    /// `a` along +z and `b` in the x–z plane at angle `eta`.
    pub fn with_angle(
        strategy: StrategyId,
        n: u32,
        eta: f64,
        trials: u64,
        master_seed: u64,
    ) -> Self {
        Self {
            strategy,
            n,
            a: BlochVector::Z,
            b: BlochVector::in_xz_plane(eta),
            split: None,
            trials,
            master_seed,
        }
    }

    fn invalid(&self, problem: impl Into<String>) -> Error {
        Error::StrategyParameters {
            strategy: self.strategy.name(),
            problem: problem.into(),
        }
    }

    pub fn eta(&self) -> Result<f64> {
        angle_between(self.a, self.b)
    }

    fn query(&self) -> Result<ErrorQuery> {
        let mut q = ErrorQuery::new(self.strategy, self.n).with_eta(self.eta()?);
        q.split = Some(self.split.unwrap_or(self.n));
        Ok(q)
    }

    fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(self.invalid("needs at least one trial"));
        }
        if self.n == 0 {
            return Err(self.invalid("needs N ≥ 1"));
        }
        self.a.require_unit()?;
        self.b.require_unit()?;
        if let Some(n1) = self.split {
            if n1 == 0 || n1 >= 2 * self.n {
                return Err(self.invalid(format!("split N1 = {n1} must lie in 1..2N-1")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorReport {
    pub strategy: StrategyId,
    pub n: u32,
    pub eta: f64,
    pub empirical_error: f64,
    pub standard_error: f64,
    pub analytic_error: f64,
    pub trials: u64,
    pub seed: u64,
    /// Fraction of trials with an estimate outside [-1, 1] (two observables)
    /// or an estimated Bloch vector longer than 1 (three observables).
    pub out_of_range_fraction: f64,
    /// Mean squared trace distance between true and estimated states; only
    /// for three-observable strategies.
    pub mean_trace_distance_sq: Option<f64>,
}

impl ErrorReport {
    /// `|empirical − analytic|` in units of the standard error.
    pub fn z_score(&self) -> f64 {
        if self.standard_error == 0.0 {
            return if self.empirical_error == self.analytic_error {
                0.0
            } else {
                f64::INFINITY
            };
        }
        (self.empirical_error - self.analytic_error).abs() / self.standard_error
    }

    pub fn within_sigmas(&self, k: f64) -> bool {
        (self.empirical_error - self.analytic_error).abs() <= k * self.standard_error
    }
}

/// Per-strategy state shared by all trials.
enum Simulator {
    Separate {
        povm_a: Povm,
        povm_b: Povm,
        shots_a: u64,
        shots_b: u64,
        estimate: SeparateEstimate,
    },
    Joint {
        povm: Povm,
        shots: u64,
        alpha: f64,
        biased: bool,
    },
    ThreeSeparate {
        povms: [Povm; 3],
        shots: u64,
        biased: bool,
    },
    ThreeJoint {
        povm: Povm,
        shots: u64,
        alpha: f64,
    },
}

enum SeparateEstimate {
    Mean,
    Shrinkage,
    Cross { adotb: f64 },
    BayesSingle { table: Vec<f64> },
    BayesJoint { table: Vec<f64> },
}

struct TrialOutcome {
    squared_error: f64,
    trace_distance_sq: f64,
    out_of_range: bool,
}

impl Simulator {
    fn new(plan: &TrialPlan) -> Result<Self> {
        let n = u64::from(plan.n);
        let (a, b) = (plan.a, plan.b);
        let separate = |estimate, shots_a, shots_b| -> Result<Self> {
            Ok(Simulator::Separate {
                povm_a: projective_povm(a)?,
                povm_b: projective_povm(b)?,
                shots_a,
                shots_b,
                estimate,
            })
        };
        let joint = |biased| -> Result<Self> {
            let alpha = optimal_sharpness_pair(plan.eta()?)?.alpha;
            Ok(Simulator::Joint {
                povm: joint_povm_two(a, b, alpha, alpha)?,
                shots: 2 * n,
                alpha,
                biased,
            })
        };
        let three_separate = |biased| -> Result<Self> {
            Ok(Simulator::ThreeSeparate {
                povms: [
                    projective_povm(BlochVector::X)?,
                    projective_povm(BlochVector::Y)?,
                    projective_povm(BlochVector::Z)?,
                ],
                shots: n,
                biased,
            })
        };
        match plan.strategy {
            StrategyId::SepUnbiased => separate(SeparateEstimate::Mean, n, n),
            StrategyId::SepUnbiasedSplit => {
                let n1 = u64::from(plan.split.unwrap_or(plan.n));
                separate(SeparateEstimate::Mean, n1, 2 * n - n1)
            }
            StrategyId::SepBiased => separate(SeparateEstimate::Shrinkage, n, n),
            StrategyId::CrossWeighted => {
                separate(SeparateEstimate::Cross { adotb: a.dot(&b) }, n, n)
            }
            StrategyId::BayesSingle => {
                let table = (0..=n)
                    .map(|r| bayes_single_estimate(r, n))
                    .collect::<Result<_>>()?;
                separate(SeparateEstimate::BayesSingle { table }, n, n)
            }
            StrategyId::BayesJoint => {
                let adotb = a.dot(&b).clamp(-1.0, 1.0);
                let nodes = analytic::default_node_count(plan.n);
                let table = BayesJointKernel::new(n, adotb, nodes)?.table();
                separate(SeparateEstimate::BayesJoint { table }, n, n)
            }
            StrategyId::JointUnbiased => joint(false),
            StrategyId::JointBiased => joint(true),
            StrategyId::ThreeSepUnbiased => three_separate(false),
            StrategyId::ThreeSepBiased => three_separate(true),
            StrategyId::ThreeJoint => Ok(Simulator::ThreeJoint {
                povm: joint_povm_three(),
                shots: analytic::three_joint_shots(plan.n),
                alpha: analytic::three_joint_sharpness(),
            }),
        }
    }

    fn run(&self, rng: &mut RngStream) -> TrialOutcome {
        let state = sample_pure_state(rng);
        match self {
            Simulator::Separate {
                povm_a,
                povm_b,
                shots_a,
                shots_b,
                estimate,
            } => {
                let ca = draw_axis(povm_a, state, *shots_a, rng);
                let cb = draw_axis(povm_b, state, *shots_b, rng);
                let (ea, eb) = match estimate {
                    SeparateEstimate::Mean => (mean(ca), mean(cb)),
                    SeparateEstimate::Shrinkage => (shrink(ca), shrink(cb)),
                    SeparateEstimate::Cross { adotb } => {
                        cross_weighted_estimate(ca, cb, *adotb).expect("equal shots")
                    }
                    SeparateEstimate::BayesSingle { table } => {
                        (table[ca.up as usize], table[cb.up as usize])
                    }
                    SeparateEstimate::BayesJoint { table } => {
                        let stride = *shots_a as usize + 1;
                        let (r, s) = (ca.up as usize, cb.up as usize);
                        (table[r * stride + s], table[s * stride + r])
                    }
                };
                two_axis_outcome(povm_a, povm_b, state, ea, eb)
            }
            Simulator::Joint {
                povm,
                shots,
                alpha,
                biased,
            } => {
                let mut ups = [0u64; 3];
                tally(povm, state, *shots, rng, &mut ups);
                let est = |up| {
                    let c = AxisCounts { up, shots: *shots };
                    if *biased {
                        joint_biased_estimate(c, *alpha)
                    } else {
                        joint_rescaled_estimate(c, *alpha)
                    }
                    .expect("validated sharpness")
                };
                let axes = povm.axes();
                two_axis_outcome_dirs(axes[0], axes[1], state, est(ups[0]), est(ups[1]))
            }
            Simulator::ThreeSeparate {
                povms,
                shots,
                biased,
            } => {
                let mut est = [0.0; 3];
                for (e, povm) in est.iter_mut().zip(povms) {
                    let c = draw_axis(povm, state, *shots, rng);
                    *e = if *biased { shrink(c) } else { mean(c) };
                }
                three_axis_outcome(state, est)
            }
            Simulator::ThreeJoint { povm, shots, alpha } => {
                let mut ups = [0u64; 3];
                tally(povm, state, *shots, rng, &mut ups);
                let est = ups.map(|up| {
                    joint_biased_estimate(AxisCounts { up, shots: *shots }, *alpha)
                        .expect("validated sharpness")
                });
                three_axis_outcome(state, est)
            }
        }
    }
}

fn draw_axis(povm: &Povm, state: BlochVector, shots: u64, rng: &mut RngStream) -> AxisCounts {
    let mut ups = [0u64; 3];
    tally(povm, state, shots, rng, &mut ups);
    AxisCounts { up: ups[0], shots }
}

fn mean(c: AxisCounts) -> f64 {
    mean_estimate(c).expect("shots ≥ 1")
}

fn shrink(c: AxisCounts) -> f64 {
    shrinkage_estimate(c).expect("shots ≥ 1")
}

fn two_axis_outcome(pa: &Povm, pb: &Povm, state: BlochVector, ea: f64, eb: f64) -> TrialOutcome {
    two_axis_outcome_dirs(pa.axes()[0], pb.axes()[0], state, ea, eb)
}

fn two_axis_outcome_dirs(
    a: BlochVector,
    b: BlochVector,
    state: BlochVector,
    ea: f64,
    eb: f64,
) -> TrialOutcome {
    let da = a.dot(&state) - ea;
    let db = b.dot(&state) - eb;
    TrialOutcome {
        squared_error: da * da + db * db,
        trace_distance_sq: 0.0,
        out_of_range: !is_physical(ea) || !is_physical(eb),
    }
}

fn three_axis_outcome(state: BlochVector, est: [f64; 3]) -> TrialOutcome {
    let estimated = BlochVector::new(est[0], est[1], est[2]);
    let squared_error = state
        .to_array()
        .iter()
        .zip(est)
        .map(|(t, e)| (t - e) * (t - e))
        .sum();
    let d = trace_distance(state, estimated);
    TrialOutcome {
        squared_error,
        trace_distance_sq: d * d,
        out_of_range: estimated.norm() > 1.0,
    }
}

/// Running moments for one chunk (Welford), merged with Chan's formula.
#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    count: f64,
    mean: f64,
    m2: f64,
    trace_sum: f64,
    out_of_range: u64,
}

impl Moments {
    fn push(&mut self, t: &TrialOutcome) {
        self.count += 1.0;
        let delta = t.squared_error - self.mean;
        self.mean += delta / self.count;
        self.m2 += delta * (t.squared_error - self.mean);
        self.trace_sum += t.trace_distance_sq;
        self.out_of_range += u64::from(t.out_of_range);
    }

    fn merge(self, other: Self) -> Self {
        if self.count == 0.0 {
            return other;
        }
        let count = self.count + other.count;
        let delta = other.mean - self.mean;
        Self {
            count,
            mean: self.mean + delta * other.count / count,
            m2: self.m2 + other.m2 + delta * delta * self.count * other.count / count,
            trace_sum: self.trace_sum + other.trace_sum,
            out_of_range: self.out_of_range + other.out_of_range,
        }
    }
}

/// Runs every trial of `plan` and compares with the analytic error.
pub fn run_trials(plan: &TrialPlan) -> Result<ErrorReport> {
    plan.validate()?;
    let simulator = Simulator::new(plan)?;
    let analytic_error = analytic::analytic_error(&plan.query()?)?;

    let chunks = plan.trials.div_ceil(CHUNK);
    let partials: Vec<Moments> = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let start = chunk * CHUNK;
            let end = (start + CHUNK).min(plan.trials);
            let mut m = Moments::default();
            for i in start..end {
                let mut rng = derive_substream(plan.master_seed, i);
                m.push(&simulator.run(&mut rng));
            }
            m
        })
        .collect();
    let total = partials
        .into_iter()
        .fold(Moments::default(), Moments::merge);

    let trials = plan.trials as f64;
    let variance = if plan.trials > 1 {
        total.m2 / (trials - 1.0)
    } else {
        0.0
    };
    Ok(ErrorReport {
        strategy: plan.strategy,
        n: plan.n,
        eta: plan.eta()?,
        empirical_error: total.mean,
        standard_error: (variance / trials).sqrt(),
        analytic_error,
        trials: plan.trials,
        seed: plan.master_seed,
        out_of_range_fraction: total.out_of_range as f64 / trials,
        mean_trace_distance_sq: plan
            .strategy
            .is_three_observable()
            .then(|| total.trace_sum / trials),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::povm::projective_povm;
    use std::f64::consts::PI;

    #[test]
    fn substreams_are_reproducible_and_distinct() {
        let mut a = derive_substream(42, 7);
        let mut b = derive_substream(42, 7);
        let xs: Vec<u64> = (0..4).map(|_| a.random()).collect();
        let ys: Vec<u64> = (0..4).map(|_| b.random()).collect();
        assert_eq!(xs, ys);
        let first0: u64 = derive_substream(42, 0).random();
        let first1: u64 = derive_substream(42, 1).random();
        assert_ne!(first0, first1);
        let other_seed: u64 = derive_substream(43, 0).random();
        assert_ne!(first0, other_seed);
    }

    #[test]
    fn eigenstate_counts() {
        let p = projective_povm(BlochVector::Z).unwrap();
        let mut rng = derive_substream(1, 0);
        let c = simulate_counts(&p, BlochVector::Z, 100, &mut rng).unwrap();
        assert_eq!(
            c.axis(0),
            AxisCounts {
                up: 100,
                shots: 100
            }
        );
        let c = simulate_counts(&p, -BlochVector::Z, 100, &mut rng).unwrap();
        assert_eq!(c.axis(0).up, 0);
    }

    #[test]
    fn fair_coin_counts() {
        let p = projective_povm(BlochVector::Z).unwrap();
        let mut rng = derive_substream(2, 0);
        let copies = 1_000_000;
        let c = simulate_counts(&p, BlochVector::X, copies, &mut rng).unwrap();
        let frac = c.axis(0).up as f64 / copies as f64;
        assert!((frac - 0.5).abs() < 3.0 * 0.0005, "{frac}");
    }

    #[test]
    fn three_axis_counts() {
        let p = joint_povm_three();
        let mut rng = derive_substream(3, 0);
        let copies = 1_000_000u64;
        let c = simulate_counts(&p, BlochVector::Z, copies, &mut rng).unwrap();
        let want = 0.5 * (1.0 + 1.0 / 3f64.sqrt());
        let sigma = (want * (1.0 - want) / copies as f64).sqrt();
        let frac = c.axis(2).up as f64 / copies as f64;
        assert!((frac - want).abs() < 3.0 * sigma, "{frac}");
        for axis in [0, 1] {
            let frac = c.axis(axis).up as f64 / copies as f64;
            assert!((frac - 0.5).abs() < 3.0 * 0.0005);
        }
    }

    #[test]
    fn simulate_rejects_bad_input() {
        let p = projective_povm(BlochVector::Z).unwrap();
        let mut rng = derive_substream(0, 0);
        assert!(simulate_counts(&p, BlochVector::Z, 0, &mut rng).is_err());
        assert!(simulate_counts(&p, 2.0 * BlochVector::Z, 1, &mut rng).is_err());
    }

    #[test]
    fn plan_validation() {
        let mut plan = TrialPlan::with_angle(StrategyId::SepUnbiased, 2, 0.3, 0, 1);
        assert!(run_trials(&plan).is_err());
        plan.trials = 10;
        plan.n = 0;
        assert!(run_trials(&plan).is_err());
        plan.n = 2;
        plan.strategy = StrategyId::SepUnbiasedSplit;
        plan.split = Some(4);
        assert!(run_trials(&plan).is_err());
        plan.split = Some(3);
        assert!(run_trials(&plan).is_ok());
        plan.a = 0.5 * BlochVector::Z;
        assert!(run_trials(&plan).is_err());
    }

    #[test]
    fn report_is_a_function_of_the_plan() {
        let plan = TrialPlan::with_angle(StrategyId::BayesJoint, 3, PI / 5.0, 5000, 99);
        let first = run_trials(&plan).unwrap();
        let second = run_trials(&plan).unwrap();
        assert_eq!(first, second);
        let other = run_trials(&TrialPlan {
            master_seed: 100,
            ..plan
        })
        .unwrap();
        assert_ne!(first.empirical_error, other.empirical_error);
    }

    #[test]
    fn strategies_agree_with_analytic_at_modest_trials() {
        for strategy in StrategyId::ALL {
            let plan = TrialPlan::with_angle(strategy, 3, PI / 6.0, 200_000, 2024);
            let r = run_trials(&plan).unwrap();
            if strategy == StrategyId::BayesJoint {
                let physical = analytic::bayes_joint_physical_error(3, r.eta.cos(), 64).unwrap();
                assert!((r.empirical_error - physical).abs() < 4.0 * r.standard_error);
            } else {
                assert!(r.z_score() < 4.0, "{strategy}: {r:?}");
            }
        }
    }

    #[test]
    fn rescaled_joint_estimates_leave_the_physical_range() {
        let plan = TrialPlan::with_angle(StrategyId::JointUnbiased, 1, PI / 2.0, 10_000, 5);
        let r = run_trials(&plan).unwrap();
        // Two shots: unanimous results give ±√2.
        assert!(r.out_of_range_fraction > 0.5);
        let plan = TrialPlan::with_angle(StrategyId::SepBiased, 1, PI / 2.0, 10_000, 5);
        assert_eq!(run_trials(&plan).unwrap().out_of_range_fraction, 0.0);
    }

    #[test]
    fn three_axis_trace_distance_matches_error() {
        for strategy in [
            StrategyId::ThreeSepUnbiased,
            StrategyId::ThreeSepBiased,
            StrategyId::ThreeJoint,
        ] {
            let r = run_trials(&TrialPlan::with_angle(strategy, 3, 0.0, 20_000, 8)).unwrap();
            let d2 = r.mean_trace_distance_sq.unwrap();
            assert!((d2 - r.empirical_error).abs() <= 1e-12, "{strategy}");
        }
        let r = run_trials(&TrialPlan::with_angle(
            StrategyId::SepBiased,
            3,
            0.0,
            100,
            8,
        ))
        .unwrap();
        assert_eq!(r.mean_trace_distance_sq, None);
    }
}
