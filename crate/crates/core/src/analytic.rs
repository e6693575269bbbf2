//! Closed forms and exact sums for the total averaged squared error `ε_T`
//! of every strategy, averaged over uniformly distributed pure states.
//!
//! `n` is always the number of copies per observable: two-observable
//! strategies use `2n` copies in total, three-observable ones `3n`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{single_moments, BayesJointKernel};
use crate::povm::optimal_sharpness_pair;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StrategyId {
    SepUnbiased,
    SepUnbiasedSplit,
    JointUnbiased,
    SepBiased,
    JointBiased,
    CrossWeighted,
    BayesSingle,
    BayesJoint,
    ThreeSepUnbiased,
    ThreeSepBiased,
    ThreeJoint,
}

impl StrategyId {
    pub const ALL: [StrategyId; 11] = [
        Self::SepUnbiased,
        Self::SepUnbiasedSplit,
        Self::JointUnbiased,
        Self::SepBiased,
        Self::JointBiased,
        Self::CrossWeighted,
        Self::BayesSingle,
        Self::BayesJoint,
        Self::ThreeSepUnbiased,
        Self::ThreeSepBiased,
        Self::ThreeJoint,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Self::SepUnbiased => "sep-unbiased",
            Self::SepUnbiasedSplit => "sep-unbiased-split",
            Self::JointUnbiased => "joint-unbiased",
            Self::SepBiased => "sep-biased",
            Self::JointBiased => "joint-biased",
            Self::CrossWeighted => "cross-weighted",
            Self::BayesSingle => "bayes-single",
            Self::BayesJoint => "bayes-joint",
            Self::ThreeSepUnbiased => "three-sep-unbiased",
            Self::ThreeSepBiased => "three-sep-biased",
            Self::ThreeJoint => "three-joint",
        }
    }

    pub fn is_three_observable(&self) -> bool {
        matches!(
            self,
            Self::ThreeSepUnbiased | Self::ThreeSepBiased | Self::ThreeJoint
        )
    }

    /// Whether the error depends on the relative orientation of `a` and `b`.
    pub fn uses_geometry(&self) -> bool {
        matches!(
            self,
            Self::JointUnbiased | Self::JointBiased | Self::CrossWeighted | Self::BayesJoint
        )
    }

    /// Whether the strategy measures both observables on every copy.
    pub fn is_joint(&self) -> bool {
        matches!(
            self,
            Self::JointUnbiased | Self::JointBiased | Self::ThreeJoint
        )
    }
}

impl fmt::Display for StrategyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for StrategyId {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Self::ALL
            .into_iter()
            .find(|id| id.name() == s)
            .ok_or_else(|| format!("unknown strategy '{s}'"))
    }
}

/// Inputs to an analytic error evaluation. Either `eta` or `adotb` fixes
/// the geometry; when both are set `eta` wins.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorQuery {
    pub strategy: StrategyId,
    pub n: u32,
    pub eta: Option<f64>,
    pub adotb: Option<f64>,
    pub split: Option<u32>,
}

impl ErrorQuery {
    pub fn new(strategy: StrategyId, n: u32) -> Self {
        Self {
            strategy,
            n,
            eta: None,
            adotb: None,
            split: None,
        }
    }

    pub fn with_eta(mut self, eta: f64) -> Self {
        self.eta = Some(eta);
        self
    }

    pub fn with_adotb(mut self, adotb: f64) -> Self {
        self.adotb = Some(adotb);
        self
    }

    pub fn with_split(mut self, n1: u32) -> Self {
        self.split = Some(n1);
        self
    }

    fn problem(&self, problem: impl Into<String>) -> Error {
        Error::StrategyParameters {
            strategy: self.strategy.name(),
            problem: problem.into(),
        }
    }

    fn copies(&self) -> Result<f64> {
        if self.n == 0 {
            return Err(self.problem("needs N ≥ 1"));
        }
        Ok(f64::from(self.n))
    }

    /// Angle between the observables, in [0, π].
    pub fn angle(&self) -> Result<f64> {
        match (self.eta, self.adotb) {
            (Some(eta), _) => {
                if !(0.0..=std::f64::consts::PI).contains(&eta) {
                    return Err(Error::OutOfRange {
                        name: "eta",
                        value: eta,
                        range: "[0, π]",
                    });
                }
                Ok(eta)
            }
            (None, Some(c)) => Ok(check_inner_product(c)?.acos()),
            (None, None) => Err(self.problem("needs eta or a·b")),
        }
    }

    /// `a·b`, in [-1, 1].
    pub fn inner_product(&self) -> Result<f64> {
        match (self.eta, self.adotb) {
            (Some(_), _) => Ok(self.angle()?.cos()),
            (None, Some(c)) => check_inner_product(c),
            (None, None) => Err(self.problem("needs eta or a·b")),
        }
    }
}

fn check_inner_product(c: f64) -> Result<f64> {
    if !(-1.0..=1.0).contains(&c) {
        return Err(Error::OutOfRange {
            name: "a·b",
            value: c,
            range: "[-1, 1]",
        });
    }
    Ok(c)
}

/// Sample means on `n` copies per observable: `4/(3n)`.
pub fn sep_unbiased_error(n: f64) -> f64 {
    4.0 / (3.0 * n)
}

/// Sample means with `n1` copies on `a` and `2n − n1` on `b`.
pub fn sep_unbiased_split_error(n: f64, n1: f64) -> f64 {
    2.0 / (3.0 * n1) + 2.0 / (3.0 * (2.0 * n - n1))
}

/// Rescaled joint estimates with equal sharpness `alpha` on `2n` copies:
/// `(1/n)(1/α² − 1/3)`.
pub fn joint_unbiased_error(n: f64, alpha: f64) -> f64 {
    (1.0 / (alpha * alpha) - 1.0 / 3.0) / n
}

/// Shrinkage estimates on `n` copies per observable: `4/(3(n + 2))`.
pub fn sep_biased_error(n: f64) -> f64 {
    4.0 / (3.0 * (n + 2.0))
}

/// Per-observable error of a gain-optimised joint estimate from `shots`
/// results of sharpness `alpha`: `(3 − α²)/(3(3 − α² + shots·α²))`.
pub fn joint_biased_axis_error(shots: f64, alpha: f64) -> f64 {
    let a2 = alpha * alpha;
    (3.0 - a2) / (3.0 * (3.0 - a2 + shots * a2))
}

/// Two observables, gain-optimised joint estimates on `2n` copies:
/// `2(3 − α²)/(3(3 − α² + 2nα²))`.
pub fn joint_biased_error(n: f64, alpha: f64) -> f64 {
    2.0 * joint_biased_axis_error(2.0 * n, alpha)
}

/// Cross-weighted estimates: `4[n(a·b)² − n − 2]/(3[n²(a·b)² − (n + 2)²])`.
pub fn cross_weighted_error(n: f64, adotb: f64) -> f64 {
    let c2 = adotb * adotb;
    4.0 * (n * c2 - n - 2.0) / (3.0 * (n * n * c2 - (n + 2.0).powi(2)))
}

/// Exact total error for the closed-form two-observable strategies. Joint
/// strategies use the optimal equal sharpness for the query's angle.
pub fn two_observable_error(q: &ErrorQuery) -> Result<f64> {
    let n = q.copies()?;
    match q.strategy {
        StrategyId::SepUnbiased => Ok(sep_unbiased_error(n)),
        StrategyId::SepUnbiasedSplit => {
            let n1 = q.split.ok_or_else(|| q.problem("needs a split N1"))?;
            if n1 == 0 || n1 >= 2 * q.n {
                return Err(q.problem(format!("split N1 = {n1} must lie in 1..2N-1")));
            }
            Ok(sep_unbiased_split_error(n, f64::from(n1)))
        }
        StrategyId::JointUnbiased => {
            let alpha = optimal_sharpness_pair(q.angle()?)?.alpha;
            Ok(joint_unbiased_error(n, alpha))
        }
        StrategyId::SepBiased => Ok(sep_biased_error(n)),
        StrategyId::JointBiased => {
            let alpha = optimal_sharpness_pair(q.angle()?)?.alpha;
            Ok(joint_biased_error(n, alpha))
        }
        StrategyId::CrossWeighted => Ok(cross_weighted_error(n, q.inner_product()?)),
        other => Err(q.problem(format!("{other} has no two-observable closed form"))),
    }
}

/// The single-observable Bayesian total error by two routes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BayesSingleError {
    /// `4/(3(n + 2))`.
    pub closed_form: f64,
    /// `2·[1/3 − (1/2)Σ_r C(n,r)·I₁ᵣ²/I₀ᵣ]` with beta-function moments.
    pub exact_sum: f64,
}

impl BayesSingleError {
    pub fn discrepancy(&self) -> f64 {
        (self.closed_form - self.exact_sum).abs()
    }
}

fn binomial_row(n: u64) -> Vec<f64> {
    let mut row = Vec::with_capacity(n as usize + 1);
    let mut c = 1.0;
    for r in 0..=n {
        if r > 0 {
            c = c * (n - r + 1) as f64 / r as f64;
        }
        row.push(c);
    }
    row
}

pub fn bayes_single_error(n: u32) -> Result<BayesSingleError> {
    if n == 0 {
        return Err(Error::StrategyParameters {
            strategy: StrategyId::BayesSingle.name(),
            problem: "needs N ≥ 1".into(),
        });
    }
    let n64 = u64::from(n);
    let mut sum = 0.0;
    for (r, c) in binomial_row(n64).into_iter().enumerate() {
        let (i0, i1) = single_moments(r as u64, n64)?;
        sum += c * i1 * i1 / i0;
    }
    Ok(BayesSingleError {
        closed_form: sep_biased_error(f64::from(n)),
        exact_sum: 2.0 * (1.0 / 3.0 - 0.5 * sum),
    })
}

/// Total error of the posterior-mean estimates that use both observables'
/// results: `2·[1/3 − (1/2)Σ_{r,s} C(n,r)C(n,s)·I₁,rs²/I₀,rs]`.
pub fn bayes_joint_error(n: u32, adotb: f64, node_count: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::StrategyParameters {
            strategy: StrategyId::BayesJoint.name(),
            problem: "needs N ≥ 1".into(),
        });
    }
    let n64 = u64::from(n);
    let kernel = BayesJointKernel::new(n64, adotb, node_count)?;
    let binom = binomial_row(n64);
    let mut sum = 0.0;
    for r in 0..=n64 {
        let mut row = 0.0;
        for s in 0..=n64 {
            let (i0, i1) = kernel.moments(r, s)?;
            row += binom[s as usize] * i1 * i1 / i0;
        }
        sum += binom[r as usize] * row;
    }
    Ok(2.0 * (1.0 / 3.0 - 0.5 * sum))
}

/// Exact risk of the cross-observable posterior-mean estimates when every
/// copy is prepared in the same uniformly drawn pure state.
///
/// [`bayes_joint_error`] averages the `b` results as if each were
/// independent given `⟨A⟩`; for identical copies they are only independent
/// given the full state, so the two agree only at `a·b ∈ {0, ±1}`. This
/// integrates the actual outcome distribution over the sphere: Gauss–Legendre
/// in `cos θ` and an equally spaced rule in `φ`, both exact for the
/// polynomial integrand.
pub fn bayes_joint_physical_error(n: u32, adotb: f64, node_count: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::StrategyParameters {
            strategy: StrategyId::BayesJoint.name(),
            problem: "needs N ≥ 1".into(),
        });
    }
    let n64 = u64::from(n);
    let table = BayesJointKernel::new(n64, adotb, node_count)?.table();
    let stride = n as usize + 1;
    let binom = binomial_row(n64);
    let sin_eta = (1.0 - adotb * adotb).max(0.0).sqrt();
    let rule = crate::quadrature::GaussLegendre::new(node_count);
    let phi_points = 2 * n as usize + 4;

    let binomial_pmf = |p: f64| -> Vec<f64> {
        (0..=n as i32)
            .map(|k| binom[k as usize] * p.powi(k) * (1.0 - p).powi(n as i32 - k))
            .collect()
    };

    let mut total = 0.0;
    for (&u, &w) in rule.nodes().iter().zip(rule.weights()) {
        let sin_theta = (1.0 - u * u).max(0.0).sqrt();
        let pa = binomial_pmf(0.5 * (1.0 + u));
        let mut ring = 0.0;
        for k in 0..phi_points {
            let phi = 2.0 * std::f64::consts::PI * k as f64 / phi_points as f64;
            let v = sin_eta * sin_theta * phi.cos() + adotb * u;
            let pb = binomial_pmf(0.5 * (1.0 + v));
            for (r, par) in pa.iter().enumerate() {
                for (s, pbs) in pb.iter().enumerate() {
                    let ea = u - table[r * stride + s];
                    let eb = v - table[s * stride + r];
                    ring += par * pbs * (ea * ea + eb * eb);
                }
            }
        }
        total += 0.5 * w * ring / phi_points as f64;
    }
    Ok(total)
}

/// Quadrature size for [`bayes_joint_error`] at `n`.
pub fn default_node_count(n: u32) -> usize {
    BayesJointKernel::required_nodes(u64::from(n)).max(crate::bloch::DEFAULT_NODE_COUNT)
}

/// Sharpness of the symmetric joint measurement of σx, σy, σz.
pub fn three_joint_sharpness() -> f64 {
    1.0 / 3f64.sqrt()
}

/// Joint shots per axis that the three-observable joint closed form
/// `(3 − α²)/(3 − α² + 2α²n)` accounts for.
pub fn three_joint_shots(n: u32) -> u64 {
    2 * u64::from(n)
}

/// Total error of the gain-optimised symmetric three-axis joint estimates
/// given `shots` joint results per axis.
pub fn three_joint_error_for_shots(shots: f64) -> f64 {
    3.0 * joint_biased_axis_error(shots, three_joint_sharpness())
}

pub fn three_observable_error(strategy: StrategyId, n: u32) -> Result<f64> {
    if n == 0 {
        return Err(Error::StrategyParameters {
            strategy: strategy.name(),
            problem: "needs N ≥ 1".into(),
        });
    }
    let n = f64::from(n);
    match strategy {
        StrategyId::ThreeSepUnbiased => Ok(2.0 / n),
        StrategyId::ThreeSepBiased => Ok(2.0 / (n + 2.0)),
        StrategyId::ThreeJoint => Ok(4.0 / (4.0 + n)),
        other => Err(Error::StrategyParameters {
            strategy: other.name(),
            problem: "is not a three-observable strategy".into(),
        }),
    }
}

/// The angle `asin(2/3)` at which unbiased joint and separate measurements
/// give the same total error, for every `n`.
pub fn crossover_angle() -> f64 {
    (2.0f64 / 3.0).asin()
}

/// Analytic total error for any strategy.
pub fn analytic_error(q: &ErrorQuery) -> Result<f64> {
    match q.strategy {
        StrategyId::BayesSingle => Ok(bayes_single_error(q.n)?.exact_sum),
        StrategyId::BayesJoint => {
            bayes_joint_error(q.n, q.inner_product()?, default_node_count(q.n))
        }
        s if s.is_three_observable() => three_observable_error(s, q.n),
        _ => two_observable_error(q),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn q(s: StrategyId, n: u32) -> ErrorQuery {
        ErrorQuery::new(s, n)
    }

    #[test]
    fn two_observable_examples() {
        let e = two_observable_error(&q(StrategyId::SepUnbiased, 1)).unwrap();
        assert!((e - 4.0 / 3.0).abs() < 1e-15);
        let e = two_observable_error(&q(StrategyId::JointUnbiased, 2).with_eta(PI / 6.0)).unwrap();
        assert!((e - 7.0 / 12.0).abs() < 1e-15);
        let e = two_observable_error(&q(StrategyId::SepBiased, 2)).unwrap();
        assert!((e - 1.0 / 3.0).abs() < 1e-15);
        let e = two_observable_error(&q(StrategyId::JointBiased, 2).with_eta(PI / 6.0)).unwrap();
        assert!((e - 14.0 / 45.0).abs() < 1e-15);
        let e = two_observable_error(&q(StrategyId::CrossWeighted, 2).with_adotb(1.0)).unwrap();
        assert!((e - 2.0 / 9.0).abs() < 1e-15);
        let e = two_observable_error(&q(StrategyId::SepUnbiasedSplit, 2).with_split(1)).unwrap();
        assert!((e - 8.0 / 9.0).abs() < 1e-15);
        let even = two_observable_error(&q(StrategyId::SepUnbiasedSplit, 2).with_split(2)).unwrap();
        assert!((even - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn parameter_mismatches() {
        assert!(two_observable_error(&q(StrategyId::JointUnbiased, 2)).is_err());
        assert!(two_observable_error(&q(StrategyId::SepUnbiasedSplit, 2)).is_err());
        assert!(two_observable_error(&q(StrategyId::SepUnbiasedSplit, 2).with_split(4)).is_err());
        assert!(two_observable_error(&q(StrategyId::BayesJoint, 2).with_adotb(0.1)).is_err());
        assert!(two_observable_error(&q(StrategyId::SepBiased, 0)).is_err());
        assert!(two_observable_error(&q(StrategyId::CrossWeighted, 2).with_adotb(1.5)).is_err());
        assert!(two_observable_error(&q(StrategyId::JointBiased, 2).with_eta(4.0)).is_err());
        assert!(three_observable_error(StrategyId::SepBiased, 2).is_err());
    }

    #[test]
    fn geometry_from_either_parameter() {
        let by_eta = q(StrategyId::CrossWeighted, 3).with_eta(PI / 3.0);
        let by_dot = q(StrategyId::CrossWeighted, 3).with_adotb(0.5);
        let a = two_observable_error(&by_eta).unwrap();
        let b = two_observable_error(&by_dot).unwrap();
        assert!((a - b).abs() < 1e-15);
        let a = two_observable_error(&q(StrategyId::JointUnbiased, 3).with_eta(PI / 3.0)).unwrap();
        let b = two_observable_error(&q(StrategyId::JointUnbiased, 3).with_adotb(0.5)).unwrap();
        assert!((a - b).abs() < 1e-14);
    }

    #[test]
    fn bayes_single_examples() {
        let e = bayes_single_error(1).unwrap();
        assert!((e.closed_form - 4.0 / 9.0).abs() < 1e-15);
        assert!(e.discrepancy() < 1e-12);
        let e = bayes_single_error(10).unwrap();
        assert!((e.closed_form - 1.0 / 9.0).abs() < 1e-15);
        assert!(e.discrepancy() < 1e-12);
        assert!(bayes_single_error(0).is_err());
    }

    #[test]
    fn bayes_joint_limits_and_interior() {
        for n in [1, 2, 7] {
            let zero = bayes_joint_error(n, 0.0, 64).unwrap();
            assert!((zero - sep_biased_error(f64::from(n))).abs() < 1e-12);
            let one = bayes_joint_error(n, 1.0, 64).unwrap();
            assert!((one - 2.0 / (3.0 * (f64::from(n) + 1.0))).abs() < 1e-12);
        }
        let mid = bayes_joint_error(2, 0.5, 64).unwrap();
        assert!(mid > 2.0 / 9.0 && mid < 1.0 / 3.0, "{mid}");
        assert!(bayes_joint_error(10, 0.5, 21).is_err());
        assert!(bayes_joint_error(10, 0.5, 22).is_ok());
    }

    #[test]
    fn physical_risk_matches_model_only_at_the_ends() {
        for n in [1, 3, 6] {
            for adotb in [0.0, 1.0] {
                let model = bayes_joint_error(n, adotb, 64).unwrap();
                let physical = bayes_joint_physical_error(n, adotb, 64).unwrap();
                assert!((model - physical).abs() < 1e-12, "n={n} c={adotb}");
            }
        }
        // Identical copies carry correlations the factorised likelihood ignores.
        let model = bayes_joint_error(3, 0.5 * 3f64.sqrt(), 64).unwrap();
        let physical = bayes_joint_physical_error(3, 0.5 * 3f64.sqrt(), 64).unwrap();
        assert!(physical - model > 0.01, "{model} {physical}");
        assert!(physical > cross_weighted_error(3.0, 0.5 * 3f64.sqrt()));
    }

    #[test]
    fn three_observable_examples() {
        assert_eq!(
            three_observable_error(StrategyId::ThreeSepUnbiased, 1).unwrap(),
            2.0
        );
        let e = three_observable_error(StrategyId::ThreeSepBiased, 1).unwrap();
        assert!((e - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(
            three_observable_error(StrategyId::ThreeJoint, 4).unwrap(),
            0.5
        );
        for n in 1..=50 {
            let closed = three_observable_error(StrategyId::ThreeJoint, n).unwrap();
            let general = three_joint_error_for_shots(three_joint_shots(n) as f64);
            assert!((closed - general).abs() < 1e-14);
        }
    }

    #[test]
    fn crossover_examples() {
        let eta = crossover_angle();
        assert!((eta - 0.729728).abs() < 1e-6);
        for n in [1, 5, 20] {
            let joint =
                two_observable_error(&q(StrategyId::JointUnbiased, n).with_eta(eta)).unwrap();
            let sep = two_observable_error(&q(StrategyId::SepUnbiased, n)).unwrap();
            assert!((joint - sep).abs() <= 1e-12);
            let joint =
                two_observable_error(&q(StrategyId::JointUnbiased, n).with_eta(0.7)).unwrap();
            assert!(joint < sep);
            let joint =
                two_observable_error(&q(StrategyId::JointUnbiased, n).with_eta(PI / 2.0)).unwrap();
            assert!(sep < joint);
        }
    }

    #[test]
    fn errors_decay_with_n() {
        for s in StrategyId::ALL {
            let mut prev = f64::INFINITY;
            for n in 1..=25 {
                let query = ErrorQuery {
                    strategy: s,
                    n,
                    eta: Some(0.4),
                    adotb: None,
                    split: Some(n),
                };
                let e = analytic_error(&query).unwrap();
                assert!(e < prev, "{s} at n={n}");
                prev = e;
            }
            let big = ErrorQuery {
                strategy: s,
                n: 100_000,
                eta: Some(0.4),
                adotb: None,
                split: Some(100_000),
            };
            if s != StrategyId::BayesJoint && s != StrategyId::BayesSingle {
                assert!(analytic_error(&big).unwrap() < 1e-4, "{s}");
            }
        }
    }

    #[test]
    fn split_is_minimised_evenly() {
        for n in 1..=30u32 {
            let even = sep_unbiased_split_error(f64::from(n), f64::from(n));
            for n1 in 1..2 * n {
                assert!(sep_unbiased_split_error(f64::from(n), f64::from(n1)) >= even - 1e-15);
            }
        }
    }

    #[test]
    fn strategy_names_round_trip() {
        for s in StrategyId::ALL {
            assert_eq!(s.name().parse::<StrategyId>().unwrap(), s);
            let json = serde_json::to_string(&s).unwrap();
            assert_eq!(json, format!("\"{}\"", s.name()));
        }
    }
}
