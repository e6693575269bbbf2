//! Expectation-value estimators: from ±1 tallies to estimates of `⟨A⟩`.
//!
//! All kinds assume the uniform pure-state prior when they are biased or
//! Bayesian. Linear estimates of joint measurements are deliberately left
//! unclipped; see [`is_physical`].

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::GaussLegendre;

/// Tally of ±1 results for a single observable axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AxisCounts {
    pub up: u64,
    pub shots: u64,
}

impl AxisCounts {
    pub fn new(up: u64, shots: u64) -> Result<Self> {
        if up > shots {
            return Err(Error::CountOutOfRange { up, shots });
        }
        Ok(Self { up, shots })
    }

    pub fn from_up_down(up: u64, down: u64) -> Self {
        Self {
            up,
            shots: up + down,
        }
    }

    pub fn down(&self) -> u64 {
        self.shots - self.up
    }

    /// `up − down`, the sum of the ±1 results.
    pub fn signed_sum(&self) -> f64 {
        self.up as f64 - self.down() as f64
    }

    fn require_shots(&self) -> Result<f64> {
        if self.up > self.shots {
            return Err(Error::CountOutOfRange {
                up: self.up,
                shots: self.shots,
            });
        }
        if self.shots == 0 {
            return Err(Error::NoShots);
        }
        Ok(self.shots as f64)
    }
}

/// Per-axis tallies from one measurement run, in the POM's axis order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutcomeCounts {
    pub axes: Vec<AxisCounts>,
}

impl OutcomeCounts {
    pub fn axis(&self, i: usize) -> AxisCounts {
        self.axes[i]
    }
}

/// Whether an estimate lies in the physical range [-1, 1].
pub fn is_physical(estimate: f64) -> bool {
    (-1.0..=1.0).contains(&estimate)
}

/// Sample mean of the ±1 results, `(2r − N)/N`.
pub fn mean_estimate(counts: AxisCounts) -> Result<f64> {
    let n = counts.require_shots()?;
    Ok(counts.signed_sum() / n)
}

/// Mean shrunk towards zero, `(2r − N)/(N + 2)`.
pub fn shrinkage_estimate(counts: AxisCounts) -> Result<f64> {
    let n = counts.require_shots()?;
    Ok(counts.signed_sum() / (n + 2.0))
}

fn require_sharpness(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::OutOfRange {
            name: "alpha",
            value: alpha,
            range: "(0, 1]",
        });
    }
    Ok(())
}

/// Unbiased estimate from an unsharp marginal: each result relabelled `±1/α`.
/// May leave [-1, 1].
pub fn joint_rescaled_estimate(counts: AxisCounts, alpha: f64) -> Result<f64> {
    require_sharpness(alpha)?;
    let shots = counts.require_shots()?;
    Ok(counts.signed_sum() / (alpha * shots))
}

/// MSE-optimal gain `K = Mα²/(3 − α² + Mα²)` for `M` shots of sharpness `α`.
pub fn joint_biased_gain(shots: f64, alpha: f64) -> f64 {
    let a2 = alpha * alpha;
    shots * a2 / (3.0 - a2 + shots * a2)
}

/// Rescaled estimate multiplied by the MSE-optimal gain for the number of
/// shots recorded (`2N` for two jointly measured observables).
pub fn joint_biased_estimate(counts: AxisCounts, alpha: f64) -> Result<f64> {
    let rescaled = joint_rescaled_estimate(counts, alpha)?;
    Ok(joint_biased_gain(counts.shots as f64, alpha) * rescaled)
}

fn require_inner_product(adotb: f64) -> Result<()> {
    if !(-1.0..=1.0).contains(&adotb) {
        return Err(Error::OutOfRange {
            name: "a·b",
            value: adotb,
            range: "[-1, 1]",
        });
    }
    Ok(())
}

/// `(K, λ)` for the cross-weighted estimator with `n` shots per observable.
pub fn cross_weights(n: f64, adotb: f64) -> (f64, f64) {
    let c2 = adotb * adotb;
    let denom = (n + 2.0).powi(2) - n * n * c2;
    assert!(denom > 0.0, "degenerate cross-weight denominator");
    let k = n * (2.0 + n - n * c2) / denom;
    let lambda = 2.0 * n * adotb / denom;
    (k, lambda)
}

/// Estimates of `⟨A⟩` and `⟨B⟩` that mix both observables' sample means
/// with the MSE-optimal weights.
pub fn cross_weighted_estimate(
    counts_a: AxisCounts,
    counts_b: AxisCounts,
    adotb: f64,
) -> Result<(f64, f64)> {
    require_inner_product(adotb)?;
    let mean_a = mean_estimate(counts_a)?;
    let mean_b = mean_estimate(counts_b)?;
    if counts_a.shots != counts_b.shots {
        return Err(Error::ShotMismatch {
            a: counts_a.shots,
            b: counts_b.shots,
        });
    }
    let (k, lambda) = cross_weights(counts_a.shots as f64, adotb);
    Ok((k * mean_a + lambda * mean_b, k * mean_b + lambda * mean_a))
}

/// Beta function at positive integer arguments.
pub fn beta_int(a: u64, b: u64) -> f64 {
    assert!(a >= 1 && b >= 1, "beta_int needs positive arguments");
    // B(a, b) = (a-1)!(b-1)!/(a+b-1)!, accumulated as a product of ratios
    // so that it stays finite for large arguments.
    let (small, large) = if a <= b { (a, b) } else { (b, a) };
    // (small-1)! / [large · (large+1) ··· (large+small-1)]
    let mut value = 1.0 / large as f64;
    for k in 1..small {
        value *= k as f64 / (large + k) as f64;
    }
    value
}

/// Posterior moments `(I₀, I₁)` for `r` ups in `n` shots under the uniform
/// prior on `⟨A⟩`:
/// `I₀ = 2B(r+1, n−r+1)`, `I₁ = 4B(r+2, n−r+1) − 2B(r+1, n−r+1)`.
pub fn single_moments(r: u64, n: u64) -> Result<(f64, f64)> {
    AxisCounts::new(r, n)?;
    let base = beta_int(r + 1, n - r + 1);
    let i0 = 2.0 * base;
    let i1 = 4.0 * beta_int(r + 2, n - r + 1) - 2.0 * base;
    Ok((i0, i1))
}

/// Posterior mean of `⟨A⟩` from its own results only.
pub fn bayes_single_estimate(r: u64, n: u64) -> Result<f64> {
    let (i0, i1) = single_moments(r, n)?;
    Ok(i1 / i0)
}

/// Posterior of `⟨A⟩` given `r` ups on `a` and `s` ups on `b`, each out of
/// `n` shots. Conditioning the `b` outcome on `⟨A⟩ = u` over the uniform
/// prior gives `P(±|u) = (1 ± (a·b)u)/2`, so both moments are integrals of
/// polynomials of degree ≤ 2n + 1 and Gauss–Legendre is exact.
#[derive(Debug, Clone)]
pub struct BayesJointKernel {
    n: u64,
    adotb: f64,
    rule: GaussLegendre,
}

impl BayesJointKernel {
    pub fn required_nodes(n: u64) -> usize {
        2 * n as usize + 2
    }

    pub fn new(n: u64, adotb: f64, node_count: usize) -> Result<Self> {
        require_inner_product(adotb)?;
        let required = Self::required_nodes(n);
        if node_count < required {
            return Err(Error::InsufficientNodes {
                required,
                given: node_count,
            });
        }
        Ok(Self {
            n,
            adotb,
            rule: GaussLegendre::new(node_count),
        })
    }

    pub fn shots(&self) -> u64 {
        self.n
    }

    pub fn adotb(&self) -> f64 {
        self.adotb
    }

    fn likelihood(&self, r: u64, s: u64, u: f64) -> f64 {
        let n = self.n as i32;
        let (r, s) = (r as i32, s as i32);
        let cu = self.adotb * u;
        (0.5 * (1.0 + u)).powi(r)
            * (0.5 * (1.0 - u)).powi(n - r)
            * (0.5 * (1.0 + cu)).powi(s)
            * (0.5 * (1.0 - cu)).powi(n - s)
    }

    /// `(I₀,rs, I₁,rs)`.
    pub fn moments(&self, r: u64, s: u64) -> Result<(f64, f64)> {
        AxisCounts::new(r, self.n)?;
        AxisCounts::new(s, self.n)?;
        let (mut i0, mut i1) = (0.0, 0.0);
        for (&u, &w) in self.rule.nodes().iter().zip(self.rule.weights()) {
            let l = w * self.likelihood(r, s, u);
            i0 += l;
            i1 += u * l;
        }
        Ok((i0, i1))
    }

    pub fn estimate(&self, r: u64, s: u64) -> Result<f64> {
        let (i0, i1) = self.moments(r, s)?;
        Ok(i1 / i0)
    }

    /// Estimates for every `(r, s)`, row-major in `r`.
    pub fn table(&self) -> Vec<f64> {
        let n = self.n;
        let mut out = Vec::with_capacity(((n + 1) * (n + 1)) as usize);
        for r in 0..=n {
            for s in 0..=n {
                out.push(self.estimate(r, s).expect("indices in range"));
            }
        }
        out
    }
}

/// Posterior mean of `⟨A⟩` using both observables' results.
pub fn bayes_joint_estimate(r: u64, s: u64, n: u64, adotb: f64, node_count: usize) -> Result<f64> {
    BayesJointKernel::new(n, adotb, node_count)?.estimate(r, s)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimatorKind {
    Mean,
    Shrinkage,
    JointRescaled,
    JointBiased,
    CrossWeighted,
    BayesSingle,
    BayesJoint,
}

impl EstimatorKind {
    pub const ALL: [EstimatorKind; 7] = [
        Self::Mean,
        Self::Shrinkage,
        Self::JointRescaled,
        Self::JointBiased,
        Self::CrossWeighted,
        Self::BayesSingle,
        Self::BayesJoint,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Self::Mean => "mean",
            Self::Shrinkage => "shrinkage",
            Self::JointRescaled => "joint-rescaled",
            Self::JointBiased => "joint-biased",
            Self::CrossWeighted => "cross-weighted",
            Self::BayesSingle => "bayes-single",
            Self::BayesJoint => "bayes-joint",
        }
    }

    /// Whether the kind combines results from two observables.
    pub fn is_cross(&self) -> bool {
        matches!(self, Self::CrossWeighted | Self::BayesJoint)
    }

    pub fn is_joint(&self) -> bool {
        matches!(self, Self::JointRescaled | Self::JointBiased)
    }
}

impl fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EstimatorKind {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown estimator '{s}'"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimatorSpec {
    pub kind: EstimatorKind,
    pub alpha: Option<f64>,
    pub adotb: Option<f64>,
    pub node_count: Option<usize>,
}

impl EstimatorSpec {
    pub fn new(kind: EstimatorKind) -> Self {
        Self {
            kind,
            alpha: None,
            adotb: None,
            node_count: None,
        }
    }

    fn alpha(&self) -> Result<f64> {
        self.alpha.ok_or_else(|| Error::StrategyParameters {
            strategy: self.kind.name(),
            problem: "needs a sharpness alpha".into(),
        })
    }

    /// Estimates `⟨A⟩` from `a` and, when given, `⟨B⟩` from `b`. Cross kinds
    /// require `b` and use both tallies for each estimate.
    pub fn estimate(&self, a: AxisCounts, b: Option<AxisCounts>) -> Result<(f64, Option<f64>)> {
        let single = |c: AxisCounts| -> Result<f64> {
            match self.kind {
                EstimatorKind::Mean => mean_estimate(c),
                EstimatorKind::Shrinkage => shrinkage_estimate(c),
                EstimatorKind::JointRescaled => joint_rescaled_estimate(c, self.alpha()?),
                EstimatorKind::JointBiased => joint_biased_estimate(c, self.alpha()?),
                EstimatorKind::BayesSingle => {
                    c.require_shots()?;
                    bayes_single_estimate(c.up, c.shots)
                }
                EstimatorKind::CrossWeighted | EstimatorKind::BayesJoint => unreachable!(),
            }
        };
        if !self.kind.is_cross() {
            return Ok((single(a)?, b.map(single).transpose()?));
        }
        let b = b.ok_or_else(|| Error::StrategyParameters {
            strategy: self.kind.name(),
            problem: "needs counts for both observables".into(),
        })?;
        a.require_shots()?;
        b.require_shots()?;
        if a.shots != b.shots {
            return Err(Error::ShotMismatch {
                a: a.shots,
                b: b.shots,
            });
        }
        let adotb = self.adotb.unwrap_or(0.0);
        match self.kind {
            EstimatorKind::CrossWeighted => {
                let (ea, eb) = cross_weighted_estimate(a, b, adotb)?;
                Ok((ea, Some(eb)))
            }
            _ => {
                let n = a.shots;
                let nodes = self
                    .node_count
                    .unwrap_or(BayesJointKernel::required_nodes(n).max(64));
                let kernel = BayesJointKernel::new(n, adotb, nodes)?;
                Ok((
                    kernel.estimate(a.up, b.up)?,
                    Some(kernel.estimate(b.up, a.up)?),
                ))
            }
        }
    }
}
