//! Qubit POMs in Bloch form.
//!
//! An effect `w·1 + v·σ` has eigenvalues `w ± |v|`, so positivity is the
//! closed-form check `|v| ≤ w`, and completeness is `Σw = 1`, `Σv = 0`.
//! Outcomes carry one ±1 label per jointly measured observable axis.

use serde::Serialize;

use crate::bloch::BlochVector;
use crate::error::{Error, Result};

/// Structural checks (positivity, completeness, marginal shape).
pub const STRUCTURAL_TOLERANCE: f64 = 1e-10;
/// Geometric identities such as the joint-measurability bound.
pub const GEOMETRIC_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Effect {
    pub weight: f64,
    pub vector: BlochVector,
}

impl Effect {
    pub const fn new(weight: f64, vector: BlochVector) -> Self {
        Self { weight, vector }
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.weight - self.vector.norm()
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.weight + self.vector.norm()
    }

    /// Born rule: `Tr(ρ E) = w + v·r`.
    pub fn probability(&self, state: BlochVector) -> f64 {
        self.weight + self.vector.dot(&state)
    }

    /// Whether the operator product `E·F` vanishes.
    ///
    /// `(w₁ + v₁·σ)(w₂ + v₂·σ) = (w₁w₂ + v₁·v₂) + (w₁v₂ + w₂v₁ + i v₁×v₂)·σ`,
    /// so the product is zero iff the scalar part and both vector parts are.
    pub fn orthogonal_to(&self, other: &Effect, tol: f64) -> bool {
        let scalar = self.weight * other.weight + self.vector.dot(&other.vector);
        let real = self.weight * other.vector + other.weight * self.vector;
        let imag = self.vector.cross(&other.vector);
        scalar.abs() <= tol && real.norm() <= tol && imag.norm() <= tol
    }
}

impl std::ops::Add for Effect {
    type Output = Effect;
    fn add(self, rhs: Effect) -> Effect {
        Effect::new(self.weight + rhs.weight, self.vector + rhs.vector)
    }
}

/// An ordered list of effects, each labelled with one sign per measured axis.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Povm {
    effects: Vec<Effect>,
    labels: Vec<Vec<i8>>,
    axes: Vec<BlochVector>,
}

impl Povm {
    /// Assembles a POM from parts. Only the bookkeeping is checked here
    /// (label arity, signs, unit axes); positivity and completeness are
    /// reported by [`validate_povm`].
    pub fn new(effects: Vec<Effect>, labels: Vec<Vec<i8>>, axes: Vec<BlochVector>) -> Result<Self> {
        if effects.is_empty() {
            return Err(Error::InvalidPovm("no effects".into()));
        }
        if labels.len() != effects.len() {
            return Err(Error::InvalidPovm(format!(
                "{} labels for {} effects",
                labels.len(),
                effects.len()
            )));
        }
        if !(1..=3).contains(&axes.len()) {
            return Err(Error::InvalidPovm(format!(
                "{} axes; expected 1 to 3",
                axes.len()
            )));
        }
        for label in &labels {
            if label.len() != axes.len() {
                return Err(Error::InvalidPovm(format!(
                    "label arity {} does not match {} axes",
                    label.len(),
                    axes.len()
                )));
            }
            if label.iter().any(|s| *s != 1 && *s != -1) {
                return Err(Error::InvalidPovm(format!("label {label:?} is not all ±1")));
            }
        }
        for axis in &axes {
            axis.require_unit()?;
        }
        Ok(Self {
            effects,
            labels,
            axes,
        })
    }

    pub fn effects(&self) -> &[Effect] {
        &self.effects
    }

    pub fn labels(&self) -> &[Vec<i8>] {
        &self.labels
    }

    pub fn axes(&self) -> &[BlochVector] {
        &self.axes
    }

    pub fn arity(&self) -> usize {
        self.axes.len()
    }

    /// Sum of the effects whose label on `axis` equals `sign`.
    pub fn marginal(&self, axis: usize, sign: i8) -> Effect {
        self.effects
            .iter()
            .zip(&self.labels)
            .filter(|(_, l)| l[axis] == sign)
            .fold(Effect::new(0.0, BlochVector::ZERO), |acc, (e, _)| acc + *e)
    }
}

/// Sharpness constants relating jointly measured to true expectation values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SharpnessTriple {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: Option<f64>,
}

impl SharpnessTriple {
    pub fn pair(alpha: f64, beta: f64) -> Self {
        Self {
            alpha,
            beta,
            gamma: None,
        }
    }

    pub fn triple(alpha: f64, beta: f64, gamma: f64) -> Self {
        Self {
            alpha,
            beta,
            gamma: Some(gamma),
        }
    }

    pub fn components(&self) -> Vec<f64> {
        let mut v = vec![self.alpha, self.beta];
        v.extend(self.gamma);
        v
    }

    pub fn sum_of_squares(&self) -> f64 {
        self.components().iter().map(|s| s * s).sum()
    }
}

/// Sharp two-outcome measurement of `direction·σ`.
pub fn projective_povm(direction: BlochVector) -> Result<Povm> {
    let d = direction.require_unit()?;
    Povm::new(
        vec![Effect::new(0.5, 0.5 * d), Effect::new(0.5, -0.5 * d)],
        vec![vec![1], vec![-1]],
        vec![d],
    )
}

/// The equal sharpness `α = β = √(1/(1+|sin η|))` that saturates the
/// joint-measurability bound for directions separated by `eta`.
pub fn optimal_sharpness_pair(eta: f64) -> Result<SharpnessTriple> {
    if !(0.0..=std::f64::consts::PI).contains(&eta) {
        return Err(Error::OutOfRange {
            name: "eta",
            value: eta,
            range: "[0, π]",
        });
    }
    let alpha = (1.0 / (1.0 + eta.sin().abs())).sqrt();
    Ok(SharpnessTriple::pair(alpha, alpha))
}

/// `2 − |αa + βb| − |αa − βb|`; non-negative iff a joint measurement with
/// these sharpnesses exists, zero iff it is optimal.
pub fn saturation_residual(a: BlochVector, b: BlochVector, alpha: f64, beta: f64) -> Result<f64> {
    let (a, b) = (a.require_unit()?, b.require_unit()?);
    Ok(2.0 - (alpha * a + beta * b).norm() - (alpha * a - beta * b).norm())
}

fn check_sharpness(name: &'static str, value: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&value) {
        return Err(Error::OutOfRange {
            name,
            value,
            range: "[0, 1]",
        });
    }
    Ok(())
}

/// Four-outcome joint measurement of `a·σ` and `b·σ` with sharpnesses
/// `alpha`, `beta`.
///
/// `E_ij = ((1 + ij·t)·1 + (iαa + jβb)·σ)/4` with
/// `t = (|αa+βb| − |αa−βb|)/2`. The smallest eigenvalue of every element is
/// `(2 − |αa+βb| − |αa−βb|)/8`, so the construction is positive exactly when
/// the pair is admissible. Outcomes are ordered `++, +−, −+, −−`.
pub fn joint_povm_two(a: BlochVector, b: BlochVector, alpha: f64, beta: f64) -> Result<Povm> {
    check_sharpness("alpha", alpha)?;
    check_sharpness("beta", beta)?;
    let residual = saturation_residual(a, b, alpha, beta)?;
    if residual < -GEOMETRIC_TOLERANCE {
        return Err(Error::Inadmissible { residual });
    }
    let plus = (alpha * a + beta * b).norm();
    let minus = (alpha * a - beta * b).norm();
    let t = 0.5 * (plus - minus);

    let mut effects = Vec::with_capacity(4);
    let mut labels = Vec::with_capacity(4);
    for i in [1i8, -1] {
        for j in [1i8, -1] {
            let (fi, fj) = (f64::from(i), f64::from(j));
            let weight = 0.25 * (1.0 + fi * fj * t);
            let vector = 0.25 * (fi * alpha * a + fj * beta * b);
            effects.push(Effect::new(weight, vector));
            labels.push(vec![i, j]);
        }
    }
    Povm::new(effects, labels, vec![a, b])
}

/// Eight-outcome joint measurement of σx, σy, σz with equal sharpness
/// `1/√3`: `E_ijk = (1 + (i, j, k)·σ/√3)/8`.
pub fn joint_povm_three() -> Povm {
    let s = 1.0 / 3f64.sqrt();
    let mut effects = Vec::with_capacity(8);
    let mut labels = Vec::with_capacity(8);
    for i in [1i8, -1] {
        for j in [1i8, -1] {
            for k in [1i8, -1] {
                let v = BlochVector::new(f64::from(i), f64::from(j), f64::from(k));
                effects.push(Effect::new(0.125, (0.125 * s) * v));
                labels.push(vec![i, j, k]);
            }
        }
    }
    Povm::new(
        effects,
        labels,
        vec![BlochVector::X, BlochVector::Y, BlochVector::Z],
    )
    .expect("static construction is well-formed")
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidityReport {
    pub effect_count: usize,
    /// `weight − |vector|` per effect, i.e. the smallest eigenvalue.
    pub positivity_residuals: Vec<f64>,
    pub min_positivity_residual: f64,
    /// Largest eigenvalue minus one, maximised over effects.
    pub max_upper_residual: f64,
    /// `Σ weights − 1`.
    pub weight_sum_residual: f64,
    /// `|Σ vectors|`.
    pub vector_sum_residual: f64,
    /// Marginal sharpness per axis, `None` where the marginal has the wrong shape.
    pub sharpnesses: Vec<Option<f64>>,
    pub positivity_pass: bool,
    pub completeness_pass: bool,
    pub pass: bool,
}

/// Checks positivity and completeness; never fails, only reports.
pub fn validate_povm(povm: &Povm) -> ValidityReport {
    let positivity_residuals: Vec<f64> = povm.effects.iter().map(Effect::min_eigenvalue).collect();
    let min_positivity_residual = positivity_residuals
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    let max_upper_residual = povm
        .effects
        .iter()
        .map(|e| e.max_eigenvalue() - 1.0)
        .fold(f64::NEG_INFINITY, f64::max);
    let weight_sum_residual = povm.effects.iter().map(|e| e.weight).sum::<f64>() - 1.0;
    let vector_sum_residual = povm
        .effects
        .iter()
        .map(|e| e.vector)
        .sum::<BlochVector>()
        .norm();

    let positivity_pass = min_positivity_residual >= -STRUCTURAL_TOLERANCE
        && max_upper_residual <= STRUCTURAL_TOLERANCE;
    let completeness_pass = weight_sum_residual.abs() <= STRUCTURAL_TOLERANCE
        && vector_sum_residual <= STRUCTURAL_TOLERANCE;
    let sharpnesses = povm
        .axes
        .iter()
        .enumerate()
        .map(|(i, d)| extract_marginal_sharpness(povm, i, *d).ok())
        .collect();

    ValidityReport {
        effect_count: povm.effects.len(),
        positivity_residuals,
        min_positivity_residual,
        max_upper_residual,
        weight_sum_residual,
        vector_sum_residual,
        sharpnesses,
        positivity_pass,
        completeness_pass,
        pass: positivity_pass && completeness_pass,
    }
}

/// Sums the effects labelled `+` on `axis_index` and reads off `s` from the
/// required marginal form `(1 + s·d·σ)/2`.
pub fn extract_marginal_sharpness(
    povm: &Povm,
    axis_index: usize,
    direction: BlochVector,
) -> Result<f64> {
    let d = direction.require_unit()?;
    if axis_index >= povm.arity() {
        return Err(Error::MarginalShape {
            axis: axis_index,
            detail: format!("POM only labels {} axes", povm.arity()),
        });
    }
    let up = povm.marginal(axis_index, 1);
    if (up.weight - 0.5).abs() > STRUCTURAL_TOLERANCE {
        return Err(Error::MarginalShape {
            axis: axis_index,
            detail: format!("weight {} instead of 1/2", up.weight),
        });
    }
    let along = up.vector.dot(&d);
    let perpendicular = (up.vector - along * d).norm();
    if perpendicular > STRUCTURAL_TOLERANCE {
        return Err(Error::MarginalShape {
            axis: axis_index,
            detail: format!("component {perpendicular} perpendicular to the axis"),
        });
    }
    Ok(2.0 * along)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConditionalProbs {
    /// Probability the partner qubit reads `+` given `+` on the joint measurement.
    pub plus: f64,
    pub minus: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SteeringReport {
    pub steered_vector: BlochVector,
    pub length: f64,
    pub admissible: bool,
    pub conditional_probs: Vec<ConditionalProbs>,
}

/// Singlet steering test for a joint measurement of σx, σy (and σz).
///
/// Obtaining `+` on every axis of the first qubit leaves the partner in the
/// state with Bloch vector `c = −(α, β, γ)`; the measurement can only exist
/// if that is a valid state, `|c| ≤ 1`.
pub fn steering_bound_check(sharpness: SharpnessTriple) -> SteeringReport {
    let gamma = sharpness.gamma.unwrap_or(0.0);
    let steered_vector = BlochVector::new(-sharpness.alpha, -sharpness.beta, -gamma);
    let length = steered_vector.norm();
    let conditional_probs = sharpness
        .components()
        .into_iter()
        .map(|s| ConditionalProbs {
            plus: 0.5 * (1.0 - s),
            minus: 0.5 * (1.0 + s),
        })
        .collect();
    SteeringReport {
        steered_vector,
        length,
        admissible: length <= 1.0 + GEOMETRIC_TOLERANCE,
        conditional_probs,
    }
}

/// Outcome probabilities `w_i + v_i·r`, clamped at zero.
pub fn outcome_distribution(povm: &Povm, state: BlochVector) -> Result<Vec<f64>> {
    let report = validate_povm(povm);
    if !report.pass {
        return Err(Error::InvalidPovm(format!(
            "positivity residual {}, completeness residuals ({}, {})",
            report.min_positivity_residual, report.weight_sum_residual, report.vector_sum_residual
        )));
    }
    Ok(distribution_unchecked(povm, state))
}

pub(crate) fn distribution_unchecked(povm: &Povm, state: BlochVector) -> Vec<f64> {
    povm.effects
        .iter()
        .map(|e| e.probability(state).max(0.0))
        .collect()
}

/// `Σ_i label_i[axis]·p_i`: the jointly measured expectation value on `axis`.
pub fn joint_expectation(povm: &Povm, axis: usize, state: BlochVector) -> f64 {
    povm.effects
        .iter()
        .zip(&povm.labels)
        .map(|(e, l)| f64::from(l[axis]) * e.probability(state))
        .sum()
}

/// Rank of the linear map `(1, r) ↦ (w_i + v_i·r)_i`. A qubit POM is
/// informationally complete iff this is 4.
pub fn measurement_rank(povm: &Povm) -> usize {
    let mut rows: Vec<[f64; 4]> = povm
        .effects
        .iter()
        .map(|e| [e.weight, e.vector.x, e.vector.y, e.vector.z])
        .collect();
    let mut rank = 0;
    for col in 0..4 {
        let pivot =
            (rank..rows.len()).max_by(|&i, &j| rows[i][col].abs().total_cmp(&rows[j][col].abs()));
        let Some(p) = pivot else { break };
        if rows[p][col].abs() <= STRUCTURAL_TOLERANCE {
            continue;
        }
        rows.swap(rank, p);
        let pivot_row = rows[rank];
        for row in rows.iter_mut().skip(rank + 1) {
            let f = row[col] / pivot_row[col];
            for (x, y) in row.iter_mut().zip(pivot_row) {
                *x -= f * y;
            }
        }
        rank += 1;
    }
    rank
}

pub fn is_informationally_complete(povm: &Povm) -> bool {
    measurement_rank(povm) == 4
}
