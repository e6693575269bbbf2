//! Bloch-ball geometry for a single qubit.
//!
//! Every state and every operator in this crate is written as `w·1 + v·σ`
//! with real `w` and a real 3-vector `v`, so there is no complex matrix
//! algebra anywhere: states are Bloch vectors, observables are unit
//! directions, and expectation values are dot products.

use std::f64::consts::PI;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::GaussLegendre;

/// Tolerance for accepting a vector as an observable direction.
pub const UNIT_TOLERANCE: f64 = 1e-9;

/// Default quadrature size for sphere averages.
pub const DEFAULT_NODE_COUNT: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct BlochVector {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl BlochVector {
    pub const ZERO: Self = Self::new(0.0, 0.0, 0.0);
    pub const X: Self = Self::new(1.0, 0.0, 0.0);
    pub const Y: Self = Self::new(0.0, 1.0, 0.0);
    pub const Z: Self = Self::new(0.0, 0.0, 1.0);

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    /// Unit vector at polar angle `theta` from +z and azimuth `phi` from +x.
    pub fn from_angles(theta: f64, phi: f64) -> Self {
        let (st, ct) = theta.sin_cos();
        let (sp, cp) = phi.sin_cos();
        Self::new(st * cp, st * sp, ct)
    }

    /// Unit vector in the x–z plane at angle `eta` from +z. This is the
    /// canonical second observable direction when the first is +z.
    pub fn in_xz_plane(eta: f64) -> Self {
        Self::new(eta.sin(), 0.0, eta.cos())
    }

    pub fn dot(&self, other: &Self) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn cross(&self, other: &Self) -> Self {
        Self::new(
            self.y * other.z - self.z * other.y,
            self.z * other.x - self.x * other.z,
            self.x * other.y - self.y * other.x,
        )
    }

    pub fn norm_sq(&self) -> f64 {
        self.dot(self)
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    /// Returns `self` if it is a unit vector within [`UNIT_TOLERANCE`].
    pub fn require_unit(self) -> Result<Self> {
        let norm = self.norm();
        if (norm - 1.0).abs() > UNIT_TOLERANCE || !norm.is_finite() {
            return Err(Error::NonUnitDirection { norm });
        }
        Ok(self)
    }
}

impl Add for BlochVector {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self::new(self.x + rhs.x, self.y + rhs.y, self.z + rhs.z)
    }
}

impl AddAssign for BlochVector {
    fn add_assign(&mut self, rhs: Self) {
        *self = *self + rhs;
    }
}

impl Sub for BlochVector {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self::new(self.x - rhs.x, self.y - rhs.y, self.z - rhs.z)
    }
}

impl Neg for BlochVector {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.x, -self.y, -self.z)
    }
}

impl Mul<BlochVector> for f64 {
    type Output = BlochVector;
    fn mul(self, rhs: BlochVector) -> BlochVector {
        BlochVector::new(self * rhs.x, self * rhs.y, self * rhs.z)
    }
}

impl std::iter::Sum for BlochVector {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Self::ZERO, Add::add)
    }
}

/// Draws a pure state uniformly from the Bloch sphere: `cos θ` uniform on
/// [-1, 1) and `φ` uniform on [0, 2π).
pub fn sample_pure_state<R: Rng + ?Sized>(rng: &mut R) -> BlochVector {
    let cos_theta: f64 = 2.0 * rng.random::<f64>() - 1.0;
    let phi: f64 = 2.0 * PI * rng.random::<f64>();
    let sin_theta = (1.0 - cos_theta * cos_theta).max(0.0).sqrt();
    let (sp, cp) = phi.sin_cos();
    BlochVector::new(sin_theta * cp, sin_theta * sp, cos_theta)
}

/// `⟨a·σ⟩` in the state with Bloch vector `state`.
pub fn expectation(direction: BlochVector, state: BlochVector) -> Result<f64> {
    Ok(direction.require_unit()?.dot(&state))
}

/// Angle in [0, π] between two observable directions.
pub fn angle_between(a: BlochVector, b: BlochVector) -> Result<f64> {
    let c = a.require_unit()?.dot(&b.require_unit()?);
    Ok(c.clamp(-1.0, 1.0).acos())
}

/// Trace distance between two qubit states, i.e. the Euclidean distance of
/// their Bloch vectors.
pub fn trace_distance(r1: BlochVector, r2: BlochVector) -> f64 {
    (r1 - r2).norm()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SphereAverageSpec {
    node_count: usize,
}

impl SphereAverageSpec {
    pub fn new(node_count: usize) -> Result<Self> {
        if node_count == 0 {
            return Err(Error::InsufficientNodes {
                required: 1,
                given: 0,
            });
        }
        Ok(Self { node_count })
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }
}

impl Default for SphereAverageSpec {
    fn default() -> Self {
        Self {
            node_count: DEFAULT_NODE_COUNT,
        }
    }
}

/// Average over uniformly distributed pure states of a function of a single
/// expectation value `u = ⟨A⟩`, i.e. `(1/2) ∫_{-1}^{1} f(u) du`.
pub fn average_over_sphere<F: FnMut(f64) -> f64>(f: F, spec: SphereAverageSpec) -> f64 {
    0.5 * GaussLegendre::new(spec.node_count).integrate(f)
}
