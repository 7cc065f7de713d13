//! Quasi-static magnetostatics of conductors running along y.
//!
//! Axis convention: trap electrodes lie in the yz plane at x = 0, the ion sits
//! above them at x > 0, and every conductor is infinite along y. Fields are the
//! dc values per the instantaneous current; a drive `I(t) = Ĩ cos(ωt + φ)` simply
//! scales them.

mod design;
mod map;
mod pickup;

pub use design::{design_five_wire, solve_null_currents, FiveWireDesign, NullSolution, FIVE_WIRE_GATE_RATIO};
pub use map::{field_map, read_field_map_csv, write_field_map_csv, FieldMapRow};
pub use pickup::pickup_field;

use std::ops::{Add, AddAssign, Mul};

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::constants::PhysicalConstants;
use crate::error::{Error, Result};
use crate::real::{lit, Real};

/// Closest approach (m) at which conductor fields are still evaluated.
pub const MIN_DISTANCE: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CurrentDirection {
    /// Positive current flows along +y.
    #[serde(rename = "+y")]
    PlusY,
    #[serde(rename = "-y")]
    MinusY,
}

impl CurrentDirection {
    pub fn sign<T: Real>(self) -> T {
        match self {
            CurrentDirection::PlusY => T::one(),
            CurrentDirection::MinusY => -T::one(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ConductorKind<T> {
    /// Filament through (x, z).
    ThinWire { x: T, z: T },
    /// Uniform ribbon covering z1 < z < z2 in the plane at height x (usually 0).
    Strip { z1: T, z2: T, x: T },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Conductor<T> {
    pub name: String,
    pub kind: ConductorKind<T>,
    pub direction: CurrentDirection,
}

impl<T: Real> Conductor<T> {
    pub fn wire(name: impl Into<String>, x: T, z: T) -> Self {
        Self {
            name: name.into(),
            kind: ConductorKind::ThinWire { x, z },
            direction: CurrentDirection::PlusY,
        }
    }

    /// Strip in the trap plane (x = 0).
    pub fn strip(name: impl Into<String>, z1: T, z2: T) -> Result<Self> {
        Self::offset_strip(name, z1, z2, T::zero())
    }

    pub fn offset_strip(name: impl Into<String>, z1: T, z2: T, x: T) -> Result<Self> {
        let name = name.into();
        if !(z2 > z1) {
            return Err(Error::InvalidInput(format!("strip '{name}' needs z2 > z1 (got {z1}, {z2})")));
        }
        Ok(Self {
            name,
            kind: ConductorKind::Strip { z1, z2, x },
            direction: CurrentDirection::PlusY,
        })
    }

    pub fn with_direction(mut self, direction: CurrentDirection) -> Self {
        self.direction = direction;
        self
    }

    pub fn width(&self) -> T {
        match self.kind {
            ConductorKind::ThinWire { .. } => T::zero(),
            ConductorKind::Strip { z1, z2, .. } => z2 - z1,
        }
    }

    /// Field of this conductor carrying `current` (A, signed along its direction).
    pub fn field(&self, current: T, point: &Vector3<T>) -> Result<FieldSample<T>> {
        match self.kind {
            ConductorKind::ThinWire { .. } => field_of_wire(self, current, point),
            ConductorKind::Strip { .. } => field_of_strip(self, current, point),
        }
    }
}

/// Per-conductor current amplitudes Ĩ (A), in layout order.
#[derive(Clone, Debug, PartialEq)]
pub struct CurrentAssignment<T> {
    pub currents: Vec<T>,
}

impl<T: Real> CurrentAssignment<T> {
    pub fn new(currents: Vec<T>) -> Result<Self> {
        if currents.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidInput("current assignment contains a non-finite value".into()));
        }
        if currents.iter().all(|c| *c == T::zero()) {
            return Err(Error::InvalidInput("current assignment has no nonzero entry".into()));
        }
        Ok(Self { currents })
    }

    pub fn scaled(&self, s: T) -> Self {
        Self {
            currents: self.currents.iter().map(|&c| c * s).collect(),
        }
    }
}

/// One frequency component of a drive: `cos(ωt + φ)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DriveTone<T> {
    /// Angular frequency ω (rad/s).
    pub omega: T,
    /// Phase φ (rad), normalized to (−π, π].
    pub phase: T,
}

impl<T: Real> DriveTone<T> {
    pub fn new(omega: T, phase: T) -> Result<Self> {
        if !(omega >= T::zero()) || !omega.is_finite() || !phase.is_finite() {
            return Err(Error::InvalidInput(format!("drive tone needs finite ω ≥ 0 and phase (got {omega}, {phase})")));
        }
        Ok(Self {
            omega,
            phase: normalize_phase(phase),
        })
    }
}

/// Maps an angle into (−π, π].
pub fn normalize_phase<T: Real>(phase: T) -> T {
    let two_pi = T::two_pi();
    let mut p = phase - (phase / two_pi).round() * two_pi;
    if p <= -T::pi() {
        p += two_pi;
    } else if p > T::pi() {
        p -= two_pi;
    }
    p
}

/// Field and its spatial derivatives at a point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FieldSample<T: Real> {
    /// B (T).
    pub b: Vector3<T>,
    /// jacobian[(i, j)] = ∂B_i/∂x_j (T/m).
    pub jacobian: Matrix3<T>,
}

impl<T: Real> FieldSample<T> {
    pub fn zero() -> Self {
        Self {
            b: Vector3::zeros(),
            jacobian: Matrix3::zeros(),
        }
    }

    pub fn bx(&self) -> T {
        self.b.x
    }

    pub fn bz(&self) -> T {
        self.b.z
    }

    pub fn dbx_dx(&self) -> T {
        self.jacobian[(0, 0)]
    }

    pub fn dbx_dz(&self) -> T {
        self.jacobian[(0, 2)]
    }

    pub fn dbz_dx(&self) -> T {
        self.jacobian[(2, 0)]
    }

    pub fn dbz_dz(&self) -> T {
        self.jacobian[(2, 2)]
    }

    /// Derivative of B along a unit direction.
    pub fn gradient_along(&self, direction: &Vector3<T>) -> Vector3<T> {
        self.jacobian * direction
    }

    /// Field at `point + displacement` to first order.
    pub fn linearized(&self, displacement: &Vector3<T>) -> Vector3<T> {
        self.b + self.jacobian * displacement
    }

    /// ‖J − Jᵀ‖_max / ‖J‖_max (0 for a vanishing jacobian).
    pub fn asymmetry(&self) -> T {
        let norm = self.jacobian.amax();
        if norm == T::zero() {
            return T::zero();
        }
        (self.jacobian - self.jacobian.transpose()).amax() / norm
    }

    /// |tr J| / ‖J‖_max.
    pub fn relative_trace(&self) -> T {
        let norm = self.jacobian.amax();
        if norm == T::zero() {
            return T::zero();
        }
        self.jacobian.trace().abs() / norm
    }
}

impl<T: Real> Add for FieldSample<T> {
    type Output = Self;

    fn add(self, rhs: Self) -> Self {
        Self {
            b: self.b + rhs.b,
            jacobian: self.jacobian + rhs.jacobian,
        }
    }
}

impl<T: Real> AddAssign for FieldSample<T> {
    fn add_assign(&mut self, rhs: Self) {
        self.b += rhs.b;
        self.jacobian += rhs.jacobian;
    }
}

impl<T: Real> Mul<T> for FieldSample<T> {
    type Output = Self;

    fn mul(self, s: T) -> Self {
        Self {
            b: self.b * s,
            jacobian: self.jacobian * s,
        }
    }
}

fn sample_from_xz<T: Real>(bx: T, bz: T, dbx_dx: T, dbx_dz: T) -> FieldSample<T> {
    // For y-invariant, source-free fields: ∂Bz/∂x = ∂Bx/∂z and ∂Bz/∂z = −∂Bx/∂x.
    let mut jacobian = Matrix3::zeros();
    jacobian[(0, 0)] = dbx_dx;
    jacobian[(0, 2)] = dbx_dz;
    jacobian[(2, 0)] = dbx_dz;
    jacobian[(2, 2)] = -dbx_dx;
    FieldSample {
        b: Vector3::new(bx, T::zero(), bz),
        jacobian,
    }
}

/// Thin wire along ±y. |B| = μ₀I/(2πd), right-handed about the current.
pub fn field_of_wire<T: Real>(wire: &Conductor<T>, current: T, point: &Vector3<T>) -> Result<FieldSample<T>> {
    let ConductorKind::ThinWire { x, z } = wire.kind else {
        return Err(Error::InvalidInput(format!("'{}' is not a thin wire", wire.name)));
    };
    let dx = point.x - x;
    let dz = point.z - z;
    let rho2 = dx * dx + dz * dz;
    if rho2.sqrt() < lit(MIN_DISTANCE) {
        return Err(Error::Singular(format!(
            "point within {MIN_DISTANCE:e} m of wire '{}'",
            wire.name
        )));
    }
    let k = PhysicalConstants::<T>::codata().mu0_over_2pi() * current * wire.direction.sign::<T>();
    let rho4 = rho2 * rho2;
    Ok(sample_from_xz(
        k * dz / rho2,
        -k * dx / rho2,
        -(k + k) * dx * dz / rho4,
        k * (dx * dx - dz * dz) / rho4,
    ))
}

/// Uniform current ribbon: closed-form logarithm/arctangent field.
pub fn field_of_strip<T: Real>(strip: &Conductor<T>, current: T, point: &Vector3<T>) -> Result<FieldSample<T>> {
    let ConductorKind::Strip { z1, z2, x } = strip.kind else {
        return Err(Error::InvalidInput(format!("'{}' is not a strip", strip.name)));
    };
    let dx = point.x - x;
    let a = point.z - z1;
    let b = point.z - z2;
    let dz_out = if point.z < z1 {
        z1 - point.z
    } else if point.z > z2 {
        point.z - z2
    } else {
        T::zero()
    };
    if (dx * dx + dz_out * dz_out).sqrt() < lit(MIN_DISTANCE) {
        return Err(Error::Singular(format!("point on or inside strip '{}'", strip.name)));
    }
    let width = z2 - z1;
    let c = PhysicalConstants::<T>::codata().mu0_over_2pi() * current * strip.direction.sign::<T>() / width;
    let rho1 = dx * dx + a * a;
    let rho2 = dx * dx + b * b;
    let bx = c * lit::<T>(0.5) * (rho1 / rho2).ln();
    let bz = -c * (dx * width).atan2(dx * dx + a * b);
    Ok(sample_from_xz(bx, bz, c * (dx / rho1 - dx / rho2), c * (a / rho1 - b / rho2)))
}

/// Superposition over all conductors of a layout.
pub fn field_of_layout<T: Real>(conductors: &[Conductor<T>], currents: &[T], point: &Vector3<T>) -> Result<FieldSample<T>> {
    if conductors.len() != currents.len() {
        return Err(Error::InvalidInput(format!(
            "{} conductors but {} currents",
            conductors.len(),
            currents.len()
        )));
    }
    let mut total = FieldSample::zero();
    for (conductor, &current) in conductors.iter().zip(currents) {
        if current != T::zero() {
            total += conductor.field(current, point)?;
        }
    }
    Ok(total)
}

/// Central-difference jacobian of `f` with one Richardson step (O(h⁴)).
pub fn finite_difference_jacobian<T: Real, F>(f: F, point: &Vector3<T>, h: T) -> Result<Matrix3<T>>
where
    F: Fn(&Vector3<T>) -> Result<Vector3<T>>,
{
    let mut jac = Matrix3::zeros();
    for j in 0..3 {
        let central = |step: T| -> Result<Vector3<T>> {
            let mut p = *point;
            let mut m = *point;
            p[j] += step;
            m[j] -= step;
            Ok((f(&p)? - f(&m)?) / (step + step))
        };
        let coarse = central(h + h)?;
        let fine = central(h)?;
        let column = (fine * lit::<T>(4.0) - coarse) / lit::<T>(3.0);
        jac.set_column(j, &column);
    }
    Ok(jac)
}
