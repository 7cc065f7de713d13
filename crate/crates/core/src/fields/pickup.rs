//! Electric field of a biased electrode in an otherwise grounded plane.

use nalgebra::Vector3;

use super::{Conductor, ConductorKind, MIN_DISTANCE};
use crate::error::{Error, Result};
use crate::real::{lit, Real};

/// E (V/m) at `point` from `strip` held at `volts`, all other plane regions at 0 V.
///
/// Gapless-plane solution: φ = (V/π)·Θ with Θ the angle the strip subtends at the point.
pub fn pickup_field<T: Real>(strip: &Conductor<T>, volts: T, point: &Vector3<T>) -> Result<Vector3<T>> {
    let ConductorKind::Strip { z1, z2, x } = strip.kind else {
        return Err(Error::InvalidInput(format!("pickup needs a strip electrode, '{}' is a wire", strip.name)));
    };
    let dx = point.x - x;
    if dx.abs() < lit(MIN_DISTANCE) {
        return Err(Error::Singular(format!("pickup point lies in the plane of electrode '{}'", strip.name)));
    }
    let a = point.z - z1;
    let b = point.z - z2;
    let rho1 = dx * dx + a * a;
    let rho2 = dx * dx + b * b;
    let s = volts / T::pi();
    Ok(Vector3::new(s * (a / rho1 - b / rho2), T::zero(), -s * (dx / rho1 - dx / rho2)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    /// Poisson-kernel potential of the biased strip, by midpoint quadrature.
    fn potential(z1: f64, z2: f64, v: f64, x: f64, z: f64) -> f64 {
        let n = 20_000;
        let h = (z2 - z1) / n as f64;
        (0..n)
            .map(|k| {
                let zp = z1 + (k as f64 + 0.5) * h;
                x / (PI * (x * x + (z - zp).powi(2)))
            })
            .sum::<f64>()
            * h
            * v
    }

    #[test]
    fn zero_volts_zero_field() {
        let s = Conductor::strip("a", -10e-6, 10e-6).unwrap();
        assert_eq!(pickup_field(&s, 0.0, &Vector3::new(30e-6, 0.0, 1e-6)).unwrap(), Vector3::zeros());
    }

    #[test]
    fn matches_boundary_integral() {
        let (z1, z2) = (-12e-6, 25e-6);
        let s = Conductor::strip("a", z1, z2).unwrap();
        let (x, z) = (30e-6, 7e-6);
        let e = pickup_field(&s, 1.0, &Vector3::new(x, 0.0, z)).unwrap();
        let h = 1e-8;
        let ex = -(potential(z1, z2, 1.0, x + h, z) - potential(z1, z2, 1.0, x - h, z)) / (2.0 * h);
        let ez = -(potential(z1, z2, 1.0, x, z + h) - potential(z1, z2, 1.0, x, z - h)) / (2.0 * h);
        assert!((e.x - ex).abs() < 1e-5 * e.norm());
        assert!((e.z - ez).abs() < 1e-5 * e.norm());
    }

    #[test]
    fn field_decays_for_wide_strip() {
        let pt = Vector3::new(30e-6, 0.0, 0.0);
        let mut last = f64::INFINITY;
        let mut first = None;
        for w in [1e-3, 1e-2, 1e-1, 1.0] {
            let s = Conductor::strip("a", -w, w).unwrap();
            let e = pickup_field(&s, 1.0, &pt).unwrap().norm();
            assert!(e < last);
            first.get_or_insert(e);
            last = e;
        }
        assert!(last < 1e-2 * first.unwrap());
    }

    #[test]
    fn in_plane_point_is_error() {
        let s = Conductor::strip("a", -10e-6, 10e-6).unwrap();
        assert!(pickup_field(&s, 1.0, &Vector3::new(0.0, 0.0, 40e-6)).is_err());
    }
}
