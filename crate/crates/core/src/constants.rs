//! CODATA 2018 physical constants.
//!
//! This is the only place fundamental constants are written down; every other
//! module pulls them from [`PhysicalConstants::codata`].

use crate::real::{lit, Real};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhysicalConstants<T> {
    /// Planck constant h (J·s).
    pub planck: T,
    /// Reduced Planck constant ħ (J·s).
    pub hbar: T,
    /// Vacuum permeability μ₀ (T·m/A).
    pub mu0: T,
    /// Bohr magneton μ_B (J/T).
    pub mu_b: T,
    /// Elementary charge e (C).
    pub elementary_charge: T,
    /// Vacuum permittivity ε₀ (F/m).
    pub epsilon0: T,
    /// Unified atomic mass unit (kg).
    pub atomic_mass_unit: T,
    /// Electron mass (kg).
    pub electron_mass: T,
}

const PLANCK: f64 = 6.626_070_15e-34;
const MU0: f64 = 1.256_637_062_12e-6;
const MU_B: f64 = 9.274_010_078_3e-24;
const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;
const EPSILON0: f64 = 8.854_187_812_8e-12;
const ATOMIC_MASS_UNIT: f64 = 1.660_539_066_60e-27;
const ELECTRON_MASS: f64 = 9.109_383_701_5e-31;

impl<T: Real> PhysicalConstants<T> {
    pub fn codata() -> Self {
        Self {
            planck: lit(PLANCK),
            hbar: lit(PLANCK / (2.0 * std::f64::consts::PI)),
            mu0: lit(MU0),
            mu_b: lit(MU_B),
            elementary_charge: lit(ELEMENTARY_CHARGE),
            epsilon0: lit(EPSILON0),
            atomic_mass_unit: lit(ATOMIC_MASS_UNIT),
            electron_mass: lit(ELECTRON_MASS),
        }
    }

    /// μ₀/(2π), the prefactor of every infinite-conductor field.
    pub fn mu0_over_2pi(&self) -> T {
        self.mu0 / T::two_pi()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constants_are_positive_and_consistent() {
        let c = PhysicalConstants::<f64>::codata();
        for v in [c.planck, c.hbar, c.mu0, c.mu_b, c.elementary_charge, c.epsilon0, c.atomic_mass_unit] {
            assert!(v > 0.0);
        }
        assert!((c.hbar * 2.0 * std::f64::consts::PI / c.planck - 1.0).abs() < 1e-15);
        // μ₀ε₀c² = 1
        let c_light = 299_792_458.0_f64;
        assert!((c.mu0 * c.epsilon0 * c_light * c_light - 1.0).abs() < 1e-9);
    }
}
