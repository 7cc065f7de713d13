//! Design and simulation of trapped-ion entangling gates driven by oscillating
//! magnetic fields from surface-electrode currents.
//!
//! The numerical modules are generic over the scalar type ([`Real`]); the
//! aliases at the crate root fix it to `f64`, which is what the tolerances in
//! the tests assume.

// `!(x > 0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod acceptance;
pub mod atomic;
pub mod chain;
pub mod constants;
pub mod error;
pub mod fields;
pub mod evolve;
pub mod gates;
pub mod real;
pub mod scenario;

pub use error::{Error, Result};
pub use real::Real;

pub type IonSpecies = atomic::IonSpecies<f64>;
pub type ZeemanLevel = atomic::ZeemanLevel<f64>;
pub type QubitPair = atomic::QubitPair<f64>;
pub type PhysicalConstants = constants::PhysicalConstants<f64>;
