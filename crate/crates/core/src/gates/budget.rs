//! Residual-field error budget and the electric/anharmonic estimates.

use nalgebra::{Complex, Vector3};

use super::{GateKind, GateSpec};
use crate::atomic::QubitPair;
use crate::constants::PhysicalConstants;
use crate::error::{Error, Result};
use crate::fields::FieldSample;
use crate::real::{lit, Real};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mechanism {
    /// Off-resonant carrier rotation, peak 2|Ωˣ/Δ|.
    CarrierExcursion,
    /// Second-order (ac-Zeeman) shift Ωˣ²/Δ accumulated over τ.
    AcZeeman,
    /// Phase modulation from the oscillating B_z, peak 4|Ωᶻ/ω|.
    ZModulation,
}

impl Mechanism {
    pub const ALL: [Mechanism; 3] = [Mechanism::CarrierExcursion, Mechanism::AcZeeman, Mechanism::ZModulation];

    pub fn name(self) -> &'static str {
        match self {
            Mechanism::CarrierExcursion => "carrier_excursion",
            Mechanism::AcZeeman => "ac_zeeman",
            Mechanism::ZModulation => "z_modulation",
        }
    }
}

/// Contribution of one drive tone acting on the residual field.
#[derive(Clone, Debug, PartialEq)]
pub struct ToneEntry<T> {
    pub label: String,
    /// Tone frequency ω_k (rad/s).
    pub omega: T,
    pub phase: T,
    /// Carrier detuning Δ_k = ω₀ − ω_k (rad/s, signed).
    pub detuning: T,
    /// Ωˣ and Ωᶻ of the residual field (rad/s).
    pub omega_x: T,
    pub omega_z: T,
    pub carrier_excursion: T,
    /// Signed Ωˣ²τ/Δ.
    pub ac_zeeman_phase: T,
    pub z_modulation: T,
}

#[derive(Clone, Debug)]
pub struct ErrorBudget<T: Real> {
    /// Field at the displaced ion per the gate drive amplitude (T).
    pub residual_field: Vector3<T>,
    pub displacement: Vector3<T>,
    pub tones: Vec<ToneEntry<T>>,
    /// Per-mechanism totals over tones (ac-Zeeman summed with signs, then |·|).
    pub mechanisms: Vec<(Mechanism, T)>,
    pub worst_mechanism: Mechanism,
    pub worst_value: T,
    /// Sum of the mechanism totals.
    pub summed: T,
    /// max_t θ(t) of the combined single-qubit error rotation (rad).
    pub max_phase: T,
    pub max_phase_time: T,
    pub electric_potential: Option<T>,
    pub anharmonic_suppression: Option<T>,
}

/// Inputs for [`residual_error_budget`].
#[derive(Clone, Copy, Debug)]
pub struct BudgetInput<'a, T: Real> {
    /// Gate drive field at the ion equilibrium per ampere.
    pub sample_per_amp: &'a FieldSample<T>,
    /// Ion displacement from the null (m).
    pub displacement: Vector3<T>,
    pub spec: &'a GateSpec<T>,
    pub pair: &'a QubitPair<T>,
    /// ω_j of the gate mode (rad/s).
    pub mode_omega: T,
}

/// Single-qubit error rotation θ(t) = |a(t)| with U ≈ exp(i a·σ):
///
/// a = (Re β, −Im β, Z − s t), β = Σ Ω_k e^{−iφ_k}(e^{iΔ_k t} − 1)/(iΔ_k),
/// Z = Σ (2Ωᶻ_k/ω_k)(sin(ω_k t + φ_k) − sin φ_k), s = Σ Ω_k²/Δ_k.
pub fn residual_phase_trace<T: Real>(tones: &[ToneEntry<T>], times: &[T]) -> Vec<T> {
    let s = tones
        .iter()
        .filter(|e| e.detuning != T::zero())
        .fold(T::zero(), |acc, e| acc + e.omega_x * e.omega_x / e.detuning);
    times
        .iter()
        .map(|&t| {
            let mut beta = Complex::new(T::zero(), T::zero());
            let mut z = -s * t;
            for e in tones {
                let rot = Complex::new(e.phase.cos(), -e.phase.sin()) * e.omega_x;
                if e.detuning == T::zero() {
                    beta += rot * t;
                } else {
                    let p = e.detuning * t;
                    let num = Complex::new(p.cos() - T::one(), p.sin());
                    beta += rot * num / Complex::new(T::zero(), e.detuning);
                }
                if e.omega_z != T::zero() && e.omega != T::zero() {
                    z += lit::<T>(2.0) * e.omega_z / e.omega * ((e.omega * t + e.phase).sin() - e.phase.sin());
                }
            }
            (beta.re * beta.re + beta.im * beta.im + z * z).sqrt()
        })
        .collect()
}

fn sample_count<T: Real>(tones: &[ToneEntry<T>], duration: T) -> usize {
    let fastest = tones.iter().fold(T::zero(), |m, e| {
        let z = if e.omega_z != T::zero() { e.omega } else { T::zero() };
        m.max(e.detuning.abs()).max(z)
    });
    let periods = (fastest * duration / T::two_pi()).to_f64_lossy();
    (periods * 32.0).ceil().clamp(4096.0, 4.0e6) as usize
}

/// Single-qubit phase errors from the residual field at a displaced ion.
///
/// Every tone of the gate drive is applied to the residual field
/// `jacobian·displacement·Ĩ`; blue and red ac-Zeeman shifts enter with their
/// signed detunings and partially cancel.
pub fn residual_error_budget<T: Real>(input: &BudgetInput<'_, T>) -> Result<ErrorBudget<T>> {
    let spec = input.spec;
    if !(spec.duration > T::zero()) {
        return Err(Error::InvalidInput("gate duration must be positive".into()));
    }
    let hbar = PhysicalConstants::<T>::codata().hbar;
    let residual = input.sample_per_amp.jacobian * input.displacement * spec.current;
    let omega_x = residual.x * input.pair.mu_x_updown / (hbar + hbar);
    let omega_z = residual.z * input.pair.mu_effective() / (hbar + hbar);
    let tone_list = spec.tones(input.pair.omega0, input.mode_omega);
    let labels: &[&str] = match spec.kind {
        GateKind::Zz => &["zz"],
        GateKind::PhiPhi => &["blue", "red"],
    };
    let tones: Vec<ToneEntry<T>> = tone_list
        .iter()
        .zip(labels)
        .map(|(&(omega, phase), label)| {
            let detuning = input.pair.omega0 - omega;
            let (excursion, ac) = if detuning == T::zero() {
                (omega_x.abs() * spec.duration, T::zero())
            } else {
                (
                    lit::<T>(2.0) * (omega_x / detuning).abs(),
                    omega_x * omega_x / detuning * spec.duration,
                )
            };
            let zmod = if omega == T::zero() {
                T::zero()
            } else {
                lit::<T>(4.0) * (omega_z / omega).abs()
            };
            ToneEntry {
                label: label.to_string(),
                omega,
                phase,
                detuning,
                omega_x,
                omega_z,
                carrier_excursion: excursion,
                ac_zeeman_phase: ac,
                z_modulation: zmod,
            }
        })
        .collect();

    let excursion = tones.iter().fold(T::zero(), |a, e| a + e.carrier_excursion);
    let ac = tones.iter().fold(T::zero(), |a, e| a + e.ac_zeeman_phase).abs();
    let zmod = tones.iter().fold(T::zero(), |a, e| a + e.z_modulation);
    let mechanisms = vec![
        (Mechanism::CarrierExcursion, excursion),
        (Mechanism::AcZeeman, ac),
        (Mechanism::ZModulation, zmod),
    ];
    let (worst_mechanism, worst_value) = mechanisms
        .iter()
        .copied()
        .fold((Mechanism::CarrierExcursion, -T::one()), |best, m| if m.1 > best.1 { m } else { best });
    let summed = excursion + ac + zmod;

    let n = sample_count(&tones, spec.duration);
    let times: Vec<T> = (0..=n).map(|k| spec.duration * lit::<T>(k as f64 / n as f64)).collect();
    let trace = residual_phase_trace(&tones, &times);
    let (idx, max_phase) = trace
        .iter()
        .copied()
        .enumerate()
        .fold((0, T::zero()), |best, (k, v)| if v > best.1 { (k, v) } else { best });

    Ok(ErrorBudget {
        residual_field: residual,
        displacement: input.displacement,
        tones,
        mechanisms,
        worst_mechanism,
        worst_value: worst_value.max(T::zero()),
        summed,
        max_phase,
        max_phase_time: times[idx],
        electric_potential: None,
        anharmonic_suppression: None,
    })
}

impl<T: Real> ErrorBudget<T> {
    pub fn mechanism(&self, m: Mechanism) -> T {
        self.mechanisms.iter().find(|(k, _)| *k == m).map_or(T::zero(), |(_, v)| *v)
    }
}

/// Electrode potential whose electric force e·E equals the magnetic force |μ_z·∂B/∂q| (V).
///
/// `pickup_per_volt` is |E| at the ion per volt on the electrode (V/m per V).
pub fn electric_equivalence_potential<T: Real>(gradient: T, mu_z: T, pickup_per_volt: T) -> Result<T> {
    if pickup_per_volt == T::zero() || !pickup_per_volt.is_finite() {
        return Err(Error::Singular("electrode pickup at the ion is zero".into()));
    }
    let e = PhysicalConstants::<T>::codata().elementary_charge;
    Ok((mu_z * gradient).abs() / (e * pickup_per_volt.abs()))
}

/// (q̃₀/d₀)², the relative size of curvature terms over the wave packet.
pub fn anharmonic_suppression<T: Real>(q0: T, d0: T) -> Result<T> {
    if !(q0 > T::zero()) || !(d0 > T::zero()) {
        return Err(Error::InvalidInput(format!("anharmonic suppression needs q0, d0 > 0 (got {q0}, {d0})")));
    }
    let r = q0 / d0;
    Ok(r * r)
}

/// Peak of |β(t)|: the trace with the σz modulation removed.
pub fn carrier_peak<T: Real>(tones: &[ToneEntry<T>], times: &[T]) -> T {
    let stripped: Vec<ToneEntry<T>> = tones
        .iter()
        .cloned()
        .map(|mut e| {
            e.omega_z = T::zero();
            e
        })
        .collect();
    residual_phase_trace(&stripped, times).into_iter().fold(T::zero(), |m, v| m.max(v))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn electric_force_balance() {
        let g = 277.8 * 1.36;
        let mu = -9.29e-24;
        let pickup = 9615.0;
        let v: f64 = electric_equivalence_potential(g, mu, pickup).unwrap();
        let e = PhysicalConstants::<f64>::codata().elementary_charge;
        let residual = e * pickup * v - (mu * g).abs();
        assert!(residual.abs() <= 1e-12 * (mu * g).abs());
        assert_eq!(electric_equivalence_potential(0.0, mu, pickup).unwrap(), 0.0);
        assert!(electric_equivalence_potential(g, mu, 0.0).is_err());
    }

    #[test]
    fn anharmonic_values() {
        let s: f64 = anharmonic_suppression(10.6e-9, 30e-6).unwrap();
        assert!((s - 1.248e-7).abs() < 1e-9);
        assert_eq!(anharmonic_suppression(1.0, 1.0).unwrap(), 1.0);
        let s10 = anharmonic_suppression(10.6e-9, 300e-6).unwrap();
        assert!((s / s10 - 100.0).abs() < 1e-9);
    }

    fn tone(omega: f64, phase: f64, omega0: f64, ox: f64, oz: f64) -> ToneEntry<f64> {
        ToneEntry {
            label: "t".into(),
            omega,
            phase,
            detuning: omega0 - omega,
            omega_x: ox,
            omega_z: oz,
            carrier_excursion: 0.0,
            ac_zeeman_phase: 0.0,
            z_modulation: 0.0,
        }
    }

    #[test]
    fn symmetric_tones_cancel_ac_shift() {
        let d = 3.0e7;
        let om = 1e5;
        let tones = [tone(1e9 - d, 0.0, 1e9, om, 0.0), tone(1e9 + d, 0.0, 1e9, om, 0.0)];
        let times: Vec<f64> = (0..20_000).map(|k| k as f64 * 1e-9).collect();
        let peak = carrier_peak(&tones, &times);
        // β = 2Ω sin(Δt)/Δ: peak 2Ω/Δ, and no secular drift.
        assert!((peak / (2.0 * om / d) - 1.0).abs() < 1e-3);
    }
}
