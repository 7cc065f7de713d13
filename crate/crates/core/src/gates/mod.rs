//! Rabi frequencies, analytic two-qubit gate propagators and drive requirements.
//!
//! Conventions used throughout:
//!
//! * Single-qubit basis index 0 = |↑⟩, 1 = |↓⟩; σ_z = diag(1, −1), σ₊ = |↑⟩⟨↓|.
//!   Two-qubit index = 2·s₁ + s₂.
//! * Ωˣ = B̃x·|⟨↓|μx|↑⟩|/(2ħ). A resonant carrier evolves as
//!   U = cos(Ωˣt) + i sin(Ωˣt) σ_φ, so the π time is t_π = π/(2Ωˣ).
//! * Ωᶻ uses μ_eff = (⟨↑|μz|↑⟩ − ⟨↓|μz|↓⟩)/2.
//! * Single-loop gates: τ = 2π/δ with δ = 4Ω_{j,n}.

mod budget;
mod report;

pub use budget::{
    anharmonic_suppression, carrier_peak, electric_equivalence_potential, residual_error_budget, residual_phase_trace, BudgetInput,
    ErrorBudget, Mechanism, ToneEntry,
};
pub use report::{read_report_csv, report_rows, write_report_csv, write_report_table, ReportRow};

use nalgebra::{Complex, Matrix2, Matrix4};

use crate::atomic::QubitPair;
use crate::chain::ModeDecomposition;
use crate::constants::PhysicalConstants;
use crate::error::{Error, Result};
use crate::fields::FieldSample;
use crate::real::{cabs, lit, Real};

/// Rabi frequencies of one normal mode, per ion (rad/s, signed via b_{j,n}).
#[derive(Clone, Debug, PartialEq)]
pub struct ModeRabi<T> {
    /// ω_j (rad/s).
    pub omega: T,
    pub x: Vec<T>,
    pub z: Vec<T>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RabiSet<T> {
    /// Drive amplitude Ĩ (A) these values correspond to.
    pub current: T,
    /// Qubit frequency ω₀ (rad/s).
    pub omega0: T,
    pub omega_x: T,
    pub omega_z: T,
    pub modes: Vec<ModeRabi<T>>,
    /// Conditions worth reporting, e.g. a vanishing matrix element.
    pub flags: Vec<String>,
}

impl<T: Real> RabiSet<T> {
    pub fn n_ions(&self) -> usize {
        self.modes.first().map_or(0, |m| m.x.len())
    }

    pub fn scaled_to(&self, current: T) -> Self {
        let s = if self.current == T::zero() { T::zero() } else { current / self.current };
        Self {
            current,
            omega0: self.omega0,
            omega_x: self.omega_x * s,
            omega_z: self.omega_z * s,
            modes: self
                .modes
                .iter()
                .map(|m| ModeRabi {
                    omega: m.omega,
                    x: m.x.iter().map(|&v| v * s).collect(),
                    z: m.z.iter().map(|&v| v * s).collect(),
                })
                .collect(),
            flags: self.flags.clone(),
        }
    }
}

/// Assembles every Rabi frequency of the interaction Hamiltonian.
///
/// `sample_per_amp` is the field at the ion equilibrium per ampere of drive;
/// the gradient entering Ω_{j,n} is the derivative along the mode axis.
pub fn rabi_frequencies<T: Real>(
    sample_per_amp: &FieldSample<T>,
    current: T,
    pair: &QubitPair<T>,
    modes: &ModeDecomposition<T>,
) -> Result<RabiSet<T>> {
    if !current.is_finite() {
        return Err(Error::InvalidInput("drive current must be finite".into()));
    }
    let hbar = PhysicalConstants::<T>::codata().hbar;
    let two_hbar = hbar + hbar;
    let mu_x = pair.mu_x_updown;
    let mu_eff = pair.mu_effective();
    let grad = sample_per_amp.gradient_along(&modes.axis.unit());
    let omega_x = sample_per_amp.bx() * current * mu_x / two_hbar;
    let omega_z = sample_per_amp.bz() * current * mu_eff / two_hbar;
    let mode_rabi = modes
        .modes
        .iter()
        .map(|m| {
            let scale = m.q0 * current / two_hbar;
            ModeRabi {
                omega: m.omega,
                x: m.b.iter().map(|&b| b * scale * grad.x * mu_x).collect(),
                z: m.b.iter().map(|&b| b * scale * grad.z * mu_eff).collect(),
            }
        })
        .collect();
    let mut flags = Vec::new();
    if mu_x == T::zero() {
        flags.push(format!(
            "⟨↓|μx|↑⟩ = 0 for {} ↔ {}: carrier and Ωx sideband couplings vanish",
            pair.up.label, pair.down.label
        ));
    }
    let mu_scale = pair.mu_z_up.abs().max(pair.mu_z_down.abs());
    if mu_eff.abs() <= mu_scale * lit(1e-3) {
        flags.push("μ_eff ≈ 0: field-insensitive pair, σz couplings are suppressed".into());
    }
    Ok(RabiSet {
        current,
        omega0: pair.omega0,
        omega_x,
        omega_z,
        modes: mode_rabi,
        flags,
    })
}

fn c<T: Real>(re: T, im: T) -> Complex<T> {
    Complex::new(re, im)
}

/// Pauli σ_φ = cos φ σx + sin φ σy.
pub fn sigma_phi<T: Real>(phi: T) -> Matrix2<Complex<T>> {
    let z = T::zero();
    Matrix2::new(c(z, z), c(phi.cos(), -phi.sin()), c(phi.cos(), phi.sin()), c(z, z))
}

pub fn sigma_z<T: Real>() -> Matrix2<Complex<T>> {
    let (o, z) = (T::one(), T::zero());
    Matrix2::new(c(o, z), c(z, z), c(z, z), c(-o, z))
}

/// Resonant carrier propagator cos(Ωt) + i sin(Ωt) σ_φ (Bloch rotation by 2Ωt).
pub fn carrier_rotation<T: Real>(omega_x: T, phase: T, t: T) -> Matrix2<Complex<T>> {
    let a = omega_x * t;
    Matrix2::identity() * c(a.cos(), T::zero()) + sigma_phi(phase) * c(T::zero(), a.sin())
}

/// π time t_π = π/(2Ωˣ).
pub fn pi_time<T: Real>(omega_x: T) -> Result<T> {
    if omega_x == T::zero() {
        return Err(Error::Unsolvable("zero carrier Rabi frequency".into()));
    }
    Ok(T::pi() / (lit::<T>(2.0) * omega_x.abs()))
}

pub fn kron2<T: Real>(a: &Matrix2<Complex<T>>, b: &Matrix2<Complex<T>>) -> Matrix4<Complex<T>> {
    Matrix4::from_fn(|r, col| a[(r / 2, col / 2)] * b[(r % 2, col % 2)])
}

/// ‖U†U − 1‖_max.
pub fn unitarity_defect<T: Real>(u: &Matrix4<Complex<T>>) -> T {
    let d = u.adjoint() * u - Matrix4::identity();
    d.iter().fold(T::zero(), |m, z| m.max(cabs(*z)))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GateKind {
    /// Geometric phase gate from a σz-dependent force.
    Zz,
    /// Bichromatic sideband gate (σ_φσ_φ).
    PhiPhi,
}

impl GateKind {
    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "zz" => Ok(GateKind::Zz),
            "phiphi" | "ms" => Ok(GateKind::PhiPhi),
            other => Err(Error::Parse(format!("unknown gate kind '{other}' (expected zz or phiphi)"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            GateKind::Zz => "zz",
            GateKind::PhiPhi => "phiphi",
        }
    }
}

/// A single-loop gate on mode `mode_index`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GateSpec<T> {
    pub kind: GateKind,
    pub mode_index: usize,
    /// δ (rad/s).
    pub detuning: T,
    /// τ = 2π/δ (s).
    pub duration: T,
    pub phase_blue: T,
    pub phase_red: T,
    /// Ĩ (A).
    pub current: T,
}

impl<T: Real> GateSpec<T> {
    /// Spec for gate time τ; δ follows from τ = 2π/δ.
    pub fn from_duration(kind: GateKind, mode_index: usize, duration: T, current: T) -> Result<Self> {
        if !(duration > T::zero()) {
            return Err(Error::InvalidInput(format!("gate duration must be positive, got {duration}")));
        }
        Ok(Self {
            kind,
            mode_index,
            detuning: T::two_pi() / duration,
            duration,
            phase_blue: T::zero(),
            phase_red: T::zero(),
            current,
        })
    }

    pub fn with_phases(mut self, phase_blue: T, phase_red: T) -> Self {
        self.phase_blue = phase_blue;
        self.phase_red = phase_red;
        self
    }

    /// φ_s = (φ_b + φ_r)/2.
    pub fn phase_s(&self) -> T {
        (self.phase_blue + self.phase_red) * lit::<T>(0.5)
    }

    /// φ_d = (φ_b − φ_r)/2, the phase of the spin-dependent force.
    pub fn phase_d(&self) -> T {
        (self.phase_blue - self.phase_red) * lit::<T>(0.5)
    }

    /// Tone frequencies (rad/s) and phases for this gate.
    pub fn tones(&self, omega0: T, omega_mode: T) -> Vec<(T, T)> {
        match self.kind {
            GateKind::Zz => vec![(omega_mode - self.detuning, self.phase_blue)],
            GateKind::PhiPhi => vec![
                (omega0 + omega_mode - self.detuning, self.phase_blue),
                (omega0 - omega_mode + self.detuning, self.phase_red),
            ],
        }
    }
}

/// α(t) = (Ω/δ)(1 − e^{iδt}): starts at the origin, counterclockwise for δ > 0.
pub fn phase_space_trajectory<T: Real>(omega: T, delta: T, times: &[T]) -> Result<Vec<Complex<T>>> {
    if delta == T::zero() {
        return Err(Error::Divergence("phase-space trajectory with δ = 0 grows without bound".into()));
    }
    let r = omega / delta;
    Ok(times
        .iter()
        .map(|&t| {
            let p = delta * t;
            c(r * (T::one() - p.cos()), -r * p.sin())
        })
        .collect())
}

/// Signed area enclosed by a closed polygon in the complex plane.
pub fn enclosed_area<T: Real>(points: &[Complex<T>]) -> T {
    let n = points.len();
    let mut twice = T::zero();
    for k in 0..n {
        let a = points[k];
        let b = points[(k + 1) % n];
        twice += a.re * b.im - b.re * a.im;
    }
    twice * lit::<T>(0.5)
}

/// One sample of the four spin-conditioned trajectories.
#[derive(Clone, Debug, PartialEq)]
pub struct TrajectorySample<T> {
    pub t: T,
    /// α for the gate eigenstates in basis order ↑↑, ↑↓, ↓↑, ↓↓.
    pub alpha: [Complex<T>; 4],
}

#[derive(Clone, Debug)]
pub struct GateReport<T: Real> {
    pub kind: GateKind,
    pub spec: GateSpec<T>,
    /// Ω_{j,1}, Ω_{j,2} entering the propagator (rad/s).
    pub coupling: [T; 2],
    pub propagator: Matrix4<Complex<T>>,
    /// Phase acquired by each gate eigenstate (↑↑, ↑↓, ↓↑, ↓↓ of σ_z or σ_φs).
    pub eigen_phases: [T; 4],
    pub alpha_max: [T; 4],
    pub trajectory: Vec<TrajectorySample<T>>,
    pub required_current: Option<T>,
    pub budget: Option<ErrorBudget<T>>,
    pub notes: Vec<String>,
}

impl<T: Real> GateReport<T> {
    /// Phase of ↑↓ relative to ↑↑.
    pub fn differential_phase(&self) -> T {
        self.eigen_phases[1] - self.eigen_phases[0]
    }

    pub fn unitarity_defect(&self) -> T {
        unitarity_defect(&self.propagator)
    }

    /// max_s |α_s(τ)| / max_s,t |α_s(t)| (0 if there is no motion).
    pub fn loop_closure(&self) -> T {
        let peak = self.alpha_max.iter().fold(T::zero(), |m, v| m.max(*v));
        if peak == T::zero() {
            return T::zero();
        }
        let last = self.trajectory.last().map_or(T::zero(), |s| s.alpha.iter().fold(T::zero(), |m, a| m.max(cabs(*a))));
        last / peak
    }
}

const SPINS: [[i8; 2]; 4] = [[1, 1], [1, -1], [-1, 1], [-1, -1]];
const TRAJECTORY_SAMPLES: usize = 129;

/// exp[iθ(Ω₁σ₁ + Ω₂σ₂)²] in the basis where σ is diagonal, θ = 2π/δ².
fn diagonal_gate<T: Real>(coupling: [T; 2], delta: T) -> Result<([T; 4], Matrix4<Complex<T>>)> {
    if delta == T::zero() {
        return Err(Error::Divergence("gate detuning δ = 0".into()));
    }
    let theta = T::two_pi() / (delta * delta);
    let mut phases = [T::zero(); 4];
    let mut u = Matrix4::zeros();
    for (k, s) in SPINS.iter().enumerate() {
        let f = coupling[0] * lit(f64::from(s[0])) + coupling[1] * lit(f64::from(s[1]));
        phases[k] = theta * f * f;
        u[(k, k)] = c(phases[k].cos(), phases[k].sin());
    }
    Ok((phases, u))
}

fn gate_motion<T: Real>(coupling: [T; 2], delta: T, duration: T) -> Result<([T; 4], Vec<TrajectorySample<T>>)> {
    let times: Vec<T> = (0..TRAJECTORY_SAMPLES)
        .map(|k| duration * lit::<T>(k as f64 / (TRAJECTORY_SAMPLES - 1) as f64))
        .collect();
    let mut per_state = Vec::with_capacity(4);
    let mut alpha_max = [T::zero(); 4];
    for (k, s) in SPINS.iter().enumerate() {
        let f = coupling[0] * lit(f64::from(s[0])) + coupling[1] * lit(f64::from(s[1]));
        per_state.push(phase_space_trajectory(f, delta, &times)?);
        alpha_max[k] = lit::<T>(2.0) * (f / delta).abs();
    }
    let trajectory = times
        .iter()
        .enumerate()
        .map(|(i, &t)| TrajectorySample {
            t,
            alpha: [per_state[0][i], per_state[1][i], per_state[2][i], per_state[3][i]],
        })
        .collect();
    Ok((alpha_max, trajectory))
}

fn two_ion_mode<T: Real>(rabi: &RabiSet<T>, mode: usize) -> Result<&ModeRabi<T>> {
    let m = rabi
        .modes
        .get(mode)
        .ok_or_else(|| Error::InvalidInput(format!("mode {mode} not present ({} modes)", rabi.modes.len())))?;
    if m.x.len() != 2 {
        return Err(Error::Unsupported(format!(
            "two-qubit propagators are built for 2 ions, got {}",
            m.x.len()
        )));
    }
    Ok(m)
}

/// σzσz geometric phase gate on mode `mode` at detuning δ, closing at τ = 2π/δ.
pub fn sigma_zz_gate<T: Real>(rabi: &RabiSet<T>, mode: usize, delta: T) -> Result<GateReport<T>> {
    let m = two_ion_mode(rabi, mode)?;
    let coupling = [m.z[0], m.z[1]];
    let (phases, u) = diagonal_gate(coupling, delta)?;
    let duration = T::two_pi() / delta.abs();
    let (alpha_max, trajectory) = gate_motion(coupling, delta, duration)?;
    Ok(GateReport {
        kind: GateKind::Zz,
        spec: GateSpec {
            kind: GateKind::Zz,
            mode_index: mode,
            detuning: delta,
            duration,
            phase_blue: T::zero(),
            phase_red: T::zero(),
            current: rabi.current,
        },
        coupling,
        propagator: u,
        eigen_phases: phases,
        alpha_max,
        trajectory,
        required_current: None,
        budget: None,
        notes: rabi.flags.clone(),
    })
}

/// V = (σz + σ_φ)/√2: Hermitian, unitary, V σz V = σ_φ.
pub fn basis_change<T: Real>(phi: T) -> Matrix2<Complex<T>> {
    (sigma_z::<T>() + sigma_phi(phi)) * c(T::one() / lit::<T>(2.0).sqrt(), T::zero())
}

/// σ_φσ_φ gate from two tones at ω₀ ± ω_j ∓ δ with phases φ_b, φ_r.
///
/// `tone_amplitudes` are the blue and red drive currents; they must be equal.
pub fn sigma_phiphi_gate<T: Real>(
    rabi: &RabiSet<T>,
    mode: usize,
    delta: T,
    phase_blue: T,
    phase_red: T,
    tone_amplitudes: (T, T),
) -> Result<GateReport<T>> {
    let (ab, ar) = tone_amplitudes;
    let scale = ab.abs().max(ar.abs());
    if (ab - ar).abs() > scale * lit(1e-12) {
        return Err(Error::Unsupported(format!(
            "σφσφ propagator requires equal tone amplitudes (blue {ab}, red {ar})"
        )));
    }
    let m = two_ion_mode(rabi, mode)?;
    let coupling = [m.x[0], m.x[1]];
    let (phases, diag) = diagonal_gate(coupling, delta)?;
    let phi_s = (phase_blue + phase_red) * lit::<T>(0.5);
    let v = basis_change(phi_s);
    let vv = kron2(&v, &v);
    let u = vv * diag * vv;
    let duration = T::two_pi() / delta.abs();
    let (alpha_max, trajectory) = gate_motion(coupling, delta, duration)?;
    Ok(GateReport {
        kind: GateKind::PhiPhi,
        spec: GateSpec {
            kind: GateKind::PhiPhi,
            mode_index: mode,
            detuning: delta,
            duration,
            phase_blue,
            phase_red,
            current: rabi.current,
        },
        coupling,
        propagator: u,
        eigen_phases: phases,
        alpha_max,
        trajectory,
        required_current: None,
        budget: None,
        notes: rabi.flags.clone(),
    })
}

/// |Ω_{j,1}| per ampere for the gate kind.
fn coupling_per_amp<T: Real>(rabi_per_amp: &RabiSet<T>, mode: usize, kind: GateKind) -> Result<T> {
    let m = rabi_per_amp
        .modes
        .get(mode)
        .ok_or_else(|| Error::InvalidInput(format!("mode {mode} not present")))?;
    let per_amp = match kind {
        GateKind::Zz => m.z[0],
        GateKind::PhiPhi => m.x[0],
    }
    .abs();
    Ok(per_amp / rabi_per_amp.current.abs())
}

/// Drive current for a single-loop gate of duration τ: Ω_{j,1}(Ĩ) = δ/4 = π/(2τ).
pub fn solve_gate_current<T: Real>(
    duration: T,
    sample_per_amp: &FieldSample<T>,
    modes: &ModeDecomposition<T>,
    mode: usize,
    pair: &QubitPair<T>,
    kind: GateKind,
) -> Result<T> {
    if !(duration > T::zero()) {
        return Err(Error::InvalidInput(format!("gate duration must be positive, got {duration}")));
    }
    let rabi = rabi_frequencies(sample_per_amp, T::one(), pair, modes)?;
    let per_amp = coupling_per_amp(&rabi, mode, kind)?;
    if !(per_amp > T::zero()) {
        return Err(Error::Unsolvable(format!(
            "{} gate on mode {mode} has zero coupling; no current reaches τ = {duration} s",
            kind.name()
        )));
    }
    Ok(T::pi() / (lit::<T>(2.0) * duration * per_amp))
}

/// Gate duration reached with drive current Ĩ (inverse of [`solve_gate_current`]).
pub fn gate_duration_for_current<T: Real>(
    current: T,
    sample_per_amp: &FieldSample<T>,
    modes: &ModeDecomposition<T>,
    mode: usize,
    pair: &QubitPair<T>,
    kind: GateKind,
) -> Result<T> {
    let rabi = rabi_frequencies(sample_per_amp, T::one(), pair, modes)?;
    let omega = coupling_per_amp(&rabi, mode, kind)? * current.abs();
    if !(omega > T::zero()) {
        return Err(Error::Unsolvable("zero gate coupling".into()));
    }
    Ok(T::pi() / (lit::<T>(2.0) * omega))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn rabi_two_ion(z: [f64; 2], x: [f64; 2]) -> RabiSet<f64> {
        RabiSet {
            current: 1.0,
            omega0: 2.0 * PI * 1e9,
            omega_x: 0.0,
            omega_z: 0.0,
            modes: vec![ModeRabi {
                omega: 2.0 * PI * 5e6,
                x: x.to_vec(),
                z: z.to_vec(),
            }],
            flags: vec![],
        }
    }

    fn max_abs(m: &Matrix4<Complex<f64>>) -> f64 {
        m.iter().fold(0.0, |a, z| a.max(z.norm()))
    }

    #[test]
    fn carrier_rotation_properties() {
        let id = carrier_rotation(1e6, 0.3, 0.0);
        assert_eq!(id, Matrix2::identity());
        let w = 2.0 * PI * 2.5e5;
        let tpi = pi_time(w).unwrap();
        let u = carrier_rotation(w, 0.0, tpi);
        // From |↓⟩ (index 1) to |↑⟩.
        assert!((u[(0, 1)].norm_sqr() - 1.0).abs() < 1e-12);
        let half = carrier_rotation(w, 0.7, tpi / 2.0);
        assert!((half[(0, 1)].norm_sqr() - 0.5).abs() < 1e-12);
        let t = 0.37e-6;
        assert!((carrier_rotation(w, 1.1, t)[(1, 1)].norm_sqr() - (w * t).cos().powi(2)).abs() < 1e-12);
    }

    #[test]
    fn zz_differential_phase_at_quarter_detuning() {
        let om = 2.0 * PI * 12_500.0;
        let rabi = rabi_two_ion([om, -om], [0.0, 0.0]);
        let g = sigma_zz_gate(&rabi, 0, 4.0 * om).unwrap();
        assert!((g.differential_phase().abs() - PI / 2.0).abs() < 1e-10);
        assert!(g.unitarity_defect() < 1e-12);
        assert!(g.loop_closure() < 1e-10);
        assert!((g.spec.duration - 2.0 * PI / (4.0 * om)).abs() < 1e-18);
        for k in 0..4 {
            for l in 0..4 {
                if k != l {
                    assert_eq!(g.propagator[(k, l)], Complex::new(0.0, 0.0));
                }
            }
        }
        // Commutes with σz on either ion.
        let sz1 = kron2(&sigma_z(), &Matrix2::identity());
        let sz2 = kron2(&Matrix2::identity(), &sigma_z());
        assert!(max_abs(&(g.propagator * sz1 - sz1 * g.propagator)) <= 1e-14);
        assert!(max_abs(&(g.propagator * sz2 - sz2 * g.propagator)) <= 1e-14);
    }

    #[test]
    fn zero_coupling_is_identity() {
        let rabi = rabi_two_ion([0.0, 0.0], [0.0, 0.0]);
        let g = sigma_zz_gate(&rabi, 0, 1e5).unwrap();
        assert!(max_abs(&(g.propagator - Matrix4::identity())) == 0.0);
        let g = sigma_phiphi_gate(&rabi, 0, 1e5, 0.2, 0.4, (1.0, 1.0)).unwrap();
        assert!(max_abs(&(g.propagator - Matrix4::identity())) < 1e-15);
        assert!(matches!(sigma_zz_gate(&rabi, 0, 0.0), Err(Error::Divergence(_))));
    }

    #[test]
    fn zz_closed_form() {
        let (a, b, d) = (3.1e4, -1.7e4, 2.3e5);
        let rabi = rabi_two_ion([a, b], [0.0, 0.0]);
        let g = sigma_zz_gate(&rabi, 0, d).unwrap();
        let theta = 2.0 * PI / (d * d);
        let cz = Complex::new(0.0, theta * (a * a + b * b)).exp();
        let x = 2.0 * theta * a * b;
        let sz = kron2(&sigma_z(), &sigma_z());
        let expected = (Matrix4::identity() * Complex::new(x.cos(), 0.0) + sz * Complex::new(0.0, x.sin())) * cz;
        assert!(max_abs(&(g.propagator - expected)) < 1e-12);
    }

    #[test]
    fn phiphi_is_rotated_zz() {
        let om = 2.0 * PI * 12_500.0;
        let rabi = rabi_two_ion([om, -om], [om, -om]);
        let (pb, pr) = (0.9, -0.3);
        let ms = sigma_phiphi_gate(&rabi, 0, 4.0 * om, pb, pr, (1.7, 1.7)).unwrap();
        let zz = sigma_zz_gate(&rabi, 0, 4.0 * om).unwrap();
        let v = kron2(&basis_change(0.3), &basis_change(0.3));
        assert!(max_abs(&(ms.propagator - v * zz.propagator * v.adjoint())) <= 1e-12);
        assert!(ms.unitarity_defect() <= 1e-12);
        // Closed form with σφ⊗σφ.
        let sp = sigma_phi(0.3);
        let spp = kron2(&sp, &sp);
        let theta = 2.0 * PI / (16.0 * om * om);
        let x = -2.0 * theta * om * om;
        let expected = (Matrix4::identity() * Complex::new(x.cos(), 0.0) + spp * Complex::new(0.0, x.sin()))
            * Complex::new(0.0, 2.0 * theta * om * om).exp();
        assert!(max_abs(&(ms.propagator - expected)) < 1e-12);
        assert!(matches!(
            sigma_phiphi_gate(&rabi, 0, 4.0 * om, 0.0, 0.0, (1.0, 1.1)),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn phiphi_from_down_down_is_bell_state() {
        let om = 2.0 * PI * 12_500.0;
        let rabi = rabi_two_ion([0.0, 0.0], [om, -om]);
        let g = sigma_phiphi_gate(&rabi, 0, 4.0 * om, 0.0, 0.0, (1.0, 1.0)).unwrap();
        let out = g.propagator.column(3).into_owned();
        // Analytic target: (|↓↓⟩ + i·s|↑↑⟩)/√2 up to a global phase, s = ±1.
        let amp_dd = out[3];
        let amp_uu = out[0];
        assert!((amp_dd.norm_sqr() - 0.5).abs() < 1e-12);
        assert!((amp_uu.norm_sqr() - 0.5).abs() < 1e-12);
        let rel = amp_uu / amp_dd;
        assert!((rel.re).abs() < 1e-12 && (rel.im.abs() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn swap_symmetry() {
        let om = 1.3e4;
        let rabi = rabi_two_ion([om, -om], [om, -om]);
        let mut swap = Matrix4::<Complex<f64>>::zeros();
        for (a, b) in [(0, 0), (1, 2), (2, 1), (3, 3)] {
            swap[(a, b)] = Complex::new(1.0, 0.0);
        }
        for g in [
            sigma_zz_gate(&rabi, 0, 3.3e4).unwrap(),
            sigma_phiphi_gate(&rabi, 0, 3.3e4, 0.4, 1.0, (1.0, 1.0)).unwrap(),
        ] {
            assert!(max_abs(&(g.propagator * swap - swap * g.propagator)) < 1e-14);
        }
    }

    #[test]
    fn trajectory_geometry() {
        let (om, d) = (1e4, 4e4);
        let tau = 2.0 * PI / d;
        let a = phase_space_trajectory(om, d, &[0.0, tau / 2.0, tau]).unwrap();
        assert_eq!(a[0], Complex::new(0.0, 0.0));
        assert!((a[1].norm() - 2.0 * om / d).abs() < 1e-15);
        assert!(a[2].norm() < 1e-10 * 2.0 * om / d);
        let n = 4000;
        let ts: Vec<f64> = (0..n).map(|k| tau * k as f64 / n as f64).collect();
        let pts = phase_space_trajectory(om, d, &ts).unwrap();
        let area = enclosed_area(&pts);
        // Counterclockwise, and twice the area equals the propagator exponent θΩ².
        assert!(area > 0.0);
        let phase = 2.0 * PI * om * om / (d * d);
        assert!((2.0 * area / phase - 1.0).abs() < 1e-5);
        assert!(phase_space_trajectory(om, 0.0, &ts).is_err());
    }

    #[test]
    fn gate_spec_derived_quantities() {
        let s = GateSpec::from_duration(GateKind::PhiPhi, 0, 20e-6, 1.7).unwrap().with_phases(0.4, 0.2);
        assert!((s.detuning * s.duration - 2.0 * PI).abs() < 1e-12);
        assert!((s.phase_s() - 0.3).abs() < 1e-15);
        assert!((s.phase_d() - 0.1).abs() < 1e-15);
        let tones = s.tones(1e9, 3e7);
        assert_eq!(tones.len(), 2);
        assert!((tones[0].0 - (1e9 + 3e7 - s.detuning)).abs() < 1e-6);
        assert!(GateSpec::from_duration(GateKind::Zz, 0, 0.0, 1.0).is_err());
        assert_eq!(GateKind::parse("ms").unwrap(), GateKind::PhiPhi);
    }
}
