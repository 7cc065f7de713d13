//! Brute-force Schrödinger evolution of the interaction Hamiltonian on a
//! truncated qubit ⊗ Fock space.
//!
//! Basis ordering: qubits major (qubit 1 most significant, 0 = |↑⟩, 1 = |↓⟩),
//! Fock numbers minor (mode 1 more significant than mode 2). Hamiltonians are
//! returned as H/ħ in rad/s.
//!
//! For each ion n and tone k (frequency ω, phase φ) the operator is
//!
//! −e^{−i(ωt+φ)} [Ωˣ σ₊ e^{iω₀t} + Ωᶻ σ_z
//!   + Σ_j (Ωˣ_{j,n} σ₊ e^{iω₀t} + Ωᶻ_{j,n} σ_z)(e^{−iω_j t} a_j + e^{iω_j t} a_j†)] + h.c.

mod analysis;
mod integrate;
mod io;

pub use analysis::{
    extract_spin_propagator, fock_independence_scan, motional_purity, process_fidelity, propagator, single_qubit_phase_trace,
    spin_state_with_fock, state_fidelity, FockScanEntry, SpinPropagator, TRUNCATION_LIMIT,
};
pub use integrate::{integrate, integrate_observed, IntegrateOptions, IntegrationStats};
pub use io::{read_state_dump, read_trajectory_csv, write_state_dump, write_trajectory_csv, TrajectoryRow};

use nalgebra::{Complex, DMatrix, DVector};

use crate::error::{Error, Result};
use crate::fields::DriveTone;
use crate::gates::RabiSet;
use crate::real::{lit, Real};

/// Default cap on the Hilbert-space dimension.
pub const DEFAULT_DIMENSION_CAP: usize = 1 << 16;
/// Smallest Fock cutoff accepted.
pub const MIN_FOCK_CUTOFF: usize = 4;

/// One simulated motional mode: index into [`RabiSet::modes`] and Fock cutoff.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FockMode {
    pub mode_index: usize,
    pub n_max: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HilbertSpec {
    pub n_qubits: usize,
    pub modes: Vec<FockMode>,
    pub dimension_cap: usize,
}

impl HilbertSpec {
    pub fn new(n_qubits: usize, modes: Vec<FockMode>) -> Result<Self> {
        Self::with_cap(n_qubits, modes, DEFAULT_DIMENSION_CAP)
    }

    pub fn with_cap(n_qubits: usize, modes: Vec<FockMode>, dimension_cap: usize) -> Result<Self> {
        if n_qubits == 0 {
            return Err(Error::InvalidInput("at least one qubit is required".into()));
        }
        if let Some(m) = modes.iter().find(|m| m.n_max < MIN_FOCK_CUTOFF) {
            return Err(Error::InvalidInput(format!(
                "Fock cutoff {} for mode {} is below the minimum {MIN_FOCK_CUTOFF}",
                m.n_max, m.mode_index
            )));
        }
        let spec = Self {
            n_qubits,
            modes,
            dimension_cap,
        };
        let dim = spec.checked_dimension().ok_or_else(|| Error::InvalidInput("Hilbert dimension overflows".into()))?;
        if dim > dimension_cap {
            return Err(Error::InvalidInput(format!(
                "Hilbert dimension {dim} exceeds the cap {dimension_cap}"
            )));
        }
        Ok(spec)
    }

    fn checked_dimension(&self) -> Option<usize> {
        let spin = 1usize.checked_shl(self.n_qubits as u32)?;
        self.modes.iter().try_fold(spin, |d, m| d.checked_mul(m.n_max + 1))
    }

    pub fn dimension(&self) -> usize {
        self.checked_dimension().expect("validated at construction")
    }

    pub fn spin_dimension(&self) -> usize {
        1 << self.n_qubits
    }

    pub fn fock_dimension(&self) -> usize {
        self.modes.iter().map(|m| m.n_max + 1).product()
    }

    /// Index of (spin configuration, Fock numbers).
    pub fn index(&self, spins: usize, fock: &[usize]) -> usize {
        let mut f = 0;
        for (m, &n) in self.modes.iter().zip(fock) {
            f = f * (m.n_max + 1) + n;
        }
        spins * self.fock_dimension() + f
    }

    /// Inverse of [`HilbertSpec::index`].
    pub fn decompose(&self, index: usize) -> (usize, Vec<usize>) {
        let fd = self.fock_dimension();
        let spins = index / fd;
        let mut rest = index % fd;
        let mut fock = vec![0; self.modes.len()];
        for (k, m) in self.modes.iter().enumerate().rev() {
            fock[k] = rest % (m.n_max + 1);
            rest /= m.n_max + 1;
        }
        (spins, fock)
    }

    /// Label such as `ud_3` (spins, then Fock numbers).
    pub fn label(&self, index: usize) -> String {
        let (spins, fock) = self.decompose(index);
        let mut s: String = (0..self.n_qubits)
            .map(|q| if (spins >> (self.n_qubits - 1 - q)) & 1 == 0 { 'u' } else { 'd' })
            .collect();
        for n in fock {
            s.push('_');
            s.push_str(&n.to_string());
        }
        s
    }
}

/// Which bracketed terms of the interaction Hamiltonian are kept.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub struct TermFlags {
    pub carrier_x: bool,
    pub carrier_z: bool,
    pub sideband_x: bool,
    pub sideband_z: bool,
    /// Keep terms rotating faster than half the lowest mode frequency.
    pub offresonant: bool,
}

impl TermFlags {
    pub fn validate(&self) -> Result<()> {
        if !(self.carrier_x || self.carrier_z || self.sideband_x || self.sideband_z) {
            return Err(Error::InvalidInput("no Hamiltonian term enabled".into()));
        }
        Ok(())
    }
}

/// Quantum state over the qubit ⊗ Fock basis at time `time` (s).
#[derive(Clone, Debug, PartialEq)]
pub struct SimState<T: Real> {
    pub amplitudes: DVector<Complex<T>>,
    pub time: T,
}

impl<T: Real> SimState<T> {
    pub fn basis(spec: &HilbertSpec, index: usize) -> Self {
        let mut amplitudes = DVector::from_element(spec.dimension(), Complex::new(T::zero(), T::zero()));
        amplitudes[index] = Complex::new(T::one(), T::zero());
        Self {
            amplitudes,
            time: T::zero(),
        }
    }

    pub fn norm(&self) -> T {
        self.amplitudes.iter().fold(T::zero(), |a, z| a + z.norm_sqr()).sqrt()
    }
}

/// Sparse operator as (row, column, value) triplets.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SparseOp<T> {
    pub entries: Vec<(usize, usize, Complex<T>)>,
}

impl<T: Real> SparseOp<T> {
    pub fn to_dense(&self, dim: usize) -> DMatrix<Complex<T>> {
        let mut m = DMatrix::from_element(dim, dim, Complex::new(T::zero(), T::zero()));
        for &(r, c, v) in &self.entries {
            m[(r, c)] += v;
        }
        m
    }
}

/// One term `c·e^{i·rate·t}·op + h.c.` of H/ħ.
#[derive(Clone, Debug)]
pub struct Term<T> {
    pub kind: &'static str,
    pub coefficient: Complex<T>,
    pub rate: T,
    pub op: SparseOp<T>,
}

/// Pre-assembled interaction Hamiltonian.
#[derive(Clone, Debug)]
pub struct Hamiltonian<T> {
    pub dimension: usize,
    pub terms: Vec<Term<T>>,
}

fn spin_z_sign(spec: &HilbertSpec, ion: usize, spins: usize) -> f64 {
    if (spins >> (spec.n_qubits - 1 - ion)) & 1 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Composes a spin operator (given on spin indices) with a_k or a_k† on mode slot `slot`.
fn with_ladder<T: Real>(spec: &HilbertSpec, spin_pairs: &[(usize, usize, f64)], slot: Option<(usize, bool)>) -> SparseOp<T> {
    let fd = spec.fock_dimension();
    let mut entries = Vec::new();
    for &(sr, sc, v) in spin_pairs {
        for f in 0..fd {
            let col = sc * fd + f;
            let (_, fock) = spec.decompose(col);
            match slot {
                None => entries.push((sr * fd + f, col, Complex::new(lit::<T>(v), T::zero()))),
                Some((k, dagger)) => {
                    let n = fock[k];
                    let n_max = spec.modes[k].n_max;
                    let (target, amp) = if dagger {
                        if n == n_max {
                            continue;
                        }
                        (n + 1, ((n + 1) as f64).sqrt())
                    } else {
                        if n == 0 {
                            continue;
                        }
                        (n - 1, (n as f64).sqrt())
                    };
                    let mut new_fock = fock.clone();
                    new_fock[k] = target;
                    let row = spec.index(sr, &new_fock);
                    entries.push((row, col, Complex::new(lit::<T>(v * amp), T::zero())));
                }
            }
        }
    }
    SparseOp { entries }
}

fn spin_pairs_plus(spec: &HilbertSpec, ion: usize) -> Vec<(usize, usize, f64)> {
    let bit = 1 << (spec.n_qubits - 1 - ion);
    (0..spec.spin_dimension())
        .filter(|s| s & bit != 0)
        .map(|s| (s & !bit, s, 1.0))
        .collect()
}

fn spin_pairs_z(spec: &HilbertSpec, ion: usize) -> Vec<(usize, usize, f64)> {
    (0..spec.spin_dimension()).map(|s| (s, s, spin_z_sign(spec, ion, s))).collect()
}

impl<T: Real> Hamiltonian<T> {
    /// Collects the enabled terms for all ions, tones and simulated modes.
    pub fn assemble(tones: &[DriveTone<T>], rabi: &RabiSet<T>, flags: TermFlags, spec: &HilbertSpec) -> Result<Self> {
        flags.validate()?;
        if let Some(t) = tones.iter().find(|t| !(t.omega > T::zero())) {
            return Err(Error::InvalidInput(format!("tone frequency must be positive, got {}", t.omega)));
        }
        for m in &spec.modes {
            let rm = rabi
                .modes
                .get(m.mode_index)
                .ok_or_else(|| Error::InvalidInput(format!("mode {} missing from the Rabi set", m.mode_index)))?;
            if rm.x.len() != spec.n_qubits {
                return Err(Error::InvalidInput(format!(
                    "Rabi set has {} ions, Hilbert space {} qubits",
                    rm.x.len(),
                    spec.n_qubits
                )));
            }
        }
        let min_mode = spec
            .modes
            .iter()
            .map(|m| rabi.modes[m.mode_index].omega)
            .fold(None, |acc: Option<T>, w| Some(acc.map_or(w, |a| a.min(w))));
        let keep = |rate: T| flags.offresonant || min_mode.is_none_or(|w| rate.abs() <= w * lit::<T>(0.5));
        let zero = Complex::new(T::zero(), T::zero());
        let mut terms = Vec::new();
        let mut push = |kind: &'static str, coefficient: Complex<T>, rate: T, op: SparseOp<T>| {
            if coefficient != zero && keep(rate) && !op.entries.is_empty() {
                terms.push(Term {
                    kind,
                    coefficient,
                    rate,
                    op,
                });
            }
        };
        for tone in tones {
            let phase = Complex::new(-tone.phase.cos(), tone.phase.sin()); // −e^{−iφ}
            for ion in 0..spec.n_qubits {
                let plus = spin_pairs_plus(spec, ion);
                let z = spin_pairs_z(spec, ion);
                if flags.carrier_x {
                    push("carrier_x", phase * rabi.omega_x, rabi.omega0 - tone.omega, with_ladder(spec, &plus, None));
                }
                if flags.carrier_z {
                    push("carrier_z", phase * rabi.omega_z, -tone.omega, with_ladder(spec, &z, None));
                }
                for (slot, m) in spec.modes.iter().enumerate() {
                    let rm = &rabi.modes[m.mode_index];
                    if flags.sideband_x {
                        let c = phase * rm.x[ion];
                        push("sideband_x", c, rabi.omega0 - tone.omega - rm.omega, with_ladder(spec, &plus, Some((slot, false))));
                        push("sideband_x", c, rabi.omega0 - tone.omega + rm.omega, with_ladder(spec, &plus, Some((slot, true))));
                    }
                    if flags.sideband_z {
                        let c = phase * rm.z[ion];
                        push("sideband_z", c, -tone.omega - rm.omega, with_ladder(spec, &z, Some((slot, false))));
                        push("sideband_z", c, -tone.omega + rm.omega, with_ladder(spec, &z, Some((slot, true))));
                    }
                }
            }
        }
        Ok(Self {
            dimension: spec.dimension(),
            terms,
        })
    }

    /// dψ/dt = −i H(t) ψ, accumulated into `out`.
    pub fn apply_derivative(&self, t: T, psi: &DVector<Complex<T>>, out: &mut DVector<Complex<T>>) {
        out.fill(Complex::new(T::zero(), T::zero()));
        for term in &self.terms {
            let p = term.rate * t;
            let a = term.coefficient * Complex::new(p.cos(), p.sin());
            // −i·a and −i·a*
            let ma = Complex::new(a.im, -a.re);
            let mac = Complex::new(-a.im, -a.re);
            for &(r, c, v) in &term.op.entries {
                out[r] += ma * v * psi[c];
                out[c] += mac * v.conj() * psi[r];
            }
        }
    }

    pub fn dense(&self, t: T) -> DMatrix<Complex<T>> {
        let mut h = DMatrix::from_element(self.dimension, self.dimension, Complex::new(T::zero(), T::zero()));
        for term in &self.terms {
            let p = term.rate * t;
            let a = term.coefficient * Complex::new(p.cos(), p.sin());
            for &(r, c, v) in &term.op.entries {
                h[(r, c)] += a * v;
                h[(c, r)] += (a * v).conj();
            }
        }
        h
    }

    /// Largest |rate| + |coefficient| over the terms (rad/s).
    pub fn fastest_scale(&self) -> T {
        self.terms.iter().fold(T::zero(), |m, t| {
            let c = t.coefficient.norm_sqr().sqrt();
            m.max(t.rate.abs() + c)
        })
    }

    /// −H(τ − s) as a function of s: evolving forward with it for a time τ applies U(τ, 0)†.
    pub fn time_reversed(&self, tau: T) -> Self {
        Self {
            dimension: self.dimension,
            terms: self
                .terms
                .iter()
                .map(|t| {
                    let p = t.rate * tau;
                    Term {
                        kind: t.kind,
                        coefficient: -(t.coefficient * Complex::new(p.cos(), p.sin())),
                        rate: -t.rate,
                        op: t.op.clone(),
                    }
                })
                .collect(),
        }
    }
}

/// Dense H(t)/ħ (rad/s).
pub fn build_hamiltonian<T: Real>(
    t: T,
    tones: &[DriveTone<T>],
    rabi: &RabiSet<T>,
    flags: TermFlags,
    spec: &HilbertSpec,
) -> Result<DMatrix<Complex<T>>> {
    Ok(Hamiltonian::assemble(tones, rabi, flags, spec)?.dense(t))
}
