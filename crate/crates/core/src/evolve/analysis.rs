//! Propagators, fidelities and motional diagnostics.

use nalgebra::{Complex, DMatrix, DVector};
use rayon::prelude::*;

use super::{integrate, integrate_observed, Hamiltonian, HilbertSpec, IntegrateOptions, SimState, TermFlags};
use crate::error::{Error, Result};
use crate::fields::DriveTone;
use crate::gates::RabiSet;
use crate::real::{lit, Real};

/// Full propagator U(t1, t0), built column by column.
pub fn propagator<T: Real>(h: &Hamiltonian<T>, t0: T, t1: T, opts: &IntegrateOptions<T>) -> Result<DMatrix<Complex<T>>> {
    let dim = h.dimension;
    let cols: Vec<DVector<Complex<T>>> = (0..dim)
        .into_par_iter()
        .map(|i| {
            let mut amplitudes = DVector::from_element(dim, Complex::new(T::zero(), T::zero()));
            amplitudes[i] = Complex::new(T::one(), T::zero());
            integrate(h, &SimState { amplitudes, time: t0 }, t1, opts).map(|(s, _)| s.amplitudes)
        })
        .collect::<Result<_>>()?;
    Ok(DMatrix::from_columns(&cols))
}

/// |⟨a|b⟩|².
pub fn state_fidelity<T: Real>(a: &DVector<Complex<T>>, b: &DVector<Complex<T>>) -> T {
    a.dotc(b).norm_sqr()
}

/// |tr(A†B)|² / d².
pub fn process_fidelity<T: Real>(a: &DMatrix<Complex<T>>, b: &DMatrix<Complex<T>>) -> Result<T> {
    if a.shape() != b.shape() || a.nrows() != a.ncols() {
        return Err(Error::InvalidInput(format!("propagator shapes {:?} and {:?} differ", a.shape(), b.shape())));
    }
    let tr = (a.adjoint() * b).trace();
    let d = T::from_usize_lossy(a.nrows());
    Ok(tr.norm_sqr() / (d * d))
}

/// Product state |spins⟩ ⊗ |fock⟩.
pub fn spin_state_with_fock<T: Real>(spec: &HilbertSpec, spins: usize, fock: &[usize]) -> SimState<T> {
    SimState::basis(spec, spec.index(spins, fock))
}

/// tr ρ_m² of the reduced motional state.
pub fn motional_purity<T: Real>(spec: &HilbertSpec, state: &DVector<Complex<T>>) -> T {
    let fd = spec.fock_dimension();
    let sd = spec.spin_dimension();
    let mut purity = T::zero();
    for f in 0..fd {
        for g in 0..fd {
            let mut rho = Complex::new(T::zero(), T::zero());
            for s in 0..sd {
                rho += state[s * fd + f] * state[s * fd + g].conj();
            }
            purity += rho.norm_sqr();
        }
    }
    purity
}

/// Population in the top two Fock levels of any simulated mode.
fn edge_population<T: Real>(spec: &HilbertSpec, state: &DVector<Complex<T>>) -> T {
    let mut p = T::zero();
    for (i, z) in state.iter().enumerate() {
        let (_, fock) = spec.decompose(i);
        if fock.iter().zip(&spec.modes).any(|(&n, m)| n + 2 > m.n_max) {
            p += z.norm_sqr();
        }
    }
    p
}

/// Spin block ⟨s′, n|U|s, n⟩ for a fixed motional Fock state.
#[derive(Clone, Debug)]
pub struct SpinPropagator<T: Real> {
    pub fock: Vec<usize>,
    pub matrix: DMatrix<Complex<T>>,
    /// Largest 1 − Σ|column|² (population left outside |n⟩).
    pub leakage: T,
    /// Smallest motional purity over the spin basis inputs.
    pub min_purity: T,
    /// Largest top-two-level population seen during the evolution.
    pub edge_population: T,
}

pub fn extract_spin_propagator<T: Real>(
    h: &Hamiltonian<T>,
    spec: &HilbertSpec,
    fock: &[usize],
    t_end: T,
    opts: &IntegrateOptions<T>,
) -> Result<SpinPropagator<T>> {
    if fock.len() != spec.modes.len() || fock.iter().zip(&spec.modes).any(|(&n, m)| n > m.n_max) {
        return Err(Error::InvalidInput(format!("Fock state {fock:?} does not fit the Hilbert space")));
    }
    let sd = spec.spin_dimension();
    let results: Vec<(DVector<Complex<T>>, T)> = (0..sd)
        .into_par_iter()
        .map(|s| {
            let psi0 = spin_state_with_fock(spec, s, fock);
            let mut edge = edge_population(spec, &psi0.amplitudes);
            let (psi, _) = integrate_observed(h, &psi0, t_end, opts, |st| {
                edge = edge.max(edge_population(spec, &st.amplitudes));
            })?;
            Ok((psi.amplitudes, edge))
        })
        .collect::<Result<_>>()?;
    let mut matrix = DMatrix::from_element(sd, sd, Complex::new(T::zero(), T::zero()));
    let mut leakage = T::zero();
    let mut min_purity = T::one();
    let mut edge_population = T::zero();
    for (s, (psi, edge)) in results.iter().enumerate() {
        let mut kept = T::zero();
        for r in 0..sd {
            matrix[(r, s)] = psi[spec.index(r, fock)];
            kept += matrix[(r, s)].norm_sqr();
        }
        leakage = leakage.max(T::one() - kept);
        min_purity = min_purity.min(motional_purity(spec, psi));
        edge_population = edge_population.max(*edge);
    }
    Ok(SpinPropagator {
        fock: fock.to_vec(),
        matrix,
        leakage,
        min_purity,
        edge_population,
    })
}

/// Edge population above which a Fock cutoff is deemed too small.
pub const TRUNCATION_LIMIT: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq)]
pub struct FockScanEntry<T> {
    pub n: usize,
    pub fidelity: T,
    pub leakage: T,
    pub edge_population: T,
}

/// Spin-process fidelity against `target` for each initial Fock state n
/// (applied to every simulated mode).
pub fn fock_independence_scan<T: Real>(
    h: &Hamiltonian<T>,
    spec: &HilbertSpec,
    target: &DMatrix<Complex<T>>,
    t_end: T,
    n_values: &[usize],
    opts: &IntegrateOptions<T>,
) -> Result<Vec<FockScanEntry<T>>> {
    let mut out = Vec::with_capacity(n_values.len());
    for &n in n_values {
        let fock = vec![n; spec.modes.len()];
        let sp = extract_spin_propagator(h, spec, &fock, t_end, opts)?;
        if sp.edge_population > lit(TRUNCATION_LIMIT) {
            return Err(Error::Truncation(format!(
                "population {:.3e} reached the top two Fock levels starting from n = {n}",
                sp.edge_population.to_f64_lossy()
            )));
        }
        out.push(FockScanEntry {
            n,
            fidelity: process_fidelity(target, &sp.matrix)?,
            leakage: sp.leakage,
            edge_population: sp.edge_population,
        });
    }
    Ok(out)
}

/// Rotation angle θ(t) = arccos(Re tr U / 2) of a single driven qubit with
/// carrier couplings Ωˣ, Ωᶻ under `tones`, by direct integration.
pub fn single_qubit_phase_trace<T: Real>(
    omega0: T,
    omega_x: T,
    omega_z: T,
    tones: &[DriveTone<T>],
    times: &[T],
    opts: &IntegrateOptions<T>,
) -> Result<Vec<T>> {
    let spec = HilbertSpec::new(1, vec![])?;
    let rabi = RabiSet {
        current: T::one(),
        omega0,
        omega_x,
        omega_z,
        modes: vec![],
        flags: vec![],
    };
    let flags = TermFlags {
        carrier_x: true,
        carrier_z: true,
        ..Default::default()
    };
    let h = Hamiltonian::assemble(tones, &rabi, flags, &spec)?;
    let mut cols = [SimState::basis(&spec, 0), SimState::basis(&spec, 1)];
    let mut out = Vec::with_capacity(times.len());
    for &t in times {
        for c in cols.iter_mut() {
            *c = integrate(&h, c, t, opts)?.0;
        }
        let tr = cols[0].amplitudes[0] + cols[1].amplitudes[1];
        let half = (tr.re / lit(2.0)).min(T::one()).max(-T::one());
        out.push(half.acos());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evolve::FockMode;
    use crate::gates::{sigma_zz_gate, ModeRabi};

    #[test]
    fn fidelity_identities() {
        let u = DMatrix::<Complex<f64>>::from_fn(3, 3, |r, c| {
            if r == c {
                Complex::new((r as f64).cos(), (r as f64).sin())
            } else {
                Complex::new(0.0, 0.0)
            }
        });
        assert!((process_fidelity(&u, &u).unwrap() - 1.0).abs() < 1e-14);
        let v = &u * Complex::new(0.0, 1.0);
        assert!((process_fidelity(&u, &v).unwrap() - 1.0).abs() < 1e-14);
        assert!(process_fidelity(&u, &DMatrix::identity(2, 2)).is_err());
        let a = DVector::from_vec(vec![Complex::new(1.0f64, 0.0), Complex::new(0.0, 0.0)]);
        let b = DVector::from_vec(vec![Complex::new(0.6, 0.0), Complex::new(0.0, 0.8)]);
        assert!((state_fidelity(&a, &b) - 0.36).abs() < 1e-15);
    }

    #[test]
    fn purity_of_product_and_entangled_states() {
        let spec = HilbertSpec::new(1, vec![FockMode { mode_index: 0, n_max: 4 }]).unwrap();
        let d = spec.dimension();
        let mut psi = DVector::from_element(d, Complex::new(0.0, 0.0));
        psi[spec.index(0, &[0])] = Complex::new(0.5f64.sqrt(), 0.0);
        psi[spec.index(1, &[0])] = Complex::new(0.5f64.sqrt(), 0.0);
        assert!((motional_purity(&spec, &psi) - 1.0).abs() < 1e-14);
        psi[spec.index(1, &[0])] = Complex::new(0.0, 0.0);
        psi[spec.index(1, &[3])] = Complex::new(0.5f64.sqrt(), 0.0);
        assert!((motional_purity(&spec, &psi) - 0.5).abs() < 1e-14);
    }

    fn zz_setup(n_max: usize) -> (Hamiltonian<f64>, HilbertSpec, RabiSet<f64>, f64, f64) {
        let tau = 20e-6;
        let delta = 2.0 * std::f64::consts::PI / tau;
        let omega_mode = 2.0 * std::f64::consts::PI * 5e6;
        let rabi = RabiSet {
            current: 1.0,
            omega0: 7.6e9,
            omega_x: 0.0,
            omega_z: 0.0,
            modes: vec![ModeRabi {
                omega: omega_mode,
                x: vec![0.0, 0.0],
                z: vec![delta / 4.0, delta / 4.0],
            }],
            flags: vec![],
        };
        let spec = HilbertSpec::new(2, vec![FockMode { mode_index: 0, n_max }]).unwrap();
        let tone = DriveTone::new(omega_mode - delta, 0.3).unwrap();
        let flags = TermFlags {
            sideband_z: true,
            ..Default::default()
        };
        (Hamiltonian::assemble(&[tone], &rabi, flags, &spec).unwrap(), spec, rabi, delta, tau)
    }

    #[test]
    fn zz_gate_matches_closed_form() {
        let (h, spec, rabi, delta, tau) = zz_setup(12);
        let sp = extract_spin_propagator(&h, &spec, &[0], tau, &IntegrateOptions::default()).unwrap();
        let target = sigma_zz_gate(&rabi, 0, delta).unwrap().propagator;
        let target = DMatrix::from_fn(4, 4, |r, c| target[(r, c)]);
        let f = process_fidelity(&target, &sp.matrix).unwrap();
        assert!(f > 1.0 - 1e-6, "fidelity {f}");
        assert!(sp.leakage < 1e-6);
        assert!(sp.min_purity > 1.0 - 1e-6);
    }

    #[test]
    fn truncation_is_detected() {
        let (h, spec, rabi, delta, tau) = zz_setup(4);
        let target = sigma_zz_gate(&rabi, 0, delta).unwrap().propagator;
        let target = DMatrix::from_fn(4, 4, |r, c| target[(r, c)]);
        let r = fock_independence_scan(&h, &spec, &target, tau, &[2], &IntegrateOptions::default());
        assert!(matches!(r, Err(Error::Truncation(_))));
    }

    #[test]
    fn phase_trace_of_resonant_carrier() {
        // Resonant drive: U = exp(iΩt σ_φ), so θ = Ωt while Ωt ≤ π.
        let om = 3e5;
        let tone = DriveTone::new(1e8, 0.2).unwrap();
        let times: Vec<f64> = (1..8).map(|k| k as f64 * 1e-6).collect();
        let th = single_qubit_phase_trace(1e8, om, 0.0, &[tone], &times, &IntegrateOptions::default()).unwrap();
        for (t, v) in times.iter().zip(th) {
            assert!((v - om * t).abs() < 1e-7);
        }
    }
}
