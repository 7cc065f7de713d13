//! Adaptive Dormand–Prince 5(4) integration of dψ/dt = −iH(t)ψ.

use nalgebra::{Complex, DVector};

use super::{Hamiltonian, SimState};
use crate::error::{Error, Result};
use crate::real::{lit, Real};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IntegrateOptions<T> {
    pub rtol: T,
    pub atol: T,
    pub max_steps: usize,
    /// Upper bound on |step| (s); `None` uses one radian of the fastest term.
    pub max_step: Option<T>,
}

impl<T: Real> Default for IntegrateOptions<T> {
    fn default() -> Self {
        Self {
            rtol: lit(1e-10),
            atol: lit(1e-12),
            max_steps: 50_000_000,
            max_step: None,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct IntegrationStats {
    pub accepted: usize,
    pub rejected: usize,
}

// Butcher tableau.
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Integrates `state` to `t_end` (which may precede `state.time`).
pub fn integrate<T: Real>(
    h: &Hamiltonian<T>,
    state: &SimState<T>,
    t_end: T,
    opts: &IntegrateOptions<T>,
) -> Result<(SimState<T>, IntegrationStats)> {
    integrate_observed(h, state, t_end, opts, |_| {})
}

/// As [`integrate`], calling `observer` after every accepted step.
pub fn integrate_observed<T: Real, F: FnMut(&SimState<T>)>(
    h: &Hamiltonian<T>,
    state: &SimState<T>,
    t_end: T,
    opts: &IntegrateOptions<T>,
    mut observer: F,
) -> Result<(SimState<T>, IntegrationStats)> {
    if state.amplitudes.len() != h.dimension {
        return Err(Error::InvalidInput(format!(
            "state has dimension {}, Hamiltonian {}",
            state.amplitudes.len(),
            h.dimension
        )));
    }
    let mut stats = IntegrationStats::default();
    let span = t_end - state.time;
    if span == T::zero() || h.terms.is_empty() {
        let mut out = state.clone();
        out.time = t_end;
        return Ok((out, stats));
    }
    let dir = if span > T::zero() { T::one() } else { -T::one() };
    let scale = h.fastest_scale();
    let h_max = opts.max_step.unwrap_or_else(|| T::one() / scale).min(span.abs());
    let mut step = (lit::<T>(0.01) / scale).min(h_max);
    let zero = Complex::new(T::zero(), T::zero());
    let dim = h.dimension;
    let mut y = state.amplitudes.clone();
    let mut t = state.time;
    let mut k: Vec<DVector<Complex<T>>> = (0..7).map(|_| DVector::from_element(dim, zero)).collect();
    let mut tmp = DVector::from_element(dim, zero);
    h.apply_derivative(t, &y, &mut k[0]);
    let eps: T = lit(1e-14);
    loop {
        let remaining = (t_end - t) * dir;
        if remaining <= T::zero() {
            break;
        }
        if stats.accepted + stats.rejected >= opts.max_steps {
            return Err(Error::NonConvergence {
                what: "integration step budget".into(),
                residual: remaining.to_f64_lossy(),
            });
        }
        let last = step >= remaining;
        let hs = if last { remaining } else { step } * dir;
        for s in 1..7 {
            tmp.copy_from(&y);
            for (j, kj) in k.iter().enumerate().take(s) {
                let a = A[s][j];
                if a != 0.0 {
                    tmp.axpy(Complex::new(hs * lit::<T>(a), T::zero()), kj, Complex::new(T::one(), T::zero()));
                }
            }
            let (_, tail) = k.split_at_mut(s);
            h.apply_derivative(t + hs * lit::<T>(C[s]), &tmp, &mut tail[0]);
        }
        // k[6] was evaluated at y5 (FSAL); tmp holds y5.
        let mut err = T::zero();
        for i in 0..dim {
            let mut e = zero;
            for s in 0..7 {
                let d = B5[s] - B4[s];
                if d != 0.0 {
                    e += k[s][i] * lit::<T>(d);
                }
            }
            let e = e * hs;
            let sc = opts.atol + opts.rtol * y[i].norm_sqr().sqrt().max(tmp[i].norm_sqr().sqrt());
            err += e.norm_sqr() / (sc * sc);
        }
        let err = (err / T::from_usize_lossy(dim)).sqrt();
        if err <= T::one() {
            t = if last { t_end } else { t + hs };
            y.copy_from(&tmp);
            k.swap(0, 6);
            stats.accepted += 1;
            observer(&SimState { amplitudes: y.clone(), time: t });
        } else {
            stats.rejected += 1;
        }
        let factor = if err == T::zero() {
            lit(5.0)
        } else {
            (lit::<T>(0.9) * err.powf(lit(-0.2))).min(lit(5.0)).max(lit(0.2))
        };
        step = (hs.abs() * factor).min(h_max);
        if err > T::one() && step <= eps * t.abs().max(span.abs()) {
            return Err(Error::StepUnderflow {
                t: t.to_f64_lossy(),
                step: step.to_f64_lossy(),
                error_norm: err.to_f64_lossy(),
            });
        }
    }
    Ok((SimState { amplitudes: y, time: t_end }, stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evolve::{HilbertSpec, TermFlags};
    use crate::fields::DriveTone;
    use crate::gates::RabiSet;

    fn carrier(omega_x: f64, detuning: f64) -> (Hamiltonian<f64>, HilbertSpec) {
        let spec = HilbertSpec::new(1, vec![]).unwrap();
        let rabi = RabiSet {
            current: 1.0,
            omega0: 1e8,
            omega_x,
            omega_z: 0.0,
            modes: vec![],
            flags: vec![],
        };
        let tone = DriveTone::new(1e8 - detuning, 0.4).unwrap();
        let flags = TermFlags {
            carrier_x: true,
            ..Default::default()
        };
        (Hamiltonian::assemble(&[tone], &rabi, flags, &spec).unwrap(), spec)
    }

    #[test]
    fn resonant_rabi_flop() {
        let om = 2.0 * std::f64::consts::PI * 1e5;
        let (h, spec) = carrier(om, 0.0);
        let psi0 = SimState::basis(&spec, 1);
        let opts = IntegrateOptions::default();
        for t in [1e-7, 1.3e-6, 2.5e-6, 9.1e-6] {
            let (psi, _) = integrate(&h, &psi0, t, &opts).unwrap();
            let p_down = psi.amplitudes[1].norm_sqr();
            assert!((p_down - (om * t).cos().powi(2)).abs() < 1e-8, "t = {t}");
            assert!((psi.norm() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn detuned_rabi_formula() {
        // Off-resonant flop: P↑ = (2Ω/W)² sin²(Wt/2), W = √((2Ω)² + Δ²).
        let om = 1e5;
        let det = 3e5;
        let (h, spec) = carrier(om, det);
        let psi0 = SimState::basis(&spec, 1);
        let w = ((2.0 * om).powi(2) + det * det).sqrt();
        let t = 2.7e-5;
        let (psi, _) = integrate(&h, &psi0, t, &IntegrateOptions::default()).unwrap();
        let expected = (2.0 * om / w).powi(2) * (w * t / 2.0).sin().powi(2);
        assert!((psi.amplitudes[0].norm_sqr() - expected).abs() < 1e-8);
    }

    #[test]
    fn backward_integration_returns_initial_state() {
        let (h, spec) = carrier(2e5, 7e4);
        let psi0 = SimState::basis(&spec, 0);
        let opts = IntegrateOptions::default();
        let (fwd, _) = integrate(&h, &psi0, 4e-5, &opts).unwrap();
        let (back, _) = integrate(&h, &fwd, 0.0, &opts).unwrap();
        let diff: f64 = (&back.amplitudes - &psi0.amplitudes).iter().map(|z| z.norm()).sum();
        assert!(diff < 1e-8, "{diff}");
    }

    #[test]
    fn step_budget_is_reported() {
        let (h, spec) = carrier(2e5, 7e4);
        let opts = IntegrateOptions {
            max_steps: 3,
            ..IntegrateOptions::default()
        };
        assert!(integrate(&h, &SimState::basis(&spec, 0), 1e-3, &opts).is_err());
    }
}
