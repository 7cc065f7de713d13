//! Reproduction suite: one check per reference figure or model property.
//!
//! Each `criterion_*` function evaluates one check against its stated
//! tolerance and returns a [`CriterionOutcome`] whose `detail` carries the
//! numbers behind the verdict.

use std::f64::consts::PI;
use std::fmt;

use crate::atomic::{dipole_matrix_element, DipoleAxis};
use crate::chain::ground_state_extent;
use crate::constants::PhysicalConstants;
use crate::error::Result;
use crate::evolve::{
    extract_spin_propagator, fock_independence_scan, integrate_observed, process_fidelity, single_qubit_phase_trace,
    spin_state_with_fock, IntegrateOptions,
};
use crate::gates::{anharmonic_suppression, residual_phase_trace, GateKind, GateReport};
use crate::scenario::{propagator_matrix, Scenario, ScenarioParams};

#[derive(Clone, Debug, PartialEq)]
pub struct CriterionOutcome {
    pub id: u8,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl fmt::Display for CriterionOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "[{tag}] {:>2} {}: {}", self.id, self.name, self.detail)
    }
}

fn outcome(id: u8, name: &'static str, passed: bool, detail: String) -> CriterionOutcome {
    CriterionOutcome { id, name, passed, detail }
}

fn within_rel(value: f64, target: f64, rel: f64) -> bool {
    (value - target).abs() <= rel * target.abs()
}

fn within_factor(value: f64, target: f64, factor: f64) -> bool {
    value >= target / factor && value <= target * factor
}

/// Fock cutoff for the gate oracle runs.
pub const ORACLE_CUTOFF: usize = 16;
/// Fock cutoff for the motional-insensitivity scan (n ≤ 5).
pub const SCAN_CUTOFF: usize = 28;

fn mu_b() -> f64 {
    PhysicalConstants::<f64>::codata().mu_b
}

pub fn criterion_1(s: &Scenario) -> Result<CriterionOutcome> {
    let q0 = ground_state_extent(s.species.mass, 2.0 * PI * 5e6)?;
    Ok(outcome(
        1,
        "ground-state extent",
        (q0 - 10e-9).abs() <= 1e-9,
        format!("q0 = {:.3} nm for {} at 5 MHz (target 10 ± 1 nm)", q0 * 1e9, s.species.name),
    ))
}

pub fn criterion_2(s: &Scenario) -> Result<CriterionOutcome> {
    let clock = match s.clock {
        Some(c) => c,
        None => crate::atomic::field_independent_point(&s.species, s.params.clock_pair, s.params.clock_bracket)?,
    };
    let slope_hz_per_mt = clock.slope / (2.0 * PI) * 1e-3;
    let passed = (clock.field - 12e-3).abs() <= 0.5e-3 && slope_hz_per_mt.abs() < 10.0;
    Ok(outcome(
        2,
        "clock point",
        passed,
        format!(
            "B* = {:.4} mT (target 12.0 ± 0.5), ω0/2π = {:.6} GHz, |dω0/dB|/2π = {:.2e} Hz/mT (< 10)",
            clock.field * 1e3,
            clock.omega0 / (2.0 * PI) * 1e-9,
            slope_hz_per_mt.abs()
        ),
    ))
}

pub fn criterion_3(s: &Scenario) -> Result<CriterionOutcome> {
    let t_pi = s.carrier_pi_time()?;
    let p = &s.clock_pair;
    let element = dipole_matrix_element(&s.species, &p.down, &p.up, DipoleAxis::X)?;
    Ok(outcome(
        3,
        "carrier π time",
        within_rel(t_pi, 1e-6, 0.4),
        format!(
            "t_π = {:.4} µs at {:.1} mA (target 1.0 µs ± 40%); ⟨{}|μx|{}⟩ = {:.5} μB, B̃x = {:.4} µT/mA; t_π = π/(2Ωx), Ωx = B̃x|μx|/(2ħ)",
            t_pi * 1e6,
            s.params.carrier_current * 1e3,
            p.down.label,
            p.up.label,
            element.norm() / mu_b(),
            s.rotation_per_amp.bx().abs() * 1e3,
        ),
    ))
}

pub fn criterion_4(s: &Scenario) -> Result<CriterionOutcome> {
    let i = s.gate_current(GateKind::PhiPhi)?;
    Ok(outcome(
        4,
        "σφσφ drive current",
        within_rel(i, 1.7, 0.3),
        format!(
            "Ĩ = {i:.4} A for τ = {:.1} µs, ωj/2π = {:.2} MHz (target 1.7 A ± 30%)",
            s.params.duration * 1e6,
            s.gate_mode_frequency(GateKind::PhiPhi) / (2.0 * PI) * 1e-6
        ),
    ))
}

pub fn criterion_5(s: &Scenario) -> Result<CriterionOutcome> {
    let i = s.gate_current(GateKind::Zz)?;
    let p = &s.zz_pair;
    let mb = mu_b();
    Ok(outcome(
        5,
        "σzσz drive current",
        within_rel(i, 1.3, 0.5),
        format!(
            "Ĩ = {i:.4} A (target 1.3 A ± 50%); μz({}) = {:.5} μB, μz({}) = {:.5} μB, μ_eff = (μz↑ − μz↓)/2 = {:.5} μB",
            p.up.label,
            p.mu_z_up / mb,
            p.down.label,
            p.mu_z_down / mb,
            p.mu_effective() / mb
        ),
    ))
}

/// Max residual phase from the estimator and from direct integration, on a common time grid.
pub fn residual_phase_check(s: &Scenario, report: &GateReport<f64>, samples: usize) -> Result<(f64, f64)> {
    let budget = report.budget.as_ref().expect("scenario reports carry a budget");
    let tau = report.spec.duration;
    let times: Vec<f64> = (1..=samples).map(|k| tau * k as f64 / samples as f64).collect();
    let est = residual_phase_trace(&budget.tones, &times).into_iter().fold(0.0, f64::max);
    let (ox, oz) = budget.tones.first().map_or((0.0, 0.0), |t| (t.omega_x, t.omega_z));
    let tones = s.tones(report)?;
    let num = single_qubit_phase_trace(s.pair(report.kind).omega0, ox, oz, &tones, &times, &IntegrateOptions::default())?
        .into_iter()
        .fold(0.0, f64::max);
    Ok((est, num))
}

pub fn criterion_6(s: &Scenario) -> Result<CriterionOutcome> {
    let target = 43e-3;
    let mut passed = true;
    let mut parts = Vec::new();
    for kind in [GateKind::PhiPhi, GateKind::Zz] {
        let report = s.gate_report(kind)?;
        let budget = report.budget.as_ref().expect("budget");
        let (est, num) = residual_phase_check(s, &report, 2000)?;
        let agree = if num.max(est) < 1e-12 { true } else { (est - num).abs() <= 0.1 * num.abs() };
        let ok_size = within_factor(budget.max_phase, target, 3.0) && budget.max_phase < 150e-3;
        passed &= agree && ok_size;
        parts.push(format!(
            "{}: max θ = {:.2} mrad (worst mechanism {} {:.2} mrad, summed {:.2} mrad), oracle {:.2} mrad, estimator {:.2} mrad{}{}",
            kind.name(),
            budget.max_phase * 1e3,
            budget.worst_mechanism.name(),
            budget.worst_value * 1e3,
            budget.summed * 1e3,
            num * 1e3,
            est * 1e3,
            if ok_size { "" } else { " [outside factor 3 of 43 mrad or ≥ 150 mrad]" },
            if agree { "" } else { " [estimator/oracle differ > 10%]" },
        ));
    }
    Ok(outcome(6, "residual phases at 200 nm", passed, parts.join("; ")))
}

pub fn criterion_7(s: &Scenario) -> Result<CriterionOutcome> {
    let i = s.gate_current(GateKind::Zz)?;
    let v = s.electric_equivalence(i)?;
    Ok(outcome(
        7,
        "electric equivalence",
        within_factor(v, 2.3e-6, 2.0),
        format!(
            "V = {:.3} µV on the center electrode (target 2.3 µV within ×2); pickup {:.1} V/m per V; gradient {:.1} T/m; \
             moment {:.5} μB; the fitted layout is one member of a family matching the field targets, so this value is geometry-dependent",
            v * 1e6,
            s.center_pickup()?,
            s.gate_per_amp.dbz_dx().abs() * i,
            s.force_moment() / mu_b()
        ),
    ))
}

pub fn criterion_8(s: &Scenario) -> Result<CriterionOutcome> {
    let d = &s.design;
    let (rot_target, grad_target) = d.targets();
    let rot = d.rotation_bx_per_amp.abs();
    let grad = d.gradient_per_amp.abs();
    let passed = within_rel(rot, rot_target, 0.05) && within_rel(grad, grad_target, 0.05) && d.relative_null < 1e-6;
    Ok(outcome(
        8,
        "five-wire design",
        passed,
        format!(
            "B̃x = {:.5e} T/A (target {:.5e}), ∂Bz/∂x = {:.5e} T/m/A (target {:.5e}), relative null {:.2e}; shape [{:.5}, {:.5}, {:.5}]·d0",
            rot, rot_target, grad, grad_target, d.relative_null, d.shape[0], d.shape[1], d.shape[2]
        ),
    ))
}

/// Spin-process fidelity of the near-resonant evolution against the analytic gate.
pub fn oracle_fidelity(s: &Scenario, report: &GateReport<f64>, n_max: usize) -> Result<(f64, f64)> {
    let (h, spec) = s.gate_hamiltonian(report, n_max, None)?;
    let sp = extract_spin_propagator(&h, &spec, &[0], report.spec.duration, &IntegrateOptions::default())?;
    Ok((process_fidelity(&propagator_matrix(report), &sp.matrix)?, sp.min_purity))
}

pub fn criterion_9(s: &Scenario) -> Result<CriterionOutcome> {
    let mut passed = true;
    let mut parts = Vec::new();
    let phase_sets = [(0.0, 0.0), (0.7, -0.3), (-2.1, 1.4)];
    for (k, &(pb, pr)) in phase_sets.iter().enumerate() {
        let mut params = s.params.clone();
        params.phase_blue = pb;
        params.phase_red = pr;
        let sc = Scenario { params, ..s.clone() };
        for kind in [GateKind::Zz, GateKind::PhiPhi] {
            if kind == GateKind::Zz && k > 0 {
                continue;
            }
            let report = sc.gate_report(kind)?;
            let (f, purity) = oracle_fidelity(&sc, &report, ORACLE_CUTOFF)?;
            let (f4, _) = oracle_fidelity(&sc, &report, ORACLE_CUTOFF + 4)?;
            let dphi = (report.differential_phase().abs() - PI / 2.0).abs();
            let closure = report.loop_closure();
            let ok = f >= 1.0 - 1e-6 && dphi <= 1e-10 && closure < 1e-10 && (f - f4).abs() < 1e-8 && purity >= 1.0 - 1e-6;
            passed &= ok;
            parts.push(format!(
                "{} (φb, φr) = ({pb}, {pr}): 1 − F = {:.2e}, |Δφ − π/2| = {:.1e}, |α(τ)|/|α|max = {:.1e}, cutoff shift {:.1e}, purity defect {:.1e}",
                kind.name(),
                1.0 - f,
                dphi,
                closure,
                (f - f4).abs(),
                1.0 - purity
            ));
        }
    }
    Ok(outcome(9, "oracle equivalence", passed, parts.join("; ")))
}

pub fn criterion_10(s: &Scenario) -> Result<CriterionOutcome> {
    let report = s.gate_report(GateKind::Zz)?;
    let (h, spec) = s.gate_hamiltonian(&report, SCAN_CUTOFF, None)?;
    let scan = fock_independence_scan(
        &h,
        &spec,
        &propagator_matrix(&report),
        report.spec.duration,
        &[0, 1, 2, 3, 4, 5],
        &IntegrateOptions::default(),
    )?;
    let (lo, hi) = scan.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), e| (l.min(e.fidelity), h.max(e.fidelity)));
    let spread = hi - lo;
    let supp: f64 = anharmonic_suppression(10.6e-9, 30e-6)?;
    let passed = spread < 1e-6 && lo >= 1.0 - 1e-6 && (supp - 1.2e-7).abs() < 0.05e-7;
    Ok(outcome(
        10,
        "motional insensitivity",
        passed,
        format!(
            "σzσz fidelity over n = 0…5 in [{lo:.12}, {hi:.12}], spread {spread:.2e}; anharmonic suppression (10.6 nm / 30 µm)² = {supp:.4e}"
        ),
    ))
}

/// Largest |‖ψ(t)‖ − 1| over an evolution from each spin basis state with n = 0.
pub fn norm_drift(s: &Scenario, report: &GateReport<f64>) -> Result<f64> {
    let (h, spec) = s.gate_hamiltonian(report, ORACLE_CUTOFF, None)?;
    let mut drift: f64 = 0.0;
    for spins in 0..spec.spin_dimension() {
        let psi0 = spin_state_with_fock(&spec, spins, &[0]);
        integrate_observed(&h, &psi0, report.spec.duration, &IntegrateOptions::default(), |st| {
            drift = drift.max((st.norm() - 1.0).abs());
        })?;
    }
    Ok(drift)
}

pub fn criterion_11(s: &Scenario) -> Result<CriterionOutcome> {
    let zz = s.gate_report(GateKind::Zz)?;
    let ms = s.gate_report(GateKind::PhiPhi)?;
    let unitarity = zz.unitarity_defect().max(ms.unitarity_defect());
    let ortho = s.modes_x.orthonormality_defect().max(s.modes_z.orthonormality_defect());
    let mut field = 0.0f64;
    for sample in [&s.gate_per_amp, &s.rotation_per_amp] {
        field = field.max(sample.asymmetry()).max(sample.relative_trace());
    }
    let drift = norm_drift(s, &zz)?.max(norm_drift(s, &ms)?);
    let passed = unitarity <= 1e-12 && ortho <= 1e-12 && field <= 1e-8 && drift <= 1e-9;
    Ok(outcome(
        11,
        "invariant suites",
        passed,
        format!(
            "unitarity defect {unitarity:.1e}, mode orthonormality {ortho:.1e}, jacobian asymmetry/trace {field:.1e}, norm drift {drift:.1e}"
        ),
    ))
}

type CriterionFn = fn(&Scenario) -> Result<CriterionOutcome>;

pub const CRITERIA: [(u8, &str, CriterionFn); 11] = [
    (1, "ground-state extent", criterion_1),
    (2, "clock point", criterion_2),
    (3, "carrier π time", criterion_3),
    (4, "σφσφ drive current", criterion_4),
    (5, "σzσz drive current", criterion_5),
    (6, "residual phases at 200 nm", criterion_6),
    (7, "electric equivalence", criterion_7),
    (8, "five-wire design", criterion_8),
    (9, "oracle equivalence", criterion_9),
    (10, "motional insensitivity", criterion_10),
    (11, "invariant suites", criterion_11),
];

/// Runs every criterion; a numerical error inside one is reported as a failure of that criterion.
pub fn run_all(s: &Scenario) -> Vec<CriterionOutcome> {
    CRITERIA
        .iter()
        .map(|&(id, name, f)| f(s).unwrap_or_else(|e| outcome(id, name, false, format!("error: {e}"))))
        .collect()
}

/// The default reproduction scenario.
pub fn default_scenario() -> Result<Scenario> {
    Scenario::build(ScenarioParams::default())
}
