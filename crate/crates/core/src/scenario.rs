//! End-to-end gate scenario: species, bias point, trap layout, chain and drives.
//!
//! The σzσz gate is driven through the x (height) modes, where the gate
//! pattern has ∂Bz/∂x; the σφσφ gate uses the z modes, where it has ∂Bx/∂z.

use std::f64::consts::PI;

use nalgebra::{Complex, DMatrix, Vector3};

use crate::atomic::registry::SpeciesRegistry;
use crate::atomic::{field_independent_point, ClockPoint, IonSpecies, LevelLabel, QubitPair};
use crate::chain::{normal_modes, transverse_frequency_for_mode, Axis, ChainConfig, ModeDecomposition, ModeSelection};
use crate::error::{Error, Result};
use crate::evolve::{FockMode, Hamiltonian, HilbertSpec, TermFlags};
use crate::fields::{design_five_wire, pickup_field, DriveTone, FieldSample, FiveWireDesign};
use crate::gates::{
    anharmonic_suppression, electric_equivalence_potential, pi_time, rabi_frequencies, residual_error_budget,
    sigma_phiphi_gate, sigma_zz_gate, solve_gate_current, BudgetInput, GateKind, GateReport, RabiSet,
};

#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioParams {
    pub species: String,
    pub clock_pair: (LevelLabel, LevelLabel),
    pub zz_pair: (LevelLabel, LevelLabel),
    /// Bias field (T); `None` uses the clock point of `clock_pair`.
    pub bias_field: Option<f64>,
    /// Clock-point search bracket (T).
    pub clock_bracket: (f64, f64),
    /// Ion height above the electrode plane (m).
    pub d0: f64,
    pub n_ions: usize,
    /// Axial trap frequency ω_y (rad/s).
    pub axial_frequency: f64,
    /// Gate mode frequency ω_j (rad/s).
    pub mode_frequency: f64,
    pub mode: ModeSelection,
    /// Gate duration τ (s).
    pub duration: f64,
    /// Carrier drive current for the π-time estimate (A).
    pub carrier_current: f64,
    /// Ion displacement for the residual-field budget (m).
    pub displacement: Vector3<f64>,
    pub phase_blue: f64,
    pub phase_red: f64,
}

impl Default for ScenarioParams {
    fn default() -> Self {
        Self {
            species: "9Be+".into(),
            clock_pair: (LevelLabel::new(1, 1), LevelLabel::new(2, 0)),
            zz_pair: (LevelLabel::new(2, 2), LevelLabel::new(2, 0)),
            bias_field: None,
            clock_bracket: (5e-3, 20e-3),
            d0: 30e-6,
            n_ions: 2,
            axial_frequency: 2.0 * PI * 1e6,
            mode_frequency: 2.0 * PI * 5e6,
            mode: ModeSelection::Com,
            duration: 20e-6,
            carrier_current: 15e-3,
            displacement: Vector3::new(0.0, 0.0, 200e-9),
            phase_blue: 0.0,
            phase_red: 0.0,
        }
    }
}

/// Builds a pair from two labels, ordering them so that ω₀ > 0.
pub fn ordered_pair(species: &IonSpecies<f64>, a: LevelLabel, b: LevelLabel, field: f64) -> Result<QubitPair<f64>> {
    QubitPair::new(species, a, b, field).or_else(|_| QubitPair::new(species, b, a, field))
}

#[derive(Clone, Debug)]
pub struct Scenario {
    pub params: ScenarioParams,
    pub species: IonSpecies<f64>,
    pub clock: Option<ClockPoint<f64>>,
    pub bias_field: f64,
    pub clock_pair: QubitPair<f64>,
    pub zz_pair: QubitPair<f64>,
    pub design: FiveWireDesign<f64>,
    pub chain: ChainConfig<f64>,
    pub modes_x: ModeDecomposition<f64>,
    pub modes_z: ModeDecomposition<f64>,
    pub mode_index: usize,
    pub gate_per_amp: FieldSample<f64>,
    pub rotation_per_amp: FieldSample<f64>,
}

impl Scenario {
    pub fn build(params: ScenarioParams) -> Result<Self> {
        Self::build_with(params, &SpeciesRegistry::builtin())
    }

    pub fn build_with(params: ScenarioParams, registry: &SpeciesRegistry) -> Result<Self> {
        let species = registry.get(&params.species)?.clone();
        let (clock, bias_field) = match params.bias_field {
            Some(b) => (None, b),
            None => {
                let c = field_independent_point(&species, params.clock_pair, params.clock_bracket)?;
                (Some(c), c.field)
            }
        };
        let clock_pair = ordered_pair(&species, params.clock_pair.0, params.clock_pair.1, bias_field)?;
        let zz_pair = ordered_pair(&species, params.zz_pair.0, params.zz_pair.1, bias_field)?;
        let design = design_five_wire(params.d0)?;
        let transverse =
            transverse_frequency_for_mode(params.n_ions, params.axial_frequency, params.mode_frequency, params.mode)?;
        let chain = ChainConfig::new(params.n_ions, species.mass, params.axial_frequency, transverse, transverse)?;
        let modes_x = normal_modes(&chain, Axis::X)?;
        let modes_z = normal_modes(&chain, Axis::Z)?;
        let mode_index = match params.mode {
            ModeSelection::Com => params.n_ions - 1,
            ModeSelection::Rocking => params.n_ions.checked_sub(2).ok_or_else(|| {
                Error::InvalidInput("a rocking mode needs at least two ions".into())
            })?,
            ModeSelection::Index(j) => j,
        };
        let gate_per_amp = design.gate_sample(1.0)?;
        let rotation_per_amp = design.rotation_sample(1.0)?;
        Ok(Self {
            params,
            species,
            clock,
            bias_field,
            clock_pair,
            zz_pair,
            design,
            chain,
            modes_x,
            modes_z,
            mode_index,
            gate_per_amp,
            rotation_per_amp,
        })
    }

    pub fn modes(&self, kind: GateKind) -> &ModeDecomposition<f64> {
        match kind {
            GateKind::Zz => &self.modes_x,
            GateKind::PhiPhi => &self.modes_z,
        }
    }

    pub fn pair(&self, kind: GateKind) -> &QubitPair<f64> {
        match kind {
            GateKind::Zz => &self.zz_pair,
            GateKind::PhiPhi => &self.clock_pair,
        }
    }

    pub fn gate_mode_frequency(&self, kind: GateKind) -> f64 {
        self.modes(kind).modes[self.mode_index].omega
    }

    /// Resonant carrier π time at the configured carrier current (s).
    pub fn carrier_pi_time(&self) -> Result<f64> {
        let rabi = rabi_frequencies(&self.rotation_per_amp, self.params.carrier_current, &self.clock_pair, &self.modes_z)?;
        pi_time(rabi.omega_x)
    }

    /// Drive current closing a single-loop gate in the configured τ (A).
    pub fn gate_current(&self, kind: GateKind) -> Result<f64> {
        solve_gate_current(
            self.params.duration,
            &self.gate_per_amp,
            self.modes(kind),
            self.mode_index,
            self.pair(kind),
            kind,
        )
    }

    pub fn rabi(&self, kind: GateKind, current: f64) -> Result<RabiSet<f64>> {
        rabi_frequencies(&self.gate_per_amp, current, self.pair(kind), self.modes(kind))
    }

    /// Analytic gate at the current that closes the loop in τ, with its error budget.
    pub fn gate_report(&self, kind: GateKind) -> Result<GateReport<f64>> {
        let current = self.gate_current(kind)?;
        let rabi = self.rabi(kind, current)?;
        let delta = 2.0 * PI / self.params.duration;
        let mut report = match kind {
            GateKind::Zz => sigma_zz_gate(&rabi, self.mode_index, delta)?,
            GateKind::PhiPhi => sigma_phiphi_gate(
                &rabi,
                self.mode_index,
                delta,
                self.params.phase_blue,
                self.params.phase_red,
                (current, current),
            )?,
        };
        report.required_current = Some(current);
        let mut budget = residual_error_budget(&BudgetInput {
            sample_per_amp: &self.gate_per_amp,
            displacement: self.params.displacement,
            spec: &report.spec,
            pair: self.pair(kind),
            mode_omega: self.gate_mode_frequency(kind),
        })?;
        let q0 = self.modes(kind).modes[self.mode_index].q0;
        budget.anharmonic_suppression = Some(anharmonic_suppression(q0, self.params.d0)?);
        if kind == GateKind::Zz {
            budget.electric_potential = Some(self.electric_equivalence(current)?);
        }
        report.budget = Some(budget);
        Ok(report)
    }

    /// |E| at the ion per volt on the center electrode (V/m per V).
    pub fn center_pickup(&self) -> Result<f64> {
        Ok(pickup_field(self.design.center(), 1.0, &self.design.ion)?.norm())
    }

    /// ⟨μz⟩ of the first listed σzσz level (J/T).
    pub fn force_moment(&self) -> f64 {
        let p = &self.zz_pair;
        if p.up.label == self.params.zz_pair.0 {
            p.mu_z_up
        } else {
            p.mu_z_down
        }
    }

    /// Center-electrode potential whose force matches the σzσz magnetic force on
    /// the first listed level at `current` (V).
    pub fn electric_equivalence(&self, current: f64) -> Result<f64> {
        let gradient = self.gate_per_amp.dbz_dx().abs() * current;
        electric_equivalence_potential(gradient, self.force_moment(), self.center_pickup()?)
    }

    /// Drive tones of the gate (rad/s, rad).
    pub fn tones(&self, report: &GateReport<f64>) -> Result<Vec<DriveTone<f64>>> {
        let kind = report.kind;
        report
            .spec
            .tones(self.pair(kind).omega0, self.gate_mode_frequency(kind))
            .into_iter()
            .map(|(w, p)| DriveTone::new(w, p))
            .collect()
    }

    /// Near-resonant gate Hamiltonian on the gate mode with Fock cutoff `n_max`.
    pub fn gate_hamiltonian(&self, report: &GateReport<f64>, n_max: usize, flags: Option<TermFlags>) -> Result<(Hamiltonian<f64>, HilbertSpec)> {
        let kind = report.kind;
        let rabi = self.rabi(kind, report.spec.current)?;
        let flags = flags.unwrap_or(match kind {
            GateKind::Zz => TermFlags {
                sideband_z: true,
                ..Default::default()
            },
            GateKind::PhiPhi => TermFlags {
                sideband_x: true,
                ..Default::default()
            },
        });
        let spec = HilbertSpec::new(
            self.params.n_ions,
            vec![FockMode {
                mode_index: self.mode_index,
                n_max,
            }],
        )?;
        let h = Hamiltonian::assemble(&self.tones(report)?, &rabi, flags, &spec)?;
        Ok((h, spec))
    }
}

/// The analytic propagator as a dynamic matrix.
pub fn propagator_matrix(report: &GateReport<f64>) -> DMatrix<Complex<f64>> {
    DMatrix::from_fn(4, 4, |r, c| report.propagator[(r, c)])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_scenario_builds() {
        let s = Scenario::build(ScenarioParams::default()).unwrap();
        assert!((s.bias_field - 11.9446e-3).abs() < 1e-6);
        assert!(s.clock_pair.omega0 > 0.0 && s.zz_pair.omega0 > 0.0);
        assert!((s.gate_mode_frequency(GateKind::Zz) - 2.0 * PI * 5e6).abs() < 1e-3);
        assert!((s.gate_mode_frequency(GateKind::PhiPhi) - 2.0 * PI * 5e6).abs() < 1e-3);
        let i_ms = s.gate_current(GateKind::PhiPhi).unwrap();
        let i_zz = s.gate_current(GateKind::Zz).unwrap();
        assert!((i_ms - 1.7766).abs() < 1e-3, "{i_ms}");
        assert!((i_zz - 1.3623).abs() < 1e-3, "{i_zz}");
        let r = s.gate_report(GateKind::Zz).unwrap();
        assert!((r.differential_phase().abs() - PI / 2.0).abs() < 1e-10);
    }
}
