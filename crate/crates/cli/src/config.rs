//! Run configuration: TOML sections with unit-suffixed quantities.

use std::f64::consts::PI;
use std::path::Path;

use iongate::atomic::registry::{SpeciesRecord, SpeciesRegistry};
use iongate::atomic::LevelLabel;
use iongate::chain::ModeSelection;
use iongate::evolve::TermFlags;
use iongate::fields::{Conductor, CurrentDirection};
use iongate::gates::GateKind;
use iongate::scenario::ScenarioParams;
use nalgebra::Vector3;
use serde::Deserialize;

use crate::error::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Dimension {
    Current,
    Field,
    Length,
    /// Cyclic frequency in the file, angular (rad/s) once parsed.
    Frequency,
    Time,
}

impl Dimension {
    fn name(self) -> &'static str {
        match self {
            Dimension::Current => "current",
            Dimension::Field => "magnetic field",
            Dimension::Length => "length",
            Dimension::Frequency => "frequency",
            Dimension::Time => "time",
        }
    }

    /// Unit symbols with their decimal exponent.
    fn units(self) -> &'static [(&'static str, i32)] {
        match self {
            Dimension::Current => &[("A", 0), ("mA", -3), ("uA", -6), ("µA", -6)],
            Dimension::Field => &[("T", 0), ("mT", -3), ("uT", -6), ("µT", -6), ("G", -4)],
            Dimension::Length => &[("m", 0), ("mm", -3), ("um", -6), ("µm", -6), ("nm", -9)],
            Dimension::Frequency => &[("Hz", 0), ("kHz", 3), ("MHz", 6), ("GHz", 9)],
            Dimension::Time => &[("s", 0), ("ms", -3), ("us", -6), ("µs", -6), ("ns", -9)],
        }
    }
}

/// Parses `"<number> <unit>"` into SI (angular frequency for [`Dimension::Frequency`]).
pub fn parse_quantity(key: &str, text: &str, dim: Dimension) -> Result<f64, CliError> {
    let t = text.trim();
    let split = t
        .find(|c: char| !(c.is_ascii_digit() || matches!(c, '.' | '-' | '+' | 'e' | 'E')))
        .ok_or_else(|| CliError::Config(format!("{key}: '{text}' has no unit ({} expected)", dim.name())))?;
    let (num, unit) = t.split_at(split);
    let num = num.trim();
    let bad_number = || CliError::Config(format!("{key}: cannot read a number from '{text}'"));
    num.parse::<f64>().map_err(|_| bad_number())?;
    let unit = unit.trim();
    let exponent = dim
        .units()
        .iter()
        .find(|(u, _)| *u == unit)
        .map(|(_, s)| *s)
        .ok_or_else(|| {
            let known: Vec<&str> = dim.units().iter().map(|(u, _)| *u).collect();
            CliError::Config(format!("{key}: unit '{unit}' is not a {} unit (use one of {})", dim.name(), known.join(", ")))
        })?;
    // Shift the decimal exponent in text so "15 mA" reads as exactly 15e-3.
    let (mantissa, own_exp) = match num.split_once(['e', 'E']) {
        Some((m, e)) => (m, e.parse::<i32>().map_err(|_| bad_number())?),
        None => (num, 0),
    };
    let si: f64 = format!("{mantissa}e{}", own_exp + exponent).parse().map_err(|_| bad_number())?;
    if !si.is_finite() {
        return Err(CliError::Config(format!("{key}: value must be finite")));
    }
    Ok(if dim == Dimension::Frequency { 2.0 * PI * si } else { si })
}

fn label(key: &str, text: &str) -> Result<LevelLabel, CliError> {
    text.parse().map_err(|e| CliError::Config(format!("{key}: {e}")))
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub species: SpeciesSection,
    #[serde(default)]
    pub qubit: QubitSection,
    #[serde(default)]
    pub geometry: GeometrySection,
    #[serde(default)]
    pub chain: ChainSection,
    #[serde(default)]
    pub gate: GateSection,
    #[serde(default)]
    pub errors: ErrorsSection,
    #[serde(default)]
    pub evolve: EvolveSection,
    #[serde(default)]
    pub levels: LevelsSection,
    #[serde(default)]
    pub fields: FieldsSection,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpeciesSection {
    pub name: String,
    /// Inline constants; override or extend the built-in registry.
    pub mass_u: Option<f64>,
    pub nuclear_spin: Option<f64>,
    pub hyperfine_a: Option<String>,
    pub g_j: Option<f64>,
    pub g_i: Option<f64>,
}

impl Default for SpeciesSection {
    fn default() -> Self {
        Self {
            name: "9Be+".into(),
            mass_u: None,
            nuclear_spin: None,
            hyperfine_a: None,
            g_j: None,
            g_i: None,
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QubitSection {
    pub up: String,
    pub down: String,
    /// `"auto"` for the clock point, otherwise a field.
    pub bias: String,
    pub bracket: [String; 2],
    pub zz_up: String,
    pub zz_down: String,
}

impl Default for QubitSection {
    fn default() -> Self {
        Self {
            up: "F=1,mF=1".into(),
            down: "F=2,mF=0".into(),
            bias: "auto".into(),
            bracket: ["5 mT".into(), "20 mT".into()],
            zz_up: "F=2,mF=2".into(),
            zz_down: "F=2,mF=0".into(),
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConductorEntry {
    pub name: String,
    /// `wire` or `strip`.
    pub kind: String,
    pub x: Option<String>,
    pub z: Option<String>,
    pub z1: Option<String>,
    pub z2: Option<String>,
    #[serde(default)]
    pub direction: Option<String>,
    pub current: String,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeometrySection {
    /// Height of the ion above the five-wire layout.
    pub five_wire_d0: String,
    /// Explicit conductors for `fields`; the five-wire layout is used when empty.
    #[serde(default)]
    pub conductors: Vec<ConductorEntry>,
}

impl Default for GeometrySection {
    fn default() -> Self {
        Self {
            five_wire_d0: "30 um".into(),
            conductors: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChainSection {
    pub n: usize,
    pub axial: String,
    pub mode: String,
    pub mode_frequency: String,
}

impl Default for ChainSection {
    fn default() -> Self {
        Self {
            n: 2,
            axial: "1 MHz".into(),
            mode: "com".into(),
            mode_frequency: "5 MHz".into(),
        }
    }
}

/// Fields default individually so that an explicit section must name its own timing.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GateSection {
    #[serde(default = "default_gate_kind")]
    pub kind: String,
    #[serde(default)]
    pub duration: Option<String>,
    #[serde(default)]
    pub detuning: Option<String>,
    #[serde(default)]
    pub current: Option<String>,
    #[serde(default)]
    pub phase_blue: f64,
    #[serde(default)]
    pub phase_red: f64,
    #[serde(default = "default_carrier_current")]
    pub carrier_current: String,
}

fn default_gate_kind() -> String {
    "phiphi".into()
}

fn default_carrier_current() -> String {
    "15 mA".into()
}

impl Default for GateSection {
    fn default() -> Self {
        Self {
            kind: default_gate_kind(),
            duration: Some("20 us".into()),
            detuning: None,
            current: None,
            phase_blue: 0.0,
            phase_red: 0.0,
            carrier_current: default_carrier_current(),
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ErrorsSection {
    pub displacement: [String; 3],
}

impl Default for ErrorsSection {
    fn default() -> Self {
        Self {
            displacement: ["0 nm".into(), "0 nm".into(), "200 nm".into()],
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvolveSection {
    /// Any of carrier_x, carrier_z, sideband_x, sideband_z, offresonant; empty = the gate's own sideband.
    #[serde(default)]
    pub terms: Vec<String>,
    pub n_max: usize,
    pub rtol: f64,
    pub fock_scan: Vec<usize>,
    pub trajectory_samples: usize,
}

impl Default for EvolveSection {
    fn default() -> Self {
        Self {
            terms: Vec::new(),
            n_max: 16,
            rtol: 1e-10,
            fock_scan: vec![0, 1, 2],
            trajectory_samples: 200,
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LevelsSection {
    pub b_min: String,
    pub b_max: String,
    pub steps: usize,
}

impl Default for LevelsSection {
    fn default() -> Self {
        Self {
            b_min: "0 mT".into(),
            b_max: "20 mT".into(),
            steps: 41,
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FieldsSection {
    pub x_min: String,
    pub x_max: String,
    pub nx: usize,
    pub z_min: String,
    pub z_max: String,
    pub nz: usize,
    /// `gate` or `rotation` (five-wire drive patterns, per ampere).
    pub drive: String,
}

impl Default for FieldsSection {
    fn default() -> Self {
        Self {
            x_min: "10 um".into(),
            x_max: "60 um".into(),
            nx: 11,
            z_min: "-50 um".into(),
            z_max: "50 um".into(),
            nz: 21,
            drive: "gate".into(),
        }
    }
}

/// Conductors with their currents (A).
pub type Layout = (Vec<Conductor<f64>>, Vec<f64>);

/// How the gate timing was specified.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum GateTiming {
    Duration(f64),
    Detuning(f64),
    Current(f64),
}

pub struct GateSettings {
    pub kind: GateKind,
    pub timing: GateTiming,
}

pub struct EvolveSettings {
    pub flags: Option<TermFlags>,
    pub n_max: usize,
    pub rtol: f64,
    pub fock_scan: Vec<usize>,
    pub trajectory_samples: usize,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.gate_settings()?;
        Ok(cfg)
    }

    pub fn registry(&self) -> Result<SpeciesRegistry, CliError> {
        let mut reg = SpeciesRegistry::builtin();
        let s = &self.species;
        let inline = [s.mass_u.is_some(), s.nuclear_spin.is_some(), s.hyperfine_a.is_some(), s.g_j.is_some(), s.g_i.is_some()];
        if inline.iter().any(|&b| b) {
            if !inline.iter().all(|&b| b) {
                return Err(CliError::Config(
                    "species: inline constants need all of mass_u, nuclear_spin, hyperfine_a, g_j, g_i".into(),
                ));
            }
            let a = s.hyperfine_a.as_deref().unwrap_or_default();
            let hz = parse_quantity("species.hyperfine_a", a, Dimension::Frequency)? / (2.0 * PI);
            reg.insert(SpeciesRecord {
                name: s.name.clone(),
                mass_u: s.mass_u.unwrap_or_default(),
                nuclear_spin: s.nuclear_spin.unwrap_or_default(),
                hyperfine_a_hz: hz,
                g_j: s.g_j.unwrap_or_default(),
                g_i: s.g_i.unwrap_or_default(),
                reference: "run configuration".into(),
            })
            .map_err(|e| CliError::Config(format!("species: {e}")))?;
        }
        Ok(reg)
    }

    pub fn scenario_params(&self) -> Result<ScenarioParams, CliError> {
        let q = &self.qubit;
        let bias_field = match q.bias.trim() {
            "auto" => None,
            other => Some(parse_quantity("qubit.bias", other, Dimension::Field)?),
        };
        let mode = match self.chain.mode.to_ascii_lowercase().as_str() {
            "com" => ModeSelection::Com,
            "rocking" => ModeSelection::Rocking,
            other => ModeSelection::Index(other.parse().map_err(|_| {
                CliError::Config(format!("chain.mode: expected com, rocking or a mode index, got '{other}'"))
            })?),
        };
        let d = &self.errors.displacement;
        Ok(ScenarioParams {
            species: self.species.name.clone(),
            clock_pair: (label("qubit.up", &q.up)?, label("qubit.down", &q.down)?),
            zz_pair: (label("qubit.zz_up", &q.zz_up)?, label("qubit.zz_down", &q.zz_down)?),
            bias_field,
            clock_bracket: (
                parse_quantity("qubit.bracket", &q.bracket[0], Dimension::Field)?,
                parse_quantity("qubit.bracket", &q.bracket[1], Dimension::Field)?,
            ),
            d0: parse_quantity("geometry.five_wire_d0", &self.geometry.five_wire_d0, Dimension::Length)?,
            n_ions: self.chain.n,
            axial_frequency: parse_quantity("chain.axial", &self.chain.axial, Dimension::Frequency)?,
            mode_frequency: parse_quantity("chain.mode_frequency", &self.chain.mode_frequency, Dimension::Frequency)?,
            mode,
            duration: self.gate_duration_hint()?,
            carrier_current: parse_quantity("gate.carrier_current", &self.gate.carrier_current, Dimension::Current)?,
            displacement: Vector3::new(
                parse_quantity("errors.displacement", &d[0], Dimension::Length)?,
                parse_quantity("errors.displacement", &d[1], Dimension::Length)?,
                parse_quantity("errors.displacement", &d[2], Dimension::Length)?,
            ),
            phase_blue: self.gate.phase_blue,
            phase_red: self.gate.phase_red,
        })
    }

    /// τ when given directly or through δ; a placeholder otherwise (resolved from the current later).
    fn gate_duration_hint(&self) -> Result<f64, CliError> {
        Ok(match self.gate_settings()?.timing {
            GateTiming::Duration(t) => t,
            GateTiming::Detuning(d) => 2.0 * PI / d,
            GateTiming::Current(_) => 20e-6,
        })
    }

    pub fn gate_settings(&self) -> Result<GateSettings, CliError> {
        let g = &self.gate;
        let kind = GateKind::parse(&g.kind).map_err(|e| CliError::Config(format!("gate.kind: {e}")))?;
        let given: Vec<&str> = [("duration", &g.duration), ("detuning", &g.detuning), ("current", &g.current)]
            .iter()
            .filter(|(_, v)| v.is_some())
            .map(|(k, _)| *k)
            .collect();
        if given.len() != 1 {
            return Err(CliError::Config(format!(
                "gate: specify exactly one of duration, detuning, current (found {})",
                if given.is_empty() { "none".to_string() } else { given.join(" and ") }
            )));
        }
        let timing = if let Some(t) = &g.duration {
            GateTiming::Duration(parse_quantity("gate.duration", t, Dimension::Time)?)
        } else if let Some(d) = &g.detuning {
            GateTiming::Detuning(parse_quantity("gate.detuning", d, Dimension::Frequency)?)
        } else {
            GateTiming::Current(parse_quantity("gate.current", g.current.as_deref().unwrap_or_default(), Dimension::Current)?)
        };
        let positive = match timing {
            GateTiming::Duration(v) | GateTiming::Detuning(v) | GateTiming::Current(v) => v > 0.0,
        };
        if !positive {
            return Err(CliError::Config(format!("gate: {} must be positive", given[0])));
        }
        Ok(GateSettings { kind, timing })
    }

    pub fn evolve_settings(&self) -> Result<EvolveSettings, CliError> {
        let e = &self.evolve;
        let flags = if e.terms.is_empty() {
            None
        } else {
            let mut f = TermFlags::default();
            for t in &e.terms {
                match t.as_str() {
                    "carrier_x" => f.carrier_x = true,
                    "carrier_z" => f.carrier_z = true,
                    "sideband_x" => f.sideband_x = true,
                    "sideband_z" => f.sideband_z = true,
                    "offresonant" => f.offresonant = true,
                    other => return Err(CliError::Config(format!("evolve.terms: unknown term '{other}'"))),
                }
            }
            f.validate().map_err(|e| CliError::Config(format!("evolve.terms: {e}")))?;
            Some(f)
        };
        if !(e.rtol > 0.0 && e.rtol < 1e-2) {
            return Err(CliError::Config(format!("evolve.rtol must lie in (0, 1e-2), got {}", e.rtol)));
        }
        Ok(EvolveSettings {
            flags,
            n_max: e.n_max,
            rtol: e.rtol,
            fock_scan: e.fock_scan.clone(),
            trajectory_samples: e.trajectory_samples.max(2),
        })
    }

    /// Explicit conductors and their currents, if any were configured.
    pub fn conductors(&self) -> Result<Option<Layout>, CliError> {
        if self.geometry.conductors.is_empty() {
            return Ok(None);
        }
        let mut out = Vec::new();
        let mut currents = Vec::new();
        for (k, c) in self.geometry.conductors.iter().enumerate() {
            let key = |f: &str| format!("geometry.conductors[{k}].{f}");
            let len = |f: &str, v: &Option<String>| -> Result<f64, CliError> {
                let text = v.as_deref().ok_or_else(|| CliError::Config(format!("{} is required", key(f))))?;
                parse_quantity(&key(f), text, Dimension::Length)
            };
            let x = match &c.x {
                Some(_) => len("x", &c.x)?,
                None => 0.0,
            };
            let mut conductor = match c.kind.as_str() {
                "wire" => Conductor::wire(c.name.clone(), x, len("z", &c.z)?),
                "strip" => Conductor::offset_strip(c.name.clone(), len("z1", &c.z1)?, len("z2", &c.z2)?, x)
                    .map_err(|e| CliError::Config(format!("{}: {e}", key("z1"))))?,
                other => return Err(CliError::Config(format!("{}: expected wire or strip, got '{other}'", key("kind")))),
            };
            if let Some(d) = &c.direction {
                conductor = conductor.with_direction(match d.as_str() {
                    "+y" => CurrentDirection::PlusY,
                    "-y" => CurrentDirection::MinusY,
                    other => return Err(CliError::Config(format!("{}: expected +y or -y, got '{other}'", key("direction")))),
                });
            }
            currents.push(parse_quantity(&key("current"), &c.current, Dimension::Current)?);
            out.push(conductor);
        }
        Ok(Some((out, currents)))
    }
}
