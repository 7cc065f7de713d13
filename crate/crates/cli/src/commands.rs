//! Subcommand implementations. Every command renders either CSV or an aligned
//! table, into `--out` or onto stdout.

use std::f64::consts::PI;
use std::io::Write;
use std::path::PathBuf;

use iongate::acceptance::run_all;
use iongate::atomic::{breit_rabi_levels, field_independent_point};
use iongate::chain::{mode_rows, normal_modes, write_modes_csv, Axis, ModeRow};
use iongate::constants::PhysicalConstants;
use iongate::evolve::{
    fock_independence_scan, integrate, write_state_dump, write_trajectory_csv, IntegrateOptions, SimState, TrajectoryRow,
};
use iongate::fields::{field_map, write_field_map_csv, FieldMapRow};
use iongate::gates::{gate_duration_for_current, report_rows, write_report_csv, write_report_table, GateKind, ReportRow};
use iongate::scenario::{ordered_pair, propagator_matrix, Scenario};

use crate::config::{parse_quantity, Dimension, GateTiming, RunConfig};
use crate::error::CliError;
use crate::{Command, Format};

/// Reference drive currents quoted for the default layout (A).
const REFERENCE_CURRENT_PHIPHI: f64 = 1.7;
const REFERENCE_CURRENT_ZZ: f64 = 1.3;

const NOTE_PI_TIME: &str = "carrier pi pulse: t_pi = pi / (2 Omega_x)";
const NOTE_MU_EFF: &str = "mu_eff = (<up|mu_z|up> - <down|mu_z|down>) / 2";

pub struct Output {
    dir: Option<PathBuf>,
    pub format: Format,
}

impl Output {
    pub fn new(dir: Option<PathBuf>, format: Format) -> Result<Self, CliError> {
        if let Some(d) = &dir {
            std::fs::create_dir_all(d).map_err(|e| CliError::io(format!("cannot create {}", d.display()), e))?;
        }
        Ok(Self { dir, format })
    }

    fn extension(&self) -> &'static str {
        match self.format {
            Format::Csv => "csv",
            Format::Table => "txt",
        }
    }

    /// Writes `bytes` to `<out>/<stem>.<ext>` or stdout.
    fn emit(&self, stem: &str, bytes: &[u8]) -> Result<(), CliError> {
        let name = format!("{stem}.{}", self.extension());
        self.emit_named(&name, bytes)
    }

    fn emit_named(&self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        match &self.dir {
            Some(d) => {
                let path = d.join(name);
                std::fs::write(&path, bytes).map_err(|e| CliError::io(format!("cannot write {}", path.display()), e))
            }
            None => {
                let mut out = std::io::stdout().lock();
                out.write_all(bytes)?;
                out.flush()?;
                Ok(())
            }
        }
    }

    /// Key/value report; notes become the table header, or go to stderr for CSV.
    fn report(&self, stem: &str, notes: &[String], rows: &[ReportRow]) -> Result<(), CliError> {
        let mut buf = Vec::new();
        match self.format {
            Format::Csv => {
                for n in notes {
                    eprintln!("# {n}");
                }
                write_report_csv(&mut buf, rows)?;
            }
            Format::Table => write_report_table(&mut buf, notes, rows)?,
        }
        self.emit(stem, &buf)
    }
}

/// Column-labelled numeric grid.
struct Grid {
    columns: Vec<String>,
    rows: Vec<Vec<f64>>,
}

impl Grid {
    fn render(&self, format: Format) -> Result<Vec<u8>, CliError> {
        let mut buf = Vec::new();
        match format {
            Format::Csv => {
                let mut w = csv::Writer::from_writer(&mut buf);
                w.write_record(&self.columns).map_err(iongate::Error::from)?;
                for r in &self.rows {
                    w.write_record(r.iter().map(|v| format!("{v:e}"))).map_err(iongate::Error::from)?;
                }
                w.flush()?;
            }
            Format::Table => {
                let width = self.columns.iter().map(|c| c.len()).max().unwrap_or(0).max(16);
                let line: Vec<String> = self.columns.iter().map(|c| format!("{c:>width$}")).collect();
                writeln!(buf, "{}", line.join(" "))?;
                for r in &self.rows {
                    let line: Vec<String> = r.iter().map(|v| format!("{v:>width$.9e}")).collect();
                    writeln!(buf, "{}", line.join(" "))?;
                }
            }
        }
        Ok(buf)
    }
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect(),
    }
}

fn mu_b() -> f64 {
    PhysicalConstants::<f64>::codata().mu_b
}

/// Scenario from the configuration, with τ resolved from whichever gate timing was given.
fn scenario(cfg: &RunConfig) -> Result<(Scenario, GateKind), CliError> {
    let settings = cfg.gate_settings()?;
    let mut s = Scenario::build_with(cfg.scenario_params()?, &cfg.registry()?)?;
    let kind = settings.kind;
    if let GateTiming::Current(i) = settings.timing {
        s.params.duration = gate_duration_for_current(i, &s.gate_per_amp, s.modes(kind), s.mode_index, s.pair(kind), kind)?;
    }
    Ok((s, kind))
}

pub fn dispatch(command: Command, cfg: &RunConfig, out: &Output) -> Result<(), CliError> {
    match command {
        Command::Levels => levels(cfg, out),
        Command::Clockpoint => clockpoint(cfg, out),
        Command::Fields => fields(cfg, out),
        Command::Design => design(cfg, out),
        Command::Modes => modes(cfg, out),
        Command::Gate => gate(cfg, out),
        Command::Errors => errors(cfg, out),
        Command::Evolve => evolve(cfg, out),
        Command::Reproduce => reproduce(cfg, out),
    }
}

fn levels(cfg: &RunConfig, out: &Output) -> Result<(), CliError> {
    let reg = cfg.registry()?;
    let species = reg.get(&cfg.species.name)?;
    let l = &cfg.levels;
    let lo = parse_quantity("levels.b_min", &l.b_min, Dimension::Field)?;
    let hi = parse_quantity("levels.b_max", &l.b_max, Dimension::Field)?;
    if l.steps == 0 || hi < lo {
        return Err(CliError::Config("levels: need steps > 0 and b_max >= b_min".into()));
    }
    let mut columns = vec!["B_T".to_string()];
    let mut rows = Vec::with_capacity(l.steps);
    for (k, b) in linspace(lo, hi, l.steps).into_iter().enumerate() {
        let mut levels = breit_rabi_levels(species, b)?;
        levels.sort_by_key(|z| z.label);
        if k == 0 {
            columns.extend(levels.iter().map(|z| format!("E[{}]_Hz", z.label)));
        }
        let mut row = vec![b];
        row.extend(levels.iter().map(|z| z.energy));
        rows.push(row);
    }
    out.emit("levels", &Grid { columns, rows }.render(out.format)?)
}

fn clockpoint(cfg: &RunConfig, out: &Output) -> Result<(), CliError> {
    let params = cfg.scenario_params()?;
    let reg = cfg.registry()?;
    let species = reg.get(&params.species)?;
    let c = field_independent_point(species, params.clock_pair, params.clock_bracket)?;
    let pair = ordered_pair(species, params.clock_pair.0, params.clock_pair.1, c.field)?;
    let two_pi = 2.0 * PI;
    let rows = vec![
        ReportRow::new("clock", "field", c.field, "T"),
        ReportRow::new("clock", "frequency", c.omega0 / two_pi, "Hz"),
        ReportRow::new("clock", "slope", c.slope / two_pi, "Hz/T"),
        ReportRow::new("clock", "curvature", c.curvature / two_pi, "Hz/T^2"),
        ReportRow::new("moment", format!("mu_z[{}]", pair.up.label), pair.mu_z_up / mu_b(), "mu_B"),
        ReportRow::new("moment", format!("mu_z[{}]", pair.down.label), pair.mu_z_down / mu_b(), "mu_B"),
        ReportRow::new("moment", "mu_x", pair.mu_x_updown / mu_b(), "mu_B"),
        ReportRow::new("moment", "mu_eff", pair.mu_effective() / mu_b(), "mu_B"),
    ];
    let notes = vec![
        format!("{} qubit {} <-> {}", species.name, pair.up.label, pair.down.label),
        NOTE_MU_EFF.to_string(),
    ];
    out.report("clockpoint", &notes, &rows)
}

fn fields(cfg: &RunConfig, out: &Output) -> Result<(), CliError> {
    let (conductors, currents) = match cfg.conductors()? {
        Some(c) => c,
        None => {
            let d0 = parse_quantity("geometry.five_wire_d0", &cfg.geometry.five_wire_d0, Dimension::Length)?;
            let design = iongate::fields::design_five_wire(d0)?;
            let currents = match cfg.fields.drive.as_str() {
                "gate" => design.gate_currents.clone(),
                "rotation" => design.rotation_currents.clone(),
                other => return Err(CliError::Config(format!("fields.drive: expected gate or rotation, got '{other}'"))),
            };
            (design.conductors, currents)
        }
    };
    let f = &cfg.fields;
    let xs = linspace(
        parse_quantity("fields.x_min", &f.x_min, Dimension::Length)?,
        parse_quantity("fields.x_max", &f.x_max, Dimension::Length)?,
        f.nx,
    );
    let zs = linspace(
        parse_quantity("fields.z_min", &f.z_min, Dimension::Length)?,
        parse_quantity("fields.z_max", &f.z_max, Dimension::Length)?,
        f.nz,
    );
    let rows = field_map(&conductors, &currents, &xs, &zs)?;
    let bytes = match out.format {
        Format::Csv => {
            let mut buf = Vec::new();
            write_field_map_csv(&mut buf, &rows)?;
            buf
        }
        Format::Table => {
            let columns = ["x_m", "z_m", "Bx_T", "Bz_T", "dBx_dz_T/m", "dBz_dx_T/m"].map(String::from).to_vec();
            let grid = rows
                .iter()
                .map(|r: &FieldMapRow| vec![r.x, r.z, r.bx, r.bz, r.dbx_dz, r.dbz_dx])
                .collect();
            Grid { columns, rows: grid }.render(Format::Table)?
        }
    };
    out.emit("fields", &bytes)
}

fn design(cfg: &RunConfig, out: &Output) -> Result<(), CliError> {
    let d0 = parse_quantity("geometry.five_wire_d0", &cfg.geometry.five_wire_d0, Dimension::Length)?;
    let d = iongate::fields::design_five_wire(d0)?;
    let (bx_target, grad_target) = d.targets();
    let mut rows = vec![
        ReportRow::new("design", "d0", d.d0, "m"),
        ReportRow::new("design", "center_width", d.shape[0], "d0"),
        ReportRow::new("design", "outer_inner_edge", d.shape[1], "d0"),
        ReportRow::new("design", "outer_outer_edge", d.shape[2], "d0"),
        ReportRow::new("design", "gate_ratio", d.gate_ratio, "1"),
        ReportRow::new("design", "rotation_Bx_per_amp", d.rotation_bx_per_amp, "T/A"),
        ReportRow::new("design", "rotation_Bx_target", bx_target, "T/A"),
        ReportRow::new("design", "gradient_per_amp", d.gradient_per_amp, "T/m/A"),
        ReportRow::new("design", "gradient_target", grad_target, "T/m/A"),
        ReportRow::new("design", "relative_null", d.relative_null, "1"),
        ReportRow::new("fit", "residual_rotation", d.fit_residuals[0], "1"),
        ReportRow::new("fit", "residual_null", d.fit_residuals[1], "1"),
        ReportRow::new("fit", "residual_gradient", d.fit_residuals[2], "1"),
        ReportRow::new("fit", "iterations", d.iterations as f64, "1"),
    ];
    for ((c, g), r) in d.conductors.iter().zip(&d.gate_currents).zip(&d.rotation_currents) {
        rows.push(ReportRow::new("gate_drive", c.name.clone(), *g, "A/A"));
        rows.push(ReportRow::new("rotation_drive", c.name.clone(), *r, "A/A"));
    }
    out.report("design", &d.notes, &rows)
}

fn modes(cfg: &RunConfig, out: &Output) -> Result<(), CliError> {
    let (s, _) = scenario(cfg)?;
    let mut rows: Vec<ModeRow> = Vec::new();
    for axis in [Axis::X, Axis::Y, Axis::Z] {
        rows.extend(mode_rows(&normal_modes(&s.chain, axis)?));
    }
    let bytes = match out.format {
        Format::Csv => {
            let mut buf = Vec::new();
            write_modes_csv(&mut buf, &rows)?;
            buf
        }
        Format::Table => {
            let mut buf = Vec::new();
            for r in &rows {
                let b: Vec<String> = r.b.iter().map(|v| format!("{v:>+.6}")).collect();
                writeln!(
                    buf,
                    "{} {:>2}  {:>16.9e} Hz  q0 {:>12.6e} m  b [{}]",
                    r.axis,
                    r.j,
                    r.omega_hz,
                    r.q0_m,
                    b.join(", ")
                )?;
            }
            buf
        }
    };
    out.emit("modes", &bytes)
}

fn gate_notes(s: &Scenario, kind: GateKind) -> Vec<String> {
    let pair = s.pair(kind);
    vec![
        format!("{} gate on mode {} ({}-axis modes)", kind.name(), s.mode_index, s.modes(kind).axis.as_char()),
        format!("qubit {} <-> {} at {:.6e} T", pair.up.label, pair.down.label, s.bias_field),
        NOTE_PI_TIME.to_string(),
        NOTE_MU_EFF.to_string(),
    ]
}

fn gate(cfg: &RunConfig, out: &Output) -> Result<(), CliError> {
    let (s, kind) = scenario(cfg)?;
    let report = s.gate_report(kind)?;
    let mut rows = report_rows(&report);
    let reference = match kind {
        GateKind::PhiPhi => REFERENCE_CURRENT_PHIPHI,
        GateKind::Zz => REFERENCE_CURRENT_ZZ,
    };
    rows.push(ReportRow::new("current", "reference", reference, "A"));
    rows.push(ReportRow::new("carrier", "pi_time", s.carrier_pi_time()?, "s"));
    rows.push(ReportRow::new("carrier", "current", s.params.carrier_current, "A"));
    rows.push(ReportRow::new("moment", "mu_eff", s.pair(kind).mu_effective() / mu_b(), "mu_B"));
    let mut notes = gate_notes(&s, kind);
    notes.extend(report.notes.iter().cloned());
    out.report("gate", &notes, &rows)
}

fn errors(cfg: &RunConfig, out: &Output) -> Result<(), CliError> {
    let (s, kind) = scenario(cfg)?;
    let report = s.gate_report(kind)?;
    let rows: Vec<ReportRow> = report_rows(&report).into_iter().filter(|r| r.section == "budget").collect();
    let d = s.params.displacement;
    let mut notes = gate_notes(&s, kind);
    notes.push(format!("displacement ({:e}, {:e}, {:e}) m", d.x, d.y, d.z));
    out.report("errors", &notes, &rows)
}

fn evolve(cfg: &RunConfig, out: &Output) -> Result<(), CliError> {
    let (s, kind) = scenario(cfg)?;
    let settings = cfg.evolve_settings()?;
    let report = s.gate_report(kind)?;
    let (h, spec) = s.gate_hamiltonian(&report, settings.n_max, settings.flags)?;
    let opts = IntegrateOptions {
        rtol: settings.rtol,
        ..Default::default()
    };
    let tau = report.spec.duration;
    let watch: Vec<usize> = (0..spec.spin_dimension()).map(|sp| spec.index(sp, &[0])).collect();

    let mut state = SimState::basis(&spec, 0);
    let mut traj = vec![TrajectoryRow::sample(&state, &watch)];
    let n = settings.trajectory_samples;
    for k in 1..n {
        let t = tau * k as f64 / (n - 1) as f64;
        state = integrate(&h, &state, t, &opts)?.0;
        traj.push(TrajectoryRow::sample(&state, &watch));
    }

    let traj_bytes = match out.format {
        Format::Csv => {
            let mut buf = Vec::new();
            write_trajectory_csv(&mut buf, &spec, &watch, &traj)?;
            buf
        }
        Format::Table => {
            let mut columns = vec!["t_s".to_string(), "norm".to_string()];
            columns.extend(watch.iter().map(|&i| format!("p_{}", spec.label(i))));
            let rows = traj
                .iter()
                .map(|r| {
                    let mut v = vec![r.t, r.norm];
                    v.extend(&r.populations);
                    v
                })
                .collect();
            Grid { columns, rows }.render(Format::Table)?
        }
    };
    let mut dump = Vec::new();
    write_state_dump(&mut dump, &spec, &state)?;

    // Files always carry the CSV trajectory; stdout follows --format.
    if out.dir.is_some() {
        let mut buf = Vec::new();
        write_trajectory_csv(&mut buf, &spec, &watch, &traj)?;
        out.emit_named("trajectory.csv", &buf)?;
    } else {
        out.emit_named("trajectory", &traj_bytes)?;
    }
    out.emit_named("final_state.txt", &dump)?;

    let target = propagator_matrix(&report);
    let scan = fock_independence_scan(&h, &spec, &target, tau, &settings.fock_scan, &opts)?;
    let mut rows = vec![
        ReportRow::new("evolve", "dimension", spec.dimension() as f64, "1"),
        ReportRow::new("evolve", "duration", tau, "s"),
        ReportRow::new("evolve", "final_norm", state.norm(), "1"),
    ];
    for e in &scan {
        rows.push(ReportRow::new("fidelity", format!("n={}", e.n), e.fidelity, "1"));
        rows.push(ReportRow::new("leakage", format!("n={}", e.n), e.leakage, "1"));
    }
    out.report("evolve_summary", &gate_notes(&s, kind), &rows)
}

fn reproduce(cfg: &RunConfig, out: &Output) -> Result<(), CliError> {
    let (s, _) = scenario(cfg)?;
    let outcomes = run_all(&s);
    let mut buf = Vec::new();
    match out.format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(&mut buf);
            w.write_record(["id", "criterion", "status", "detail"]).map_err(iongate::Error::from)?;
            for o in &outcomes {
                let status = if o.passed { "PASS" } else { "FAIL" };
                w.write_record([o.id.to_string().as_str(), o.name, status, o.detail.as_str()])
                    .map_err(iongate::Error::from)?;
            }
            w.flush()?;
        }
        Format::Table => {
            for o in &outcomes {
                writeln!(buf, "{o}")?;
            }
        }
    }
    out.emit("acceptance", &buf)?;
    let failed = outcomes.iter().filter(|o| !o.passed).count();
    if failed > 0 {
        return Err(CliError::CriteriaFailed {
            failed,
            total: outcomes.len(),
        });
    }
    Ok(())
}
