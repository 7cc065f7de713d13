//! Tabular and CSV rendering of gate reports.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::{GateKind, GateReport};
use crate::error::Result;

/// One line of a report: `section,label,value,unit`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub section: String,
    pub label: String,
    pub value: f64,
    pub unit: String,
}

impl ReportRow {
    pub fn new(section: &str, label: impl Into<String>, value: f64, unit: &str) -> Self {
        Self {
            section: section.to_string(),
            label: label.into(),
            value,
            unit: unit.to_string(),
        }
    }
}

const STATE_LABELS: [&str; 4] = ["uu", "ud", "du", "dd"];

pub fn report_rows(report: &GateReport<f64>) -> Vec<ReportRow> {
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut rows = vec![
        ReportRow::new("gate", "mode_index", report.spec.mode_index as f64, "1"),
        ReportRow::new("gate", "detuning", report.spec.detuning / two_pi, "Hz"),
        ReportRow::new("gate", "duration", report.spec.duration, "s"),
        ReportRow::new("gate", "current", report.spec.current, "A"),
        ReportRow::new("gate", "coupling_ion1", report.coupling[0], "rad/s"),
        ReportRow::new("gate", "coupling_ion2", report.coupling[1], "rad/s"),
        ReportRow::new("gate", "differential_phase", report.differential_phase(), "rad"),
        ReportRow::new("gate", "unitarity_defect", report.unitarity_defect(), "1"),
    ];
    if report.kind == GateKind::PhiPhi {
        rows.push(ReportRow::new("gate", "phase_s", report.spec.phase_s(), "rad"));
    }
    for (k, label) in STATE_LABELS.iter().enumerate() {
        rows.push(ReportRow::new("phase", *label, report.eigen_phases[k], "rad"));
    }
    for (k, label) in STATE_LABELS.iter().enumerate() {
        rows.push(ReportRow::new("alpha_max", *label, report.alpha_max[k], "1"));
    }
    if let Some(i) = report.required_current {
        rows.push(ReportRow::new("current", "required", i, "A"));
    }
    if let Some(b) = &report.budget {
        rows.push(ReportRow::new("budget", "residual_Bx", b.residual_field.x, "T"));
        rows.push(ReportRow::new("budget", "residual_Bz", b.residual_field.z, "T"));
        for t in &b.tones {
            rows.push(ReportRow::new("budget", format!("{}/carrier_excursion", t.label), t.carrier_excursion, "rad"));
            rows.push(ReportRow::new("budget", format!("{}/ac_zeeman", t.label), t.ac_zeeman_phase, "rad"));
            rows.push(ReportRow::new("budget", format!("{}/z_modulation", t.label), t.z_modulation, "rad"));
        }
        for (m, v) in &b.mechanisms {
            rows.push(ReportRow::new("budget", format!("total/{}", m.name()), *v, "rad"));
        }
        rows.push(ReportRow::new("budget", format!("worst/{}", b.worst_mechanism.name()), b.worst_value, "rad"));
        rows.push(ReportRow::new("budget", "summed", b.summed, "rad"));
        rows.push(ReportRow::new("budget", "max_phase", b.max_phase, "rad"));
        if let Some(v) = b.electric_potential {
            rows.push(ReportRow::new("budget", "electric_equivalence", v, "V"));
        }
        if let Some(s) = b.anharmonic_suppression {
            rows.push(ReportRow::new("budget", "anharmonic_suppression", s, "1"));
        }
    }
    rows
}

pub fn write_report_csv<W: Write>(writer: W, rows: &[ReportRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_report_csv<R: Read>(reader: R) -> Result<Vec<ReportRow>> {
    let mut r = csv::Reader::from_reader(reader);
    let mut rows = Vec::new();
    for row in r.deserialize() {
        rows.push(row?);
    }
    Ok(rows)
}

/// Aligned plain-text table, preceded by `header` lines.
pub fn write_report_table<W: Write>(mut writer: W, header: &[String], rows: &[ReportRow]) -> Result<()> {
    for h in header {
        writeln!(writer, "# {h}")?;
    }
    let width = rows.iter().map(|r| r.section.len() + r.label.len() + 1).max().unwrap_or(0);
    for r in rows {
        let key = format!("{}.{}", r.section, r.label);
        writeln!(writer, "{key:<width$}  {:>16.9e}  {}", r.value, r.unit)?;
    }
    Ok(())
}
