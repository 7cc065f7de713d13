//! Trajectory CSV and plain-text state dumps.

use std::io::{BufRead, BufReader, Read, Write};

use nalgebra::{Complex, DVector};

use super::{HilbertSpec, SimState};
use crate::error::{Error, Result};

/// Time, norm and watched basis populations at one sample.
#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryRow {
    pub t: f64,
    pub norm: f64,
    pub populations: Vec<f64>,
}

impl TrajectoryRow {
    pub fn sample(state: &SimState<f64>, watch: &[usize]) -> Self {
        Self {
            t: state.time,
            norm: state.norm(),
            populations: watch.iter().map(|&i| state.amplitudes[i].norm_sqr()).collect(),
        }
    }
}

/// Columns `t,norm,p_<label>...`.
pub fn write_trajectory_csv<W: Write>(writer: W, spec: &HilbertSpec, watch: &[usize], rows: &[TrajectoryRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["t".to_string(), "norm".to_string()];
    header.extend(watch.iter().map(|&i| format!("p_{}", spec.label(i))));
    w.write_record(&header)?;
    for r in rows {
        let mut rec = vec![format!("{:e}", r.t), format!("{:.15e}", r.norm)];
        rec.extend(r.populations.iter().map(|p| format!("{p:.15e}")));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Returns the watched labels and the rows.
pub fn read_trajectory_csv<R: Read>(reader: R) -> Result<(Vec<String>, Vec<TrajectoryRow>)> {
    let mut r = csv::Reader::from_reader(reader);
    let header = r.headers()?.clone();
    if header.len() < 2 || &header[0] != "t" || &header[1] != "norm" {
        return Err(Error::Parse("trajectory header must start with t,norm".into()));
    }
    let labels = header.iter().skip(2).map(|h| h.trim_start_matches("p_").to_string()).collect();
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let vals: Vec<f64> = rec
            .iter()
            .map(|v| v.trim().parse::<f64>().map_err(|e| Error::Parse(format!("{v:?}: {e}"))))
            .collect::<Result<_>>()?;
        rows.push(TrajectoryRow {
            t: vals[0],
            norm: vals[1],
            populations: vals[2..].to_vec(),
        });
    }
    Ok((labels, rows))
}

/// `# dimension`, `# time` header then `index label re im` per line.
pub fn write_state_dump<W: Write>(mut writer: W, spec: &HilbertSpec, state: &SimState<f64>) -> Result<()> {
    writeln!(writer, "# dimension {}", state.amplitudes.len())?;
    writeln!(writer, "# time {:e}", state.time)?;
    writeln!(writer, "# index label re im")?;
    for (i, z) in state.amplitudes.iter().enumerate() {
        writeln!(writer, "{i} {} {:.17e} {:.17e}", spec.label(i), z.re, z.im)?;
    }
    Ok(())
}

pub fn read_state_dump<R: Read>(reader: R) -> Result<SimState<f64>> {
    let mut dim = None;
    let mut time = 0.0;
    let mut amps: Vec<Option<Complex<f64>>> = Vec::new();
    let bad = |line: &str| Error::Parse(format!("malformed state line {line:?}"));
    for line in BufReader::new(reader).lines() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            let mut it = rest.split_whitespace();
            match (it.next(), it.next()) {
                (Some("dimension"), Some(v)) => {
                    let d: usize = v.parse().map_err(|_| bad(line))?;
                    dim = Some(d);
                    amps = vec![None; d];
                }
                (Some("time"), Some(v)) => time = v.parse().map_err(|_| bad(line))?,
                _ => {}
            }
            continue;
        }
        let d = dim.ok_or_else(|| Error::Parse("state dump lacks a dimension header".into()))?;
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() != 4 {
            return Err(bad(line));
        }
        let i: usize = f[0].parse().map_err(|_| bad(line))?;
        if i >= d {
            return Err(Error::Parse(format!("index {i} outside dimension {d}")));
        }
        let re: f64 = f[2].parse().map_err(|_| bad(line))?;
        let im: f64 = f[3].parse().map_err(|_| bad(line))?;
        amps[i] = Some(Complex::new(re, im));
    }
    let d = dim.ok_or_else(|| Error::Parse("state dump lacks a dimension header".into()))?;
    let amplitudes: Vec<Complex<f64>> = amps
        .into_iter()
        .enumerate()
        .map(|(i, a)| a.ok_or_else(|| Error::Parse(format!("amplitude {i} missing"))))
        .collect::<Result<_>>()?;
    debug_assert_eq!(amplitudes.len(), d);
    Ok(SimState {
        amplitudes: DVector::from_vec(amplitudes),
        time,
    })
}
