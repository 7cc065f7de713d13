//! Field-map export on an (x, z) grid.

use std::io::{Read, Write};

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::{field_of_layout, Conductor};
use crate::error::Result;

/// One grid point of a field map (SI units).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldMapRow {
    pub x: f64,
    pub z: f64,
    #[serde(rename = "Bx")]
    pub bx: f64,
    #[serde(rename = "Bz")]
    pub bz: f64,
    #[serde(rename = "dBx_dz")]
    pub dbx_dz: f64,
    #[serde(rename = "dBz_dx")]
    pub dbz_dx: f64,
}

/// Evaluates the layout on the outer product of `xs` and `zs` (x major).
pub fn field_map(conductors: &[Conductor<f64>], currents: &[f64], xs: &[f64], zs: &[f64]) -> Result<Vec<FieldMapRow>> {
    let mut rows = Vec::with_capacity(xs.len() * zs.len());
    for &x in xs {
        for &z in zs {
            let s = field_of_layout(conductors, currents, &Vector3::new(x, 0.0, z))?;
            rows.push(FieldMapRow {
                x,
                z,
                bx: s.bx(),
                bz: s.bz(),
                dbx_dz: s.dbx_dz(),
                dbz_dx: s.dbz_dx(),
            });
        }
    }
    Ok(rows)
}

pub fn write_field_map_csv<W: Write>(writer: W, rows: &[FieldMapRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_field_map_csv<R: Read>(reader: R) -> Result<Vec<FieldMapRow>> {
    let mut r = csv::Reader::from_reader(reader);
    let mut rows = Vec::new();
    for row in r.deserialize() {
        rows.push(row?);
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let c = [Conductor::strip("a", -10e-6, 10e-6).unwrap()];
        let rows = field_map(&c, &[1.0], &[20e-6, 30e-6], &[-5e-6, 0.0, 5e-6]).unwrap();
        assert_eq!(rows.len(), 6);
        let mut buf = Vec::new();
        write_field_map_csv(&mut buf, &rows).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("x,z,Bx,Bz,dBx_dz,dBz_dx\n"));
        assert_eq!(read_field_map_csv(buf.as_slice()).unwrap(), rows);
    }
}
