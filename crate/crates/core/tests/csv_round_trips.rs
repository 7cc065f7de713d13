use iongate::chain::{mode_rows, normal_modes, read_modes_csv, write_modes_csv, Axis, ChainConfig};
use iongate::fields::{design_five_wire, field_map, read_field_map_csv, write_field_map_csv};

#[test]
fn modes_csv_round_trips() {
    let wy = 2.0 * std::f64::consts::PI * 1e6;
    let cfg = ChainConfig::new(3, 1.5e-26, wy, 5.0 * wy, 5.5 * wy).unwrap();
    let rows = mode_rows(&normal_modes(&cfg, Axis::Z).unwrap());
    let mut buf = Vec::new();
    write_modes_csv(&mut buf, &rows).unwrap();
    let text = String::from_utf8(buf.clone()).unwrap();
    assert!(text.starts_with("axis,j,omega_j_Hz,q0_j_m,b_1,b_2,b_3"));
    assert_eq!(read_modes_csv(buf.as_slice()).unwrap(), rows);
}

#[test]
fn field_map_csv_round_trips_and_is_deterministic() {
    let d = design_five_wire(30e-6).unwrap();
    let xs: Vec<f64> = (1..=5).map(|k| k as f64 * 12e-6).collect();
    let zs: Vec<f64> = (-3..=3).map(|k| k as f64 * 10e-6).collect();
    let rows = field_map(&d.conductors, &d.gate_currents, &xs, &zs).unwrap();
    let mut a = Vec::new();
    let mut b = Vec::new();
    write_field_map_csv(&mut a, &rows).unwrap();
    write_field_map_csv(&mut b, &field_map(&d.conductors, &d.gate_currents, &xs, &zs).unwrap()).unwrap();
    assert_eq!(a, b);
    assert_eq!(read_field_map_csv(a.as_slice()).unwrap(), rows);
}
