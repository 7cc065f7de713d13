use std::f64::consts::PI;

use iongate::gates::{basis_change, kron2, sigma_phiphi_gate, sigma_zz_gate, ModeRabi, RabiSet};
use proptest::prelude::*;

fn rabi(z: [f64; 2], x: [f64; 2]) -> RabiSet<f64> {
    RabiSet {
        current: 1.0,
        omega0: 2.0 * PI * 1.2e9,
        omega_x: 0.0,
        omega_z: 0.0,
        modes: vec![ModeRabi { omega: 2.0 * PI * 5e6, x: x.to_vec(), z: z.to_vec() }],
        flags: vec![],
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn single_loop_gates_are_maximally_entangling(om in 1e3f64..1e6, sign in prop::bool::ANY, pb in -3.0f64..3.0, pr in -3.0f64..3.0) {
        let s = if sign { 1.0 } else { -1.0 };
        let r = rabi([om, s * om], [om, s * om]);
        for g in [sigma_zz_gate(&r, 0, 4.0 * om).unwrap(), sigma_phiphi_gate(&r, 0, 4.0 * om, pb, pr, (1.0, 1.0)).unwrap()] {
            prop_assert!(g.unitarity_defect() <= 1e-12);
            prop_assert!((g.differential_phase().abs() - PI / 2.0).abs() <= 1e-10);
            prop_assert!(g.loop_closure() < 1e-10);
        }
    }

    #[test]
    fn phiphi_is_basis_rotated_zz(a in -1e5f64..1e5, b in -1e5f64..1e5, delta in 1e5f64..1e6, pb in -3.0f64..3.0, pr in -3.0f64..3.0) {
        let r = rabi([a, b], [a, b]);
        let zz = sigma_zz_gate(&r, 0, delta).unwrap();
        let ms = sigma_phiphi_gate(&r, 0, delta, pb, pr, (2.0, 2.0)).unwrap();
        let v = basis_change((pb + pr) / 2.0);
        let vv = kron2(&v, &v);
        let diff = ms.propagator - vv * zz.propagator * vv;
        prop_assert!(diff.iter().all(|z| z.norm() <= 1e-12));
    }
}
