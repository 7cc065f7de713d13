use iongate::atomic::registry::SpeciesRegistry;
use iongate::atomic::{breit_rabi_levels, hyperfine_hamiltonian, transition_frequency, LevelLabel};
use proptest::prelude::*;

fn be9() -> iongate::IonSpecies {
    SpeciesRegistry::builtin().get("9Be+").unwrap().clone()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn level_energies_sum_to_trace(b in 0.0f64..0.05) {
        let s = be9();
        let levels = breit_rabi_levels(&s, b).unwrap();
        let h = hyperfine_hamiltonian(&s, b).unwrap();
        let sum: f64 = levels.iter().map(|l| l.energy).sum();
        prop_assert!((sum - h.trace()).abs() <= 1e-6 * h.iter().fold(0.0f64, |m, v| m.max(v.abs())));
        prop_assert_eq!(levels.len(), 8);
    }

    #[test]
    fn stretched_state_is_linear_in_field(b in 0.0f64..0.05) {
        // |F=2, mF=2⟩ = |mJ=1/2, mI=3/2⟩ is an exact eigenstate: E = 3A/4 + μB·B(gJ/2 + 3gI/2)/h.
        let s = be9();
        let levels = breit_rabi_levels(&s, b).unwrap();
        let l = levels.iter().find(|l| l.label == LevelLabel::new(2, 2)).unwrap();
        let c = iongate::PhysicalConstants::codata();
        let expected = 0.75 * s.hyperfine_a + c.mu_b * b * (s.g_j / 2.0 + 1.5 * s.g_i) / c.planck;
        prop_assert!((l.energy - expected).abs() < 1e-6 * expected.abs().max(1.0));
    }

    #[test]
    fn transition_frequency_is_antisymmetric(b in 1e-4f64..0.03) {
        let s = be9();
        let (a, c) = (LevelLabel::new(1, 1), LevelLabel::new(2, 0));
        let f1 = transition_frequency(&s, a, c, b).unwrap();
        let f2 = transition_frequency(&s, c, a, b).unwrap();
        prop_assert!((f1 + f2).abs() <= 1e-9 * f1.abs());
    }

    #[test]
    fn label_display_round_trips(f in 0u32..5, k in 0u32..9) {
        let mf = k as i32 % (2 * f as i32 + 1) - f as i32;
        let label = LevelLabel::new(f, mf);
        let back: LevelLabel = label.to_string().parse().unwrap();
        prop_assert_eq!(back, label);
    }
}

#[test]
fn every_builtin_species_has_a_full_manifold() {
    let reg = SpeciesRegistry::builtin();
    for name in reg.names() {
        let s = reg.get(name).unwrap();
        let levels = breit_rabi_levels(s, 1e-3).unwrap();
        assert_eq!(levels.len(), s.dimension().unwrap(), "{name}");
    }
}
