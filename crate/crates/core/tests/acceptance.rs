//! Reproduction criteria, one test each. Every test prints a single
//! `[PASS]`/`[FAIL]` line with the numbers behind the verdict.

use std::sync::OnceLock;

use iongate::acceptance::{self, CriterionOutcome};
use iongate::scenario::Scenario;

fn scenario() -> &'static Scenario {
    static S: OnceLock<Scenario> = OnceLock::new();
    S.get_or_init(|| acceptance::default_scenario().expect("default scenario builds"))
}

fn check(f: fn(&Scenario) -> iongate::Result<CriterionOutcome>) -> CriterionOutcome {
    let o = f(scenario()).expect("criterion evaluates");
    println!("{o}");
    o
}

#[test]
fn criterion_01_ground_state_extent() {
    assert!(check(acceptance::criterion_1).passed);
}

#[test]
fn criterion_02_clock_point() {
    assert!(check(acceptance::criterion_2).passed);
}

#[test]
fn criterion_03_carrier_pi_time() {
    assert!(check(acceptance::criterion_3).passed);
}

#[test]
fn criterion_04_phiphi_current() {
    assert!(check(acceptance::criterion_4).passed);
}

#[test]
fn criterion_05_zz_current() {
    assert!(check(acceptance::criterion_5).passed);
}

#[test]
fn criterion_06_residual_phases() {
    assert!(check(acceptance::criterion_6).passed);
}

#[test]
fn criterion_07_electric_equivalence() {
    assert!(check(acceptance::criterion_7).passed);
}

#[test]
fn criterion_08_five_wire_design() {
    assert!(check(acceptance::criterion_8).passed);
}

#[test]
fn criterion_09_oracle_equivalence() {
    assert!(check(acceptance::criterion_9).passed);
}

#[test]
fn criterion_10_motional_insensitivity() {
    assert!(check(acceptance::criterion_10).passed);
}

#[test]
fn criterion_11_invariants() {
    assert!(check(acceptance::criterion_11).passed);
}
