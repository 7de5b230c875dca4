//! End-to-end runs on the bundled scenarios: output shape, determinism,
//! conservation, and the orderings the scenario family is built around.

mod common;

use common::*;
use gsekit_core::scenario::{compare_scenarios, run_scenario};
use gsekit_core::EquipmentClassId;
use std::fs;

const OUTPUT_FILES: [&str; 6] = [
    "manifest.json",
    "summary.json",
    "demand_schedule.csv",
    "gap_report.csv",
    "usage_ratios.csv",
    "sourcing_shares.csv",
];

#[test]
fn baseline_run_writes_the_full_output_set() {
    let (dir, output) = run_fixture("baseline_opt");
    for name in OUTPUT_FILES {
        let path = dir.path().join(name);
        assert!(path.is_file(), "{name} was not written");
        assert!(fs::metadata(&path).unwrap().len() > 0, "{name} is empty");
    }
    let years: Vec<i32> = output.schedule.years().collect();
    assert_eq!(years, (2025..=2030).collect::<Vec<_>>());
    assert_eq!(output.schedule.classes().count(), 8);
    assert_eq!(output.solutions.len(), years.len());
    assert_eq!(output.summary.years.len(), years.len());
    for summary in &output.summary.years {
        assert_eq!(summary.classes.len(), 8, "{}: class coverage", summary.year);
        assert!(
            !summary.materials.is_empty(),
            "{}: no material rows",
            summary.year
        );
    }
}

#[test]
fn rerunning_into_the_same_directory_reproduces_every_byte() {
    let config = fixture_config("baseline_opt");
    let dir = tempfile::tempdir().unwrap();
    run_scenario(&config, dir.path()).unwrap();
    let first: Vec<Vec<u8>> = OUTPUT_FILES
        .iter()
        .map(|name| fs::read(dir.path().join(name)).unwrap())
        .collect();
    run_scenario(&config, dir.path()).unwrap();
    for (name, before) in OUTPUT_FILES.iter().zip(&first) {
        let after = fs::read(dir.path().join(name)).unwrap();
        assert!(*before == after, "{name} changed across identical reruns");
    }
}

#[test]
fn trade_disruption_changes_availability_not_demand() {
    let (ref_dir, reference) = run_fixture("high_opt");
    let (trade_dir, trade) = run_fixture("high_opt_trade");
    let ref_schedule = fs::read(ref_dir.path().join("demand_schedule.csv")).unwrap();
    let trade_schedule = fs::read(trade_dir.path().join("demand_schedule.csv")).unwrap();
    assert!(
        ref_schedule == trade_schedule,
        "the trade variant altered the demand schedule"
    );
    // Availability must actually shrink somewhere, or the variant tests
    // nothing.
    let shrank = reference
        .solutions
        .iter()
        .zip(&trade.solutions)
        .any(|(r, t)| {
            r.usage
                .iter()
                .any(|(m, u)| t.usage[m].available_kg < u.available_kg - 1e-6)
        });
    assert!(shrank, "restricted imports never reduced availability");
}

#[test]
fn production_and_unmet_exhaust_scheduled_demand() {
    for name in ["baseline_opt", "high_opt", "baseline_pess"] {
        let (_dir, output) = run_fixture(name);
        for (solution, year) in output.solutions.iter().zip(&output.summary.years) {
            assert_eq!(solution.year, year.year);
            let scheduled = output.schedule.total_demand(year.year);
            assert!(
                (year.total_demand_gva - scheduled).abs() <= 1e-9,
                "{name}/{}: summary demand {} vs schedule {scheduled}",
                year.year,
                year.total_demand_gva
            );
            assert!(
                (year.total_produced_gva + year.total_unmet_gva - scheduled).abs() <= 1e-9,
                "{name}/{}: produced {} + unmet {} drifts from demand {scheduled}",
                year.year,
                year.total_produced_gva,
                year.total_unmet_gva
            );
            for (class, outcome) in &year.classes {
                let entry = output.schedule.entry(*class, year.year).unwrap();
                assert!(
                    (outcome.produced_gva + outcome.unmet_gva - entry.total()).abs() <= 1e-9,
                    "{name}/{}/{class}: outcome drifts from scheduled demand",
                    year.year
                );
            }
        }
    }
}

#[test]
fn comparing_a_run_with_itself_reports_zero_deltas() {
    let (_dir, output) = run_fixture("baseline_opt");
    let deltas = compare_scenarios(&output.summary, &output.summary).unwrap();
    assert_eq!(deltas.len(), output.summary.years.len());
    for delta in deltas {
        assert_eq!(delta.total_unmet_gva, 0.0, "{}", delta.year);
        assert_eq!(delta.unmet_share_pp, 0.0, "{}", delta.year);
        assert_eq!(delta.transformer_unmet_gva, 0.0, "{}", delta.year);
        assert_eq!(delta.other_unmet_gva, 0.0, "{}", delta.year);
        assert!(delta.usage_ratio.values().all(|v| *v == 0.0), "{}", delta.year);
    }
}

/// Faster growth and shorter lifetimes can only widen the gap: the
/// high-growth run never shows less unmet demand than the baseline, and
/// the pessimistic-lifetime baseline never less than the optimistic one.
#[test]
fn harsher_scenarios_never_show_less_unmet_demand() {
    let (_a, baseline) = run_fixture("baseline_opt");
    let (_b, high) = run_fixture("high_opt");
    let (_c, pessimistic) = run_fixture("baseline_pess");
    for (base_year, high_year) in baseline.summary.years.iter().zip(&high.summary.years) {
        assert!(
            high_year.total_unmet_gva >= base_year.total_unmet_gva - 1e-9,
            "{}: high-growth unmet {} below baseline {}",
            base_year.year,
            high_year.total_unmet_gva,
            base_year.total_unmet_gva
        );
    }
    for (opt_year, pess_year) in baseline.summary.years.iter().zip(&pessimistic.summary.years)
    {
        assert!(
            pess_year.total_unmet_gva >= opt_year.total_unmet_gva - 1e-9,
            "{}: pessimistic unmet {} below optimistic {}",
            opt_year.year,
            pess_year.total_unmet_gva,
            opt_year.total_unmet_gva
        );
    }
}

/// The transformer is the reference class: whenever any class goes short,
/// the transformer's normalized production sets the ceiling everyone else
/// sits under.
#[test]
fn transformer_sets_the_normalized_ceiling() {
    let (_dir, output) = run_fixture("high_opt");
    for solution in &output.solutions {
        let v_ref = solution.normalized_production[&EquipmentClassId::Transformer];
        for (class, v) in &solution.normalized_production {
            assert!(
                *v <= v_ref + 1e-9,
                "{}/{class}: normalized production {v} above the transformer's {v_ref}",
                solution.year
            );
        }
    }
}
