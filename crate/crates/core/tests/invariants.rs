//! Property-based invariants on randomized inputs: lifetime math, ledger
//! accounting, BOM round-trips, and allocator contracts.

mod common;

use common::*;
use gsekit_core::allocator::strategy;
use gsekit_core::bom::{load_bom_csv, material_demand, write_bom_csv, BomMatrix, Material};
use gsekit_core::survival::{build_cohort_ledger, WeibullParams};
use gsekit_core::{EquipmentClassId, YearSeries};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn weibull() -> impl Strategy<Value = WeibullParams> {
    (5.0..120.0f64, 0.8..8.0f64)
        .prop_map(|(alpha, beta)| WeibullParams::new(alpha, beta).unwrap())
}

proptest! {
    #[test]
    fn failure_probability_is_monotone_and_complements_survival(
        p in weibull(),
        t1 in 0.0..300.0f64,
        t2 in 0.0..300.0f64,
    ) {
        let (lo, hi) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
        prop_assert!(p.cumulative_failure(lo) <= p.cumulative_failure(hi) + 1e-15);
        prop_assert!((p.survival(t1) + p.cumulative_failure(t1) - 1.0).abs() <= 1e-15);
        let f = p.cumulative_failure(t1);
        prop_assert!((0.0..=1.0).contains(&f));
    }

    #[test]
    fn yearly_increments_telescope_up_to_the_age_cap(
        p in weibull(),
        horizon in 1u32..=200,
    ) {
        let sum: f64 = (1..=horizon).map(|a| p.annual_failure_increment(a)).sum();
        prop_assert!((sum - p.cumulative_failure(horizon as f64)).abs() <= 1e-12);
        // Beyond the cap a unit no longer generates replacement demand.
        prop_assert_eq!(p.annual_failure_increment(201), 0.0);
        prop_assert_eq!(p.annual_failure_increment(0), 0.0);
    }

    #[test]
    fn quantile_inverts_failure_probability(p in weibull(), q in 0.001..0.999f64) {
        let t = p.quantile(q).unwrap();
        prop_assert!((p.cumulative_failure(t) - q).abs() <= 1e-10);
    }

    #[test]
    fn ledger_totals_dominate_additions(
        p in weibull(),
        additions in proptest::collection::vec(0.0..1e4f64, 1..40),
    ) {
        let series = YearSeries::new(2000, additions);
        let ledger = build_cohort_ledger(&series, p).unwrap();
        for (year, added) in series.iter() {
            let total = ledger.total_installation(year).unwrap();
            prop_assert!(
                total >= added - 1e-9 * added.max(1.0),
                "{year}: total {total} below addition {added}"
            );
            prop_assert!(ledger.replacement(year).unwrap() >= -1e-9);
        }
    }

    #[test]
    fn ledger_scales_linearly(
        p in weibull(),
        additions in proptest::collection::vec(0.0..1e4f64, 1..25),
        scale in 0.1..50.0f64,
    ) {
        let len = additions.len() as i32;
        let base = build_cohort_ledger(&YearSeries::new(2000, additions.clone()), p).unwrap();
        let scaled_in: Vec<f64> = additions.iter().map(|a| a * scale).collect();
        let scaled = build_cohort_ledger(&YearSeries::new(2000, scaled_in), p).unwrap();
        for year in 2000..2000 + len {
            let want = base.total_installation(year).unwrap() * scale;
            let got = scaled.total_installation(year).unwrap();
            prop_assert!(
                (want - got).abs() <= 1e-9 * want.abs().max(1.0),
                "{year}: {got} vs scaled {want}"
            );
        }
    }

    #[test]
    fn bom_csv_round_trips(
        cells in proptest::collection::btree_map(
            (0..10usize, 0..8usize),
            0.0..5000.0f64,
            0..30,
        ),
    ) {
        let mut bom = BomMatrix::new();
        for ((mi, ci), value) in &cells {
            bom.set(Material::ALL[*mi], EquipmentClassId::ALL[*ci], *value).unwrap();
        }
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bom.csv");
        write_bom_csv(&bom, std::fs::File::create(&path).unwrap()).unwrap();
        let back = load_bom_csv(&path).unwrap();
        for material in Material::ALL {
            for class in EquipmentClassId::ALL {
                prop_assert_eq!(bom.get(material, class), back.get(material, class));
            }
        }
    }

    #[test]
    fn material_demand_is_homogeneous(
        cells in proptest::collection::btree_map(
            (0..10usize, 0..8usize),
            0.0..5000.0f64,
            1..30,
        ),
        amounts in proptest::collection::btree_map(0..8usize, 0.0..50.0f64, 1..8),
        scale in 0.0..10.0f64,
    ) {
        let mut bom = BomMatrix::new();
        for ((mi, ci), value) in &cells {
            bom.set(Material::ALL[*mi], EquipmentClassId::ALL[*ci], *value).unwrap();
        }
        let base: Vec<(EquipmentClassId, f64)> = amounts
            .iter()
            .map(|(ci, gva)| (EquipmentClassId::ALL[*ci], *gva))
            .collect();
        let scaled: Vec<(EquipmentClassId, f64)> =
            base.iter().map(|(c, gva)| (*c, gva * scale)).collect();
        let want = material_demand(base, &bom);
        let got = material_demand(scaled, &bom);
        for (material, kg) in &want {
            let scaled_kg = got.get(material).copied().unwrap_or(0.0);
            prop_assert!(
                (kg * scale - scaled_kg).abs() <= 1e-9 * (kg * scale).abs().max(1e-12),
                "{material}: {scaled_kg} vs {}",
                kg * scale
            );
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Both strategies certify, obey the per-solve contracts, agree on the
    /// bundle level, and return bit-identical answers when asked twice.
    #[test]
    fn random_solves_obey_contracts_and_are_deterministic(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let problem = random_problem(&mut rng, 2025, 4, 3);
        let mut bundles = Vec::new();
        for name in ["two-phase", "big-m"] {
            let solver = strategy(name).unwrap();
            let first = solver.solve(&problem).unwrap();
            assert_solution_contracts(&problem, &first);
            let second = solver.solve(&problem).unwrap();
            prop_assert_eq!(
                serde_json::to_string(&first).unwrap(),
                serde_json::to_string(&second).unwrap(),
                "{} answered differently on the same problem", name
            );
            bundles.push(first.bundle_level);
        }
        let rel = (bundles[0] - bundles[1]).abs() / bundles[0].abs().max(1e-9);
        prop_assert!(
            rel <= 1e-6,
            "bundle disagreement: two-phase {} vs big-m {}",
            bundles[0],
            bundles[1]
        );
    }
}
