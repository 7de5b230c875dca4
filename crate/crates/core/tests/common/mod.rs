//! Helpers shared by the integration suites: bundled-fixture plumbing, a
//! per-unit renewal Monte Carlo, a grid-enumeration oracle for the yearly
//! allocation LP, and seeded random problem generation.
#![allow(dead_code)]

use gsekit_core::allocator::{
    AllocationProblem, AllocationSolution, PriorityWeights, TIE_BREAK_EPS,
};
use gsekit_core::bom::{BomMatrix, Material};
use gsekit_core::scenario::{run_scenario, RunConfig, RunOutput};
use gsekit_core::survival::WeibullParams;
use gsekit_core::EquipmentClassId;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

pub fn fixture_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/paper_params")
}

pub fn fixture_config(name: &str) -> RunConfig {
    let path = fixture_root().join("scenarios").join(format!("{name}.json"));
    RunConfig::load(&path).unwrap_or_else(|e| panic!("fixture config {name}: {e}"))
}

/// Runs a bundled scenario into a fresh temp dir. The guard keeps the
/// output directory alive for as long as the caller holds it.
pub fn run_fixture(name: &str) -> (tempfile::TempDir, RunOutput) {
    let config = fixture_config(name);
    let dir = tempfile::tempdir().expect("tempdir");
    let output =
        run_scenario(&config, dir.path()).unwrap_or_else(|e| panic!("run {name}: {e}"));
    (dir, output)
}

/// Renewal chains at yearly resolution: `units_per_cohort` independent
/// units enter in each of `years` consecutive years; a unit entering in
/// year `k` fails during year `k + ceil(L)` for a continuous Weibull
/// lifetime `L` and is replaced in the failure year, the replacement
/// drawing its own lifetime. `ceil` makes the per-age failure probability
/// exactly `F(a) - F(a-1)`, the increment the cohort ledger convolves with.
/// Returns total entries (new + replacements) per year.
pub fn simulate_renewal(
    params: WeibullParams,
    years: usize,
    units_per_cohort: usize,
    seed: u64,
) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (alpha, beta) = (params.alpha(), params.beta());
    let mut totals = vec![0.0; years];
    for cohort in 0..years {
        totals[cohort] += units_per_cohort as f64;
        for _ in 0..units_per_cohort {
            let mut year = cohort;
            loop {
                let u: f64 = rng.random_range(0.0..1.0);
                let life = alpha * (-(1.0 - u).ln()).powf(1.0 / beta);
                year += (life.ceil() as usize).max(1);
                if year >= years {
                    break;
                }
                totals[year] += 1.0;
            }
        }
    }
    totals
}

/// A brute-force answer for one allocation problem: production per class
/// in priority order, plus the bundle level.
pub struct GridAnswer {
    pub classes: Vec<EquipmentClassId>,
    pub produced: Vec<f64>,
    pub bundle: f64,
}

/// Lexicographic grid enumeration, independent of the LP code path. Each
/// round sweeps the current box twice: once for the best bundle level this
/// grid can reach, once for the best effective-weighted normalized
/// production among points within one grid granularity of that level. The
/// box then shrinks around the weighted pick and the sweep repeats at
/// finer resolution, so the bundle floor tightens with the grid and the
/// kept set is never empty, while every candidate is checked against the
/// raw constraint set.
pub fn grid_solve(problem: &AllocationProblem, steps: usize, rounds: usize) -> GridAnswer {
    let classes: Vec<EquipmentClassId> = EquipmentClassId::ALL
        .into_iter()
        .filter(|c| problem.demand_gva.contains_key(c))
        .collect();
    let n = classes.len();
    let demand: Vec<f64> = classes.iter().map(|c| problem.demand_gva[c]).collect();
    let rho: Vec<f64> = classes.iter().map(|c| problem.ratios[c]).collect();
    let weight: Vec<f64> = classes
        .iter()
        .enumerate()
        .map(|(pos, c)| {
            problem.weights.layer_weight(c.layer()) + TIE_BREAK_EPS * (n - pos) as f64
        })
        .collect();
    let ref_idx = classes
        .iter()
        .position(|c| *c == problem.reference_class)
        .expect("reference class is modeled");
    // Availability in tonnes, only rows somebody consumes.
    let materials: Vec<(f64, Vec<f64>)> = Material::ALL
        .iter()
        .filter_map(|m| {
            let b: Vec<f64> = classes.iter().map(|c| problem.bom.get(*m, *c)).collect();
            b.iter().any(|x| *x > 0.0).then(|| {
                let kg = problem.availability_kg.get(m).copied().unwrap_or(0.0);
                (kg / 1000.0, b)
            })
        })
        .collect();

    let feasible = |p: &[f64]| {
        let v_ref = p[ref_idx] / rho[ref_idx];
        for k in 0..n {
            if p[k] / rho[k] > v_ref + 1e-9 {
                return false;
            }
        }
        for (avail, b) in &materials {
            let used: f64 = (0..n).map(|k| b[k] * p[k]).sum();
            if used > avail + 1e-9 * avail.max(1.0) {
                return false;
            }
        }
        true
    };
    let bundle_of = |p: &[f64]| {
        (0..n)
            .filter(|k| demand[*k] > 0.0)
            .map(|k| p[k] / rho[k])
            .fold(f64::INFINITY, f64::min)
    };
    let weighted = |p: &[f64]| (0..n).map(|k| weight[k] * p[k] / rho[k]).sum::<f64>();

    // Enumerates the box and returns the best point under `score`, keeping
    // only points passing `keep`.
    let enumerate = |lo: &[f64],
                     hi: &[f64],
                     keep: &dyn Fn(&[f64]) -> bool,
                     score: &dyn Fn(&[f64]) -> f64|
     -> Option<(Vec<f64>, f64)> {
        let mut idx = vec![0usize; n];
        let mut point = vec![0.0; n];
        let mut best: Option<(Vec<f64>, f64)> = None;
        loop {
            for k in 0..n {
                let t = idx[k] as f64 / steps as f64;
                point[k] = (lo[k] + t * (hi[k] - lo[k])).min(demand[k]);
            }
            if feasible(&point) && keep(&point) {
                let s = score(&point);
                if best.as_ref().is_none_or(|(_, b)| s > *b) {
                    best = Some((point.clone(), s));
                }
            }
            // Odometer over the n-dimensional grid.
            let mut k = 0;
            loop {
                if k == n {
                    return best;
                }
                idx[k] += 1;
                if idx[k] <= steps {
                    break;
                }
                idx[k] = 0;
                k += 1;
            }
        }
    };
    // A generous margin: binding material rows can displace the weighted
    // pick from the true vertex by several grid spacings, and the next box
    // must still contain that vertex.
    let shrink = |center: &[f64], lo: &mut [f64], hi: &mut [f64]| {
        for k in 0..n {
            let margin = 10.0 * (hi[k] - lo[k]) / steps as f64;
            lo[k] = (center[k] - margin).max(0.0);
            hi[k] = (center[k] + margin).min(demand[k]);
        }
    };

    let (mut lo, mut hi) = (vec![0.0; n], demand.clone());
    let mut bundle = f64::NEG_INFINITY;
    let mut produced = vec![0.0; n];
    for _ in 0..rounds {
        let granularity = (0..n)
            .map(|k| (hi[k] - lo[k]) / steps as f64 / rho[k])
            .fold(0.0f64, f64::max);
        let (_, s_round) = enumerate(&lo, &hi, &|_| true, &bundle_of)
            .expect("the origin is always feasible");
        let floor = s_round - granularity - 1e-12;
        let (point, _) = enumerate(&lo, &hi, &|p| bundle_of(p) >= floor, &weighted)
            .expect("the bundle maximizer passes its own floor");
        bundle = bundle.max(s_round);
        shrink(&point, &mut lo, &mut hi);
        produced = point;
    }
    GridAnswer {
        classes,
        produced,
        bundle,
    }
}

/// A seeded random allocation problem with at most `max_classes` classes
/// and `max_materials` materials, sized so some runs bind and some do not.
/// Intensity and ratio spreads stay within the modeled domain's order of
/// magnitude: wilder spreads make the grid oracle's material rows amplify
/// one grid spacing into many, and push the LP outside the conditioning
/// its certification tolerance assumes.
pub fn random_problem(
    rng: &mut ChaCha8Rng,
    year: i32,
    max_classes: usize,
    max_materials: usize,
) -> AllocationProblem {
    let n_classes = rng.random_range(1..=max_classes);
    let n_materials = rng.random_range(1..=max_materials);
    let mut pool = EquipmentClassId::ALL.to_vec();
    let mut classes = Vec::new();
    for _ in 0..n_classes {
        classes.push(pool.remove(rng.random_range(0..pool.len())));
    }
    classes.sort_by_key(|c| c.priority_position());
    let mut mat_pool = Material::ALL.to_vec();
    let mut materials = Vec::new();
    for _ in 0..n_materials {
        materials.push(mat_pool.remove(rng.random_range(0..mat_pool.len())));
    }

    let mut demand_gva = BTreeMap::new();
    let mut ratios = BTreeMap::new();
    let mut bom = BomMatrix::new();
    for class in &classes {
        demand_gva.insert(*class, rng.random_range(0.2..6.0));
        ratios.insert(*class, rng.random_range(0.5..3.0));
        for material in &materials {
            // Occasional zero keeps "class does not use material" covered.
            let b = if rng.random_range(0..5) == 0 {
                0.0
            } else {
                rng.random_range(40.0..240.0)
            };
            bom.set(*material, *class, b).unwrap();
        }
    }
    // Make sure every chosen material is consumed by someone.
    for material in &materials {
        if classes.iter().all(|c| bom.get(*material, *c) == 0.0) {
            let class = classes[rng.random_range(0..classes.len())];
            bom.set(*material, class, rng.random_range(40.0..240.0))
                .unwrap();
        }
    }
    let mut availability_kg = BTreeMap::new();
    for material in &materials {
        let full_need_kg: f64 = classes
            .iter()
            .map(|c| bom.get(*material, *c) * demand_gva[c] * 1000.0)
            .sum();
        let fraction = rng.random_range(0.25..1.2);
        availability_kg.insert(*material, full_need_kg * fraction);
    }
    AllocationProblem {
        year,
        availability_kg,
        demand_gva,
        bom,
        ratios,
        weights: PriorityWeights::default(),
        reference_class: classes[0],
    }
}

/// The per-solve feasibility contracts every reported solution must obey.
pub fn assert_solution_contracts(problem: &AllocationProblem, sol: &AllocationSolution) {
    let year = problem.year;
    for (class, demand) in &problem.demand_gva {
        let p = sol.deployed_gva[class];
        let u = sol.unmet_gva[class];
        assert!(
            (p + u - demand).abs() <= 1e-9,
            "{year}/{class}: P + U = {} drifts from demand {demand}",
            p + u
        );
        assert!(p >= 0.0 && u >= 0.0, "{year}/{class}: P={p} U={u}");
    }
    for (material, usage) in &sol.usage {
        assert!(
            usage.ratio <= 1.0 + 1e-9,
            "{year}/{material}: usage ratio {} exceeds availability",
            usage.ratio
        );
        if usage.unavailable {
            assert!(
                usage.consumed_kg <= 1e-6,
                "{year}/{material}: consumed {} kg of an unavailable material",
                usage.consumed_kg
            );
        }
    }
    let min_active_v = problem
        .demand_gva
        .iter()
        .filter(|(_, d)| **d > 0.0)
        .map(|(c, _)| sol.normalized_production[c])
        .fold(f64::INFINITY, f64::min);
    if min_active_v.is_finite() {
        assert!(
            sol.bundle_level <= min_active_v + 1e-9,
            "{year}: bundle {} exceeds weakest active class {min_active_v}",
            sol.bundle_level
        );
    }
    let v_ref = sol.normalized_production[&problem.reference_class];
    for (class, v) in &sol.normalized_production {
        assert!(
            *v <= v_ref + 1e-9,
            "{year}/{class}: normalized production {v} exceeds reference {v_ref}"
        );
    }
}
