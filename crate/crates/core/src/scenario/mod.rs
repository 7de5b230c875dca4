//! End-to-end scenario runs: wiring survival → demand → supply-use
//! tracing → allocation, and writing the result tables.
//!
//! A run is driven by one JSON config (see [`RunConfig`]) and produces in
//! its output directory:
//!
//! * `demand_schedule.csv` — projected new/replacement demand per class
//! * `gap_report.csv` — produced/unmet capacity per class, group, total
//! * `usage_ratios.csv` — per-material usage ratios and binding flags
//! * `sourcing_shares.csv` — regional composition of material supply
//! * `summary.json` — aggregate metrics per year (input to `compare`)
//! * `manifest.json` — input digests and the full parameter snapshot
//!
//! Runs are deterministic: identical inputs produce byte-identical
//! outputs, and the manifest carries no timestamps.

pub mod config;
pub mod report;

pub use config::{DataPaths, RunConfig, RunParams, YearRange};
pub use report::{
    ClassOutcome, MaterialOutcome, ParameterSnapshot, RunManifest, ScenarioSummary, SourcingRow,
    YearSummary,
};

use crate::allocator::{self, gap_report, AllocationProblem, AllocationSolution};
use crate::bom::{default_bom, load_bom_csv, Material};
use crate::classes::EquipmentClassId;
use crate::demand::{default_ratios, project_demand, write_schedule_csv, DemandSchedule};
use crate::mrsut::{
    apply_trade_disruption, gse_final_demand, load_supply_use, neumann_layers,
    trace_material_sourcing, Concordance, MassFactors,
};
use crate::survival::{default_lifetimes, load_history_csv, load_lifetimes_csv, LifetimeCase};
use ndarray::Array1;
use sha2::{Digest, Sha256};
use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::time::Instant;
use thiserror::Error;

/// Pipeline failure, classified by which process exit code it maps to.
#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("solver error: {0}")]
    Solver(String),
}

impl ScenarioError {
    /// Exit-code contract: 2 = config, 3 = data, 4 = solver.
    pub fn exit_code(&self) -> i32 {
        match self {
            ScenarioError::Config(_) => 2,
            ScenarioError::Data(_) => 3,
            ScenarioError::Solver(_) => 4,
        }
    }
}

fn data_err<E: std::fmt::Display>(e: E) -> ScenarioError {
    ScenarioError::Data(e.to_string())
}

/// Everything a run produced, in memory; the same content lands in the
/// output directory.
#[derive(Debug)]
pub struct RunOutput {
    pub manifest: RunManifest,
    pub summary: ScenarioSummary,
    pub schedule: DemandSchedule,
    pub solutions: Vec<AllocationSolution>,
    pub sourcing: Vec<SourcingRow>,
    pub out_dir: PathBuf,
}

/// SHA-256 of a file's bytes, hex-encoded.
pub fn sha256_file(path: &Path) -> Result<String, ScenarioError> {
    let bytes = std::fs::read(path)
        .map_err(|e| ScenarioError::Data(format!("cannot read {}: {e}", path.display())))?;
    let mut hasher = Sha256::new();
    hasher.update(&bytes);
    Ok(hasher
        .finalize()
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect())
}

fn load_parent_demand(path: &Path) -> Result<BTreeMap<i32, f64>, ScenarioError> {
    #[derive(serde::Deserialize)]
    struct Row {
        year: i32,
        value: f64,
    }
    let display = path.display().to_string();
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| ScenarioError::Data(format!("cannot open {display}: {e}")))?;
    let mut out = BTreeMap::new();
    for (i, row) in reader.deserialize::<Row>().enumerate() {
        let row = row.map_err(|e| {
            ScenarioError::Data(format!("{display} row {}: {e}", i + 2))
        })?;
        if !row.value.is_finite() || row.value < 0.0 {
            return Err(ScenarioError::Data(format!(
                "{display} row {}: value must be nonnegative and finite, got {}",
                i + 2,
                row.value
            )));
        }
        if out.insert(row.year, row.value).is_some() {
            return Err(ScenarioError::Data(format!(
                "{display}: duplicate year {}",
                row.year
            )));
        }
    }
    if out.is_empty() {
        return Err(ScenarioError::Data(format!("{display}: no demand rows")));
    }
    Ok(out)
}

fn lifetime_case_name(case: LifetimeCase) -> &'static str {
    match case {
        LifetimeCase::Pessimistic => "pessimistic",
        LifetimeCase::Optimistic => "optimistic",
    }
}

/// The pipeline up to (but excluding) the solves: loaded inputs, the
/// demand schedule, sourcing rows and one allocation problem per year.
/// [`run_scenario`] consumes this; `dump-lp` serializes the problems
/// instead of solving them.
#[derive(Debug)]
pub struct PreparedRun {
    pub schedule: DemandSchedule,
    pub problems: Vec<AllocationProblem>,
    pub sourcing: Vec<SourcingRow>,
    pub input_digests: BTreeMap<String, String>,
    pub lifetimes: crate::survival::LifetimeTable,
    pub bom: crate::bom::BomMatrix,
    pub ratios: BTreeMap<EquipmentClassId, f64>,
}

/// Loads every input, projects demand, traces material sourcing and
/// assembles the yearly allocation problems — everything deterministic
/// that happens before the solver runs.
pub fn prepare_run(config: &RunConfig) -> Result<PreparedRun, ScenarioError> {
    config.validate()?;
    let mut digests = BTreeMap::new();
    let mut record = |name: &str, path: &Path| -> Result<(), ScenarioError> {
        digests.insert(name.to_string(), sha256_file(path)?);
        Ok(())
    };

    // Stage 1: histories, lifetimes, intensities, demand projection.
    let stage = Instant::now();
    record("history", &config.data.history)?;
    let history = load_history_csv(&config.data.history).map_err(data_err)?;
    let lifetimes = match &config.data.lifetimes {
        Some(path) => {
            record("lifetimes", path)?;
            load_lifetimes_csv(path).map_err(data_err)?
        }
        None => default_lifetimes(),
    };
    let bom = match &config.data.bom {
        Some(path) => {
            record("bom", path)?;
            load_bom_csv(path).map_err(data_err)?
        }
        None => default_bom(),
    };
    let ratios = default_ratios();
    let schedule = project_demand(
        &config.scenario,
        &history,
        &lifetimes,
        &ratios,
        (config.years.start, config.years.end),
    )
    .map_err(data_err)?;
    log::info!(
        "stage=demand scenario={} years={} classes={} elapsed_ms={}",
        config.scenario.name,
        config.years.len(),
        schedule.classes().count(),
        stage.elapsed().as_millis()
    );

    // Stage 2: supply-use system and layered requirements.
    let stage = Instant::now();
    record("use", &config.data.use_table())?;
    record("supply", &config.data.supply_table())?;
    record("axes", &config.data.axes())?;
    record("concordance", &config.data.concordance())?;
    record("mass_factors", &config.data.mass_factors())?;
    record("parent_demand", &config.data.parent_demand)?;
    let system = load_supply_use(
        &config.data.use_table(),
        &config.data.supply_table(),
        &config.data.axes(),
    )
    .map_err(data_err)?;
    let concordance = Concordance::load(&config.data.concordance()).map_err(data_err)?;
    concordance
        .validate_against(system.axes())
        .map_err(data_err)?;
    let factors = MassFactors::load(&config.data.mass_factors()).map_err(data_err)?;
    let params = &config.params;
    let parent_rows: Vec<usize> = system
        .row_labels()
        .iter()
        .enumerate()
        .filter(|(_, (region, product))| {
            *region == params.demand_region && *product == params.parent_product
        })
        .map(|(i, _)| i)
        .collect();
    if parent_rows.is_empty() {
        return Err(ScenarioError::Config(format!(
            "demand_region '{}' with parent_product '{}' does not exist in the supply-use axes",
            params.demand_region, params.parent_product
        )));
    }
    if config.scenario.trade_disruption {
        for region in &params.restricted_regions {
            if !system.axes().regions.contains(region) {
                return Err(ScenarioError::Config(format!(
                    "restricted region '{region}' does not exist in the supply-use axes"
                )));
            }
        }
    }
    let coefficients = system.ita_coefficients();
    let layers = neumann_layers(&coefficients, params.neumann_max_layers, params.neumann_tol)
        .map_err(data_err)?;
    let parent_demand = load_parent_demand(&config.data.parent_demand)?;
    for year in config.years.iter() {
        if !parent_demand.contains_key(&year) {
            return Err(ScenarioError::Data(format!(
                "parent demand series has no value for simulated year {year}"
            )));
        }
    }
    log::info!(
        "stage=mrsut rows={} layers={} spectral_radius={:.6} elapsed_ms={}",
        system.n_rows(),
        layers.layers_used(),
        layers.spectral_radius(),
        stage.elapsed().as_millis()
    );

    // Stage 3: per-year sourcing and problem assembly.
    let stage = Instant::now();
    let restricted: BTreeSet<String> = params.restricted_regions.iter().cloned().collect();
    let mut problems = Vec::with_capacity(config.years.len());
    let mut sourcing_rows = Vec::new();
    for year in config.years.iter() {
        let mut final_demand = Array1::zeros(system.n_rows());
        for &row in &parent_rows {
            final_demand[row] = parent_demand[&year];
        }
        let scaled = gse_final_demand(&final_demand, &parent_rows, params.phi).map_err(data_err)?;
        let base =
            trace_material_sourcing(&system, &layers, &scaled, &concordance, &factors)
                .map_err(data_err)?;
        let sourcing = if config.scenario.trade_disruption {
            apply_trade_disruption(&base, &restricted, params.trade_cut).map_err(data_err)?
        } else {
            base
        };
        for material in sourcing.materials().collect::<Vec<_>>() {
            let shares = sourcing.shares(material);
            if let Some(masses) = sourcing.regional_mass(material) {
                for (region, mass) in masses {
                    sourcing_rows.push(SourcingRow {
                        material,
                        year,
                        region: region.clone(),
                        mass_kg: *mass,
                        share: shares.get(region).copied().unwrap_or(0.0),
                    });
                }
            }
        }
        problems.push(AllocationProblem {
            year,
            availability_kg: sourcing.availability(),
            demand_gva: schedule.demand_map(year),
            bom: bom.clone(),
            ratios: ratios.clone(),
            weights: params.weights,
            reference_class: EquipmentClassId::Transformer,
        });
    }
    log::info!(
        "stage=assemble years={} elapsed_ms={}",
        problems.len(),
        stage.elapsed().as_millis()
    );
    Ok(PreparedRun {
        schedule,
        problems,
        sourcing: sourcing_rows,
        input_digests: digests,
        lifetimes,
        bom,
        ratios,
    })
}

/// Runs the full pipeline for one scenario and writes all outputs into
/// `out_dir` (created if needed). Rerunning into the same directory with
/// identical inputs reproduces every file byte for byte; reusing the
/// directory for a *different* scenario is refused.
pub fn run_scenario(config: &RunConfig, out_dir: &Path) -> Result<RunOutput, ScenarioError> {
    config.validate()?;
    let manifest_path = out_dir.join("manifest.json");
    if manifest_path.exists() {
        #[derive(serde::Deserialize)]
        struct Peek {
            scenario: String,
        }
        let text = std::fs::read_to_string(&manifest_path).map_err(data_err)?;
        let peek: Peek = serde_json::from_str(&text).map_err(|e| {
            ScenarioError::Config(format!(
                "output dir holds an unreadable manifest {}: {e}",
                manifest_path.display()
            ))
        })?;
        if peek.scenario != config.scenario.name {
            return Err(ScenarioError::Config(format!(
                "output dir {} already holds scenario '{}'; refusing to mix in '{}'",
                out_dir.display(),
                peek.scenario,
                config.scenario.name
            )));
        }
    }
    let prepared = prepare_run(config)?;
    let PreparedRun {
        schedule,
        problems,
        sourcing: sourcing_rows,
        input_digests: digests,
        lifetimes,
        bom,
        ratios,
    } = prepared;
    let params = &config.params;

    // Solve each year independently.
    let stage = Instant::now();
    let strat = allocator::strategy(&params.method)
        .map_err(|e| ScenarioError::Config(e.to_string()))?;
    let mut solutions = Vec::with_capacity(problems.len());
    for problem in &problems {
        let solution = strat
            .solve(problem)
            .map_err(|e| ScenarioError::Solver(e.to_string()))?;
        solutions.push(solution);
    }
    log::info!(
        "stage=allocate years={} method={} elapsed_ms={}",
        solutions.len(),
        strat.name(),
        stage.elapsed().as_millis()
    );

    // Summary, manifest, files.
    let stage = Instant::now();
    let summary = ScenarioSummary {
        scenario: config.scenario.name.clone(),
        method: params.method.clone(),
        years: solutions
            .iter()
            .map(|sol| report::year_summary(sol, schedule.total_demand(sol.year)))
            .collect(),
    };
    let manifest = RunManifest {
        scenario: config.scenario.name.clone(),
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        method: params.method.clone(),
        years: config.years,
        output_dir: out_dir.display().to_string(),
        input_digests: digests,
        parameters: ParameterSnapshot {
            phi: params.phi,
            parent_product: params.parent_product.clone(),
            demand_region: params.demand_region.clone(),
            neumann_max_layers: params.neumann_max_layers,
            neumann_tol: params.neumann_tol,
            weights: params.weights,
            trade_cut: params.trade_cut,
            restricted_regions: params.restricted_regions.clone(),
            dtr: config.scenario.dtr,
            trade_disruption: config.scenario.trade_disruption,
            lifetime_case: lifetime_case_name(config.scenario.lifetime_case).to_string(),
            lifetimes: lifetimes.clone(),
            ratios: ratios.clone(),
            bom: bom.clone(),
        },
    };

    std::fs::create_dir_all(out_dir).map_err(data_err)?;
    let write = |name: &str, op: &dyn Fn(std::fs::File) -> Result<(), std::io::Error>|
     -> Result<(), ScenarioError> {
        let path = out_dir.join(name);
        let file = std::fs::File::create(&path)
            .map_err(|e| ScenarioError::Data(format!("cannot write {}: {e}", path.display())))?;
        op(file).map_err(|e| ScenarioError::Data(format!("cannot write {}: {e}", path.display())))
    };
    write("demand_schedule.csv", &|f| write_schedule_csv(&schedule, f))?;
    let gap_rows = gap_report(&solutions);
    write("gap_report.csv", &|f| report::write_gap_csv(&gap_rows, f))?;
    write("usage_ratios.csv", &|f| {
        report::write_usage_csv(&solutions, f)
    })?;
    write("sourcing_shares.csv", &|f| {
        report::write_sourcing_csv(&sourcing_rows, f)
    })?;
    let summary_json = serde_json::to_string_pretty(&summary).map_err(data_err)? + "\n";
    std::fs::write(out_dir.join("summary.json"), summary_json).map_err(data_err)?;
    let manifest_json = serde_json::to_string_pretty(&manifest).map_err(data_err)? + "\n";
    std::fs::write(&manifest_path, manifest_json).map_err(data_err)?;
    log::info!(
        "stage=report files=6 out_dir={} elapsed_ms={}",
        out_dir.display(),
        stage.elapsed().as_millis()
    );

    Ok(RunOutput {
        manifest,
        summary,
        schedule,
        solutions,
        sourcing: sourcing_rows,
        out_dir: out_dir.to_path_buf(),
    })
}

/// Writes each year's allocation problem as pretty-printed JSON
/// (`problem_<year>.json`) without solving, for offline inspection or
/// replay. Returns the written paths in year order.
pub fn dump_problems(config: &RunConfig, out_dir: &Path) -> Result<Vec<PathBuf>, ScenarioError> {
    let prepared = prepare_run(config)?;
    std::fs::create_dir_all(out_dir).map_err(data_err)?;
    let mut paths = Vec::with_capacity(prepared.problems.len());
    for problem in &prepared.problems {
        let path = out_dir.join(format!("problem_{}.json", problem.year));
        let json = serde_json::to_string_pretty(problem).map_err(data_err)? + "\n";
        std::fs::write(&path, json)
            .map_err(|e| ScenarioError::Data(format!("cannot write {}: {e}", path.display())))?;
        paths.push(path);
    }
    Ok(paths)
}

/// Per-year change of a variant run relative to a reference run
/// (variant minus reference everywhere).
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ScenarioDelta {
    pub year: i32,
    pub total_unmet_gva: f64,
    /// Change in the unmet share, in percentage points.
    pub unmet_share_pp: f64,
    pub transformer_unmet_gva: f64,
    /// Change in unmet demand summed over every non-transformer class.
    pub other_unmet_gva: f64,
    pub usage_ratio: BTreeMap<Material, f64>,
}

/// Compares two runs year by year. Both summaries must cover the same
/// years and the same class and material sets.
pub fn compare_scenarios(
    reference: &ScenarioSummary,
    variant: &ScenarioSummary,
) -> Result<Vec<ScenarioDelta>, ScenarioError> {
    let ref_years: Vec<i32> = reference.years.iter().map(|y| y.year).collect();
    let var_years: Vec<i32> = variant.years.iter().map(|y| y.year).collect();
    if ref_years != var_years {
        return Err(ScenarioError::Data(format!(
            "year ranges differ: reference {ref_years:?} vs variant {var_years:?}"
        )));
    }
    let mut deltas = Vec::with_capacity(ref_years.len());
    for (r, v) in reference.years.iter().zip(&variant.years) {
        let r_classes: Vec<_> = r.classes.keys().collect();
        let v_classes: Vec<_> = v.classes.keys().collect();
        if r_classes != v_classes {
            return Err(ScenarioError::Data(format!(
                "class sets differ in {}: reference {:?} vs variant {:?}",
                r.year, r_classes, v_classes
            )));
        }
        let r_materials: Vec<_> = r.materials.keys().collect();
        let v_materials: Vec<_> = v.materials.keys().collect();
        if r_materials != v_materials {
            return Err(ScenarioError::Data(format!(
                "material sets differ in {}: reference {:?} vs variant {:?}",
                r.year, r_materials, v_materials
            )));
        }
        let unmet_of = |y: &YearSummary, class: EquipmentClassId| {
            y.classes.get(&class).map(|c| c.unmet_gva).unwrap_or(0.0)
        };
        let other_unmet = |y: &YearSummary| {
            y.classes
                .iter()
                .filter(|(c, _)| **c != EquipmentClassId::Transformer)
                .map(|(_, o)| o.unmet_gva)
                .sum::<f64>()
        };
        let usage_ratio = r
            .materials
            .keys()
            .map(|m| {
                (
                    *m,
                    v.materials[m].usage_ratio - r.materials[m].usage_ratio,
                )
            })
            .collect();
        deltas.push(ScenarioDelta {
            year: r.year,
            total_unmet_gva: v.total_unmet_gva - r.total_unmet_gva,
            unmet_share_pp: 100.0 * (v.unmet_share - r.unmet_share),
            transformer_unmet_gva: unmet_of(v, EquipmentClassId::Transformer)
                - unmet_of(r, EquipmentClassId::Transformer),
            other_unmet_gva: other_unmet(v) - other_unmet(r),
            usage_ratio,
        });
    }
    Ok(deltas)
}

#[cfg(test)]
mod tests {
    use super::*;
    use report::{ClassOutcome, MaterialOutcome};

    fn summary_with(unmet_t: f64, unmet_spv: f64, copper: f64) -> ScenarioSummary {
        let mut classes = BTreeMap::new();
        classes.insert(
            EquipmentClassId::Transformer,
            ClassOutcome {
                produced_gva: 10.0 - unmet_t,
                unmet_gva: unmet_t,
            },
        );
        classes.insert(
            EquipmentClassId::SpvInverter,
            ClassOutcome {
                produced_gva: 5.0 - unmet_spv,
                unmet_gva: unmet_spv,
            },
        );
        let mut materials = BTreeMap::new();
        materials.insert(
            Material::Copper,
            MaterialOutcome {
                available_kg: 1000.0,
                consumed_kg: copper * 1000.0,
                usage_ratio: copper,
                binding: copper >= 1.0 - 1e-6,
            },
        );
        let total_unmet = unmet_t + unmet_spv;
        ScenarioSummary {
            scenario: "s".to_string(),
            method: "two-phase".to_string(),
            years: vec![YearSummary {
                year: 2030,
                total_demand_gva: 15.0,
                total_produced_gva: 15.0 - total_unmet,
                total_unmet_gva: total_unmet,
                unmet_share: total_unmet / 15.0,
                bundle_level: 1.0,
                classes,
                materials,
            }],
        }
    }

    #[test]
    fn identical_summaries_give_zero_deltas() {
        let s = summary_with(2.0, 1.0, 0.8);
        let deltas = compare_scenarios(&s, &s).unwrap();
        assert_eq!(deltas.len(), 1);
        let d = &deltas[0];
        assert_eq!(d.total_unmet_gva, 0.0);
        assert_eq!(d.unmet_share_pp, 0.0);
        assert_eq!(d.transformer_unmet_gva, 0.0);
        assert_eq!(d.other_unmet_gva, 0.0);
        assert_eq!(d.usage_ratio[&Material::Copper], 0.0);
    }

    #[test]
    fn deltas_are_variant_minus_reference() {
        let reference = summary_with(2.0, 1.0, 0.8);
        let variant = summary_with(3.0, 0.5, 0.95);
        let d = &compare_scenarios(&reference, &variant).unwrap()[0];
        assert!((d.transformer_unmet_gva - 1.0).abs() < 1e-12);
        assert!((d.other_unmet_gva - (-0.5)).abs() < 1e-12);
        assert!((d.total_unmet_gva - 0.5).abs() < 1e-12);
        assert!((d.unmet_share_pp - 100.0 * 0.5 / 15.0).abs() < 1e-12);
        assert!((d.usage_ratio[&Material::Copper] - 0.15000000000000002).abs() < 1e-15);
    }

    #[test]
    fn mismatched_shapes_are_rejected() {
        let reference = summary_with(2.0, 1.0, 0.8);
        let mut other_years = reference.clone();
        other_years.years[0].year = 2029;
        assert!(matches!(
            compare_scenarios(&reference, &other_years),
            Err(ScenarioError::Data(_))
        ));
        let mut missing_class = reference.clone();
        missing_class.years[0]
            .classes
            .remove(&EquipmentClassId::SpvInverter);
        assert!(matches!(
            compare_scenarios(&reference, &missing_class),
            Err(ScenarioError::Data(_))
        ));
    }

    #[test]
    fn exit_codes_follow_the_contract() {
        assert_eq!(ScenarioError::Config("x".into()).exit_code(), 2);
        assert_eq!(ScenarioError::Data("x".into()).exit_code(), 3);
        assert_eq!(ScenarioError::Solver("x".into()).exit_code(), 4);
    }

    #[test]
    fn sha256_matches_a_known_vector() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.txt");
        std::fs::write(&path, "abc").unwrap();
        assert_eq!(
            sha256_file(&path).unwrap(),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn parent_demand_loader_validates() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("pd.csv");
        std::fs::write(&path, "year,value\n2025,100.0\n2026,104.5\n").unwrap();
        let series = load_parent_demand(&path).unwrap();
        assert_eq!(series[&2025], 100.0);
        assert_eq!(series.len(), 2);
        std::fs::write(&path, "year,value\n2025,100.0\n2025,90.0\n").unwrap();
        assert!(matches!(
            load_parent_demand(&path),
            Err(ScenarioError::Data(_))
        ));
        std::fs::write(&path, "year,value\n2025,-4.0\n").unwrap();
        assert!(matches!(
            load_parent_demand(&path),
            Err(ScenarioError::Data(_))
        ));
    }
}
