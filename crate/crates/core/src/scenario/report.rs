//! Result tables and run provenance: per-year summaries, the manifest
//! that makes a run reproducible, and the plot-ready CSV writers.
//!
//! Formatting convention throughout: capacities (GVA) at 3 decimals,
//! ratios and shares at 4, masses in kg at 3. All writers emit rows in a
//! fixed deterministic order so reruns are byte-identical.

use super::ScenarioError;
use crate::allocator::{AllocationSolution, GapRow, PriorityWeights};
use crate::bom::{BomMatrix, Material};
use crate::classes::EquipmentClassId;
use crate::survival::LifetimeTable;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use super::config::YearRange;

/// Everything needed to rerun a scenario and get byte-identical outputs:
/// input digests plus the full effective parameter set. Deliberately free
/// of timestamps.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub scenario: String,
    pub tool_version: String,
    pub method: String,
    pub years: YearRange,
    pub output_dir: String,
    /// Logical input name → SHA-256 of the file bytes. Only files actually
    /// read appear; embedded defaults leave no entry.
    pub input_digests: BTreeMap<String, String>,
    pub parameters: ParameterSnapshot,
}

/// The effective numeric parameters of a run, embedded rather than
/// referenced so the manifest alone documents what was computed.
#[derive(Debug, Clone, Serialize)]
pub struct ParameterSnapshot {
    pub phi: f64,
    pub parent_product: String,
    pub demand_region: String,
    pub neumann_max_layers: usize,
    pub neumann_tol: f64,
    pub weights: PriorityWeights,
    pub trade_cut: f64,
    pub restricted_regions: Vec<String>,
    pub dtr: bool,
    pub trade_disruption: bool,
    pub lifetime_case: String,
    pub lifetimes: LifetimeTable,
    pub ratios: BTreeMap<EquipmentClassId, f64>,
    pub bom: BomMatrix,
}

/// Produced and unmet capacity for one class in one year.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassOutcome {
    pub produced_gva: f64,
    pub unmet_gva: f64,
}

/// Usage of one material in one year.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaterialOutcome {
    pub available_kg: f64,
    pub consumed_kg: f64,
    pub usage_ratio: f64,
    pub binding: bool,
}

/// Aggregate metrics for one simulated year.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct YearSummary {
    pub year: i32,
    pub total_demand_gva: f64,
    pub total_produced_gva: f64,
    pub total_unmet_gva: f64,
    /// unmet / demand, 0 when there is no demand.
    pub unmet_share: f64,
    pub bundle_level: f64,
    pub classes: BTreeMap<EquipmentClassId, ClassOutcome>,
    pub materials: BTreeMap<Material, MaterialOutcome>,
}

/// The JSON summary of a whole run; the unit [`super::compare_scenarios`]
/// works on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSummary {
    pub scenario: String,
    pub method: String,
    pub years: Vec<YearSummary>,
}

impl ScenarioSummary {
    pub fn load(path: &Path) -> Result<ScenarioSummary, ScenarioError> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            ScenarioError::Data(format!("cannot read summary {}: {e}", path.display()))
        })?;
        serde_json::from_str(&text).map_err(|e| {
            ScenarioError::Data(format!("cannot parse summary {}: {e}", path.display()))
        })
    }

    pub fn year(&self, year: i32) -> Option<&YearSummary> {
        self.years.iter().find(|y| y.year == year)
    }
}

pub(crate) fn year_summary(sol: &AllocationSolution, total_demand: f64) -> YearSummary {
    let classes: BTreeMap<EquipmentClassId, ClassOutcome> = sol
        .deployed_gva
        .iter()
        .map(|(class, produced)| {
            (
                *class,
                ClassOutcome {
                    produced_gva: *produced,
                    unmet_gva: sol.unmet_gva[class],
                },
            )
        })
        .collect();
    let materials: BTreeMap<Material, MaterialOutcome> = sol
        .usage
        .iter()
        .map(|(material, u)| {
            (
                *material,
                MaterialOutcome {
                    available_kg: u.available_kg,
                    consumed_kg: u.consumed_kg,
                    usage_ratio: u.ratio,
                    binding: u.binding,
                },
            )
        })
        .collect();
    let total_unmet = sol.total_unmet();
    YearSummary {
        year: sol.year,
        total_demand_gva: total_demand,
        total_produced_gva: sol.total_deployed(),
        total_unmet_gva: total_unmet,
        unmet_share: if total_demand > 0.0 {
            total_unmet / total_demand
        } else {
            0.0
        },
        bundle_level: sol.bundle_level,
        classes,
        materials,
    }
}

/// One row of the regional sourcing table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SourcingRow {
    pub material: Material,
    pub year: i32,
    pub region: String,
    pub mass_kg: f64,
    pub share: f64,
}

pub fn write_gap_csv<W: Write>(rows: &[GapRow], out: W) -> Result<(), std::io::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["class", "year", "produced_gva", "unmet_gva", "gap_ratio"])?;
    for row in rows {
        w.write_record([
            row.scope.label(),
            row.year.to_string(),
            format!("{:.3}", row.produced_gva),
            format!("{:.3}", row.unmet_gva),
            format!("{:.4}", row.gap_ratio),
        ])?;
    }
    w.flush()
}

pub fn write_usage_csv<W: Write>(
    solutions: &[AllocationSolution],
    out: W,
) -> Result<(), std::io::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["material", "year", "usage_ratio", "binding"])?;
    for sol in solutions {
        for (material, usage) in &sol.usage {
            w.write_record([
                material.id().to_string(),
                sol.year.to_string(),
                format!("{:.4}", usage.ratio),
                usage.binding.to_string(),
            ])?;
        }
    }
    w.flush()
}

pub fn write_sourcing_csv<W: Write>(
    rows: &[SourcingRow],
    out: W,
) -> Result<(), std::io::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["material", "year", "region", "mass_kg", "share"])?;
    for row in rows {
        w.write_record([
            row.material.id().to_string(),
            row.year.to_string(),
            row.region.clone(),
            format!("{:.3}", row.mass_kg),
            format!("{:.4}", row.share),
        ])?;
    }
    w.flush()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::allocator::{GapScope, MaterialUsage};

    fn sample_solution() -> AllocationSolution {
        let mut deployed = BTreeMap::new();
        let mut unmet = BTreeMap::new();
        let mut normalized = BTreeMap::new();
        deployed.insert(EquipmentClassId::Transformer, 8.0);
        unmet.insert(EquipmentClassId::Transformer, 2.0);
        normalized.insert(EquipmentClassId::Transformer, 8.0 / 5.67);
        let mut usage = BTreeMap::new();
        usage.insert(
            Material::Copper,
            MaterialUsage {
                consumed_kg: 500_000.0,
                available_kg: 500_000.0,
                ratio: 1.0,
                binding: true,
                unavailable: false,
            },
        );
        AllocationSolution {
            year: 2027,
            method: "two-phase".to_string(),
            deployed_gva: deployed,
            unmet_gva: unmet,
            normalized_production: normalized,
            bundle_level: 8.0 / 5.67,
            weighted_objective: 1e4 * 8.0 / 5.67,
            usage,
            duality_gap: 1e-12,
        }
    }

    #[test]
    fn year_summary_totals_and_share() {
        let sum = year_summary(&sample_solution(), 10.0);
        assert_eq!(sum.year, 2027);
        assert_eq!(sum.total_produced_gva, 8.0);
        assert_eq!(sum.total_unmet_gva, 2.0);
        assert!((sum.unmet_share - 0.2).abs() < 1e-12);
        assert!(sum.materials[&Material::Copper].binding);
    }

    #[test]
    fn summary_round_trips_through_json() {
        let sum = ScenarioSummary {
            scenario: "test".to_string(),
            method: "two-phase".to_string(),
            years: vec![year_summary(&sample_solution(), 10.0)],
        };
        let text = serde_json::to_string_pretty(&sum).unwrap();
        let back: ScenarioSummary = serde_json::from_str(&text).unwrap();
        assert_eq!(back, sum);
    }

    #[test]
    fn csv_writers_format_and_order_deterministically() {
        let rows = vec![GapRow {
            scope: GapScope::Class(EquipmentClassId::Transformer),
            year: 2027,
            produced_gva: 8.0,
            unmet_gva: 2.0,
            gap_ratio: 0.2,
        }];
        let mut buf = Vec::new();
        write_gap_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "class,year,produced_gva,unmet_gva,gap_ratio\ntransformer,2027,8.000,2.000,0.2000\n"
        );

        let mut buf = Vec::new();
        write_usage_csv(&[sample_solution()], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "material,year,usage_ratio,binding\ncopper,2027,1.0000,true\n"
        );

        let sourcing = vec![SourcingRow {
            material: Material::Copper,
            year: 2027,
            region: "US".to_string(),
            mass_kg: 123456.789,
            share: 0.65,
        }];
        let mut buf = Vec::new();
        write_sourcing_csv(&sourcing, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "material,year,region,mass_kg,share\ncopper,2027,US,123456.789,0.6500\n"
        );
    }
}
