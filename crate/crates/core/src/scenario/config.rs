//! Run configuration: scenario axes plus data locations and numeric
//! parameters, loaded from a single JSON file.

use super::ScenarioError;
use crate::allocator::{self, PriorityWeights};
use crate::demand::ScenarioSpec;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

/// First and last simulated year, inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct YearRange {
    pub start: i32,
    pub end: i32,
}

impl Default for YearRange {
    fn default() -> YearRange {
        YearRange {
            start: 2025,
            end: 2030,
        }
    }
}

impl YearRange {
    pub fn iter(&self) -> impl Iterator<Item = i32> {
        self.start..=self.end
    }

    pub fn len(&self) -> usize {
        (self.end - self.start + 1).max(0) as usize
    }

    pub fn is_empty(&self) -> bool {
        self.end < self.start
    }
}

/// Input file locations. Relative paths are resolved against the config
/// file's directory.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DataPaths {
    /// Net-addition history CSV (`equipment_class,year,net_addition_gva`).
    pub history: PathBuf,
    /// Optional lifetime-parameter override CSV; defaults embedded.
    #[serde(default)]
    pub lifetimes: Option<PathBuf>,
    /// Optional material-intensity override CSV; defaults embedded.
    #[serde(default)]
    pub bom: Option<PathBuf>,
    /// Directory holding `use.csv`, `supply.csv`, `axes.json`,
    /// `concordance.csv` and `mass_factors.csv`.
    pub mrsut: PathBuf,
    /// Parent-sector final-demand CSV (`year,value`, monetary units).
    pub parent_demand: PathBuf,
}

impl DataPaths {
    fn resolve(&mut self, base: &Path) {
        let join = |p: &PathBuf| {
            if p.is_absolute() {
                p.clone()
            } else {
                base.join(p)
            }
        };
        self.history = join(&self.history);
        self.mrsut = join(&self.mrsut);
        self.parent_demand = join(&self.parent_demand);
        if let Some(p) = &self.lifetimes {
            self.lifetimes = Some(join(p));
        }
        if let Some(p) = &self.bom {
            self.bom = Some(join(p));
        }
    }

    pub fn use_table(&self) -> PathBuf {
        self.mrsut.join("use.csv")
    }

    pub fn supply_table(&self) -> PathBuf {
        self.mrsut.join("supply.csv")
    }

    pub fn axes(&self) -> PathBuf {
        self.mrsut.join("axes.json")
    }

    pub fn concordance(&self) -> PathBuf {
        self.mrsut.join("concordance.csv")
    }

    pub fn mass_factors(&self) -> PathBuf {
        self.mrsut.join("mass_factors.csv")
    }
}

/// Numeric knobs of the pipeline; every field has a sensible default.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct RunParams {
    /// Share of the parent sector attributed to grid-support equipment.
    pub phi: f64,
    /// Product label of the parent sector in the supply-use axes.
    pub parent_product: String,
    /// Region whose final demand carries the parent-sector value.
    pub demand_region: String,
    pub neumann_max_layers: usize,
    pub neumann_tol: f64,
    pub weights: PriorityWeights,
    /// Fraction of restricted-region supply removed under trade disruption.
    pub trade_cut: f64,
    pub restricted_regions: Vec<String>,
    /// Allocator strategy name; see [`crate::allocator::strategy_names`].
    pub method: String,
}

impl Default for RunParams {
    fn default() -> RunParams {
        RunParams {
            phi: 0.046,
            parent_product: "elec_machinery".to_string(),
            demand_region: "US".to_string(),
            neumann_max_layers: 200,
            neumann_tol: 1e-9,
            weights: PriorityWeights::default(),
            trade_cut: 0.7,
            restricted_regions: vec!["ROW".to_string()],
            method: "two-phase".to_string(),
        }
    }
}

/// A complete run configuration. The scenario axes live at the top level
/// of the JSON document; `years`, `data` and `params` nest beside them.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    #[serde(flatten)]
    pub scenario: ScenarioSpec,
    #[serde(default)]
    pub years: YearRange,
    pub data: DataPaths,
    #[serde(default)]
    pub params: RunParams,
}

impl RunConfig {
    /// Loads and validates a config file, resolving relative data paths
    /// against the config's own directory.
    pub fn load(path: &Path) -> Result<RunConfig, ScenarioError> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            ScenarioError::Config(format!("cannot read config {}: {e}", path.display()))
        })?;
        let mut config: RunConfig = serde_json::from_str(&text).map_err(|e| {
            ScenarioError::Config(format!("cannot parse config {}: {e}", path.display()))
        })?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        config.data.resolve(base);
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        let err = |m: String| Err(ScenarioError::Config(m));
        if self.scenario.name.trim().is_empty() {
            return err("scenario name must not be empty".to_string());
        }
        self.scenario
            .validate()
            .map_err(|e| ScenarioError::Config(e.to_string()))?;
        if self.years.is_empty() {
            return err(format!(
                "year range is empty: {}..{}",
                self.years.start, self.years.end
            ));
        }
        let p = &self.params;
        if !(p.phi > 0.0 && p.phi <= 1.0) {
            return err(format!("phi must be in (0, 1]: got {}", p.phi));
        }
        if !(0.0..=1.0).contains(&p.trade_cut) || !p.trade_cut.is_finite() {
            return err(format!("trade_cut must be in [0, 1]: got {}", p.trade_cut));
        }
        if p.neumann_max_layers == 0 {
            return err("neumann_max_layers must be at least 1".to_string());
        }
        if !(p.neumann_tol > 0.0) {
            return err(format!(
                "neumann_tol must be positive: got {}",
                p.neumann_tol
            ));
        }
        // Fail on unknown strategies at config time, not mid-pipeline.
        allocator::strategy(&p.method).map_err(|e| ScenarioError::Config(e.to_string()))?;
        if p.parent_product.trim().is_empty() || p.demand_region.trim().is_empty() {
            return err("parent_product and demand_region must be set".to_string());
        }
        Ok(())
    }
}
