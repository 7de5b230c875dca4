//! Scenario-driven demand projection.
//!
//! Each equipment class carries a GVA-per-GW ratio `rho` linking its
//! capacity to the physical driver behind it (generation stock, data-center
//! load, EV fleet). A projection extends the historical net-addition series
//! with scenario-dependent future additions, runs the stock-flow recursion
//! from [`crate::survival`], and reports demand per class and year split
//! into new deployment and replacement:
//!
//! ```text
//! D(e, y) = new(e, y) + replacement(e, y)
//!         = C(e, y)   + (TC(e, y) - C(e, y))
//! ```
//!
//! Future additions follow compound driver growth from the last historical
//! year, except: DFIG converters see no new deployment (the technology is
//! being phased out), and data-center / EV classes can follow either a named
//! adoption case or an explicit driver stock series.

use crate::classes::{EquipmentClassId, Layer};
use crate::series::YearSeries;
use crate::survival::{build_cohort_ledger, LifetimeCase, LifetimeTable, SurvivalError};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;
use thiserror::Error;

/// Demand reduction factor applied to transformer classes when dynamic
/// transformer rating is enabled: better utilisation of existing assets
/// trims both new and replacement needs by 10%.
pub const DTR_FACTOR: f64 = 0.9;

/// Default initial EV fleet share (of the anchor-year stock) used when
/// reconstructing the adoption curve.
pub const DEFAULT_EV_INITIAL_FRACTION: f64 = 0.001;

#[derive(Debug, Error)]
pub enum DemandError {
    #[error("no net-addition history for class {0}")]
    MissingHistory(EquipmentClassId),
    #[error("no GVA-per-driver ratio for class {0}")]
    MissingRatio(EquipmentClassId),
    #[error("ratio for class {class} must be positive and finite: got {value}")]
    InvalidRatio {
        class: EquipmentClassId,
        value: f64,
    },
    #[error("growth rate must lie in [0, 1): got {0}")]
    InvalidGrowthRate(f64),
    #[error("horizon start {start} is after horizon end {end}")]
    HorizonOrder { start: i32, end: i32 },
    #[error("driver series for {class} must cover year {year}")]
    TrajectoryCoverage {
        class: EquipmentClassId,
        year: i32,
    },
    #[error("driver series for {class} decreases at year {year}; stocks must be nondecreasing")]
    TrajectoryDecreasing {
        class: EquipmentClassId,
        year: i32,
    },
    #[error("reference year {reference} must be after start year {start}")]
    ReferenceOrder { reference: i32, start: i32 },
    #[error("driver anchor must be positive and finite: got {0}")]
    InvalidAnchor(f64),
    #[error("initial fraction must lie in (0, 1): got {0}")]
    InvalidFraction(f64),
    #[error(transparent)]
    Survival(#[from] SurvivalError),
    #[error("{path}: row {row}: {message}")]
    Schema {
        path: String,
        row: usize,
        message: String,
    },
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("failed to parse {path}: {source}")]
    Csv {
        path: String,
        #[source]
        source: csv::Error,
    },
}

/// An equipment class with its layer and GVA-per-GW ratio.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EquipmentClass {
    pub id: EquipmentClassId,
    pub layer: Layer,
    /// GVA of equipment per GW of driver stock.
    pub rho: f64,
}

/// Embedded GVA-per-GW ratios.
///
/// The transformer ratio 5.67 aggregates generator step-up, transmission
/// and distribution stages (1.10 + 2.25 + 2.32).
pub fn default_ratios() -> BTreeMap<EquipmentClassId, f64> {
    use EquipmentClassId::*;
    BTreeMap::from([
        (Transformer, 5.67),
        (BatteryPcs, 1.0),
        (DfigConverter, 0.3),
        (PmsgConverter, 1.0),
        (SpvInverter, 1.34),
        (DcTransformer, 1.25),
        (DcUps, 1.37),
        (EvChargerPcs, 1.0),
    ])
}

/// All classes with their layers and the given ratios.
pub fn equipment_classes(
    ratios: &BTreeMap<EquipmentClassId, f64>,
) -> Result<Vec<EquipmentClass>, DemandError> {
    EquipmentClassId::ALL
        .into_iter()
        .map(|id| {
            let rho = *ratios.get(&id).ok_or(DemandError::MissingRatio(id))?;
            if !rho.is_finite() || rho <= 0.0 {
                return Err(DemandError::InvalidRatio { class: id, value: rho });
            }
            Ok(EquipmentClass {
                id,
                layer: id.layer(),
                rho,
            })
        })
        .collect()
}

/// Named electricity-demand growth cases.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GrowthCase {
    /// 1.8%/yr compound growth of the generation driver.
    Baseline,
    /// 2.8%/yr compound growth.
    High,
}

impl GrowthCase {
    pub fn rate(self) -> f64 {
        match self {
            GrowthCase::Baseline => 0.018,
            GrowthCase::High => 0.028,
        }
    }
}

/// Electricity-demand growth: a named case or an explicit annual rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Growth {
    Named(GrowthCase),
    Rate { rate: f64 },
}

impl Growth {
    pub fn rate(self) -> f64 {
        match self {
            Growth::Named(c) => c.rate(),
            Growth::Rate { rate } => rate,
        }
    }

    fn validate(self) -> Result<(), DemandError> {
        let r = self.rate();
        if !r.is_finite() || !(0.0..1.0).contains(&r) {
            return Err(DemandError::InvalidGrowthRate(r));
        }
        Ok(())
    }
}

/// Named data-center build-out cases (annual load growth).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatacenterCase {
    /// 12%/yr load growth.
    Medium,
    /// 20%/yr load growth.
    High,
}

impl DatacenterCase {
    pub fn rate(self) -> f64 {
        match self {
            DatacenterCase::Medium => 0.12,
            DatacenterCase::High => 0.20,
        }
    }
}

/// Named EV adoption cases (annual fleet growth).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvCase {
    /// 14%/yr fleet growth.
    Mid,
    /// 18%/yr fleet growth.
    High,
}

impl EvCase {
    pub fn rate(self) -> f64 {
        match self {
            EvCase::Mid => 0.14,
            EvCase::High => 0.18,
        }
    }
}

/// A driver trajectory: either a named case (compound growth at the case
/// rate) or an explicit nondecreasing driver stock series in GW.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DriverTrajectory<C> {
    Case(C),
    Stock { stock: Vec<(i32, f64)> },
}

/// A complete scenario: one point on every axis of the scenario space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub name: String,
    pub lifetime_case: LifetimeCase,
    pub growth: Growth,
    pub datacenter: DriverTrajectory<DatacenterCase>,
    pub ev: DriverTrajectory<EvCase>,
    /// Dynamic transformer rating: scales transformer-class demand by
    /// [`DTR_FACTOR`].
    #[serde(default)]
    pub dtr: bool,
    /// Apply the restricted-region trade cut to material availability.
    #[serde(default)]
    pub trade_disruption: bool,
}

impl ScenarioSpec {
    pub fn validate(&self) -> Result<(), DemandError> {
        self.growth.validate()
    }
}

/// Reconstructs a data-center load series that ramps linearly from zero at
/// `start_year` to `reference_load` (GW) at `reference_year`.
pub fn reconstruct_datacenter_load(
    reference_load: f64,
    reference_year: i32,
    start_year: i32,
) -> Result<YearSeries, DemandError> {
    if !reference_load.is_finite() || reference_load <= 0.0 {
        return Err(DemandError::InvalidAnchor(reference_load));
    }
    if reference_year <= start_year {
        return Err(DemandError::ReferenceOrder {
            reference: reference_year,
            start: start_year,
        });
    }
    let span = (reference_year - start_year) as f64;
    let values = (0..=(reference_year - start_year))
        .map(|i| reference_load * i as f64 / span)
        .collect();
    Ok(YearSeries::new(start_year, values))
}

/// Reconstructs an EV fleet series growing geometrically from
/// `initial_fraction * observed_stock` at `start_year` to `observed_stock`
/// at `observed_year`.
pub fn reconstruct_ev_stock(
    observed_stock: f64,
    observed_year: i32,
    start_year: i32,
    initial_fraction: f64,
) -> Result<YearSeries, DemandError> {
    if !observed_stock.is_finite() || observed_stock <= 0.0 {
        return Err(DemandError::InvalidAnchor(observed_stock));
    }
    if !(initial_fraction > 0.0 && initial_fraction < 1.0) {
        return Err(DemandError::InvalidFraction(initial_fraction));
    }
    if observed_year <= start_year {
        return Err(DemandError::ReferenceOrder {
            reference: observed_year,
            start: start_year,
        });
    }
    let s0 = initial_fraction * observed_stock;
    let span = (observed_year - start_year) as f64;
    let growth = (observed_stock / s0).powf(1.0 / span);
    let values = (0..=(observed_year - start_year))
        .map(|i| s0 * growth.powi(i))
        .collect();
    Ok(YearSeries::new(start_year, values))
}

/// Demand for one class in one year, split into components. All values GVA.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct DemandEntry {
    pub new_gva: f64,
    pub replacement_gva: f64,
}

impl DemandEntry {
    pub fn total(&self) -> f64 {
        self.new_gva + self.replacement_gva
    }
}

/// Projected demand for every class over a contiguous horizon.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DemandSchedule {
    start_year: i32,
    end_year: i32,
    entries: BTreeMap<EquipmentClassId, Vec<DemandEntry>>,
}

impl DemandSchedule {
    pub fn start_year(&self) -> i32 {
        self.start_year
    }

    pub fn end_year(&self) -> i32 {
        self.end_year
    }

    pub fn years(&self) -> impl Iterator<Item = i32> {
        self.start_year..=self.end_year
    }

    pub fn classes(&self) -> impl Iterator<Item = EquipmentClassId> + '_ {
        self.entries.keys().copied()
    }

    pub fn entry(&self, class: EquipmentClassId, year: i32) -> Option<DemandEntry> {
        if year < self.start_year || year > self.end_year {
            return None;
        }
        self.entries
            .get(&class)
            .map(|v| v[(year - self.start_year) as usize])
    }

    /// Total demand across classes in one year.
    pub fn total_demand(&self, year: i32) -> f64 {
        self.entries
            .keys()
            .filter_map(|c| self.entry(*c, year))
            .map(|e| e.total())
            .sum()
    }

    /// Per-class demand map for one year, as consumed by the allocator.
    pub fn demand_map(&self, year: i32) -> BTreeMap<EquipmentClassId, f64> {
        self.entries
            .keys()
            .filter_map(|c| self.entry(*c, year).map(|e| (*c, e.total())))
            .collect()
    }
}

fn growth_additions(base_stock: f64, rate: f64, years_after_history: i32) -> f64 {
    // Stock grows as base * (1+r)^k; the addition in year k after the last
    // historical year is the year-over-year difference.
    base_stock * rate * (1.0 + rate).powi(years_after_history - 1)
}

fn future_addition_from_stock(
    class: EquipmentClassId,
    rho: f64,
    stock: &[(i32, f64)],
    year: i32,
) -> Result<f64, DemandError> {
    let value = |y: i32| -> Result<f64, DemandError> {
        stock
            .iter()
            .find(|(sy, _)| *sy == y)
            .map(|(_, v)| *v)
            .ok_or(DemandError::TrajectoryCoverage { class, year: y })
    };
    let prev = value(year - 1)?;
    let cur = value(year)?;
    if cur < prev {
        return Err(DemandError::TrajectoryDecreasing { class, year });
    }
    Ok(rho * (cur - prev))
}

/// Projects demand for all classes over `horizon` (inclusive years).
///
/// Every class needs a history and a ratio. Future additions start the year
/// after each class's history ends; horizon years inside the history report
/// the historical addition as the new component.
pub fn project_demand(
    spec: &ScenarioSpec,
    history: &BTreeMap<EquipmentClassId, YearSeries>,
    lifetimes: &LifetimeTable,
    ratios: &BTreeMap<EquipmentClassId, f64>,
    horizon: (i32, i32),
) -> Result<DemandSchedule, DemandError> {
    let (start, end) = horizon;
    if start > end {
        return Err(DemandError::HorizonOrder { start, end });
    }
    spec.validate()?;
    let classes = equipment_classes(ratios)?;
    let mut entries = BTreeMap::new();
    for class in classes {
        let hist = history
            .get(&class.id)
            .ok_or(DemandError::MissingHistory(class.id))?;
        let last_hist = hist.end_year();
        let base_stock = hist.sum() / class.rho;
        let mut additions = hist.clone();
        for year in (last_hist + 1)..=end {
            let k = year - last_hist;
            let add = match class.id {
                EquipmentClassId::DfigConverter => 0.0,
                EquipmentClassId::DcTransformer | EquipmentClassId::DcUps => {
                    match &spec.datacenter {
                        DriverTrajectory::Case(c) => {
                            class.rho * growth_additions(base_stock, c.rate(), k)
                        }
                        DriverTrajectory::Stock { stock } => {
                            future_addition_from_stock(class.id, class.rho, stock, year)?
                        }
                    }
                }
                EquipmentClassId::EvChargerPcs => match &spec.ev {
                    DriverTrajectory::Case(c) => {
                        class.rho * growth_additions(base_stock, c.rate(), k)
                    }
                    DriverTrajectory::Stock { stock } => {
                        future_addition_from_stock(class.id, class.rho, stock, year)?
                    }
                },
                _ => class.rho * growth_additions(base_stock, spec.growth.rate(), k),
            };
            additions.push(add);
        }
        let params = lifetimes.params(class.id, spec.lifetime_case)?;
        let ledger = build_cohort_ledger(&additions, params)?;
        let dtr_scale = if spec.dtr
            && matches!(
                class.id,
                EquipmentClassId::Transformer | EquipmentClassId::DcTransformer
            ) {
            DTR_FACTOR
        } else {
            1.0
        };
        let mut per_year = Vec::with_capacity((end - start + 1) as usize);
        for year in start..=end {
            let (new, replacement) = match ledger.total_installation(year) {
                Some(tc) => {
                    let c = ledger.net_addition(year).unwrap_or(0.0);
                    (c, tc - c)
                }
                // Horizon years before the class history starts: no demand.
                None => (0.0, 0.0),
            };
            per_year.push(DemandEntry {
                new_gva: new * dtr_scale,
                replacement_gva: replacement * dtr_scale,
            });
        }
        entries.insert(class.id, per_year);
    }
    Ok(DemandSchedule {
        start_year: start,
        end_year: end,
        entries,
    })
}

/// Writes a schedule as a `class, year, new_gva, replacement_gva, total_gva`
/// CSV with three decimal places.
pub fn write_schedule_csv<W: Write>(
    schedule: &DemandSchedule,
    out: W,
) -> Result<(), std::io::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["class", "year", "new_gva", "replacement_gva", "total_gva"])?;
    for class in EquipmentClassId::ALL {
        for year in schedule.years() {
            if let Some(e) = schedule.entry(class, year) {
                w.write_record([
                    class.id(),
                    &year.to_string(),
                    &format!("{:.3}", e.new_gva),
                    &format!("{:.3}", e.replacement_gva),
                    &format!("{:.3}", e.total()),
                ])?;
            }
        }
    }
    w.flush()
}

#[derive(Debug, Deserialize)]
struct ScheduleRow {
    class: String,
    year: i32,
    new_gva: f64,
    replacement_gva: f64,
    total_gva: f64,
}

/// Loads a schedule written by [`write_schedule_csv`].
pub fn load_schedule_csv(path: &Path) -> Result<DemandSchedule, DemandError> {
    let display = path.display().to_string();
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_open_error(&display, e))?;
    let mut rows: BTreeMap<EquipmentClassId, Vec<(i32, DemandEntry)>> = BTreeMap::new();
    let (mut min_year, mut max_year) = (i32::MAX, i32::MIN);
    for (i, row) in reader.deserialize::<ScheduleRow>().enumerate() {
        let row = row.map_err(|e| DemandError::Csv {
            path: display.clone(),
            source: e,
        })?;
        let schema = |message: String| DemandError::Schema {
            path: display.clone(),
            row: i + 2,
            message,
        };
        let class = EquipmentClassId::parse(&row.class)
            .ok_or_else(|| schema(format!("unknown equipment class '{}'", row.class)))?;
        if (row.new_gva + row.replacement_gva - row.total_gva).abs() > 2e-3 {
            return Err(schema(format!(
                "components {} + {} do not sum to total {}",
                row.new_gva, row.replacement_gva, row.total_gva
            )));
        }
        min_year = min_year.min(row.year);
        max_year = max_year.max(row.year);
        rows.entry(class).or_default().push((
            row.year,
            DemandEntry {
                new_gva: row.new_gva,
                replacement_gva: row.replacement_gva,
            },
        ));
    }
    if rows.is_empty() {
        return Err(DemandError::Schema {
            path: display,
            row: 0,
            message: "schedule file contains no rows".to_string(),
        });
    }
    let span = (max_year - min_year + 1) as usize;
    let mut entries = BTreeMap::new();
    for (class, mut pairs) in rows {
        pairs.sort_by_key(|(y, _)| *y);
        if pairs.len() != span || pairs.first().map(|(y, _)| *y) != Some(min_year) {
            return Err(DemandError::Schema {
                path: display,
                row: 0,
                message: format!("class {class} does not cover years {min_year}..={max_year}"),
            });
        }
        entries.insert(class, pairs.into_iter().map(|(_, e)| e).collect());
    }
    Ok(DemandSchedule {
        start_year: min_year,
        end_year: max_year,
        entries,
    })
}

fn csv_open_error(path: &str, e: csv::Error) -> DemandError {
    if e.is_io_error() {
        if let csv::ErrorKind::Io(io) = e.into_kind() {
            return DemandError::Io {
                path: path.to_string(),
                source: io,
            };
        }
        unreachable!("is_io_error implies Io kind");
    }
    DemandError::Csv {
        path: path.to_string(),
        source: e,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::survival::default_lifetimes;

    fn flat_history(value: f64, start: i32, end: i32) -> YearSeries {
        YearSeries::new(start, vec![value; (end - start + 1) as usize])
    }

    fn full_history() -> BTreeMap<EquipmentClassId, YearSeries> {
        EquipmentClassId::ALL
            .into_iter()
            .map(|c| (c, flat_history(2.0, 2005, 2024)))
            .collect()
    }

    fn test_spec() -> ScenarioSpec {
        ScenarioSpec {
            name: "test".to_string(),
            lifetime_case: LifetimeCase::Optimistic,
            growth: Growth::Named(GrowthCase::Baseline),
            datacenter: DriverTrajectory::Case(DatacenterCase::Medium),
            ev: DriverTrajectory::Case(EvCase::Mid),
            dtr: false,
            trade_disruption: false,
        }
    }

    #[test]
    fn datacenter_ramp_hits_known_midpoint() {
        // 19 GW at 2025, linear from zero at 2006: 2016 sits at 10/19 of the
        // ramp, exactly 10 GW.
        let ramp = reconstruct_datacenter_load(19.0, 2025, 2006).unwrap();
        assert_eq!(ramp.get(2006), Some(0.0));
        assert_eq!(ramp.get(2016), Some(10.0));
        assert_eq!(ramp.get(2025), Some(19.0));
        assert!(reconstruct_datacenter_load(19.0, 2006, 2006).is_err());
        assert!(reconstruct_datacenter_load(-1.0, 2025, 2006).is_err());
    }

    #[test]
    fn ev_curve_doubles_when_anchor_is_8192x_initial() {
        // s0 = 8192/8192 = 1 over 13 years gives growth exactly 2.
        let curve = reconstruct_ev_stock(8192.0, 2024, 2011, 1.0 / 8192.0).unwrap();
        assert!((curve.get(2011).unwrap() - 1.0).abs() < 1e-9);
        assert!((curve.get(2012).unwrap() - 2.0).abs() < 1e-9);
        assert!((curve.get(2024).unwrap() - 8192.0).abs() < 1e-6);
        for y in 2012..=2024 {
            let ratio = curve.get(y).unwrap() / curve.get(y - 1).unwrap();
            assert!((ratio - 2.0).abs() < 1e-9, "growth factor must be 2, got {ratio}");
        }
        assert!(reconstruct_ev_stock(8192.0, 2024, 2011, 0.0).is_err());
        assert!(reconstruct_ev_stock(8192.0, 2024, 2011, 1.5).is_err());
    }

    #[test]
    fn zero_growth_and_immortal_fleet_mean_zero_demand() {
        let mut lifetimes = default_lifetimes();
        // Effectively immortal: every dF rounds to zero.
        let immortal = crate::survival::WeibullParams::new(1e12, 5.0).unwrap();
        for class in EquipmentClassId::ALL {
            lifetimes.set(class, LifetimeCase::Optimistic, immortal);
        }
        let mut spec = test_spec();
        spec.growth = Growth::Rate { rate: 0.0 };
        spec.datacenter = DriverTrajectory::Case(DatacenterCase::Medium);
        spec.ev = DriverTrajectory::Case(EvCase::Mid);
        // Zero out the consumption drivers too via explicit flat stocks.
        let hist = full_history();
        let flat_stock: Vec<(i32, f64)> = (2024..=2030)
            .map(|y| (y, 40.0))
            .collect();
        spec.datacenter = DriverTrajectory::Stock {
            stock: flat_stock.clone(),
        };
        spec.ev = DriverTrajectory::Stock { stock: flat_stock };
        let schedule =
            project_demand(&spec, &hist, &lifetimes, &default_ratios(), (2025, 2030)).unwrap();
        for class in EquipmentClassId::ALL {
            for year in 2025..=2030 {
                let e = schedule.entry(class, year).unwrap();
                assert_eq!(e.total(), 0.0, "no growth + no failures must mean no demand");
            }
        }
    }

    #[test]
    fn growth_additions_follow_compound_formula() {
        let spec = test_spec();
        let hist = full_history();
        let ratios = default_ratios();
        let lifetimes = default_lifetimes();
        let schedule = project_demand(&spec, &hist, &lifetimes, &ratios, (2025, 2030)).unwrap();
        // Transformer: 20 years of 2.0 GVA -> base stock 40/5.67 GW.
        let rho = ratios[&EquipmentClassId::Transformer];
        let base = 40.0 / rho;
        for year in 2025..=2030 {
            let k = year - 2024;
            let expected = rho * base * 0.018 * 1.018f64.powi(k - 1);
            let got = schedule
                .entry(EquipmentClassId::Transformer, year)
                .unwrap()
                .new_gva;
            assert!(
                (got - expected).abs() < 1e-12,
                "year {year}: expected new {expected}, got {got}"
            );
        }
    }

    #[test]
    fn dfig_gets_replacement_but_no_new_deployment() {
        let schedule = project_demand(
            &test_spec(),
            &full_history(),
            &default_lifetimes(),
            &default_ratios(),
            (2025, 2030),
        )
        .unwrap();
        for year in 2025..=2030 {
            let e = schedule.entry(EquipmentClassId::DfigConverter, year).unwrap();
            assert_eq!(e.new_gva, 0.0, "DFIG sees no new deployment after history");
            assert!(e.replacement_gva > 0.0, "existing DFIG fleet still fails");
        }
    }

    #[test]
    fn dtr_scales_transformer_classes_only() {
        let reference = project_demand(
            &test_spec(),
            &full_history(),
            &default_lifetimes(),
            &default_ratios(),
            (2025, 2030),
        )
        .unwrap();
        let mut spec = test_spec();
        spec.dtr = true;
        let with_dtr = project_demand(
            &spec,
            &full_history(),
            &default_lifetimes(),
            &default_ratios(),
            (2025, 2030),
        )
        .unwrap();
        for year in 2025..=2030 {
            for class in [EquipmentClassId::Transformer, EquipmentClassId::DcTransformer] {
                let r = reference.entry(class, year).unwrap();
                let d = with_dtr.entry(class, year).unwrap();
                assert!((d.new_gva - DTR_FACTOR * r.new_gva).abs() < 1e-12);
                assert!((d.replacement_gva - DTR_FACTOR * r.replacement_gva).abs() < 1e-12);
            }
            let r = reference.entry(EquipmentClassId::SpvInverter, year).unwrap();
            let d = with_dtr.entry(EquipmentClassId::SpvInverter, year).unwrap();
            assert_eq!(r, d, "DTR must not touch non-transformer classes");
        }
    }

    #[test]
    fn doubling_history_doubles_projected_demand_exactly() {
        let hist = full_history();
        let doubled: BTreeMap<_, _> = hist
            .iter()
            .map(|(c, s)| {
                (
                    *c,
                    YearSeries::new(
                        s.start_year(),
                        s.values().iter().map(|v| v * 2.0).collect(),
                    ),
                )
            })
            .collect();
        let a = project_demand(
            &test_spec(),
            &hist,
            &default_lifetimes(),
            &default_ratios(),
            (2025, 2030),
        )
        .unwrap();
        let b = project_demand(
            &test_spec(),
            &doubled,
            &default_lifetimes(),
            &default_ratios(),
            (2025, 2030),
        )
        .unwrap();
        for class in EquipmentClassId::ALL {
            for year in 2025..=2030 {
                let ea = a.entry(class, year).unwrap();
                let eb = b.entry(class, year).unwrap();
                // Doubling is exact in binary floating point, so the whole
                // linear pipeline doubles bit-exactly.
                assert_eq!(eb.new_gva, 2.0 * ea.new_gva);
                assert_eq!(eb.replacement_gva, 2.0 * ea.replacement_gva);
            }
        }
    }

    #[test]
    fn explicit_stock_series_drives_consumption_classes() {
        let mut spec = test_spec();
        let stock: Vec<(i32, f64)> = (2024..=2030).map(|y| (y, 20.0 + 3.0 * (y - 2024) as f64)).collect();
        spec.datacenter = DriverTrajectory::Stock { stock };
        let schedule = project_demand(
            &spec,
            &full_history(),
            &default_lifetimes(),
            &default_ratios(),
            (2025, 2030),
        )
        .unwrap();
        let rho = default_ratios()[&EquipmentClassId::DcTransformer];
        for year in 2025..=2030 {
            let e = schedule.entry(EquipmentClassId::DcTransformer, year).unwrap();
            assert!(
                (e.new_gva - rho * 3.0).abs() < 1e-12,
                "additions must be rho * stock difference"
            );
        }
    }

    #[test]
    fn short_or_decreasing_stock_series_is_rejected() {
        let mut spec = test_spec();
        spec.datacenter = DriverTrajectory::Stock {
            stock: vec![(2026, 30.0), (2027, 31.0)],
        };
        assert!(matches!(
            project_demand(
                &spec,
                &full_history(),
                &default_lifetimes(),
                &default_ratios(),
                (2025, 2030)
            ),
            Err(DemandError::TrajectoryCoverage { .. })
        ));
        let mut spec = test_spec();
        spec.datacenter = DriverTrajectory::Stock {
            stock: (2024..=2030).map(|y| (y, if y == 2027 { 10.0 } else { 30.0 })).collect(),
        };
        assert!(matches!(
            project_demand(
                &spec,
                &full_history(),
                &default_lifetimes(),
                &default_ratios(),
                (2025, 2030)
            ),
            Err(DemandError::TrajectoryDecreasing { .. })
        ));
    }

    #[test]
    fn scenario_json_round_trips_with_named_and_explicit_axes() {
        let json = r#"{
            "name": "high_pess",
            "lifetime_case": "pessimistic",
            "growth": "high",
            "datacenter": {"stock": [[2024, 23.0], [2025, 30.0]]},
            "ev": "high",
            "dtr": true,
            "trade_disruption": true
        }"#;
        let spec: ScenarioSpec = serde_json::from_str(json).unwrap();
        assert_eq!(spec.growth.rate(), 0.028);
        assert!(matches!(spec.ev, DriverTrajectory::Case(EvCase::High)));
        assert!(matches!(spec.datacenter, DriverTrajectory::Stock { .. }));
        assert!(spec.dtr);
        let back: ScenarioSpec =
            serde_json::from_str(&serde_json::to_string(&spec).unwrap()).unwrap();
        assert_eq!(back, spec);
    }

    #[test]
    fn schedule_csv_round_trips_at_milli_gva() {
        let schedule = project_demand(
            &test_spec(),
            &full_history(),
            &default_lifetimes(),
            &default_ratios(),
            (2025, 2027),
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("schedule.csv");
        let mut buf = Vec::new();
        write_schedule_csv(&schedule, &mut buf).unwrap();
        std::fs::write(&path, &buf).unwrap();
        let loaded = load_schedule_csv(&path).unwrap();
        assert_eq!(loaded.start_year(), 2025);
        assert_eq!(loaded.end_year(), 2027);
        for class in EquipmentClassId::ALL {
            for year in 2025..=2027 {
                let a = schedule.entry(class, year).unwrap();
                let b = loaded.entry(class, year).unwrap();
                assert!((a.new_gva - b.new_gva).abs() <= 5e-4 + 1e-12);
                assert!((a.replacement_gva - b.replacement_gva).abs() <= 5e-4 + 1e-12);
            }
        }
    }

    #[test]
    fn missing_history_is_an_error() {
        let mut hist = full_history();
        hist.remove(&EquipmentClassId::BatteryPcs);
        assert!(matches!(
            project_demand(
                &test_spec(),
                &hist,
                &default_lifetimes(),
                &default_ratios(),
                (2025, 2030)
            ),
            Err(DemandError::MissingHistory(EquipmentClassId::BatteryPcs))
        ));
    }
}
