//! Weibull lifetime statistics and the age-structured stock-flow recursion.
//!
//! Equipment lifetimes follow a two-parameter Weibull law with scale `alpha`
//! (years) and shape `beta`:
//!
//! ```text
//! F(t) = 1 - exp(-(t/alpha)^beta)      cumulative failure probability
//! S(t) = 1 - F(t)                      survival probability
//! dF(t) = F(t) - F(t-1)                failure mass in year t of life (dF(0) = 0)
//! ```
//!
//! Given a net-addition series `C(y)` (new capacity commissioned in year `y`,
//! GVA), total installations `TC(y)` include replacements of earlier
//! installations and replacements of replacements:
//!
//! ```text
//! TC(y) = C(y) + sum over k < y of TC(k) * dF(y - k)
//! ```
//!
//! The convolution runs over `TC`, not `C`, so a unit installed as a
//! replacement is itself replaced when it fails. Ages beyond
//! [`AGE_CAP`] contribute nothing; the cap only matters for parameter sets
//! with very heavy tails.

use crate::classes::EquipmentClassId;
use crate::series::YearSeries;
use serde::Serialize;
use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;
use thiserror::Error;

/// Oldest age (years) at which a unit can still generate replacement demand.
pub const AGE_CAP: u32 = 200;

#[derive(Debug, Error)]
pub enum SurvivalError {
    #[error("weibull parameters must be positive and finite: alpha={alpha}, beta={beta}")]
    InvalidParams { alpha: f64, beta: f64 },
    #[error("quantile level must lie strictly inside (0, 1): got {0}")]
    InvalidQuantile(f64),
    #[error("net-addition series must not be empty")]
    EmptySeries,
    #[error("net addition for year {year} must be nonnegative and finite: got {value}")]
    InvalidAddition { year: i32, value: f64 },
    #[error("year {year} precedes the ledger start year {start_year}")]
    YearBeforeStart { year: i32, start_year: i32 },
    #[error("no lifetime parameters for class {0}")]
    MissingClass(EquipmentClassId),
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

/// Two-parameter Weibull lifetime distribution.
///
/// Constructed via [`WeibullParams::new`], which rejects non-positive or
/// non-finite parameters; the fields stay private so every value in
/// circulation is valid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WeibullParams {
    alpha: f64,
    beta: f64,
}

impl WeibullParams {
    pub fn new(alpha: f64, beta: f64) -> Result<WeibullParams, SurvivalError> {
        if !(alpha.is_finite() && beta.is_finite() && alpha > 0.0 && beta > 0.0) {
            return Err(SurvivalError::InvalidParams { alpha, beta });
        }
        Ok(WeibullParams { alpha, beta })
    }

    /// Scale parameter in years (the age by which `1 - 1/e ~ 63.2%` of units
    /// have failed).
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Shape parameter; `beta > 1` means wear-out (rising hazard), `beta < 1`
    /// infant mortality (falling hazard).
    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Cumulative failure probability `F(t)`; 0 for `t <= 0`.
    pub fn cumulative_failure(&self, age_years: f64) -> f64 {
        if age_years <= 0.0 {
            return 0.0;
        }
        1.0 - (-(age_years / self.alpha).powf(self.beta)).exp()
    }

    /// Survival probability `S(t) = 1 - F(t)`.
    pub fn survival(&self, age_years: f64) -> f64 {
        1.0 - self.cumulative_failure(age_years)
    }

    /// Failure mass in the `age`-th year of life, `dF(age)`. Zero for age 0
    /// and for ages beyond [`AGE_CAP`].
    pub fn annual_failure_increment(&self, age: u32) -> f64 {
        if age == 0 || age > AGE_CAP {
            return 0.0;
        }
        self.cumulative_failure(age as f64) - self.cumulative_failure(age as f64 - 1.0)
    }

    /// Age by which a fraction `q` of units has failed:
    /// `T_q = alpha * (-ln(1 - q))^(1/beta)`.
    pub fn quantile(&self, q: f64) -> Result<f64, SurvivalError> {
        if !(q > 0.0 && q < 1.0) {
            return Err(SurvivalError::InvalidQuantile(q));
        }
        Ok(self.alpha * (-(1.0 - q).ln()).powf(1.0 / self.beta))
    }

    /// Median lifetime `T_50`.
    pub fn median(&self) -> f64 {
        self.quantile(0.5).expect("0.5 is a valid quantile")
    }
}

/// Which end of the lifetime uncertainty range to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LifetimeCase {
    /// Shorter lives, more replacement demand.
    Pessimistic,
    /// Longer lives, less replacement demand.
    Optimistic,
}

impl LifetimeCase {
    pub const ALL: [LifetimeCase; 2] = [LifetimeCase::Pessimistic, LifetimeCase::Optimistic];

    pub fn id(self) -> &'static str {
        match self {
            LifetimeCase::Pessimistic => "pessimistic",
            LifetimeCase::Optimistic => "optimistic",
        }
    }

    pub fn parse(s: &str) -> Option<LifetimeCase> {
        LifetimeCase::ALL.into_iter().find(|c| c.id() == s)
    }
}

impl std::fmt::Display for LifetimeCase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.id())
    }
}

/// Pessimistic/optimistic Weibull parameter pair for one equipment class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LifetimeProfile {
    pub pessimistic: WeibullParams,
    pub optimistic: WeibullParams,
}

impl LifetimeProfile {
    pub fn params(&self, case: LifetimeCase) -> WeibullParams {
        match case {
            LifetimeCase::Pessimistic => self.pessimistic,
            LifetimeCase::Optimistic => self.optimistic,
        }
    }
}

/// Lifetime parameters for every equipment class.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LifetimeTable {
    profiles: BTreeMap<EquipmentClassId, LifetimeProfile>,
}

impl LifetimeTable {
    pub fn profile(&self, class: EquipmentClassId) -> Result<&LifetimeProfile, SurvivalError> {
        self.profiles
            .get(&class)
            .ok_or(SurvivalError::MissingClass(class))
    }

    pub fn params(
        &self,
        class: EquipmentClassId,
        case: LifetimeCase,
    ) -> Result<WeibullParams, SurvivalError> {
        Ok(self.profile(class)?.params(case))
    }

    pub fn iter(&self) -> impl Iterator<Item = (EquipmentClassId, &LifetimeProfile)> {
        self.profiles.iter().map(|(c, p)| (*c, p))
    }

    /// Replaces the entry for `(class, case)`.
    pub fn set(&mut self, class: EquipmentClassId, case: LifetimeCase, params: WeibullParams) {
        let profile = self.profiles.entry(class).or_insert(LifetimeProfile {
            pessimistic: params,
            optimistic: params,
        });
        match case {
            LifetimeCase::Pessimistic => profile.pessimistic = params,
            LifetimeCase::Optimistic => profile.optimistic = params,
        }
    }
}

fn wp(alpha: f64, beta: f64) -> WeibullParams {
    WeibullParams::new(alpha, beta).expect("embedded parameters are valid")
}

/// Embedded default lifetime parameters for all eight classes.
///
/// Data-center transformers reuse the large-power-transformer fit; dedicated
/// failure data for them is not available at this granularity.
pub fn default_lifetimes() -> LifetimeTable {
    let mut profiles = BTreeMap::new();
    let transformer = LifetimeProfile {
        pessimistic: wp(40.9500, 7.3410),
        optimistic: wp(49.5663, 4.6141),
    };
    profiles.insert(EquipmentClassId::Transformer, transformer);
    profiles.insert(EquipmentClassId::DcTransformer, transformer);
    profiles.insert(
        EquipmentClassId::SpvInverter,
        LifetimeProfile {
            pessimistic: wp(16.23, 4.23),
            optimistic: wp(25.59, 4.35),
        },
    );
    profiles.insert(
        EquipmentClassId::DfigConverter,
        LifetimeProfile {
            pessimistic: wp(13.5, 0.6),
            optimistic: wp(13.5, 0.7),
        },
    );
    profiles.insert(
        EquipmentClassId::PmsgConverter,
        LifetimeProfile {
            pessimistic: wp(30.3, 0.34),
            optimistic: wp(30.3, 0.95),
        },
    );
    profiles.insert(
        EquipmentClassId::DcUps,
        LifetimeProfile {
            pessimistic: wp(9.81, 2.85),
            optimistic: wp(9.81, 2.85),
        },
    );
    profiles.insert(
        EquipmentClassId::EvChargerPcs,
        LifetimeProfile {
            pessimistic: wp(18.78, 5.0),
            optimistic: wp(18.78, 5.0),
        },
    );
    profiles.insert(
        EquipmentClassId::BatteryPcs,
        LifetimeProfile {
            pessimistic: wp(19.56, 5.83),
            optimistic: wp(38.42, 5.86),
        },
    );
    LifetimeTable { profiles }
}

/// Net additions, total installations and survivors for one equipment class
/// under a fixed lifetime distribution.
#[derive(Debug, Clone)]
pub struct CohortLedger {
    start_year: i32,
    net_additions: Vec<f64>,
    total_installations: Vec<f64>,
    params: WeibullParams,
}

/// Runs the stock-flow recursion over a net-addition series.
///
/// `net_additions.get(y)` is `C(y)`; the result covers the same years.
/// Additions must be nonnegative and finite.
pub fn build_cohort_ledger(
    net_additions: &YearSeries,
    params: WeibullParams,
) -> Result<CohortLedger, SurvivalError> {
    if net_additions.is_empty() {
        return Err(SurvivalError::EmptySeries);
    }
    for (year, value) in net_additions.iter() {
        if !value.is_finite() || value < 0.0 {
            return Err(SurvivalError::InvalidAddition { year, value });
        }
    }
    let c = net_additions.values();
    let n = c.len();
    // Failure increments by age, precomputed once: increments[a] = dF(a).
    let max_age = (n as u32).min(AGE_CAP) as usize;
    let mut increments = vec![0.0; max_age + 1];
    for (age, slot) in increments.iter_mut().enumerate() {
        *slot = params.annual_failure_increment(age as u32);
    }
    let mut tc = vec![0.0; n];
    for i in 0..n {
        let mut replacement = 0.0;
        let oldest = i.min(max_age);
        for age in 1..=oldest {
            replacement += tc[i - age] * increments[age];
        }
        tc[i] = c[i] + replacement;
    }
    Ok(CohortLedger {
        start_year: net_additions.start_year(),
        net_additions: c.to_vec(),
        total_installations: tc,
        params,
    })
}

impl CohortLedger {
    pub fn start_year(&self) -> i32 {
        self.start_year
    }

    pub fn end_year(&self) -> i32 {
        self.start_year + self.net_additions.len() as i32 - 1
    }

    pub fn params(&self) -> WeibullParams {
        self.params
    }

    fn index(&self, year: i32) -> Option<usize> {
        if year < self.start_year || year > self.end_year() {
            return None;
        }
        Some((year - self.start_year) as usize)
    }

    /// Net addition `C(y)`, or `None` outside the covered years.
    pub fn net_addition(&self, year: i32) -> Option<f64> {
        self.index(year).map(|i| self.net_additions[i])
    }

    /// Total installations `TC(y)` (new plus replacement).
    pub fn total_installation(&self, year: i32) -> Option<f64> {
        self.index(year).map(|i| self.total_installations[i])
    }

    /// Replacement component `TC(y) - C(y)`.
    pub fn replacement(&self, year: i32) -> Option<f64> {
        self.index(year)
            .map(|i| self.total_installations[i] - self.net_additions[i])
    }

    /// Installations of cohort `cohort_year` still alive in
    /// `observation_year`: `TC(y) * S(Y - y)`.
    pub fn cohort_survivors(
        &self,
        cohort_year: i32,
        observation_year: i32,
    ) -> Result<f64, SurvivalError> {
        let i = self
            .index(cohort_year)
            .ok_or(SurvivalError::YearBeforeStart {
                year: cohort_year,
                start_year: self.start_year,
            })?;
        if observation_year < cohort_year {
            return Err(SurvivalError::YearBeforeStart {
                year: observation_year,
                start_year: cohort_year,
            });
        }
        let age = (observation_year - cohort_year) as u32;
        if age > AGE_CAP {
            return Ok(0.0);
        }
        Ok(self.total_installations[i] * self.params.survival(age as f64))
    }

    /// Surviving stock in `observation_year`: the sum of `TC(y) * S(Y - y)`
    /// over all cohorts commissioned up to that year.
    pub fn surviving_stock(&self, observation_year: i32) -> Result<f64, SurvivalError> {
        if observation_year < self.start_year {
            return Err(SurvivalError::YearBeforeStart {
                year: observation_year,
                start_year: self.start_year,
            });
        }
        let last = self.end_year().min(observation_year);
        let mut stock = 0.0;
        for year in self.start_year..=last {
            stock += self.cohort_survivors(year, observation_year)?;
        }
        Ok(stock)
    }
}

#[derive(Debug, serde::Deserialize)]
struct LifetimeRow {
    class: String,
    scenario: String,
    alpha: f64,
    beta: f64,
}

/// Loads lifetime overrides from a `class, scenario, alpha, beta` CSV.
///
/// Rows replace the embedded defaults for the matching class and scenario;
/// classes absent from the file keep their defaults.
pub fn load_lifetimes_csv(path: &Path) -> Result<LifetimeTable, SurvivalError> {
    let display = path.display().to_string();
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_open_error(&display, e))?;
    let mut table = default_lifetimes();
    for (i, row) in reader.deserialize::<LifetimeRow>().enumerate() {
        let row = row.map_err(|e| SurvivalError::Csv {
            path: display.clone(),
            source: e,
        })?;
        let schema = |message: String| SurvivalError::Schema {
            path: display.clone(),
            row: i + 2,
            message,
        };
        let class = EquipmentClassId::parse(&row.class)
            .ok_or_else(|| schema(format!("unknown equipment class '{}'", row.class)))?;
        let case = LifetimeCase::parse(&row.scenario)
            .ok_or_else(|| schema(format!("unknown lifetime scenario '{}'", row.scenario)))?;
        let params = WeibullParams::new(row.alpha, row.beta)
            .map_err(|e| schema(e.to_string()))?;
        table.set(class, case, params);
    }
    Ok(table)
}

/// Writes a lifetime table as a `class, scenario, alpha, beta` CSV.
pub fn write_lifetimes_csv<W: Write>(table: &LifetimeTable, out: W) -> Result<(), std::io::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["class", "scenario", "alpha", "beta"])?;
    for class in EquipmentClassId::ALL {
        if let Ok(profile) = table.profile(class) {
            for case in LifetimeCase::ALL {
                let p = profile.params(case);
                w.write_record([
                    class.id(),
                    case.id(),
                    &format!("{}", p.alpha()),
                    &format!("{}", p.beta()),
                ])?;
            }
        }
    }
    w.flush()
}

#[derive(Debug, serde::Deserialize)]
struct HistoryRow {
    equipment_class: String,
    year: i32,
    net_addition_gva: f64,
}

/// Loads per-class net-addition histories from an
/// `equipment_class, year, net_addition_gva` CSV.
///
/// Years may arrive in any order; gaps inside a class's range are filled
/// with zero. Duplicate (class, year) rows and negative additions are
/// rejected.
pub fn load_history_csv(
    path: &Path,
) -> Result<BTreeMap<EquipmentClassId, YearSeries>, SurvivalError> {
    let display = path.display().to_string();
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_open_error(&display, e))?;
    let mut pairs: BTreeMap<EquipmentClassId, Vec<(i32, f64)>> = BTreeMap::new();
    for (i, row) in reader.deserialize::<HistoryRow>().enumerate() {
        let row = row.map_err(|e| SurvivalError::Csv {
            path: display.clone(),
            source: e,
        })?;
        let schema = |message: String| SurvivalError::Schema {
            path: display.clone(),
            row: i + 2,
            message,
        };
        let class = EquipmentClassId::parse(&row.equipment_class)
            .ok_or_else(|| schema(format!("unknown equipment class '{}'", row.equipment_class)))?;
        if !row.net_addition_gva.is_finite() || row.net_addition_gva < 0.0 {
            return Err(schema(format!(
                "net addition must be nonnegative and finite: got {}",
                row.net_addition_gva
            )));
        }
        pairs.entry(class).or_default().push((row.year, row.net_addition_gva));
    }
    let mut out = BTreeMap::new();
    for (class, p) in pairs {
        let series = YearSeries::from_pairs(p).map_err(|message| SurvivalError::Schema {
            path: display.clone(),
            row: 0,
            message: format!("{}: {}", class, message),
        })?;
        out.insert(class, series);
    }
    if out.is_empty() {
        return Err(SurvivalError::EmptySeries);
    }
    Ok(out)
}

fn csv_open_error(path: &str, e: csv::Error) -> SurvivalError {
    if e.is_io_error() {
        if let csv::ErrorKind::Io(io) = e.into_kind() {
            return SurvivalError::Io {
                path: path.to_string(),
                source: io,
            };
        }
        unreachable!("is_io_error implies Io kind");
    }
    SurvivalError::Csv {
        path: path.to_string(),
        source: e,
    }
}
