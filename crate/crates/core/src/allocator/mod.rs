//! Lexicographic allocation of scarce materials to equipment classes.
//!
//! For one year, with demand `D_e` (GVA), normalization ratios `rho_e`,
//! intensities `B` (kg/MVA, i.e. tonnes per GVA) and availability `A_m`
//! (kg), the model chooses production `P_e`, unmet demand `U_e`,
//! normalized production `V_e` and a bundle level `S`:
//!
//! ```text
//! sum_e B[m,e] * P_e <= A_m / 1000     material budget (tonnes)
//! P_e + U_e  = D_e                     demand balance
//! V_e        = P_e / rho_e             normalization
//! S         <= V_e    for D_e > 0      synchronized bundle
//! V_e       <= V_ref  for e != ref     reference hierarchy
//! ```
//!
//! The objective is lexicographic: first maximize `S` (every class advances
//! together), then maximize the priority-weighted sum of `V_e` holding `S`
//! at its optimum. Two interchangeable strategies implement this — a true
//! two-phase solve and a big-M composite objective — behind the
//! [`strategy`] registry. Each year solves independently: availability does
//! not bank across years.
//!
//! Weights fold in a deterministic tie-break: classes earlier in the
//! priority order get an infinitesimally larger weight so equal-weight ties
//! resolve the same way on every run.

pub mod lp;
pub mod strategy;

use crate::bom::{BomMatrix, Material};
use crate::classes::{EquipmentClassId, EquipmentGroup, Layer};
use lp::{LinearProgram, LpError, LpRow, Relation};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

pub use strategy::{default_strategy, strategy, strategy_names, SolveStrategy};

/// Relative slack when pinning the bundle level in the second phase.
pub const BUNDLE_SLACK: f64 = 1e-8;
/// Bundle weight in the big-M composite objective.
pub const BIG_M: f64 = 1e9;
/// Tie-break increment separating equal-weight classes. Must sit above the
/// simplex optimality threshold (1e-9 relative, so ~1e-5 absolute at the
/// 1e4 cost scale) or the solver cannot see it, yet orders of magnitude
/// below the smallest real weight gap (1 vs 1e2) so it never flips a
/// genuine priority.
pub const TIE_BREAK_EPS: f64 = 1e-4;
/// Usage ratio at or above `1 - BINDING_TOL` marks a material binding.
pub const BINDING_TOL: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum AllocatorError {
    #[error("invalid allocation problem for year {year}: {message}")]
    InvalidProblem { year: i32, message: String },
    #[error("unknown solve strategy '{name}'; available: {available}")]
    UnknownStrategy { name: String, available: String },
    #[error("allocation model for year {year} reported '{status}', but the zero deployment is always feasible — this is a solver or modeling fault")]
    DegenerateModel { year: i32, status: String },
    #[error("allocation for year {year} failed optimality certification: {details}")]
    Certification { year: i32, details: String },
    #[error("problems must have strictly increasing years: saw {prev} then {next}")]
    UnsortedYears { prev: i32, next: i32 },
}

/// Priority weights per power-system layer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriorityWeights {
    pub grid: f64,
    pub generation: f64,
    pub consumption: f64,
}

impl Default for PriorityWeights {
    fn default() -> PriorityWeights {
        PriorityWeights {
            grid: 1e4,
            generation: 1e2,
            consumption: 1.0,
        }
    }
}

impl PriorityWeights {
    pub fn layer_weight(&self, layer: Layer) -> f64 {
        match layer {
            Layer::Grid => self.grid,
            Layer::Generation => self.generation,
            Layer::Consumption => self.consumption,
        }
    }
}

/// One year of the allocation problem.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AllocationProblem {
    pub year: i32,
    /// Material availability in kg; materials absent here count as zero.
    pub availability_kg: BTreeMap<Material, f64>,
    /// Demand per class in GVA. Classes listed here are modeled, even at
    /// zero demand.
    pub demand_gva: BTreeMap<EquipmentClassId, f64>,
    pub bom: BomMatrix,
    /// GVA-per-GW normalization ratios.
    pub ratios: BTreeMap<EquipmentClassId, f64>,
    pub weights: PriorityWeights,
    /// The hierarchy reference class; no class may exceed its normalized
    /// production.
    pub reference_class: EquipmentClassId,
}

impl AllocationProblem {
    fn validate(&self) -> Result<(), AllocatorError> {
        let err = |message: String| AllocatorError::InvalidProblem {
            year: self.year,
            message,
        };
        if self.demand_gva.is_empty() {
            return Err(err("no demand classes".to_string()));
        }
        if !self.demand_gva.contains_key(&self.reference_class) {
            return Err(err(format!(
                "reference class {} is not among the demand classes",
                self.reference_class
            )));
        }
        for (class, d) in &self.demand_gva {
            if !d.is_finite() || *d < 0.0 {
                return Err(err(format!(
                    "demand for {class} must be nonnegative and finite: got {d}"
                )));
            }
            match self.ratios.get(class) {
                Some(rho) if rho.is_finite() && *rho > 0.0 => {}
                Some(rho) => {
                    return Err(err(format!(
                        "ratio for {class} must be positive and finite: got {rho}"
                    )))
                }
                None => return Err(err(format!("no normalization ratio for {class}"))),
            }
        }
        for (material, a) in &self.availability_kg {
            if !a.is_finite() || *a < 0.0 {
                return Err(err(format!(
                    "availability of {material} must be nonnegative and finite: got {a}"
                )));
            }
        }
        for w in [
            self.weights.grid,
            self.weights.generation,
            self.weights.consumption,
        ] {
            if !w.is_finite() || w <= 0.0 {
                return Err(err(format!("priority weights must be positive: got {w}")));
            }
        }
        Ok(())
    }
}

/// Usage of one material in one year's solution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MaterialUsage {
    pub consumed_kg: f64,
    pub available_kg: f64,
    /// consumed / available; 0 when nothing is available.
    pub ratio: f64,
    /// Ratio within [`BINDING_TOL`] of 1.
    pub binding: bool,
    /// Availability is zero while some modeled class needs the material.
    pub unavailable: bool,
}

/// A certified allocation for one year.
#[derive(Debug, Clone, Serialize)]
pub struct AllocationSolution {
    pub year: i32,
    /// Strategy that produced the solution.
    pub method: String,
    pub deployed_gva: BTreeMap<EquipmentClassId, f64>,
    pub unmet_gva: BTreeMap<EquipmentClassId, f64>,
    /// `V_e = P_e / rho_e`.
    pub normalized_production: BTreeMap<EquipmentClassId, f64>,
    /// Optimal synchronized bundle level `S`.
    pub bundle_level: f64,
    /// Priority-weighted sum of normalized production at the optimum.
    pub weighted_objective: f64,
    pub usage: BTreeMap<Material, MaterialUsage>,
    /// Worst relative primal-dual gap across the solves behind this answer.
    pub duality_gap: f64,
}

impl AllocationSolution {
    pub fn total_unmet(&self) -> f64 {
        self.unmet_gva.values().sum()
    }

    pub fn total_deployed(&self) -> f64 {
        self.deployed_gva.values().sum()
    }

    pub fn is_fully_met(&self, tol: f64) -> bool {
        self.total_unmet() <= tol
    }
}

/// Internal model layout shared by the strategies: variables are
/// `[P_0, U_0, V_0, P_1, ..., S]` with classes in priority order.
pub(crate) struct ModelContext {
    /// (class, demand, rho, effective weight), priority order.
    pub classes: Vec<(EquipmentClassId, f64, f64, f64)>,
    /// (material, availability in tonnes), only rows someone consumes.
    /// Availability far beyond any possible consumption is clamped to keep
    /// the rows well-scaled; see [`ModelContext::build`].
    pub materials: Vec<(Material, f64)>,
    pub ref_idx: usize,
}

impl ModelContext {
    pub fn build(problem: &AllocationProblem) -> Result<ModelContext, AllocatorError> {
        problem.validate()?;
        let mut classes: Vec<(EquipmentClassId, f64, f64, f64)> = Vec::new();
        let ordered = EquipmentClassId::ALL
            .into_iter()
            .filter(|c| problem.demand_gva.contains_key(c));
        for class in ordered {
            let demand = problem.demand_gva[&class];
            let rho = problem.ratios[&class];
            classes.push((class, demand, rho, 0.0));
        }
        let n = classes.len();
        for (pos, entry) in classes.iter_mut().enumerate() {
            let base = problem.weights.layer_weight(entry.0.layer());
            // Deterministic tie-break: earlier (higher-priority) classes get
            // an infinitesimally larger weight.
            entry.3 = base + TIE_BREAK_EPS * (n - pos) as f64;
        }
        let ref_idx = classes
            .iter()
            .position(|(c, ..)| *c == problem.reference_class)
            .expect("validated: reference class is modeled");
        let mut materials = Vec::new();
        for material in Material::ALL {
            let consumed_by_any = classes
                .iter()
                .any(|(c, ..)| problem.bom.get(material, *c) > 0.0);
            if consumed_by_any {
                let kg = problem
                    .availability_kg
                    .get(&material)
                    .copied()
                    .unwrap_or(0.0);
                // The demand rows already force P <= D, so consumption can
                // never exceed sum B*D. Clamping the budget at twice that
                // leaves the solution set untouched while keeping the row
                // on the same scale as the rest of the tableau — otherwise
                // a nominally "unlimited" availability wrecks the duals.
                let max_need: f64 = classes
                    .iter()
                    .map(|(c, d, ..)| problem.bom.get(material, *c) * d)
                    .sum();
                materials.push((material, (kg / 1000.0).min(2.0 * max_need)));
            }
        }
        Ok(ModelContext {
            classes,
            materials,
            ref_idx,
        })
    }

    pub fn n_classes(&self) -> usize {
        self.classes.len()
    }

    pub fn n_vars(&self) -> usize {
        3 * self.n_classes() + 1
    }

    pub fn p(&self, k: usize) -> usize {
        3 * k
    }

    pub fn u(&self, k: usize) -> usize {
        3 * k + 1
    }

    pub fn v(&self, k: usize) -> usize {
        3 * k + 2
    }

    pub fn s(&self) -> usize {
        3 * self.n_classes()
    }

    /// Constraint rows shared by every objective mode, in a fixed order:
    /// materials, demand balances, normalization links, bundle caps,
    /// hierarchy caps.
    pub fn base_rows(&self, bom: &BomMatrix) -> Vec<LpRow> {
        let mut rows = Vec::new();
        for (material, avail_tonnes) in &self.materials {
            let coeffs: Vec<(usize, f64)> = self
                .classes
                .iter()
                .enumerate()
                .filter_map(|(k, (class, ..))| {
                    let b = bom.get(*material, *class);
                    (b > 0.0).then_some((self.p(k), b))
                })
                .collect();
            rows.push(LpRow {
                coeffs,
                relation: Relation::Le,
                rhs: *avail_tonnes,
            });
        }
        for (k, (_, demand, ..)) in self.classes.iter().enumerate() {
            rows.push(LpRow {
                coeffs: vec![(self.p(k), 1.0), (self.u(k), 1.0)],
                relation: Relation::Eq,
                rhs: *demand,
            });
        }
        for (k, (_, _, rho, _)) in self.classes.iter().enumerate() {
            rows.push(LpRow {
                coeffs: vec![(self.p(k), 1.0), (self.v(k), -rho)],
                relation: Relation::Eq,
                rhs: 0.0,
            });
        }
        for (k, (_, demand, ..)) in self.classes.iter().enumerate() {
            if *demand > 0.0 {
                rows.push(LpRow {
                    coeffs: vec![(self.s(), 1.0), (self.v(k), -1.0)],
                    relation: Relation::Le,
                    rhs: 0.0,
                });
            }
        }
        for k in 0..self.n_classes() {
            if k != self.ref_idx {
                rows.push(LpRow {
                    coeffs: vec![(self.v(k), 1.0), (self.v(self.ref_idx), -1.0)],
                    relation: Relation::Le,
                    rhs: 0.0,
                });
            }
        }
        rows
    }

    pub fn bundle_objective(&self) -> Vec<f64> {
        let mut c = vec![0.0; self.n_vars()];
        c[self.s()] = 1.0;
        c
    }

    pub fn weighted_objective(&self) -> Vec<f64> {
        let mut c = vec![0.0; self.n_vars()];
        for (k, (_, _, _, w)) in self.classes.iter().enumerate() {
            c[self.v(k)] = *w;
        }
        c
    }

    pub fn composite_objective(&self, big_m: f64) -> Vec<f64> {
        let mut c = self.weighted_objective();
        c[self.s()] = big_m;
        c
    }

    pub fn floor_row(&self, s_floor: f64) -> LpRow {
        LpRow {
            coeffs: vec![(self.s(), 1.0)],
            relation: Relation::Ge,
            rhs: s_floor,
        }
    }

    pub fn program(&self, bom: &BomMatrix, maximize: Vec<f64>, extra: Option<LpRow>) -> LinearProgram {
        let mut rows = self.base_rows(bom);
        if let Some(row) = extra {
            rows.push(row);
        }
        LinearProgram {
            n_vars: self.n_vars(),
            maximize,
            rows,
        }
    }
}

pub(crate) fn lp_failure(year: i32, err: LpError) -> AllocatorError {
    AllocatorError::DegenerateModel {
        year,
        status: err.to_string(),
    }
}

/// Validates the raw LP point, snaps it to exact feasibility and assembles
/// the reported solution.
pub(crate) fn finalize(
    problem: &AllocationProblem,
    ctx: &ModelContext,
    raw: &[f64],
    bundle_level: f64,
    // How far the weakest class may sit below the reported bundle level;
    // the two-phase strategy deliberately floors phase 2 slightly under
    // the phase-1 optimum, so it passes a slack-aware tolerance here.
    bundle_tol: f64,
    duality_gap: f64,
    dual_infeasibility: f64,
    method: &str,
) -> Result<AllocationSolution, AllocatorError> {
    let certify = |ok: bool, details: String| {
        if ok {
            Ok(())
        } else {
            Err(AllocatorError::Certification {
                year: problem.year,
                details,
            })
        }
    };
    certify(
        duality_gap <= 1e-7,
        format!("duality gap {duality_gap:.3e} exceeds 1e-7"),
    )?;
    certify(
        dual_infeasibility <= 1e-7,
        format!("dual infeasibility {dual_infeasibility:.3e} exceeds 1e-7"),
    )?;

    // Raw contract checks before snapping, scaled mildly by magnitude.
    for (k, (class, demand, rho, _)) in ctx.classes.iter().enumerate() {
        let (p, u, v) = (raw[ctx.p(k)], raw[ctx.u(k)], raw[ctx.v(k)]);
        let tol = 1e-9 * demand.abs().max(1.0);
        certify(
            (p + u - demand).abs() <= tol,
            format!("{class}: P + U = {} drifts from demand {demand}", p + u),
        )?;
        certify(
            (p - rho * v).abs() <= tol,
            format!("{class}: normalization link broken: P={p}, rho*V={}", rho * v),
        )?;
        certify(p >= -tol && u >= -tol, format!("{class}: negative production or unmet"))?;
    }
    let min_v = ctx
        .classes
        .iter()
        .enumerate()
        .filter(|(_, (_, d, ..))| *d > 0.0)
        .map(|(k, _)| raw[ctx.v(k)])
        .fold(f64::INFINITY, f64::min);
    if min_v.is_finite() {
        certify(
            bundle_level <= min_v + bundle_tol,
            format!("bundle level {bundle_level} exceeds weakest class {min_v}"),
        )?;
    }
    let v_ref = raw[ctx.v(ctx.ref_idx)];
    for (k, (class, ..)) in ctx.classes.iter().enumerate() {
        certify(
            raw[ctx.v(k)] <= v_ref + 1e-9,
            format!("{class}: normalized production exceeds the reference"),
        )?;
    }
    for (material, avail_tonnes) in &ctx.materials {
        let consumed: f64 = ctx
            .classes
            .iter()
            .enumerate()
            .map(|(k, (class, ..))| problem.bom.get(*material, *class) * raw[ctx.p(k)])
            .sum();
        certify(
            consumed <= avail_tonnes * (1.0 + 1e-9) + 1e-9,
            format!("{material}: consumption {consumed} t exceeds availability {avail_tonnes} t"),
        )?;
    }

    // Snap: clamp production into [0, D], recompute U and V exactly.
    let mut deployed = BTreeMap::new();
    let mut unmet = BTreeMap::new();
    let mut normalized = BTreeMap::new();
    let mut weighted_objective = 0.0;
    let mut min_v_snapped = f64::INFINITY;
    for (k, (class, demand, rho, w)) in ctx.classes.iter().enumerate() {
        let mut p = raw[ctx.p(k)].clamp(0.0, *demand);
        if p < 1e-11 {
            p = 0.0;
        }
        let v = p / rho;
        deployed.insert(*class, p);
        unmet.insert(*class, demand - p);
        normalized.insert(*class, v);
        weighted_objective += w * v;
        if *demand > 0.0 {
            min_v_snapped = min_v_snapped.min(v);
        }
    }
    let mut bundle = bundle_level.max(0.0);
    if min_v_snapped.is_finite() && bundle > min_v_snapped {
        certify(
            bundle - min_v_snapped <= 1e-7,
            format!("bundle level {bundle} inconsistent with snapped solution {min_v_snapped}"),
        )?;
        bundle = min_v_snapped;
    }

    let mut usage = BTreeMap::new();
    for (material, _) in &ctx.materials {
        let consumed_kg: f64 = ctx
            .classes
            .iter()
            .map(|(class, ..)| problem.bom.get(*material, *class) * deployed[class] * 1000.0)
            .sum();
        let available_kg = problem
            .availability_kg
            .get(material)
            .copied()
            .unwrap_or(0.0);
        let unavailable = available_kg <= 0.0;
        let ratio = if unavailable {
            0.0
        } else {
            consumed_kg / available_kg
        };
        usage.insert(
            *material,
            MaterialUsage {
                consumed_kg,
                available_kg,
                ratio,
                binding: !unavailable && ratio >= 1.0 - BINDING_TOL,
                unavailable,
            },
        );
    }

    Ok(AllocationSolution {
        year: problem.year,
        method: method.to_string(),
        deployed_gva: deployed,
        unmet_gva: unmet,
        normalized_production: normalized,
        bundle_level: bundle,
        weighted_objective,
        usage,
        duality_gap,
    })
}

/// Solves one year with the default (two-phase) strategy.
pub fn solve_year(problem: &AllocationProblem) -> Result<AllocationSolution, AllocatorError> {
    default_strategy().solve(problem)
}

/// Solves a horizon of independent yearly problems with one strategy.
/// Years must be strictly increasing; availability never carries over.
pub fn solve_horizon(
    problems: &[AllocationProblem],
    strat: &dyn SolveStrategy,
) -> Result<Vec<AllocationSolution>, AllocatorError> {
    for pair in problems.windows(2) {
        if pair[1].year <= pair[0].year {
            return Err(AllocatorError::UnsortedYears {
                prev: pair[0].year,
                next: pair[1].year,
            });
        }
    }
    problems.iter().map(|p| strat.solve(p)).collect()
}

/// Row scope in a gap report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GapScope {
    Class(EquipmentClassId),
    Group(EquipmentGroup),
    Aggregate,
}

impl GapScope {
    pub fn label(&self) -> String {
        match self {
            GapScope::Class(c) => c.id().to_string(),
            GapScope::Group(g) => g.id().to_string(),
            GapScope::Aggregate => "aggregate".to_string(),
        }
    }
}

/// Produced/unmet GVA for one scope and year.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapRow {
    pub scope: GapScope,
    pub year: i32,
    pub produced_gva: f64,
    pub unmet_gva: f64,
    /// unmet / (produced + unmet); 0 when there was no demand.
    pub gap_ratio: f64,
}

/// Expands solutions into per-class, per-group and aggregate gap rows.
pub fn gap_report(solutions: &[AllocationSolution]) -> Vec<GapRow> {
    let ratio = |unmet: f64, produced: f64| {
        let total = produced + unmet;
        if total > 0.0 {
            unmet / total
        } else {
            0.0
        }
    };
    let mut rows = Vec::new();
    for sol in solutions {
        for (class, produced) in &sol.deployed_gva {
            let unmet = sol.unmet_gva[class];
            rows.push(GapRow {
                scope: GapScope::Class(*class),
                year: sol.year,
                produced_gva: *produced,
                unmet_gva: unmet,
                gap_ratio: ratio(unmet, *produced),
            });
        }
        for group in EquipmentGroup::ALL {
            let (mut produced, mut unmet) = (0.0, 0.0);
            for (class, p) in &sol.deployed_gva {
                if class.group() == group {
                    produced += p;
                    unmet += sol.unmet_gva[class];
                }
            }
            rows.push(GapRow {
                scope: GapScope::Group(group),
                year: sol.year,
                produced_gva: produced,
                unmet_gva: unmet,
                gap_ratio: ratio(unmet, produced),
            });
        }
        rows.push(GapRow {
            scope: GapScope::Aggregate,
            year: sol.year,
            produced_gva: sol.total_deployed(),
            unmet_gva: sol.total_unmet(),
            gap_ratio: ratio(sol.total_unmet(), sol.total_deployed()),
        });
    }
    rows
}
