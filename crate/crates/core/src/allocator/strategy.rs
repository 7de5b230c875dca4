//! Pluggable solve strategies for the yearly allocation model.
//!
//! Both strategies answer the same lexicographic question — maximize the
//! bundle level, then the weighted normalized production — and must agree
//! on the result to tight tolerance. They differ in how they encode the
//! lexicographic order, which makes each a practical cross-check on the
//! other. Strategies register by name; configuration and the CLI select
//! them with [`strategy`].

use super::lp::{self, LpSolution};
use super::{
    finalize, lp_failure, AllocationProblem, AllocationSolution, AllocatorError, ModelContext,
    BIG_M, BUNDLE_SLACK,
};

/// A named way of solving one year's allocation problem.
pub trait SolveStrategy: Send + Sync {
    /// Registry name, e.g. `"two-phase"`.
    fn name(&self) -> &'static str;

    fn solve(&self, problem: &AllocationProblem) -> Result<AllocationSolution, AllocatorError>;
}

/// True lexicographic solve: maximize `S`, pin it with a floor row, then
/// maximize the weighted sum of normalized production.
#[derive(Debug, Clone, Copy)]
pub struct TwoPhaseLex {
    /// Relative slack applied to the phase-1 optimum when pinning `S`, so
    /// floating-point noise cannot make phase 2 infeasible.
    pub bundle_slack: f64,
}

impl Default for TwoPhaseLex {
    fn default() -> TwoPhaseLex {
        TwoPhaseLex {
            bundle_slack: BUNDLE_SLACK,
        }
    }
}

impl SolveStrategy for TwoPhaseLex {
    fn name(&self) -> &'static str {
        "two-phase"
    }

    fn solve(&self, problem: &AllocationProblem) -> Result<AllocationSolution, AllocatorError> {
        let ctx = ModelContext::build(problem)?;
        let phase1 = ctx.program(&problem.bom, ctx.bundle_objective(), None);
        let sol1 = lp::solve(&phase1).map_err(|e| lp_failure(problem.year, e))?;
        let bundle = sol1.values[ctx.s()].max(0.0);
        let floor = bundle * (1.0 - self.bundle_slack);
        let phase2 = ctx.program(
            &problem.bom,
            ctx.weighted_objective(),
            Some(ctx.floor_row(floor)),
        );
        let sol2 = lp::solve(&phase2).map_err(|e| lp_failure(problem.year, e))?;
        let gap = sol1.duality_gap.max(sol2.duality_gap);
        let dual_infeas = sol1.dual_infeasibility.max(sol2.dual_infeasibility);
        // Phase 2 may park the bundle anywhere down to the floor.
        let bundle_tol = 1e-9 + 2.0 * self.bundle_slack * bundle;
        finalize(
            problem,
            &ctx,
            &sol2.values,
            bundle,
            bundle_tol,
            gap,
            dual_infeas,
            self.name(),
        )
    }
}

/// Single solve with the bundle folded into the objective at a large
/// weight. With weights bounded by ~1e4 and normalized production bounded
/// by demand, `M = 1e9` dominates any achievable weighted sum, so the
/// composite optimum matches the lexicographic one to the solver tolerance.
#[derive(Debug, Clone, Copy)]
pub struct BigMComposite {
    pub big_m: f64,
}

impl Default for BigMComposite {
    fn default() -> BigMComposite {
        BigMComposite { big_m: BIG_M }
    }
}

impl SolveStrategy for BigMComposite {
    fn name(&self) -> &'static str {
        "big-m"
    }

    fn solve(&self, problem: &AllocationProblem) -> Result<AllocationSolution, AllocatorError> {
        let ctx = ModelContext::build(problem)?;
        let program = ctx.program(&problem.bom, ctx.composite_objective(self.big_m), None);
        let sol: LpSolution = lp::solve(&program).map_err(|e| lp_failure(problem.year, e))?;
        let bundle = sol.values[ctx.s()].max(0.0);
        finalize(
            problem,
            &ctx,
            &sol.values,
            bundle,
            1e-9,
            sol.duality_gap,
            sol.dual_infeasibility,
            self.name(),
        )
    }
}

fn make_two_phase() -> Box<dyn SolveStrategy> {
    Box::new(TwoPhaseLex::default())
}

fn make_big_m() -> Box<dyn SolveStrategy> {
    Box::new(BigMComposite::default())
}

/// Name → constructor registry. Order here is the order reported to users.
const REGISTRY: &[(&str, fn() -> Box<dyn SolveStrategy>)] =
    &[("two-phase", make_two_phase), ("big-m", make_big_m)];

/// All registered strategy names, in registry order.
pub fn strategy_names() -> Vec<&'static str> {
    REGISTRY.iter().map(|(name, _)| *name).collect()
}

/// Looks a strategy up by name.
pub fn strategy(name: &str) -> Result<Box<dyn SolveStrategy>, AllocatorError> {
    REGISTRY
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, make)| make())
        .ok_or_else(|| AllocatorError::UnknownStrategy {
            name: name.to_string(),
            available: strategy_names().join(", "),
        })
}

/// The strategy used when none is configured.
pub fn default_strategy() -> Box<dyn SolveStrategy> {
    make_two_phase()
}
