//! Dense two-phase primal simplex with Bland's rule and dual extraction.
//!
//! Problems here are tiny (tens of variables and rows), so the solver
//! favours transparency over sparsity: a dense tableau, an all-artificial
//! phase-1 start, and duals recovered by solving `B' y = c_B` against a
//! pristine copy of the standardized constraint matrix. Every solution
//! carries a primal-dual gap and a dual feasibility residual so callers can
//! certify optimality instead of trusting the pivot sequence.
//!
//! Orientation: the public interface maximizes. Internally the solver
//! minimizes the negated objective; signs are folded back on extraction.
//! Reported row duals are d(objective)/d(rhs) for the original rows.

use thiserror::Error;

/// Constraint sense.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

/// One constraint row: sparse coefficients over the structural variables.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct LpRow {
    pub coeffs: Vec<(usize, f64)>,
    pub relation: Relation,
    pub rhs: f64,
}

/// A maximization problem over nonnegative variables.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct LinearProgram {
    pub n_vars: usize,
    /// Objective coefficients, length `n_vars`.
    pub maximize: Vec<f64>,
    pub rows: Vec<LpRow>,
}

/// An optimal basic solution with certification data.
#[derive(Debug, Clone)]
pub struct LpSolution {
    /// Structural variable values.
    pub values: Vec<f64>,
    /// Objective value of the maximization problem.
    pub objective: f64,
    /// d(objective)/d(rhs) per original row (0 for redundant rows).
    pub row_duals: Vec<f64>,
    /// `|primal - dual| / (1 + |primal|)` at the claimed optimum.
    pub duality_gap: f64,
    /// Worst dual-feasibility violation, scaled by the objective magnitude.
    pub dual_infeasibility: f64,
    /// Simplex pivots across both phases.
    pub iterations: usize,
}

#[derive(Debug, Error)]
pub enum LpError {
    #[error("problem is infeasible (phase-1 residual {residual:.3e})")]
    Infeasible { residual: f64 },
    #[error("objective is unbounded above")]
    Unbounded,
    #[error("iteration limit {0} exceeded")]
    IterationLimit(usize),
    #[error("basis matrix numerically singular during dual extraction")]
    SingularBasis,
    #[error("malformed program: {0}")]
    BadModel(String),
}

const EPS_PIVOT: f64 = 1e-9;
const MAX_ITERATIONS: usize = 50_000;

/// Solves the program to proven optimality.
pub fn solve(lp: &LinearProgram) -> Result<LpSolution, LpError> {
    validate(lp)?;
    let n = lp.n_vars;
    let m = lp.rows.len();
    if m == 0 {
        if lp.maximize.iter().any(|c| *c > 0.0) {
            return Err(LpError::Unbounded);
        }
        return Ok(LpSolution {
            values: vec![0.0; n],
            objective: 0.0,
            row_duals: vec![],
            duality_gap: 0.0,
            dual_infeasibility: 0.0,
            iterations: 0,
        });
    }

    // Standardize: append one slack/surplus per inequality, flip rows with a
    // negative rhs, then give every row an artificial so the identity basis
    // is immediate.
    let n_slack = lp
        .rows
        .iter()
        .filter(|r| r.relation != Relation::Eq)
        .count();
    let art_start = n + n_slack;
    let total = art_start + m;
    let mut a = vec![vec![0.0; total]; m];
    let mut b = vec![0.0; m];
    let mut flip = vec![1.0; m];
    let mut slack = n;
    for (i, row) in lp.rows.iter().enumerate() {
        for (j, v) in &row.coeffs {
            a[i][*j] += v;
        }
        match row.relation {
            Relation::Le => {
                a[i][slack] = 1.0;
                slack += 1;
            }
            Relation::Ge => {
                a[i][slack] = -1.0;
                slack += 1;
            }
            Relation::Eq => {}
        }
        b[i] = row.rhs;
        if b[i] < 0.0 {
            for v in a[i].iter_mut() {
                *v = -*v;
            }
            b[i] = -b[i];
            flip[i] = -1.0;
        }
        a[i][art_start + i] = 1.0;
    }
    // Pristine copies for dual extraction after the tableau is chewed up.
    let a_orig = a.clone();
    let b_orig = b.clone();

    // Internal minimization costs: structural = -maximize, slacks 0.
    let mut cost = vec![0.0; total];
    for j in 0..n {
        cost[j] = -lp.maximize[j];
    }
    let cost_scale = 1.0 + cost.iter().fold(0.0f64, |mx, c| mx.max(c.abs()));
    let rhs_scale = 1.0 + b.iter().fold(0.0f64, |mx, v| mx.max(v.abs()));
    let eps_cost = 1e-9 * cost_scale;

    let mut basis: Vec<usize> = (art_start..total).collect();
    // Reduced-cost rows for both phases, kept in sync through every pivot so
    // phase 2 starts for free. Phase-1 cost is 1 on artificials.
    let mut d1 = vec![0.0; total];
    for (j, slot) in d1.iter_mut().enumerate() {
        let c1: f64 = if j >= art_start { 1.0 } else { 0.0 };
        let colsum: f64 = a.iter().map(|row| row[j]).sum();
        *slot = c1 - colsum;
    }
    let mut d2 = cost.clone();

    let mut iterations = 0usize;
    run_phase(
        &mut a, &mut b, &mut basis, &mut d1, &mut d2, Phase::One, total, &mut iterations,
    )?;

    let residual: f64 = basis
        .iter()
        .zip(&b)
        .filter(|(v, _)| **v >= art_start)
        .map(|(_, bi)| bi)
        .sum();
    if residual > 1e-7 * rhs_scale {
        return Err(LpError::Infeasible { residual });
    }

    // Drive leftover artificials out of the basis; rows where no structural
    // or slack column can take over are redundant and get dropped.
    let mut keep = vec![true; m];
    for r in 0..m {
        if basis[r] >= art_start {
            match (0..art_start).find(|&j| a[r][j].abs() > EPS_PIVOT) {
                Some(j) => pivot(&mut a, &mut b, &mut basis, &mut d1, &mut d2, r, j),
                None => keep[r] = false,
            }
        }
    }
    let active: Vec<usize> = (0..m).filter(|r| keep[*r]).collect();
    if active.len() < m {
        retain_rows(&mut a, &keep);
        retain_vec(&mut b, &keep);
        retain_vec(&mut basis, &keep);
    }

    run_phase(
        &mut a, &mut b, &mut basis, &mut d1, &mut d2, Phase::Two { art_start, eps_cost },
        total, &mut iterations,
    )?;

    // Extract the primal point.
    let mut x = vec![0.0; total];
    for (r, var) in basis.iter().enumerate() {
        x[*var] = b[r];
    }
    let values: Vec<f64> = x[..n].to_vec();
    let objective: f64 = lp
        .maximize
        .iter()
        .zip(&values)
        .map(|(c, v)| c * v)
        .sum();

    // Duals: solve B' y = c_B on the pristine standardized system.
    let mb = basis.len();
    let mut bt = vec![vec![0.0; mb]; mb];
    let mut cb = vec![0.0; mb];
    for (k, var) in basis.iter().enumerate() {
        for (i, &orig_row) in active.iter().enumerate() {
            // Row k of B' is column `var` of A over the active rows.
            bt[k][i] = a_orig[orig_row][*var];
        }
        cb[k] = cost[*var];
    }
    let y = solve_refined(&bt, &cb).ok_or(LpError::SingularBasis)?;

    let primal_internal: f64 = cost.iter().zip(&x).map(|(c, v)| c * v).sum();
    let dual_internal: f64 = active
        .iter()
        .enumerate()
        .map(|(i, &orig_row)| b_orig[orig_row] * y[i])
        .sum();
    let duality_gap = (primal_internal - dual_internal).abs() / (1.0 + primal_internal.abs());
    let mut dual_infeasibility = 0.0f64;
    for j in 0..art_start {
        if basis.contains(&j) {
            continue;
        }
        let reduced: f64 = cost[j]
            - active
                .iter()
                .enumerate()
                .map(|(i, &orig_row)| y[i] * a_orig[orig_row][j])
                .sum::<f64>();
        dual_infeasibility = dual_infeasibility.max(-reduced / cost_scale);
    }

    let mut row_duals = vec![0.0; m];
    for (i, &orig_row) in active.iter().enumerate() {
        row_duals[orig_row] = -flip[orig_row] * y[i];
    }

    Ok(LpSolution {
        values,
        objective,
        row_duals,
        duality_gap,
        dual_infeasibility: dual_infeasibility.max(0.0),
        iterations,
    })
}

fn validate(lp: &LinearProgram) -> Result<(), LpError> {
    if lp.maximize.len() != lp.n_vars {
        return Err(LpError::BadModel(format!(
            "objective has {} coefficients for {} variables",
            lp.maximize.len(),
            lp.n_vars
        )));
    }
    if lp.maximize.iter().any(|c| !c.is_finite()) {
        return Err(LpError::BadModel("non-finite objective coefficient".into()));
    }
    for (i, row) in lp.rows.iter().enumerate() {
        if !row.rhs.is_finite() {
            return Err(LpError::BadModel(format!("row {i}: non-finite rhs")));
        }
        for (j, v) in &row.coeffs {
            if *j >= lp.n_vars {
                return Err(LpError::BadModel(format!(
                    "row {i}: variable index {j} out of range"
                )));
            }
            if !v.is_finite() {
                return Err(LpError::BadModel(format!("row {i}: non-finite coefficient")));
            }
        }
    }
    Ok(())
}

enum Phase {
    One,
    Two { art_start: usize, eps_cost: f64 },
}

#[allow(clippy::too_many_arguments)]
fn run_phase(
    a: &mut [Vec<f64>],
    b: &mut Vec<f64>,
    basis: &mut [usize],
    d1: &mut [f64],
    d2: &mut [f64],
    phase: Phase,
    total: usize,
    iterations: &mut usize,
) -> Result<(), LpError> {
    loop {
        // Bland's rule: lowest-index improving column, lowest-index basis
        // variable on ratio ties. Slow but cycle-proof and deterministic.
        let (reduced, limit, eps): (&[f64], usize, f64) = match phase {
            Phase::One => (d1, total, 1e-9),
            Phase::Two { art_start, eps_cost } => (d2, art_start, eps_cost),
        };
        let entering = (0..limit).find(|&j| reduced[j] < -eps);
        let Some(j) = entering else {
            return Ok(());
        };
        let mut leaving: Option<(f64, usize, usize)> = None;
        for (r, row) in a.iter().enumerate() {
            if row[j] > EPS_PIVOT {
                let ratio = b[r] / row[j];
                let candidate = (ratio, basis[r], r);
                leaving = Some(match leaving {
                    None => candidate,
                    Some(best) => {
                        if ratio < best.0 - 1e-12
                            || ((ratio - best.0).abs() <= 1e-12 && basis[r] < best.1)
                        {
                            candidate
                        } else {
                            best
                        }
                    }
                });
            }
        }
        let Some((_, _, r)) = leaving else {
            return Err(LpError::Unbounded);
        };
        pivot(a, b, basis, d1, d2, r, j);
        *iterations += 1;
        if *iterations > MAX_ITERATIONS {
            return Err(LpError::IterationLimit(MAX_ITERATIONS));
        }
    }
}

fn pivot(
    a: &mut [Vec<f64>],
    b: &mut [f64],
    basis: &mut [usize],
    d1: &mut [f64],
    d2: &mut [f64],
    r: usize,
    jc: usize,
) {
    let piv = a[r][jc];
    for v in a[r].iter_mut() {
        *v /= piv;
    }
    b[r] /= piv;
    let pivot_row = a[r].clone();
    let pivot_rhs = b[r];
    for (i, row) in a.iter_mut().enumerate() {
        if i == r {
            continue;
        }
        let f = row[jc];
        if f != 0.0 {
            for (v, p) in row.iter_mut().zip(&pivot_row) {
                *v -= f * p;
            }
            row[jc] = 0.0;
            b[i] -= f * pivot_rhs;
        }
    }
    for d in [d1, d2] {
        let f = d[jc];
        if f != 0.0 {
            for (v, p) in d.iter_mut().zip(&pivot_row) {
                *v -= f * p;
            }
            d[jc] = 0.0;
        }
    }
    basis[r] = jc;
}

fn retain_rows(a: &mut Vec<Vec<f64>>, keep: &[bool]) {
    let mut it = keep.iter();
    a.retain(|_| *it.next().unwrap());
}

fn retain_vec<T>(v: &mut Vec<T>, keep: &[bool]) {
    let mut it = keep.iter();
    v.retain(|_| *it.next().unwrap());
}

/// Gaussian elimination with partial pivoting; consumes its inputs.
/// Solves `m x = rhs` and polishes the answer with two rounds of
/// fixed-precision iterative refinement. Degenerate optima leave the basis
/// near-singular, and the raw elimination residual — harmless on its own —
/// gets multiplied by the cost scale when the duals certify a big-M solve;
/// refinement pushes it back to rounding level.
fn solve_refined(m: &[Vec<f64>], rhs: &[f64]) -> Option<Vec<f64>> {
    let mut work = m.to_vec();
    let mut b = rhs.to_vec();
    let mut x = solve_dense(&mut work, &mut b)?;
    for _ in 0..2 {
        let mut residual: Vec<f64> = m
            .iter()
            .zip(rhs)
            .map(|(row, want)| {
                row.iter().zip(&x).map(|(a, v)| a * v).sum::<f64>() - want
            })
            .collect();
        if residual.iter().all(|r| *r == 0.0) {
            break;
        }
        work = m.to_vec();
        let delta = solve_dense(&mut work, &mut residual)?;
        for (xi, d) in x.iter_mut().zip(&delta) {
            *xi -= d;
        }
    }
    Some(x)
}

fn solve_dense(m: &mut [Vec<f64>], rhs: &mut [f64]) -> Option<Vec<f64>> {
    let n = rhs.len();
    for col in 0..n {
        let pivot_row = (col..n).max_by(|&i, &j| {
            m[i][col].abs().partial_cmp(&m[j][col].abs()).unwrap()
        })?;
        if m[pivot_row][col].abs() < 1e-12 {
            return None;
        }
        m.swap(col, pivot_row);
        rhs.swap(col, pivot_row);
        for row in (col + 1)..n {
            let f = m[row][col] / m[col][col];
            if f != 0.0 {
                for k in col..n {
                    m[row][k] -= f * m[col][k];
                }
                rhs[row] -= f * rhs[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut acc = rhs[row];
        for col in (row + 1)..n {
            acc -= m[row][col] * x[col];
        }
        x[row] = acc / m[row][row];
    }
    Some(x)
}
