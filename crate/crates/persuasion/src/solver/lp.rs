//! A thin linear-programming wrapper: sparse rows, variable bounds, and a
//! max/min objective, solved through an interior-point conic backend.
//!
//! The conic form minimizes qᵀx subject to Ax + s = b with s in a product
//! cone. Equality rows map to the zero cone, inequality rows and finite
//! variable bounds to the nonnegative cone (a·x ≤ r becomes a·x + s = r with
//! s ≥ 0; a·x ≥ r is negated first). Every accepted solution is re-checked
//! against the original rows — a solve that stops early (iteration limit,
//! slow progress) is still accepted when its iterate satisfies all
//! constraints within the feasibility tolerance, and rejected otherwise.
//!
//! Interior-point optima of degenerate programs land in the relative
//! interior of the optimal face rather than at a vertex; callers that need a
//! distribution must be content with any optimal point.

use crate::tolerances;
use clarabel::algebra::CscMatrix;
use clarabel::solver::{
    DefaultSettingsBuilder, DefaultSolver, IPSolver, SolverStatus, SupportedConeT,
};
use thiserror::Error;

/// Failure modes of a linear-program solve.
#[derive(Debug, Error)]
pub enum LpError {
    /// The constraints admit no feasible point.
    #[error("linear program is infeasible")]
    Infeasible,
    /// The objective is unbounded over the feasible region.
    #[error("linear program is unbounded")]
    Unbounded,
    /// The backend stopped without a certified answer and its iterate fails
    /// the feasibility re-check.
    #[error("linear program solve failed numerically: {0}")]
    NumericalFailure(String),
}

/// Objective direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    /// Maximize the objective.
    Maximize,
    /// Minimize the objective.
    Minimize,
}

/// Row comparison operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cmp {
    /// a·x ≤ rhs
    Le,
    /// a·x ≥ rhs
    Ge,
    /// a·x = rhs
    Eq,
}

/// One sparse constraint row. Duplicate variable entries are summed.
#[derive(Debug, Clone)]
pub struct Constraint {
    /// Sparse coefficients (variable index, value).
    pub coeffs: Vec<(usize, f64)>,
    /// Comparison operator.
    pub cmp: Cmp,
    /// Right-hand side.
    pub rhs: f64,
}

/// A linear program over `n` variables with per-variable bounds.
#[derive(Debug, Clone)]
pub struct LinearProgram {
    /// Objective direction.
    pub sense: Sense,
    /// Dense objective vector.
    pub objective: Vec<f64>,
    /// Constraint rows.
    pub constraints: Vec<Constraint>,
    /// Per-variable lower bounds (−∞ for free).
    pub lower: Vec<f64>,
    /// Per-variable upper bounds (+∞ for free).
    pub upper: Vec<f64>,
}

/// An accepted solve: the optimal point, its objective in the original
/// sense, and backend statistics.
#[derive(Debug, Clone)]
pub struct LpSolution {
    /// Optimal (or accepted near-optimal) point.
    pub x: Vec<f64>,
    /// Objective value c·x in the program's own sense.
    pub objective: f64,
    /// Interior-point iterations spent.
    pub iterations: u64,
    /// Backend termination status, for diagnostics.
    pub status: String,
}

impl LinearProgram {
    /// A program over `n_vars` free variables with a zero objective.
    pub fn new(n_vars: usize, sense: Sense) -> Self {
        LinearProgram {
            sense,
            objective: vec![0.0; n_vars],
            constraints: Vec::new(),
            lower: vec![f64::NEG_INFINITY; n_vars],
            upper: vec![f64::INFINITY; n_vars],
        }
    }

    /// Number of variables.
    pub fn n_vars(&self) -> usize {
        self.objective.len()
    }

    /// Append a constraint row.
    pub fn push(&mut self, coeffs: Vec<(usize, f64)>, cmp: Cmp, rhs: f64) {
        self.constraints.push(Constraint { coeffs, cmp, rhs });
    }

    /// Worst violation of the original rows and bounds at `x` (0 when
    /// feasible).
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for c in &self.constraints {
            let ax: f64 = c.coeffs.iter().map(|&(i, v)| v * x[i]).sum();
            let violation = match c.cmp {
                Cmp::Le => ax - c.rhs,
                Cmp::Ge => c.rhs - ax,
                Cmp::Eq => (ax - c.rhs).abs(),
            };
            worst = worst.max(violation);
        }
        for i in 0..self.n_vars() {
            worst = worst.max(self.lower[i] - x[i]).max(x[i] - self.upper[i]);
        }
        worst
    }
}

/// Triplet accumulator for the conic constraint matrix, summing duplicates
/// on conversion.
struct Triplets {
    entries: Vec<(usize, usize, f64)>,
    rows: usize,
}

impl Triplets {
    fn new() -> Self {
        Triplets {
            entries: Vec::new(),
            rows: 0,
        }
    }

    /// Append one row of coefficients; returns nothing, rows count in order.
    fn push_row(&mut self, coeffs: impl IntoIterator<Item = (usize, f64)>) {
        let r = self.rows;
        for (col, val) in coeffs {
            if val != 0.0 {
                self.entries.push((r, col, val));
            }
        }
        self.rows += 1;
    }

    fn into_csc(mut self, n_cols: usize) -> CscMatrix<f64> {
        self.entries.sort_unstable_by_key(|&(row, col, _)| (col, row));
        // Merge duplicate (col, row) entries, now adjacent after the sort.
        let mut merged: Vec<(usize, usize, f64)> = Vec::with_capacity(self.entries.len());
        for (r, c, v) in self.entries.drain(..) {
            match merged.last_mut() {
                Some(&mut (lr, lc, ref mut lv)) if lr == r && lc == c => *lv += v,
                _ => merged.push((r, c, v)),
            }
        }
        let mut colptr = vec![0usize; n_cols + 1];
        let mut rowval: Vec<usize> = Vec::with_capacity(merged.len());
        let mut nzval: Vec<f64> = Vec::with_capacity(merged.len());
        for &(r, c, v) in &merged {
            colptr[c + 1] += 1;
            rowval.push(r);
            nzval.push(v);
        }
        for c in 0..n_cols {
            colptr[c + 1] += colptr[c];
        }
        CscMatrix::new(self.rows, n_cols, colptr, rowval, nzval)
    }
}

/// Solve a linear program.
///
/// Maps backend statuses conservatively: certified infeasibility and
/// unboundedness become [`LpError::Infeasible`] and [`LpError::Unbounded`];
/// early stops are accepted only when the iterate passes the feasibility
/// re-check at the shared tolerance; everything else is a
/// [`LpError::NumericalFailure`].
pub fn lp_solve(lp: &LinearProgram) -> Result<LpSolution, LpError> {
    let n = lp.n_vars();

    // Count conic rows: equalities first (zero cone), then inequalities and
    // finite bounds (nonnegative cone).
    let finite_bounds = (0..n)
        .map(|i| {
            usize::from(lp.lower[i].is_finite()) + usize::from(lp.upper[i].is_finite())
        })
        .sum::<usize>();
    let n_eq = lp.constraints.iter().filter(|c| c.cmp == Cmp::Eq).count();
    let n_ineq = lp.constraints.len() - n_eq + finite_bounds;

    if n_eq + n_ineq == 0 {
        // Unconstrained: the origin is optimal iff the objective is zero.
        if lp.objective.iter().all(|&c| c == 0.0) {
            return Ok(LpSolution {
                x: vec![0.0; n],
                objective: 0.0,
                iterations: 0,
                status: "Trivial".to_string(),
            });
        }
        return Err(LpError::Unbounded);
    }

    let mut a = Triplets::new();
    let mut b: Vec<f64> = Vec::with_capacity(n_eq + n_ineq);
    for c in lp.constraints.iter().filter(|c| c.cmp == Cmp::Eq) {
        a.push_row(c.coeffs.iter().copied());
        b.push(c.rhs);
    }
    for c in &lp.constraints {
        match c.cmp {
            Cmp::Eq => {}
            Cmp::Le => {
                a.push_row(c.coeffs.iter().copied());
                b.push(c.rhs);
            }
            Cmp::Ge => {
                a.push_row(c.coeffs.iter().map(|&(i, v)| (i, -v)));
                b.push(-c.rhs);
            }
        }
    }
    for i in 0..n {
        if lp.upper[i].is_finite() {
            a.push_row([(i, 1.0)]);
            b.push(lp.upper[i]);
        }
        if lp.lower[i].is_finite() {
            a.push_row([(i, -1.0)]);
            b.push(-lp.lower[i]);
        }
    }
    let a = a.into_csc(n);
    let p = CscMatrix::zeros((n, n));
    let q: Vec<f64> = match lp.sense {
        Sense::Minimize => lp.objective.clone(),
        Sense::Maximize => lp.objective.iter().map(|&c| -c).collect(),
    };
    let cones = [
        SupportedConeT::ZeroConeT(n_eq),
        SupportedConeT::NonnegativeConeT(n_ineq),
    ];
    let settings = DefaultSettingsBuilder::default()
        .verbose(false)
        .max_iter(500)
        .tol_gap_abs(1e-11)
        .tol_gap_rel(1e-11)
        .tol_feas(1e-11)
        .build()
        .map_err(|e| LpError::NumericalFailure(format!("settings: {e}")))?;
    let mut solver = DefaultSolver::new(&p, &q, &a, &b, &cones, settings);
    solver.solve();

    let status = solver.solution.status;
    match status {
        // Certified optimum, or an early stop whose iterate must still pass
        // the feasibility re-check below.
        SolverStatus::Solved
        | SolverStatus::AlmostSolved
        | SolverStatus::MaxIterations
        | SolverStatus::InsufficientProgress => {}
        SolverStatus::PrimalInfeasible | SolverStatus::AlmostPrimalInfeasible => {
            return Err(LpError::Infeasible)
        }
        SolverStatus::DualInfeasible | SolverStatus::AlmostDualInfeasible => {
            return Err(LpError::Unbounded)
        }
        _ => return Err(LpError::NumericalFailure(format!("status {status:?}"))),
    }

    let x = solver.solution.x.clone();
    let violation = lp.max_violation(&x);
    if !x.iter().all(|v| v.is_finite()) || violation > tolerances::LP_FEASIBILITY {
        return Err(LpError::NumericalFailure(format!(
            "status {status:?}, constraint violation {violation:.3e}"
        )));
    }
    let objective: f64 = lp.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
    Ok(LpSolution {
        x,
        objective,
        iterations: u64::from(solver.solution.iterations),
        status: format!("{status:?}"),
    })
}
