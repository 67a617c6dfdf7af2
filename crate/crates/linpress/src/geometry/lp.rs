//! Dense two-phase simplex solver for the small linear programs that back the
//! polytope queries (membership, support, Chebyshev centers) and the
//! reachability feasibility tests.
//!
//! Problems here have at most a few hundred variables, so a dense tableau with
//! Gauss-Jordan pivots is adequate. Dantzig pricing is used first; after a
//! pivot-count threshold the solver falls back to Bland's rule, which cannot
//! cycle. If even Bland's rule exceeds its cap the solver reports
//! [`GeometryError::CycleLimit`].

use nalgebra::{DMatrix, DVector};

use super::GeometryError;

/// Feasibility / optimality tolerance used throughout the kernel.
pub const LP_TOL: f64 = 1e-9;

const PIVOT_TOL: f64 = 1e-11;
const DANTZIG_PIVOT_CAP: usize = 20_000;
const BLAND_PIVOT_CAP: usize = 200_000;

/// Constraint relation: `coeffs . x <= rhs` or `coeffs . x == rhs`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
}

#[derive(Clone, Debug)]
pub struct LpConstraint {
    pub coeffs: DVector<f64>,
    pub relation: Relation,
    pub rhs: f64,
}

impl LpConstraint {
    pub fn le(coeffs: DVector<f64>, rhs: f64) -> Self {
        Self { coeffs, relation: Relation::Le, rhs }
    }

    pub fn eq(coeffs: DVector<f64>, rhs: f64) -> Self {
        Self { coeffs, relation: Relation::Eq, rhs }
    }
}

/// A linear program over free variables with optional per-variable bounds.
///
/// `bounds` may be empty (all variables free) or one `(lower, upper)` pair per
/// variable.
#[derive(Clone, Debug)]
pub struct LpProblem {
    pub objective: DVector<f64>,
    pub constraints: Vec<LpConstraint>,
    pub bounds: Vec<(Option<f64>, Option<f64>)>,
    pub maximize: bool,
}

impl LpProblem {
    pub fn maximize(objective: DVector<f64>, constraints: Vec<LpConstraint>) -> Self {
        Self { objective, constraints, bounds: Vec::new(), maximize: true }
    }

    pub fn minimize(objective: DVector<f64>, constraints: Vec<LpConstraint>) -> Self {
        Self { objective, constraints, bounds: Vec::new(), maximize: false }
    }

    pub fn with_bounds(mut self, bounds: Vec<(Option<f64>, Option<f64>)>) -> Self {
        self.bounds = bounds;
        self
    }

    fn n_vars(&self) -> usize {
        self.objective.len()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum LpOutcome {
    Optimal { point: DVector<f64>, value: f64 },
    Infeasible,
    Unbounded,
}

/// How an original variable maps onto the nonnegative tableau variables.
#[derive(Clone, Copy, Debug)]
enum VarMap {
    /// `x = y + lower`
    Shifted { col: usize, lower: f64 },
    /// `x = upper - y`
    Mirrored { col: usize, upper: f64 },
    /// `x = y_plus - y_minus`
    Split { plus: usize, minus: usize },
}

/// Solve a linear program, returning the optimum or the correct
/// infeasible/unbounded status.
pub fn lp_solve(prob: &LpProblem) -> Result<LpOutcome, GeometryError> {
    let n = prob.n_vars();
    for c in &prob.constraints {
        if c.coeffs.len() != n {
            return Err(GeometryError::DimensionMismatch { expected: n, got: c.coeffs.len() });
        }
    }
    if !prob.bounds.is_empty() && prob.bounds.len() != n {
        return Err(GeometryError::DimensionMismatch { expected: n, got: prob.bounds.len() });
    }
    for &(lo, hi) in &prob.bounds {
        if let (Some(l), Some(h)) = (lo, hi) {
            if l > h {
                return Err(GeometryError::InvalidBounds { lower: l, upper: h });
            }
        }
    }

    // Map original variables onto nonnegative tableau variables.
    let mut maps = Vec::with_capacity(n);
    let mut n_cols = 0usize;
    let mut extra_rows: Vec<LpConstraint> = Vec::new();
    for j in 0..n {
        let (lo, hi) = if prob.bounds.is_empty() { (None, None) } else { prob.bounds[j] };
        match (lo, hi) {
            (Some(l), None) => {
                maps.push(VarMap::Shifted { col: n_cols, lower: l });
                n_cols += 1;
            }
            (Some(l), Some(h)) => {
                maps.push(VarMap::Shifted { col: n_cols, lower: l });
                // y <= h - l as an explicit row.
                let mut coeffs = DVector::zeros(n);
                coeffs[j] = 1.0;
                extra_rows.push(LpConstraint::le(coeffs, h));
                n_cols += 1;
            }
            (None, Some(h)) => {
                maps.push(VarMap::Mirrored { col: n_cols, upper: h });
                n_cols += 1;
            }
            (None, None) => {
                maps.push(VarMap::Split { plus: n_cols, minus: n_cols + 1 });
                n_cols += 2;
            }
        }
    }

    let all_rows: Vec<&LpConstraint> = prob.constraints.iter().chain(extra_rows.iter()).collect();
    let m = all_rows.len();

    // Rewrite each row over the nonnegative variables and normalize rhs >= 0.
    // After normalization a row is Le, Ge or Eq over y >= 0.
    #[derive(Clone, Copy, PartialEq)]
    enum Rel3 {
        Le,
        Ge,
        Eq,
    }
    let mut a = DMatrix::<f64>::zeros(m, n_cols);
    let mut b = DVector::<f64>::zeros(m);
    let mut rel = Vec::with_capacity(m);
    for (i, row) in all_rows.iter().enumerate() {
        let mut rhs = row.rhs;
        for j in 0..n {
            let cj = row.coeffs[j];
            if cj == 0.0 {
                continue;
            }
            match maps[j] {
                VarMap::Shifted { col, lower } => {
                    a[(i, col)] += cj;
                    rhs -= cj * lower;
                }
                VarMap::Mirrored { col, upper } => {
                    a[(i, col)] -= cj;
                    rhs -= cj * upper;
                }
                VarMap::Split { plus, minus } => {
                    a[(i, plus)] += cj;
                    a[(i, minus)] -= cj;
                }
            }
        }
        let mut r = match row.relation {
            Relation::Le => Rel3::Le,
            Relation::Eq => Rel3::Eq,
        };
        if rhs < 0.0 {
            for j in 0..n_cols {
                a[(i, j)] = -a[(i, j)];
            }
            rhs = -rhs;
            r = match r {
                Rel3::Le => Rel3::Ge,
                Rel3::Ge => Rel3::Le,
                Rel3::Eq => Rel3::Eq,
            };
        }
        b[i] = rhs;
        rel.push(r);
    }

    // Objective over y (sign chosen so the tableau always maximizes).
    let sign = if prob.maximize { 1.0 } else { -1.0 };
    let mut c = DVector::<f64>::zeros(n_cols);
    for j in 0..n {
        let cj = sign * prob.objective[j];
        match maps[j] {
            VarMap::Shifted { col, .. } => c[col] += cj,
            VarMap::Mirrored { col, .. } => c[col] -= cj,
            VarMap::Split { plus, minus } => {
                c[plus] += cj;
                c[minus] -= cj;
            }
        }
    }

    // Slack, surplus and artificial columns.
    let n_slack = rel.iter().filter(|r| **r == Rel3::Le).count();
    let n_surplus = rel.iter().filter(|r| **r == Rel3::Ge).count();
    let n_art = rel.iter().filter(|r| **r != Rel3::Le).count();
    let total = n_cols + n_slack + n_surplus + n_art;
    let mut tab = DMatrix::<f64>::zeros(m, total + 1);
    tab.view_mut((0, 0), (m, n_cols)).copy_from(&a);
    let mut basis = vec![usize::MAX; m];
    let mut col = n_cols;
    let art_start = n_cols + n_slack + n_surplus;
    let mut art_col = art_start;
    for i in 0..m {
        tab[(i, total)] = b[i];
        match rel[i] {
            Rel3::Le => {
                tab[(i, col)] = 1.0;
                basis[i] = col;
                col += 1;
            }
            Rel3::Ge => {
                tab[(i, col)] = -1.0;
                col += 1;
                tab[(i, art_col)] = 1.0;
                basis[i] = art_col;
                art_col += 1;
            }
            Rel3::Eq => {
                tab[(i, art_col)] = 1.0;
                basis[i] = art_col;
                art_col += 1;
            }
        }
    }

    let mut pivots = 0usize;

    // Phase 1: maximize -sum(artificials). The cost row is priced out over the
    // initial artificial basis.
    if n_art > 0 {
        let mut z = DVector::<f64>::zeros(total + 1);
        for j in art_start..total {
            z[j] = -1.0;
        }
        price_out(&tab, &basis, &mut z);
        let status = run_simplex(&mut tab, &mut basis, &mut z, total, &mut pivots)?;
        if status == SimplexStatus::Unbounded {
            // Cannot happen for a bounded-below phase-1 objective; treat as a
            // numerical failure.
            return Err(GeometryError::CycleLimit(pivots));
        }
        // With the elimination convention above, z[rhs] equals minus the
        // phase-1 objective, i.e. the remaining sum of artificials.
        if z[total] > LP_TOL * (1.0 + b.amax()) {
            return Ok(LpOutcome::Infeasible);
        }
        // Drive remaining artificials out of the basis where possible.
        for i in 0..m {
            if basis[i] >= art_start {
                let mut entered = false;
                for j in 0..art_start {
                    if tab[(i, j)].abs() > 1e-8 {
                        pivot(&mut tab, &mut basis, i, j, &mut z);
                        entered = true;
                        break;
                    }
                }
                if !entered {
                    // Redundant row: neutralize it.
                    for j in 0..=total {
                        tab[(i, j)] = 0.0;
                    }
                }
            }
        }
    }

    // Phase 2: freeze artificial columns at zero and optimize the real cost.
    let mut z = DVector::<f64>::zeros(total + 1);
    for j in 0..n_cols {
        z[j] = c[j];
    }
    price_out(&tab, &basis, &mut z);
    for j in art_start..total {
        z[j] = f64::NEG_INFINITY; // never enters
    }
    let status = run_simplex(&mut tab, &mut basis, &mut z, art_start, &mut pivots)?;
    if status == SimplexStatus::Unbounded {
        return Ok(LpOutcome::Unbounded);
    }

    // Recover the original point.
    let mut y = DVector::<f64>::zeros(total);
    for i in 0..m {
        if basis[i] != usize::MAX && basis[i] < total {
            y[basis[i]] = tab[(i, total)];
        }
    }
    let mut x = DVector::<f64>::zeros(n);
    for j in 0..n {
        x[j] = match maps[j] {
            VarMap::Shifted { col, lower } => y[col] + lower,
            VarMap::Mirrored { col, upper } => upper - y[col],
            VarMap::Split { plus, minus } => y[plus] - y[minus],
        };
    }
    let value = prob.objective.dot(&x);
    Ok(LpOutcome::Optimal { point: x, value })
}

#[derive(PartialEq)]
enum SimplexStatus {
    Optimal,
    Unbounded,
}

/// Subtract multiples of the rows of basic columns so that the cost row has
/// zero reduced cost on the basis.
fn price_out(tab: &DMatrix<f64>, basis: &[usize], z: &mut DVector<f64>) {
    let m = tab.nrows();
    let w = tab.ncols();
    for i in 0..m {
        let bj = basis[i];
        if bj == usize::MAX {
            continue;
        }
        let factor = z[bj];
        if factor != 0.0 {
            for j in 0..w {
                z[j] -= factor * tab[(i, j)];
            }
        }
    }
}

fn pivot(tab: &mut DMatrix<f64>, basis: &mut [usize], row: usize, col: usize, z: &mut DVector<f64>) {
    let m = tab.nrows();
    let w = tab.ncols();
    let p = tab[(row, col)];
    for j in 0..w {
        tab[(row, j)] /= p;
    }
    tab[(row, col)] = 1.0;
    for i in 0..m {
        if i != row {
            let f = tab[(i, col)];
            if f != 0.0 {
                for j in 0..w {
                    tab[(i, j)] -= f * tab[(row, j)];
                }
                tab[(i, col)] = 0.0;
            }
        }
    }
    let f = z[col];
    if f != 0.0 && f.is_finite() {
        for j in 0..w {
            if z[j].is_finite() {
                z[j] -= f * tab[(row, j)];
            }
        }
        z[col] = 0.0;
    }
    basis[row] = col;
}

/// Maximize the (already priced-out) cost row `z` over columns `0..n_enter`.
fn run_simplex(
    tab: &mut DMatrix<f64>,
    basis: &mut [usize],
    z: &mut DVector<f64>,
    n_enter: usize,
    pivots: &mut usize,
) -> Result<SimplexStatus, GeometryError> {
    let m = tab.nrows();
    let rhs_col = tab.ncols() - 1;
    loop {
        let bland = *pivots > DANTZIG_PIVOT_CAP;
        if *pivots > BLAND_PIVOT_CAP {
            return Err(GeometryError::CycleLimit(*pivots));
        }
        // Entering column.
        let mut enter = None;
        if bland {
            for j in 0..n_enter {
                if z[j] > LP_TOL {
                    enter = Some(j);
                    break;
                }
            }
        } else {
            let mut best = LP_TOL;
            for j in 0..n_enter {
                if z[j] > best {
                    best = z[j];
                    enter = Some(j);
                }
            }
        }
        let Some(col) = enter else {
            return Ok(SimplexStatus::Optimal);
        };
        // Ratio test.
        let mut leave: Option<usize> = None;
        let mut best_ratio = f64::INFINITY;
        for i in 0..m {
            let aij = tab[(i, col)];
            if aij > PIVOT_TOL {
                let ratio = tab[(i, rhs_col)] / aij;
                let better = ratio < best_ratio - 1e-12
                    || (ratio < best_ratio + 1e-12
                        && leave.is_some_and(|l| basis[i] < basis[l]));
                if better {
                    best_ratio = ratio;
                    leave = Some(i);
                }
            }
        }
        let Some(row) = leave else {
            return Ok(SimplexStatus::Unbounded);
        };
        pivot(tab, basis, row, col, z);
        *pivots += 1;
    }
}
