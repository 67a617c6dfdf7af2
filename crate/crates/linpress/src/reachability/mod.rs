//! Time-`k` reachable and controllable sets of the constrained linear system,
//! the time-reversed system, and the structure checks on the closures of
//! `R(0)` and `C(0)`.
//!
//! `R_k(0)` is built iteratively as `R_{k+1} = B U + A R_k` with hull pruning
//! after every Minkowski step, which keeps vertex counts roughly linear in
//! practice for planar systems. Explicit polytopes are limited to state
//! dimension <= 3; higher dimensions are served by LP membership queries.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::geometry::lp::{LP_TOL, LpConstraint, LpOutcome, LpProblem, lp_solve};
use crate::geometry::{self, ConvexPolytope, GeometryError};
use crate::spectral::{SpectralSplit, kalman_controllable, oblique_projection};

#[derive(Debug, Error)]
pub enum ReachError {
    #[error("geometry failure: {0}")]
    Geometry(#[from] GeometryError),
    #[error("matrix A must be square and invertible, |det A| = {0:e}")]
    SingularMatrix(f64),
    #[error("dimension mismatch: {0}")]
    Dimensions(String),
    #[error("control range must contain 0 strictly in its interior (margin {0:e})")]
    OriginNotInterior(f64),
    #[error("control value leaves the control range by {0:e}")]
    ControlOutOfRange(f64),
    #[error("explicit reachable sets require state dimension <= 3, got {0}; use reach_membership")]
    DimensionUnsupported(usize),
    #[error("horizon must be at least 1")]
    ZeroHorizon,
    #[error("system is not controllable (Kalman rank below state dimension)")]
    NotControllable,
}

/// Constrained linear control system `x_{k+1} = A x_k + B u_k`, `u_k in U`.
#[derive(Clone, Debug)]
pub struct LinearSystem {
    a: DMatrix<f64>,
    b: DMatrix<f64>,
    u: ConvexPolytope,
}

impl LinearSystem {
    /// Validates invertibility of `A`, dimension consistency, and that the
    /// control range contains the origin strictly (margin >= 1e-9).
    pub fn new(a: DMatrix<f64>, b: DMatrix<f64>, u: ConvexPolytope) -> Result<Self, ReachError> {
        if a.nrows() != a.ncols() {
            return Err(ReachError::Dimensions(format!(
                "A must be square, got {}x{}",
                a.nrows(),
                a.ncols()
            )));
        }
        if b.nrows() != a.nrows() {
            return Err(ReachError::Dimensions(format!(
                "B has {} rows but A is {}x{}",
                b.nrows(),
                a.nrows(),
                a.ncols()
            )));
        }
        if u.dim() != b.ncols() {
            return Err(ReachError::Dimensions(format!(
                "control range has dimension {} but B has {} columns",
                u.dim(),
                b.ncols()
            )));
        }
        let det = a.determinant();
        if det.abs() <= 1e-12 {
            return Err(ReachError::SingularMatrix(det.abs()));
        }
        let margin = origin_interior_margin(&u)?;
        if margin < 1e-9 {
            return Err(ReachError::OriginNotInterior(margin));
        }
        Ok(Self { a, b, u })
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b(&self) -> &DMatrix<f64> {
        &self.b
    }

    pub fn control_range(&self) -> &ConvexPolytope {
        &self.u
    }

    pub fn state_dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn control_dim(&self) -> usize {
        self.b.ncols()
    }

    pub fn is_kalman_controllable(&self) -> bool {
        kalman_controllable(&self.a, &self.b).controllable
    }

    /// Membership of a control value in `U` within tolerance 1e-9.
    pub fn control_admissible(&self, u: &DVector<f64>) -> Result<(), ReachError> {
        if u.len() != self.control_dim() {
            return Err(ReachError::Dimensions(format!(
                "control has length {} but the system has {} inputs",
                u.len(),
                self.control_dim()
            )));
        }
        let dist = if self.u.dim() <= 3 {
            -self.u.interior_margin(u)?.min(0.0)
        } else {
            self.u.linf_distance(u)?
        };
        if dist > LP_TOL {
            return Err(ReachError::ControlOutOfRange(dist));
        }
        Ok(())
    }
}

/// Interior margin of the origin inside `U` (positive when 0 is interior).
fn origin_interior_margin(u: &ConvexPolytope) -> Result<f64, ReachError> {
    let zero = DVector::zeros(u.dim());
    if u.dim() <= 3 {
        Ok(u.interior_margin(&zero)?)
    } else {
        // Cross-polytope probe: containment of +-r e_i certifies an inscribed
        // ball of radius r / sqrt(m).
        let m = u.dim();
        let r = 1e-9 * (m as f64).sqrt() * 2.0;
        for j in 0..m {
            for s in [-1.0, 1.0] {
                let mut p = DVector::zeros(m);
                p[j] = s * r;
                if !u.contains_point(&p, 0.0)? {
                    return Ok(0.0);
                }
            }
        }
        Ok(r / (m as f64).sqrt())
    }
}

/// One step of the dynamics; the control must lie in `U` within 1e-9.
pub fn step(sys: &LinearSystem, x: &DVector<f64>, u: &DVector<f64>) -> Result<DVector<f64>, ReachError> {
    sys.control_admissible(u)?;
    Ok(&sys.a * x + &sys.b * u)
}

/// State sequence under a control sequence, all controls validated against `U`.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub start: DVector<f64>,
    pub controls: Vec<DVector<f64>>,
    pub states: Vec<DVector<f64>>,
}

impl Trajectory {
    pub fn horizon(&self) -> usize {
        self.controls.len()
    }

    pub fn end(&self) -> &DVector<f64> {
        self.states.last().expect("states nonempty")
    }
}

/// Simulate the system from `x` under `controls`; `states[k]` is the state
/// after `k` steps (so `states[0] = x`).
pub fn trajectory(
    sys: &LinearSystem,
    x: &DVector<f64>,
    controls: &[DVector<f64>],
) -> Result<Trajectory, ReachError> {
    let mut states = Vec::with_capacity(controls.len() + 1);
    states.push(x.clone());
    for u in controls {
        let next = step(sys, states.last().unwrap(), u)?;
        states.push(next);
    }
    Ok(Trajectory { start: x.clone(), controls: controls.to_vec(), states })
}

/// Closed-form solution `A^k x + sum_i A^(k-1-i) B u_i` (used as an
/// independent check against the recursion).
pub fn solution_formula(sys: &LinearSystem, x: &DVector<f64>, controls: &[DVector<f64>]) -> DVector<f64> {
    let k = controls.len();
    let mut acc = matrix_power(&sys.a, k) * x;
    let mut power = DMatrix::identity(sys.state_dim(), sys.state_dim());
    for i in (0..k).rev() {
        acc += &power * &sys.b * &controls[i];
        power = &power * &sys.a;
    }
    acc
}

pub fn matrix_power(a: &DMatrix<f64>, k: usize) -> DMatrix<f64> {
    let mut out = DMatrix::identity(a.nrows(), a.ncols());
    for _ in 0..k {
        out = &out * a;
    }
    out
}

/// The time-reversed system with matrices `(A^-1, -A^-1 B)` and the same
/// control range. Running it forward traces the original system backward.
pub fn time_reversed(sys: &LinearSystem) -> Result<LinearSystem, ReachError> {
    let a_inv = sys
        .a
        .clone()
        .try_inverse()
        .ok_or_else(|| ReachError::SingularMatrix(sys.a.determinant().abs()))?;
    let b_rev = -&a_inv * &sys.b;
    LinearSystem::new(a_inv, b_rev, sys.u.clone())
}

/// `R_1(0) = B U` as an explicit polytope (state dimension <= 3).
pub fn reach_seed(sys: &LinearSystem) -> Result<ConvexPolytope, ReachError> {
    if sys.state_dim() > 3 {
        return Err(ReachError::DimensionUnsupported(sys.state_dim()));
    }
    Ok(geometry::linear_image(&sys.u, &sys.b)?)
}

/// One sweep of the reach recursion: `R_{k+1} = B U + A R_k`, hull-pruned.
pub fn reach_advance(
    sys: &LinearSystem,
    seed: &ConvexPolytope,
    prev: &ConvexPolytope,
) -> Result<ConvexPolytope, ReachError> {
    let stepped = geometry::linear_image(prev, &sys.a)?;
    Ok(geometry::minkowski_sum(seed, &stepped)?)
}

/// Reachable sets `R_1(0), ..., R_kmax(0)` as explicit polytopes
/// (state dimension <= 3).
pub fn reach_sequence(sys: &LinearSystem, k_max: usize) -> Result<Vec<ConvexPolytope>, ReachError> {
    if k_max == 0 {
        return Err(ReachError::ZeroHorizon);
    }
    let bu = reach_seed(sys)?;
    let mut out = Vec::with_capacity(k_max);
    out.push(bu.clone());
    for _ in 1..k_max {
        let next = reach_advance(sys, &bu, out.last().unwrap())?;
        out.push(next);
    }
    Ok(out)
}

/// Time-`k` reachable set from the origin.
pub fn reach_k(sys: &LinearSystem, k: usize) -> Result<ConvexPolytope, ReachError> {
    Ok(reach_sequence(sys, k)?.pop().expect("nonempty sequence"))
}

/// Time-`k` controllable-to-zero sets, computed as reachable sets of the
/// time-reversed system.
pub fn control_sequence(sys: &LinearSystem, k_max: usize) -> Result<Vec<ConvexPolytope>, ReachError> {
    reach_sequence(&time_reversed(sys)?, k_max)
}

pub fn control_k(sys: &LinearSystem, k: usize) -> Result<ConvexPolytope, ReachError> {
    Ok(control_sequence(sys, k)?.pop().expect("nonempty sequence"))
}

/// LP feasibility of steering `0` to `x` in exactly `k` steps; works in any
/// state dimension. Controls are encoded by convex coefficients over the
/// vertices of `U`.
pub fn reach_membership(sys: &LinearSystem, x: &DVector<f64>, k: usize) -> Result<bool, ReachError> {
    Ok(reach_linf_residual(sys, x, k)? <= LP_TOL)
}

/// Max-norm distance between `x` and the time-`k` reachable set, through the
/// same LP (zero iff reachable).
pub fn reach_linf_residual(sys: &LinearSystem, x: &DVector<f64>, k: usize) -> Result<f64, ReachError> {
    if k == 0 {
        return Err(ReachError::ZeroHorizon);
    }
    let d = sys.state_dim();
    if x.len() != d {
        return Err(ReachError::Dimensions(format!(
            "target has length {} but the state dimension is {d}",
            x.len()
        )));
    }
    let uverts = sys.u.vertices();
    let nv = uverts.len();
    // Variables: lambda_{i,j} >= 0 for step i and vertex j, plus slack t.
    let n = k * nv + 1;
    let mut cons = Vec::with_capacity(k + 2 * d);
    for i in 0..k {
        let mut ones = DVector::zeros(n);
        for j in 0..nv {
            ones[i * nv + j] = 1.0;
        }
        cons.push(LpConstraint::eq(ones, 1.0));
    }
    // sum_i A^{k-1-i} B u_i = x within t (max norm).
    let mut images: Vec<Vec<DVector<f64>>> = Vec::with_capacity(k);
    let mut power = DMatrix::identity(d, d);
    let mut step_images: Vec<DMatrix<f64>> = Vec::with_capacity(k);
    for _ in 0..k {
        step_images.push(&power * &sys.b);
        power = &power * &sys.a;
    }
    step_images.reverse(); // index i now carries A^{k-1-i} B
    for im in &step_images {
        images.push(uverts.iter().map(|u| im * u).collect());
    }
    for r in 0..d {
        let mut plus = DVector::zeros(n);
        let mut minus = DVector::zeros(n);
        for i in 0..k {
            for j in 0..nv {
                plus[i * nv + j] = images[i][j][r];
                minus[i * nv + j] = -images[i][j][r];
            }
        }
        plus[n - 1] = -1.0;
        minus[n - 1] = -1.0;
        cons.push(LpConstraint::le(plus, x[r]));
        cons.push(LpConstraint::le(minus, -x[r]));
    }
    let mut obj = DVector::zeros(n);
    obj[n - 1] = 1.0;
    let bounds = vec![(Some(0.0), None); n];
    match lp_solve(&LpProblem::minimize(obj, cons).with_bounds(bounds))? {
        LpOutcome::Optimal { value, .. } => Ok(value.max(0.0)),
        _ => Err(ReachError::Geometry(GeometryError::CycleLimit(0))),
    }
}

/// Structure diagnostics for the closures of `R(0)` and `C(0)`: the stable
/// projection of `R_k(0)` must stay bounded (it converges to the compact
/// factor `K`), while the inradius of its unstable+center projection grows
/// without bound whenever that subspace is nontrivial; dually for `C_k(0)`
/// with the roles of stable and unstable swapped.
#[derive(Clone, Debug)]
pub struct StructureReport {
    pub k_values: Vec<usize>,
    /// sup of the stable-projection norms over the vertices of `R_k(0)`.
    pub reach_stable_sup: Vec<f64>,
    /// Inradius of the `E^u + E^c` projection of `R_k(0)` (within that
    /// subspace).
    pub reach_uc_inradius: Vec<f64>,
    /// sup of the unstable-projection norms over the vertices of `C_k(0)`.
    pub control_unstable_sup: Vec<f64>,
    /// Inradius of the `E^s + E^c` projection of `C_k(0)`.
    pub control_sc_inradius: Vec<f64>,
}

pub fn structure_check(
    sys: &LinearSystem,
    split: &SpectralSplit,
    k_max: usize,
) -> Result<StructureReport, ReachError> {
    if !sys.is_kalman_controllable() {
        return Err(ReachError::NotControllable);
    }
    let d = sys.state_dim();
    let d_s = split.d_s;
    let d_uc = d - d_s;
    let d_u = split.d_u;
    let d_sc = d - d_u;

    // Bases: ascending columns give E^s first and E^sc leading; we also need
    // E^uc = trailing columns only as a projection target, so build it from
    // the unstable-first basis joined with the center basis through the
    // oblique projection helper.
    let basis_s = &split.basis_s;
    let basis_sc = split.basis_asc.columns(0, d_sc).into_owned();
    let mut basis_uc = DMatrix::zeros(d, d_uc);
    basis_uc.view_mut((0, 0), (d, d_u)).copy_from(&split.basis_u);
    basis_uc.view_mut((0, d_u), (d, split.d_c)).copy_from(&split.basis_c);
    // Orthonormalize the concatenation so coordinates are well scaled.
    let basis_uc = if d_uc > 0 { crate::spectral::schur_orthonormalize(&basis_uc) } else { basis_uc };

    let proj_s = oblique_projection(basis_s, &basis_uc)
        .map_err(|_| ReachError::Dimensions("projection construction failed".into()))?;
    let proj_uc = oblique_projection(&basis_uc, basis_s)
        .map_err(|_| ReachError::Dimensions("projection construction failed".into()))?;
    let proj_u = &split.projection_u;
    let proj_sc = DMatrix::identity(d, d) - proj_u;

    let reach = reach_sequence(sys, k_max)?;
    let ctrl = control_sequence(sys, k_max)?;

    let mut report = StructureReport {
        k_values: (1..=k_max).collect(),
        reach_stable_sup: Vec::with_capacity(k_max),
        reach_uc_inradius: Vec::with_capacity(k_max),
        control_unstable_sup: Vec::with_capacity(k_max),
        control_sc_inradius: Vec::with_capacity(k_max),
    };

    for poly in &reach {
        report.reach_stable_sup.push(projection_sup(poly, &proj_s));
        report.reach_uc_inradius.push(projected_inradius(poly, &proj_uc, &basis_uc)?);
    }
    for poly in &ctrl {
        report.control_unstable_sup.push(projection_sup(poly, proj_u));
        report.control_sc_inradius.push(projected_inradius(poly, &proj_sc, &basis_sc)?);
    }
    Ok(report)
}

fn projection_sup(poly: &ConvexPolytope, proj: &DMatrix<f64>) -> f64 {
    poly.vertices().iter().map(|v| (proj * v).norm()).fold(0.0, f64::max)
}

/// Inradius of the projection of `poly` onto a subspace, measured within the
/// subspace coordinates of `basis`.
fn projected_inradius(
    poly: &ConvexPolytope,
    proj: &DMatrix<f64>,
    basis: &DMatrix<f64>,
) -> Result<f64, ReachError> {
    let k = basis.ncols();
    if k == 0 {
        return Ok(0.0);
    }
    let coords: Vec<DVector<f64>> =
        poly.vertices().iter().map(|v| basis.transpose() * (proj * v)).collect();
    let hull = geometry::convex_hull(&coords, k)?;
    Ok(hull.inradius()?)
}
