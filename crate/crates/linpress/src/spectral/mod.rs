//! Eigenstructure of the system matrix `A`: classification of the spectrum
//! into stable/center/unstable parts, orthonormal bases of the invariant
//! subspaces `E^s`, `E^c`, `E^u`, the oblique projection onto `E^u`, Lyapunov
//! groups by eigenvalue modulus, the unstable log-determinant and the Kalman
//! controllability test.
//!
//! Subspace bases come from an orthogonally reordered real Schur form rather
//! than a Jordan form: swapping adjacent diagonal blocks with orthogonal
//! similarity transforms is numerically stable, and any `A`-invariant
//! splitting serves the downstream constructions.

mod schur;

use nalgebra::{Complex, DMatrix, DVector};
use thiserror::Error;

pub use schur::reorder_schur_by;
use schur::{SchurBlock, ordered_real_schur, schur_blocks};

/// Default band half-width around modulus 1 for center classification.
pub const DEFAULT_TOL_CENTER: f64 = 1e-8;

/// Relative tolerance for merging eigenvalue moduli into one Lyapunov group.
pub const LYAPUNOV_GROUP_TOL: f64 = 1e-8;

#[derive(Debug, Error)]
pub enum SpectralError {
    #[error("matrix is singular (|det A| = {0:e} <= 1e-12)")]
    SingularMatrix(f64),
    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("tol_center {0} outside (0, 0.5)")]
    InvalidCenterTolerance(f64),
    #[error(
        "eigenvalue modulus {modulus} sits within {gap:e} of the center band edge \
         (tol_center {tol_center}); classification is ill conditioned"
    )]
    IllConditionedSplit { modulus: f64, gap: f64, tol_center: f64 },
    #[error("Schur iteration failed to converge")]
    SchurFailed,
}

/// One eigenvalue (conjugate pairs stored once, `im > 0`) with its algebraic
/// multiplicity.
#[derive(Clone, Debug, PartialEq)]
pub struct Eigenvalue {
    pub re: f64,
    pub im: f64,
    pub multiplicity: usize,
    /// True when the entry stands for a conjugate pair (contributes twice its
    /// multiplicity to the state dimension).
    pub conjugate_pair: bool,
}

impl Eigenvalue {
    pub fn modulus(&self) -> f64 {
        (self.re * self.re + self.im * self.im).sqrt()
    }

    /// Real dimensions contributed: multiplicity, doubled for pairs.
    pub fn real_dim(&self) -> usize {
        self.multiplicity * if self.conjugate_pair { 2 } else { 1 }
    }
}

/// The spectrum of `A` with multiplicities.
#[derive(Clone, Debug)]
pub struct Spectrum {
    pub eigenvalues: Vec<Eigenvalue>,
}

impl Spectrum {
    pub fn total_dim(&self) -> usize {
        self.eigenvalues.iter().map(Eigenvalue::real_dim).sum()
    }

    /// `sum n_lambda * max(0, log |lambda|)` over the full spectrum.
    pub fn unstable_log_det(&self) -> f64 {
        self.eigenvalues
            .iter()
            .map(|e| e.real_dim() as f64 * e.modulus().ln().max(0.0))
            .sum()
    }
}

/// A Lyapunov space: all generalized eigenspaces sharing one modulus.
#[derive(Clone, Copy, Debug)]
pub struct LyapunovGroup {
    pub modulus: f64,
    pub dim: usize,
}

/// Invariant-subspace splitting of the state space with respect to `A`.
#[derive(Clone, Debug)]
pub struct SpectralSplit {
    pub spectrum: Spectrum,
    pub d_s: usize,
    pub d_c: usize,
    pub d_u: usize,
    /// Orthonormal basis of the stable subspace (d x d_s).
    pub basis_s: DMatrix<f64>,
    /// Orthonormal basis of the center subspace (d x d_c).
    pub basis_c: DMatrix<f64>,
    /// Orthonormal basis of the unstable subspace (d x d_u).
    pub basis_u: DMatrix<f64>,
    /// Projection onto `E^u` along `E^s + E^c` (d x d).
    pub projection_u: DMatrix<f64>,
    /// Lyapunov groups with strictly increasing moduli; dims sum to d.
    pub lyapunov_groups: Vec<LyapunovGroup>,
    /// `log |det A^+| = sum n_lambda * max(0, log |lambda|)`.
    pub log_unstable_det: f64,
    pub tol_center: f64,
    /// Orthogonal Schur basis ordered by increasing eigenvalue modulus. The
    /// leading `d_s` columns span `E^s`, the leading `d_s + d_c` span
    /// `E^{sc}`, and the column ranges in `group_offsets` correspond to the
    /// Lyapunov groups.
    pub basis_asc: DMatrix<f64>,
    /// Quasi-triangular factor belonging to `basis_asc`.
    pub schur_asc: DMatrix<f64>,
    /// `lyapunov_groups.len() + 1` offsets delimiting group columns in
    /// `basis_asc`.
    pub group_offsets: Vec<usize>,
}

impl SpectralSplit {
    pub fn dim(&self) -> usize {
        self.d_s + self.d_c + self.d_u
    }

    pub fn unstable_log_det(&self) -> f64 {
        self.log_unstable_det
    }

    pub fn is_hyperbolic(&self) -> bool {
        self.d_c == 0
    }
}

/// True iff the matrix has no eigenvalue within `tol_center` of modulus 1.
pub fn is_hyperbolic(split: &SpectralSplit) -> bool {
    split.is_hyperbolic()
}

pub fn unstable_log_det(split: &SpectralSplit) -> f64 {
    split.log_unstable_det
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Class {
    Stable,
    Center,
    Unstable,
}

fn classify(modulus: f64, tol_center: f64) -> Class {
    if modulus < 1.0 - tol_center {
        Class::Stable
    } else if modulus > 1.0 + tol_center {
        Class::Unstable
    } else {
        Class::Center
    }
}

/// Compute the stable/center/unstable splitting of `A`.
///
/// Eigenvalues with `||lambda| - 1| <= tol_center` count as center.
/// Fails with [`SpectralError::IllConditionedSplit`] when an eigenvalue
/// modulus falls within `tol_center / 10` of a band edge, since the
/// classification would then flip under perturbations smaller than the
/// tolerance itself.
///
/// # Examples
/// ```
/// use nalgebra::DMatrix;
/// let a = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 0.5]);
/// let split = linpress::spectral_split(&a, 1e-8).unwrap();
/// assert!(split.is_hyperbolic());
/// assert_eq!((split.d_s, split.d_c, split.d_u), (1, 0, 1));
/// assert!((split.unstable_log_det() - 2f64.ln()).abs() < 1e-12);
/// ```
pub fn spectral_split(a: &DMatrix<f64>, tol_center: f64) -> Result<SpectralSplit, SpectralError> {
    if a.nrows() != a.ncols() {
        return Err(SpectralError::NotSquare { rows: a.nrows(), cols: a.ncols() });
    }
    if !(0.0..0.5).contains(&tol_center) || tol_center == 0.0 {
        return Err(SpectralError::InvalidCenterTolerance(tol_center));
    }
    let d = a.nrows();
    let det = a.determinant();
    if det.abs() <= 1e-12 {
        return Err(SpectralError::SingularMatrix(det.abs()));
    }

    // Ascending-modulus ordering: stable block first, then center, then
    // unstable; simultaneously delivers the Lyapunov grouping.
    let (q_asc, t_asc) = ordered_real_schur(a, |m| m)?;
    let blocks = schur_blocks(&t_asc);

    // Ambiguity guard: no modulus may sit too close to a band edge.
    for b in &blocks {
        let m = b.eigenvalue_modulus();
        for edge in [1.0 - tol_center, 1.0 + tol_center] {
            let gap = (m - edge).abs();
            if gap < tol_center / 10.0 {
                return Err(SpectralError::IllConditionedSplit { modulus: m, gap, tol_center });
            }
        }
    }

    let spectrum = spectrum_from_blocks(&blocks);
    debug_assert_eq!(spectrum.total_dim(), d);

    let mut d_s = 0;
    let mut d_c = 0;
    let mut d_u = 0;
    for b in &blocks {
        match classify(b.eigenvalue_modulus(), tol_center) {
            Class::Stable => d_s += b.size,
            Class::Center => d_c += b.size,
            Class::Unstable => d_u += b.size,
        }
    }

    // Lyapunov groups: merge consecutive ascending moduli within relative
    // tolerance.
    let mut lyapunov_groups: Vec<LyapunovGroup> = Vec::new();
    let mut group_offsets = vec![0usize];
    for b in &blocks {
        let m = b.eigenvalue_modulus();
        match lyapunov_groups.last_mut() {
            Some(g) if (m - g.modulus).abs() <= LYAPUNOV_GROUP_TOL * g.modulus.max(1e-300) => {
                g.dim += b.size;
            }
            _ => {
                lyapunov_groups.push(LyapunovGroup { modulus: m, dim: b.size });
                group_offsets.push(*group_offsets.last().unwrap());
            }
        }
        *group_offsets.last_mut().unwrap() += b.size;
    }

    let basis_s = q_asc.columns(0, d_s).into_owned();

    // Unstable-first ordering for the unstable basis.
    let tc = tol_center;
    let (q_desc, _) = ordered_real_schur(a, move |m| -m)?;
    let basis_u = q_desc.columns(0, d_u).into_owned();

    // Center-first ordering for the center basis.
    let (q_cf, _) = ordered_real_schur(a, move |m| {
        if (m - 1.0).abs() <= tc { 0.0 } else { 1.0 + (m - 1.0).abs() }
    })?;
    let basis_c = q_cf.columns(0, d_c).into_owned();

    // Oblique projection onto E^u along E^{sc} = span of the leading
    // d_s + d_c ascending columns.
    let projection_u = if d_u == 0 {
        DMatrix::zeros(d, d)
    } else if d_u == d {
        DMatrix::identity(d, d)
    } else {
        let mut basis = DMatrix::zeros(d, d);
        basis.view_mut((0, 0), (d, d_u)).copy_from(&basis_u);
        basis.view_mut((0, d_u), (d, d - d_u)).copy_from(&q_asc.columns(0, d_s + d_c));
        let inv = basis.clone().try_inverse().ok_or(SpectralError::SchurFailed)?;
        let mut selector = DMatrix::zeros(d, d);
        for j in 0..d_u {
            selector[(j, j)] = 1.0;
        }
        &basis * selector * inv
    };

    let log_unstable_det = spectrum
        .eigenvalues
        .iter()
        .filter(|e| classify(e.modulus(), tol_center) == Class::Unstable)
        .map(|e| e.real_dim() as f64 * e.modulus().ln())
        .sum();

    Ok(SpectralSplit {
        spectrum,
        d_s,
        d_c,
        d_u,
        basis_s,
        basis_c,
        basis_u,
        projection_u,
        lyapunov_groups,
        log_unstable_det,
        tol_center,
        basis_asc: q_asc,
        schur_asc: t_asc,
        group_offsets,
    })
}

fn spectrum_from_blocks(blocks: &[SchurBlock]) -> Spectrum {
    let mut entries: Vec<Eigenvalue> = Vec::new();
    let mut add = |re: f64, im: f64, pair: bool| {
        let tol = 1e-8;
        for e in entries.iter_mut() {
            if e.conjugate_pair == pair {
                let scale = e.modulus().max(1.0);
                if (e.re - re).abs() <= tol * scale && (e.im - im).abs() <= tol * scale {
                    e.multiplicity += 1;
                    return;
                }
            }
        }
        entries.push(Eigenvalue { re, im, multiplicity: 1, conjugate_pair: pair });
    };
    for b in blocks {
        for ev in b.eigenvalues() {
            if ev.im > 0.0 {
                add(ev.re, ev.im, true);
            } else if ev.im == 0.0 {
                add(ev.re, 0.0, false);
            }
            // The im < 0 member of a pair is represented by its conjugate.
        }
    }
    Spectrum { eigenvalues: entries }
}

/// Kalman rank test: numerical rank of `[B  AB ... A^{d-1}B]` with singular
/// values above `1e-9` times the largest counting.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct KalmanReport {
    pub rank: usize,
    pub controllable: bool,
}

pub fn kalman_controllable(a: &DMatrix<f64>, b: &DMatrix<f64>) -> KalmanReport {
    let d = a.nrows();
    let m = b.ncols();
    let mut kal = DMatrix::zeros(d, d * m);
    let mut power = b.clone();
    for i in 0..d {
        kal.view_mut((0, i * m), (d, m)).copy_from(&power);
        power = a * &power;
    }
    let sv = kal.svd(false, false).singular_values;
    let smax = sv.max();
    let rank = if smax <= 0.0 { 0 } else { sv.iter().filter(|s| **s > 1e-9 * smax).count() };
    KalmanReport { rank, controllable: rank == d }
}

/// Global controllability classes of the constrained system, following the
/// trichotomy on eigenvalue moduli.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GlobalControllability {
    /// Reachable set from the origin is the whole space.
    ReachableAll,
    /// Controllable-to-zero set is the whole space.
    ControllableToZeroAll,
    /// Both: the system is controllable everywhere.
    ControllableEverywhere,
    Neither,
}

pub fn classify_global_controllability(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    split: &SpectralSplit,
) -> GlobalControllability {
    let kal = kalman_controllable(a, b);
    if !kal.controllable {
        return GlobalControllability::Neither;
    }
    let reach_all = split.d_s == 0;
    let control_all = split.d_u == 0;
    match (reach_all, control_all) {
        (true, true) => GlobalControllability::ControllableEverywhere,
        (true, false) => GlobalControllability::ReachableAll,
        (false, true) => GlobalControllability::ControllableToZeroAll,
        (false, false) => GlobalControllability::Neither,
    }
}

/// Complex eigenvalues of `A` (convenience wrapper over the Schur blocks so
/// that diagonal matrices come out exactly).
pub fn eigenvalues(a: &DMatrix<f64>) -> Result<Vec<Complex<f64>>, SpectralError> {
    let (_, t) = ordered_real_schur(a, |m| m)?;
    Ok(schur_blocks(&t).iter().flat_map(|b| b.eigenvalues()).collect())
}

/// Modified Gram-Schmidt orthonormalization of independent columns.
pub(crate) fn schur_orthonormalize(m: &DMatrix<f64>) -> DMatrix<f64> {
    schur::orthonormalize(m)
}

#[derive(Debug, Error)]
#[error("projection construction failed")]
pub struct ProjectionError;

/// Oblique projection onto `span(target)` along `span(complement)`; the two
/// blocks together must span the space.
pub fn oblique_projection(
    target: &DMatrix<f64>,
    complement: &DMatrix<f64>,
) -> Result<DMatrix<f64>, ProjectionError> {
    let d = target.nrows();
    let k = target.ncols();
    if k == 0 {
        return Ok(DMatrix::zeros(d, d));
    }
    if complement.ncols() == 0 {
        return Ok(DMatrix::identity(d, d));
    }
    let mut basis = DMatrix::zeros(d, d);
    basis.view_mut((0, 0), (d, k)).copy_from(target);
    basis.view_mut((0, k), (d, complement.ncols())).copy_from(complement);
    let inv = basis.clone().try_inverse().ok_or(ProjectionError)?;
    let mut selector = DMatrix::zeros(d, d);
    for j in 0..k {
        selector[(j, j)] = 1.0;
    }
    Ok(&basis * selector * inv)
}

/// Apply the projection and express the result in the coordinates of the
/// (orthonormal) target basis.
pub fn project_coordinates(
    projection: &DMatrix<f64>,
    target_basis: &DMatrix<f64>,
    x: &DVector<f64>,
) -> DVector<f64> {
    target_basis.transpose() * (projection * x)
}

#[cfg(test)]
mod tests;
