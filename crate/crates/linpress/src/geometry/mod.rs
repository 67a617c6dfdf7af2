//! Convex-polytope primitives in vertex representation.
//!
//! All sets handled by the analysis modules (control ranges, reachable and
//! controllable sets, control-set approximations) arise as hulls of images and
//! Minkowski sums of a polytopic control range, so the vertex representation
//! is primary. Halfspace representations are derived lazily and only in
//! dimension <= 3; higher dimensions are served exclusively through linear
//! programming queries (`contains_point` works in any dimension).
//!
//! Tolerances: near-duplicate vertices are merged at absolute tolerance
//! 1e-10 after hulling; LP-backed predicates use 1e-9.

pub mod lp;

use nalgebra::{DMatrix, DVector};
use std::sync::OnceLock;
use thiserror::Error;

use lp::{LpConstraint, LpOutcome, LpProblem, lp_solve};

/// Absolute tolerance for merging near-duplicate vertices.
pub const MERGE_TOL: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("explicit polytope operations are limited to dimension <= 3, got {0}")]
    DimensionUnsupported(usize),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("empty point set")]
    EmptyPointSet,
    #[error("simplex pivot limit exceeded after {0} pivots")]
    CycleLimit(usize),
    #[error("inconsistent variable bounds: lower {lower} > upper {upper}")]
    InvalidBounds { lower: f64, upper: f64 },
    #[error("box shorthand dimension {0} exceeds the limit of 20")]
    BoxTooLarge(usize),
    #[error("polytope intersection is empty")]
    EmptyIntersection,
}

/// Closed halfspace `normal . x <= offset` with a unit normal.
#[derive(Clone, Debug)]
pub struct Halfspace {
    pub normal: DVector<f64>,
    pub offset: f64,
}

impl Halfspace {
    /// Signed slack `offset - normal . x`; nonnegative inside.
    pub fn margin(&self, x: &DVector<f64>) -> f64 {
        self.offset - self.normal.dot(x)
    }
}

/// A bounded convex polytope given by its minimal vertex set.
///
/// Invariants maintained by the constructors: the vertex list is nonempty, no
/// vertex is a convex combination of the others, and (dimension <= 2) the
/// vertices are in counterclockwise order. The halfspace representation, when
/// requested, satisfies every vertex within 1e-9 and every halfspace is tight
/// at a vertex.
#[derive(Debug)]
pub struct ConvexPolytope {
    dim: usize,
    vertices: Vec<DVector<f64>>,
    halfspaces: OnceLock<Vec<Halfspace>>,
}

impl Clone for ConvexPolytope {
    fn clone(&self) -> Self {
        Self {
            dim: self.dim,
            vertices: self.vertices.clone(),
            halfspaces: self.halfspaces.clone(),
        }
    }
}

impl ConvexPolytope {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vertices(&self) -> &[DVector<f64>] {
        &self.vertices
    }

    /// Axis-aligned box with the given corner vectors. Rejects dimensions
    /// above 20 (2^n vertex blowup).
    pub fn box_from_bounds(lower: &[f64], upper: &[f64]) -> Result<Self, GeometryError> {
        let n = lower.len();
        if upper.len() != n {
            return Err(GeometryError::DimensionMismatch { expected: n, got: upper.len() });
        }
        if n > 20 {
            return Err(GeometryError::BoxTooLarge(n));
        }
        if n == 0 {
            return Err(GeometryError::EmptyPointSet);
        }
        for j in 0..n {
            if lower[j] > upper[j] {
                return Err(GeometryError::InvalidBounds { lower: lower[j], upper: upper[j] });
            }
        }
        let mut pts = Vec::with_capacity(1 << n);
        for mask in 0..(1usize << n) {
            let mut p = DVector::zeros(n);
            for j in 0..n {
                p[j] = if mask >> j & 1 == 1 { upper[j] } else { lower[j] };
            }
            pts.push(p);
        }
        if n <= 3 {
            convex_hull(&pts, n)
        } else {
            // No explicit hull above dimension 3; box corners are already a
            // minimal vertex set (degenerate axes collapse duplicates).
            Ok(Self { dim: n, vertices: dedup_points(pts), halfspaces: OnceLock::new() })
        }
    }

    /// Bounding box as (lower, upper) corners.
    pub fn bounding_box(&self) -> (DVector<f64>, DVector<f64>) {
        let mut lo = self.vertices[0].clone();
        let mut hi = self.vertices[0].clone();
        for v in &self.vertices[1..] {
            for j in 0..self.dim {
                lo[j] = lo[j].min(v[j]);
                hi[j] = hi[j].max(v[j]);
            }
        }
        (lo, hi)
    }

    /// Halfspace representation, derived lazily; only available for
    /// dimension <= 3. All normals are unit vectors.
    pub fn halfspaces(&self) -> Result<&[Halfspace], GeometryError> {
        if self.dim > 3 {
            return Err(GeometryError::DimensionUnsupported(self.dim));
        }
        Ok(self
            .halfspaces
            .get_or_init(|| derive_halfspaces(self.dim, &self.vertices))
            .as_slice())
    }

    /// True iff `x` is within distance `tol` of the polytope, decided by an LP
    /// over convex coefficients (any dimension). The distance is measured in
    /// the max norm, which coincides with the Euclidean distance at the
    /// tolerance scales used here.
    pub fn contains_point(&self, x: &DVector<f64>, tol: f64) -> Result<bool, GeometryError> {
        Ok(self.linf_distance(x)? <= tol)
    }

    /// Max-norm distance from `x` to the polytope via LP.
    pub fn linf_distance(&self, x: &DVector<f64>) -> Result<f64, GeometryError> {
        if x.len() != self.dim {
            return Err(GeometryError::DimensionMismatch { expected: self.dim, got: x.len() });
        }
        let nv = self.vertices.len();
        // Variables: lambda_1..lambda_nv >= 0, t >= 0. Minimize t subject to
        // sum lambda = 1 and |sum lambda v - x| <= t componentwise.
        let n = nv + 1;
        let mut cons = Vec::with_capacity(1 + 2 * self.dim);
        let mut ones = DVector::zeros(n);
        for j in 0..nv {
            ones[j] = 1.0;
        }
        cons.push(LpConstraint::eq(ones, 1.0));
        for r in 0..self.dim {
            let mut plus = DVector::zeros(n);
            let mut minus = DVector::zeros(n);
            for j in 0..nv {
                plus[j] = self.vertices[j][r];
                minus[j] = -self.vertices[j][r];
            }
            plus[nv] = -1.0;
            minus[nv] = -1.0;
            cons.push(LpConstraint::le(plus, x[r]));
            cons.push(LpConstraint::le(minus, -x[r]));
        }
        let mut obj = DVector::zeros(n);
        obj[nv] = 1.0;
        let bounds = vec![(Some(0.0), None); n];
        let prob = LpProblem::minimize(obj, cons).with_bounds(bounds);
        match lp_solve(&prob)? {
            LpOutcome::Optimal { value, .. } => Ok(value.max(0.0)),
            // The problem is always feasible and bounded below by 0.
            _ => Err(GeometryError::CycleLimit(0)),
        }
    }

    /// Euclidean distance from `x` to the polytope (Wolfe's min-norm-point
    /// algorithm), together with the nearest point.
    pub fn euclidean_projection(&self, x: &DVector<f64>) -> (f64, DVector<f64>) {
        min_norm_point(&self.vertices, x)
    }

    pub fn distance(&self, x: &DVector<f64>) -> f64 {
        self.euclidean_projection(x).0
    }

    /// Distance from `x` to the boundary, positive inside, negative outside.
    /// Requires the halfspace representation (dimension <= 3). For polytopes
    /// that are not full-dimensional this is nonpositive everywhere.
    pub fn interior_margin(&self, x: &DVector<f64>) -> Result<f64, GeometryError> {
        let hs = self.halfspaces()?;
        Ok(hs.iter().map(|h| h.margin(x)).fold(f64::INFINITY, f64::min))
    }

    /// Chebyshev radius: the largest ball (within the ambient space) that fits
    /// inside the polytope. Zero for polytopes that are not full-dimensional.
    pub fn inradius(&self) -> Result<f64, GeometryError> {
        let hs = self.halfspaces()?;
        // maximize r s.t. n.x + r <= c for all halfspaces, r >= 0.
        let n = self.dim + 1;
        let mut cons = Vec::with_capacity(hs.len());
        for h in hs {
            let mut row = DVector::zeros(n);
            for j in 0..self.dim {
                row[j] = h.normal[j];
            }
            row[self.dim] = 1.0;
            cons.push(LpConstraint::le(row, h.offset));
        }
        let mut obj = DVector::zeros(n);
        obj[self.dim] = 1.0;
        let mut bounds = vec![(None, None); n];
        bounds[self.dim] = (Some(0.0), None);
        match lp_solve(&LpProblem::maximize(obj, cons).with_bounds(bounds))? {
            LpOutcome::Optimal { value, .. } => Ok(value.max(0.0)),
            _ => Ok(0.0),
        }
    }

    /// Set equality within Hausdorff tolerance.
    pub fn approx_eq(&self, other: &Self, tol: f64) -> Result<bool, GeometryError> {
        Ok(hausdorff_distance(self, other)? <= tol)
    }
}

/// Convex hull of a point set in dimension 1, 2 or 3, returned as a minimal
/// vertex representation. Interior and non-extreme points are removed;
/// near-duplicates are merged at absolute tolerance 1e-10. In dimension <= 2
/// the vertices come back in counterclockwise order.
pub fn convex_hull(points: &[DVector<f64>], dim: usize) -> Result<ConvexPolytope, GeometryError> {
    if points.is_empty() {
        return Err(GeometryError::EmptyPointSet);
    }
    if dim == 0 || dim > 3 {
        return Err(GeometryError::DimensionUnsupported(dim));
    }
    for p in points {
        if p.len() != dim {
            return Err(GeometryError::DimensionMismatch { expected: dim, got: p.len() });
        }
    }
    let pts = dedup_points(points.to_vec());
    let vertices = match dim {
        1 => hull_1d(&pts),
        2 => hull_2d(&pts),
        3 => hull_3d(&pts),
        _ => unreachable!(),
    };
    Ok(ConvexPolytope { dim, vertices, halfspaces: OnceLock::new() })
}

/// Image `{M v : v in P}` as a polytope (hull-pruned). The output lives in
/// dimension `M.nrows()`.
pub fn linear_image(p: &ConvexPolytope, m: &DMatrix<f64>) -> Result<ConvexPolytope, GeometryError> {
    if m.ncols() != p.dim() {
        return Err(GeometryError::DimensionMismatch { expected: p.dim(), got: m.ncols() });
    }
    let images: Vec<DVector<f64>> = p.vertices().iter().map(|v| m * v).collect();
    convex_hull(&images, m.nrows())
}

/// Minkowski sum `P + Q` as the hull of all pairwise vertex sums.
pub fn minkowski_sum(p: &ConvexPolytope, q: &ConvexPolytope) -> Result<ConvexPolytope, GeometryError> {
    if p.dim() != q.dim() {
        return Err(GeometryError::DimensionMismatch { expected: p.dim(), got: q.dim() });
    }
    if p.dim() > 3 {
        return Err(GeometryError::DimensionUnsupported(p.dim()));
    }
    let mut sums = Vec::with_capacity(p.vertices().len() * q.vertices().len());
    for a in p.vertices() {
        for b in q.vertices() {
            sums.push(a + b);
        }
    }
    convex_hull(&sums, p.dim())
}

/// Symmetric Hausdorff distance between two polytopes of equal dimension.
/// Both directed distances are attained at vertices, so two vertex sweeps with
/// exact Euclidean projections suffice.
pub fn hausdorff_distance(p: &ConvexPolytope, q: &ConvexPolytope) -> Result<f64, GeometryError> {
    if p.dim() != q.dim() {
        return Err(GeometryError::DimensionMismatch { expected: p.dim(), got: q.dim() });
    }
    let mut d = 0.0f64;
    for v in p.vertices() {
        d = d.max(q.distance(v));
    }
    for v in q.vertices() {
        d = d.max(p.distance(v));
    }
    Ok(d)
}

/// Intersection of two polytopes (dimension <= 3) by combining halfspaces and
/// enumerating candidate vertices from d-subsets of the constraints.
pub fn intersect(p: &ConvexPolytope, q: &ConvexPolytope) -> Result<ConvexPolytope, GeometryError> {
    if p.dim() != q.dim() {
        return Err(GeometryError::DimensionMismatch { expected: p.dim(), got: q.dim() });
    }
    let d = p.dim();
    if d > 3 {
        return Err(GeometryError::DimensionUnsupported(d));
    }
    let mut hs: Vec<Halfspace> = p.halfspaces()?.to_vec();
    hs.extend(q.halfspaces()?.iter().cloned());
    let scale = p
        .vertices()
        .iter()
        .chain(q.vertices())
        .map(|v| v.amax())
        .fold(1.0f64, f64::max);
    // Candidate tolerance grows with the candidate's own magnitude plus a
    // floor absorbing the round-off that halfspace offsets inherit from large
    // input coordinates.
    let tol_floor = 1e-13 * scale;
    let feas = |x: &DVector<f64>| -> bool {
        let tol = 1e-9 * (1.0 + x.amax()) + tol_floor;
        hs.iter().all(|h| h.margin(x) >= -tol)
    };

    let mut candidates: Vec<DVector<f64>> = Vec::new();
    // Vertices of one polytope inside the other survive as candidates.
    for v in p.vertices().iter().chain(q.vertices()) {
        if feas(v) {
            candidates.push(v.clone());
        }
    }
    // Intersections of d-subsets of the combined constraint planes.
    candidates.extend(enumerate_halfspace_vertices(&hs, d, &feas));
    if candidates.is_empty() {
        return Err(GeometryError::EmptyIntersection);
    }
    convex_hull(&candidates, d)
}

/// Candidate vertices of a halfspace system: solutions of d-subsets of tight
/// constraints that satisfy the feasibility predicate.
fn enumerate_halfspace_vertices(
    hs: &[Halfspace],
    d: usize,
    feas: &dyn Fn(&DVector<f64>) -> bool,
) -> Vec<DVector<f64>> {
    let n = hs.len();
    let mut idx = vec![0usize; d];
    let mut combos = Vec::new();
    build_combinations(n, d, 0, &mut idx, 0, &mut combos);
    let mut out = Vec::new();
    for combo in combos {
        let mut a = DMatrix::zeros(d, d);
        let mut b = DVector::zeros(d);
        for (r, &ci) in combo.iter().enumerate() {
            for c in 0..d {
                a[(r, c)] = hs[ci].normal[c];
            }
            b[r] = hs[ci].offset;
        }
        let lu = a.lu();
        if let Some(x) = lu.solve(&b) {
            if x.iter().all(|c| c.is_finite()) && feas(&x) {
                out.push(x);
            }
        }
    }
    out
}

/// Shrink a full-dimensional polytope by moving every face inward by
/// `margin` (dimension <= 3).
pub fn erode(p: &ConvexPolytope, margin: f64) -> Result<ConvexPolytope, GeometryError> {
    let hs: Vec<Halfspace> = p
        .halfspaces()?
        .iter()
        .map(|h| Halfspace { normal: h.normal.clone(), offset: h.offset - margin })
        .collect();
    let scale = p.vertices().iter().map(|v| v.amax()).fold(1.0f64, f64::max);
    let feas = |x: &DVector<f64>| -> bool {
        let tol = 1e-9 * (1.0 + x.amax()) + 1e-13 * scale;
        hs.iter().all(|h| h.margin(x) >= -tol)
    };
    let candidates = enumerate_halfspace_vertices(&hs, p.dim(), &feas);
    if candidates.is_empty() {
        return Err(GeometryError::EmptyIntersection);
    }
    convex_hull(&candidates, p.dim())
}

fn build_combinations(
    n: usize,
    k: usize,
    start: usize,
    idx: &mut Vec<usize>,
    depth: usize,
    out: &mut Vec<Vec<usize>>,
) {
    if depth == k {
        out.push(idx.clone());
        return;
    }
    for i in start..n {
        idx[depth] = i;
        build_combinations(n, k, i + 1, idx, depth + 1, out);
    }
}

// ---------------------------------------------------------------------------
// hull internals

fn dedup_points(points: Vec<DVector<f64>>) -> Vec<DVector<f64>> {
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| lex_cmp(&points[a], &points[b]));
    let mut kept: Vec<DVector<f64>> = Vec::new();
    for i in order {
        let p = &points[i];
        if kept.iter().all(|q| (p - q).norm() > MERGE_TOL) {
            kept.push(p.clone());
        }
    }
    kept
}

fn lex_cmp(a: &DVector<f64>, b: &DVector<f64>) -> std::cmp::Ordering {
    for j in 0..a.len() {
        match a[j].partial_cmp(&b[j]) {
            Some(std::cmp::Ordering::Equal) | None => continue,
            Some(ord) => return ord,
        }
    }
    std::cmp::Ordering::Equal
}

fn hull_1d(pts: &[DVector<f64>]) -> Vec<DVector<f64>> {
    let mut lo = pts[0].clone();
    let mut hi = pts[0].clone();
    for p in pts {
        if p[0] < lo[0] {
            lo = p.clone();
        }
        if p[0] > hi[0] {
            hi = p.clone();
        }
    }
    if (hi[0] - lo[0]).abs() <= MERGE_TOL { vec![lo] } else { vec![lo, hi] }
}

fn cross2(o: &DVector<f64>, a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

/// Andrew's monotone chain; output counterclockwise starting at the
/// lexicographically smallest vertex. Collinear intermediate points are
/// dropped. The collinearity test compares the cross product against the
/// product of the adjacent edge lengths, which keeps it scale invariant even
/// for polygons with extreme aspect ratios (reach sets of strongly expanding
/// systems).
fn hull_2d(pts: &[DVector<f64>]) -> Vec<DVector<f64>> {
    // `pts` arrive deduplicated and lexicographically sorted.
    if pts.len() <= 2 {
        return pts.to_vec();
    }
    let turns_right = |o: &DVector<f64>, a: &DVector<f64>, b: &DVector<f64>| -> bool {
        let cross = cross2(o, a, b);
        let eps = 1e-12 * (a - o).norm() * (b - a).norm();
        cross <= eps
    };

    let mut lower: Vec<usize> = Vec::new();
    for (i, p) in pts.iter().enumerate() {
        while lower.len() >= 2
            && turns_right(&pts[lower[lower.len() - 2]], &pts[lower[lower.len() - 1]], p)
        {
            lower.pop();
        }
        lower.push(i);
    }
    let mut upper: Vec<usize> = Vec::new();
    for (i, p) in pts.iter().enumerate().rev() {
        while upper.len() >= 2
            && turns_right(&pts[upper[upper.len() - 2]], &pts[upper[upper.len() - 1]], p)
        {
            upper.pop();
        }
        upper.push(i);
    }
    lower.pop();
    upper.pop();
    let hull_idx: Vec<usize> = lower.into_iter().chain(upper).collect();
    if hull_idx.is_empty() {
        // Fully collinear set: keep the extremes.
        return vec![pts[0].clone(), pts[pts.len() - 1].clone()];
    }
    if hull_idx.len() == 1 {
        return vec![pts[hull_idx[0]].clone()];
    }
    hull_idx.into_iter().map(|i| pts[i].clone()).collect()
}

/// 3D hull with affine-dimension dispatch: flat inputs (points, segments,
/// planar polygons embedded in R^3) are hulled in their affine span so that
/// repeated Minkowski sums of low-rank images stay well defined.
fn hull_3d(pts: &[DVector<f64>]) -> Vec<DVector<f64>> {
    if pts.len() <= 2 {
        return pts.to_vec();
    }
    let mean = pts.iter().sum::<DVector<f64>>() / pts.len() as f64;
    let mut data = DMatrix::zeros(pts.len(), 3);
    for (i, p) in pts.iter().enumerate() {
        for j in 0..3 {
            data[(i, j)] = p[j] - mean[j];
        }
    }
    let svd = data.clone().svd(false, true);
    let sv = &svd.singular_values;
    let smax = sv.max();
    let rank_tol = 1e-9 * smax.max(1e-300);
    let rank = sv.iter().filter(|s| **s > rank_tol).count();
    let vt = svd.v_t.as_ref().expect("svd with v_t requested");

    match rank.min(3) {
        0 => vec![pts[0].clone()],
        1 => {
            let dir = vt.row(0).transpose();
            let mut imin = 0;
            let mut imax = 0;
            for (i, p) in pts.iter().enumerate() {
                let t = (p - &mean).dot(&dir);
                if t < (&pts[imin] - &mean).dot(&dir) {
                    imin = i;
                }
                if t > (&pts[imax] - &mean).dot(&dir) {
                    imax = i;
                }
            }
            if imin == imax { vec![pts[imin].clone()] } else { vec![pts[imin].clone(), pts[imax].clone()] }
        }
        2 => {
            let b1 = vt.row(0).transpose();
            let b2 = vt.row(1).transpose();
            let mut planar: Vec<DVector<f64>> = Vec::with_capacity(pts.len());
            for p in pts {
                let q = p - &mean;
                planar.push(DVector::from_vec(vec![q.dot(&b1), q.dot(&b2)]));
            }
            // Track indices through the 2D hull so the original coordinates
            // are returned bit-exactly.
            let mut order: Vec<usize> = (0..planar.len()).collect();
            order.sort_by(|&a, &b| lex_cmp(&planar[a], &planar[b]));
            let sorted: Vec<DVector<f64>> = order.iter().map(|&i| planar[i].clone()).collect();
            let hull2 = hull_2d(&sorted);
            hull2
                .iter()
                .map(|h| {
                    let i = order
                        .iter()
                        .copied()
                        .find(|&i| (&planar[i] - h).norm() == 0.0)
                        .expect("hull vertex originates from input");
                    pts[i].clone()
                })
                .collect()
        }
        _ => hull_3d_full(pts),
    }
}

struct Face {
    v: [usize; 3],
    normal: DVector<f64>,
    offset: f64,
}

fn cross3(u: &DVector<f64>, w: &DVector<f64>) -> DVector<f64> {
    DVector::from_vec(vec![
        u[1] * w[2] - u[2] * w[1],
        u[2] * w[0] - u[0] * w[2],
        u[0] * w[1] - u[1] * w[0],
    ])
}

fn face_from(pts: &[DVector<f64>], a: usize, b: usize, c: usize, inner: &DVector<f64>) -> Face {
    let u = &pts[b] - &pts[a];
    let w = &pts[c] - &pts[a];
    let mut n = cross3(&u, &w);
    let mut off = n.dot(&pts[a]);
    if n.dot(inner) > off {
        n = -n;
        off = -off;
    }
    Face { v: [a, b, c], normal: n, offset: off }
}

/// Incremental convex hull for full-dimensional 3D point sets.
fn hull_3d_full(pts: &[DVector<f64>]) -> Vec<DVector<f64>> {
    let scale = pts.iter().map(|p| p.amax()).fold(1.0f64, f64::max);
    let eps = 1e-10 * scale;
    let faces = full_hull_faces(pts);

    let mut vert_idx: Vec<usize> = faces.iter().flat_map(|f| f.v).collect();
    vert_idx.sort_unstable();
    vert_idx.dedup();
    let mut verts: Vec<DVector<f64>> = vert_idx.into_iter().map(|i| pts[i].clone()).collect();

    // Minimality pass: drop vertices within merge tolerance of the hull of
    // the others (seed points may have ended up on edges or facets).
    let mut changed = true;
    while changed && verts.len() > 1 {
        changed = false;
        for i in 0..verts.len() {
            let rest: Vec<DVector<f64>> =
                verts.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, v)| v.clone()).collect();
            let (d, _) = min_norm_point(&rest, &verts[i]);
            if d <= MERGE_TOL.max(eps) {
                verts.remove(i);
                changed = true;
                break;
            }
        }
    }
    verts.sort_by(lex_cmp);
    verts
}

// ---------------------------------------------------------------------------
// halfspace derivation

fn derive_halfspaces(dim: usize, verts: &[DVector<f64>]) -> Vec<Halfspace> {
    match dim {
        1 => {
            let lo = verts.iter().map(|v| v[0]).fold(f64::INFINITY, f64::min);
            let hi = verts.iter().map(|v| v[0]).fold(f64::NEG_INFINITY, f64::max);
            vec![
                Halfspace { normal: DVector::from_vec(vec![1.0]), offset: hi },
                Halfspace { normal: DVector::from_vec(vec![-1.0]), offset: -lo },
            ]
        }
        2 => halfspaces_2d(verts),
        3 => halfspaces_3d(verts),
        _ => unreachable!("halfspaces only derived for dim <= 3"),
    }
}

fn halfspaces_2d(verts: &[DVector<f64>]) -> Vec<Halfspace> {
    match verts.len() {
        1 => equality_pairs_around_point(&verts[0]),
        2 => {
            // Segment: equality pair along the normal plus two end caps.
            let t = (&verts[1] - &verts[0]).normalize();
            let n = DVector::from_vec(vec![t[1], -t[0]]);
            let c = n.dot(&verts[0]);
            vec![
                Halfspace { normal: n.clone(), offset: c },
                Halfspace { normal: -n, offset: -c },
                Halfspace { normal: t.clone(), offset: t.dot(&verts[1]) },
                Halfspace { normal: -t.clone(), offset: -t.dot(&verts[0]) },
            ]
        }
        _ => {
            // CCW polygon: outward edge normals.
            let k = verts.len();
            let mut out = Vec::with_capacity(k);
            for i in 0..k {
                let a = &verts[i];
                let b = &verts[(i + 1) % k];
                let e = (b - a).normalize();
                let n = DVector::from_vec(vec![e[1], -e[0]]);
                out.push(Halfspace { offset: n.dot(a), normal: n });
            }
            out
        }
    }
}

fn equality_pairs_around_point(p: &DVector<f64>) -> Vec<Halfspace> {
    let d = p.len();
    let mut out = Vec::with_capacity(2 * d);
    for j in 0..d {
        let mut n = DVector::zeros(d);
        n[j] = 1.0;
        out.push(Halfspace { offset: p[j], normal: n.clone() });
        out.push(Halfspace { offset: -p[j], normal: -n });
    }
    out
}

fn halfspaces_3d(verts: &[DVector<f64>]) -> Vec<Halfspace> {
    if verts.len() == 1 {
        return equality_pairs_around_point(&verts[0]);
    }
    // Affine rank decides the shape class.
    let mean = verts.iter().sum::<DVector<f64>>() / verts.len() as f64;
    let mut data = DMatrix::zeros(verts.len(), 3);
    for (i, p) in verts.iter().enumerate() {
        for j in 0..3 {
            data[(i, j)] = p[j] - mean[j];
        }
    }
    let svd = data.svd(false, true);
    let sv = &svd.singular_values;
    let smax = sv.max();
    let rank_tol = 1e-9 * smax.max(1e-300);
    let rank = sv.iter().filter(|s| **s > rank_tol).count();
    let vt = svd.v_t.as_ref().unwrap();

    match rank.min(3) {
        0 => equality_pairs_around_point(&verts[0]),
        1 => {
            // Segment in space: two orthogonal equality pairs plus end caps.
            let t = vt.row(0).transpose().normalize();
            let helper = if t[0].abs() < 0.9 {
                DVector::from_vec(vec![1.0, 0.0, 0.0])
            } else {
                DVector::from_vec(vec![0.0, 1.0, 0.0])
            };
            let n1 = cross3(&t, &helper).normalize();
            let n2 = cross3(&t, &n1).normalize();
            let mut out = Vec::with_capacity(6);
            for n in [n1, n2] {
                let c = n.dot(&verts[0]);
                out.push(Halfspace { normal: n.clone(), offset: c });
                out.push(Halfspace { normal: -n, offset: -c });
            }
            let tmax = verts.iter().map(|v| t.dot(v)).fold(f64::NEG_INFINITY, f64::max);
            let tmin = verts.iter().map(|v| t.dot(v)).fold(f64::INFINITY, f64::min);
            out.push(Halfspace { normal: t.clone(), offset: tmax });
            out.push(Halfspace { normal: -t, offset: -tmin });
            out
        }
        2 => {
            // Planar polygon: plane equality pair plus lifted edge normals.
            let b1 = vt.row(0).transpose();
            let b2 = vt.row(1).transpose();
            let plane_n = cross3(&b1, &b2).normalize();
            let c = plane_n.dot(&verts[0]);
            let mut out = vec![
                Halfspace { normal: plane_n.clone(), offset: c },
                Halfspace { normal: -plane_n, offset: -c },
            ];
            let planar: Vec<DVector<f64>> = verts
                .iter()
                .map(|p| {
                    let q = p - &mean;
                    DVector::from_vec(vec![q.dot(&b1), q.dot(&b2)])
                })
                .collect();
            let mut order: Vec<usize> = (0..planar.len()).collect();
            order.sort_by(|&a, &b| lex_cmp(&planar[a], &planar[b]));
            let sorted: Vec<DVector<f64>> = order.iter().map(|&i| planar[i].clone()).collect();
            let ring = hull_2d(&sorted);
            for hs in halfspaces_2d(&ring) {
                let lifted = &b1 * hs.normal[0] + &b2 * hs.normal[1];
                let offset = hs.offset + lifted.dot(&mean);
                out.push(Halfspace { normal: lifted, offset });
            }
            out
        }
        _ => {
            // Full-dimensional: rebuild faces and merge coplanar ones.
            let faces = full_hull_faces(verts);
            let mut out: Vec<Halfspace> = Vec::new();
            for f in faces {
                let norm = f.normal.norm();
                if norm <= 1e-300 {
                    continue;
                }
                let n = &f.normal / norm;
                let c = f.offset / norm;
                if !out.iter().any(|h| (&h.normal - &n).norm() < 1e-7 && (h.offset - c).abs() < 1e-7)
                {
                    out.push(Halfspace { normal: n, offset: c });
                }
            }
            out
        }
    }
}

/// Faces of the incremental hull of a full-dimensional 3D point set.
fn full_hull_faces(pts: &[DVector<f64>]) -> Vec<Face> {
    let scale = pts.iter().map(|p| p.amax()).fold(1.0f64, f64::max);
    let eps = 1e-10 * scale;
    // Seed tetrahedron: greedy far-point selection.
    let i0 = 0usize;
    let i1 = (0..pts.len())
        .max_by(|&a, &b| {
            (&pts[a] - &pts[i0]).norm().partial_cmp(&(&pts[b] - &pts[i0]).norm()).unwrap()
        })
        .unwrap();
    let dir = &pts[i1] - &pts[i0];
    let i2 = (0..pts.len())
        .max_by(|&a, &b| {
            let ca = cross3(&(&pts[a] - &pts[i0]), &dir).norm();
            let cb = cross3(&(&pts[b] - &pts[i0]), &dir).norm();
            ca.partial_cmp(&cb).unwrap()
        })
        .unwrap();
    let n0 = cross3(&(&pts[i1] - &pts[i0]), &(&pts[i2] - &pts[i0]));
    let i3 = (0..pts.len())
        .max_by(|&a, &b| {
            let va = (&pts[a] - &pts[i0]).dot(&n0).abs();
            let vb = (&pts[b] - &pts[i0]).dot(&n0).abs();
            va.partial_cmp(&vb).unwrap()
        })
        .unwrap();
    let inner = (&pts[i0] + &pts[i1] + &pts[i2] + &pts[i3]) / 4.0;
    let mut faces = vec![
        face_from(pts, i0, i1, i2, &inner),
        face_from(pts, i0, i1, i3, &inner),
        face_from(pts, i0, i2, i3, &inner),
        face_from(pts, i1, i2, i3, &inner),
    ];
    let seed = [i0, i1, i2, i3];
    for p in 0..pts.len() {
        if seed.contains(&p) {
            continue;
        }
        let visible: Vec<usize> = (0..faces.len())
            .filter(|&f| faces[f].normal.dot(&pts[p]) - faces[f].offset > eps * faces[f].normal.norm())
            .collect();
        if visible.is_empty() {
            continue;
        }
        let mut edge_count: std::collections::HashMap<(usize, usize), usize> =
            std::collections::HashMap::new();
        for &f in &visible {
            let [a, b, c] = faces[f].v;
            for (u, w) in [(a, b), (b, c), (c, a)] {
                let key = (u.min(w), u.max(w));
                *edge_count.entry(key).or_insert(0) += 1;
            }
        }
        let horizon: Vec<(usize, usize)> =
            edge_count.into_iter().filter(|&(_, c)| c == 1).map(|(e, _)| e).collect();
        let visible_set: std::collections::HashSet<usize> = visible.iter().copied().collect();
        let mut next: Vec<Face> = faces
            .drain(..)
            .enumerate()
            .filter(|(i, _)| !visible_set.contains(i))
            .map(|(_, f)| f)
            .collect();
        for (u, w) in horizon {
            next.push(face_from(pts, p, u, w, &inner));
        }
        faces = next;
    }
    faces
}

// ---------------------------------------------------------------------------
// Euclidean projection (Wolfe's min-norm-point algorithm)

/// Distance from `x` to `conv(points)` and the nearest point, computed by
/// Wolfe's min-norm-point algorithm on the shifted set. Terminates finitely
/// up to the stated tolerances; accurate to ~1e-12 relative at desk scale.
pub fn min_norm_point(points: &[DVector<f64>], x: &DVector<f64>) -> (f64, DVector<f64>) {
    let shifted: Vec<DVector<f64>> = points.iter().map(|p| p - x).collect();
    let scale = shifted.iter().map(|w| w.norm()).fold(0.0f64, f64::max);
    if scale == 0.0 {
        return (0.0, x.clone());
    }

    let mut corral: Vec<usize> = Vec::new();
    let mut lambda: Vec<f64> = Vec::new();
    let start = (0..shifted.len())
        .min_by(|&a, &b| shifted[a].norm().partial_cmp(&shifted[b].norm()).unwrap())
        .unwrap();
    corral.push(start);
    lambda.push(1.0);

    let combine = |corral: &[usize], lambda: &[f64]| -> DVector<f64> {
        let mut y = DVector::zeros(x.len());
        for (i, &ci) in corral.iter().enumerate() {
            y += &shifted[ci] * lambda[i];
        }
        y
    };

    let max_outer = 20 * (points.len() + 4);
    for _ in 0..max_outer {
        let y = combine(&corral, &lambda);
        let y2 = y.norm_squared();
        // Optimality certificate with a slack matching the round-off of the
        // inner products (|w_j . y| carries ~eps * scale * |y| of noise), so
        // reported distances stay honest at every magnitude.
        let slack = 1e-13 * scale * y2.sqrt() + 1e-300;
        let j = (0..shifted.len())
            .min_by(|&a, &b| shifted[a].dot(&y).partial_cmp(&shifted[b].dot(&y)).unwrap())
            .unwrap();
        if shifted[j].dot(&y) >= y2 - slack || corral.contains(&j) {
            return (y.norm(), x + y);
        }
        corral.push(j);
        lambda.push(0.0);

        // Inner loop: step toward the affine minimizer, clipping at the
        // boundary of the simplex of coefficients.
        for _ in 0..corral.len() + 2 {
            let k = corral.len();
            let mut sys = DMatrix::zeros(k + 1, k + 1);
            let mut rhs = DVector::zeros(k + 1);
            for a in 0..k {
                for b in 0..k {
                    sys[(a, b)] = shifted[corral[a]].dot(&shifted[corral[b]]);
                }
                sys[(a, k)] = 1.0;
                sys[(k, a)] = 1.0;
            }
            rhs[k] = 1.0;
            let alpha = match sys.lu().solve(&rhs) {
                Some(sol) => sol.rows(0, k).into_owned(),
                None => break,
            };
            if alpha.iter().all(|&a| a >= -1e-12) {
                lambda = alpha.iter().copied().collect();
                break;
            }
            let mut theta = f64::INFINITY;
            for i in 0..k {
                if lambda[i] > alpha[i] {
                    theta = theta.min(lambda[i] / (lambda[i] - alpha[i]));
                }
            }
            let theta = theta.clamp(0.0, 1.0);
            for i in 0..k {
                lambda[i] = (1.0 - theta) * lambda[i] + theta * alpha[i];
            }
            // Remove clipped-out points.
            let mut i = 0;
            while i < corral.len() {
                if lambda[i] <= 1e-12 {
                    corral.remove(i);
                    lambda.remove(i);
                } else {
                    i += 1;
                }
            }
            if corral.is_empty() {
                corral.push(start);
                lambda.push(1.0);
                break;
            }
        }
    }
    let y = combine(&corral, &lambda);
    (y.norm(), x + y)
}

#[cfg(test)]
mod tests;
