//! Definition-level brute-force estimation of the invariance pressure on
//! discretized instances: controls are drawn from a finite grid inside `U`,
//! initial states from a grid over a compact set `K ⊆ Q`, and the infimum
//! over spanning sets becomes a minimum-weight set cover over the surviving
//! control sequences. Exact covers are computed by branch and bound up to 20
//! candidates; beyond that a greedy cover is returned together with its
//! `ln(n) + 1` approximation slack.
//!
//! Results are deterministic: control sequences are enumerated in
//! lexicographic grid order and all tie-breaks favor the lower index.

use nalgebra::DVector;
use thiserror::Error;

use crate::geometry::{ConvexPolytope, GeometryError};
use crate::potential::{Potential, PotentialError, birkhoff_sum};
use crate::pressure::SpanningSet;
use crate::reachability::{LinearSystem, ReachError};

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("budget exceeded: tau * |G|^tau * |K grid| = {product:e} > {budget:e}")]
    BudgetExceeded { product: f64, budget: f64 },
    #[error("K grid point {index} lies outside the confinement set Q")]
    GridPointOutsideQ { index: usize },
    #[error("K grid point {index} is covered by no admissible control sequence")]
    UnspannableGrid { index: usize },
    #[error("the control grid contains no point of U")]
    EmptyControlGrid,
    #[error("the state grid contains no point of K")]
    EmptyStateGrid,
    #[error("total mode required for state-dependent potentials")]
    StateDependentPotential,
    #[error("chosen cover failed re-simulation at K grid point {index}")]
    CoverUnsound { index: usize },
    #[error("geometry failure: {0}")]
    Geometry(#[from] GeometryError),
    #[error("reachability failure: {0}")]
    Reach(#[from] ReachError),
    #[error("potential failure: {0}")]
    Potential(#[from] PotentialError),
}

/// Discretization of one pressure-estimation instance.
#[derive(Clone, Debug)]
pub struct OracleConfig {
    /// Horizon.
    pub tau: usize,
    /// Grid points per control axis (grid spans the bounding box of `U`,
    /// filtered to `U`).
    pub control_grid: usize,
    /// Grid points per state axis over the bounding box of `K`, filtered to
    /// `K`.
    pub state_grid: usize,
    /// Confinement set (typically the control-set approximation).
    pub q: ConvexPolytope,
    /// Compact initial set, `K ⊆ Q`.
    pub k: ConvexPolytope,
    /// Use totally spanning state-control pairs for state-dependent
    /// potentials.
    pub total_mode: bool,
    /// Trajectory-step budget; the default is 1e8.
    pub budget: f64,
}

pub const DEFAULT_BUDGET: f64 = 1e8;

impl OracleConfig {
    pub fn new(tau: usize, control_grid: usize, state_grid: usize, q: ConvexPolytope, k: ConvexPolytope) -> Self {
        Self { tau, control_grid, state_grid, q, k, total_mode: false, budget: DEFAULT_BUDGET }
    }
}

/// Map from surviving control sequences to the K-grid points they confine.
#[derive(Clone, Debug)]
pub struct CoverMap {
    pub tau: usize,
    /// Control values of the grid `G ⊂ U`, in lexicographic order.
    pub grid: Vec<DVector<f64>>,
    /// K-grid points, in lexicographic order.
    pub k_points: Vec<DVector<f64>>,
    /// Surviving sequences as grid indices, paired with covered-point bitsets.
    pub candidates: Vec<CoverCandidate>,
}

#[derive(Clone, Debug)]
pub struct CoverCandidate {
    pub control_indices: Vec<usize>,
    covered: BitSet,
}

impl CoverCandidate {
    pub fn covered_points(&self) -> Vec<usize> {
        self.covered.ones()
    }

    pub fn controls(&self, grid: &[DVector<f64>]) -> Vec<DVector<f64>> {
        self.control_indices.iter().map(|&i| grid[i].clone()).collect()
    }
}

/// Minimal fixed-size bitset.
#[derive(Clone, Debug, PartialEq, Eq)]
struct BitSet {
    words: Vec<u64>,
    len: usize,
}

impl BitSet {
    fn zeros(len: usize) -> Self {
        Self { words: vec![0; len.div_ceil(64)], len }
    }

    fn set(&mut self, i: usize) {
        self.words[i / 64] |= 1 << (i % 64);
    }

    fn get(&self, i: usize) -> bool {
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    fn count(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    fn union_with(&mut self, other: &BitSet) {
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a |= b;
        }
    }

    fn union_count(&self, other: &BitSet) -> usize {
        self.words.iter().zip(&other.words).map(|(a, b)| (a | b).count_ones() as usize).sum()
    }

    fn is_full(&self) -> bool {
        self.count() == self.len
    }

    fn ones(&self) -> Vec<usize> {
        (0..self.len).filter(|&i| self.get(i)).collect()
    }
}

/// Axis grid over the bounding box of a polytope, filtered by membership; the
/// returned points are in lexicographic order. Degenerate axes collapse to a
/// single value.
fn polytope_grid(poly: &ConvexPolytope, per_axis: usize) -> Result<Vec<DVector<f64>>, OracleError> {
    let dim = poly.dim();
    let (lo, hi) = poly.bounding_box();
    let hs = if dim <= 3 { Some(poly.halfspaces()?) } else { None };
    let mut axis_values: Vec<Vec<f64>> = Vec::with_capacity(dim);
    for j in 0..dim {
        if per_axis == 1 || (hi[j] - lo[j]).abs() <= 1e-14 {
            axis_values.push(vec![(lo[j] + hi[j]) / 2.0]);
        } else {
            axis_values.push(
                (0..per_axis)
                    .map(|i| lo[j] + (hi[j] - lo[j]) * i as f64 / (per_axis - 1) as f64)
                    .collect(),
            );
        }
    }
    let mut out = Vec::new();
    let mut idx = vec![0usize; dim];
    'outer: loop {
        let mut p = DVector::zeros(dim);
        for j in 0..dim {
            p[j] = axis_values[j][idx[j]];
        }
        let inside = match hs {
            Some(hs) => hs.iter().all(|h| h.margin(&p) >= -1e-9),
            None => poly.contains_point(&p, 1e-9)?,
        };
        if inside {
            out.push(p);
        }
        let mut j = dim;
        while j > 0 {
            j -= 1;
            idx[j] += 1;
            if idx[j] < axis_values[j].len() {
                continue 'outer;
            }
            idx[j] = 0;
        }
        break;
    }
    Ok(out)
}

/// Enumerate all control sequences over the grid and record, for each, the
/// set of K-grid points whose full trajectory stays in `Q`. Sequences that
/// confine nothing are dropped.
pub fn admissible_controls(sys: &LinearSystem, cfg: &OracleConfig) -> Result<CoverMap, OracleError> {
    let grid = polytope_grid(sys.control_range(), cfg.control_grid)?;
    if grid.is_empty() {
        return Err(OracleError::EmptyControlGrid);
    }
    let k_points = polytope_grid(&cfg.k, cfg.state_grid)?;
    if k_points.is_empty() {
        return Err(OracleError::EmptyStateGrid);
    }
    let q_hs = cfg.q.halfspaces()?;
    for (i, p) in k_points.iter().enumerate() {
        if !q_hs.iter().all(|h| h.margin(p) >= -1e-9) {
            return Err(OracleError::GridPointOutsideQ { index: i });
        }
    }

    let n_seq = (grid.len() as f64).powi(cfg.tau as i32);
    let product = cfg.tau as f64 * n_seq * k_points.len() as f64;
    if product > cfg.budget {
        return Err(OracleError::BudgetExceeded { product, budget: cfg.budget });
    }

    // Precompute B u for every grid value.
    let bu: Vec<DVector<f64>> = grid.iter().map(|u| sys.b() * u).collect();
    let a = sys.a();

    let mut candidates = Vec::new();
    let mut indices = vec![0usize; cfg.tau];
    loop {
        let mut covered = BitSet::zeros(k_points.len());
        let mut any = false;
        for (pi, p) in k_points.iter().enumerate() {
            let mut state = p.clone();
            let mut ok = true;
            for &gi in &indices {
                state = a * &state + &bu[gi];
                if !q_hs.iter().all(|h| h.margin(&state) >= -1e-9) {
                    ok = false;
                    break;
                }
            }
            if ok {
                covered.set(pi);
                any = true;
            }
        }
        if any {
            candidates.push(CoverCandidate { control_indices: indices.clone(), covered });
        }
        // Lexicographic odometer (last index fastest).
        let mut j = cfg.tau;
        let mut done = true;
        while j > 0 {
            j -= 1;
            indices[j] += 1;
            if indices[j] < grid.len() {
                done = false;
                break;
            }
            indices[j] = 0;
        }
        if done {
            break;
        }
    }
    Ok(CoverMap { tau: cfg.tau, grid, k_points, candidates })
}

/// Pressure estimate extracted from a cover.
#[derive(Clone, Debug)]
pub struct OracleEstimate {
    /// Minimum (or greedy) total weight of a spanning set.
    pub a_tau: f64,
    /// `(1/tau) log a_tau`.
    pub rate: f64,
    pub spanning_cardinality: usize,
    pub chosen_set: SpanningSet,
    /// Multiplicative optimality bound: 1 for exact covers, `ln(n) + 1` for
    /// greedy ones.
    pub cover_gap: f64,
}

/// Threshold below which the cover is solved exactly.
pub const EXACT_COVER_LIMIT: usize = 20;

/// Minimum-weight set cover over the candidates; exact up to
/// [`EXACT_COVER_LIMIT`] candidates, greedy with reported slack beyond.
pub fn min_weight_cover(cover: &CoverMap, weights: &[f64]) -> Result<OracleEstimate, OracleError> {
    assert_eq!(weights.len(), cover.candidates.len(), "one weight per candidate");
    let n = cover.k_points.len();
    let mut union = BitSet::zeros(n);
    for c in &cover.candidates {
        union.union_with(&c.covered);
    }
    if !union.is_full() {
        let missing = (0..n).find(|&i| !union.get(i)).unwrap();
        return Err(OracleError::UnspannableGrid { index: missing });
    }

    let chosen: Vec<usize>;
    let cover_gap: f64;
    if cover.candidates.len() <= EXACT_COVER_LIMIT {
        chosen = exact_cover(cover, weights);
        cover_gap = 1.0;
    } else {
        chosen = greedy_cover(cover, weights);
        cover_gap = (n as f64).ln() + 1.0;
    }

    // Post-hoc soundness: the chosen sequences must jointly confine every
    // K-grid point (independently recomputed unions).
    let mut check = BitSet::zeros(n);
    for &c in &chosen {
        check.union_with(&cover.candidates[c].covered);
    }
    if !check.is_full() {
        let missing = (0..n).find(|&i| !check.get(i)).unwrap();
        return Err(OracleError::CoverUnsound { index: missing });
    }

    let a_tau: f64 = chosen.iter().map(|&c| weights[c]).sum();
    let rate = a_tau.ln() / cover.tau as f64;
    let controls: Vec<Vec<DVector<f64>>> =
        chosen.iter().map(|&c| cover.candidates[c].controls(&cover.grid)).collect();
    let w: Vec<f64> = chosen.iter().map(|&c| weights[c]).collect();
    let cardinality = chosen.len();
    Ok(OracleEstimate {
        a_tau,
        rate,
        spanning_cardinality: cardinality,
        chosen_set: SpanningSet { tau: cover.tau, controls, weights: w, cardinality, rate },
        cover_gap,
    })
}

/// Exact minimum-weight cover by depth-first branch and bound.
fn exact_cover(cover: &CoverMap, weights: &[f64]) -> Vec<usize> {
    let n = cover.candidates.len();
    let n_points = cover.k_points.len();
    // Suffix unions for infeasibility pruning.
    let mut suffix = vec![BitSet::zeros(n_points); n + 1];
    for i in (0..n).rev() {
        let mut s = suffix[i + 1].clone();
        s.union_with(&cover.candidates[i].covered);
        suffix[i] = s;
    }
    let mut best_weight = f64::INFINITY;
    let mut best: Vec<usize> = Vec::new();
    let mut current: Vec<usize> = Vec::new();

    fn dfs(
        i: usize,
        covered: &BitSet,
        weight: f64,
        cover: &CoverMap,
        weights: &[f64],
        suffix: &[BitSet],
        current: &mut Vec<usize>,
        best_weight: &mut f64,
        best: &mut Vec<usize>,
    ) {
        if weight >= *best_weight {
            return;
        }
        if covered.is_full() {
            *best_weight = weight;
            *best = current.clone();
            return;
        }
        if i == cover.candidates.len() {
            return;
        }
        if covered.union_count(&suffix[i]) < covered.len {
            return; // remaining candidates cannot complete the cover
        }
        // Take i (only useful when it adds coverage).
        if covered.union_count(&cover.candidates[i].covered) > covered.count() {
            let mut next = covered.clone();
            next.union_with(&cover.candidates[i].covered);
            current.push(i);
            dfs(i + 1, &next, weight + weights[i], cover, weights, suffix, current, best_weight, best);
            current.pop();
        }
        // Skip i.
        dfs(i + 1, covered, weight, cover, weights, suffix, current, best_weight, best);
    }

    dfs(
        0,
        &BitSet::zeros(n_points),
        0.0,
        cover,
        weights,
        &suffix,
        &mut current,
        &mut best_weight,
        &mut best,
    );
    best
}

/// Greedy cover: repeatedly take the candidate with the largest
/// newly-covered-per-weight ratio (ties to the lower index).
fn greedy_cover(cover: &CoverMap, weights: &[f64]) -> Vec<usize> {
    let n_points = cover.k_points.len();
    let mut covered = BitSet::zeros(n_points);
    let mut chosen = Vec::new();
    while !covered.is_full() {
        let mut best: Option<(f64, usize)> = None;
        for (i, c) in cover.candidates.iter().enumerate() {
            let new = covered.union_count(&c.covered) - covered.count();
            if new == 0 {
                continue;
            }
            let ratio = new as f64 / weights[i];
            let better = match best {
                None => true,
                Some((r, _)) => ratio > r,
            };
            if better {
                best = Some((ratio, i));
            }
        }
        let (_, pick) = best.expect("full union guaranteed by caller");
        covered.union_with(&cover.candidates[pick].covered);
        chosen.push(pick);
    }
    chosen
}

/// Weights `e^{(S_tau f)(u)}` per candidate; in total mode the assigned
/// initial state is the covered point minimizing the state-dependent Birkhoff
/// sum, matching the infimum over totally spanning pairs.
fn candidate_weights(
    sys: &LinearSystem,
    cover: &CoverMap,
    p: &Potential,
    total_mode: bool,
) -> Result<Vec<f64>, OracleError> {
    let mut out = Vec::with_capacity(cover.candidates.len());
    let zero = DVector::zeros(sys.state_dim());
    for c in &cover.candidates {
        let controls = c.controls(&cover.grid);
        let exponent = if p.uses_state() {
            if !total_mode {
                return Err(OracleError::StateDependentPotential);
            }
            let mut best = f64::INFINITY;
            for pi in c.covered.ones() {
                let s = birkhoff_sum(p, sys, &cover.k_points[pi], &controls)?;
                if s < best {
                    best = s;
                }
            }
            best
        } else {
            birkhoff_sum(p, sys, &zero, &controls)?
        };
        out.push(exponent.exp());
    }
    Ok(out)
}

/// Brute-force pressure estimate: admissible controls, potential weights,
/// minimum-weight cover.
pub fn estimate_pressure(
    sys: &LinearSystem,
    cfg: &OracleConfig,
    p: &Potential,
) -> Result<OracleEstimate, OracleError> {
    if p.uses_state() && !cfg.total_mode {
        return Err(OracleError::StateDependentPotential);
    }
    let cover = admissible_controls(sys, cfg)?;
    let weights = candidate_weights(sys, &cover, p, cfg.total_mode)?;
    min_weight_cover(&cover, &weights)
}

/// Estimates across a list of horizons for trend inspection.
pub fn discretization_sweep(
    sys: &LinearSystem,
    cfg: &OracleConfig,
    p: &Potential,
    taus: &[usize],
) -> Result<Vec<OracleEstimate>, OracleError> {
    let mut out = Vec::with_capacity(taus.len());
    for &tau in taus {
        let mut c = cfg.clone();
        c.tau = tau;
        out.push(estimate_pressure(sys, &c, p)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests;
