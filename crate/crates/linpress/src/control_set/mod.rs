//! Approximation and classification of the unique control set `D` with
//! nonvoid interior.
//!
//! `D` is approached from inside by `D_k = R_k(0) ∩ C_k(0)`: both factors are
//! monotone in `k` and, for controllable pairs, the intersection acquires the
//! origin in its interior once `k` reaches the state dimension. For
//! hyperbolic `A` the sweep converges (the control set is bounded); otherwise
//! it diverges and the approximation reports unbounded growth instead of a
//! converged polytope. The reported polytope is the closed approximation;
//! whether individual boundary faces belong to `D` is below numerical
//! resolution, so membership queries near the boundary should always carry a
//! tolerance.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::geometry::{self, ConvexPolytope, GeometryError};
use crate::reachability::{
    LinearSystem, ReachError, reach_advance, reach_seed, time_reversed, trajectory,
};
use crate::spectral::SpectralSplit;

#[derive(Debug, Error)]
pub enum ControlSetError {
    #[error("the pair (A, B) is not controllable; no control set with nonvoid interior exists")]
    NotControllable,
    #[error("I - A is singular; no equilibrium for this control")]
    SingularShift,
    #[error("reachability failure: {0}")]
    Reach(#[from] ReachError),
    #[error("geometry failure: {0}")]
    Geometry(#[from] GeometryError),
    #[error("state is not strictly interior to D (margin {0:e})")]
    NotInterior(f64),
    #[error("trajectory exits D at step {step} by {violation:e}")]
    TrajectoryExitsD { step: usize, violation: f64 },
    #[error("horizon must be at least the state dimension")]
    HorizonTooShort,
}

/// Inner approximation of the control set at a finite horizon.
#[derive(Clone, Debug)]
pub struct ControlSetApprox {
    /// Final horizon used.
    pub horizon: usize,
    /// `R_horizon(0) ∩ C_horizon(0)`.
    pub inner: ConvexPolytope,
    /// Boundedness prediction from hyperbolicity of `A`.
    pub bounded_prediction: bool,
    /// True when the Hausdorff change stayed below the tolerance for two
    /// consecutive sweeps.
    pub converged: bool,
    /// Hausdorff change between the last two sweeps.
    pub last_delta: f64,
    /// Inradius of `D_k` per sweep (diagnostic for the unbounded case).
    pub inradius_history: Vec<f64>,
}

impl ControlSetApprox {
    /// Strictly increasing inradius over the last `n` sweeps signals the
    /// unbounded (non-hyperbolic) regime.
    pub fn inradius_strictly_increasing(&self, n: usize) -> bool {
        let h = &self.inradius_history;
        if h.len() < n + 1 {
            return false;
        }
        h.windows(2).skip(h.len() - 1 - n).all(|w| w[1] > w[0])
    }
}

/// Sweep `D_k = R_k(0) ∩ C_k(0)` for `k = d ..= k_max`, stopping once the
/// Hausdorff change stays below `conv_tol` for two consecutive sweeps.
pub fn approximate_control_set(
    sys: &LinearSystem,
    split: &SpectralSplit,
    k_max: usize,
    conv_tol: f64,
) -> Result<ControlSetApprox, ControlSetError> {
    if !sys.is_kalman_controllable() {
        return Err(ControlSetError::NotControllable);
    }
    let d = sys.state_dim();
    if k_max < d {
        return Err(ControlSetError::HorizonTooShort);
    }
    let bounded_prediction = split.is_hyperbolic();

    // The sweep is incremental and stops at convergence: carrying the reach
    // recursion further than needed lets unstable modes inflate coordinates
    // exponentially and wrecks the intersection numerics.
    let rev = time_reversed(sys)?;
    let reach_bu = reach_seed(sys)?;
    let ctrl_bu = reach_seed(&rev)?;
    let mut reach = reach_bu.clone();
    let mut ctrl = ctrl_bu.clone();

    let mut previous: Option<ConvexPolytope> = None;
    let mut last_delta = f64::INFINITY;
    let mut small_streak = 0usize;
    let mut converged = false;
    let mut inradius_history = Vec::new();
    let mut horizon = d;

    for k in 1..=k_max {
        if k > 1 {
            reach = reach_advance(sys, &reach_bu, &reach)?;
            ctrl = reach_advance(&rev, &ctrl_bu, &ctrl)?;
        }
        if k < d {
            continue;
        }
        let dk = geometry::intersect(&reach, &ctrl)?;
        inradius_history.push(dk.inradius()?);
        if let Some(prev) = &previous {
            last_delta = geometry::hausdorff_distance(prev, &dk)?;
            small_streak = if last_delta < conv_tol { small_streak + 1 } else { 0 };
        }
        horizon = k;
        previous = Some(dk);
        if small_streak >= 2 {
            converged = true;
            break;
        }
    }

    Ok(ControlSetApprox {
        horizon,
        inner: previous.expect("at least one sweep"),
        bounded_prediction,
        converged,
        last_delta,
        inradius_history,
    })
}

/// Fixed point of `x -> A x + B u` for a constant admissible control:
/// `(I - A)^{-1} B u`.
pub fn equilibrium(sys: &LinearSystem, u: &DVector<f64>) -> Result<DVector<f64>, ControlSetError> {
    sys.control_admissible(u)?;
    let d = sys.state_dim();
    let shift = DMatrix::identity(d, d) - sys.a();
    if shift.determinant().abs() <= 1e-9 {
        return Err(ControlSetError::SingularShift);
    }
    let rhs = sys.b() * u;
    shift.lu().solve(&rhs).ok_or(ControlSetError::SingularShift)
}

/// Result of probing the interior-invariance property along a trajectory.
#[derive(Clone, Copy, Debug)]
pub struct InteriorCheck {
    /// True iff every visited state (after the start) is strictly interior.
    pub all_interior: bool,
    /// Minimum interior margin over the visited states.
    pub min_margin: f64,
}

/// Probe: a trajectory that starts strictly inside `D` and stays in `D` must
/// stay strictly inside. Preconditions are enforced: the start needs margin
/// >= 1e-6 and every state must lie in `D` within 1e-9, otherwise the
/// corresponding error is returned.
pub fn interior_trajectory_check(
    sys: &LinearSystem,
    d_poly: &ConvexPolytope,
    x: &DVector<f64>,
    controls: &[DVector<f64>],
) -> Result<InteriorCheck, ControlSetError> {
    let start_margin = d_poly.interior_margin(x)?;
    if start_margin < 1e-6 {
        return Err(ControlSetError::NotInterior(start_margin));
    }
    let traj = trajectory(sys, x, controls)?;
    let mut min_margin = f64::INFINITY;
    for (step, state) in traj.states.iter().enumerate().skip(1) {
        let margin = d_poly.interior_margin(state)?;
        if margin < -1e-9 {
            return Err(ControlSetError::TrajectoryExitsD { step, violation: -margin });
        }
        min_margin = min_margin.min(margin);
    }
    Ok(InteriorCheck { all_interior: min_margin > 0.0, min_margin })
}

/// The control set is bounded exactly when `A` is hyperbolic.
pub fn boundedness_classifier(split: &SpectralSplit) -> bool {
    split.is_hyperbolic()
}
