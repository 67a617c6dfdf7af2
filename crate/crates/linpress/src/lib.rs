//! Controllability analysis and invariance pressure for discrete-time linear
//! control systems `x_{k+1} = A x_k + B u_k` with `u_k` constrained to a
//! compact convex control range `U` containing the origin in its interior.
//!
//! The crate provides
//!
//! - convex-polytope primitives in vertex representation plus a small dense
//!   simplex kernel ([`geometry`]),
//! - eigenstructure analysis of `A`: stable/center/unstable splitting,
//!   hyperbolicity, unstable log-determinant, Kalman rank ([`spectral`]),
//! - time-`k` reachable and controllable sets and their structure checks
//!   ([`reachability`]),
//! - approximation of the unique control set `D` with nonvoid interior and
//!   its boundedness classification ([`control_set`]),
//! - a small expression language for potentials `f(u)` or `f(x, u)` with a
//!   derivative-free minimizer over the control range ([`potential`]),
//! - the closed-form invariance entropy/pressure of `D`, periodic-orbit
//!   machinery and the constructive spanning-set generator ([`pressure`]),
//! - a definition-level brute-force estimator of the invariance pressure on
//!   discretized instances, used as an independent cross-check ([`oracle`]),
//! - JSON wire formats for systems, polytopes and spectral reports
//!   ([`jsonio`]).

pub mod control_set;
pub mod geometry;
pub mod jsonio;
pub mod oracle;
pub mod potential;
pub mod pressure;
pub mod reachability;
pub mod spectral;

pub use control_set::{
    ControlSetApprox, approximate_control_set, boundedness_classifier, equilibrium,
    interior_trajectory_check,
};
pub use geometry::lp::{LpConstraint, LpOutcome, LpProblem, Relation, lp_solve};
pub use geometry::{
    ConvexPolytope, GeometryError, Halfspace, convex_hull, hausdorff_distance, linear_image,
    minkowski_sum,
};
pub use oracle::{
    OracleConfig, OracleEstimate, admissible_controls, discretization_sweep, estimate_pressure,
    min_weight_cover,
};
pub use potential::{Potential, birkhoff_sum, minimize_over_u, parse_potential};
pub use pressure::{
    PeriodicBound, PressureResult, SpanningConstructionConfig, SpanningSet, invariance_entropy,
    invariance_pressure_formula, periodic_orbit, spanning_construction, spanning_rate,
    upper_bound_via_periodic,
};
pub use reachability::{
    LinearSystem, StructureReport, Trajectory, control_k, reach_k, reach_membership, step,
    structure_check, time_reversed, trajectory,
};
pub use spectral::{
    GlobalControllability, KalmanReport, SpectralSplit, Spectrum, classify_global_controllability,
    is_hyperbolic, kalman_controllable, spectral_split, unstable_log_det,
};
