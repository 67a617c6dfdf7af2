//! Wire formats: polytope and system specifications (with the box shorthand)
//! and the spectral report. Validation failures carry a JSON-pointer style
//! path to the offending field.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::ConvexPolytope;
use crate::reachability::LinearSystem;
use crate::spectral::{KalmanReport, SpectralSplit};

#[derive(Debug, Error)]
#[error("invalid specification at `{pointer}`: {message}")]
pub struct SpecError {
    pub pointer: String,
    pub message: String,
}

impl SpecError {
    fn new(pointer: impl Into<String>, message: impl Into<String>) -> Self {
        Self { pointer: pointer.into(), message: message.into() }
    }
}

/// Polytope input: explicit vertices or the box shorthand.
#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(untagged)]
pub enum PolytopeSpec {
    Box {
        #[serde(rename = "type")]
        kind: String,
        lower: Vec<f64>,
        upper: Vec<f64>,
    },
    Explicit {
        dim: usize,
        vertices: Vec<Vec<f64>>,
    },
}

impl PolytopeSpec {
    pub fn to_polytope(&self, pointer: &str) -> Result<ConvexPolytope, SpecError> {
        match self {
            PolytopeSpec::Box { kind, lower, upper } => {
                if kind != "box" {
                    return Err(SpecError::new(
                        format!("{pointer}/type"),
                        format!("unknown polytope type `{kind}`"),
                    ));
                }
                if lower.len() != upper.len() {
                    return Err(SpecError::new(
                        format!("{pointer}/upper"),
                        format!("lower has {} entries, upper has {}", lower.len(), upper.len()),
                    ));
                }
                ConvexPolytope::box_from_bounds(lower, upper)
                    .map_err(|e| SpecError::new(pointer, e.to_string()))
            }
            PolytopeSpec::Explicit { dim, vertices } => {
                if *dim == 0 {
                    return Err(SpecError::new(format!("{pointer}/dim"), "dimension must be positive"));
                }
                if *dim > 3 {
                    return Err(SpecError::new(
                        format!("{pointer}/dim"),
                        "explicit vertex lists are limited to dimension <= 3; use the box shorthand",
                    ));
                }
                if vertices.is_empty() {
                    return Err(SpecError::new(format!("{pointer}/vertices"), "vertex list is empty"));
                }
                let mut points = Vec::with_capacity(vertices.len());
                for (i, v) in vertices.iter().enumerate() {
                    if v.len() != *dim {
                        return Err(SpecError::new(
                            format!("{pointer}/vertices/{i}"),
                            format!("vertex has {} coordinates, expected {dim}", v.len()),
                        ));
                    }
                    points.push(DVector::from_row_slice(v));
                }
                crate::geometry::convex_hull(&points, *dim)
                    .map_err(|e| SpecError::new(format!("{pointer}/vertices"), e.to_string()))
            }
        }
    }
}

/// Serialize a polytope to the explicit wire format.
pub fn polytope_to_spec(p: &ConvexPolytope) -> PolytopeSpec {
    PolytopeSpec::Explicit {
        dim: p.dim(),
        vertices: p.vertices().iter().map(|v| v.iter().copied().collect()).collect(),
    }
}

pub fn vertices_json(p: &ConvexPolytope) -> Vec<Vec<f64>> {
    p.vertices().iter().map(|v| v.iter().copied().collect()).collect()
}

/// System input: matrices as row-major nested arrays plus a control range.
#[derive(Clone, Debug, Deserialize, Serialize)]
pub struct SystemSpec {
    #[serde(rename = "A")]
    pub a: Vec<Vec<f64>>,
    #[serde(rename = "B")]
    pub b: Vec<Vec<f64>>,
    #[serde(rename = "U")]
    pub u: PolytopeSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

impl SystemSpec {
    pub fn to_system(&self) -> Result<LinearSystem, SpecError> {
        let d = self.a.len();
        if d == 0 {
            return Err(SpecError::new("/A", "matrix A is empty"));
        }
        for (i, row) in self.a.iter().enumerate() {
            if row.len() != d {
                return Err(SpecError::new(
                    format!("/A/{i}"),
                    format!("row has {} entries, expected {d}", row.len()),
                ));
            }
        }
        let m = self.b.first().map(|r| r.len()).unwrap_or(0);
        if self.b.len() != d {
            return Err(SpecError::new("/B", format!("B has {} rows, expected {d}", self.b.len())));
        }
        if m == 0 {
            return Err(SpecError::new("/B/0", "B must have at least one column"));
        }
        for (i, row) in self.b.iter().enumerate() {
            if row.len() != m {
                return Err(SpecError::new(
                    format!("/B/{i}"),
                    format!("row has {} entries, expected {m}", row.len()),
                ));
            }
        }
        let a = DMatrix::from_fn(d, d, |r, c| self.a[r][c]);
        let b = DMatrix::from_fn(d, m, |r, c| self.b[r][c]);
        let u = self.u.to_polytope("/U")?;
        LinearSystem::new(a, b, u).map_err(|e| SpecError::new("/", e.to_string()))
    }
}

/// Machine-readable eigenstructure report.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SpectralReport {
    pub eigenvalues: Vec<EigenvalueJson>,
    pub dims: DimsJson,
    pub log_unstable_det: f64,
    pub hyperbolic: bool,
    pub kalman_rank: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EigenvalueJson {
    pub re: f64,
    pub im: f64,
    pub mult: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DimsJson {
    pub s: usize,
    pub c: usize,
    pub u: usize,
}

pub fn spectral_report(split: &SpectralSplit, kalman: &KalmanReport) -> SpectralReport {
    SpectralReport {
        eigenvalues: split
            .spectrum
            .eigenvalues
            .iter()
            .map(|e| EigenvalueJson { re: e.re, im: e.im, mult: e.multiplicity })
            .collect(),
        dims: DimsJson { s: split.d_s, c: split.d_c, u: split.d_u },
        log_unstable_det: split.log_unstable_det,
        hyperbolic: split.is_hyperbolic(),
        kalman_rank: kalman.rank,
    }
}
