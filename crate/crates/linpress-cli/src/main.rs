//! Command-line front end: loads a system specification, dispatches to the
//! analysis library, and emits machine-readable reports.
//!
//! Reports go to standard output (JSON by default, point clouds as CSV with
//! `--output csv`); diagnostics such as wall time go to standard error, so
//! identical invocations produce byte-identical stdout. Every error path
//! prints a single-line JSON error object to stderr and exits nonzero:
//! 1 for specification errors, 2 for violated preconditions, 3 for budget
//! overruns.

use std::path::PathBuf;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use nalgebra::DVector;
use serde_json::{Value, json};

use linpress::control_set::ControlSetError;
use linpress::geometry::{self, ConvexPolytope, GeometryError};
use linpress::jsonio::{self, SystemSpec};
use linpress::oracle::{OracleConfig, OracleError};
use linpress::potential::PotentialError;
use linpress::pressure::{PressureError, SpanningConstructionConfig};
use linpress::reachability::{LinearSystem, ReachError};
use linpress::spectral::{DEFAULT_TOL_CENTER, GlobalControllability, SpectralError, SpectralSplit};

#[derive(Parser)]
#[command(name = "linpress", version, about = "Controllability and invariance pressure of discrete-time linear control systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Report format on standard output.
    #[arg(long, global = true, value_enum, default_value_t = Output::Json)]
    output: Output,
    /// Seed for randomized candidate searches.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Numerical tolerance knob (convergence tolerance for control-set
    /// sweeps, membership tolerance elsewhere).
    #[arg(long, global = true)]
    tol: Option<f64>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Output {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Spectral report, Kalman rank, global controllability class and
    /// boundedness prediction for the control set.
    Analyze { file: PathBuf },
    /// Time-k reachable set from the origin as a vertex list.
    Reach {
        file: PathBuf,
        #[arg(long)]
        steps: usize,
    },
    /// Inner approximation of the control set D.
    ControlSet {
        file: PathBuf,
        #[arg(long, default_value_t = 25)]
        horizon: usize,
    },
    /// Invariance entropy log|det A+| of the control set.
    Entropy { file: PathBuf },
    /// Invariance pressure log|det A+| + min f over U.
    Pressure {
        file: PathBuf,
        #[arg(long)]
        potential: String,
    },
    /// Constructive spanning set around the origin orbit.
    Spanning {
        file: PathBuf,
        #[arg(long)]
        tau0: usize,
        #[arg(long)]
        m: usize,
        #[arg(long)]
        xi: f64,
        #[arg(long)]
        b0: Option<f64>,
        #[arg(long, default_value = "0")]
        potential: String,
        /// Dump the spanning controls to a JSON file for replay.
        #[arg(long)]
        controls_out: Option<PathBuf>,
    },
    /// Brute-force pressure estimate on a discretized instance.
    Oracle {
        file: PathBuf,
        #[arg(long)]
        tau: usize,
        #[arg(long, default_value_t = 3)]
        control_grid: usize,
        #[arg(long, default_value_t = 3)]
        state_grid: usize,
        #[arg(long, default_value = "0")]
        potential: String,
        /// Use totally spanning state-control pairs (state potentials).
        #[arg(long)]
        total: bool,
        /// Sweep over several horizons (comma separated).
        #[arg(long, value_delimiter = ',')]
        taus: Option<Vec<usize>>,
        /// Trajectory-step budget.
        #[arg(long)]
        budget: Option<f64>,
    },
}

struct CliError {
    code: i32,
    kind: &'static str,
    message: String,
}

impl CliError {
    fn spec(kind: &'static str, message: impl Into<String>) -> Self {
        Self { code: 1, kind, message: message.into() }
    }

    fn precondition(kind: &'static str, message: impl Into<String>) -> Self {
        Self { code: 2, kind, message: message.into() }
    }

    fn budget(message: impl Into<String>) -> Self {
        Self { code: 3, kind: "BudgetExceeded", message: message.into() }
    }
}

impl From<jsonio::SpecError> for CliError {
    fn from(e: jsonio::SpecError) -> Self {
        CliError::spec("SpecError", e.to_string())
    }
}

impl From<SpectralError> for CliError {
    fn from(e: SpectralError) -> Self {
        CliError::precondition("SpectralError", e.to_string())
    }
}

impl From<ReachError> for CliError {
    fn from(e: ReachError) -> Self {
        CliError::precondition("ReachError", e.to_string())
    }
}

impl From<ControlSetError> for CliError {
    fn from(e: ControlSetError) -> Self {
        CliError::precondition("ControlSetError", e.to_string())
    }
}

impl From<GeometryError> for CliError {
    fn from(e: GeometryError) -> Self {
        CliError::precondition("GeometryError", e.to_string())
    }
}

impl From<PressureError> for CliError {
    fn from(e: PressureError) -> Self {
        CliError::precondition("PressureError", e.to_string())
    }
}

impl From<PotentialError> for CliError {
    fn from(e: PotentialError) -> Self {
        match e {
            PotentialError::ParseError { .. }
            | PotentialError::UnknownIdentifier { .. }
            | PotentialError::ArityError { .. } => CliError::spec("PotentialParseError", e.to_string()),
            other => CliError::precondition("PotentialError", other.to_string()),
        }
    }
}

impl From<OracleError> for CliError {
    fn from(e: OracleError) -> Self {
        match e {
            OracleError::BudgetExceeded { .. } => CliError::budget(e.to_string()),
            other => CliError::precondition("OracleError", other.to_string()),
        }
    }
}

fn main() {
    let cli = Cli::parse();
    let started = Instant::now();
    match run(&cli) {
        Ok(report) => {
            eprintln!(
                "linpress: {} finished in {} ms, {} warning(s)",
                report.command,
                started.elapsed().as_millis(),
                report.warnings.len()
            );
            match cli.output {
                Output::Json => println!("{}", report.to_json()),
                Output::Csv => match report.csv {
                    Some(csv) => print!("{csv}"),
                    None => {
                        let err = CliError::spec(
                            "OutputUnsupported",
                            format!("command `{}` has no CSV point cloud", report.command),
                        );
                        emit_error(&err);
                        std::process::exit(err.code);
                    }
                },
            }
        }
        Err(err) => {
            emit_error(&err);
            std::process::exit(err.code);
        }
    }
}

fn emit_error(err: &CliError) {
    eprintln!(
        "{}",
        json!({"error": {"code": err.code, "kind": err.kind, "message": err.message}})
    );
}

struct Report {
    command: &'static str,
    parameters: Value,
    results: Value,
    warnings: Vec<String>,
    csv: Option<String>,
}

impl Report {
    fn to_json(&self) -> String {
        json!({
            "schema": "1",
            "command": self.command,
            "parameters": self.parameters,
            "results": self.results,
            "warnings": self.warnings,
        })
        .to_string()
    }
}

fn load_system(path: &PathBuf) -> Result<(LinearSystem, SpectralSplit), CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::spec("IoError", format!("cannot read {}: {e}", path.display())))?;
    let spec: SystemSpec = serde_json::from_str(&text)
        .map_err(|e| CliError::spec("JsonError", format!("{}: {e}", path.display())))?;
    let sys = spec.to_system()?;
    let split = linpress::spectral_split(sys.a(), DEFAULT_TOL_CENTER)?;
    Ok((sys, split))
}

fn vertices_csv(p: &ConvexPolytope) -> String {
    let mut out = String::new();
    for v in p.vertices() {
        let row: Vec<String> = v.iter().map(|c| format!("{c}")).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

fn run(cli: &Cli) -> Result<Report, CliError> {
    match &cli.command {
        Command::Analyze { file } => {
            let (sys, split) = load_system(file)?;
            let kalman = linpress::kalman_controllable(sys.a(), sys.b());
            let class = linpress::classify_global_controllability(sys.a(), sys.b(), &split);
            let spectral = jsonio::spectral_report(&split, &kalman);
            let mut warnings = Vec::new();
            if !split.is_hyperbolic() {
                warnings.push("A is not hyperbolic; the control set is unbounded".to_string());
            }
            if !kalman.controllable {
                warnings.push(
                    "the pair (A, B) is not controllable; no control set with nonvoid interior"
                        .to_string(),
                );
            }
            let class_name = match class {
                GlobalControllability::ReachableAll => "ReachableAll",
                GlobalControllability::ControllableToZeroAll => "ControllableToZeroAll",
                GlobalControllability::ControllableEverywhere => "ControllableEverywhere",
                GlobalControllability::Neither => "Neither",
            };
            Ok(Report {
                command: "analyze",
                parameters: json!({"file": file.display().to_string(), "seed": cli.seed}),
                results: json!({
                    "eigenvalues": spectral.eigenvalues,
                    "dims": spectral.dims,
                    "log_unstable_det": spectral.log_unstable_det,
                    "hyperbolic": spectral.hyperbolic,
                    "kalman_rank": spectral.kalman_rank,
                    "controllable": kalman.controllable,
                    "class": class_name,
                    "bounded_control_set_predicted": split.is_hyperbolic(),
                }),
                warnings,
                csv: None,
            })
        }
        Command::Reach { file, steps } => {
            let (sys, _) = load_system(file)?;
            let poly = linpress::reach_k(&sys, *steps)?;
            Ok(Report {
                command: "reach",
                parameters: json!({"file": file.display().to_string(), "steps": steps, "seed": cli.seed}),
                results: json!({"k": steps, "vertices": jsonio::vertices_json(&poly)}),
                warnings: Vec::new(),
                csv: Some(vertices_csv(&poly)),
            })
        }
        Command::ControlSet { file, horizon } => {
            let (sys, split) = load_system(file)?;
            let conv_tol = cli.tol.unwrap_or(1e-3);
            let approx = linpress::approximate_control_set(&sys, &split, *horizon, conv_tol)?;
            let mut warnings = Vec::new();
            if !approx.converged {
                warnings.push(format!(
                    "sweep not converged at horizon {} (last delta {:e})",
                    approx.horizon, approx.last_delta
                ));
            }
            if !approx.bounded_prediction {
                warnings.push("A is not hyperbolic; D is unbounded".to_string());
            }
            let last_delta =
                if approx.last_delta.is_finite() { json!(approx.last_delta) } else { Value::Null };
            Ok(Report {
                command: "control-set",
                parameters: json!({
                    "file": file.display().to_string(),
                    "horizon": horizon,
                    "tol": conv_tol,
                    "seed": cli.seed,
                }),
                results: json!({
                    "horizon": approx.horizon,
                    "vertices": jsonio::vertices_json(&approx.inner),
                    "bounded_prediction": approx.bounded_prediction,
                    "converged": approx.converged,
                    "last_delta": last_delta,
                }),
                warnings,
                csv: Some(vertices_csv(&approx.inner)),
            })
        }
        Command::Entropy { file } => {
            let (sys, split) = load_system(file)?;
            let entropy = linpress::invariance_entropy(&sys, &split)?;
            Ok(Report {
                command: "entropy",
                parameters: json!({"file": file.display().to_string(), "seed": cli.seed}),
                results: json!({"entropy": entropy}),
                warnings: Vec::new(),
                csv: None,
            })
        }
        Command::Pressure { file, potential } => {
            let (sys, split) = load_system(file)?;
            let p = linpress::parse_potential(potential, sys.state_dim(), sys.control_dim())?;
            let res = linpress::invariance_pressure_formula(&sys, &split, &p)?;
            Ok(Report {
                command: "pressure",
                parameters: json!({
                    "file": file.display().to_string(),
                    "potential": potential,
                    "seed": cli.seed,
                }),
                results: json!({
                    "pressure": res.pressure,
                    "entropy": res.entropy,
                    "log_unstable_det": res.log_unstable_det,
                    "min_potential": res.min_potential,
                    "argmin_control": res.argmin_control.iter().copied().collect::<Vec<f64>>(),
                }),
                warnings: Vec::new(),
                csv: None,
            })
        }
        Command::Spanning { file, tau0, m, xi, b0, potential, controls_out } => {
            let (sys, split) = load_system(file)?;
            let p = linpress::parse_potential(potential, sys.state_dim(), sys.control_dim())?;
            let d_poly = linpress::approximate_control_set(&sys, &split, 25, 1e-6)?.inner;
            let mut cfg = SpanningConstructionConfig::at_origin(&sys, *tau0, *m, *xi);
            cfg.b0 = *b0;
            let ss = linpress::spanning_construction(&sys, &split, &d_poly, &cfg, &p)?;
            let controls_json: Vec<Vec<Vec<f64>>> = ss
                .controls
                .iter()
                .map(|seq| seq.iter().map(|u| u.iter().copied().collect()).collect())
                .collect();
            if let Some(path) = controls_out {
                let dump = json!({"tau": ss.tau, "controls": controls_json});
                std::fs::write(path, dump.to_string()).map_err(|e| {
                    CliError::spec("IoError", format!("cannot write {}: {e}", path.display()))
                })?;
            }
            Ok(Report {
                command: "spanning",
                parameters: json!({
                    "file": file.display().to_string(),
                    "tau0": tau0,
                    "m": m,
                    "xi": xi,
                    "b0": b0,
                    "potential": potential,
                    "seed": cli.seed,
                }),
                results: json!({
                    "tau": ss.tau,
                    "cardinality": ss.cardinality,
                    "rate": ss.rate,
                    "weights": ss.weights,
                    "controls": controls_json,
                }),
                warnings: Vec::new(),
                csv: None,
            })
        }
        Command::Oracle { file, tau, control_grid, state_grid, potential, total, taus, budget } => {
            let (sys, split) = load_system(file)?;
            let p = linpress::parse_potential(potential, sys.state_dim(), sys.control_dim())?;
            // Default confinement: the converged control-set approximation
            // shrunk by a small margin; default K: the confinement scaled by
            // one half about the origin.
            let d_poly = linpress::approximate_control_set(&sys, &split, 25, 1e-6)?.inner;
            let q = geometry::erode(&d_poly, 1e-6)?;
            let k = half_scale(&q)?;
            let mut cfg = OracleConfig::new(*tau, *control_grid, *state_grid, q, k);
            cfg.total_mode = *total;
            if let Some(b) = budget {
                cfg.budget = *b;
            }
            let parameters = json!({
                "file": file.display().to_string(),
                "tau": tau,
                "control_grid": control_grid,
                "state_grid": state_grid,
                "potential": potential,
                "total": total,
                "taus": taus,
                "budget": cfg.budget,
                "seed": cli.seed,
            });
            match taus {
                Some(list) => {
                    let estimates = linpress::discretization_sweep(&sys, &cfg, &p, list)?;
                    let rows: Vec<Value> = list
                        .iter()
                        .zip(&estimates)
                        .map(|(t, e)| {
                            json!({
                                "tau": t,
                                "a_tau": e.a_tau,
                                "rate": e.rate,
                                "cardinality": e.spanning_cardinality,
                                "cover_gap": e.cover_gap,
                            })
                        })
                        .collect();
                    let mut csv = String::from("tau,rate\n");
                    for (t, e) in list.iter().zip(&estimates) {
                        csv.push_str(&format!("{t},{}\n", e.rate));
                    }
                    Ok(Report {
                        command: "oracle",
                        parameters,
                        results: json!({"sweep": rows}),
                        warnings: Vec::new(),
                        csv: Some(csv),
                    })
                }
                None => {
                    let est = linpress::estimate_pressure(&sys, &cfg, &p)?;
                    let csv = format!("tau,rate\n{tau},{}\n", est.rate);
                    Ok(Report {
                        command: "oracle",
                        parameters,
                        results: json!({
                            "a_tau": est.a_tau,
                            "rate": est.rate,
                            "cardinality": est.spanning_cardinality,
                            "cover_gap": est.cover_gap,
                        }),
                        warnings: Vec::new(),
                        csv: Some(csv),
                    })
                }
            }
        }
    }
}

/// The default initial set K: the confinement polytope scaled by one half
/// about the origin.
fn half_scale(q: &ConvexPolytope) -> Result<ConvexPolytope, CliError> {
    let scaled: Vec<DVector<f64>> = q.vertices().iter().map(|v| v * 0.5).collect();
    Ok(geometry::convex_hull(&scaled, q.dim())?)
}
