//! Report and CSV emission. Floats are serialized with 17 significant
//! digits so files round-trip and byte-identical runs produce
//! byte-identical bodies. Writes are atomic (temp file then rename).

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;

use pot1d_core::bounds::DerivativeBounds;
use pot1d_core::monitor::ConvergenceReport;
use pot1d_core::stepper::Checkpoint;

pub fn fmt_float(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)
                .with_context(|| format!("creating output directory {}", dir.display()))?;
        }
    }
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, contents).with_context(|| format!("writing {}", tmp.display()))?;
    fs::rename(&tmp, path).with_context(|| format!("renaming into {}", path.display()))?;
    Ok(())
}

#[derive(Serialize)]
struct SolverJson {
    r_safety: f64,
    max_dt: f64,
    max_steps: u64,
    check_cadence: u64,
    probe_count: usize,
    quad_tol: f64,
    bounds_n_samples: usize,
}

#[derive(Serialize)]
struct ReportJson<'a> {
    schema: &'static str,
    example: &'a str,
    j: usize,
    dx: f64,
    sigma: f64,
    converged: bool,
    iterations: u64,
    t_total: f64,
    #[serde(rename = "max_E_final")]
    max_e_final: f64,
    map_error_bound: f64,
    apriori_interior: f64,
    apriori_interior_outer_g_term: f64,
    apriori_boundary: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    oracle_max_err: Option<f64>,
    min_lap_floor: f64,
    grad_clamp_events: u64,
    wall_seconds: f64,
    bounds: &'a DerivativeBounds<f64>,
    solver: SolverJson,
}

pub struct RunMeta<'a> {
    pub example: &'a str,
    pub j: usize,
    pub dx: f64,
    pub sigma: f64,
    pub quad_tol: f64,
    pub r_safety: f64,
    pub max_dt: f64,
    pub max_steps: u64,
    pub check_cadence: u64,
    pub probe_count: usize,
    pub bounds_n_samples: usize,
}

pub fn write_report(path: &Path, meta: &RunMeta, report: &ConvergenceReport<f64>) -> Result<()> {
    let json = ReportJson {
        schema: "pot1d.report.v1",
        example: meta.example,
        j: meta.j,
        dx: meta.dx,
        sigma: meta.sigma,
        converged: report.converged,
        iterations: report.iterations,
        t_total: report.t_total,
        max_e_final: report.max_e_final,
        map_error_bound: report.map_error_bound,
        apriori_interior: report.apriori_interior,
        apriori_interior_outer_g_term: report.apriori_interior_outer_g_term,
        apriori_boundary: report.apriori_boundary,
        oracle_max_err: report.oracle_max_err,
        min_lap_floor: report.min_lap_floor,
        grad_clamp_events: report.grad_clamp_events,
        wall_seconds: report.wall_seconds,
        bounds: &report.bounds,
        solver: SolverJson {
            r_safety: meta.r_safety,
            max_dt: meta.max_dt,
            max_steps: meta.max_steps,
            check_cadence: meta.check_cadence,
            probe_count: meta.probe_count,
            quad_tol: meta.quad_tol,
            bounds_n_samples: meta.bounds_n_samples,
        },
    };
    let mut text = serde_json::to_string_pretty(&json)?;
    text.push('\n');
    write_atomic(path, &text)
}

/// `solution.csv`: one row per interior node.
pub fn solution_csv(rows: &[(usize, f64, f64, f64, f64)]) -> String {
    let mut out = String::from("# schema: pot1d.solution.v1\nj,x,U,gradU,lapU\n");
    for &(j, x, u, grad, lap) in rows {
        let _ = writeln!(
            out,
            "{j},{},{},{},{}",
            fmt_float(x),
            fmt_float(u),
            fmt_float(grad),
            fmt_float(lap)
        );
    }
    out
}

/// `timeseries.csv`: one row per convergence check.
pub fn timeseries_csv(timeline: &[Checkpoint<f64>]) -> String {
    let mut out = String::from("# schema: pot1d.timeseries.v1\nstep,t,dt,maxE,minLap\n");
    for c in timeline {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            c.step,
            fmt_float(c.t),
            fmt_float(c.dt),
            fmt_float(c.max_e),
            fmt_float(c.min_lap)
        );
    }
    out
}

/// `oracle.csv`: the direct map tabulated on the grid.
pub fn oracle_csv(rows: &[(usize, f64, f64)]) -> String {
    let mut out = String::from("# schema: pot1d.oracle.v1\nj,x,T\n");
    for &(j, x, t) in rows {
        let _ = writeln!(out, "{j},{},{}", fmt_float(x), fmt_float(t));
    }
    out
}

/// `compare.csv`: solver map against the oracle, node by node.
#[allow(clippy::type_complexity)]
pub fn compare_csv(rows: &[(usize, f64, f64, f64, f64, f64, f64)]) -> String {
    let mut out = String::from("# schema: pot1d.compare.v1\nj,x,gradU,lapU,T_oracle,abs_err,E\n");
    for &(j, x, grad, lap, t, abs_err, e) in rows {
        let _ = writeln!(
            out,
            "{j},{},{},{},{},{},{}",
            fmt_float(x),
            fmt_float(grad),
            fmt_float(lap),
            fmt_float(t),
            fmt_float(abs_err),
            fmt_float(e)
        );
    }
    out
}
