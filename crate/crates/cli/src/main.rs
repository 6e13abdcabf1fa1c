//! `pot1d`: optimal transport maps between densities on bounded intervals.
//!
//! Subcommands: `solve` (time-march to tolerance), `oracle` (tabulate the
//! direct quantile map), `compare` (solve, then certify against the
//! oracle), `catalog` (list built-in examples). Exit codes: 0 converged /
//! certified, 2 not converged / not certified, 1 error.

mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};

use pot1d_core::bounds::{self, compute_bounds};
use pot1d_core::densities::{self, catalog, CatalogEntry, CATALOG_IDS};
use pot1d_core::grid::{build_grid, grad_centered, lap_centered, Grid};
use pot1d_core::monitor::{self, StoppingRule};
use pot1d_core::oracle::OptimalMap;
use pot1d_core::stepper::{run, StepConfig};

use config::{Overrides, RunConfig};
use output::RunMeta;

const AUTO_J_MIN: usize = 64;
const AUTO_J_MAX: usize = 16384;
/// Bisection tolerance of the oracle used by `oracle` and `compare`.
const ORACLE_INV_TOL: f64 = 1e-10;

#[derive(Parser)]
#[command(
    name = "pot1d",
    version,
    about = "1-D optimal transport maps via the parabolic flow"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Time-march the transport flow until the CDF mismatch drops below
    /// the tolerance; writes report.json and solution.csv.
    Solve(RunArgs),
    /// Tabulate the direct map T = G^{-1}(F) on the grid into oracle.csv.
    Oracle(RunArgs),
    /// Solve, then certify the discrete map against the oracle on the
    /// same grid; writes compare.csv next to the solve outputs.
    Compare(RunArgs),
    /// List the built-in examples.
    Catalog {
        /// Emit a JSON array instead of the plain listing.
        #[arg(long)]
        json: bool,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Built-in example id (see `pot1d catalog`).
    #[arg(long)]
    example: Option<String>,
    /// TOML config file; flags override file values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Stopping tolerance on the max CDF mismatch.
    #[arg(long)]
    sigma: Option<f64>,
    /// Number of grid cells J (0 = auto from the admissible dx).
    #[arg(long = "grid")]
    grid: Option<usize>,
    /// Iteration cap; exceeding it reports non-convergence (exit 2).
    #[arg(long = "max-steps")]
    max_steps: Option<u64>,
    /// Output directory (default: $POT1D_OUT or the working directory).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write timeseries.csv (one row per convergence check).
    #[arg(long)]
    timeseries: bool,
}

impl RunArgs {
    fn resolve(self) -> Result<RunConfig> {
        config::resolve(
            self.config.as_deref(),
            Overrides {
                example: self.example,
                sigma: self.sigma,
                j: self.grid,
                max_steps: self.max_steps,
                out: self.out,
                timeseries: self.timeseries,
            },
        )
    }
}

fn main() -> ExitCode {
    // Exit 1 on usage errors; clap's default of 2 is reserved here for
    // non-converged runs.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = u8::from(e.use_stderr());
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let outcome = match cli.cmd {
        Cmd::Solve(args) => args.resolve().and_then(cmd_solve),
        Cmd::Oracle(args) => args.resolve().and_then(cmd_oracle),
        Cmd::Compare(args) => args.resolve().and_then(cmd_compare),
        Cmd::Catalog { json } => cmd_catalog(json),
    };
    match outcome {
        Ok(code) => code,
        Err(err) => {
            eprintln!("pot1d: error: {err:#}");
            ExitCode::from(1)
        }
    }
}

/// Grid from the config: explicit J, or J = ceil((B - A) / dx_admissible)
/// clamped to a sane range when dx carries no constraint.
fn resolve_grid(cfg: &RunConfig, db: &bounds::DerivativeBounds<f64>) -> Result<Grid<f64>> {
    let (a, b) = (cfg.entry.f.interval_lo, cfg.entry.f.interval_hi);
    let j = if cfg.j_count > 0 {
        cfg.j_count
    } else {
        let dx = bounds::select_dx(db);
        let raw = if dx.is_finite() {
            ((b - a) / dx).ceil() as usize
        } else {
            0
        };
        raw.clamp(AUTO_J_MIN, AUTO_J_MAX)
    };
    Ok(build_grid(a, b, j)?)
}

struct SolveOutcome {
    grid: Grid<f64>,
    state: pot1d_core::stepper::SolverState<f64>,
    report: pot1d_core::monitor::ConvergenceReport<f64>,
}

fn solve_pipeline(cfg: &RunConfig) -> Result<SolveOutcome> {
    let db = compute_bounds(&cfg.entry, &cfg.bounds)?;
    let grid = resolve_grid(cfg, &db)?;
    let step_cfg = StepConfig {
        r_safety: cfg.r_safety,
        max_dt: cfg.max_dt,
        max_steps: cfg.max_steps,
        c_bc: cfg.entry.c_bc(),
        d_bc: cfg.entry.d_bc(),
    };
    let stop = StoppingRule {
        sigma: cfg.sigma,
        check_subset: cfg.probe_count,
        full_confirm: true,
        check_cadence: cfg.check_cadence,
        quad_tol: cfg.quad_tol,
    };
    let (state, report) = run(&cfg.entry, &db, &step_cfg, &grid, &stop)?;
    Ok(SolveOutcome {
        grid,
        state,
        report,
    })
}

fn meta<'a>(cfg: &'a RunConfig, grid: &Grid<f64>) -> RunMeta<'a> {
    RunMeta {
        example: &cfg.entry.id,
        j: grid.j_count(),
        dx: grid.dx(),
        sigma: cfg.sigma,
        quad_tol: cfg.quad_tol,
        r_safety: cfg.r_safety,
        max_dt: cfg.max_dt,
        max_steps: cfg.max_steps,
        check_cadence: cfg.check_cadence,
        probe_count: cfg.probe_count,
        bounds_n_samples: cfg.bounds.n_samples,
    }
}

fn write_solve_outputs(cfg: &RunConfig, out: &SolveOutcome) -> Result<()> {
    let dir = &cfg.output_dir;
    output::write_report(&dir.join("report.json"), &meta(cfg, &out.grid), &out.report)?;
    if cfg.emit_solution {
        let rows: Vec<_> = (0..=out.grid.j_count())
            .map(|j| {
                (
                    j,
                    out.grid.node(j as isize),
                    out.state.row.at(j as isize),
                    grad_centered(&out.state.row, &out.grid, j),
                    lap_centered(&out.state.row, &out.grid, j),
                )
            })
            .collect();
        output::write_atomic(&dir.join("solution.csv"), &output::solution_csv(&rows))?;
    }
    if cfg.emit_timeseries {
        output::write_atomic(
            &dir.join("timeseries.csv"),
            &output::timeseries_csv(&out.report.timeline),
        )?;
    }
    Ok(())
}

fn cmd_solve(cfg: RunConfig) -> Result<ExitCode> {
    let out = solve_pipeline(&cfg)?;
    write_solve_outputs(&cfg, &out)?;
    println!(
        "{}: {} after {} iterations (t_total = {:.6}, max E = {:.3e}, map error bound = {:.3e})",
        cfg.entry.id,
        if out.report.converged {
            "converged"
        } else {
            "NOT converged"
        },
        out.report.iterations,
        out.report.t_total,
        out.report.max_e_final,
        out.report.map_error_bound,
    );
    Ok(ExitCode::from(if out.report.converged { 0 } else { 2 }))
}

fn cmd_oracle(cfg: RunConfig) -> Result<ExitCode> {
    let db = compute_bounds(&cfg.entry, &cfg.bounds)?;
    let grid = resolve_grid(&cfg, &db)?;
    let om = OptimalMap::new(&cfg.entry, ORACLE_INV_TOL, cfg.quad_tol);
    let table = om.table(&grid)?;
    let rows: Vec<_> = table
        .iter()
        .enumerate()
        .map(|(j, &t)| (j, grid.node(j as isize), t))
        .collect();
    output::write_atomic(
        &cfg.output_dir.join("oracle.csv"),
        &output::oracle_csv(&rows),
    )?;
    println!(
        "{}: oracle table with {} rows written to {}",
        cfg.entry.id,
        rows.len(),
        cfg.output_dir.join("oracle.csv").display()
    );
    Ok(ExitCode::from(0))
}

fn cmd_compare(cfg: RunConfig) -> Result<ExitCode> {
    let mut out = solve_pipeline(&cfg)?;

    let om = OptimalMap::new(&cfg.entry, ORACLE_INV_TOL, cfg.quad_tol);
    let table = om.table(&out.grid)?;
    let mut rows = Vec::with_capacity(table.len());
    let mut max_abs_err: f64 = 0.0;
    for (j, &t) in table.iter().enumerate() {
        let grad = grad_centered(&out.state.row, &out.grid, j);
        let lap = lap_centered(&out.state.row, &out.grid, j);
        let abs_err = (grad - t).abs();
        let e = monitor::error_function(&cfg.entry, &out.state.row, &out.grid, j, cfg.quad_tol);
        max_abs_err = max_abs_err.max(abs_err);
        rows.push((j, out.grid.node(j as isize), grad, lap, t, abs_err, e.value));
    }
    out.report.oracle_max_err = Some(max_abs_err);

    write_solve_outputs(&cfg, &out)?;
    output::write_atomic(
        &cfg.output_dir.join("compare.csv"),
        &output::compare_csv(&rows),
    )?;

    let certified = out.report.converged && max_abs_err <= out.report.map_error_bound;
    println!(
        "{}: max |grad U - T| = {:.6e}, certificate sigma / min g = {:.6e} -> {}",
        cfg.entry.id,
        max_abs_err,
        out.report.map_error_bound,
        if certified {
            "CERTIFIED"
        } else {
            "NOT certified"
        },
    );
    Ok(ExitCode::from(if certified { 0 } else { 2 }))
}

fn cmd_catalog(json: bool) -> Result<ExitCode> {
    let entries: Vec<CatalogEntry<f64>> = CATALOG_IDS
        .iter()
        .map(|id| catalog(id))
        .collect::<pot1d_core::Result<_>>()?;
    if json {
        let items: Vec<serde_json::Value> = entries
            .iter()
            .map(|e| {
                serde_json::json!({
                    "id": e.id,
                    "source_interval": [e.f.interval_lo, e.f.interval_hi],
                    "target_interval": [e.g.interval_lo, e.g.interval_hi],
                    "source_breakpoints": e.f.breakpoints,
                    "target_breakpoints": e.g.breakpoints,
                    "notes": e.notes,
                })
            })
            .collect();
        println!("{}", serde_json::to_string_pretty(&items)?);
    } else {
        for e in &entries {
            let ef = densities::extrema(&e.f, 2);
            let eg = densities::extrema(&e.g, 2);
            println!(
                "{:22} [{:+.3}, {:+.3}] -> [{:+.3}, {:+.3}]  f in [{:.3}, {:.3}], g in [{:.3}, {:.3}]  {}",
                e.id,
                e.f.interval_lo,
                e.f.interval_hi,
                e.g.interval_lo,
                e.g.interval_hi,
                ef.min_val,
                ef.max_val,
                eg.min_val,
                eg.max_val,
                e.notes
            );
        }
    }
    Ok(ExitCode::from(0))
}
