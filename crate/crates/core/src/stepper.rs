//! Explicit time-marching: adaptive step selection under the stability
//! conditions, the centered-difference update, and the run loop.

use std::time::Instant;

use serde::Serialize;

use crate::bounds::{self, DerivativeBounds};
use crate::densities::CatalogEntry;
use crate::error::{Error, Result};
use crate::grid::{apply_ghosts, Grid, GridRow};
use crate::monitor::{ConvergenceReport, ErrorMonitor, StoppingRule};
use crate::scalar::Scalar;

/// Knobs of the marching loop. `r_safety` is the targeted value of the
/// stability ratio `r = dt / (dx^2 min(delta1/2, min_j lap U))` and must
/// lie in (0, 1/2].
#[derive(Debug, Clone, Copy)]
pub struct StepConfig<S> {
    pub r_safety: S,
    pub max_dt: S,
    pub max_steps: u64,
    /// Neumann value at the left boundary (C).
    pub c_bc: S,
    /// Neumann value at the right boundary (D).
    pub d_bc: S,
}

impl<S: Scalar> StepConfig<S> {
    /// Defaults for an entry: Neumann data from the target interval.
    pub fn for_entry(entry: &CatalogEntry<S>) -> Self {
        Self {
            r_safety: S::one().half(),
            max_dt: S::one(),
            max_steps: 10_000_000,
            c_bc: entry.c_bc(),
            d_bc: entry.d_bc(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.r_safety > S::zero() && self.r_safety <= S::one().half() && self.max_dt > S::zero()
        {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!(
                "need 0 < r_safety <= 1/2 and max_dt > 0 (got r_safety = {}, max_dt = {})",
                self.r_safety, self.max_dt
            )))
        }
    }
}

/// Marching state at one time level. `min_lap` caches the minimum discrete
/// second derivative of `row`; it must stay positive for the scheme to be
/// defined.
#[derive(Debug, Clone)]
pub struct SolverState<S> {
    pub step_index: u64,
    pub time: S,
    pub row: GridRow<S>,
    pub min_lap: S,
    pub dt_history: Vec<S>,
}

impl<S: Scalar> SolverState<S> {
    /// Sample the initial potential onto the grid and set the ghosts from
    /// the Neumann data.
    pub fn from_initial(entry: &CatalogEntry<S>, cfg: &StepConfig<S>, grid: &Grid<S>) -> Self {
        let mut row = GridRow::zeros(grid);
        for j in 0..=grid.j_count() as isize {
            row.set(j, (entry.u0)(grid.node(j)));
        }
        apply_ghosts(&mut row, grid, cfg.c_bc, cfg.d_bc);
        let min_lap = crate::grid::min_lap(&row, grid);
        Self {
            step_index: 0,
            time: S::zero(),
            row,
            min_lap,
            dt_history: Vec::new(),
        }
    }
}

/// Largest admissible time step at the current state.
///
/// `dt = min(r_safety dx^2 min(delta1/2, min_lap), dt_s, max_dt)` where
/// `dt_s` caps the advective ratio `s = max|g'| dt / (2 min g dx)` at
/// `r_safety` as well; when `max|g'| dx min(delta1/2, min_lap) / (2 min g)`
/// is below one (the usual case) the diffusive cap is the smaller one and
/// `s < r` holds automatically.
pub fn select_dt<S: Scalar>(
    state: &SolverState<S>,
    db: &DerivativeBounds<S>,
    cfg: &StepConfig<S>,
    dx: S,
) -> Result<S> {
    // Negated comparison so a NaN min_lap also fails.
    if !(state.min_lap > S::zero()) {
        return Err(Error::ConvexityLoss {
            step: state.step_index,
            j: 0,
            lap: state.min_lap.to_f64().unwrap_or(f64::NAN),
        });
    }
    let m = (db.delta1.half()).min(state.min_lap);
    let dt_r = cfg.r_safety * dx * dx * m;
    let dt_s = if db.max_g_d1 > S::zero() {
        S::two() * cfg.r_safety * db.min_g * dx / db.max_g_d1
    } else {
        S::infinity()
    };
    let dt = dt_r.min(dt_s).min(cfg.max_dt);
    if !dt.is_finite() || !(dt > S::zero()) || dt < S::of(1e-300) {
        return Err(Error::DegenerateDt {
            step: state.step_index,
            dt: dt.to_f64().unwrap_or(f64::NAN),
        });
    }
    Ok(dt)
}

/// Per-run data the update loop needs at every node: reciprocal source
/// values at the nodes plus the target density.
struct StepCtx<'a, S: Scalar> {
    inv_f: Vec<S>,
    entry: &'a CatalogEntry<S>,
    grid: &'a Grid<S>,
}

impl<'a, S: Scalar> StepCtx<'a, S> {
    fn new(entry: &'a CatalogEntry<S>, grid: &'a Grid<S>) -> Self {
        let inv_f = (0..=grid.j_count() as isize)
            .map(|j| S::one() / entry.f.eval(grid.node(j)))
            .collect();
        Self { inv_f, entry, grid }
    }

    /// One explicit update: every interior value advances simultaneously
    /// from the level-n snapshot, then ghosts and the cached minimum
    /// second derivative are refreshed.
    fn advance(
        &self,
        state: SolverState<S>,
        db: &DerivativeBounds<S>,
        cfg: &StepConfig<S>,
    ) -> Result<SolverState<S>> {
        let grid = self.grid;
        let dx = grid.dx();
        let dt = select_dt(&state, db, cfg, dx)?;
        let n = grid.j_count();
        let two_dx = S::two() * dx;
        let dx2 = dx * dx;
        let step = state.step_index;
        let g = &self.entry.g;

        let old = &state.row.vals;
        let mut new_vals = vec![S::zero(); n + 3];
        for j in 0..=n {
            let (um, uc, up) = (old[j], old[j + 1], old[j + 2]);
            let lap = (up + um - S::two() * uc) / dx2;
            if !(lap > S::zero()) {
                return Err(Error::ConvexityLoss {
                    step,
                    j,
                    lap: lap.to_f64().unwrap_or(f64::NAN),
                });
            }
            let grad = (up - um) / two_dx;
            let gv = g.eval(grad);
            if !(gv > S::zero()) {
                return Err(Error::MapRange {
                    step,
                    j,
                    grad: grad.to_f64().unwrap_or(f64::NAN),
                    value: gv.to_f64().unwrap_or(f64::NAN),
                });
            }
            // log(lap) - log(f_j / g(grad)), fused into a single log.
            new_vals[j + 1] = uc + dt * (lap * gv * self.inv_f[j]).ln();
        }

        let mut row = GridRow { vals: new_vals };
        apply_ghosts(&mut row, grid, cfg.c_bc, cfg.d_bc);
        if let Some(j) = row.first_non_finite() {
            return Err(Error::NonFinite { step, j });
        }
        let min_lap = crate::grid::min_lap(&row, grid);

        let mut dt_history = state.dt_history;
        dt_history.push(dt);
        Ok(SolverState {
            step_index: step + 1,
            time: state.time + dt,
            row,
            min_lap,
            dt_history,
        })
    }
}

/// Advance one time level. Selects the step size, applies the explicit
/// update to all interior nodes from the level-n data, refreshes ghosts,
/// and recomputes the cached minimum second derivative.
pub fn step<S: Scalar>(
    state: SolverState<S>,
    entry: &CatalogEntry<S>,
    db: &DerivativeBounds<S>,
    cfg: &StepConfig<S>,
    grid: &Grid<S>,
) -> Result<SolverState<S>> {
    StepCtx::new(entry, grid).advance(state, db, cfg)
}

/// One progress record per convergence check.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Checkpoint<S> {
    pub step: u64,
    pub t: S,
    pub dt: S,
    pub max_e: S,
    pub min_lap: S,
}

/// March until the stopping rule fires or `max_steps` is reached.
///
/// The mismatch error is probed on a subset every `check_cadence` steps
/// (including before the first step); a probe pass below tolerance is
/// confirmed on the full grid at a tighter quadrature tolerance before
/// convergence is declared. Reaching `max_steps` is reported, not thrown.
pub fn run<S: Scalar>(
    entry: &CatalogEntry<S>,
    db: &DerivativeBounds<S>,
    cfg: &StepConfig<S>,
    grid: &Grid<S>,
    stop: &StoppingRule<S>,
) -> Result<(SolverState<S>, ConvergenceReport<S>)> {
    cfg.validate()?;
    stop.validate(grid.j_count())?;
    let started = Instant::now();

    let monitor = ErrorMonitor::new(entry, grid, stop.quad_tol)?;
    let probe_js = stop.probe_indices(grid.j_count());
    let ctx = StepCtx::new(entry, grid);

    let mut state = SolverState::from_initial(entry, cfg, grid);
    let mut timeline: Vec<Checkpoint<S>> = Vec::new();
    let mut converged = false;
    let max_e_final;
    let mut grad_clamp_events = 0u64;
    let mut min_lap_floor = state.min_lap;

    loop {
        if state.step_index % stop.check_cadence == 0 {
            let (probe_max, clamps) = monitor.max_over(&state.row, &probe_js, stop.quad_tol);
            grad_clamp_events += clamps;
            timeline.push(Checkpoint {
                step: state.step_index,
                t: state.time,
                dt: state.dt_history.last().copied().unwrap_or(S::zero()),
                max_e: probe_max,
                min_lap: state.min_lap,
            });
            if probe_max <= stop.sigma {
                let (full_max, fclamps) = if stop.full_confirm {
                    monitor.max_full(&state.row)
                } else {
                    (probe_max, 0)
                };
                grad_clamp_events += fclamps;
                if full_max <= stop.sigma {
                    converged = true;
                    max_e_final = full_max;
                    break;
                }
            }
        }
        if state.step_index >= cfg.max_steps {
            let (full_max, fclamps) = monitor.max_full(&state.row);
            grad_clamp_events += fclamps;
            max_e_final = full_max;
            break;
        }
        state = ctx.advance(state, db, cfg)?;
        min_lap_floor = min_lap_floor.min(state.min_lap);
    }

    let dx = grid.dx();
    let report = ConvergenceReport {
        converged,
        iterations: state.step_index,
        t_total: state.time,
        max_e_final,
        map_error_bound: stop.sigma / db.min_g,
        oracle_max_err: None,
        apriori_interior: bounds::apriori_interior_bound(db, &state.dt_history, dx),
        apriori_interior_outer_g_term: bounds::apriori_interior_bound_outer_g_term(
            db,
            &state.dt_history,
            dx,
        ),
        apriori_boundary: bounds::apriori_boundary_bound(db, &state.dt_history, dx),
        wall_seconds: started.elapsed().as_secs_f64(),
        bounds: db.clone(),
        min_lap_floor,
        grad_clamp_events,
        timeline,
    };
    Ok((state, report))
}
