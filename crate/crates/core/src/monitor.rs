//! Convergence monitoring: the CDF-mismatch error function, the stopping
//! rule, map-error translation, and structural checks.

use crate::densities::{self, cdf_unchecked, CatalogEntry};
use crate::error::Result;
use crate::grid::{grad_centered, Grid, GridRow};
use crate::oracle::OptimalMap;
use crate::scalar::Scalar;
use crate::stepper::Checkpoint;

/// When to stop marching: the CDF mismatch `E` must drop below `sigma` on
/// the probe subset and then, when `full_confirm` is set, on the whole
/// grid at a tenth of the quadrature tolerance.
#[derive(Debug, Clone, Copy)]
pub struct StoppingRule<S> {
    pub sigma: S,
    /// Number of probe points; 0 picks the default J/16 (at least 2).
    pub check_subset: usize,
    pub full_confirm: bool,
    pub check_cadence: u64,
    pub quad_tol: S,
}

impl<S: Scalar> StoppingRule<S> {
    pub fn new(sigma: S) -> Self {
        Self {
            sigma,
            check_subset: 0,
            full_confirm: true,
            check_cadence: 200,
            quad_tol: S::of(1e-10),
        }
    }

    pub fn validate(&self, j_count: usize) -> Result<()> {
        if self.sigma > S::zero()
            && self.check_cadence > 0
            && self.quad_tol > S::zero()
            && self.check_subset <= j_count + 1
        {
            Ok(())
        } else {
            Err(crate::error::Error::InvalidConfig(format!(
                "stopping rule: sigma = {}, cadence = {}, subset = {} (J = {})",
                self.sigma, self.check_cadence, self.check_subset, j_count
            )))
        }
    }

    /// Evenly spaced probe indices, always containing j = 0 and j = J.
    pub fn probe_indices(&self, j_count: usize) -> Vec<usize> {
        let want = if self.check_subset == 0 {
            (j_count / 16).max(2)
        } else {
            self.check_subset.max(2)
        };
        let want = want.min(j_count + 1);
        let mut js: Vec<usize> = (0..want)
            .map(|i| (i * j_count + (want - 1) / 2) / (want - 1))
            .collect();
        js.dedup();
        js
    }
}

/// One mismatch sample: `E` at a node, and whether the discrete gradient
/// had to be clamped back into the target interval to evaluate it.
#[derive(Debug, Clone, Copy)]
pub struct ErrorSample<S> {
    pub value: S,
    pub clamped: bool,
}

/// CDF mismatch at node j: `|F(x_j) - G(grad U_j)|`, each CDF evaluated to
/// `quad_tol`. A gradient outside `[C, D]` is clamped and flagged.
pub fn error_function<S: Scalar>(
    entry: &CatalogEntry<S>,
    row: &GridRow<S>,
    grid: &Grid<S>,
    j: usize,
    quad_tol: S,
) -> ErrorSample<S> {
    let f_val = cdf_unchecked(&entry.f, grid.node(j as isize), quad_tol);
    let (s, clamped) = clamp_to(grad_centered(row, grid, j), entry.c_bc(), entry.d_bc());
    let g_val = cdf_unchecked(&entry.g, s, quad_tol);
    ErrorSample {
        value: (f_val - g_val).abs(),
        clamped,
    }
}

fn clamp_to<S: Scalar>(v: S, lo: S, hi: S) -> (S, bool) {
    if v < lo {
        (lo, true)
    } else if v > hi {
        (hi, true)
    } else {
        (v, false)
    }
}

/// Maximum mismatch over a probe subset.
pub fn max_error<S: Scalar>(
    entry: &CatalogEntry<S>,
    row: &GridRow<S>,
    grid: &Grid<S>,
    probe_js: &[usize],
    quad_tol: S,
) -> S {
    probe_js
        .iter()
        .map(|&j| error_function(entry, row, grid, j, quad_tol).value)
        .fold(S::zero(), S::max)
}

/// A mismatch below `sigma` on the whole grid bounds the map error by
/// `sigma / min g`.
pub fn map_error_bound<S: Scalar>(sigma: S, entry: &CatalogEntry<S>) -> S {
    let eg = densities::extrema(&entry.g, densities::DEFAULT_EXTREMA_SAMPLES);
    let min_g = if eg.exact {
        eg.min_val
    } else {
        eg.min_val * S::of(crate::bounds::MIN_SAFETY)
    };
    sigma / min_g
}

/// Is the discrete map nondecreasing over the interior nodes? Returns the
/// first violating j otherwise.
pub fn monotonicity_check<S: Scalar>(row: &GridRow<S>, grid: &Grid<S>) -> (bool, Option<usize>) {
    let tol = -S::of(1e-12);
    let mut prev = grad_centered(row, grid, 0);
    for j in 1..=grid.j_count() {
        let cur = grad_centered(row, grid, j);
        if cur - prev < tol {
            return (false, Some(j));
        }
        prev = cur;
    }
    (true, None)
}

/// Maximum deviation of the discrete map from the direct quantile oracle.
pub fn oracle_error<S: Scalar>(
    entry: &CatalogEntry<S>,
    row: &GridRow<S>,
    grid: &Grid<S>,
    oracle: &OptimalMap<S>,
) -> Result<S> {
    debug_assert!(std::ptr::eq(oracle.entry, entry) || oracle.entry.id == entry.id);
    let table = oracle.table(grid)?;
    let mut max = S::zero();
    for (j, &t) in table.iter().enumerate() {
        max = max.max((grad_centered(row, grid, j) - t).abs());
    }
    Ok(max)
}

/// Cached mismatch evaluator used by the run loop: the source CDF at the
/// nodes is computed once (at a tenth of the quadrature tolerance, the
/// accuracy of the confirmation pass).
pub struct ErrorMonitor<'e, S: Scalar> {
    entry: &'e CatalogEntry<S>,
    grid: Grid<S>,
    f_cdf: Vec<S>,
    tight_tol: S,
}

impl<'e, S: Scalar> ErrorMonitor<'e, S> {
    pub fn new(entry: &'e CatalogEntry<S>, grid: &Grid<S>, quad_tol: S) -> Result<Self> {
        let tight_tol = quad_tol / S::of(10.0);
        let f_cdf = densities::cdf_sweep(&entry.f, &grid.interior_nodes(), tight_tol)?;
        Ok(Self {
            entry,
            grid: *grid,
            f_cdf,
            tight_tol,
        })
    }

    fn sample(&self, row: &GridRow<S>, j: usize, g_tol: S) -> (S, bool) {
        let (s, clamped) = clamp_to(
            grad_centered(row, &self.grid, j),
            self.entry.c_bc(),
            self.entry.d_bc(),
        );
        let g_val = cdf_unchecked(&self.entry.g, s, g_tol);
        ((self.f_cdf[j] - g_val).abs(), clamped)
    }

    /// Max mismatch over a probe subset at the working tolerance; also
    /// returns how many gradients had to be clamped.
    pub fn max_over(&self, row: &GridRow<S>, probe_js: &[usize], quad_tol: S) -> (S, u64) {
        let mut max = S::zero();
        let mut clamps = 0;
        for &j in probe_js {
            let (v, c) = self.sample(row, j, quad_tol);
            max = max.max(v);
            clamps += c as u64;
        }
        (max, clamps)
    }

    /// Full-grid confirmation pass at the tighter tolerance.
    pub fn max_full(&self, row: &GridRow<S>) -> (S, u64) {
        let mut max = S::zero();
        let mut clamps = 0;
        for j in 0..=self.grid.j_count() {
            let (v, c) = self.sample(row, j, self.tight_tol);
            max = max.max(v);
            clamps += c as u64;
        }
        (max, clamps)
    }
}

/// Final diagnostics of a run.
#[derive(Debug, Clone)]
pub struct ConvergenceReport<S> {
    pub converged: bool,
    pub iterations: u64,
    pub t_total: S,
    pub max_e_final: S,
    /// `sigma / min g`: the map-error certificate implied by convergence.
    pub map_error_bound: S,
    pub oracle_max_err: Option<S>,
    pub apriori_interior: S,
    /// Same quantity with the target-density term accumulated once per
    /// step instead of inside the per-step factor (see the bounds module).
    pub apriori_interior_outer_g_term: S,
    pub apriori_boundary: S,
    pub wall_seconds: f64,
    pub bounds: crate::bounds::DerivativeBounds<S>,
    /// Smallest discrete second derivative seen at any accepted step.
    pub min_lap_floor: S,
    /// Number of probe evaluations where the gradient left `[C, D]`.
    pub grad_clamp_events: u64,
    pub timeline: Vec<Checkpoint<S>>,
}

/// Least-squares fit of `ln(max E)` against `t`.
#[derive(Debug, Clone, Copy)]
pub struct DecayFit<S> {
    pub slope: S,
    pub r_squared: S,
}

/// Fit the late-time decay over the given checkpoints; entries with a
/// non-positive mismatch are skipped. Returns None with fewer than three
/// usable points.
pub fn log_decay_fit<S: Scalar>(checkpoints: &[Checkpoint<S>]) -> Option<DecayFit<S>> {
    let pts: Vec<(S, S)> = checkpoints
        .iter()
        .filter(|c| c.max_e > S::zero())
        .map(|c| (c.t, c.max_e.ln()))
        .collect();
    if pts.len() < 3 {
        return None;
    }
    let n = S::of_usize(pts.len());
    let mean_t = pts.iter().map(|p| p.0).sum::<S>() / n;
    let mean_y = pts.iter().map(|p| p.1).sum::<S>() / n;
    let mut sxx = S::zero();
    let mut sxy = S::zero();
    let mut syy = S::zero();
    for &(t, y) in &pts {
        let (dt, dy) = (t - mean_t, y - mean_y);
        sxx += dt * dt;
        sxy += dt * dy;
        syy += dy * dy;
    }
    if sxx == S::zero() || syy == S::zero() {
        return None;
    }
    let slope = sxy / sxx;
    let ss_res = syy - slope * sxy;
    Some(DecayFit {
        slope,
        r_squared: S::one() - ss_res / syy,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::densities::{catalog, CatalogEntry, DensitySpec};
    use crate::grid::build_grid;

    #[test]
    fn error_vanishes_for_identity_on_uniform() {
        let e: CatalogEntry<f64> = catalog("uniform_uniform").unwrap();
        let grid = build_grid(-1.0, 1.0, 32).unwrap();
        let row = GridRow::sample(&grid, |x| x * x / 2.0);
        for j in [0, 7, 16, 32] {
            let s = error_function(&e, &row, &grid, j, 1e-10);
            assert!(s.value < 2e-10);
            assert!(!s.clamped);
        }
    }

    #[test]
    fn error_of_identity_map_between_mismatched_densities() {
        // f = 1 on [0,1], g = 1/2 on [-1,1], S(x) = x:
        // at x = 0.5, |F - G| = |0.5 - 0.75| = 0.25.
        let f = DensitySpec::<f64>::new(0.0, 1.0, |_| 1.0, |_| 0.0).with_d2(|_| 0.0);
        let g = DensitySpec::<f64>::new(-1.0, 1.0, |_| 0.5, |_| 0.0).with_d2(|_| 0.0);
        let e = CatalogEntry::with_cubic_u0("test", f, g, [0.0, 0.0, 0.5, 0.0], "");
        let grid = build_grid(0.0, 1.0, 4).unwrap();
        let row = GridRow::sample(&grid, |x| x * x / 2.0); // grad = x_j
        let s = error_function(&e, &row, &grid, 2, 1e-10);
        assert!((s.value - 0.25).abs() < 1e-9);
    }

    #[test]
    fn max_error_is_monotone_in_probes() {
        let e: CatalogEntry<f64> = catalog("ex_simple").unwrap();
        let grid = build_grid(-1.0, 1.0, 32).unwrap();
        let row = GridRow::sample(&grid, |x| x * x / 2.0);
        let single = max_error(&e, &row, &grid, &[16], 1e-10);
        assert_eq!(single, error_function(&e, &row, &grid, 16, 1e-10).value);
        let few = max_error(&e, &row, &grid, &[0, 16, 32], 1e-10);
        let all: Vec<usize> = (0..=32).collect();
        let full = max_error(&e, &row, &grid, &all, 1e-10);
        assert!(few >= single);
        assert!(full >= few);
    }

    #[test]
    fn map_bound_divides_by_min_g() {
        let simple: CatalogEntry<f64> = catalog("ex_simple").unwrap();
        assert!((map_error_bound(0.01, &simple) - 0.03).abs() < 1e-15);

        let nz: CatalogEntry<f64> = catalog("ex_near_zero").unwrap();
        assert!((map_error_bound(0.001, &nz) - 0.002).abs() < 1e-15);

        let vm: CatalogEntry<f64> = catalog("ex_vonmises_quantile").unwrap();
        let i0 = crate::densities::bessel_i(0, 1.0);
        let want = 0.01 * 2.0 * std::f64::consts::PI * i0 * 1f64.exp();
        assert!((map_error_bound(0.01, &vm) - want).abs() < 1e-12);
    }

    #[test]
    fn monotonicity_detects_flip() {
        let grid = build_grid(-1.0, 1.0, 16).unwrap();
        let row = GridRow::sample(&grid, |x| x * x / 2.0);
        assert_eq!(monotonicity_check(&row, &grid), (true, None));

        let mut broken = row.clone();
        broken.set(8, broken.at(8) + 1.0);
        let (ok, at) = monotonicity_check(&broken, &grid);
        assert!(!ok);
        assert!(at.is_some());
    }

    #[test]
    fn probe_indices_cover_ends() {
        let stop = StoppingRule::<f64>::new(0.01);
        for j in [4usize, 17, 64, 1000] {
            let js = stop.probe_indices(j);
            assert_eq!(js.first(), Some(&0));
            assert_eq!(js.last(), Some(&j));
            assert!(js.windows(2).all(|w| w[0] < w[1]));
        }
        let wide = StoppingRule::<f64> {
            check_subset: 99,
            ..StoppingRule::new(0.01)
        };
        assert_eq!(wide.probe_indices(8).len(), 9);
    }

    #[test]
    fn decay_fit_recovers_exact_exponential() {
        let pts: Vec<Checkpoint<f64>> = (0..40)
            .map(|i| {
                let t = 0.05 * i as f64;
                Checkpoint {
                    step: i,
                    t,
                    dt: 0.05,
                    max_e: 2.0 * (-3.0 * t).exp(),
                    min_lap: 1.0,
                }
            })
            .collect();
        let fit = log_decay_fit(&pts).unwrap();
        assert!((fit.slope + 3.0).abs() < 1e-9);
        assert!(fit.r_squared > 0.999999);
    }

    #[test]
    fn decay_fit_needs_positive_points() {
        let pts: Vec<Checkpoint<f64>> = (0..5)
            .map(|i| Checkpoint {
                step: i,
                t: i as f64,
                dt: 1.0,
                max_e: 0.0,
                min_lap: 1.0,
            })
            .collect();
        assert!(log_decay_fit(&pts).is_none());
    }
}
