//! Direct optimal-map computation `T = G^{-1} . F`: ground truth for
//! validating the marching solver.

use crate::bounds::MIN_SAFETY;
use crate::densities::{self, cdf_unchecked, CatalogEntry, DensitySpec};
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::quadrature;
use crate::scalar::Scalar;

const MAX_BISECTIONS: usize = 60;

/// Quantile oracle for one catalog entry. `inv_tol` controls the bisection
/// stop (`|G(y) - p| <= min_g * inv_tol`), `quad_tol` the CDF accuracy.
pub struct OptimalMap<'e, S: Scalar> {
    pub entry: &'e CatalogEntry<S>,
    pub inv_tol: S,
    pub quad_tol: S,
    g_min: S,
}

impl<'e, S: Scalar> OptimalMap<'e, S> {
    pub fn new(entry: &'e CatalogEntry<S>, inv_tol: S, quad_tol: S) -> Self {
        assert!(inv_tol > S::zero() && quad_tol > S::zero());
        Self {
            entry,
            inv_tol,
            quad_tol,
            g_min: conservative_min(&entry.g),
        }
    }

    /// Map value at one point; the interval endpoints map exactly.
    pub fn value(&self, x: S) -> Result<S> {
        let f = &self.entry.f;
        if x < f.interval_lo || x > f.interval_hi {
            return Err(Error::OutOfDomain {
                x: x.to_f64().unwrap_or(f64::NAN),
                lo: f.interval_lo.to_f64().unwrap_or(f64::NAN),
                hi: f.interval_hi.to_f64().unwrap_or(f64::NAN),
            });
        }
        if x == f.interval_lo {
            return Ok(self.entry.c_bc());
        }
        if x == f.interval_hi {
            return Ok(self.entry.d_bc());
        }
        let p = cdf_unchecked(f, x, self.quad_tol)
            .max(S::zero())
            .min(S::one());
        invert_cdf_with_gmin(&self.entry.g, p, self.inv_tol, self.quad_tol, self.g_min)
    }

    /// Map values at every interior node, sweeping the source CDF
    /// incrementally so the whole table costs O(J) quadrature panels.
    pub fn table(&self, grid: &Grid<S>) -> Result<Vec<S>> {
        let nodes = grid.interior_nodes();
        let ps = densities::cdf_sweep(&self.entry.f, &nodes, self.quad_tol)?;
        let last = nodes.len() - 1;
        ps.into_iter()
            .enumerate()
            .map(|(j, p)| {
                if j == 0 {
                    Ok(self.entry.c_bc())
                } else if j == last {
                    Ok(self.entry.d_bc())
                } else {
                    let p = p.max(S::zero()).min(S::one());
                    invert_cdf_with_gmin(&self.entry.g, p, self.inv_tol, self.quad_tol, self.g_min)
                }
            })
            .collect()
    }
}

/// Optimal map at `x` (free-function form of [`OptimalMap::value`]).
pub fn optimal_map<S: Scalar>(om: &OptimalMap<S>, x: S) -> Result<S> {
    om.value(x)
}

fn conservative_min<S: Scalar>(g: &DensitySpec<S>) -> S {
    let e = densities::extrema(g, densities::DEFAULT_EXTREMA_SAMPLES);
    if e.exact {
        e.min_val
    } else {
        e.min_val * S::of(MIN_SAFETY)
    }
}

/// Invert the target CDF: the `y` in `[C, D]` with
/// `|G(y) - p| <= min_g * inv_tol + quad_tol`, by bisection (`G` is
/// strictly increasing since `g > 0`). `p = 0` and `p = 1` map to the
/// endpoints exactly.
pub fn invert_cdf<S: Scalar>(g: &DensitySpec<S>, p: S, inv_tol: S, quad_tol: S) -> Result<S> {
    invert_cdf_with_gmin(g, p, inv_tol, quad_tol, conservative_min(g))
}

fn invert_cdf_with_gmin<S: Scalar>(
    g: &DensitySpec<S>,
    p: S,
    inv_tol: S,
    quad_tol: S,
    g_min: S,
) -> Result<S> {
    if !(p >= S::zero() && p <= S::one()) {
        return Err(Error::InvalidProbability {
            p: p.to_f64().unwrap_or(f64::NAN),
        });
    }
    if p == S::zero() {
        return Ok(g.interval_lo);
    }
    if p == S::one() {
        return Ok(g.interval_hi);
    }
    let stop = g_min * inv_tol;
    let mut lo = g.interval_lo;
    let mut hi = g.interval_hi;

    if g.has_analytic_cdf() {
        for _ in 0..MAX_BISECTIONS {
            let mid = (lo + hi).half();
            let val = cdf_unchecked(g, mid, quad_tol);
            if (val - p).abs() <= stop {
                return Ok(mid);
            }
            if val < p {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        return Ok((lo + hi).half());
    }

    // Quadrature path: integrate only over the shrinking left half of the
    // bracket. The bracket halves each iteration, so the total integrated
    // length stays below the interval length and the accumulated error
    // below quad_tol / 2.
    let len = g.len();
    let mut cdf_lo = S::zero();
    for _ in 0..MAX_BISECTIONS {
        let mid = (lo + hi).half();
        let seg_tol = quad_tol * (mid - lo).max(S::epsilon()) / (S::two() * len);
        let val =
            cdf_lo + quadrature::integrate_split(&|x| g.eval(x), lo, mid, &g.breakpoints, seg_tol);
        if (val - p).abs() <= stop {
            return Ok(mid);
        }
        if val < p {
            lo = mid;
            cdf_lo = val;
        } else {
            hi = mid;
        }
    }
    Ok((lo + hi).half())
}
