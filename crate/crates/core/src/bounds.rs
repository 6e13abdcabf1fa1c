//! Derivative-bound constants and the a-priori error bounds.
//!
//! The constants bound derivatives of the evolving potential:
//! `delta1 <= v_xx <= delta2`, `|v_xxx| <= psi`, `|v_xxxx| <= gamma`,
//! `|v_tt| <= k_tt`. They drive the admissible spatial step, the adaptive
//! time step, and the reported a-priori error bounds.

use serde::Serialize;

use crate::densities::{self, CatalogEntry, DensitySpec, Extrema};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Deflation applied to sampled (non-exact) minima.
pub const MIN_SAFETY: f64 = 0.99;
/// Inflation applied to sampled (non-exact) maxima.
pub const MAX_SAFETY: f64 = 1.01;
/// Inflation applied to the sampled two-variable supremum in the
/// third-derivative bound.
pub const SUP_INFLATION: f64 = 1.05;

/// How a reported constant was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Computed,
    UserSupplied,
    /// Built-in default that is not backed by a derivation.
    Heuristic,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct BoundsProvenance {
    pub delta1: Provenance,
    pub delta2: Provenance,
    pub psi: Provenance,
    pub gamma: Provenance,
    pub k_tt: Provenance,
}

/// The assembled constants plus the extremal data of the target density
/// used throughout step selection and error reporting.
#[derive(Debug, Clone, Serialize)]
pub struct DerivativeBounds<S> {
    pub delta1: S,
    pub delta2: S,
    pub psi: S,
    pub gamma: S,
    pub k_tt: S,
    pub min_g: S,
    pub max_g: S,
    pub max_g_d1: S,
    pub max_vt0: S,
    pub provenance: BoundsProvenance,
    /// False when either density has breakpoints: the smoothness
    /// hypotheses behind the constants fail and every bound is heuristic.
    pub smooth_theory: bool,
}

/// Overrides and sampling options for [`compute_bounds`].
#[derive(Debug, Clone)]
pub struct BoundsConfig<S> {
    pub n_samples: usize,
    pub delta1: Option<S>,
    pub delta2: Option<S>,
    pub psi: Option<S>,
    pub gamma: Option<S>,
    pub k_tt: Option<S>,
    /// Used for gamma when the fourth-derivative chain cannot be evaluated
    /// (piecewise densities, missing second derivatives) and no override
    /// was given.
    pub gamma_fallback: S,
}

impl<S: Scalar> Default for BoundsConfig<S> {
    fn default() -> Self {
        Self {
            n_samples: 20_001,
            delta1: None,
            delta2: None,
            psi: None,
            gamma: None,
            k_tt: None,
            gamma_fallback: S::zero(),
        }
    }
}

/// Extrema with the sampling safety factors applied when not exact.
fn conservative_extrema<S: Scalar>(d: &DensitySpec<S>, n_samples: usize) -> Extrema<S> {
    let mut e = densities::extrema(d, n_samples);
    if !e.exact {
        e.min_val = e.min_val * S::of(MIN_SAFETY);
        e.max_val = e.max_val * S::of(MAX_SAFETY);
        e.min_d1_abs = e.min_d1_abs * S::of(MIN_SAFETY);
        e.max_d1_abs = e.max_d1_abs * S::of(MAX_SAFETY);
    }
    e
}

fn sample_grid<S: Scalar>(
    lo: S,
    hi: S,
    n: usize,
    breakpoints: &[S],
) -> impl Iterator<Item = S> + '_ {
    let len = hi - lo;
    let denom = S::of_usize(n - 1);
    (0..n)
        .map(move |i| lo + S::of_usize(i) / denom * len)
        .chain(breakpoints.iter().copied())
}

/// Range of the initial potential's second derivative over the source
/// interval; errors if it is not strictly positive.
fn u0_d2_range<S: Scalar>(entry: &CatalogEntry<S>, n: usize) -> Result<(S, S)> {
    let mut lo = S::infinity();
    let mut hi = S::neg_infinity();
    for x in sample_grid(
        entry.f.interval_lo,
        entry.f.interval_hi,
        n,
        &entry.f.breakpoints,
    ) {
        let v = (entry.u0_d2)(x);
        if v <= S::zero() {
            return Err(Error::NonConvexInitial {
                x: x.to_f64().unwrap_or(f64::NAN),
                value: v.to_f64().unwrap_or(f64::NAN),
            });
        }
        lo = lo.min(v);
        hi = hi.max(v);
    }
    Ok((lo, hi))
}

/// Bounds on `v_xx`:
/// `delta1 = min u0'' (min f / max f)(min g / max g)` and
/// `delta2 = max u0'' (max f / min f)(max g / min g)`.
pub fn vxx_bounds<S: Scalar>(entry: &CatalogEntry<S>, n_samples: usize) -> Result<(S, S)> {
    let (u_lo, u_hi) = u0_d2_range(entry, n_samples)?;
    let ef = conservative_extrema(&entry.f, n_samples);
    let eg = conservative_extrema(&entry.g, n_samples);
    let delta1 = u_lo * (ef.min_val / ef.max_val) * (eg.min_val / eg.max_val);
    let delta2 = u_hi * (ef.max_val / ef.min_val) * (eg.max_val / eg.min_val);
    Ok((delta1, delta2))
}

/// Maximum of `|v_t(0, x)| = |log(u0''(x) g(u0'(x)) / f(x))|` over the grid.
pub fn max_initial_vt<S: Scalar>(entry: &CatalogEntry<S>, n_samples: usize) -> Result<S> {
    let mut max = S::zero();
    for x in sample_grid(
        entry.f.interval_lo,
        entry.f.interval_hi,
        n_samples,
        &entry.f.breakpoints,
    ) {
        let udd = (entry.u0_d2)(x);
        if udd <= S::zero() {
            return Err(Error::NonConvexInitial {
                x: x.to_f64().unwrap_or(f64::NAN),
                value: udd.to_f64().unwrap_or(f64::NAN),
            });
        }
        let fx = entry.f.eval(x);
        if fx <= S::zero() {
            return Err(Error::NonPositiveDensity {
                x: x.to_f64().unwrap_or(f64::NAN),
                value: fx.to_f64().unwrap_or(f64::NAN),
            });
        }
        let gv = entry.g.eval((entry.u0_d1)(x));
        if gv <= S::zero() {
            return Err(Error::NonPositiveDensity {
                x: x.to_f64().unwrap_or(f64::NAN),
                value: gv.to_f64().unwrap_or(f64::NAN),
            });
        }
        max = max.max((udd * gv / fx).ln().abs());
    }
    Ok(max)
}

/// Intermediates shared by the third- and fourth-derivative bounds.
struct WxData<S> {
    /// Bound on |w_x| where w = v_t.
    w: S,
    max_abs_f: S,
    max_abs_g: S,
    max_abs_g_d1: S,
}

/// `F = f'/f`, `G = g'/g`, `G' = (g'/g)'`; the latter needs `g''`.
fn wx_bound<S: Scalar>(
    entry: &CatalogEntry<S>,
    db: &DerivativeBounds<S>,
    n: usize,
) -> Result<WxData<S>> {
    let f = &entry.f;
    let g = &entry.g;
    if !g.has_d2() {
        return Err(Error::MissingDerivative { which: "g''" });
    }

    let big_f = |x: S| f.d1(x) / f.eval(x);
    let big_g = |y: S| g.d1(y) / g.eval(y);
    let big_g_d1 = |y: S| {
        let gy = g.eval(y);
        let r = g.d1(y) / gy;
        g.d2(y).unwrap() / gy - r * r
    };

    let mut f_lo = S::infinity();
    let mut f_hi = S::neg_infinity();
    for x in sample_grid(f.interval_lo, f.interval_hi, n, &f.breakpoints) {
        let v = big_f(x);
        f_lo = f_lo.min(v);
        f_hi = f_hi.max(v);
    }
    let max_abs_f = f_lo.abs().max(f_hi.abs());

    let mut max_abs_g = S::zero();
    // Two-variable supremum: F at its signed extremes, phi at the interval
    // ends, y swept over the target interval.
    let mut c1 = S::zero();
    for y in sample_grid(g.interval_lo, g.interval_hi, n, &g.breakpoints) {
        let gy = big_g(y);
        let gdy_abs = big_g_d1(y).abs();
        max_abs_g = max_abs_g.max(gy.abs());
        for &fe in &[f_lo, f_hi] {
            for &phi in &[db.delta1, db.delta2] {
                let a = fe - gy * phi;
                let v = a.abs() + (a * a + S::of(4.0) * gdy_abs * phi * phi).sqrt();
                c1 = c1.max(v);
            }
        }
    }
    c1 = c1 * S::of(SUP_INFLATION);

    // Initial-slice bound: |u0'''/u0'' - F + G(u0') u0''| along the source
    // interval.
    let mut c2 = S::zero();
    for x in sample_grid(f.interval_lo, f.interval_hi, n, &f.breakpoints) {
        let udd = (entry.u0_d2)(x);
        let v = (entry.u0_d3)(x) / udd - big_f(x) + big_g((entry.u0_d1)(x)) * udd;
        c2 = c2.max(v.abs());
    }

    let w = c1.max(c2) * db.max_vt0.exp();

    let mut max_abs_g_d1 = S::zero();
    for y in sample_grid(g.interval_lo, g.interval_hi, n, &g.breakpoints) {
        max_abs_g_d1 = max_abs_g_d1.max(big_g_d1(y).abs());
    }

    Ok(WxData {
        w,
        max_abs_f,
        max_abs_g,
        max_abs_g_d1,
    })
}

/// Bound `psi >= |v_xxx|` via `phi_x = phi (w_x + F - G phi)`:
/// `psi = delta2 (W + max|F| + max|G| delta2)`.
pub fn vxxx_bound<S: Scalar>(
    entry: &CatalogEntry<S>,
    db: &DerivativeBounds<S>,
    n_samples: usize,
) -> Result<S> {
    let wx = wx_bound(entry, db, n_samples)?;
    Ok(db.delta2 * (wx.w + wx.max_abs_f + wx.max_abs_g * db.delta2))
}

/// Bound `gamma >= |v_xxxx|` from the interior estimate for `|z_x|`
/// (z = w_x) combined with
/// `phi_xx = phi (z_x + phi_x^2/phi^2 + F' - G' phi^2 - G phi_x)`.
///
/// Requires `f''` and `g''` and smooth densities; the caller falls back to
/// a configured gamma otherwise.
pub fn vxxxx_bound<S: Scalar>(
    entry: &CatalogEntry<S>,
    db: &DerivativeBounds<S>,
    phi_x_bound: S,
    n_samples: usize,
) -> Result<S> {
    let f = &entry.f;
    let g = &entry.g;
    if !f.breakpoints.is_empty() || !g.breakpoints.is_empty() {
        return Err(Error::MissingDerivative {
            which: "smooth derivatives (density has breakpoints)",
        });
    }
    if !f.has_d2() {
        return Err(Error::MissingDerivative { which: "f''" });
    }
    let wx = wx_bound(entry, db, n_samples)?;
    let m = wx.w;
    let psi = phi_x_bound;
    let (d1, d2) = (db.delta1, db.delta2);

    // max |F'| with F' = f''/f - F^2.
    let mut max_abs_f_d1 = S::zero();
    for x in sample_grid(f.interval_lo, f.interval_hi, n_samples, &f.breakpoints) {
        let fx = f.eval(x);
        let r = f.d1(x) / fx;
        max_abs_f_d1 = max_abs_f_d1.max((f.d2(x).unwrap() / fx - r * r).abs());
    }

    // max |G''| by central differences of the analytic G' over the target
    // interval; the density data model stops at g''.
    let big_g_d1 = |y: S| {
        let gy = g.eval(y);
        let r = g.d1(y) / gy;
        g.d2(y).unwrap() / gy - r * r
    };
    let h = g.len() / S::of_usize(4 * n_samples);
    let mut max_abs_g_d2 = S::zero();
    for y in sample_grid(g.interval_lo + h, g.interval_hi - h, n_samples, &[]) {
        let v = (big_g_d1(y + h) - big_g_d1(y - h)) / (S::two() * h);
        max_abs_g_d2 = max_abs_g_d2.max(v.abs());
    }
    max_abs_g_d2 = max_abs_g_d2 * S::of(MAX_SAFETY);

    // Interior inequality for |z_x|, every factor replaced by its bound.
    // When m = 0 the function z = w_x vanishes identically and so does z_x.
    let zx = if m == S::zero() {
        S::zero()
    } else {
        let t0 = S::one() + m * psi / d1;
        let inner = (m + wx.max_abs_f) * psi / d1
            + max_abs_f_d1
            + S::of(3.0) * d2 * wx.max_abs_g_d1
            + d2 * m * (max_abs_g_d2 * d2 * d2 + wx.max_abs_g_d1 * psi)
            + wx.max_abs_g_d1 * d2 * d2 / S::two();
        t0 + (S::of(4.0) * m * m * inner + t0 * t0).sqrt()
    };

    Ok(d2
        * (zx
            + psi * psi / (d1 * d1)
            + max_abs_f_d1
            + wx.max_abs_g_d1 * d2 * d2
            + wx.max_abs_g * psi))
}

/// Admissible spatial step: `min(3 delta1 / (2 psi), sqrt(6 delta1 / gamma))`,
/// with a vanishing psi or gamma treated as no constraint. May return
/// infinity; the caller clamps.
pub fn select_dx<S: Scalar>(db: &DerivativeBounds<S>) -> S {
    let from_psi = if db.psi > S::zero() {
        S::of(3.0) * db.delta1 / (S::two() * db.psi)
    } else {
        S::infinity()
    };
    let from_gamma = if db.gamma > S::zero() {
        (S::of(6.0) * db.delta1 / db.gamma).sqrt()
    } else {
        S::infinity()
    };
    from_psi.min(from_gamma)
}

/// Interior a-priori bound, all three terms inside the per-step factor:
/// `sum_i dt_i (dt_i K/2 + dx^2 gamma/(6 delta1) + (max|g'|/min g) dx^2 psi/6)`.
pub fn apriori_interior_bound<S: Scalar>(db: &DerivativeBounds<S>, dt_history: &[S], dx: S) -> S {
    let per_step = dx * dx * db.gamma / (S::of(6.0) * db.delta1)
        + (db.max_g_d1 / db.min_g) * dx * dx * db.psi / S::of(6.0);
    dt_history.iter().fold(S::zero(), |acc, &dt| {
        acc + dt * (dt * db.k_tt.half() + per_step)
    })
}

/// Variant of [`apriori_interior_bound`] with the `(max|g'|/min g)` term
/// accumulated once per step instead of weighted by the step size; both
/// placements are reported side by side.
pub fn apriori_interior_bound_outer_g_term<S: Scalar>(
    db: &DerivativeBounds<S>,
    dt_history: &[S],
    dx: S,
) -> S {
    let inside = dx * dx * db.gamma / (S::of(6.0) * db.delta1);
    let outside = (db.max_g_d1 / db.min_g) * dx * dx * db.psi / S::of(6.0);
    dt_history.iter().fold(S::zero(), |acc, &dt| {
        acc + dt * (dt * db.k_tt.half() + inside) + outside
    })
}

/// Boundary a-priori bound; the middle term is first order in dx:
/// `sum_i dt_i (dt_i K/2 + dx psi/(3 delta1) + (max|g'|/min g) dx^2 psi/6)`.
pub fn apriori_boundary_bound<S: Scalar>(db: &DerivativeBounds<S>, dt_history: &[S], dx: S) -> S {
    let per_step = dx * db.psi / (S::of(3.0) * db.delta1)
        + (db.max_g_d1 / db.min_g) * dx * dx * db.psi / S::of(6.0);
    dt_history.iter().fold(S::zero(), |acc, &dt| {
        acc + dt * (dt * db.k_tt.half() + per_step)
    })
}

/// Assemble the full constant set for an entry, honoring overrides and
/// falling back where the derivation is unavailable.
pub fn compute_bounds<S: Scalar>(
    entry: &CatalogEntry<S>,
    cfg: &BoundsConfig<S>,
) -> Result<DerivativeBounds<S>> {
    let n = cfg.n_samples;
    let eg = conservative_extrema(&entry.g, n);
    let smooth = entry.f.breakpoints.is_empty() && entry.g.breakpoints.is_empty();

    let (d1c, d2c) = vxx_bounds(entry, n)?;
    let (delta1, p1) = pick(cfg.delta1, d1c);
    let (delta2, p2) = pick(cfg.delta2, d2c);
    let max_vt0 = max_initial_vt(entry, n)?;

    let mut db = DerivativeBounds {
        delta1,
        delta2,
        psi: S::zero(),
        gamma: S::zero(),
        k_tt: S::zero(),
        min_g: eg.min_val,
        max_g: eg.max_val,
        max_g_d1: eg.max_d1_abs,
        max_vt0,
        provenance: BoundsProvenance {
            delta1: p1,
            delta2: p2,
            psi: Provenance::Computed,
            gamma: Provenance::Computed,
            k_tt: Provenance::Heuristic,
        },
        smooth_theory: smooth,
    };

    match cfg.psi {
        Some(v) => {
            db.psi = v;
            db.provenance.psi = Provenance::UserSupplied;
        }
        None => db.psi = vxxx_bound(entry, &db, n)?,
    }

    match cfg.gamma {
        Some(v) => {
            db.gamma = v;
            db.provenance.gamma = Provenance::UserSupplied;
        }
        None => match vxxxx_bound(entry, &db, db.psi, n) {
            Ok(v) => db.gamma = v,
            Err(Error::MissingDerivative { .. }) => {
                db.gamma = cfg.gamma_fallback;
                db.provenance.gamma = Provenance::UserSupplied;
            }
            Err(e) => return Err(e),
        },
    }

    match cfg.k_tt {
        Some(v) => {
            db.k_tt = v;
            db.provenance.k_tt = Provenance::UserSupplied;
        }
        // No derivation exists for K; twice the initial time-derivative
        // range is the documented heuristic default.
        None => db.k_tt = S::two() * max_vt0,
    }

    validate_bounds(&db)?;
    Ok(db)
}

fn pick<S>(over: Option<S>, computed: S) -> (S, Provenance) {
    match over {
        Some(v) => (v, Provenance::UserSupplied),
        None => (computed, Provenance::Computed),
    }
}

fn validate_bounds<S: Scalar>(db: &DerivativeBounds<S>) -> Result<()> {
    let ok = db.delta1 > S::zero()
        && db.delta1 <= db.delta2
        && db.psi >= S::zero()
        && db.gamma >= S::zero()
        && db.k_tt >= S::zero()
        && db.min_g > S::zero();
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!(
            "inconsistent derivative bounds: delta1 = {}, delta2 = {}, psi = {}, gamma = {}, k = {}, min g = {}",
            db.delta1, db.delta2, db.psi, db.gamma, db.k_tt, db.min_g
        )))
    }
}
