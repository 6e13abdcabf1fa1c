//! Source/target densities: derivatives, CDFs, extremal data, validation,
//! and the built-in example catalog.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::quadrature;
use crate::scalar::Scalar;

/// Shared real-valued callable.
pub type RealFn<S> = Arc<dyn Fn(S) -> S + Send + Sync>;

fn real_fn<S: Scalar>(f: impl Fn(S) -> S + Send + Sync + 'static) -> RealFn<S> {
    Arc::new(f)
}

/// Extremal data of a density: range of the values and of `|d/dx|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Extrema<S> {
    pub min_val: S,
    pub max_val: S,
    pub min_d1_abs: S,
    pub max_d1_abs: S,
    /// True when these are known extremal values (supplied with the
    /// density), false when obtained by sampling.
    pub exact: bool,
}

/// Outcome of [`validate`]: failures are reported, never thrown.
#[derive(Debug, Clone, Copy)]
pub struct ValidationReport<S> {
    pub min_val: S,
    pub max_val: S,
    pub mass: S,
    pub positivity_ok: bool,
    pub mass_ok: bool,
}

impl<S: Scalar> ValidationReport<S> {
    pub fn pass(&self) -> bool {
        self.positivity_ok && self.mass_ok
    }
}

/// A positive density on a bounded interval together with its derivatives.
///
/// Immutable after construction; all callables are shared and safe for
/// concurrent evaluation. `breakpoints` list the interior discontinuity or
/// kink locations; evaluation at a breakpoint takes the right piece.
#[derive(Clone)]
pub struct DensitySpec<S: Scalar> {
    pub interval_lo: S,
    pub interval_hi: S,
    eval: RealFn<S>,
    eval_d1: RealFn<S>,
    eval_d2: Option<RealFn<S>>,
    pub breakpoints: Vec<S>,
    /// Exact antiderivative, when known. Need not vanish at `interval_lo`;
    /// the CDF subtracts its value there.
    analytic_cdf: Option<RealFn<S>>,
    exact_extrema: Option<Extrema<S>>,
}

impl<S: Scalar> DensitySpec<S> {
    pub fn new(
        interval_lo: S,
        interval_hi: S,
        eval: impl Fn(S) -> S + Send + Sync + 'static,
        eval_d1: impl Fn(S) -> S + Send + Sync + 'static,
    ) -> Self {
        assert!(
            interval_lo < interval_hi,
            "density interval must be nonempty"
        );
        Self {
            interval_lo,
            interval_hi,
            eval: real_fn(eval),
            eval_d1: real_fn(eval_d1),
            eval_d2: None,
            breakpoints: Vec::new(),
            analytic_cdf: None,
            exact_extrema: None,
        }
    }

    pub fn with_d2(mut self, d2: impl Fn(S) -> S + Send + Sync + 'static) -> Self {
        self.eval_d2 = Some(real_fn(d2));
        self
    }

    pub fn with_analytic_cdf(mut self, acdf: impl Fn(S) -> S + Send + Sync + 'static) -> Self {
        self.analytic_cdf = Some(real_fn(acdf));
        self
    }

    pub fn with_exact_extrema(
        mut self,
        min_val: S,
        max_val: S,
        min_d1_abs: S,
        max_d1_abs: S,
    ) -> Self {
        self.exact_extrema = Some(Extrema {
            min_val,
            max_val,
            min_d1_abs,
            max_d1_abs,
            exact: true,
        });
        self
    }

    /// Drop the analytic CDF and exact extremal data, forcing quadrature
    /// and sampling paths. Used to cross-check the numeric machinery.
    pub fn without_shortcuts(mut self) -> Self {
        self.analytic_cdf = None;
        self.exact_extrema = None;
        self
    }

    /// Piecewise density from per-piece callables. `breakpoints` must be
    /// strictly increasing and strictly inside the interval, and
    /// `pieces.len() == breakpoints.len() + 1`.
    pub fn piecewise(
        interval_lo: S,
        interval_hi: S,
        breakpoints: Vec<S>,
        pieces: Vec<Piece<S>>,
    ) -> Self {
        assert_eq!(pieces.len(), breakpoints.len() + 1);
        assert!(
            breakpoints.windows(2).all(|w| w[0] < w[1]),
            "breakpoints must be strictly increasing"
        );
        assert!(
            breakpoints
                .iter()
                .all(|&b| b > interval_lo && b < interval_hi),
            "breakpoints must lie strictly inside the interval"
        );

        let bps = breakpoints.clone();
        let select = move |x: S| bps.partition_point(|&b| b <= x);

        let evals: Vec<RealFn<S>> = pieces.iter().map(|p| p.eval.clone()).collect();
        let d1s: Vec<RealFn<S>> = pieces.iter().map(|p| p.d1.clone()).collect();
        let d2s: Option<Vec<RealFn<S>>> = pieces.iter().map(|p| p.d2.clone()).collect();

        // Global antiderivative with the piece offsets accumulated so it is
        // continuous and vanishes at interval_lo.
        let analytic_cdf: Option<RealFn<S>> = pieces
            .iter()
            .map(|p| p.antideriv.clone())
            .collect::<Option<Vec<_>>>()
            .map(|antis| {
                let mut seg_lo = vec![interval_lo];
                seg_lo.extend_from_slice(&breakpoints);
                let mut prefix = vec![S::zero()];
                for (i, bp) in breakpoints.iter().enumerate() {
                    let piece_mass = antis[i](*bp) - antis[i](seg_lo[i]);
                    prefix.push(prefix[i] + piece_mass);
                }
                let sel = select.clone();
                real_fn(move |x: S| {
                    let i = sel(x);
                    prefix[i] + antis[i](x) - antis[i](seg_lo[i])
                })
            });

        let sel = select.clone();
        let eval = real_fn(move |x: S| evals[sel(x)](x));
        let sel = select.clone();
        let eval_d1 = real_fn(move |x: S| d1s[sel(x)](x));
        let eval_d2 = d2s.map(|fns| {
            let sel = select.clone();
            real_fn(move |x: S| fns[sel(x)](x))
        });

        Self {
            interval_lo,
            interval_hi,
            eval,
            eval_d1,
            eval_d2,
            breakpoints,
            analytic_cdf,
            exact_extrema: None,
        }
    }

    /// Piecewise-cubic density: each piece is `c0 + c1 x + c2 x^2 + c3 x^3`
    /// in the global coordinate. This is the custom-density file format;
    /// the exact antiderivative comes for free.
    pub fn piecewise_cubic(
        interval_lo: S,
        interval_hi: S,
        breakpoints: Vec<S>,
        coeffs: Vec<[S; 4]>,
    ) -> Self {
        let pieces = coeffs
            .into_iter()
            .map(|[c0, c1, c2, c3]| Piece {
                eval: real_fn(move |x: S| c0 + x * (c1 + x * (c2 + x * c3))),
                d1: real_fn(move |x: S| c1 + x * (S::two() * c2 + x * S::of(3.0) * c3)),
                d2: Some(real_fn(move |x: S| S::two() * c2 + S::of(6.0) * c3 * x)),
                antideriv: Some(real_fn(move |x: S| {
                    x * (c0 + x * (c1.half() + x * (c2 / S::of(3.0) + x * c3 / S::of(4.0))))
                })),
            })
            .collect();
        Self::piecewise(interval_lo, interval_hi, breakpoints, pieces)
    }

    #[inline]
    pub fn eval(&self, x: S) -> S {
        (self.eval)(x)
    }

    #[inline]
    pub fn d1(&self, x: S) -> S {
        (self.eval_d1)(x)
    }

    pub fn d2(&self, x: S) -> Option<S> {
        self.eval_d2.as_ref().map(|f| f(x))
    }

    pub fn has_d2(&self) -> bool {
        self.eval_d2.is_some()
    }

    pub fn has_analytic_cdf(&self) -> bool {
        self.analytic_cdf.is_some()
    }

    pub fn eval_fn(&self) -> RealFn<S> {
        self.eval.clone()
    }

    pub fn len(&self) -> S {
        self.interval_hi - self.interval_lo
    }

    fn in_domain(&self, x: S) -> bool {
        x >= self.interval_lo && x <= self.interval_hi
    }
}

/// One smooth piece of a piecewise density.
pub struct Piece<S: Scalar> {
    pub eval: RealFn<S>,
    pub d1: RealFn<S>,
    pub d2: Option<RealFn<S>>,
    pub antideriv: Option<RealFn<S>>,
}

impl<S: Scalar> Piece<S> {
    pub fn constant(c: S) -> Self {
        Self {
            eval: real_fn(move |_| c),
            d1: real_fn(|_| S::zero()),
            d2: Some(real_fn(|_| S::zero())),
            antideriv: Some(real_fn(move |x: S| c * x)),
        }
    }
}

/// CDF of `d` at `x`: the integral of the density from `interval_lo` to `x`.
///
/// Uses the exact antiderivative when available, otherwise adaptive Simpson
/// split at the breakpoints, with absolute error at most `quad_tol`.
pub fn cdf<S: Scalar>(d: &DensitySpec<S>, x: S, quad_tol: S) -> Result<S> {
    if !d.in_domain(x) {
        return Err(Error::OutOfDomain {
            x: x.to_f64().unwrap_or(f64::NAN),
            lo: d.interval_lo.to_f64().unwrap_or(f64::NAN),
            hi: d.interval_hi.to_f64().unwrap_or(f64::NAN),
        });
    }
    Ok(cdf_unchecked(d, x, quad_tol))
}

pub(crate) fn cdf_unchecked<S: Scalar>(d: &DensitySpec<S>, x: S, quad_tol: S) -> S {
    match &d.analytic_cdf {
        Some(a) => a(x) - a(d.interval_lo),
        None => {
            quadrature::integrate_split(d.eval.as_ref(), d.interval_lo, x, &d.breakpoints, quad_tol)
        }
    }
}

/// CDF of `d` at each of the ascending points `xs`, integrating each gap
/// only once. The error budget is spread over the sweep so the accumulated
/// error stays within `quad_tol`.
pub fn cdf_sweep<S: Scalar>(d: &DensitySpec<S>, xs: &[S], quad_tol: S) -> Result<Vec<S>> {
    let mut out = Vec::with_capacity(xs.len());
    if let Some(a) = &d.analytic_cdf {
        let base = a(d.interval_lo);
        for &x in xs {
            if !d.in_domain(x) {
                return Err(Error::OutOfDomain {
                    x: x.to_f64().unwrap_or(f64::NAN),
                    lo: d.interval_lo.to_f64().unwrap_or(f64::NAN),
                    hi: d.interval_hi.to_f64().unwrap_or(f64::NAN),
                });
            }
            out.push(a(x) - base);
        }
        return Ok(out);
    }
    let total = d.len();
    let mut acc = S::zero();
    let mut prev = d.interval_lo;
    for &x in xs {
        if !d.in_domain(x) {
            return Err(Error::OutOfDomain {
                x: x.to_f64().unwrap_or(f64::NAN),
                lo: d.interval_lo.to_f64().unwrap_or(f64::NAN),
                hi: d.interval_hi.to_f64().unwrap_or(f64::NAN),
            });
        }
        debug_assert!(x >= prev, "cdf_sweep points must be ascending");
        acc += quadrature::integrate_split(
            d.eval.as_ref(),
            prev,
            x,
            &d.breakpoints,
            quad_tol * (x - prev).max(S::epsilon()) / total,
        );
        out.push(acc);
        prev = x;
    }
    Ok(out)
}

/// Check positivity and unit mass on an `n_samples` grid (breakpoints
/// included as sample points).
pub fn validate<S: Scalar>(
    d: &DensitySpec<S>,
    n_samples: usize,
    quad_tol: S,
) -> ValidationReport<S> {
    assert!(n_samples >= 2);
    let mut min_val = S::infinity();
    let mut max_val = S::neg_infinity();
    let mut visit = |x: S| {
        let v = d.eval(x);
        min_val = min_val.min(v);
        max_val = max_val.max(v);
    };
    let n = S::of_usize(n_samples - 1);
    for i in 0..n_samples {
        let t = S::of_usize(i) / n;
        visit(d.interval_lo + t * d.len());
    }
    for &b in &d.breakpoints {
        visit(b);
    }
    let mass = cdf_unchecked(d, d.interval_hi, quad_tol);
    ValidationReport {
        min_val,
        max_val,
        mass,
        positivity_ok: min_val > S::zero(),
        mass_ok: (mass - S::one()).abs() <= S::of(10.0) * quad_tol,
    }
}

/// Extrema of the density and of `|d1|`.
///
/// Returns the exact extremal data when the spec carries it; otherwise the
/// sampled extrema over a uniform `n_samples` grid plus the breakpoints
/// (a conservative estimate the caller may inflate).
pub fn extrema<S: Scalar>(d: &DensitySpec<S>, n_samples: usize) -> Extrema<S> {
    if let Some(e) = d.exact_extrema {
        return e;
    }
    assert!(n_samples >= 2);
    let mut e = Extrema {
        min_val: S::infinity(),
        max_val: S::neg_infinity(),
        min_d1_abs: S::infinity(),
        max_d1_abs: S::zero(),
        exact: false,
    };
    let mut visit = |x: S| {
        let v = d.eval(x);
        let dv = d.d1(x).abs();
        e.min_val = e.min_val.min(v);
        e.max_val = e.max_val.max(v);
        e.min_d1_abs = e.min_d1_abs.min(dv);
        e.max_d1_abs = e.max_d1_abs.max(dv);
    };
    let n = S::of_usize(n_samples - 1);
    for i in 0..n_samples {
        let t = S::of_usize(i) / n;
        visit(d.interval_lo + t * d.len());
    }
    for &b in &d.breakpoints {
        visit(b);
    }
    e
}

/// Default sample count for extremal scans.
pub const DEFAULT_EXTREMA_SAMPLES: usize = 100_001;

// ---------------------------------------------------------------------------
// Example catalog
// ---------------------------------------------------------------------------

/// A transport problem: source `f`, target `g`, and the initial convex
/// potential `u0` with its first three derivatives.
#[derive(Clone)]
pub struct CatalogEntry<S: Scalar> {
    pub id: String,
    pub f: DensitySpec<S>,
    pub g: DensitySpec<S>,
    pub u0: RealFn<S>,
    pub u0_d1: RealFn<S>,
    pub u0_d2: RealFn<S>,
    pub u0_d3: RealFn<S>,
    pub notes: String,
}

impl<S: Scalar> CatalogEntry<S> {
    /// Neumann data: the target interval endpoints.
    pub fn c_bc(&self) -> S {
        self.g.interval_lo
    }

    pub fn d_bc(&self) -> S {
        self.g.interval_hi
    }

    /// Build an entry with a cubic initial potential
    /// `u0 = c0 + c1 x + c2 x^2 + c3 x^3`.
    pub fn with_cubic_u0(
        id: impl Into<String>,
        f: DensitySpec<S>,
        g: DensitySpec<S>,
        coeffs: [S; 4],
        notes: impl Into<String>,
    ) -> Self {
        let [c0, c1, c2, c3] = coeffs;
        Self {
            id: id.into(),
            f,
            g,
            u0: real_fn(move |x: S| c0 + x * (c1 + x * (c2 + x * c3))),
            u0_d1: real_fn(move |x: S| c1 + x * (S::two() * c2 + x * S::of(3.0) * c3)),
            u0_d2: real_fn(move |x: S| S::two() * c2 + S::of(6.0) * c3 * x),
            u0_d3: real_fn(move |_| S::of(6.0) * c3),
            notes: notes.into(),
        }
    }

    /// The canonical compatible quadratic initial potential: the unique
    /// quadratic with `u0'(A) = C` and `u0'(B) = D`. For matching source
    /// and target intervals this is `x^2/2` plus an affine shift.
    pub fn compatible_quadratic(f: &DensitySpec<S>, g: &DensitySpec<S>) -> [S; 4] {
        let alpha = g.len() / f.len();
        let beta = g.interval_lo - alpha * f.interval_lo;
        [S::zero(), beta, alpha.half(), S::zero()]
    }

    /// Check `u0'` matches the Neumann data at the interval ends and that
    /// `u0''` is strictly positive on a sample grid.
    pub fn check_compatibility(&self, n_samples: usize) -> Result<()> {
        let tol = S::of(1e-9) * (S::one() + self.d_bc().abs().max(self.c_bc().abs()));
        let at_lo = (self.u0_d1)(self.f.interval_lo);
        let at_hi = (self.u0_d1)(self.f.interval_hi);
        if (at_lo - self.c_bc()).abs() > tol || (at_hi - self.d_bc()).abs() > tol {
            return Err(Error::InvalidConfig(format!(
                "initial potential incompatible with Neumann data: u0'(A) = {}, C = {}, u0'(B) = {}, D = {}",
                at_lo,
                self.c_bc(),
                at_hi,
                self.d_bc()
            )));
        }
        let n = S::of_usize(n_samples - 1);
        for i in 0..n_samples {
            let x = self.f.interval_lo + S::of_usize(i) / n * self.f.len();
            let v = (self.u0_d2)(x);
            if v <= S::zero() {
                return Err(Error::NonConvexInitial {
                    x: x.to_f64().unwrap_or(f64::NAN),
                    value: v.to_f64().unwrap_or(f64::NAN),
                });
            }
        }
        Ok(())
    }
}

/// All built-in example ids, in catalog order.
pub const CATALOG_IDS: &[&str] = &[
    "uniform_uniform",
    "ex_simple",
    "ex_highfreq_fwd",
    "ex_highfreq_inv",
    "ex_vonmises_quantile",
    "ex_near_zero",
    "ex_piecewise_const",
    "ex_piecewise_mixed",
];

/// Look up a built-in example by id.
pub fn catalog<S: Scalar>(id: &str) -> Result<CatalogEntry<S>> {
    let entry = match id {
        "uniform_uniform" => {
            let half = S::one().half();
            let f = constant_density(-S::one(), S::one(), half);
            let g = constant_density(-S::one(), S::one(), half);
            quad_entry(
                id,
                f,
                g,
                "identity transport between uniform halves on [-1,1]",
            )
        }
        "ex_simple" => {
            let f = log_density();
            let g = quadratic_density();
            quad_entry(id, f, g, "shifted logarithm to convex quadratic on [-1,1]")
        }
        "ex_highfreq_fwd" => {
            let f = highfreq_density();
            let g = linear_quarter_density();
            quad_entry(id, f, g, "high-frequency cosine source to linear target")
        }
        "ex_highfreq_inv" => {
            let f = linear_quarter_density();
            let g = highfreq_density();
            quad_entry(id, f, g, "linear source to high-frequency cosine target")
        }
        "ex_vonmises_quantile" => {
            let f = constant_density(S::zero(), S::one(), S::one());
            let g = von_mises_density();
            quad_entry(
                id,
                f,
                g,
                "uniform source; the map is the von Mises quantile function",
            )
        }
        "ex_near_zero" => {
            let f = near_zero_density();
            let g = constant_density(-S::one(), S::one(), S::one().half());
            quad_entry(id, f, g, "linear source dipping to 1/20 near the left end")
        }
        "ex_piecewise_const" => {
            let f = piecewise_const_density();
            let g = constant_density(-S::one(), S::one(), S::one().half());
            quad_entry(
                id,
                f,
                g,
                "four-level piecewise-constant source to uniform target",
            )
        }
        "ex_piecewise_mixed" => {
            let f = piecewise_mixed_f();
            let g = piecewise_mixed_g();
            quad_entry(
                id,
                f,
                g,
                "piecewise log/quadratic source to piecewise linear target",
            )
        }
        _ => {
            return Err(Error::UnknownExample {
                id: id.to_string(),
                valid: CATALOG_IDS,
            })
        }
    };
    Ok(entry)
}

fn quad_entry<S: Scalar>(
    id: &str,
    f: DensitySpec<S>,
    g: DensitySpec<S>,
    notes: &str,
) -> CatalogEntry<S> {
    let u0 = CatalogEntry::compatible_quadratic(&f, &g);
    CatalogEntry::with_cubic_u0(id, f, g, u0, notes)
}

fn constant_density<S: Scalar>(lo: S, hi: S, c: S) -> DensitySpec<S> {
    DensitySpec::new(lo, hi, move |_| c, |_| S::zero())
        .with_d2(|_| S::zero())
        .with_analytic_cdf(move |x: S| c * x)
        .with_exact_extrema(c, c, S::zero(), S::zero())
}

/// f(x) = (ln(x+2) + 2) / (3 ln 3 + 2) on [-1, 1].
fn log_density<S: Scalar>() -> DensitySpec<S> {
    let norm = S::of(3.0) * S::of(3.0).ln() + S::two();
    let two = S::two();
    DensitySpec::new(
        -S::one(),
        S::one(),
        move |x: S| ((x + two).ln() + two) / norm,
        move |x: S| S::one() / ((x + two) * norm),
    )
    .with_d2(move |x: S| -S::one() / ((x + two) * (x + two) * norm))
    .with_analytic_cdf(move |x: S| {
        let t = x + two;
        (t * t.ln() - t + two * x) / norm
    })
    .with_exact_extrema(
        two / norm,
        (S::of(3.0).ln() + two) / norm,
        S::one() / (S::of(3.0) * norm),
        S::one() / norm,
    )
}

/// g(x) = x^2/2 + 1/3 on [-1, 1].
fn quadratic_density<S: Scalar>() -> DensitySpec<S> {
    let third = S::one() / S::of(3.0);
    DensitySpec::new(
        -S::one(),
        S::one(),
        move |x: S| x * x / S::two() + third,
        |x: S| x,
    )
    .with_d2(|_| S::one())
    .with_analytic_cdf(move |x: S| x * x * x / S::of(6.0) + third * x)
    .with_exact_extrema(third, S::of(5.0) / S::of(6.0), S::zero(), S::one())
}

/// f(x) = 50 (cos(100 x) + 2) / (sin(100) + 200) on [-1, 1].
fn highfreq_density<S: Scalar>() -> DensitySpec<S> {
    let hundred = S::of(100.0);
    let denom = hundred.sin() + S::of(200.0);
    let fifty = S::of(50.0);
    DensitySpec::new(
        -S::one(),
        S::one(),
        move |x: S| fifty * ((hundred * x).cos() + S::two()) / denom,
        move |x: S| -fifty * hundred * (hundred * x).sin() / denom,
    )
    .with_d2(move |x: S| -fifty * hundred * hundred * (hundred * x).cos() / denom)
    .with_analytic_cdf(move |x: S| ((hundred * x).sin().half() + hundred * x) / denom)
    .with_exact_extrema(
        fifty / denom,
        S::of(150.0) / denom,
        S::zero(),
        fifty * hundred / denom,
    )
}

/// g(x) = (x + 2) / 4 on [-1, 1].
fn linear_quarter_density<S: Scalar>() -> DensitySpec<S> {
    let quarter = S::one() / S::of(4.0);
    DensitySpec::new(
        -S::one(),
        S::one(),
        move |x: S| (x + S::two()) * quarter,
        move |_| quarter,
    )
    .with_d2(|_| S::zero())
    .with_analytic_cdf(move |x: S| x * x / S::of(8.0) + x.half())
    .with_exact_extrema(quarter, S::of(3.0) * quarter, quarter, quarter)
}

/// f(x) = (9/20) x + 1/2 on [-1, 1].
fn near_zero_density<S: Scalar>() -> DensitySpec<S> {
    let slope = S::of(9.0) / S::of(20.0);
    let half = S::one().half();
    DensitySpec::new(
        -S::one(),
        S::one(),
        move |x: S| slope * x + half,
        move |_| slope,
    )
    .with_d2(|_| S::zero())
    .with_analytic_cdf(move |x: S| slope * x * x / S::two() + half * x)
    .with_exact_extrema(half - slope, half + slope, slope, slope)
}

/// The four-level piecewise-constant source: 0.3 / 0.6 / 0.2 / 0.9 on
/// quarters of [-1, 1].
fn piecewise_const_density<S: Scalar>() -> DensitySpec<S> {
    let half = S::one().half();
    let levels = [S::of(0.3), S::of(0.6), S::of(0.2), S::of(0.9)];
    DensitySpec::piecewise(
        -S::one(),
        S::one(),
        vec![-half, S::zero(), half],
        levels.iter().map(|&c| Piece::constant(c)).collect(),
    )
    .with_exact_extrema(S::of(0.2), S::of(0.9), S::zero(), S::zero())
}

/// Piecewise source: (1/2) ln(x+2) + 13/12 - ln 2 for x <= 0, then
/// x^2/4 + 1/3. The constant makes the total mass exactly one.
fn piecewise_mixed_f<S: Scalar>() -> DensitySpec<S> {
    let half = S::one().half();
    let two = S::two();
    let c = S::of(13.0) / S::of(12.0) - two.ln();
    let third = S::one() / S::of(3.0);
    let left = Piece {
        eval: real_fn(move |x: S| half * (x + two).ln() + c),
        d1: real_fn(move |x: S| half / (x + two)),
        d2: Some(real_fn(move |x: S| -half / ((x + two) * (x + two)))),
        antideriv: Some(real_fn(move |x: S| {
            let t = x + two;
            half * (t * t.ln() - t) + c * x
        })),
    };
    let right = Piece {
        eval: real_fn(move |x: S| x * x / S::of(4.0) + third),
        d1: real_fn(move |x: S| x.half()),
        d2: Some(real_fn(|_| S::one().half())),
        antideriv: Some(real_fn(move |x: S| x * x * x / S::of(12.0) + third * x)),
    };
    DensitySpec::piecewise(-S::one(), S::one(), vec![S::zero()], vec![left, right])
        .with_exact_extrema(
            third,
            S::of(13.0) / S::of(12.0) - two.ln().half(),
            S::zero(),
            half,
        )
}

/// Piecewise target: linear up, flat 1/2, linear down; mass one.
fn piecewise_mixed_g<S: Scalar>() -> DensitySpec<S> {
    let slope = S::of(3.0) / S::of(10.0);
    let level = S::of(7.0) / S::of(10.0);
    let third = S::one() / S::of(3.0);
    let up = Piece {
        eval: real_fn(move |x: S| slope * x + level),
        d1: real_fn(move |_| slope),
        d2: Some(real_fn(|_| S::zero())),
        antideriv: Some(real_fn(move |x: S| slope * x * x / S::two() + level * x)),
    };
    let flat = Piece::constant(S::one().half());
    let down = Piece {
        eval: real_fn(move |x: S| -slope * x + level),
        d1: real_fn(move |_| -slope),
        d2: Some(real_fn(|_| S::zero())),
        antideriv: Some(real_fn(move |x: S| -slope * x * x / S::two() + level * x)),
    };
    DensitySpec::piecewise(
        -S::one(),
        S::one(),
        vec![-third, third],
        vec![up, flat, down],
    )
    .with_exact_extrema(
        S::of(2.0) / S::of(5.0),
        S::of(3.0) / S::of(5.0),
        S::zero(),
        slope,
    )
}

/// g(y) = e^{cos y} / (2 pi I0(1)) on [-pi, pi]: von Mises, mu = 0, kappa = 1.
fn von_mises_density<S: Scalar>() -> DensitySpec<S> {
    let i0 = bessel_i(0, S::one());
    let z = S::two() * S::PI() * i0;
    let d = DensitySpec::new(
        -S::PI(),
        S::PI(),
        move |y: S| y.cos().exp() / z,
        move |y: S| -y.sin() * y.cos().exp() / z,
    )
    .with_d2(move |y: S| (y.sin() * y.sin() - y.cos()) * y.cos().exp() / z);

    // Antiderivative from e^{cos y} = I0(1) + 2 sum_k I_k(1) cos(k y);
    // the I_k(1) decay superexponentially, so a short truncation is exact
    // to machine precision.
    let mut series: Vec<S> = Vec::new();
    for k in 1..64 {
        let ik = bessel_i(k, S::one());
        let coeff = S::two() * ik / (S::of_usize(k) * z);
        if coeff < S::of(1e-18) {
            break;
        }
        series.push(coeff);
    }
    let i0_over_z = i0 / z;
    let acdf = move |y: S| {
        let mut acc = i0_over_z * y;
        for (idx, &coeff) in series.iter().enumerate() {
            let k = S::of_usize(idx + 1);
            acc += coeff * (k * y).sin();
        }
        acc
    };

    // max |g'| at cos y = (sqrt(5) - 1) / 2.
    let phi = (S::of(5.0).sqrt() - S::one()).half();
    let max_d1 = (S::one() - phi * phi).sqrt() * phi.exp() / z;
    d.with_analytic_cdf(acdf).with_exact_extrema(
        (-S::one()).exp() / z,
        S::one().exp() / z,
        S::zero(),
        max_d1,
    )
}

/// Modified Bessel function of the first kind, integer order, by its power
/// series; terms below 1e-16 of the running sum are dropped.
pub fn bessel_i<S: Scalar>(order: usize, x: S) -> S {
    let half_x = x.half();
    let mut term = S::one();
    for m in 1..=order {
        term = term * half_x / S::of_usize(m);
    }
    let mut sum = term;
    let mut m = 1usize;
    loop {
        term = term * half_x * half_x / (S::of_usize(m) * S::of_usize(m + order));
        sum += term;
        if term < S::of(1e-16) * sum || m > 200 {
            return sum;
        }
        m += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uniform_01() -> DensitySpec<f64> {
        DensitySpec::new(0.0, 1.0, |_| 1.0, |_| 0.0).with_d2(|_| 0.0)
    }

    #[test]
    fn cdf_uniform_midpoint() {
        let d = uniform_01();
        assert!((cdf(&d, 0.5, 1e-10).unwrap() - 0.5).abs() < 1e-10);
        assert_eq!(cdf(&d, 0.0, 1e-10).unwrap(), 0.0);
        assert!((cdf(&d, 1.0, 1e-10).unwrap() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn cdf_rejects_outside_domain() {
        let d = uniform_01();
        assert!(cdf(&d, -0.1, 1e-10).is_err());
        assert!(cdf(&d, 1.1, 1e-10).is_err());
    }

    #[test]
    fn cdf_piecewise_const_at_zero() {
        // Rectangle areas: 0.3 * 0.5 + 0.6 * 0.5 = 0.45.
        let f: DensitySpec<f64> = piecewise_const_density();
        assert!((cdf(&f, 0.0, 1e-12).unwrap() - 0.45).abs() < 1e-12);
        // Quadrature path agrees once the analytic antiderivative is gone.
        let fq = f.without_shortcuts();
        assert!((cdf(&fq, 0.0, 1e-12).unwrap() - 0.45).abs() < 1e-11);
    }

    #[test]
    fn validate_uniform_and_near_zero() {
        let r = validate(&uniform_01(), 101, 1e-10);
        assert_eq!(r.min_val, 1.0);
        assert_eq!(r.max_val, 1.0);
        assert!((r.mass - 1.0).abs() < 1e-10);
        assert!(r.pass());

        // f = (9/20) x + 1/2 on [-1, 1]: extremes at the endpoints.
        let f: DensitySpec<f64> = near_zero_density();
        let r = validate(&f, 101, 1e-10);
        assert!((r.min_val - 0.05).abs() < 1e-15);
        assert!((r.max_val - 0.95).abs() < 1e-15);
        assert!((r.mass - 1.0).abs() < 1e-10);
        assert!(r.pass());
    }

    #[test]
    fn validate_flags_wrong_mass() {
        let d = DensitySpec::<f64>::new(0.0, 1.0, |_| 2.0, |_| 0.0);
        let r = validate(&d, 11, 1e-10);
        assert!(r.positivity_ok);
        assert!(!r.mass_ok);
        assert!(!r.pass());
    }

    #[test]
    fn extrema_quadratic_by_sampling() {
        // g = x^2/2 + 1/3: sampled with an odd count so x = 0 is a node.
        let g = quadratic_density::<f64>().without_shortcuts();
        let e = extrema(&g, 10_001);
        assert!(!e.exact);
        assert_eq!(e.min_val, 1.0 / 3.0);
        assert!((e.max_val - 5.0 / 6.0).abs() < 1e-15);
        assert_eq!(e.max_d1_abs, 1.0);
    }

    #[test]
    fn extrema_constant() {
        let d = constant_density::<f64>(-1.0, 1.0, 0.5).without_shortcuts();
        let e = extrema(&d, 11);
        assert_eq!((e.min_val, e.max_val), (0.5, 0.5));
        assert_eq!((e.min_d1_abs, e.max_d1_abs), (0.0, 0.0));
    }

    #[test]
    fn extrema_highfreq_dense_sampling() {
        // cos attains +-1 well inside [-1, 1], so the range is
        // [50, 150] / (sin 100 + 200).
        let denom = 100f64.sin() + 200.0;
        let f = highfreq_density::<f64>().without_shortcuts();
        let e = extrema(&f, 200_001);
        assert!((e.min_val - 50.0 / denom).abs() < 1e-6);
        assert!((e.max_val - 150.0 / denom).abs() < 1e-6);
        // And the catalog metadata carries the exact values.
        let exact = extrema(&highfreq_density::<f64>(), 2);
        assert!(exact.exact);
        assert_eq!(exact.min_val, 50.0 / denom);
        assert_eq!(exact.max_d1_abs, 5000.0 / denom);
    }

    #[test]
    fn catalog_simple_matches_formulas() {
        let e: CatalogEntry<f64> = catalog("ex_simple").unwrap();
        let c = 3.0 * 3f64.ln() + 2.0;
        assert!((e.f.eval(0.0) - (2f64.ln() + 2.0) / c).abs() < 1e-15);
        assert!((e.g.eval(0.5) - (0.125 + 1.0 / 3.0)).abs() < 1e-15);
        assert_eq!((e.f.interval_lo, e.f.interval_hi), (-1.0, 1.0));
        // Initial potential x^2 / 2.
        assert!(((e.u0)(0.6) - 0.18).abs() < 1e-15);
        assert!(((e.u0_d2)(0.3) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn catalog_uniform_is_identity_problem() {
        let e: CatalogEntry<f64> = catalog("uniform_uniform").unwrap();
        assert_eq!(e.f.eval(0.2), 0.5);
        assert_eq!(e.g.eval(-0.7), 0.5);
        assert_eq!((e.c_bc(), e.d_bc()), (-1.0, 1.0));
    }

    #[test]
    fn catalog_vonmises_shapes() {
        let e: CatalogEntry<f64> = catalog("ex_vonmises_quantile").unwrap();
        assert_eq!((e.f.interval_lo, e.f.interval_hi), (0.0, 1.0));
        assert_eq!(e.f.eval(0.5), 1.0);
        let z = 2.0 * std::f64::consts::PI * bessel_i(0, 1.0);
        assert!((e.g.eval(0.0) - 1f64.exp() / z).abs() < 1e-15);
        // u0 = pi (x^2 - x): matches the Neumann data C = -pi, D = pi.
        assert!(((e.u0_d1)(0.0) + std::f64::consts::PI).abs() < 1e-12);
        assert!(((e.u0_d1)(1.0) - std::f64::consts::PI).abs() < 1e-12);
    }

    #[test]
    fn catalog_rejects_unknown_id() {
        match catalog::<f64>("nope") {
            Err(crate::error::Error::UnknownExample { valid, .. }) => {
                assert_eq!(valid.len(), 8)
            }
            Err(other) => panic!("expected UnknownExample, got {other}"),
            Ok(_) => panic!("expected UnknownExample, got an entry"),
        }
    }

    #[test]
    fn bessel_i0_of_one() {
        // Reference value of I0(1).
        assert!((bessel_i(0, 1.0f64) - 1.266_065_877_752_008_4).abs() < 1e-15);
        // I1(1).
        assert!((bessel_i(1, 1.0f64) - 0.565_159_103_992_485).abs() < 1e-15);
    }

    #[test]
    fn piecewise_cubic_roundtrip() {
        // 0.3 on [-1, 0), 0.7 on [0, 1]: mass 1 piecewise-constant cubic.
        let d = DensitySpec::<f64>::piecewise_cubic(
            -1.0,
            1.0,
            vec![0.0],
            vec![[0.3, 0.0, 0.0, 0.0], [0.7, 0.0, 0.0, 0.0]],
        );
        assert_eq!(d.eval(-0.5), 0.3);
        // Right-continuity at the breakpoint.
        assert_eq!(d.eval(0.0), 0.7);
        assert!((cdf(&d, 1.0, 1e-12).unwrap() - 1.0).abs() < 1e-12);
        assert!((cdf(&d, 0.5, 1e-12).unwrap() - 0.65).abs() < 1e-12);
        assert_eq!(d.d1(0.3), 0.0);
        assert_eq!(d.d2(0.3), Some(0.0));
    }

    #[test]
    fn cdf_sweep_matches_pointwise() {
        let f: DensitySpec<f64> = log_density().without_shortcuts();
        let xs: Vec<f64> = (0..=20).map(|i| -1.0 + 0.1 * i as f64).collect();
        let swept = cdf_sweep(&f, &xs, 1e-11).unwrap();
        for (i, &x) in xs.iter().enumerate() {
            let direct = cdf(&f, x, 1e-12).unwrap();
            assert!((swept[i] - direct).abs() < 1e-10);
        }
    }
}
