//! Adaptive composite Simpson quadrature with breakpoint splitting.
//!
//! Densities may be only piecewise smooth; integrals are always split at
//! the listed breakpoints so the adaptive rule only ever sees a smooth
//! integrand. Tolerances are absolute and divided among sub-intervals in
//! proportion to their length.

use crate::scalar::Scalar;

/// Refuse to accept an estimate before this many bisection levels. Guards
/// against oscillatory integrands that alias to a smooth-looking coarse rule.
const MIN_DEPTH: u32 = 4;
/// Hard recursion cap; accept the current estimate past this depth.
const MAX_DEPTH: u32 = 48;

#[inline]
fn simpson<S: Scalar>(fa: S, fm: S, fb: S, h: S) -> S {
    h * (fa + S::of(4.0) * fm + fb) / S::of(6.0)
}

fn adapt<S: Scalar, F: Fn(S) -> S + ?Sized>(
    f: &F,
    a: S,
    b: S,
    fa: S,
    fm: S,
    fb: S,
    whole: S,
    tol: S,
    depth: u32,
) -> S {
    let m = (a + b).half();
    let lm = (a + m).half();
    let rm = (m + b).half();
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(fa, flm, fm, m - a);
    let right = simpson(fm, frm, fb, b - m);
    let refined = left + right;
    let err = refined - whole;
    if depth >= MAX_DEPTH || (depth >= MIN_DEPTH && err.abs() <= S::of(15.0) * tol) {
        // Richardson extrapolation: Simpson halving gains a factor 16.
        return refined + err / S::of(15.0);
    }
    let half_tol = tol.half();
    adapt(f, a, m, fa, flm, fm, left, half_tol, depth + 1)
        + adapt(f, m, b, fm, frm, fb, right, half_tol, depth + 1)
}

/// Integrate `f` over `[a, b]` (`a <= b`) to absolute tolerance `tol`.
pub fn integrate<S: Scalar, F: Fn(S) -> S + ?Sized>(f: &F, a: S, b: S, tol: S) -> S {
    if a == b {
        return S::zero();
    }
    debug_assert!(a < b, "integrate: need a <= b");
    let m = (a + b).half();
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = simpson(fa, fm, fb, b - a);
    adapt(f, a, b, fa, fm, fb, whole, tol, 0)
}

/// Integrate `f` over `[a, b]`, splitting at any of `breakpoints` that fall
/// strictly inside. The tolerance is apportioned by sub-interval length.
pub fn integrate_split<S: Scalar, F: Fn(S) -> S + ?Sized>(
    f: &F,
    a: S,
    b: S,
    breakpoints: &[S],
    tol: S,
) -> S {
    if a == b {
        return S::zero();
    }
    let len = b - a;
    let mut total = S::zero();
    let mut lo = a;
    for &bp in breakpoints {
        if bp > lo && bp < b {
            total += integrate(f, lo, bp, tol * (bp - lo) / len);
            lo = bp;
        }
    }
    total + integrate(f, lo, b, tol * (b - lo) / len)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact() {
        let v: f64 = integrate(&|x: f64| 3.0 * x * x, 0.0, 2.0, 1e-12);
        assert!((v - 8.0).abs() < 1e-12);
    }

    #[test]
    fn oscillatory_integrand() {
        // int_{-1}^{1} cos(100 x) dx = 2 sin(100) / 100
        let v: f64 = integrate(&|x: f64| (100.0 * x).cos(), -1.0, 1.0, 1e-12);
        let exact = 2.0 * (100.0f64).sin() / 100.0;
        assert!((v - exact).abs() < 1e-10, "got {v}, want {exact}");
    }

    #[test]
    fn split_handles_jump() {
        // Step function: 0.3 on [-1,0), 0.7 on [0,1].
        let f = |x: f64| if x < 0.0 { 0.3 } else { 0.7 };
        let v = integrate_split(&f, -1.0, 1.0, &[0.0], 1e-12);
        assert!((v - 1.0).abs() < 1e-12);
    }

    #[test]
    fn empty_interval_is_zero() {
        let v: f64 = integrate(&|x: f64| x.exp(), 0.5, 0.5, 1e-10);
        assert_eq!(v, 0.0);
    }
}
