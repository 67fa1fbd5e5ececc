//! One-dimensional quadrature used by the continuum functionals.

use crate::scalar::Real;

/// Adaptive Simpson integration of `f` over `[a, b]`.
///
/// Returns `None` when the recursion exceeds `max_depth` without meeting the
/// tolerance or when `f` produces a non-finite value; both signal a
/// non-integrable (or non-finite) integrand.
pub fn adaptive_simpson<T: Real, F: Fn(T) -> T>(
    f: F,
    a: T,
    b: T,
    tol: T,
    max_depth: usize,
) -> Option<T> {
    if a == b {
        return Some(T::zero());
    }
    let half = T::lit(0.5);
    let fa = f(a);
    let fb = f(b);
    let m = (a + b) * half;
    let fm = f(m);
    if !(fa.is_finite() && fb.is_finite() && fm.is_finite()) {
        return None;
    }
    let whole = simpson(a, b, fa, fm, fb);
    recurse(&f, a, b, fa, fm, fb, whole, tol, max_depth)
}

fn simpson<T: Real>(a: T, b: T, fa: T, fm: T, fb: T) -> T {
    (b - a) / T::lit(6.0) * (fa + T::lit(4.0) * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn recurse<T: Real, F: Fn(T) -> T>(
    f: &F,
    a: T,
    b: T,
    fa: T,
    fm: T,
    fb: T,
    whole: T,
    tol: T,
    depth: usize,
) -> Option<T> {
    let half = T::lit(0.5);
    let m = (a + b) * half;
    let lm = (a + m) * half;
    let rm = (m + b) * half;
    let flm = f(lm);
    let frm = f(rm);
    if !(flm.is_finite() && frm.is_finite()) {
        return None;
    }
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if delta.abs() <= T::lit(15.0) * tol {
        return Some(left + right + delta / T::lit(15.0));
    }
    if depth == 0 {
        return None;
    }
    let l = recurse(f, a, m, fa, flm, fm, left, tol * half, depth - 1)?;
    let r = recurse(f, m, b, fm, frm, fb, right, tol * half, depth - 1)?;
    Some(l + r)
}

/// Three-point Gauss-Legendre rule on `[a, b]` (exact for quintics).
pub fn gauss3<T: Real, F: Fn(T) -> T>(f: F, a: T, b: T) -> T {
    let half = T::lit(0.5);
    let c = (a + b) * half;
    let h = (b - a) * half;
    let x = T::lit((3.0f64 / 5.0).sqrt());
    let w0 = T::lit(8.0 / 9.0);
    let w1 = T::lit(5.0 / 9.0);
    h * (w0 * f(c) + w1 * (f(c - h * x) + f(c + h * x)))
}
