use crate::scalar::Scalar;

/// Adaptive Simpson integration of `f` over `[a, b]` to absolute tolerance `tol`.
pub fn adaptive_simpson<S: Scalar, F: Fn(S) -> S>(f: &F, a: S, b: S, tol: S) -> S {
    if b <= a {
        return S::zero();
    }
    let half = S::lit(0.5);
    let m = (a + b) * half;
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = simpson(a, b, fa, fm, fb);
    recurse(f, a, b, fa, fm, fb, whole, tol, 48)
}

#[inline]
fn simpson<S: Scalar>(a: S, b: S, fa: S, fm: S, fb: S) -> S {
    (b - a) / S::lit(6.0) * (fa + S::lit(4.0) * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn recurse<S: Scalar, F: Fn(S) -> S>(
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
    let half = S::lit(0.5);
    let m = (a + b) * half;
    let lm = (a + m) * half;
    let rm = (m + b) * half;
    let (flm, frm) = (f(lm), f(rm));
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= S::lit(15.0) * tol {
        return left + right + delta / S::lit(15.0);
    }
    recurse(f, a, m, fa, flm, fm, left, tol * half, depth - 1)
        + recurse(f, m, b, fm, frm, fb, right, tol * half, depth - 1)
}
