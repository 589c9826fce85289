//! Adaptive 1D quadrature used by the block integrals.

/// Adaptive Simpson integration of f over [a, b].
///
/// Subdivides until the local Richardson estimate meets the absolute
/// target or the relative target against the running whole-interval
/// magnitude, whichever is looser. Tolerances propagate by halves, the
/// classic. Depth is capped; at the cap the refined estimate is taken.
pub fn adaptive_simpson(
    f: &impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
) -> f64 {
    if a == b {
        return 0.0;
    }
    let m = 0.5 * (a + b);
    let fa = f(a);
    let fm = f(m);
    let fb = f(b);
    let whole = simpson(a, b, fa, fm, fb);
    let scale = whole.abs().max(1e-300);
    step(f, a, b, fa, fm, fb, whole, abs_tol.max(rel_tol * scale), 48)
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn step(
    f: &impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let refined = left + right;
    if depth == 0 || (refined - whole).abs() <= 15.0 * tol {
        return refined + (refined - whole) / 15.0;
    }
    let half = 0.5 * tol;
    step(f, a, m, fa, flm, fm, left, half, depth - 1)
        + step(f, m, b, fm, frm, fb, right, half, depth - 1)
}

/// Integrate over [knots[0], knots[last]] splitting at every interior knot,
/// so integrands with kinks at known points stay piecewise smooth.
pub fn integrate_with_knots(
    f: &impl Fn(f64) -> f64,
    knots: &[f64],
    abs_tol: f64,
    rel_tol: f64,
) -> f64 {
    let mut total = 0.0;
    for w in knots.windows(2) {
        if w[1] > w[0] {
            total += adaptive_simpson(f, w[0], w[1], abs_tol, rel_tol);
        }
    }
    total
}
