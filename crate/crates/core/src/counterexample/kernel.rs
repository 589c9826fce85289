//! The shear kernel K_r(s) = s/(r^2+s^2)^2 and its exact integrals over
//! vertical interval pairs.
//!
//! K_r has the antiderivative -1/2 * 1/(r^2+s^2) in s, so the double
//! integral of K_r(x2-y2) over an interval pair JL x JR collapses to four
//! arctangents. Differences of arctangents with large arguments are
//! computed through the addition identity to avoid cancellation.

/// atan(p) - atan(q), evaluated without cancellation for large same-sign
/// arguments via atan(p) - atan(q) = atan((p-q)/(1+pq)) up to the branch
/// shift when pq < -1.
pub fn atan_diff(p: f64, q: f64) -> f64 {
    let pq = p * q;
    let core = ((p - q) / (1.0 + pq)).atan();
    if pq > -1.0 {
        core
    } else {
        // p and q straddle a pole of the identity; the principal value
        // wraps by pi toward the sign of p.
        core + if p > 0.0 {
            std::f64::consts::PI
        } else {
            -std::f64::consts::PI
        }
    }
}

/// Exact inner double integral
/// F(u) = integral over x2 in [jl.0, jl.1], y2 in [jr.0, jr.1] of
/// K_u(x2 - y2), for u > 0.
pub fn strip_pair_form(u: f64, jl: (f64, f64), jr: (f64, f64)) -> f64 {
    let (al, be) = jl;
    let (ga, de) = jr;
    // (1/2u) [ atan((be-de)/u) - atan((al-de)/u) - atan((be-ga)/u) + atan((al-ga)/u) ]
    let top = atan_diff((be - de) / u, (al - de) / u);
    let bot = atan_diff((be - ga) / u, (al - ga) / u);
    (top - bot) / (2.0 * u)
}
