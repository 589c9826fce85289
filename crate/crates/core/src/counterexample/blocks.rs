//! Block integrals of the step-shear kernel over rectangle pairs that
//! straddle the x = 0 line.
//!
//! For a left rectangle IL x JL and a right rectangle IR x JR the
//! interaction is
//!
//!   I = int over IL x IR of F(y1 - x1) dx1 dy1,
//!   F(u) = int over JL x JR of K_u(x2 - y2) dx2 dy2,
//!   K_u(s) = s / (u^2 + s^2)^2.
//!
//! F has a four-arctan closed form, and the outer double integral
//! collapses to one dimension: the pushforward of area measure on
//! IL x IR under u = y1 - x1 is the trapezoid density
//! min(u - lo, |IL|, |IR|, hi - u)+. One adaptive 1D quadrature with
//! knots at the trapezoid corners finishes the job, so the only
//! near-singular direction (u near the separation) is resolved where
//! adaptivity is cheap.

use rayon::prelude::*;

use super::kernel::strip_pair_form;
use super::quad::integrate_with_knots;
use super::rects::{RectUnion, SideTag};
use crate::error::MixError;
use crate::grid::kahan_sum;
use crate::Result;

/// Default absolute error target for one block integral.
pub(crate) const BLOCK_ABS_TOL: f64 = 1e-12;
/// Default relative error target for one block integral.
pub(crate) const BLOCK_REL_TOL: f64 = 1e-9;

fn check_interval(name: &str, (a, b): (f64, f64)) -> Result<()> {
    if !(a.is_finite() && b.is_finite()) || b <= a {
        return Err(MixError::BadBlock(format!(
            "{name} interval [{a}, {b}] is degenerate"
        )));
    }
    Ok(())
}

/// Interaction of one left strip IL x JL with one right strip IR x JR,
/// to a caller-chosen quadrature target.
pub(crate) fn kernel_block_integral_with_tol(
    il: (f64, f64),
    ir: (f64, f64),
    jl: (f64, f64),
    jr: (f64, f64),
    abs_tol: f64,
    rel_tol: f64,
) -> Result<f64> {
    check_interval("IL", il)?;
    check_interval("IR", ir)?;
    check_interval("JL", jl)?;
    check_interval("JR", jr)?;
    if il.1 > 0.0 || ir.0 < 0.0 {
        return Err(MixError::BadBlock(format!(
            "x-intervals [{}, {}] and [{}, {}] must sit on opposite sides of x = 0",
            il.0, il.1, ir.0, ir.1
        )));
    }
    let (w1, w2) = (il.1 - il.0, ir.1 - ir.0);
    let lo = ir.0 - il.1;
    let hi = ir.1 - il.0;
    let wmin = w1.min(w2);
    // lambda vanishes at u = lo, which kills the only point where F could
    // blow up (touching strips with overlapping y-intervals)
    let f = |u: f64| {
        let lambda = (u - lo).min(w1).min(w2).min(hi - u);
        if lambda <= 0.0 {
            return 0.0;
        }
        lambda * strip_pair_form(u, jl, jr)
    };
    Ok(integrate_with_knots(
        &f,
        &[lo, lo + wmin, hi - wmin, hi],
        abs_tol,
        rel_tol,
    ))
}

/// Interaction of one left strip IL x JL with one right strip IR x JR
/// under the kernel (x2 - y2) / |x - y|^4, at the default 1e-12 absolute
/// and 1e-9 relative quadrature target.
pub fn kernel_block_integral(
    il: (f64, f64),
    ir: (f64, f64),
    jl: (f64, f64),
    jr: (f64, f64),
) -> Result<f64> {
    kernel_block_integral_with_tol(il, ir, jl, jr, BLOCK_ABS_TOL, BLOCK_REL_TOL)
}

/// Literal pair sums stop here; larger jobs go through the decomposition.
pub(crate) const MAX_PAIRS: u128 = 1 << 24;

/// Total interaction of two rectangle unions: the sum of
/// `kernel_block_integral` over every pair, in lexicographic pair order
/// (parallel map, ordered compensated reduction).
pub fn evaluate_interaction(a: &RectUnion, b: &RectUnion) -> Result<f64> {
    if a.side() != SideTag::Left || b.side() != SideTag::Right {
        return Err(MixError::BadBlock(
            "interaction expects a left union then a right union".into(),
        ));
    }
    let (na, nb) = (a.rects().len(), b.rects().len());
    let pairs = na as u128 * nb as u128;
    if pairs > MAX_PAIRS {
        return Err(MixError::BadBlock(format!(
            "{pairs} rectangle pairs exceeds the literal-summation cap {MAX_PAIRS}; \
             use the decomposition route"
        )));
    }
    let terms: Result<Vec<f64>> = (0..na * nb)
        .into_par_iter()
        .map(|idx| {
            let p = &a.rects()[idx / nb];
            let q = &b.rects()[idx % nb];
            kernel_block_integral((p.x0, p.x1), (q.x0, q.x1), (p.y0, p.y1), (q.y0, q.y1))
        })
        .collect();
    Ok(kahan_sum(terms?.into_iter()))
}
