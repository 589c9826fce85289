//! Lower-bound laboratory for the mixing-cost counterexample.
//!
//! The construction pairs two unions of thin rectangles on opposite sides
//! of the x = 0 line, built over L dyadic levels with scale exponent M,
//! and evaluates the singular interaction
//!
//!   I = sum over (P in A, Q in B) of the block integral of
//!       (x2 - y2) / |x - y|^4  over P x Q,
//!
//! whose diagonal part grows linearly in L while the separation shrinks
//! like 2^(-LM). Small parameters are evaluated by literal summation over
//! rectangle pairs; large ones go through an exact decomposition that
//! collapses the pair lattice by translation invariance.

mod blocks;
mod decompose;
mod kernel;
mod probe;
mod quad;
mod rects;

pub use blocks::{evaluate_interaction, kernel_block_integral};
pub use decompose::{decompose_interaction, BoundsReport};
pub use probe::{upper_bound_probe, ProbeReport};
pub use rects::{build_multiscale_sets, MultiscaleParams, Rect, RectUnion, SideTag, MAX_RECTS};
