//! mixlab-core: a numerical laboratory for quantitative mixing on the 2-torus.
//!
//! The crate measures how well a set is mixed (truncated Bianchini semi-norm,
//! two-sided mixedness at a scale), applies mixing schemes with explicit cost
//! accounting (grid rotations on T², strip slides on a discrete torus), checks
//! the singular-integral identity that ties semi-norm growth to a flow, and
//! evaluates the multiscale kernel sums behind the log(1/eps) lower-bound
//! counterexample.

pub mod counterexample;
pub mod error;
pub(crate) mod fft;
pub mod flow;
pub mod grid;
pub mod rotation;
pub mod seminorm;
pub mod slide;

pub use error::MixError;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, MixError>;
