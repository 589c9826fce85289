//! Error type shared by every module in the crate.

use thiserror::Error;

/// Everything that can go wrong while building or running an experiment.
#[derive(Debug, Error)]
pub enum MixError {
    #[error("grid side {0} must be a power of two and at least 4")]
    BadGridSide(usize),

    #[error("radius {0} not in (0, 1/4]")]
    BadRadius(f64),

    #[error("scale exponent m={m} invalid for grid side {n}: need 1 <= m and 2^m <= n")]
    BadCheckerScale { m: u32, n: usize },

    #[error("grid specs differ: {0} vs {1}")]
    SpecMismatch(usize, usize),

    #[error("kappa {0} not in (0, 1/2)")]
    BadKappa(f64),

    #[error("eps {0} not in (0, 1/8)")]
    BadEps(f64),

    #[error("radius growth factor rho {0} must exceed 1")]
    BadRho(f64),

    #[error("field contains a non-finite value at cell ({0}, {1})")]
    NonFiniteValue(usize, usize),

    #[error("rotation move invalid: {0}")]
    BadRotation(String),

    #[error("scheme depth {n} too deep for grid side {side}: need 2^(n+1) <= side")]
    BadSchemeDepth { n: u32, side: usize },

    #[error("slide move invalid: {0}")]
    BadSlide(String),

    #[error("slide state invalid: {0}")]
    BadSlideState(String),

    #[error("form spec invalid: {0}")]
    BadFormSpec(String),

    #[error("block integral invalid: {0}")]
    BadBlock(String),

    #[error("multiscale parameters invalid: {0}")]
    BadMultiscale(String),

    #[error("rectangle union invalid: {0}")]
    BadRectUnion(String),

    #[error("probe parameters invalid: {0}")]
    BadProbe(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}
