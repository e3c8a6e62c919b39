//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Configuration rejected before any computation started.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// Gamma(alpha + 1) has no exact rational value for non-integer alpha.
    #[error("gamma unavailable in rational mode for non-integer alpha (got {alpha})")]
    GammaUnavailable { alpha: String },

    /// An operation that only exists for one scalar mode was called in the other.
    #[error("operation requires {required} mode")]
    UnsupportedMode { required: &'static str },

    /// Polynomial division left a remainder above tolerance.
    #[error("inexact polynomial division in {context}: remainder sup-norm {remainder_norm}")]
    InexactDivision {
        context: String,
        remainder_norm: String,
    },

    /// A polynomial identity that must hold exactly (or within float
    /// tolerance) failed; this signals an arithmetic bug, not bad input.
    #[error("identity violated: {name} (n = {n}), residual sup-norm {residual}")]
    IdentityViolation {
        name: String,
        n: usize,
        residual: String,
    },

    /// The kernel matrix lost positive definiteness where it is guaranteed.
    #[error("kernel matrix not positive definite at n = {n} (d = {d}); leading minor {minor} is {value}")]
    PositiveDefiniteViolation {
        n: usize,
        d: usize,
        minor: usize,
        value: String,
    },

    /// The d*-by-d* linear system for the derivative values was singular.
    #[error("singular linear system while solving for derivative values at n = {n}")]
    SingularSystem { n: usize },

    /// A ladder application did not reduce to a polynomial.
    #[error("non-polynomial ladder result in {context}: remainder sup-norm {remainder_norm}")]
    NonPolynomialResult {
        context: String,
        remainder_norm: String,
    },

    /// Root iteration hit its sweep cap before every root met the
    /// residual bound. Partial results are attached.
    #[error("root finding did not converge for {label} after {sweeps} sweeps")]
    NoConvergence {
        label: String,
        sweeps: usize,
        partial: Box<crate::roots::ZeroSet>,
    },

    /// An evaluation point collided with a pole of the external field.
    #[error("evaluation point {point} collides with pole {pole}")]
    PoleCollision { point: String, pole: String },

    /// A pole of psi2 where a simple pole was required turned out multiple.
    #[error("non-simple pole of the field decomposition at {pole}")]
    NonSimplePole { pole: String },
}

pub type Result<T> = std::result::Result<T, Error>;
