//! Laguerre-Sobolev orthogonal polynomials.
//!
//! Construction of the monic orthogonal family for discrete Sobolev inner
//! products with mass points on the negative axis, the full connection /
//! ladder / differential-equation algebra relating it to the classical
//! Laguerre family, high-precision zero finding, and an electrostatic
//! report (external-field poles, gradient residuals, Hessian spectrum,
//! minimum/saddle classification) for the zero configuration.
//!
//! Exact rational arithmetic (GMP) is the default for the structure
//! algebra, so every identity check is an exact-zero test; big floats
//! (MPFR) carry the numeric stages at a configurable precision.

pub mod complex;
pub mod electro;
pub mod error;
pub mod laguerre;
pub mod poly;
pub mod scalar;
pub mod roots;
pub mod sobolev;
pub mod structure;

pub use complex::ComplexScalar;
pub use error::{Error, Result};
pub use laguerre::{LadderDirection, LaguerreFamily};
pub use poly::Polynomial;
pub use scalar::{ArithMode, Scalar};
pub use sobolev::{
    is_sequentially_ordered, sobolev_inner, KernelSet, MassPoint, SeqOrderedReport, SobolevConfig,
    SobolevFamily, SobolevPolynomial,
};
