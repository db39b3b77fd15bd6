//! Two-fluid interfacial wave machinery: nondimensionalization, exact and
//! symbolic Dirichlet-Neumann operators, Kelvin-Helmholtz stability criteria,
//! nonlinear evolution and the two-layer shallow-water model.
// `!(x > 0.0)` is used on purpose so NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod evolution;
pub mod kelvin;
pub mod linalg;
pub mod scenario;
mod serde_ext;
pub mod snapshot;
pub mod spectral;
pub mod stability;
pub mod strip;
pub mod swsw;
pub mod symbols;
pub mod two_fluid;
pub mod units;

pub use error::{Error, Result};
