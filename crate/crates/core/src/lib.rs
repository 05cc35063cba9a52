//! Regularized wave and transport equations with discontinuous coefficients.
//!
//! Coefficients with jumps are replaced by mollified families `c_eps`, the
//! resulting smooth problems are solved for a ladder of `eps` values, and the
//! growth of derivatives as `eps -> 0` is used to locate singular rays.

pub mod characteristics;
pub mod coefficients;
pub mod detector;
pub mod energy;
pub mod error;
pub mod io;
pub mod mollifier;
pub mod oracle;
pub mod profile;
pub mod quadrature;
pub mod solvers;

pub use error::{Error, Result};
