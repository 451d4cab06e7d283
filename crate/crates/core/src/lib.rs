pub mod adjoint;
pub mod error;
pub mod fixtures;
pub mod frac_calc;
pub mod hamiltonian;
pub mod hj;
pub mod linear;
pub mod mittag_leffler;
pub(crate) mod quadrature;
pub mod torus;

pub use error::{Error, Result};

/// Library version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
