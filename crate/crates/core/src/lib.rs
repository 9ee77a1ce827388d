pub mod basis;
pub mod branchpoints;
pub mod error;
pub mod fieldmap;
pub mod linalg;
pub mod matrices;
pub mod oracle;
pub mod quadrature;
pub mod signal;
pub mod specfun;
pub mod spectrum;
pub mod sweep;

pub use error::{Error, Result};
