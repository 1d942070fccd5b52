//! Exact free-probability combinatorics and free group factor parameters for
//! the subfactor tower built from a finite-dimensional Kac algebra.

pub mod algnum;
pub mod caps;
pub mod gjs;
pub mod kac;
pub mod mp_oracle;
pub mod ncpart;
pub mod report;
pub mod suites;
pub mod vncalc;

pub use algnum::{AlgError, AlgebraicReal};
pub use caps::Caps;
pub use ncpart::NCPartition;
