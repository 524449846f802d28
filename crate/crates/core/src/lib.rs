//! Dipole scattering observables for targets with arbitrary level
//! populations, including amplifying targets with negative total cross
//! sections.

// `!(x > 0.0)` deliberately rejects NaN alongside out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::excessive_precision, clippy::needless_range_loop)]

pub mod cli;
pub mod error;
pub mod medium;
pub mod quadrature;
pub mod response;
pub mod scattering;
pub mod scenario;
pub mod screen;
pub mod spectral_model;
pub mod validate;

pub use error::{Error, Result};
