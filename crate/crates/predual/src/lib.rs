//! Distance from a character to a space of trigonometric polynomials, in the
//! weighted space of a possibly matrix-valued, possibly partly singular
//! spectral measure: primal upper bounds by truncation and certified dual
//! lower bounds, sandwiching the prediction error.

pub mod acsets;
pub mod config;
pub mod dual;
pub mod error;
pub mod groups;
pub mod laspace;
pub mod linalg;
pub mod measures;
pub mod oracle;
pub mod primal;
pub mod scenario;
pub mod verify;

pub use error::{Error, Result};
