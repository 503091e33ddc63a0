//! Elliptic dynamical R-matrices of U_q(sl_{n+1}) in the vector representation,
//! built from connection matrices of the q-Knizhnik–Zamolodchikov equations.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dynamical;
pub mod error;
pub mod exchange;
pub mod linalg;
pub mod qkz;
pub mod sampling;
pub mod specfun;
pub mod suites;
pub mod trig;
pub mod weights;

pub use error::{Error, Result};
pub use specfun::{SpecialValue, TruncationPolicy, C};
pub use weights::{ModelParams, Weight};
