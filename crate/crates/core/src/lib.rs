//! Position-feedback stabilization of the cart pendulum with a stable feedback
//! compensator `C` and a stable parallel feedforward compensator `P`.
//!
//! The loop is `w = u - C z`, `y = G w`, `z = y + P w`, giving
//! `H = n_G d_C d_P / (d_C d_G d_P + n_C n_P d_G + n_C n_G d_P)`.

// `!(x > 0.0)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod designs;
pub mod error;
pub mod io;
pub mod modern;
pub mod plant;
pub mod poly;
pub mod sim;
pub mod synth;
pub mod tf;

pub use error::{Error, Result};
pub use poly::{Polynomial, RootSet};
pub use tf::{CompensatorPair, RationalTF};
