//! Structure-preserving finite-difference solver for Maxwell-Ampere
//! Nernst-Planck charge dynamics on periodic two-dimensional grids.
//!
//! Concentrations are advanced with a Scharfetter-Gummel type implicit
//! scheme whose matrix is an M-matrix, so positivity and mass are kept
//! exactly. The displacement field is advanced explicitly from the ionic
//! currents, which keeps the discrete Gauss law, and is then made curl-free
//! by local energy-minimising cell updates.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod ampere;
pub mod app;
pub mod curlfree;
pub mod diagnostics;
pub mod error;
pub mod grid;
pub mod mms;
pub mod model;
pub mod np_scheme;

pub use error::{Error, Result};
