//! Physics-informed neural networks for unique-continuation (data
//! assimilation) problems.
//!
//! The crate is organised bottom-up:
//!
//! * [`autodiff`]: reverse-mode tape and second-order input jets.
//! * [`network`]: the MLP, its parameter layout and the batched jet kernels.
//! * [`quadrature`]: point sets and weights over the problem geometries.
//! * [`problems`]: the builtin inverse problems and their residuals.
//! * [`training`]: loss assembly, optimizers, single runs and ensembles.
//! * [`metrics`]: generalization errors and training diagnostics.
//! * [`cli`]: the command-line front end used by the `pinns` binary.

// `!(x > 0.0)` style checks are meant to reject NaN too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod autodiff;
pub mod error;
pub mod network;
pub mod problems;
pub mod quadrature;
pub mod seed;
pub mod training;
pub mod metrics;
pub mod cli;

pub use error::{Error, Result};
