//! Fluctuation identities of spectrally positive Lévy processes.
//!
//! The crate evaluates first-passage laws, laws of the running extrema,
//! Kendall's identity and the ballot theorem in two independent ways:
//! adaptive quadrature over the marginal density of `X_t`, and Monte
//! Carlo over exactly simulated bounded-variation paths.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod acceptance;
pub mod cli;
pub mod density;
pub mod error;
pub mod fluctuation;
pub mod model;
pub mod path_sim;
pub mod quadrature;
pub mod subordinator;
pub mod special;

pub use error::{Error, Result};
