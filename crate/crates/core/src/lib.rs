//! Numerical laboratory for coupled KdV-KdV systems of Majda-Biello type.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod constants;
pub mod dd;
pub mod dispersion;
pub mod error;
pub mod fit;
pub mod oscillatory;
pub mod picard;
pub mod quadrature;
pub mod resonance;
pub mod solver;

pub use error::{Error, Result};
