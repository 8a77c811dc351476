//! Numerical workbench for subproduct systems of finite-dimensional Hilbert
//! spaces: compressed shift operators on truncated Fock space, weighted
//! states, inductive/projective connecting maps, covariant and contravariant
//! Berezin symbols, and the boundary diagnostics built from them.

pub mod error;
pub mod tensor;
pub mod poly;
pub mod subproduct;
pub mod fock;
pub mod weights;
pub mod quantize;
pub mod limits;
pub mod config;
pub mod report;
pub mod cli;

pub use error::{Error, Result};
