//! Quantum reservoir computing with a kicked-Ising Floquet reservoir.
//!
//! Pipeline: MNIST images are compressed by PCA to `2N` coefficients, encoded
//! as single-qubit rotations of an `N`-qubit product state, evolved for `n`
//! periods of the kicked-Ising drive, measured in the computational basis,
//! and classified by a one-layer softmax network.

extern crate blas_src;

mod binio;
pub mod data;
pub mod dynamics;
pub mod error;
pub mod experiment;
pub mod linalg;
pub mod network;
pub mod onn;
pub mod readout;

pub use error::{Error, Result};
