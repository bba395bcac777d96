//! Operational metastability analysis for finite-dimensional Markovian
//! open quantum systems, with a classical Markov-chain counterpart.
//!
//! Operators are dense `D×D` complex matrices; superoperators are `D²×D²`
//! matrices acting on column-stacked operators, `vec(A)[i + j·D] = A[i, j]`.

pub mod backend;
pub mod battery;
pub mod classical;
pub mod cli;
pub mod constants;
mod eig;
pub mod error;
pub mod heisenberg;
pub mod induced_norm;
pub mod io;
pub mod mode;
pub mod models;
pub mod operator;
pub mod regimes;
mod search;
pub mod spectral_meta;
pub mod superop;

pub use nalgebra::{DMatrix, DVector};
pub use num_complex::Complex64 as C64;

pub use backend::{DynamicsBackend, QuantumBackend};
pub use error::{Error, Result};
pub use induced_norm::{InducedNormResult, NormOptions};
pub use superop::{QuantumModel, SpectralData, Superoperator};

pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;
