//! Landau-de Gennes Q-tensor toolkit for nematic point defects.
//!
//! The crate works on cell-centred cubic lattices of traceless symmetric
//! 3x3 tensors. It provides the pointwise algebra ([`qtensor`]), the bulk
//! potential ([`material`]), lattice fields ([`field`]), the discrete
//! one-constant energy and its exact gradient ([`energy`]), a descent
//! minimizer ([`solver`]), a radial-hedgehog boundary-value solver
//! ([`radial`]) and the defect measurements ([`analysis`]).
//!
//! Everything here is pure computation: no file or terminal IO. The crate
//! builds without `std` (with `alloc`) when default features are disabled;
//! the `parallel` feature spreads lattice sweeps over rayon without changing
//! any result bit.
#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod analysis;
pub mod eigen;
pub mod energy;
pub mod error;
pub mod field;
pub mod linalg;
pub mod material;
pub mod math;
mod par;
pub mod qtensor;
pub mod radial;
pub mod solver;
pub mod sphere;

pub use error::{Error, Result};
pub use field::{BlowupSpec, GridSpec, QField};
pub use material::MaterialParams;
pub use qtensor::{EigenSystem, QTensor};
