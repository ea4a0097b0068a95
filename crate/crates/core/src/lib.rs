//! Band structures of one-dimensional periodic Schrödinger operators
//! `h = -d²/dx² + V(x)` and the Darboux (supersymmetric) transformations
//! built from their Bloch functions.
//!
//! The crate is `no_std` (it needs `alloc`). Modules, bottom-up:
//!
//! - [`specfun`]: complete elliptic integrals, Jacobi `sn/cn/dn`, Weierstrass `℘, ζ, σ`.
//! - [`engine`]: potentials and the transfer-matrix / initial-value integrator.
//! - [`band`]: discriminant, Floquet multipliers, band edges, classification.
//! - [`bloch`]: Bloch functions for any real energy and their nodal structure.
//! - [`darboux`]: first and second order transformations, injected states.
//! - [`catalog`]: soliton wells, Lamé potentials, collages and closed forms.
//! - [`analysis`]: displacement detection, defects, bound states, isospectrality.
#![cfg_attr(not(test), no_std)]

extern crate alloc;

mod error;
mod roots;

pub mod analysis;
pub mod band;
pub mod bloch;
pub mod catalog;
pub mod darboux;
pub mod engine;
pub mod specfun;

pub use error::{Error, Result};
pub use engine::{PotentialSpec, SampledSolution, ScaledState, StateVector, TransferMatrix};

pub use num_complex::Complex64;
