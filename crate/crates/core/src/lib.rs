//! Two-photon quantum polarimetry.
//!
//! Depolarizing optical channels act on polarization-entangled photon pairs
//! through the congruence `K_out = M K_in Mᵀ` of the two-photon correlation
//! tensor. This crate models those channels, generates them from a polarized
//! scattering Monte Carlo, simulates and inverts two-photon state tomography,
//! and reconstructs Mueller matrices from input/output correlation data.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod error;
pub mod fit;
pub mod io;
pub mod linalg;
pub mod metrics;
pub mod polarization;
pub mod random;
pub mod scatter;
pub mod tomography;

pub use channel::{KrausEnsemble, KrausItem, MuellerMatrix};
pub use error::{Error, Result};
pub use polarization::{CorrelationTensor, DensityMatrix, StokesVector};
