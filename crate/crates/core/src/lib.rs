//! Computational time-reversal MUSIC imaging of point scatterers with a
//! non-colocated multistatic array, together with the high-SNR statistics of
//! the TR-MUSIC null spectrum at the scatterer positions.
//!
//! The crate is organised bottom-up:
//!
//! - [`specfun`]: Bessel/Hankel functions and the 2-D Green function.
//! - [`scene`]: scene description and synthesis of the multistatic data
//!   matrix (Born and Foldy-Lax), SNR and noise utilities.
//! - [`scene_file`]: TOML scene documents.
//! - [`subspace`]: Jacobi SVD and its partition into signal and orthogonal
//!   subspaces.
//! - [`imaging`]: Rx, Tx and generalized null spectra and grid localisation.
//! - [`perturb`]: first-order perturbation vectors, moments, NSD and the
//!   distribution of the null spectrum at each scatterer.
//! - [`mc`]: seeded Monte Carlo harness and the SNR / shift sweeps.
//! - [`stats`]: compensated sums, histograms, gamma CDF and KS / DKW tools.
//! - [`rng`]: per-trial ChaCha20 streams.

// `!(x > 0.0)` style guards also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod imaging;
pub mod mc;
pub mod perturb;
pub mod rng;
pub mod scene;
pub mod scene_file;
pub mod specfun;
pub mod stats;
pub mod subspace;

pub use error::{Error, Result};
pub use num_complex::Complex64;
