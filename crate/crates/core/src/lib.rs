//! Noise sensitivity of the top eigenvector of Wigner matrices.
//!
//! The crate samples Wigner ensembles, resamples `k` random entries, and
//! measures how the top eigenvector moves. Around it sit exact and Monte
//! Carlo evaluators of Chatterjee's variance decomposition, resolvent
//! diagnostics near the spectral edge, and the experiment drivers behind the
//! `wigner-chaos` command-line tool.

pub mod chaos;
pub mod ensemble;
pub mod error;
pub mod experiments;
pub mod io;
pub mod linalg;
pub mod parallel;
pub mod resolvent;
pub mod rng;
pub mod spectral;
pub mod stats;

pub use error::{Error, Result};
