//! Simulation of a single photon carrying tunable entanglement between its
//! polarization and orbital-angular-momentum (OAM) degrees of freedom.
//!
//! The crate covers the full chain from source to statistics:
//!
//! - [`state`]: density-matrix algebra on the polarization ⊗ OAM qubit pair
//!   (Bell states, the partially coherent state family, purity, concurrence,
//!   depolarizing visibility loss).
//! - [`optics`]: Jones-calculus waveplates, the q-plate, the generation chain
//!   that writes polarization into OAM and the measurement-stage OAM analyzer.
//! - [`source`]: group-velocity mismatch bookkeeping and the delay → coherence
//!   ("dip") models that set the mixing parameter ε.
//! - [`chsh`]: correlators, the CHSH sum, θ scans, the maximal violation from
//!   the correlation matrix and a numerical angle optimizer.
//! - [`counting`]: seeded Poisson photon counting, count-ratio estimators with
//!   error propagation, fringe and Hong-Ou-Mandel scans.
//! - [`config`] and [`scenario`]: TOML experiment configs and the named
//!   scenarios that write CSV tables plus run metadata.

// `!(x > 0.0)` is used deliberately so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod chsh;
pub mod config;
pub mod counting;
mod error;
mod linalg;
pub mod optics;
pub mod rng;
pub mod scenario;
pub mod source;
pub mod state;

pub use error::{Error, Result};
pub use num_complex::Complex64;
