//! Discrete-element sea-ice floe dynamics on a doubly periodic square domain,
//! driven by a stochastic spectral ocean surrogate.
//!
//! The crate provides:
//! - cylindrical floe populations with power-law radii and Gamma thicknesses
//!   ([`floe`]),
//! - Hookean normal / shear tangential contact forces with a Coulomb cap and
//!   a cell-grid neighbor search ([`contact`]),
//! - complex ocean Fourier modes advanced by linear stochastic equations and
//!   reconstructed at arbitrary points ([`ocean`]),
//! - an Euler-Maruyama integrator for the coupled system with contact
//!   sub-stepping ([`integrate`]),
//! - physics-constrained merging of small floes into "superfloes"
//!   ([`superfloe`]),
//! - ensemble forecasting and statistics ([`uq`]),
//! - an ensemble adjustment Kalman filter over the joint floe-ocean state
//!   with superfloe-derived noise inflation ([`da`]),
//! - scenario configuration and file output ([`config`], [`output`]).

pub mod config;
pub mod contact;
pub mod da;
pub mod domain;
pub mod error;
pub mod floe;
pub mod integrate;
pub mod ocean;
pub mod output;
pub mod seeds;
pub mod superfloe;
pub mod uq;

pub use error::{Error, Result};
