//! Sparse polynomial chaos expansions from few model evaluations.
//!
//! This crate recovers polynomial chaos surrogates by l1 minimisation when
//! the number of model evaluations is far smaller than the number of basis
//! terms. It provides:
//!
//! * orthonormal Legendre and Hermite tensor bases under total-degree
//!   truncation ([`basis`]), with Gauss quadrature for their measures
//!   ([`quadrature`]);
//! * Monte Carlo and coherence-optimal (importance-sampled) designs
//!   ([`sampling`]) and assembly of measurement matrices with coherence
//!   diagnostics ([`measure`]);
//! * a basis-pursuit / basis-pursuit-denoising solver built on spectral
//!   projected gradients over the Pareto curve ([`bpdn`]);
//! * a Gram-matrix preconditioner that re-weighs the sampled rows so the
//!   normalised measurement matrix moves toward an equiangular tight frame,
//!   designed by alternating projection and nonlinear conjugate-gradient
//!   minimisation, with cross-validated regularisation ([`precond`],
//!   [`optim`]);
//! * reference targets with known expansions, an oscillator model, and the
//!   experiment drivers (phase diagrams, noise studies) behind the
//!   `sparse-pce` command-line tool ([`targets`], [`experiments`],
//!   [`report`]).
//!
//! The `examples/` directory exercises each capability end to end; start
//! with `cargo run --example recover_manufactured --release`.

pub mod basis;
pub mod bpdn;
pub mod error;
pub mod experiments;
pub mod measure;
pub mod optim;
pub mod precond;
pub mod quadrature;
pub mod report;
pub mod rng;
pub mod sampling;
pub mod targets;

pub use basis::{BasisSet, MultiIndex, PolynomialFamily};
pub use error::{Error, Result};
