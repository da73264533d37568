//! Why are accurate neural networks so easy to fool?  This crate turns a
//! matrix-theoretic answer into runnable code.  For well-separated synthetic
//! classification problems, a network that fits the training data perfectly
//! can still be flipped by a perturbation whose norm stays O(1) while the
//! distance between classes grows like sqrt(d): the network compresses the
//! decisive feature direction by the ratio R_dd / ||A_col||, read straight
//! off a QR factorization, and an attacker only has to pay for the
//! compressed feature.
//!
//! The pieces:
//! - [`datagen`]: the synthetic classification problems (Gaussian one-point
//!   classes, generator chains, sign-coded hypercube data).
//! - [`models`]: a small dense MLP with analytic input gradients, its Adam
//!   trainer, and the exact closed-form "ideal" networks the theory builds.
//! - [`attacks`]: the constructive perturbations and a gradient attack with
//!   bisection refinement.
//! - [`oracle`]: the minimum-distance classifier and its exact flip radius,
//!   the robustness yardstick everything is measured against.
//! - [`analysis`]: compression diagnostics (angle statistics, the local
//!   projection ratio rho, path-integral quantities).
//! - [`rmt`]: the random-matrix side (Bartlett-style R factors, products of
//!   upper-triangular factors, the chi-square lower-tail bound).
//! - [`harness`]: seed-managed experiment orchestration reproducing the
//!   published synthetic tables at desk scale, with CSV/SVG output.
//!
//! Everything is deterministic given a seed, serial, and dependency-light;
//! see the examples directory for runnable tours of each capability.

pub mod analysis;
pub mod attacks;
pub mod datagen;
pub mod error;
pub mod harness;
pub mod matrix;
pub mod models;
pub mod oracle;
pub mod reference;
pub mod rmt;
pub mod rng;
pub mod stats;
pub mod svg;

pub use error::{Error, Result};
