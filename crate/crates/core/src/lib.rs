//! Finite-volume solver for a two-species hyperbolic Keller-Segel system with
//! cell-cell repulsion.
//!
//! Each species is advected by the negative gradient of a shared pressure `P`,
//! which solves the screened Poisson problem `(I - χΔ)P = u₁ + u₂` with a
//! no-flux boundary, and grows by Lotka-Volterra kinetics. The crate also
//! carries the spatially homogeneous ODE model, characteristic tracing over a
//! stored pressure history, stochastic cluster seeding and the logistic
//! parameter fits used to calibrate growth and drug mortality.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, configuration
//! and the command line live in the companion `hks` crate.
#![cfg_attr(not(test), no_std)]
// `!(x > 0.0)` is the idiom for "not positive, or NaN" in the validators.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod characteristics;
pub mod elliptic;
mod error;
pub mod fitting;
pub mod grid;
pub mod kinetics;
pub mod rng;
pub mod seeding;
pub mod simulator;
pub mod transport;

pub use error::{Error, Result};
pub use grid::{Dimension, Field, Grid, GridSpec};
pub use kinetics::KineticParams;
