//! Fourier Learning Machines.
//!
//! A Fourier Learning Machine is a single-hidden-layer cosine network whose
//! neurons are arranged so that the whole network is exactly an
//! `m`-dimensional nonharmonic Fourier series with learnable frequencies,
//! amplitudes and phases. This crate provides the model with closed-form
//! derivatives, the translation to separable sine/cosine coefficients, an Adam
//! training loop, collocation solvers for three benchmark PDEs and a
//! penalty-method solver for a controlled Rock-Paper-Scissors replicator
//! system together with an indirect shooting reference.

#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod checkpoint;
pub mod error;
pub mod grid;
pub mod lexi;
pub mod model;
pub mod ocp;
pub mod ode;
pub mod optim;
pub mod pde;
pub mod pmp;
pub mod xlate;

pub use error::{FlmError, Result};
pub use lexi::{BasisIndex, SignMatrix};
pub use model::{Cotangent, Derivs, EvalBundle, FlmModel, FlmShape, InitConfig, SubNetwork};
