//! Core numerics for studying learning-rate tuners and curvature feedback.
//!
//! The crate is organized around a small evaluation contract ([`Objective`]):
//! a problem exposes its value, gradient, Hessian-vector product, and the
//! quadratic form `u'∇²f(w)u` along a direction. On top of that sit base
//! optimizers producing update directions, the step-size rules themselves
//! (`tuners`), sharpness instrumentation (`curvature`), simplified models of
//! the joint step-size/curvature dynamics (`dynamics`), a set of desk-scale
//! problems with analytic derivatives (`problems`), and a sequential training
//! loop that ties them together (`train`).
//!
//! The crate is `no_std`-compatible (alloc required): build with
//! `--no-default-features --features libm` to drop std.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

#[cfg(not(any(feature = "std", feature = "libm")))]
compile_error!("eoslab-core needs either the `std` or the `libm` feature for float math");

pub mod curvature;
pub mod dynamics;
pub mod ema;
pub mod error;
pub mod objective;
pub mod optimizers;
pub mod problems;
pub mod rngutil;
pub mod train;
pub mod tuners;
pub mod vector;

pub use error::{Error, Result};
pub use objective::Objective;
pub use vector::ParamVec;
