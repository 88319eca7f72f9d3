// SPDX-License-Identifier: Apache-2.0 OR MIT
//! Periodically weighted Macdonald plane partitions.
//!
//! Exact finite measures and observables, contour-integral moment formulas,
//! limit shapes, frozen boundaries, Gaussian fluctuations and an MCMC sampler.

pub mod backwall;
pub mod combinatorics;
pub mod error;
pub mod exact_oracle;
pub mod frozen;
pub mod gff;
pub mod limitshape;
pub mod macdonald;
pub mod observables;
pub mod par;
pub mod sampler;

pub use error::{Error, Result};
