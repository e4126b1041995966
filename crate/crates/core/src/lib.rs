//! Pointwise model aggregation by minimal empirical variance.
//!
//! The crate is `no_std` (with `alloc`) and contains every numerical piece of
//! the toolkit: the weight formulas, kernel machinery, aggregator fitting, a
//! bank of Laplace and Burgers solvers with their samplers, the operator
//! aggregation pipeline, the Monte-Carlo theory lab and the tabular benchmark.
//! File formats, CSV handling and the command line live in the `meva` crate.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod agg;
pub mod error;
pub mod kernels;
pub mod linalg;
pub mod operator;
pub mod pathological;
pub mod pde;
pub mod rng;
pub mod tabular;
pub mod theory;
pub mod train;

pub use agg::{
    aggregate_pointwise, mea_weights, mva_weights, rotated_weights, softmax_weights,
    CovarianceModel, SecondMoments, WeightVector,
};
pub use error::{Error, Result};
pub use kernels::{Kernel, KernelFamily, KernelSpec, KrrModel};
pub use train::{ErrorSamples, LossKind, MevaAggregator};
