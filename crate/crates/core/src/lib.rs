//! Learning a single convolutional filter from labeled examples.
//!
//! The network is `f_w(x) = (1/k) Σᵢ σ(wᵀPᵢx)` where each `Pᵢ` selects an
//! `r`-dimensional patch of the input and `σ` is a leaky ReLU. The crate
//! provides patch structures and their spectral quantities, input
//! distributions, the Convotron learner with its prescribed step size,
//! an SGD baseline, and the experiment harness behind the `convotron` binary.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod distributions;
pub mod error;
pub mod harness;
pub mod learners;
pub mod model;
pub mod numerics;
pub mod patches;

pub use error::{Error, Result};
pub use learners::{Algorithm, Init, TrainConfig, TrainResult};
pub use model::{Activation, ConvNet};
pub use patches::{build_1d, build_2d, PatchStructure, SelectionMatrix};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/intro.md")]
    mod intro {}
    #[doc = include_str!("../../../book/src/patches.md")]
    mod patches {}
    #[doc = include_str!("../../../book/src/spectrum.md")]
    mod spectrum {}
    #[doc = include_str!("../../../book/src/learning.md")]
    mod learning {}
    #[doc = include_str!("../../../book/src/experiments.md")]
    mod experiments {}
}
