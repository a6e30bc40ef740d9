//! Core numerics for the denoising laboratory: tensors, framelets, shrinkage
//! estimators, low-rank approximation, a small reverse-mode engine, encoder-decoder
//! architectures and the training experiments built on them.

pub mod activations;
pub mod architectures;
pub mod autodiff;
pub mod error;
pub mod experiments;
pub mod framelets;
pub mod imageio;
pub mod lowrank;
pub mod rng;
pub mod tensor;

pub use error::{Error, Result};
pub use tensor::{Image, Tensor4};
