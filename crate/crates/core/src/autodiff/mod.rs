//! Reverse-mode differentiation, parameters, Adam and Xavier initialization.

pub mod param;
pub mod tape;

pub use param::{
    load_checkpoint, save_checkpoint, xavier_bound, xavier_uniform, xavier_uniform_init, Adam, ParamStore,
    Parameter,
};
pub use tape::{haar_analysis, haar_synthesis, BandSet, Gradients, Tape, Var};
