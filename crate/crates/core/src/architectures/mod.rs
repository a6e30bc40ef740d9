//! Declarative encoder-decoder networks, builders for the analyzed architectures,
//! the perfect-reconstruction analyzer, equivalent filters and operation counts.

pub mod analysis;
pub mod builders;
pub mod flops;
pub mod network;
pub mod spec;

pub use analysis::{equivalent_filter, ideal_network, ideal_pair, pr_analyze, PrReport, GAIN_TOLERANCE, PR_TOLERANCE};
pub use builders::{build_lwfsn, build_red, build_rlwfsn, build_toy, build_unet, lwfsn, red, rlwfsn, toy, unet};
pub use flops::{flops, flops_lwfsn, flops_red, flops_unet};
pub use network::{ForwardOptions, InitMode, Network};
pub use spec::{Direction, LayerSpec, NetworkSpec, ResampleKind};
