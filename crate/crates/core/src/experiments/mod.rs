//! Synthetic data, noise, metrics and the trained-model experiments.

pub mod data;
pub mod metrics;
pub mod noise;
pub mod report;
pub mod runs;
pub mod training;

pub use data::{gen_triangles, synthetic_scene, TriangleDatasetConfig};
pub use metrics::{snr_db, SNR_CAP_DB};
pub use noise::{add_noise, estimate_sigma_mad, noise_field, NoiseModel};
pub use runs::{
    deepest_pair_diagnostic, run_experiment_bias_zero, run_experiment_generalization, run_experiment_tight_frame,
    test_image, test_noise_seed, BiasZeroReport, GeneralizationReport, TightFrameReport, GENERALIZATION_SIGMAS,
};
pub use training::{train_network, train_toy, validation_set, BiasMode, EpochStats, TrainConfig, TrainedModel};
