use fdl_core::architectures::{build_toy, ideal_network, toy, ForwardOptions, InitMode};
use fdl_core::experiments::*;

fn tiny(seed: u64) -> TrainConfig {
    TrainConfig { epochs: 1, images_per_epoch: 4, size: 16, n_val: 2, seed, ..TrainConfig::default() }
}

#[test]
fn zero_epochs_keeps_initialization() {
    for init_mode in [InitMode::Independent, InitMode::SharedEncDec] {
        let cfg = TrainConfig { epochs: 0, init_mode, seed: 5, ..tiny(5) };
        let model = train_toy(&cfg).unwrap();
        assert_eq!(model.net.store, build_toy(5, init_mode).unwrap().store);
        assert!(model.history.is_empty());
    }
}

#[test]
fn training_is_deterministic() {
    let a = train_toy(&tiny(3)).unwrap();
    let b = train_toy(&tiny(3)).unwrap();
    assert_eq!(a.net.store, b.net.store);
    assert_eq!(a.history, b.history);
    let c = train_toy(&tiny(4)).unwrap();
    assert_ne!(a.net.store, c.net.store);
}

#[test]
fn training_reduces_validation_loss() {
    let cfg = TrainConfig { epochs: 3, images_per_epoch: 16, size: 32, n_val: 4, seed: 1, ..TrainConfig::default() };
    let init = train_toy(&TrainConfig { epochs: 0, ..cfg.clone() }).unwrap();
    let val = validation_set(&cfg).unwrap();
    let mse = |m: &TrainedModel| {
        val.iter().map(|(y, x)| m.denoise(y).unwrap().sub(x).unwrap().norm_sq()).sum::<f64>()
    };
    let trained = train_toy(&cfg).unwrap();
    assert_eq!(trained.history.len(), 3);
    assert!(mse(&trained) < 0.5 * mse(&init), "{} vs {}", mse(&trained), mse(&init));
}

#[test]
fn bias_free_training_keeps_biases_zero() {
    let cfg = TrainConfig { bias_mode: BiasMode::ZeroFixed, ..tiny(2) };
    let model = train_toy(&cfg).unwrap();
    for p in &model.net.store.params {
        if p.name.ends_with(".b") {
            assert!(!p.trainable);
            assert_eq!(p.value.max_abs(), 0.0);
        } else {
            assert!(p.trainable);
        }
    }
}

#[test]
fn batches_average_gradients() {
    let one = train_toy(&TrainConfig { batch_size: 1, ..tiny(6) }).unwrap();
    let two = train_toy(&TrainConfig { batch_size: 2, ..tiny(6) }).unwrap();
    assert_ne!(one.net.store, two.net.store);
    assert_eq!(TrainConfig { batch_size: 3, images_per_epoch: 7, ..tiny(6) }.total_steps(), 3);
}

#[test]
fn adaptive_matches_baseline_at_training_noise_level() {
    let mut model = train_toy(&tiny(8)).unwrap();
    for p in &mut model.net.store.params {
        if p.name.ends_with(".b") {
            p.value = p.value.map(|_| -0.05);
        }
    }
    let y = add_noise(&test_image(), &NoiseModel { sigma_eta: 0.1, seed: 1 }).unwrap();
    let sigma_hat = estimate_sigma_mad(&y).unwrap();
    let baseline = TrainedModel { config: TrainConfig { bias_mode: BiasMode::Learned, sigma: sigma_hat, ..tiny(8) }, ..model.clone() };
    let adaptive = TrainedModel { config: TrainConfig { bias_mode: BiasMode::Adaptive, sigma: sigma_hat, ..tiny(8) }, ..model };
    assert_eq!(adaptive.bias_scale(&y).unwrap(), 1.0);
    assert_eq!(adaptive.denoise(&y).unwrap(), baseline.denoise(&y).unwrap());
}

#[test]
fn pct_initialized_toy_reproduces_input() {
    let net = ideal_network(&toy()).unwrap();
    let x = test_image();
    let out = net.predict(&x, ForwardOptions::zero_bias()).unwrap();
    assert!(out.max_abs_diff(&x).unwrap() < 1e-6);
}

#[test]
fn invalid_configs_are_rejected() {
    for cfg in [
        TrainConfig { batch_size: 0, ..tiny(0) },
        TrainConfig { size: 15, ..tiny(0) },
        TrainConfig { sigma: -1.0, ..tiny(0) },
        TrainConfig { lr_initial: f64::NAN, ..tiny(0) },
    ] {
        assert!(matches!(train_toy(&cfg), Err(fdl_core::Error::Config(_))));
    }
    assert!(serde_json::from_str::<TrainConfig>(r#"{"epochz": 3}"#).is_err());
    let cfg: TrainConfig = serde_json::from_str(r#"{"epochs": 3, "init_mode": "shared_enc_dec"}"#).unwrap();
    assert_eq!((cfg.epochs, cfg.init_mode, cfg.images_per_epoch), (3, InitMode::SharedEncDec, 192));
}

#[test]
fn tight_frame_smoke_with_zero_epochs() {
    let cfg = TrainConfig { epochs: 0, ..tiny(7) };
    let a = fdl_core::experiments::run_experiment_tight_frame(&cfg).unwrap();
    let b = fdl_core::experiments::run_experiment_tight_frame(&cfg).unwrap();
    assert_eq!(a.report, b.report);
    assert_eq!(a.shared_response.dims(), [12, 12, 7, 7]);
    assert!(a.report.shared.ratio.is_finite());
    assert!(a.report.shared.ratio < a.report.independent.ratio);
}
