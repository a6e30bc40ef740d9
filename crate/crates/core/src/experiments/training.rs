use super::data::{gen_triangles, TriangleDatasetConfig};
use super::metrics::snr_db;
use super::noise::{add_noise, estimate_sigma_mad, NoiseModel};
use crate::architectures::{build_toy, ForwardOptions, InitMode, Network};
use crate::autodiff::Adam;
use crate::error::{config_err, Error, Result};
use crate::rng::{derive_seed, STREAM_NOISE, STREAM_TRIANGLES};
use crate::tensor::Image;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum BiasMode {
    #[default]
    Learned,
    /// Biases fixed at zero and never trained.
    ZeroFixed,
    /// Biases multiplied by σ̂(y)/σ_train, in training and at inference.
    Adaptive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    pub images_per_epoch: usize,
    pub batch_size: usize,
    /// Decays linearly to zero over all steps.
    pub lr_initial: f64,
    pub seed: u64,
    pub init_mode: InitMode,
    pub bias_mode: BiasMode,
    pub sigma: f64,
    pub size: usize,
    pub n_val: usize,
    pub triangles_per_image: (usize, usize),
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 25,
            images_per_epoch: 192,
            batch_size: 1,
            lr_initial: 1e-3,
            seed: 0,
            init_mode: InitMode::Independent,
            bias_mode: BiasMode::Learned,
            sigma: 0.1,
            size: 64,
            n_val: 8,
            triangles_per_image: (3, 8),
        }
    }
}

impl TrainConfig {
    /// Reduced schedule: 10 epochs of 48 images.
    pub fn desk(seed: u64) -> Self {
        Self { epochs: 10, images_per_epoch: 48, seed, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(config_err!("batch_size must be at least 1"));
        }
        if !(self.lr_initial >= 0.0) || !self.lr_initial.is_finite() {
            return Err(config_err!("lr_initial {} must be finite and nonnegative", self.lr_initial));
        }
        if !(self.sigma > 0.0) || !self.sigma.is_finite() {
            return Err(config_err!("training noise sigma {} must be positive", self.sigma));
        }
        if self.size < 2 || self.size % 2 != 0 {
            return Err(config_err!("image size {} must be even and at least 2", self.size));
        }
        self.dataset(0, 0).validate()
    }

    /// Triangle set number `part` (0 is validation, epoch e is part e + 1).
    fn dataset(&self, part: u64, n_images: usize) -> TriangleDatasetConfig {
        TriangleDatasetConfig {
            n_images,
            size: (self.size, self.size),
            triangles_per_image: self.triangles_per_image,
            seed: derive_seed(self.seed, STREAM_TRIANGLES, part),
            ..TriangleDatasetConfig::default()
        }
    }

    fn noise(&self, part: u64, index: usize) -> NoiseModel {
        NoiseModel { sigma_eta: self.sigma, seed: derive_seed(self.seed, STREAM_NOISE, (part << 32) | index as u64) }
    }

    pub fn total_steps(&self) -> usize {
        self.epochs * self.images_per_epoch.div_ceil(self.batch_size)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    pub val_snr_db: f64,
}

#[derive(Debug, Clone)]
pub struct TrainedModel {
    pub net: Network,
    pub config: TrainConfig,
    pub history: Vec<EpochStats>,
}

impl TrainedModel {
    /// Bias scale used for `y` under the model's bias mode.
    pub fn bias_scale(&self, y: &Image) -> Result<f64> {
        bias_scale(self.config.bias_mode, self.config.sigma, y)
    }

    pub fn denoise(&self, y: &Image) -> Result<Image> {
        self.net.predict(y, ForwardOptions::scaled_bias(self.bias_scale(y)?))
    }

    /// Output with every bias forced to zero.
    pub fn denoise_zero_bias(&self, y: &Image) -> Result<Image> {
        self.net.predict(y, ForwardOptions::zero_bias())
    }
}

fn bias_scale(mode: BiasMode, sigma_train: f64, y: &Image) -> Result<f64> {
    Ok(match mode {
        BiasMode::Learned => 1.0,
        BiasMode::ZeroFixed => 0.0,
        BiasMode::Adaptive => estimate_sigma_mad(y)? / sigma_train,
    })
}

/// Noisy/clean validation pairs.
pub fn validation_set(cfg: &TrainConfig) -> Result<Vec<(Image, Image)>> {
    gen_triangles(&cfg.dataset(0, cfg.n_val))?
        .into_iter()
        .enumerate()
        .map(|(i, x)| Ok((add_noise(&x, &cfg.noise(0, i))?, x)))
        .collect()
}

fn evaluate(model: &TrainedModel, val: &[(Image, Image)]) -> Result<(f64, f64)> {
    if val.is_empty() {
        return Ok((f64::NAN, f64::NAN));
    }
    let (mut loss, mut snr) = (0.0, 0.0);
    for (y, x) in val {
        let out = model.denoise(y)?;
        loss += out.sub(x)?.norm_sq() / out.len() as f64;
        snr += snr_db(x, &out)?;
    }
    Ok((loss / val.len() as f64, snr / val.len() as f64))
}

/// Trains the toy model to map y = x + η to x with Adam and MSE loss.
pub fn train_toy(cfg: &TrainConfig) -> Result<TrainedModel> {
    cfg.validate()?;
    let mut net = build_toy(cfg.seed, cfg.init_mode)?;
    if cfg.bias_mode == BiasMode::ZeroFixed {
        net.freeze_biases_at_zero();
    }
    train_network(net, cfg)
}

pub fn train_network(net: Network, cfg: &TrainConfig) -> Result<TrainedModel> {
    cfg.validate()?;
    let mut model = TrainedModel { net, config: cfg.clone(), history: Vec::new() };
    let val = validation_set(cfg)?;
    let mut opt = Adam::new(&model.net.store);
    let total = cfg.total_steps().max(1) as f64;
    let mut step = 0usize;
    for epoch in 0..cfg.epochs {
        let part = epoch as u64 + 1;
        let images = gen_triangles(&cfg.dataset(part, cfg.images_per_epoch))?;
        let mut loss_sum = 0.0;
        for (b, batch) in images.chunks(cfg.batch_size).enumerate() {
            model.net.store.zero_grads();
            for (j, x) in batch.iter().enumerate() {
                let y = add_noise(x, &cfg.noise(part, b * cfg.batch_size + j))?;
                let s = bias_scale(cfg.bias_mode, cfg.sigma, &y)?;
                let loss = model.net.accumulate_gradients(&y, x, ForwardOptions::scaled_bias(s))?;
                if !loss.is_finite() {
                    return Err(Error::Numeric(format!("non-finite loss at epoch {epoch}, step {step}")));
                }
                loss_sum += loss;
            }
            if batch.len() > 1 {
                let inv = 1.0 / batch.len() as f64;
                for p in &mut model.net.store.params {
                    p.grad = p.grad.scale(inv);
                }
            }
            let lr = cfg.lr_initial * (1.0 - step as f64 / total);
            opt.step(&mut model.net.store, lr)?;
            step += 1;
            if !model.net.store.all_finite() {
                return Err(Error::Numeric(format!("non-finite parameters at epoch {epoch}, step {step}")));
            }
        }
        let (val_loss, val_snr_db) = evaluate(&model, &val)?;
        model.history.push(EpochStats {
            epoch: epoch + 1,
            train_loss: loss_sum / images.len().max(1) as f64,
            val_loss,
            val_snr_db,
        });
    }
    Ok(model)
}
