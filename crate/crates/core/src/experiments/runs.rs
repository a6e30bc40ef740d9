use super::data::synthetic_scene;
use super::metrics::snr_db;
use super::noise::{add_noise, NoiseModel};
use super::training::{train_toy, BiasMode, EpochStats, TrainConfig, TrainedModel};
use crate::architectures::InitMode;
use crate::error::{config_err, Result};
use crate::framelets::{check_phase_complementary, PctDiagnostic};
use crate::rng::{derive_seed, STREAM_NOISE};
use crate::tensor::{Image, Tensor4};
use serde::{Deserialize, Serialize};

/// Side of the bundled synthetic test scene.
pub const TEST_SIDE: usize = 128;

pub fn test_image() -> Image {
    synthetic_scene(TEST_SIDE, TEST_SIDE)
}

/// Noise seed for test evaluation number `k`, kept apart from the training seeds.
pub fn test_noise_seed(seed: u64, k: u64) -> u64 {
    derive_seed(seed, STREAM_NOISE, (1 << 62) | k)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PctSummary {
    pub init_mode: InitMode,
    pub diag_energy: f64,
    pub offdiag_energy: f64,
    pub ratio: f64,
    pub is_pct: bool,
    pub history: Vec<EpochStats>,
}

impl PctSummary {
    fn new(init_mode: InitMode, d: &PctDiagnostic, history: &[EpochStats]) -> Self {
        Self {
            init_mode,
            diag_energy: d.diag_energy,
            offdiag_energy: d.offdiag_energy,
            ratio: d.ratio,
            is_pct: d.is_pct,
            history: history.to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TightFrameReport {
    pub seed: u64,
    pub config: TrainConfig,
    pub independent: PctSummary,
    pub shared: PctSummary,
    /// Shared-init off-diagonal/diagonal ratio below the independent one.
    pub shared_lower: bool,
}

pub struct TightFrameOutcome {
    pub report: TightFrameReport,
    pub independent: TrainedModel,
    pub shared: TrainedModel,
    /// K̃₂ᵀ(K₂ 𝐈)₊ of each model.
    pub independent_response: Tensor4,
    pub shared_response: Tensor4,
}

/// PCT diagnostic of the deepest encoder-decoder pair (K₂, K̃₂).
pub fn deepest_pair_diagnostic(model: &TrainedModel) -> Result<PctDiagnostic> {
    let get = |name: &str| {
        model.net.store.get(name).map(|p| p.value.clone()).ok_or_else(|| config_err!("model has no parameter {name}"))
    };
    check_phase_complementary(&get("K2")?, &get("Kt2")?)
}

/// Trains the toy model twice, with independent and with shared encoder/decoder
/// initialization, and compares how close (K₂, K̃₂) come to a phase-complementary pair.
pub fn run_experiment_tight_frame(cfg: &TrainConfig) -> Result<TightFrameOutcome> {
    let run = |init_mode| train_toy(&TrainConfig { init_mode, ..cfg.clone() });
    let independent = run(InitMode::Independent)?;
    let shared = run(InitMode::SharedEncDec)?;
    let di = deepest_pair_diagnostic(&independent)?;
    let ds = deepest_pair_diagnostic(&shared)?;
    let report = TightFrameReport {
        seed: cfg.seed,
        config: cfg.clone(),
        independent: PctSummary::new(InitMode::Independent, &di, &independent.history),
        shared: PctSummary::new(InitMode::SharedEncDec, &ds, &shared.history),
        shared_lower: ds.ratio < di.ratio,
    };
    Ok(TightFrameOutcome { report, independent, shared, independent_response: di.response, shared_response: ds.response })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasZeroReport {
    pub sigma: f64,
    pub noise_seed: u64,
    pub snr_noisy_input_db: f64,
    pub snr_normal_db: f64,
    pub snr_zero_bias_db: f64,
    /// snr_normal_db - snr_zero_bias_db.
    pub snr_drop_db: f64,
    /// ‖f₀(x) - x‖ for the noiseless input x.
    pub clean_err_zero_bias: f64,
    /// ‖f(y) - x‖ for the noisy input y.
    pub noisy_err_normal: f64,
    pub zero_bias_closer: bool,
}

pub struct BiasZeroOutcome {
    pub report: BiasZeroReport,
    pub noisy: Image,
    pub normal: Image,
    pub zero_bias: Image,
    pub clean_zero_bias: Image,
}

/// Evaluates a trained model normally and with every bias forced to zero.
pub fn run_experiment_bias_zero(model: &TrainedModel, clean: &Image, sigma: f64, noise_seed: u64) -> Result<BiasZeroOutcome> {
    let noisy = add_noise(clean, &NoiseModel { sigma_eta: sigma, seed: noise_seed })?;
    let normal = model.denoise(&noisy)?;
    let zero_bias = model.denoise_zero_bias(&noisy)?;
    let clean_zero_bias = model.denoise_zero_bias(clean)?;
    let snr_normal_db = snr_db(clean, &normal)?;
    let snr_zero_bias_db = snr_db(clean, &zero_bias)?;
    let clean_err_zero_bias = clean_zero_bias.sub(clean)?.norm_sq().sqrt();
    let noisy_err_normal = normal.sub(clean)?.norm_sq().sqrt();
    let report = BiasZeroReport {
        sigma,
        noise_seed,
        snr_noisy_input_db: snr_db(clean, &noisy)?,
        snr_normal_db,
        snr_zero_bias_db,
        snr_drop_db: snr_normal_db - snr_zero_bias_db,
        clean_err_zero_bias,
        noisy_err_normal,
        zero_bias_closer: clean_err_zero_bias < noisy_err_normal,
    };
    Ok(BiasZeroOutcome { report, noisy, normal, zero_bias, clean_zero_bias })
}

pub const GENERALIZATION_SIGMAS: [f64; 5] = [0.100, 0.150, 0.175, 0.200, 0.225];

/// Noise realizations averaged per test noise level.
pub const NOISE_REALIZATIONS: u64 = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneralizationRow {
    pub model: String,
    pub snr_db: Vec<f64>,
    /// SNR at the highest noise level minus SNR at the lowest.
    pub degradation_db: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneralizationReport {
    pub seed: u64,
    pub config: TrainConfig,
    pub sigmas: Vec<f64>,
    pub noisy_snr_db: Vec<f64>,
    pub rows: Vec<GeneralizationRow>,
    /// Baseline degradation strictly more negative than both variants.
    pub baseline_degrades_most: bool,
}

pub struct GeneralizationOutcome {
    pub report: GeneralizationReport,
    pub models: Vec<(String, TrainedModel)>,
    /// Noisy test image and each model's output at the highest noise level.
    pub examples: Vec<(String, Image)>,
}

pub const GENERALIZATION_MODELS: [(&str, BiasMode); 3] =
    [("baseline", BiasMode::Learned), ("adaptive", BiasMode::Adaptive), ("bias_free", BiasMode::ZeroFixed)];

/// Trains baseline, adaptive and bias-free toy models at `cfg.sigma` and evaluates them on
/// the test scene over [`GENERALIZATION_SIGMAS`]. A trained baseline may be passed in.
pub fn run_experiment_generalization(cfg: &TrainConfig, baseline: Option<TrainedModel>) -> Result<GeneralizationOutcome> {
    let mut models = Vec::new();
    let mut baseline = baseline;
    for (name, bias_mode) in GENERALIZATION_MODELS {
        let model = match baseline.take() {
            Some(m) if bias_mode == BiasMode::Learned => m,
            _ => train_toy(&TrainConfig { bias_mode, ..cfg.clone() })?,
        };
        models.push((name.to_string(), model));
    }
    let clean = test_image();
    let mut noisy_snr_db = Vec::new();
    let mut snrs = vec![Vec::new(); models.len()];
    let mut examples = Vec::new();
    for (si, &sigma) in GENERALIZATION_SIGMAS.iter().enumerate() {
        let mut noisy_sum = 0.0;
        let mut sums = vec![0.0; models.len()];
        for k in 0..NOISE_REALIZATIONS {
            let noisy = add_noise(&clean, &NoiseModel { sigma_eta: sigma, seed: test_noise_seed(cfg.seed, k) })?;
            noisy_sum += snr_db(&clean, &noisy)?;
            let last = si + 1 == GENERALIZATION_SIGMAS.len() && k == 0;
            if last {
                examples.push(("noisy".to_string(), noisy.clone()));
            }
            for (m, (name, model)) in models.iter().enumerate() {
                let out = model.denoise(&noisy)?;
                sums[m] += snr_db(&clean, &out)?;
                if last {
                    examples.push((name.clone(), out));
                }
            }
        }
        noisy_snr_db.push(noisy_sum / NOISE_REALIZATIONS as f64);
        for (m, s) in sums.into_iter().enumerate() {
            snrs[m].push(s / NOISE_REALIZATIONS as f64);
        }
    }
    let rows: Vec<GeneralizationRow> = models
        .iter()
        .zip(snrs)
        .map(|((name, _), snr_db)| GeneralizationRow {
            model: name.clone(),
            degradation_db: snr_db[snr_db.len() - 1] - snr_db[0],
            snr_db,
        })
        .collect();
    let baseline_degrades_most = rows[1..].iter().all(|r| rows[0].degradation_db < r.degradation_db);
    let report = GeneralizationReport {
        seed: cfg.seed,
        config: cfg.clone(),
        sigmas: GENERALIZATION_SIGMAS.to_vec(),
        noisy_snr_db,
        rows,
        baseline_degrades_most,
    };
    Ok(GeneralizationOutcome { report, models, examples })
}
