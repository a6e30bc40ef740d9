use crate::images::load_image;
use crate::run::{default_dir, Run};
use crate::{DenoiseArgs, Method, Shrink};
use fdl_core::activations::{ActivationSpec, Threshold};
use fdl_core::architectures::{flops as count_flops, pr_analyze, NetworkSpec};
use fdl_core::experiments::report::{
    load_model, save_bias_zero, save_generalization, save_model, save_tight_frame, write_json, write_rank_csv,
};
use fdl_core::experiments::{
    estimate_sigma_mad, run_experiment_bias_zero, run_experiment_generalization, run_experiment_tight_frame, snr_db,
    test_image, test_noise_seed, train_toy, TrainConfig,
};
use fdl_core::framelets::{band_thresholds, denoise_framelet, haar};
use fdl_core::imageio::write_pgm16;
use fdl_core::lowrank::{lowrank_approx, lowrank_denoise_demo, svd, Matrix};
use fdl_core::{Error, Image, Result};
use serde_json::{json, Value};
use std::fs;
use std::path::{Path, PathBuf};

pub const EXPERIMENTS: [&str; 4] = ["tight-frame", "bias-zero", "generalization", "lowrank-demo"];

const DEMO_RANKS: [usize; 8] = [1, 2, 4, 8, 16, 32, 64, 128];

fn config_error(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

fn print_json(v: &impl serde::Serialize) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(v)?);
    Ok(())
}

fn method_name(m: Method) -> &'static str {
    match m {
        Method::WaveletShrink => "wavelet-shrink",
        Method::SvdLowrank => "svd-lowrank",
        Method::Checkpoint => "checkpoint",
    }
}

fn parse_rank(rank: Option<&str>, full: usize) -> Result<usize> {
    match rank {
        None => Err(config_error("svd-lowrank needs --rank N or --rank full")),
        Some("full") => Ok(full),
        Some(r) => r.parse().map_err(|_| config_error(format!("--rank must be a positive integer or 'full', got '{r}'"))),
    }
}

fn wavelet_shrink(a: &DenoiseArgs, y: &Image) -> Result<(Image, Value)> {
    let basis = haar();
    let decimated = !a.undecimated;
    let sigma = match a.sigma {
        Some(s) => s,
        None => estimate_sigma_mad(y)?,
    };
    let thresholds = match a.t {
        Some(t) => vec![t; basis.bands() - basis.n_low],
        None => band_thresholds(&basis, y, sigma, decimated)?,
    };
    let t = Threshold::PerChannel(thresholds.clone());
    let act = match a.shrink {
        Shrink::Soft => ActivationSpec::SoftShrink { t },
        Shrink::Garrote => ActivationSpec::Garrote { t },
        Shrink::Dog => ActivationSpec::DogShrink { t, p: 2 },
    };
    act.validate()?;
    let out = denoise_framelet(&basis, y, &act, decimated)?;
    Ok((out, json!({ "shrink": a.shrink, "decimated": decimated, "sigma": sigma, "thresholds": thresholds })))
}

pub fn denoise(_argv: &[String], a: DenoiseArgs) -> Result<()> {
    let y = load_image(&a.input)?;
    let reference = a.reference.as_deref().map(load_image).transpose()?;
    let (out, params) = match a.method {
        Method::WaveletShrink => wavelet_shrink(&a, &y)?,
        Method::SvdLowrank => {
            let f = svd(&Matrix::from_image(&y)?)?;
            let rank = parse_rank(a.rank.as_deref(), f.n_sv())?;
            (lowrank_approx(&f, rank)?.to_image(), json!({ "rank": rank, "n_sv": f.n_sv() }))
        }
        Method::Checkpoint => {
            let dir = a.checkpoint.as_deref().ok_or_else(|| config_error("checkpoint method needs --checkpoint DIR"))?;
            let model = load_model(dir)?;
            let scale = model.bias_scale(&y)?;
            let params = json!({
                "checkpoint": dir,
                "network": model.net.spec.name,
                "bias_mode": model.config.bias_mode,
                "sigma_train": model.config.sigma,
                "bias_scale": scale,
            });
            (model.denoise(&y)?, params)
        }
    };
    if !out.is_finite() {
        return Err(Error::Numeric("denoised image contains non-finite values".into()));
    }
    let mut metrics = json!({
        "method": method_name(a.method),
        "input": a.input,
        "params": params,
        "sigma_hat": estimate_sigma_mad(&y)?,
    });
    if let Some(x) = &reference {
        let (snr_in, snr_out) = (snr_db(x, &y)?, snr_db(x, &out)?);
        metrics["snr_input_db"] = json!(snr_in);
        metrics["snr_output_db"] = json!(snr_out);
        metrics["snr_gain_db"] = json!(snr_out - snr_in);
    }
    let mut run = Run::create(a.out.clone().unwrap_or_else(|| default_dir(&format!("denoise-{}", method_name(a.method)))))?;
    write_pgm16(&run.output("denoised.pgm"), &out)?;
    write_json(&run.output("metrics.json"), &metrics)?;
    let config = json!({ "input": a.input, "method": method_name(a.method), "reference": a.reference, "params": metrics["params"] });
    run.finish("denoise", config, None)?;
    print_json(&metrics)
}

fn read_spec(path: &Path) -> Result<NetworkSpec> {
    NetworkSpec::from_json(&fs::read_to_string(path)?)
}

pub fn analyze_pr(_argv: &[String], spec_path: &Path, out: Option<PathBuf>) -> Result<()> {
    let spec = read_spec(spec_path)?;
    let report = pr_analyze(&spec)?;
    if let Some(dir) = out {
        let mut run = Run::create(dir)?;
        write_json(&run.output("pr_report.json"), &report)?;
        run.finish("analyze-pr", json!({ "spec": spec_path, "network": spec }), None)?;
    }
    print_json(&report)
}

pub fn flops(_argv: &[String], spec_path: &Path, rows: usize, cols: usize, out: Option<PathBuf>) -> Result<()> {
    let spec = read_spec(spec_path)?;
    let report = json!({ "name": spec.name, "rows": rows, "cols": cols, "flops": count_flops(&spec, rows, cols)? });
    if let Some(dir) = out {
        let mut run = Run::create(dir)?;
        write_json(&run.output("flops.json"), &report)?;
        run.finish("flops", json!({ "spec": spec_path, "rows": rows, "cols": cols }), None)?;
    }
    print_json(&report)
}

fn read_config(path: &Path) -> Result<TrainConfig> {
    let cfg: TrainConfig = serde_json::from_str(&fs::read_to_string(path)?)?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn train(_argv: &[String], config: &Path, seed: Option<u64>, out: Option<PathBuf>) -> Result<()> {
    let mut cfg = read_config(config)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let mut run = Run::create(out.unwrap_or_else(|| default_dir(&format!("train-seed{}", cfg.seed))))?;
    let model = train_toy(&cfg)?;
    save_model(&run.output("checkpoint"), &model)?;
    write_json(&run.output("history.json"), &model.history)?;
    let dir = run.dir.clone();
    run.finish("train", serde_json::to_value(&cfg)?, Some(cfg.seed))?;
    println!("{}", dir.display());
    Ok(())
}

pub fn experiment(
    _argv: &[String],
    name: &str,
    seed: Option<u64>,
    config: Option<&Path>,
    desk: bool,
    out: Option<PathBuf>,
) -> Result<()> {
    if !EXPERIMENTS.contains(&name) {
        return Err(config_error(format!("unknown experiment '{name}'; valid names: {}", EXPERIMENTS.join(", "))));
    }
    let mut cfg = match config {
        Some(p) => read_config(p)?,
        None if desk => TrainConfig::desk(0),
        None => TrainConfig::default(),
    };
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let mut run = Run::create(out.unwrap_or_else(|| default_dir(&format!("{name}-seed{}", cfg.seed))))?;
    let dir = run.dir.clone();
    match name {
        "tight-frame" => {
            let o = run_experiment_tight_frame(&cfg)?;
            run.record(save_tight_frame(&dir, &o)?);
        }
        "bias-zero" => {
            let model = train_toy(&cfg)?;
            let o = run_experiment_bias_zero(&model, &test_image(), cfg.sigma, test_noise_seed(cfg.seed, 0))?;
            save_model(&run.output("checkpoint"), &model)?;
            run.record(save_bias_zero(&dir, &o)?);
        }
        "generalization" => {
            let o = run_experiment_generalization(&cfg, None)?;
            run.record(save_generalization(&dir, &o)?);
        }
        _ => {
            let report = lowrank_denoise_demo(&test_image(), cfg.sigma, &DEMO_RANKS, test_noise_seed(cfg.seed, 0))?;
            write_json(&run.output("report.json"), &report)?;
            write_rank_csv(&run.output("ranks.csv"), &report)?;
            if let Some(noisy) = &report.noisy {
                write_pgm16(&run.output("noisy.pgm"), noisy)?;
            }
            for (rank, img) in DEMO_RANKS.iter().zip(&report.noisy_reconstructions) {
                write_pgm16(&run.output(&format!("rank_{rank:03}.pgm")), img)?;
            }
        }
    }
    run.finish(&format!("experiment {name}"), serde_json::to_value(&cfg)?, Some(cfg.seed))?;
    println!("{}", dir.display());
    Ok(())
}
