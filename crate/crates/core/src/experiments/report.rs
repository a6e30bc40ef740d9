use super::runs::{BiasZeroOutcome, GeneralizationOutcome, GeneralizationReport, TightFrameOutcome};
use super::training::{TrainConfig, TrainedModel};
use crate::architectures::{Network, NetworkSpec};
use crate::autodiff::{load_checkpoint, save_checkpoint};
use crate::error::{config_err, Result};
use crate::imageio::{response_mosaic, write_pgm16};
use serde::Serialize;
use std::fs;
use std::path::{Path, PathBuf};

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    Ok(fs::write(path, serde_json::to_string_pretty(value)? + "\n")?)
}

/// One row per model, one column per test noise level.
pub fn write_generalization_csv(path: &Path, report: &GeneralizationReport) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["model".to_string()];
    header.extend(report.sigmas.iter().map(|s| format!("sigma_{s:.3}")));
    w.write_record(&header)?;
    for row in &report.rows {
        let mut rec = vec![row.model.clone()];
        rec.extend(row.snr_db.iter().map(|v| format!("{v:.6}")));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Checkpoint with the spec, training config and history in its metadata.
pub fn save_model(dir: &Path, model: &TrainedModel) -> Result<()> {
    let meta = serde_json::json!({
        "spec": model.net.spec,
        "config": model.config,
        "history": model.history,
    });
    save_checkpoint(dir, &model.net.store, meta)
}

pub fn load_model(dir: &Path) -> Result<TrainedModel> {
    let (store, meta) = load_checkpoint(dir)?;
    let spec: NetworkSpec = serde_json::from_value(meta.get("spec").cloned().ok_or_else(|| config_err!("checkpoint has no spec"))?)?;
    let config: TrainConfig = match meta.get("config") {
        Some(c) => serde_json::from_value(c.clone())?,
        None => TrainConfig::default(),
    };
    Ok(TrainedModel { net: Network::from_store(spec, store)?, config, history: Vec::new() })
}

/// Files written for one experiment, relative to its run directory.
pub type Written = Vec<PathBuf>;

fn rel(dir: &Path, name: &str, out: &mut Written) -> PathBuf {
    out.push(PathBuf::from(name));
    dir.join(name)
}

pub fn save_tight_frame(dir: &Path, o: &TightFrameOutcome) -> Result<Written> {
    let mut out = Vec::new();
    write_json(&rel(dir, "report.json", &mut out), &o.report)?;
    write_pgm16(&rel(dir, "response_independent.pgm", &mut out), &response_mosaic(&o.independent_response))?;
    write_pgm16(&rel(dir, "response_shared.pgm", &mut out), &response_mosaic(&o.shared_response))?;
    save_model(&rel(dir, "checkpoints/independent", &mut out), &o.independent)?;
    save_model(&rel(dir, "checkpoints/shared", &mut out), &o.shared)?;
    Ok(out)
}

pub fn save_bias_zero(dir: &Path, o: &BiasZeroOutcome) -> Result<Written> {
    let mut out = Vec::new();
    write_json(&rel(dir, "bias_zero.json", &mut out), &o.report)?;
    for (name, img) in [
        ("noisy.pgm", &o.noisy),
        ("normal.pgm", &o.normal),
        ("zero_bias.pgm", &o.zero_bias),
        ("clean_zero_bias.pgm", &o.clean_zero_bias),
    ] {
        write_pgm16(&rel(dir, name, &mut out), img)?;
    }
    Ok(out)
}

pub fn save_generalization(dir: &Path, o: &GeneralizationOutcome) -> Result<Written> {
    let mut out = Vec::new();
    write_json(&rel(dir, "report.json", &mut out), &o.report)?;
    write_generalization_csv(&rel(dir, "snr_table.csv", &mut out), &o.report)?;
    for (name, img) in &o.examples {
        write_pgm16(&rel(dir, &format!("sigma_0.225_{name}.pgm"), &mut out), img)?;
    }
    for (name, model) in &o.models {
        save_model(&rel(dir, &format!("checkpoints/{name}"), &mut out), model)?;
    }
    Ok(out)
}

/// rank, snr_clean_db, snr_noisy_db per row.
pub fn write_rank_csv(path: &Path, report: &crate::lowrank::LowRankReport) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["rank", "snr_clean_db", "snr_noisy_db"])?;
    for r in &report.rows {
        w.write_record([r.rank.to_string(), format!("{:.6}", r.snr_clean), format!("{:.6}", r.snr_noisy)])?;
    }
    w.flush()?;
    Ok(())
}
