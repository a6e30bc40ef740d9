use fdl_core::Result;
use serde::Serialize;
use serde_json::Value;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

/// Record of one invocation, written as `manifest.json` in its run directory.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config: Value,
    pub seed: Option<u64>,
    pub tool_version: String,
    pub threads: usize,
    pub outputs: Vec<String>,
    pub wall_clock_seconds: f64,
}

pub struct Run {
    pub dir: PathBuf,
    start: Instant,
    outputs: Vec<String>,
}

impl Run {
    pub fn create(dir: PathBuf) -> Result<Self> {
        fs::create_dir_all(&dir)?;
        Ok(Self { dir, start: Instant::now(), outputs: Vec::new() })
    }

    /// Path of an output file, recorded for the manifest.
    pub fn output(&mut self, name: &str) -> PathBuf {
        self.outputs.push(name.to_string());
        self.dir.join(name)
    }

    pub fn record(&mut self, names: impl IntoIterator<Item = PathBuf>) {
        self.outputs.extend(names.into_iter().map(|p| p.to_string_lossy().replace('\\', "/")));
    }

    pub fn finish(self, command: &str, config: Value, seed: Option<u64>) -> Result<PathBuf> {
        let manifest = RunManifest {
            command: command.to_string(),
            config,
            seed,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            threads: fdl_core::tensor::threads(),
            outputs: self.outputs,
            wall_clock_seconds: self.start.elapsed().as_secs_f64(),
        };
        let path = self.dir.join("manifest.json");
        fs::write(&path, serde_json::to_string_pretty(&manifest)? + "\n")?;
        Ok(path)
    }
}

pub fn default_dir(name: &str) -> PathBuf {
    Path::new("runs").join(name)
}
