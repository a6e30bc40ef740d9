use crate::error::{config_err, shape_err, Error, Result};
use crate::tensor::Tensor4;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::fs;
use std::path::Path;

#[derive(Debug, Clone, PartialEq)]
pub struct Parameter {
    pub name: String,
    pub value: Tensor4,
    pub grad: Tensor4,
    pub trainable: bool,
}

impl Parameter {
    pub fn new(name: impl Into<String>, value: Tensor4, trainable: bool) -> Self {
        let grad = Tensor4::zeros(value.dims());
        Self { name: name.into(), value, grad, trainable }
    }

    pub fn zero_grad(&mut self) {
        self.grad.data_mut().iter_mut().for_each(|g| *g = 0.0);
    }
}

/// Named parameters in insertion order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParamStore {
    pub params: Vec<Parameter>,
}

impl ParamStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, p: Parameter) -> usize {
        self.params.push(p);
        self.params.len() - 1
    }

    pub fn index(&self, name: &str) -> Option<usize> {
        self.params.iter().position(|p| p.name == name)
    }

    pub fn get(&self, name: &str) -> Option<&Parameter> {
        self.params.iter().find(|p| p.name == name)
    }

    pub fn get_mut(&mut self, name: &str) -> Option<&mut Parameter> {
        self.params.iter_mut().find(|p| p.name == name)
    }

    pub fn zero_grads(&mut self) {
        self.params.iter_mut().for_each(Parameter::zero_grad);
    }

    pub fn all_finite(&self) -> bool {
        self.params.iter().all(|p| p.value.is_finite())
    }
}

/// Adam with bias correction.
#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub t: u64,
    m: Vec<Tensor4>,
    v: Vec<Tensor4>,
}

impl Adam {
    pub fn new(store: &ParamStore) -> Self {
        let zeros = || store.params.iter().map(|p| Tensor4::zeros(p.value.dims())).collect();
        Self { beta1: 0.9, beta2: 0.999, eps: 1e-8, t: 0, m: zeros(), v: zeros() }
    }

    /// One update of every trainable parameter from its accumulated gradient; clears gradients.
    pub fn step(&mut self, store: &mut ParamStore, lr: f64) -> Result<()> {
        if self.m.len() != store.params.len() {
            return Err(shape_err!("optimizer tracks {} parameters, store has {}", self.m.len(), store.params.len()));
        }
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t as i32);
        let bc2 = 1.0 - self.beta2.powi(self.t as i32);
        for (i, p) in store.params.iter_mut().enumerate() {
            if p.trainable {
                self.m[i].same_dims(&p.grad)?;
                let (m, v) = (self.m[i].data_mut(), self.v[i].data_mut());
                for ((w, g), (mj, vj)) in p.value.data_mut().iter_mut().zip(p.grad.data()).zip(m.iter_mut().zip(v.iter_mut())) {
                    *mj = self.beta1 * *mj + (1.0 - self.beta1) * g;
                    *vj = self.beta2 * *vj + (1.0 - self.beta2) * g * g;
                    let mhat = *mj / bc1;
                    let vhat = *vj / bc2;
                    *w -= lr * mhat / (vhat.sqrt() + self.eps);
                }
            }
            p.zero_grad();
        }
        Ok(())
    }
}

/// Bound a = sqrt(6 / (fan_in + fan_out)) with fans counted over channels and taps.
pub fn xavier_bound(dims: [usize; 4]) -> f64 {
    let taps = dims[2] * dims[3];
    let fan_in = dims[1] * taps;
    let fan_out = dims[0] * taps;
    (6.0 / (fan_in + fan_out) as f64).sqrt()
}

pub fn xavier_uniform(dims: [usize; 4], rng: &mut impl Rng) -> Tensor4 {
    let a = xavier_bound(dims);
    Tensor4::from_fn(dims, |_, _, _, _| rng.random_range(-a..=a))
}

/// Xavier-uniform tensor from its own seed.
pub fn xavier_uniform_init(dims: [usize; 4], seed: u64) -> Tensor4 {
    xavier_uniform(dims, &mut ChaCha8Rng::seed_from_u64(seed))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointEntry {
    pub name: String,
    pub dims: [usize; 4],
    pub file: String,
    pub trainable: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointManifest {
    pub format: String,
    pub params: Vec<CheckpointEntry>,
    #[serde(default)]
    pub meta: serde_json::Value,
}

const FORMAT: &str = "fdl-checkpoint-v1";

fn file_name(name: &str) -> String {
    let safe: String = name.chars().map(|c| if c.is_ascii_alphanumeric() || c == '_' || c == '-' { c } else { '_' }).collect();
    format!("{safe}.f64")
}

/// Writes `checkpoint.json` plus one little-endian f64 file per parameter into `dir`.
pub fn save_checkpoint(dir: &Path, store: &ParamStore, meta: serde_json::Value) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut entries = Vec::new();
    for p in &store.params {
        let file = file_name(&p.name);
        let bytes: Vec<u8> = p.value.data().iter().flat_map(|v| v.to_le_bytes()).collect();
        fs::write(dir.join(&file), bytes)?;
        entries.push(CheckpointEntry { name: p.name.clone(), dims: p.value.dims(), file, trainable: p.trainable });
    }
    let manifest = CheckpointManifest { format: FORMAT.into(), params: entries, meta };
    fs::write(dir.join("checkpoint.json"), serde_json::to_string_pretty(&manifest)? + "\n")?;
    Ok(())
}

pub fn load_checkpoint(dir: &Path) -> Result<(ParamStore, serde_json::Value)> {
    let manifest: CheckpointManifest = serde_json::from_str(&fs::read_to_string(dir.join("checkpoint.json"))?)?;
    if manifest.format != FORMAT {
        return Err(config_err!("unknown checkpoint format {}", manifest.format));
    }
    let mut store = ParamStore::new();
    for e in manifest.params {
        let bytes = fs::read(dir.join(&e.file))?;
        if bytes.len() % 8 != 0 {
            return Err(Error::Parse(format!("{} is not a whole number of f64 values", e.file)));
        }
        let data = bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
        store.push(Parameter::new(e.name, Tensor4::new(e.dims, data)?, e.trainable));
    }
    Ok((store, manifest.meta))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn adam_zero_gradient_is_noop() {
        let mut store = ParamStore::new();
        store.push(Parameter::new("w", Tensor4::filled([1, 1, 1, 3], 0.7), true));
        let mut opt = Adam::new(&store);
        for _ in 0..5 {
            opt.step(&mut store, 1e-2).unwrap();
        }
        assert_eq!(store.params[0].value, Tensor4::filled([1, 1, 1, 3], 0.7));
    }

    #[test]
    fn adam_moves_against_constant_gradient() {
        let mut store = ParamStore::new();
        store.push(Parameter::new("w", Tensor4::zeros([1, 1, 1, 1]), true));
        let mut opt = Adam::new(&store);
        for _ in 0..50 {
            store.params[0].grad = Tensor4::filled([1, 1, 1, 1], 3.0);
            opt.step(&mut store, 1e-2).unwrap();
        }
        assert!(store.params[0].value.data()[0] < -0.4);
    }

    #[test]
    fn adam_on_quadratic_bowl() {
        let center = [0.5, -0.8, 0.25];
        let mut store = ParamStore::new();
        store.push(Parameter::new("w", Tensor4::zeros([1, 1, 1, 3]), true));
        let loss = |w: &[f64]| w.iter().zip(&center).map(|(a, c)| (a - c) * (a - c)).sum::<f64>();
        let initial = loss(store.params[0].value.data());
        let mut opt = Adam::new(&store);
        for _ in 0..200 {
            let w = store.params[0].value.data().to_vec();
            let g: Vec<f64> = w.iter().zip(&center).map(|(a, c)| 2.0 * (a - c)).collect();
            store.params[0].grad = Tensor4::new([1, 1, 1, 3], g).unwrap();
            opt.step(&mut store, 1e-2).unwrap();
        }
        assert!(loss(store.params[0].value.data()) < 1e-4 * initial);
    }

    #[test]
    fn frozen_parameters_stay_put() {
        let mut store = ParamStore::new();
        store.push(Parameter::new("b", Tensor4::zeros([2, 1, 1, 1]), false));
        store.params[0].grad = Tensor4::filled([2, 1, 1, 1], 1.0);
        Adam::new(&store).step(&mut store, 1.0).unwrap();
        assert_eq!(store.params[0].value, Tensor4::zeros([2, 1, 1, 1]));
        assert_eq!(store.params[0].grad, Tensor4::zeros([2, 1, 1, 1]));
    }

    #[test]
    fn xavier_bounds_and_variance() {
        let dims = [24, 12, 3, 3];
        let a = xavier_bound(dims);
        assert!((a - (6.0f64 / (108.0 + 216.0)).sqrt()).abs() < 1e-15);
        let t = xavier_uniform_init(dims, 5);
        assert!(t.data().iter().all(|v| v.abs() <= a));
        assert_eq!(t, xavier_uniform_init(dims, 5));
        let big = xavier_uniform_init([120, 100, 3, 3], 6);
        let a = xavier_bound(big.dims());
        let mean = big.mean();
        let var = big.data().iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / big.len() as f64;
        assert!(big.len() >= 100_000);
        assert!((var / (a * a / 3.0) - 1.0).abs() < 0.05);
    }

    #[test]
    fn checkpoint_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let mut store = ParamStore::new();
        store.push(Parameter::new("enc/K0", xavier_uniform_init([6, 1, 3, 3], 1), true));
        store.push(Parameter::new("enc/b0", Tensor4::filled([6, 1, 1, 1], -0.125), false));
        save_checkpoint(dir.path(), &store, serde_json::json!({"seed": 3})).unwrap();
        let (back, meta) = load_checkpoint(dir.path()).unwrap();
        assert_eq!(back, store);
        assert_eq!(meta["seed"], 3);
        let raw = std::fs::read(dir.path().join("enc_b0.f64")).unwrap();
        assert_eq!(&raw[..8], &(-0.125f64).to_le_bytes());
    }
}
