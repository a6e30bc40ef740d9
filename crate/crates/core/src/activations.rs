//! Shrinkage and clipping estimators, lifted elementwise to tensors, and their
//! expressions as small ReLU networks.

use crate::error::{config_err, shape_err, Error, Result};
use crate::tensor::{conv2d, conv2d_adjoint, Tensor4};
use serde::{Deserialize, Serialize};

/// Threshold for one activation: a scalar, or one value per tensor row (channel).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Threshold {
    Scalar(f64),
    PerChannel(Vec<f64>),
}

impl Default for Threshold {
    fn default() -> Self {
        Threshold::Scalar(0.0)
    }
}

impl From<f64> for Threshold {
    fn from(t: f64) -> Self {
        Threshold::Scalar(t)
    }
}

impl Threshold {
    pub fn at(&self, channel: usize) -> f64 {
        match self {
            Threshold::Scalar(t) => *t,
            Threshold::PerChannel(v) => v[channel],
        }
    }

    pub fn is_zero(&self) -> bool {
        self.values().iter().all(|v| *v == 0.0)
    }

    fn values(&self) -> &[f64] {
        match self {
            Threshold::Scalar(t) => std::slice::from_ref(t),
            Threshold::PerChannel(v) => v,
        }
    }

    fn check_rows(&self, rows: usize) -> Result<()> {
        match self {
            Threshold::PerChannel(v) if v.len() != rows => {
                Err(shape_err!("{} thresholds for {} channels", v.len(), rows))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LetMember {
    pub weight: f64,
    pub activation: ActivationSpec,
}

fn default_p() -> u32 {
    2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ActivationSpec {
    /// (z - t)₊, i.e. a ReLU with bias b = -t.
    ReluBias { t: Threshold },
    SoftShrink { t: Threshold },
    SoftClip { t: Threshold },
    Garrote { t: Threshold },
    DogShrink {
        t: Threshold,
        #[serde(default = "default_p")]
        p: u32,
    },
    DogClip {
        t: Threshold,
        #[serde(default = "default_p")]
        p: u32,
    },
    /// Linear expansion of thresholds: Σ a_n τ_n(z) with Σ a_n = 1.
    Let { members: Vec<LetMember> },
}

pub fn relu_bias(z: f64, t: f64) -> f64 {
    (z - t).max(0.0)
}

pub fn soft_shrink(z: f64, t: f64) -> f64 {
    (z - t).max(0.0) - (-z - t).max(0.0)
}

pub fn soft_clip(z: f64, t: f64) -> f64 {
    z.clamp(-t, t)
}

pub fn garrote(z: f64, t: f64) -> f64 {
    if z == 0.0 {
        0.0
    } else {
        (z * z - t * t).max(0.0) / z
    }
}

pub fn dog_clip(z: f64, t: f64, p: u32) -> f64 {
    if t == 0.0 {
        return 0.0;
    }
    z * (-(z / t).powi(p as i32)).exp()
}

pub fn dog_shrink(z: f64, t: f64, p: u32) -> f64 {
    z - dog_clip(z, t, p)
}

fn dog_clip_grad(z: f64, t: f64, p: u32) -> f64 {
    if t == 0.0 {
        return 0.0;
    }
    let r = (z / t).powi(p as i32);
    (-r).exp() * (1.0 - p as f64 * r)
}

impl ActivationSpec {
    pub fn relu() -> Self {
        ActivationSpec::ReluBias { t: Threshold::Scalar(0.0) }
    }

    pub fn validate(&self) -> Result<()> {
        let check_t = |t: &Threshold| -> Result<()> {
            if t.values().iter().any(|v| !v.is_finite() || *v < 0.0) {
                return Err(Error::Domain(format!("thresholds must be finite and nonnegative: {:?}", t)));
            }
            Ok(())
        };
        match self {
            ActivationSpec::ReluBias { t }
            | ActivationSpec::SoftShrink { t }
            | ActivationSpec::SoftClip { t }
            | ActivationSpec::Garrote { t } => check_t(t),
            ActivationSpec::DogShrink { t, p } | ActivationSpec::DogClip { t, p } => {
                if *p < 2 || p % 2 != 0 {
                    return Err(config_err!("DoG exponent must be even and at least 2, got {}", p));
                }
                check_t(t)
            }
            ActivationSpec::Let { members } => {
                if members.is_empty() {
                    return Err(config_err!("LET needs at least one member"));
                }
                let total: f64 = members.iter().map(|m| m.weight).sum();
                if (total - 1.0).abs() > 1e-9 {
                    return Err(config_err!("LET weights sum to {}, expected 1", total));
                }
                members.iter().try_for_each(|m| m.activation.validate())
            }
        }
    }

    /// True for estimators that zero small coefficients.
    pub fn is_shrinkage(&self) -> bool {
        match self {
            ActivationSpec::SoftShrink { .. }
            | ActivationSpec::Garrote { .. }
            | ActivationSpec::DogShrink { .. } => true,
            ActivationSpec::Let { members } => members.iter().all(|m| m.activation.is_shrinkage()),
            _ => false,
        }
    }

    pub fn is_clipping(&self) -> bool {
        match self {
            ActivationSpec::SoftClip { .. } | ActivationSpec::DogClip { .. } => true,
            ActivationSpec::Let { members } => members.iter().all(|m| m.activation.is_clipping()),
            _ => false,
        }
    }

    /// True when the estimator returns its input unchanged: shrinkage with zero thresholds.
    pub fn is_identity(&self) -> bool {
        match self {
            ActivationSpec::SoftShrink { t } | ActivationSpec::Garrote { t } | ActivationSpec::DogShrink { t, .. } => {
                t.is_zero()
            }
            ActivationSpec::Let { members } => members.iter().all(|m| m.activation.is_identity()),
            _ => false,
        }
    }

    /// Value of the estimator at `z` for the given channel.
    pub fn eval(&self, z: f64, channel: usize) -> f64 {
        match self {
            ActivationSpec::ReluBias { t } => relu_bias(z, t.at(channel)),
            ActivationSpec::SoftShrink { t } => soft_shrink(z, t.at(channel)),
            ActivationSpec::SoftClip { t } => soft_clip(z, t.at(channel)),
            ActivationSpec::Garrote { t } => garrote(z, t.at(channel)),
            ActivationSpec::DogShrink { t, p } => dog_shrink(z, t.at(channel), *p),
            ActivationSpec::DogClip { t, p } => dog_clip(z, t.at(channel), *p),
            ActivationSpec::Let { members } => {
                members.iter().map(|m| m.weight * m.activation.eval(z, channel)).sum()
            }
        }
    }

    /// Derivative in `z`; kinks take the one-sided value that makes ReLU'(0) = 0.
    pub fn grad(&self, z: f64, channel: usize) -> f64 {
        let step = |c: bool| if c { 1.0 } else { 0.0 };
        match self {
            ActivationSpec::ReluBias { t } => step(z > t.at(channel)),
            ActivationSpec::SoftShrink { t } => step(z.abs() > t.at(channel)),
            ActivationSpec::SoftClip { t } => step(z.abs() <= t.at(channel)),
            ActivationSpec::Garrote { t } => {
                let t = t.at(channel);
                if z.abs() > t {
                    1.0 + t * t / (z * z)
                } else {
                    0.0
                }
            }
            ActivationSpec::DogShrink { t, p } => 1.0 - dog_clip_grad(z, t.at(channel), *p),
            ActivationSpec::DogClip { t, p } => dog_clip_grad(z, t.at(channel), *p),
            ActivationSpec::Let { members } => {
                members.iter().map(|m| m.weight * m.activation.grad(z, channel)).sum()
            }
        }
    }

    fn check_rows(&self, rows: usize) -> Result<()> {
        match self {
            ActivationSpec::ReluBias { t }
            | ActivationSpec::SoftShrink { t }
            | ActivationSpec::SoftClip { t }
            | ActivationSpec::Garrote { t }
            | ActivationSpec::DogShrink { t, .. }
            | ActivationSpec::DogClip { t, .. } => t.check_rows(rows),
            ActivationSpec::Let { members } => members.iter().try_for_each(|m| m.activation.check_rows(rows)),
        }
    }

    fn lift(&self, z: &Tensor4, f: impl Fn(f64, usize) -> f64) -> Result<Tensor4> {
        self.check_rows(z.n_rows())?;
        let per = z.len() / z.n_rows().max(1);
        let mut out = z.clone();
        for (r, chunk) in out.data_mut().chunks_mut(per.max(1)).enumerate() {
            for v in chunk {
                *v = f(*v, r);
            }
        }
        Ok(out)
    }

    /// Applies the estimator elementwise; per-channel thresholds index tensor rows.
    pub fn apply(&self, z: &Tensor4) -> Result<Tensor4> {
        self.lift(z, |v, r| self.eval(v, r))
    }

    pub fn derivative(&self, z: &Tensor4) -> Result<Tensor4> {
        self.lift(z, |v, r| self.grad(v, r))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdParams {
    pub sigma_eta: f64,
    pub sigma_d: f64,
}

/// t = σ_η² / σ_d.
pub fn map_threshold(params: ThresholdParams) -> Result<f64> {
    let ThresholdParams { sigma_eta, sigma_d } = params;
    if !(sigma_eta > 0.0 && sigma_d > 0.0) {
        return Err(Error::Domain(format!("sigma_eta = {sigma_eta} and sigma_d = {sigma_d} must be positive")));
    }
    Ok(sigma_eta * sigma_eta / sigma_d)
}

/// Single-channel estimator written as K̃ᵀ(K z + b)₊ with 1x1 kernels.
#[derive(Debug, Clone, PartialEq)]
pub struct ReluExpansion {
    pub k: Tensor4,
    /// Stored with the dims of `k` and applied transposed.
    pub k_tilde: Tensor4,
    pub b: Vec<f64>,
}

impl ReluExpansion {
    /// Applies the expansion to a single-channel tensor (1, M, H, W).
    pub fn apply(&self, z: &Tensor4) -> Result<Tensor4> {
        let mut h = conv2d(&self.k, z)?;
        let per = h.len() / h.n_rows();
        for (r, chunk) in h.data_mut().chunks_mut(per).enumerate() {
            for v in chunk {
                *v = (*v + self.b[r]).max(0.0);
            }
        }
        conv2d_adjoint(&self.k_tilde, &h)
    }

    pub fn channels(&self) -> usize {
        self.k.n_rows()
    }
}

fn column(v: &[f64]) -> Tensor4 {
    Tensor4::new([v.len(), 1, 1, 1], v.to_vec()).expect("column dims")
}

/// Soft shrinkage as two phase-opposite ReLUs: K = (I; -I), K̃ᵀ = (I  -I), b = (-t, -t).
pub fn shrink_as_relu(t: f64) -> Result<ReluExpansion> {
    if !(t >= 0.0) {
        return Err(Error::Domain(format!("threshold {t} must be nonnegative")));
    }
    Ok(ReluExpansion { k: column(&[1.0, -1.0]), k_tilde: column(&[1.0, -1.0]), b: vec![-t, -t] })
}

/// Soft clipping with four channels: K = (I; -I; I; -I), K̃ᵀ = (I  -I  -I  I), b = (0, 0, -t, -t).
pub fn clip_as_relu(t: f64) -> Result<ReluExpansion> {
    if !(t >= 0.0) {
        return Err(Error::Domain(format!("threshold {t} must be nonnegative")));
    }
    Ok(ReluExpansion {
        k: column(&[1.0, -1.0, 1.0, -1.0]),
        k_tilde: column(&[1.0, -1.0, -1.0, 1.0]),
        b: vec![0.0, 0.0, -t, -t],
    })
}
