use crate::error::{shape_err, Error, Result};
use crate::framelets::haar_hh;
use crate::rng::{stream, STREAM_NOISE};
use crate::tensor::{conv2d, Image, Tensor4};
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

/// Additive white Gaussian noise with its own seed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub sigma_eta: f64,
    pub seed: u64,
}

/// η with i.i.d. N(0, σ²) entries, drawn as σ times a standard normal field.
pub fn noise_field(dims: [usize; 4], m: &NoiseModel) -> Result<Tensor4> {
    if !(m.sigma_eta >= 0.0) || !m.sigma_eta.is_finite() {
        return Err(Error::Domain(format!("noise std {} must be finite and nonnegative", m.sigma_eta)));
    }
    let mut rng = stream(m.seed, STREAM_NOISE, 0);
    Ok(Tensor4::from_fn(dims, |_, _, _, _| {
        let z: f64 = StandardNormal.sample(&mut rng);
        m.sigma_eta * z
    }))
}

/// y = x + η, unclamped.
pub fn add_noise(x: &Image, m: &NoiseModel) -> Result<Image> {
    x.add(&noise_field(x.dims(), m)?)
}

/// σ̂ = 1.4826 · median(|f_HH ∗ y|), with f_HH applied undecimated.
pub fn estimate_sigma_mad(y: &Image) -> Result<f64> {
    if y.n_rows() != 1 || y.n_cols() != 1 || y.n_v() < 2 || y.n_h() < 2 {
        return Err(shape_err!("MAD estimate needs a single-channel image of at least 2x2, got {:?}", y.dims()));
    }
    let mut d: Vec<f64> = conv2d(&haar_hh(), y)?.data().iter().map(|v| v.abs()).collect();
    Ok(1.4826 * median(&mut d))
}

fn median(v: &mut [f64]) -> f64 {
    let n = v.len();
    let mid = n / 2;
    let (_, hi, _) = v.select_nth_unstable_by(mid, f64::total_cmp);
    let hi = *hi;
    if n % 2 == 1 {
        hi
    } else {
        let lo = v[..mid].iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        0.5 * (lo + hi)
    }
}
