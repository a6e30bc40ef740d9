use crate::error::{config_err, Result};
use crate::rng::{stream, STREAM_TRIANGLES};
use crate::tensor::{Image, Tensor4};
use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TriangleDatasetConfig {
    pub n_images: usize,
    pub size: (usize, usize),
    /// Inclusive range of triangles drawn per image.
    pub triangles_per_image: (usize, usize),
    pub seed: u64,
    pub intensity: (f64, f64),
}

impl Default for TriangleDatasetConfig {
    fn default() -> Self {
        Self { n_images: 192, size: (64, 64), triangles_per_image: (3, 8), seed: 0, intensity: (0.0, 1.0) }
    }
}

impl TriangleDatasetConfig {
    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.intensity;
        if !(0.0..=1.0).contains(&lo) || !(0.0..=1.0).contains(&hi) || lo > hi {
            return Err(config_err!("intensity range ({lo}, {hi}) must lie in [0, 1]"));
        }
        if self.triangles_per_image.0 > self.triangles_per_image.1 {
            return Err(config_err!("triangle count range is empty"));
        }
        if self.size.0 == 0 || self.size.1 == 0 {
            return Err(config_err!("image size must be positive"));
        }
        Ok(())
    }
}

fn edge(a: (f64, f64), b: (f64, f64), p: (f64, f64)) -> f64 {
    (b.0 - a.0) * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0)
}

/// Paints one filled triangle over `img`; pixel centers decide membership.
fn paint(img: &mut Tensor4, v: [(f64, f64); 3], value: f64) {
    let (h, w) = (img.n_v(), img.n_h());
    let area = edge(v[0], v[1], v[2]);
    if area == 0.0 {
        return;
    }
    let ys = v.iter().map(|p| p.0);
    let xs = v.iter().map(|p| p.1);
    let y0 = ys.clone().fold(f64::INFINITY, f64::min).floor().max(0.0) as usize;
    let y1 = (ys.fold(f64::NEG_INFINITY, f64::max).ceil().max(0.0) as usize).min(h);
    let x0 = xs.clone().fold(f64::INFINITY, f64::min).floor().max(0.0) as usize;
    let x1 = (xs.fold(f64::NEG_INFINITY, f64::max).ceil().max(0.0) as usize).min(w);
    let plane = img.plane_mut(0, 0);
    for y in y0..y1 {
        for x in x0..x1 {
            let p = (y as f64 + 0.5, x as f64 + 0.5);
            let e = [edge(v[1], v[2], p), edge(v[2], v[0], p), edge(v[0], v[1], p)];
            if e.iter().all(|&s| s * area >= 0.0) {
                plane[y * w + x] = value;
            }
        }
    }
}

/// Images of randomly placed, overlapping filled triangles; later triangles cover earlier ones.
pub fn gen_triangles(cfg: &TriangleDatasetConfig) -> Result<Vec<Image>> {
    cfg.validate()?;
    let (h, w) = cfg.size;
    let (lo, hi) = cfg.intensity;
    Ok((0..cfg.n_images)
        .map(|i| {
            let mut rng = stream(cfg.seed, STREAM_TRIANGLES, i as u64);
            let mut img = Tensor4::zeros([1, 1, h, w]);
            let count = rng.random_range(cfg.triangles_per_image.0..=cfg.triangles_per_image.1);
            for _ in 0..count {
                let mut vertex = || {
                    (rng.random_range(-0.2..1.2) * h as f64, rng.random_range(-0.2..1.2) * w as f64)
                };
                let v = [vertex(), vertex(), vertex()];
                let value = if hi > lo { rng.random_range(lo..=hi) } else { lo };
                paint(&mut img, v, value.clamp(0.0, 1.0));
            }
            img
        })
        .collect())
}

/// Deterministic piecewise-constant test scene: background, rectangle, disk,
/// triangle and a bar pattern.
pub fn synthetic_scene(n_r: usize, n_c: usize) -> Image {
    let mut img = Tensor4::filled([1, 1, n_r, n_c], 0.2);
    let (h, w) = (n_r as f64, n_c as f64);
    {
        let plane = img.plane_mut(0, 0);
        for y in 0..n_r {
            for x in 0..n_c {
                let (fy, fx) = ((y as f64 + 0.5) / h, (x as f64 + 0.5) / w);
                let v = &mut plane[y * n_c + x];
                if (0.1..0.45).contains(&fy) && (0.1..0.5).contains(&fx) {
                    *v = 0.8;
                }
                if (fy - 0.65).powi(2) + (fx - 0.3).powi(2) < 0.04 {
                    *v = 0.55;
                }
                if (0.6..0.9).contains(&fy) && (0.6..0.9).contains(&fx) && ((fx * 10.0) as usize) % 2 == 0 {
                    *v = 0.05;
                }
            }
        }
    }
    paint(&mut img, [(0.15 * h, 0.75 * w), (0.5 * h, 0.55 * w), (0.45 * h, 0.95 * w)], 0.95);
    img
}
