use super::spec::{LayerSpec, NetworkSpec};
use crate::error::{shape_err, Result};

/// Multiply-accumulates of all convolutions: C_in·C_out·(pixels at the layer's resolution)·N_f².
pub fn flops(spec: &NetworkSpec, n_r: usize, n_c: usize) -> Result<u64> {
    let shapes = spec.shapes()?;
    let mut total = 0u64;
    for (i, layer) in spec.layers.iter().enumerate() {
        if let LayerSpec::Conv { out_ch, in_ch, n_f, .. } = *layer {
            let s = shapes[i].scale;
            if n_r % s != 0 || n_c % s != 0 {
                return Err(shape_err!("{n_r}x{n_c} is not divisible by the layer {i} decimation {s}"));
            }
            total += (in_ch * out_ch * (n_r / s) * (n_c / s) * n_f * n_f) as u64;
        }
    }
    Ok(total)
}

/// (3 + C1/2)·C0·N_r·N_c·N_f² for the two-path U-Net.
pub fn flops_unet(c0: u64, c1: u64, n_r: u64, n_c: u64, n_f: u64) -> u64 {
    (6 + c1) * c0 * n_r * n_c * n_f * n_f / 2
}

/// 2(1 + C1)·C0·N_r·N_c·N_f² for the nested residual encoder-decoder.
pub fn flops_red(c0: u64, c1: u64, n_r: u64, n_c: u64, n_f: u64) -> u64 {
    2 * (1 + c1) * c0 * n_r * n_c * n_f * n_f
}

/// 2·C0·N_r·N_c·N_f²; the fixed Haar transform is not counted.
pub fn flops_lwfsn(c0: u64, n_r: u64, n_c: u64, n_f: u64) -> u64 {
    2 * c0 * n_r * n_c * n_f * n_f
}
