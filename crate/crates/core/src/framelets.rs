//! Tight framelets: the 2-D Haar filter bank, decimated and undecimated
//! transforms, phase-complementary extension and framelet-domain shrinkage.

use crate::activations::ActivationSpec;
use crate::error::{config_err, shape_err, Result};
use crate::tensor::{check_image, conv2d, conv2d_adjoint, downsample, upsample, Image, Tensor4};
use serde::{Deserialize, Serialize};

/// Paired analysis/synthesis filter banks with F̃ᵀ(F y)·c = y (undecimated).
///
/// Both banks have dims (bands, 1, n_v, n_h); the inverse is applied transposed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameletBasis {
    pub forward: Tensor4,
    pub inverse: Tensor4,
    /// Undecimated reconstruction constant. After factor-2 decimation the constant is 4c.
    pub c: f64,
    /// Whether the factor-2 decimated transform also reconstructs perfectly.
    pub decimated_pr: bool,
    /// Leading bands that carry the low-pass content; shrinkage leaves them alone.
    pub n_low: usize,
}

const S: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// 1-D Haar low-pass (1, 1)/√2 and high-pass (1, -1)/√2.
pub const HAAR_LOW: [f64; 2] = [S, S];
pub const HAAR_HIGH: [f64; 2] = [S, -S];

/// Separable 2-D filter `v ⊗ h` on a 3x3 grid, taps at offsets {-1, 0}.
fn outer3(v: &[f64; 2], h: &[f64; 2]) -> [f64; 9] {
    let mut k = [0.0; 9];
    for a in 0..2 {
        for b in 0..2 {
            k[a * 3 + b] = v[a] * h[b];
        }
    }
    k
}

/// The four orthonormal Haar filters, LL, LH, HL, HH (vertical ⊗ horizontal).
pub fn haar_filters() -> Tensor4 {
    let bands = [
        outer3(&HAAR_LOW, &HAAR_LOW),
        outer3(&HAAR_LOW, &HAAR_HIGH),
        outer3(&HAAR_HIGH, &HAAR_LOW),
        outer3(&HAAR_HIGH, &HAAR_HIGH),
    ];
    Tensor4::new([4, 1, 3, 3], bands.concat()).expect("haar dims")
}

/// The diagonal detail filter f_HH.
pub fn haar_hh() -> Tensor4 {
    haar_filters().slice_rows(3, 1).expect("hh band")
}

/// Orthonormal 2-D Haar DWT: W = W̃, undecimated c = 1/4, decimated constant 1.
pub fn haar() -> FrameletBasis {
    let w = haar_filters();
    FrameletBasis { forward: w.clone(), inverse: w, c: 0.25, decimated_pr: true, n_low: 1 }
}

/// Haar DWT with its band partitions.
#[derive(Debug, Clone, PartialEq)]
pub struct HaarDwt {
    pub w: Tensor4,
    pub w_tilde: Tensor4,
}

impl HaarDwt {
    pub fn new() -> Self {
        let w = haar_filters();
        Self { w_tilde: w.clone(), w }
    }

    /// Low band W_L (w_LL).
    pub fn low(&self) -> Tensor4 {
        self.w.slice_rows(0, 1).expect("low band")
    }

    /// Detail bands W_H (w_LH, w_HL, w_HH).
    pub fn high(&self) -> Tensor4 {
        self.w.slice_rows(1, 3).expect("high bands")
    }

    pub fn basis(&self) -> FrameletBasis {
        haar()
    }
}

impl Default for HaarDwt {
    fn default() -> Self {
        Self::new()
    }
}

/// Identity framelet: a single delta band, c = 1.
pub fn delta_basis(n: usize) -> FrameletBasis {
    let d = Tensor4::delta(n);
    FrameletBasis { forward: d.clone(), inverse: d, c: 1.0, decimated_pr: false, n_low: 1 }
}

impl FrameletBasis {
    pub fn bands(&self) -> usize {
        self.forward.n_rows()
    }

    /// Reconstruction constant applied after synthesis.
    pub fn constant(&self, decimated: bool) -> f64 {
        if decimated {
            4.0 * self.c
        } else {
            self.c
        }
    }

    /// Checks dims and the undecimated (and, if claimed, decimated) PR property on a random probe.
    pub fn validate(&self) -> Result<()> {
        if self.forward.dims() != self.inverse.dims() || self.forward.n_cols() != 1 {
            return Err(shape_err!(
                "basis banks {:?} and {:?} must match with one column",
                self.forward.dims(),
                self.inverse.dims()
            ));
        }
        if !(self.c > 0.0) {
            return Err(config_err!("reconstruction constant {} must be positive", self.c));
        }
        let probe = Tensor4::from_fn([1, 1, 8, 8], |_, _, y, x| ((y * 31 + x * 17) % 13) as f64 - 6.0);
        let mut modes = vec![false];
        if self.decimated_pr {
            modes.push(true);
        }
        for d in modes {
            let err = framelet_inverse(self, &framelet_forward(self, &probe, d)?, d)?.max_abs_diff(&probe)?;
            if err > 1e-8 * probe.max_abs() {
                return Err(config_err!("basis fails perfect reconstruction (decimated = {d}): {err:e}"));
            }
        }
        Ok(())
    }
}

/// Analysis: F y, followed by factor-2 decimation when requested.
pub fn framelet_forward(basis: &FrameletBasis, y: &Image, decimated: bool) -> Result<Tensor4> {
    if decimated {
        check_image(y)?;
    }
    let bands = conv2d(&basis.forward, y)?;
    if decimated {
        downsample(&bands, 2)
    } else {
        Ok(bands)
    }
}

/// Synthesis: F̃ᵀ applied to the (upsampled) bands, scaled by the reconstruction constant.
pub fn framelet_inverse(basis: &FrameletBasis, bands: &Tensor4, decimated: bool) -> Result<Image> {
    if bands.n_rows() != basis.bands() {
        return Err(shape_err!("{} bands given, basis has {}", bands.n_rows(), basis.bands()));
    }
    if decimated && !basis.decimated_pr {
        return Err(config_err!("basis does not reconstruct after decimation"));
    }
    let full = if decimated { upsample(bands, 2)? } else { bands.clone() };
    Ok(conv2d_adjoint(&basis.inverse, &full)?.scale(basis.constant(decimated)))
}

/// Phase-complementary extension K = (F; -F), K̃ = (F̃; -F̃)·c so that K̃ᵀ(K y)₊ = y.
pub fn phase_complement(basis: &FrameletBasis) -> FrameletBasis {
    let neg_f = basis.forward.scale(-1.0);
    let neg_fi = basis.inverse.scale(-1.0);
    FrameletBasis {
        forward: Tensor4::concat_rows(&[&basis.forward, &neg_f]).expect("same dims"),
        inverse: Tensor4::concat_rows(&[&basis.inverse, &neg_fi]).expect("same dims").scale(basis.c),
        c: 1.0,
        decimated_pr: basis.decimated_pr,
        n_low: 0,
    }
}

/// Outcome of probing K̃ᵀ(K 𝐈)₊ with the identity tensor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PctDiagnostic {
    /// (C, C, n, n) response to the identity input, centered on an odd canvas.
    pub response: Tensor4,
    pub diag_energy: f64,
    pub offdiag_energy: f64,
    pub ratio: f64,
    pub is_pct: bool,
}

pub const DEFAULT_PCT_TOLERANCE: f64 = 0.05;

/// K̃ᵀ(K 𝐈)₊ on an odd canvas of side 2·n_v + 1; response dims (C, C, side, side).
pub fn identity_response(k: &Tensor4, k_tilde: &Tensor4) -> Result<Tensor4> {
    if k.dims() != k_tilde.dims() {
        return Err(shape_err!("K {:?} and K̃ {:?} must share dims", k.dims(), k_tilde.dims()));
    }
    let side = 2 * k.n_v().max(k.n_h()) + 1;
    let ident = Tensor4::identity(k.n_cols(), side);
    let h = conv2d(k, &ident)?.map(|v| v.max(0.0));
    conv2d_adjoint(k_tilde, &h)
}

pub fn check_phase_complementary(k: &Tensor4, k_tilde: &Tensor4) -> Result<PctDiagnostic> {
    check_phase_complementary_with(k, k_tilde, DEFAULT_PCT_TOLERANCE)
}

/// The diagonal energy is carried by the center taps of the diagonal entries; everything
/// else, including off-center taps on the diagonal, counts as off-diagonal.
pub fn check_phase_complementary_with(k: &Tensor4, k_tilde: &Tensor4, tol: f64) -> Result<PctDiagnostic> {
    let response = identity_response(k, k_tilde)?;
    let c = response.n_rows();
    let mid = response.n_v() / 2;
    let total = response.norm_sq();
    let centers: Vec<f64> = (0..c).map(|i| response.get(i, i, mid, mid)).collect();
    let diag_energy: f64 = centers.iter().map(|v| v * v).sum();
    let offdiag_energy = (total - diag_energy).max(0.0);
    let ratio = if diag_energy > 0.0 { offdiag_energy / diag_energy } else { f64::INFINITY };
    let is_pct = ratio < tol && centers.iter().all(|&v| v > 0.0);
    Ok(PctDiagnostic { response, diag_energy, offdiag_energy, ratio, is_pct })
}

/// Thresholds the detail bands with `act` and leaves the low bands untouched.
///
/// Per-channel thresholds index the detail bands only.
pub fn denoise_framelet(basis: &FrameletBasis, y: &Image, act: &ActivationSpec, decimated: bool) -> Result<Image> {
    if !act.is_shrinkage() {
        return Err(config_err!("denoising needs a shrinkage activation, got {:?}", act));
    }
    act.validate()?;
    let bands = framelet_forward(basis, y, decimated)?;
    let low = bands.slice_rows(0, basis.n_low)?;
    let high = act.apply(&bands.slice_rows(basis.n_low, basis.bands() - basis.n_low)?)?;
    framelet_inverse(basis, &Tensor4::concat_rows(&[&low, &high])?, decimated)
}

/// Per-band shrinkage thresholds t = σ²/σ_d for the detail bands, with σ_d the band's
/// signal dispersion estimated as sqrt(max(E[z²] - σ², tiny)).
pub fn band_thresholds(basis: &FrameletBasis, y: &Image, sigma: f64, decimated: bool) -> Result<Vec<f64>> {
    let bands = framelet_forward(basis, y, decimated)?;
    (basis.n_low..basis.bands())
        .map(|b| {
            let band = bands.slice_rows(b, 1)?;
            let second = band.norm_sq() / band.len() as f64;
            let sigma_d = (second - sigma * sigma).max(1e-12).sqrt();
            Ok(sigma * sigma / sigma_d)
        })
        .collect()
}
