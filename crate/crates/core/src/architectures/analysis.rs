use super::network::{ForwardOptions, InitMode, Network};
use super::spec::{LayerSpec, NetworkSpec};
use crate::activations::ActivationSpec;
use crate::error::{config_err, Error, Result};
use crate::framelets::haar_filters;
use crate::rng::{stream, STREAM_PROBE};
use crate::tensor::{conv2d, conv2d_adjoint, Image, Tensor4};
use rand::Rng;
use serde::{Deserialize, Serialize};

pub const PR_TOLERANCE: f64 = 1e-8;
pub const GAIN_TOLERANCE: f64 = 1e-6;

/// Perfect-reconstruction probe of a zero-bias, ideal-filter instantiation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrReport {
    pub name: String,
    pub is_perfect: bool,
    pub gain_dc: f64,
    pub gain_nyquist: f64,
    pub max_recon_err: f64,
    /// Reconstruction constant of every encoder-decoder pair, all normalized to 1.
    pub pair_constants: Vec<f64>,
    pub probe_side: usize,
}

/// Which bank an ideal encoder uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Bank {
    Haar,
    Delta,
}

/// Ideal encoder kernel for `out <- inn` channels and its synthesis partner, normalized
/// so that K̃ᵀ(K x)₊ = x (rectified) or K̃ᵀK x = x.
///
/// A rectified pair uses the sign-paired bank (F; -F); unused rows are zero.
pub fn ideal_pair(out: usize, inn: usize, n_f: usize, rectified: bool) -> Result<(Tensor4, Tensor4)> {
    let signs: &[f64] = if rectified { &[1.0, -1.0] } else { &[1.0] };
    let m = signs.len();
    let bank = if n_f >= 3 && out >= 4 * m * inn {
        Bank::Haar
    } else if out >= m * inn {
        Bank::Delta
    } else {
        return Err(config_err!(
            "cannot instantiate a {}tight frame with {out} channels from {inn} (needs at least {})",
            if rectified { "phase-complementary " } else { "" },
            m * inn
        ));
    };
    let (filters, c) = match bank {
        Bank::Haar => (haar_filters(), 0.25),
        Bank::Delta => (Tensor4::delta(3), 1.0),
    };
    let nb = filters.n_rows();
    let mid = n_f / 2;
    let mut k = Tensor4::zeros([out, inn, n_f, n_f]);
    let mut row = 0;
    for &sign in signs {
        for b in 0..nb {
            for ch in 0..inn {
                for u in 0..3 {
                    for v in 0..3 {
                        let w = filters.get(b, 0, u, v);
                        if w != 0.0 {
                            k.set(row, ch, mid + u - 1, mid + v - 1, sign * w);
                        }
                    }
                }
                row += 1;
            }
        }
    }
    let k_tilde = k.scale(c);
    Ok((k, k_tilde))
}

/// Instantiates `spec` with ideal filters and zero biases.
pub fn ideal_network(spec: &NetworkSpec) -> Result<Network> {
    let mut net = Network::new(spec.clone(), 0, InitMode::Independent)?;
    let pairing = net.pairing().clone();
    for (i, layer) in spec.layers.iter().enumerate() {
        let LayerSpec::Conv { out_ch, in_ch, n_f, transposed: false, .. } = *layer else { continue };
        let d = pairing.partner[i].expect("validated pairing");
        let (k, kt) = ideal_pair(out_ch, in_ch, n_f, pairing.rectified[i]).map_err(|e| match e {
            Error::Config(m) => config_err!("layer {i}: {m}"),
            e => e,
        })?;
        let rows = net.kernel(d).unwrap().n_rows();
        let kt = Tensor4::concat_rows(&vec![&kt; rows / out_ch])?;
        *net.kernel_mut(i).unwrap() = k;
        *net.kernel_mut(d).unwrap() = kt;
    }
    for i in 0..spec.layers.len() {
        if let Some(b) = net.bias_mut(i) {
            *b = Tensor4::zeros(b.dims());
        }
    }
    Ok(net)
}

fn checkerboard(side: usize) -> Image {
    Tensor4::from_fn([1, 1, side, side], |_, _, y, x| if (y + x) % 2 == 0 { 1.0 } else { -1.0 })
}

/// Propagates random signed images, a constant and a ±1 checkerboard through the
/// ideal-filter, zero-bias network G (residual connection and skip additions excluded).
pub fn pr_analyze(spec: &NetworkSpec) -> Result<PrReport> {
    let net = ideal_network(spec)?;
    let side = 16.max(4 * spec.total_decimation());
    let opts = ForwardOptions::linearized();
    let mut max_recon_err = 0.0f64;
    for i in 0..4 {
        let mut rng = stream(0, STREAM_PROBE, i);
        let y = Tensor4::from_fn([1, 1, side, side], |_, _, _, _| rng.random_range(-1.0..1.0));
        max_recon_err = max_recon_err.max(net.predict(&y, opts)?.max_abs_diff(&y)?);
    }
    let ones = Tensor4::filled([1, 1, side, side], 1.0);
    let gain_dc = net.predict(&ones, opts)?.mean();
    let cb = checkerboard(side);
    let gain_nyquist = net.predict(&cb, opts)?.dot(&cb)? / cb.norm_sq();
    let is_perfect = max_recon_err < PR_TOLERANCE
        && (gain_dc - 1.0).abs() < GAIN_TOLERANCE
        && (gain_nyquist - 1.0).abs() < GAIN_TOLERANCE;
    let pairs = spec.layers.iter().filter(|l| matches!(l, LayerSpec::Conv { transposed: false, .. })).count();
    Ok(PrReport {
        name: spec.name.clone(),
        is_perfect,
        gain_dc,
        gain_nyquist,
        max_recon_err,
        pair_constants: vec![1.0; pairs],
        probe_side: side,
    })
}

fn is_scaled_identity(response: &Tensor4, tol: f64) -> Option<f64> {
    let [c, c2, n, _] = response.dims();
    if c != c2 {
        return None;
    }
    let mid = n / 2;
    let scale = response.get(0, 0, mid, mid);
    let target = Tensor4::from_fn(response.dims(), |r, col, y, x| if r == col && y == mid && x == mid { scale } else { 0.0 });
    (scale > 0.0 && response.max_abs_diff(&target).ok()? <= tol * scale).then_some(scale)
}

/// c > 0 with K̃ᵀK = c·𝐈.
fn linear_constant(k: &Tensor4, k_tilde: &Tensor4) -> Option<f64> {
    let side = 2 * k.n_v() + 1;
    let ident = Tensor4::identity(k.n_cols(), side);
    let response = conv2d_adjoint(k_tilde, &conv2d(k, &ident).ok()?).ok()?;
    is_scaled_identity(&response, 1e-12)
}

fn pick_rows(t: &Tensor4, rows: &[usize]) -> Tensor4 {
    let parts: Vec<Tensor4> = rows.iter().map(|&r| t.slice_rows(r, 1).unwrap()).collect();
    Tensor4::concat_rows(&parts.iter().collect::<Vec<_>>()).unwrap()
}

/// c > 0 with K̃ᵀ(K x)₊ = c·x for every x: nonzero rows come as (F; -F) in both banks and
/// the halves form a linear tight frame.
fn pct_constant(k: &Tensor4, k_tilde: &Tensor4) -> Option<f64> {
    let mut unmatched: Vec<usize> = (0..k.n_rows())
        .filter(|&r| k.slice_rows(r, 1).unwrap().max_abs() > 0.0 || k_tilde.slice_rows(r, 1).unwrap().max_abs() > 0.0)
        .collect();
    let mut halves = Vec::new();
    while let Some(r) = unmatched.first().copied() {
        unmatched.remove(0);
        let (a, at) = (k.slice_rows(r, 1).unwrap(), k_tilde.slice_rows(r, 1).unwrap());
        let pos = unmatched.iter().position(|&s| {
            let (b, bt) = (k.slice_rows(s, 1).unwrap(), k_tilde.slice_rows(s, 1).unwrap());
            a.scale(-1.0) == b && at.scale(-1.0) == bt
        })?;
        unmatched.remove(pos);
        halves.push(r);
    }
    if halves.is_empty() {
        return None;
    }
    linear_constant(&pick_rows(k, &halves), &pick_rows(k_tilde, &halves))
}

/// Impulse response of a zero-bias network that is provably linear and shift-invariant.
///
/// A ReLU is accepted when its input is known to be nonnegative, or when it sits directly
/// after an encoder convolution whose pair with the decoder is phase-complementary. Other
/// activations are accepted only as shrinkage with all-zero thresholds.
pub fn equivalent_filter(net: &Network) -> Result<Tensor4> {
    let spec = &net.spec;
    let pairing = net.pairing();
    let n = spec.layers.len();
    let mut nonneg = vec![false; n + 1];
    let mut pair_scalar = vec![None; n];
    let mut enc_input_nonneg = vec![false; n];
    for (i, layer) in spec.layers.iter().enumerate() {
        let refuse = |why: String| Err(config_err!("layer {i}: {why}; no equivalent filter"));
        nonneg[i + 1] = match layer {
            LayerSpec::Resample { .. } => return refuse("resampling makes the network shift-variant".into()),
            LayerSpec::Conv { transposed: false, .. } => {
                let d = pairing.partner[i].unwrap();
                let (k, kt) = (net.kernel(i).unwrap(), net.kernel(d).unwrap());
                enc_input_nonneg[i] = nonneg[i];
                if kt.n_rows() == k.n_rows() {
                    pair_scalar[i] = if pairing.rectified[i] { pct_constant(k, kt) } else { linear_constant(k, kt) };
                }
                false
            }
            LayerSpec::Conv { transposed: true, .. } => {
                let e = pairing.partner[i].unwrap();
                pair_scalar[e].is_some() && enc_input_nonneg[e]
            }
            LayerSpec::Activation { activation } => match activation {
                ActivationSpec::ReluBias { t } => {
                    if !t.is_zero() {
                        return refuse("ReLU with a nonzero threshold".into());
                    }
                    let after_pct_encoder = i > 0
                        && matches!(spec.layers[i - 1], LayerSpec::Conv { transposed: false, .. })
                        && pairing.rectified[i - 1]
                        && pair_scalar[i - 1].is_some();
                    if !nonneg[i] && !after_pct_encoder {
                        return refuse("ReLU without a phase-complementary guarantee".into());
                    }
                    true
                }
                a if a.is_shrinkage() && a.is_identity() => nonneg[i],
                a => return refuse(format!("nonlinear activation {a:?}")),
            },
            LayerSpec::SkipAdd { from } => nonneg[i] && nonneg[*from],
            LayerSpec::SkipConcat { from } => nonneg[i] && nonneg[*from],
        };
    }
    let support: usize = spec.layers.iter().filter_map(|l| match l {
        LayerSpec::Conv { n_f, .. } => Some(n_f - 1),
        _ => None,
    }).sum();
    let side = (support + 1) | 1;
    let response = net.predict(&Tensor4::delta(side), ForwardOptions::zero_bias())?;
    let mut rng = stream(1, STREAM_PROBE, 0);
    let y = Tensor4::from_fn([1, 1, side, side], |_, _, _, _| rng.random_range(-1.0..1.0));
    let gap = net.predict(&y, ForwardOptions::zero_bias())?.max_abs_diff(&conv2d(&response, &y)?)?;
    if gap > 1e-9 * response.max_abs().max(1.0) {
        return Err(config_err!("network is not shift-invariant on a random probe (gap {gap:.3e}); no equivalent filter"));
    }
    Ok(response)
}
