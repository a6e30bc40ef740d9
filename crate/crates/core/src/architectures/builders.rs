use super::network::{InitMode, Network};
use super::spec::{Direction, LayerSpec, NetworkSpec, ResampleKind};
use crate::activations::{ActivationSpec, LetMember, Threshold};
use crate::error::Result;

fn resample(direction: Direction, kind: ResampleKind) -> LayerSpec {
    LayerSpec::Resample { direction, kind, s: 2 }
}

/// Three-level single-resolution encoder-decoder with 6, 12 and 24 channels, 3x3 filters,
/// biases and ReLUs after every convolution except the output one.
pub fn toy() -> NetworkSpec {
    let chans = [1, 6, 12, 24];
    let mut layers = Vec::new();
    for n in 0..3 {
        layers.push(LayerSpec::conv(chans[n + 1], chans[n], 3, true, &format!("K{n}")));
        layers.push(LayerSpec::relu());
    }
    for n in (0..3).rev() {
        layers.push(LayerSpec::conv_t(chans[n], chans[n + 1], 3, true, &format!("Kt{n}")));
        if n > 0 {
            layers.push(LayerSpec::relu());
        }
    }
    NetworkSpec { name: "toy".into(), layers, residual: false }
}

pub fn build_toy(seed: u64, init: InitMode) -> Result<Network> {
    Network::new(toy(), seed, init)
}

/// LET of soft shrinkage and garrote sharing one threshold per channel.
pub fn let_shrink(t: Threshold) -> ActivationSpec {
    ActivationSpec::Let {
        members: vec![
            LetMember { weight: 0.5, activation: ActivationSpec::SoftShrink { t: t.clone() } },
            LetMember { weight: 0.5, activation: ActivationSpec::Garrote { t } },
        ],
    }
}

/// K0, one Haar level, LET shrinkage on the detail bands (LL passes with t = 0), K̃0ᵀ.
pub fn lwfsn(c0: usize, n_f: usize, t: f64) -> NetworkSpec {
    let thresholds = (0..4 * c0).map(|ch| if ch < c0 { 0.0 } else { t }).collect();
    NetworkSpec {
        name: "lwfsn".into(),
        layers: vec![
            LayerSpec::conv(c0, 1, n_f, false, "K0"),
            resample(Direction::Down, ResampleKind::DwtFull),
            LayerSpec::act(let_shrink(Threshold::PerChannel(thresholds))),
            resample(Direction::Up, ResampleKind::DwtFull),
            LayerSpec::conv_t(1, c0, n_f, false, "Kt0"),
        ],
        residual: false,
    }
}

/// Residual LWFSN: the LL band is dropped, the detail bands are clipped, and the
/// resulting noise estimate is subtracted from the input.
pub fn rlwfsn(c0: usize, n_f: usize, t: f64) -> NetworkSpec {
    NetworkSpec {
        name: "rlwfsn".into(),
        layers: vec![
            LayerSpec::conv(c0, 1, n_f, false, "K0"),
            resample(Direction::Down, ResampleKind::DwtHigh),
            LayerSpec::act(ActivationSpec::SoftClip { t: Threshold::Scalar(t) }),
            resample(Direction::Up, ResampleKind::DwtHigh),
            LayerSpec::conv_t(1, c0, n_f, false, "Kt0"),
        ],
        residual: true,
    }
}

/// Two-path U-Net: an undecimated path through K0 and a decimated path through the LL band
/// and the inner pair (K1, K̃1). The two paths are concatenated and summed by K̃0ᵀ.
/// With `residual` the output is y - U(y) (FBPConvNet).
pub fn unet(c0: usize, c1: usize, n_f: usize, residual: bool) -> NetworkSpec {
    NetworkSpec {
        name: if residual { "fbpconvnet" } else { "unet" }.into(),
        layers: vec![
            LayerSpec::conv(c0, 1, n_f, true, "K0"),
            LayerSpec::relu(),
            resample(Direction::Down, ResampleKind::DwtLow),
            LayerSpec::conv(c1, c0, n_f, true, "K1"),
            LayerSpec::relu(),
            LayerSpec::conv_t(c0, c1, n_f, true, "Kt1"),
            LayerSpec::relu(),
            resample(Direction::Up, ResampleKind::DwtLow),
            LayerSpec::SkipConcat { from: 2 },
            LayerSpec::conv_t(1, 2 * c0, n_f, false, "Kt0"),
        ],
        residual,
    }
}

/// Nested residual encoder-decoder: Q = K0 y, Q̂ = (Q + R1(Q) + b̃1)₊, x̂ = (y + K̃0ᵀQ̂ + b̃0)₊.
pub fn red(c0: usize, c1: usize, n_f: usize) -> NetworkSpec {
    NetworkSpec {
        name: "red".into(),
        layers: vec![
            LayerSpec::conv(c0, 1, n_f, false, "K0"),
            LayerSpec::conv(c1, c0, n_f, true, "K1"),
            LayerSpec::relu(),
            LayerSpec::conv_t(c0, c1, n_f, true, "Kt1"),
            LayerSpec::SkipAdd { from: 1 },
            LayerSpec::relu(),
            LayerSpec::conv_t(1, c0, n_f, true, "Kt0"),
            LayerSpec::SkipAdd { from: 0 },
            LayerSpec::relu(),
        ],
        residual: false,
    }
}

pub fn build_lwfsn(c0: usize, n_f: usize, t: f64, seed: u64) -> Result<Network> {
    Network::new(lwfsn(c0, n_f, t), seed, InitMode::Independent)
}

pub fn build_rlwfsn(c0: usize, n_f: usize, t: f64, seed: u64) -> Result<Network> {
    Network::new(rlwfsn(c0, n_f, t), seed, InitMode::Independent)
}

pub fn build_unet(c0: usize, c1: usize, n_f: usize, residual: bool, seed: u64) -> Result<Network> {
    Network::new(unet(c0, c1, n_f, residual), seed, InitMode::Independent)
}

pub fn build_red(c0: usize, c1: usize, n_f: usize, seed: u64) -> Result<Network> {
    Network::new(red(c0, c1, n_f), seed, InitMode::Independent)
}
