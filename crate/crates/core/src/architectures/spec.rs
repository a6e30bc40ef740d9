use crate::activations::ActivationSpec;
use crate::error::{config_err, Error, Result};
use crate::tensor::Tensor4;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Down,
    Up,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResampleKind {
    /// Plain decimation / zero insertion.
    Plain,
    /// Haar DWT keeping only the LL band.
    DwtLow,
    /// Full Haar DWT, four bands per channel.
    DwtFull,
    /// Haar DWT keeping only the three detail bands.
    DwtHigh,
}

impl ResampleKind {
    /// Channel multiplier of the analysis side.
    pub fn bands(&self) -> usize {
        match self {
            ResampleKind::Plain | ResampleKind::DwtLow => 1,
            ResampleKind::DwtFull => 4,
            ResampleKind::DwtHigh => 3,
        }
    }
}

fn default_s() -> usize {
    2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum LayerSpec {
    /// Convolution from `in_ch` to `out_ch` channels with `n_f x n_f` filters.
    ///
    /// A transposed layer stores its kernel as (in_ch, out_ch), the dims of the encoder
    /// kernel it mirrors, and applies it as K̃ᵀ.
    Conv {
        out_ch: usize,
        in_ch: usize,
        n_f: usize,
        #[serde(default)]
        bias: bool,
        #[serde(default)]
        transposed: bool,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        name: Option<String>,
    },
    Activation {
        activation: ActivationSpec,
    },
    Resample {
        direction: Direction,
        kind: ResampleKind,
        #[serde(default = "default_s")]
        s: usize,
    },
    /// Adds the output of node `from` (0 is the network input).
    SkipAdd {
        from: usize,
    },
    /// Appends the channels of node `from` after the current channels.
    SkipConcat {
        from: usize,
    },
}

impl LayerSpec {
    pub fn conv(out_ch: usize, in_ch: usize, n_f: usize, bias: bool, name: &str) -> Self {
        LayerSpec::Conv { out_ch, in_ch, n_f, bias, transposed: false, name: Some(name.into()) }
    }

    pub fn conv_t(out_ch: usize, in_ch: usize, n_f: usize, bias: bool, name: &str) -> Self {
        LayerSpec::Conv { out_ch, in_ch, n_f, bias, transposed: true, name: Some(name.into()) }
    }

    pub fn act(activation: ActivationSpec) -> Self {
        LayerSpec::Activation { activation }
    }

    pub fn relu() -> Self {
        Self::act(ActivationSpec::relu())
    }

    /// Stored kernel dims.
    pub fn kernel_dims(&self) -> Option<[usize; 4]> {
        match *self {
            LayerSpec::Conv { out_ch, in_ch, n_f, transposed, .. } => {
                Some(if transposed { [in_ch, out_ch, n_f, n_f] } else { [out_ch, in_ch, n_f, n_f] })
            }
            _ => None,
        }
    }
}

/// Declarative encoder-decoder network. Node 0 is the input; node i + 1 is the output of layer i.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkSpec {
    #[serde(default)]
    pub name: String,
    pub layers: Vec<LayerSpec>,
    /// Output y - G(y) instead of G(y).
    #[serde(default)]
    pub residual: bool,
}

/// Channels and decimation factor of one node.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NodeShape {
    pub channels: usize,
    pub scale: usize,
}

/// Encoder/decoder pairing of the convolution layers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pairing {
    /// For each layer: the partner conv layer, if the layer is a conv.
    pub partner: Vec<Option<usize>>,
    /// For each layer: how many encoder convs are open when it runs (after an encoder conv
    /// pushes, before a decoder conv pops).
    pub depth: Vec<usize>,
    /// For each encoder conv: whether a ReLU-type activation runs at its depth.
    pub rectified: Vec<bool>,
}

fn layer_err(i: usize, msg: impl std::fmt::Display) -> Error {
    config_err!("layer {i}: {msg}")
}

impl NetworkSpec {
    /// Shape of every node, checking channel and resolution arithmetic along the graph.
    pub fn shapes(&self) -> Result<Vec<NodeShape>> {
        let mut shapes = vec![NodeShape { channels: 1, scale: 1 }];
        for (i, layer) in self.layers.iter().enumerate() {
            let cur = *shapes.last().unwrap();
            let next = match layer {
                LayerSpec::Conv { out_ch, in_ch, n_f, .. } => {
                    if *in_ch != cur.channels {
                        return Err(layer_err(i, format!("conv expects {in_ch} channels, receives {}", cur.channels)));
                    }
                    if *out_ch == 0 || n_f % 2 == 0 {
                        return Err(layer_err(i, format!("conv needs out_ch > 0 and odd n_f, got {out_ch}, {n_f}")));
                    }
                    NodeShape { channels: *out_ch, scale: cur.scale }
                }
                LayerSpec::Activation { activation } => {
                    activation.validate().map_err(|e| layer_err(i, e))?;
                    activation
                        .apply(&Tensor4::zeros([cur.channels, 1, 1, 1]))
                        .map_err(|e| layer_err(i, e))?;
                    cur
                }
                LayerSpec::Resample { direction, kind, s } => {
                    if *s == 0 || (*kind != ResampleKind::Plain && *s != 2) {
                        return Err(layer_err(i, format!("{kind:?} resampling needs factor 2, got {s}")));
                    }
                    let b = kind.bands();
                    match direction {
                        Direction::Down => NodeShape { channels: cur.channels * b, scale: cur.scale * s },
                        Direction::Up => {
                            if cur.channels % b != 0 || cur.scale % s != 0 {
                                return Err(layer_err(
                                    i,
                                    format!("cannot undo {kind:?} on {} channels at scale {}", cur.channels, cur.scale),
                                ));
                            }
                            NodeShape { channels: cur.channels / b, scale: cur.scale / s }
                        }
                    }
                }
                LayerSpec::SkipAdd { from } | LayerSpec::SkipConcat { from } => {
                    let Some(src) = shapes.get(*from).copied().filter(|_| *from <= i) else {
                        return Err(layer_err(i, format!("skip source node {from} does not precede it")));
                    };
                    if src.scale != cur.scale {
                        return Err(layer_err(i, format!("skip joins scales {} and {}", src.scale, cur.scale)));
                    }
                    if matches!(layer, LayerSpec::SkipAdd { .. }) {
                        if src.channels != cur.channels {
                            return Err(layer_err(i, format!("skip adds {} to {} channels", src.channels, cur.channels)));
                        }
                        cur
                    } else {
                        NodeShape { channels: cur.channels + src.channels, scale: cur.scale }
                    }
                }
            };
            shapes.push(next);
        }
        let last = shapes.last().unwrap();
        if last.channels != 1 || last.scale != 1 {
            return Err(config_err!(
                "network must end with 1 channel at full resolution, ends with {} at 1/{}",
                last.channels,
                last.scale
            ));
        }
        Ok(shapes)
    }

    /// Pairs each transposed conv with the most recent unpaired encoder conv.
    pub fn pairing(&self) -> Result<Pairing> {
        let n = self.layers.len();
        let mut partner = vec![None; n];
        let mut depth = vec![0; n];
        let mut rectified = vec![false; n];
        let mut stack: Vec<usize> = Vec::new();
        for (i, layer) in self.layers.iter().enumerate() {
            match layer {
                LayerSpec::Conv { transposed: false, .. } => {
                    stack.push(i);
                    depth[i] = stack.len();
                }
                LayerSpec::Conv { transposed: true, out_ch, in_ch, .. } => {
                    depth[i] = stack.len();
                    let Some(p) = stack.pop() else {
                        return Err(layer_err(i, "transposed conv has no encoder partner"));
                    };
                    let LayerSpec::Conv { out_ch: p_out, in_ch: p_in, n_f: p_nf, .. } = self.layers[p] else {
                        unreachable!()
                    };
                    let LayerSpec::Conv { n_f, .. } = *layer else { unreachable!() };
                    if *out_ch != p_in || in_ch % p_out != 0 || n_f != p_nf {
                        return Err(layer_err(
                            i,
                            format!("decoder {in_ch}->{out_ch} does not mirror encoder layer {p} ({p_in}->{p_out})"),
                        ));
                    }
                    partner[i] = Some(p);
                    partner[p] = Some(i);
                }
                LayerSpec::Activation { activation } => {
                    depth[i] = stack.len();
                    if matches!(activation, ActivationSpec::ReluBias { .. }) {
                        if let Some(&open) = stack.last() {
                            rectified[open] = true;
                        }
                    }
                }
                _ => depth[i] = stack.len(),
            }
        }
        if let Some(&open) = stack.last() {
            return Err(layer_err(open, "encoder conv has no decoder partner"));
        }
        Ok(Pairing { partner, depth, rectified })
    }

    pub fn validate(&self) -> Result<()> {
        self.shapes()?;
        self.pairing()?;
        Ok(())
    }

    /// Product of all down-sampling factors.
    pub fn total_decimation(&self) -> usize {
        self.shapes().map(|s| s.iter().map(|n| n.scale).max().unwrap_or(1)).unwrap_or(1)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: NetworkSpec = serde_json::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }
}
