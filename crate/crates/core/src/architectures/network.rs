use super::spec::{Direction, LayerSpec, NetworkSpec, NodeShape, Pairing, ResampleKind};
use crate::activations::ActivationSpec;
use crate::autodiff::{xavier_uniform_init, BandSet, ParamStore, Parameter, Tape, Var};
use crate::error::{config_err, shape_err, Result};
use crate::rng::{derive_seed, STREAM_INIT};
use crate::tensor::{Image, Tensor4};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum InitMode {
    /// Every kernel gets its own Xavier draw.
    #[default]
    Independent,
    /// Decoder kernels start as copies of their encoder partners.
    SharedEncDec,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForwardOptions {
    /// Multiplies every convolution bias.
    pub bias_scale: f64,
    /// Zero-bias, ideal-threshold evaluation of G alone: ReLUs lose their threshold,
    /// shrinkage and clipping become the identity, skip additions, the residual
    /// connection and the output-stage activations are left out.
    pub linearize: bool,
}

impl Default for ForwardOptions {
    fn default() -> Self {
        Self { bias_scale: 1.0, linearize: false }
    }
}

impl ForwardOptions {
    pub fn scaled_bias(bias_scale: f64) -> Self {
        Self { bias_scale, ..Self::default() }
    }

    pub fn zero_bias() -> Self {
        Self::scaled_bias(0.0)
    }

    pub fn linearized() -> Self {
        Self { bias_scale: 0.0, linearize: true }
    }
}

/// A network spec with its parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    pub spec: NetworkSpec,
    pub store: ParamStore,
    shapes: Vec<NodeShape>,
    pairing: Pairing,
    kernel_idx: Vec<Option<usize>>,
    bias_idx: Vec<Option<usize>>,
}

fn layer_name(layer: &LayerSpec, i: usize) -> String {
    match layer {
        LayerSpec::Conv { name: Some(n), .. } => n.clone(),
        _ => format!("layer{i}"),
    }
}

pub fn bias_name(kernel: &str) -> String {
    format!("{kernel}.b")
}

impl Network {
    /// Xavier-uniform kernels drawn per layer from `seed`, zero biases.
    pub fn new(spec: NetworkSpec, seed: u64, init: InitMode) -> Result<Self> {
        spec.validate()?;
        let pairing = spec.pairing()?;
        let mut store = ParamStore::new();
        let mut kernels: Vec<Option<Tensor4>> = vec![None; spec.layers.len()];
        for (i, layer) in spec.layers.iter().enumerate() {
            let Some(dims) = layer.kernel_dims() else { continue };
            let transposed = matches!(layer, LayerSpec::Conv { transposed: true, .. });
            let k = match (init, pairing.partner[i]) {
                (InitMode::SharedEncDec, Some(p)) if transposed => tile_rows(kernels[p].as_ref().unwrap(), dims[0])?,
                _ => xavier_uniform_init(dims, derive_seed(seed, STREAM_INIT, i as u64)),
            };
            kernels[i] = Some(k);
        }
        for (i, layer) in spec.layers.iter().enumerate() {
            if let (Some(k), LayerSpec::Conv { out_ch, bias, .. }) = (kernels[i].take(), layer) {
                let name = layer_name(layer, i);
                if *bias {
                    store.push(Parameter::new(bias_name(&name), Tensor4::zeros([*out_ch, 1, 1, 1]), true));
                }
                store.push(Parameter::new(name, k, true));
            }
        }
        Self::from_store(spec, store)
    }

    /// Binds an existing parameter set (e.g. a loaded checkpoint) to `spec`.
    pub fn from_store(spec: NetworkSpec, store: ParamStore) -> Result<Self> {
        let shapes = spec.shapes()?;
        let pairing = spec.pairing()?;
        let n = spec.layers.len();
        let (mut kernel_idx, mut bias_idx) = (vec![None; n], vec![None; n]);
        for (i, layer) in spec.layers.iter().enumerate() {
            let LayerSpec::Conv { out_ch, bias, .. } = layer else { continue };
            let name = layer_name(layer, i);
            let dims = layer.kernel_dims().unwrap();
            let k = store.index(&name).ok_or_else(|| config_err!("missing parameter {name}"))?;
            if store.params[k].value.dims() != dims {
                return Err(shape_err!("parameter {name} has dims {:?}, layer {i} needs {dims:?}", store.params[k].value.dims()));
            }
            kernel_idx[i] = Some(k);
            if *bias {
                let bn = bias_name(&name);
                let b = store.index(&bn).ok_or_else(|| config_err!("missing parameter {bn}"))?;
                if store.params[b].value.dims() != [*out_ch, 1, 1, 1] {
                    return Err(shape_err!("bias {bn} has dims {:?}", store.params[b].value.dims()));
                }
                bias_idx[i] = Some(b);
            }
        }
        Ok(Self { spec, store, shapes, pairing, kernel_idx, bias_idx })
    }

    pub fn pairing(&self) -> &Pairing {
        &self.pairing
    }

    pub fn shapes(&self) -> &[NodeShape] {
        &self.shapes
    }

    /// Kernel of conv layer `i`.
    pub fn kernel(&self, i: usize) -> Option<&Tensor4> {
        self.kernel_idx.get(i).copied().flatten().map(|k| &self.store.params[k].value)
    }

    pub fn kernel_mut(&mut self, i: usize) -> Option<&mut Tensor4> {
        self.kernel_idx.get(i).copied().flatten().map(|k| &mut self.store.params[k].value)
    }

    pub fn bias(&self, i: usize) -> Option<&Tensor4> {
        self.bias_idx.get(i).copied().flatten().map(|b| &self.store.params[b].value)
    }

    pub fn bias_mut(&mut self, i: usize) -> Option<&mut Tensor4> {
        self.bias_idx.get(i).copied().flatten().map(|b| &mut self.store.params[b].value)
    }

    /// Conv layer indices in order.
    pub fn conv_layers(&self) -> Vec<usize> {
        (0..self.spec.layers.len()).filter(|&i| self.kernel_idx[i].is_some()).collect()
    }

    /// Sets every bias to zero and excludes it from training.
    pub fn freeze_biases_at_zero(&mut self) {
        for b in self.bias_idx.iter().flatten() {
            let p = &mut self.store.params[*b];
            p.value = Tensor4::zeros(p.value.dims());
            p.trainable = false;
        }
    }

    /// Records the forward pass; returns the output and one leaf per stored parameter.
    pub fn forward_tape(&self, tape: &mut Tape, x: Var, opts: ForwardOptions) -> Result<(Var, Vec<Var>)> {
        let dims = tape.value(x).dims();
        let dec = self.shapes.iter().map(|s| s.scale).max().unwrap_or(1);
        if dims[0] != 1 || dims[2] % dec != 0 || dims[3] % dec != 0 {
            return Err(shape_err!("input {dims:?} must be single-channel with sides divisible by {dec}"));
        }
        let pvars: Vec<Var> = self.store.params.iter().map(|p| tape.leaf(p.value.clone())).collect();
        let mut nodes = vec![x];
        for (i, layer) in self.spec.layers.iter().enumerate() {
            let cur = *nodes.last().unwrap();
            let out = match layer {
                LayerSpec::Conv { transposed, .. } => {
                    let k = pvars[self.kernel_idx[i].unwrap()];
                    let z = if *transposed { tape.conv_t(k, cur)? } else { tape.conv(k, cur)? };
                    match self.bias_idx[i] {
                        Some(b) if !opts.linearize && opts.bias_scale != 0.0 => {
                            let b = if opts.bias_scale == 1.0 { pvars[b] } else { tape.scale(pvars[b], opts.bias_scale) };
                            tape.add_bias(z, b)?
                        }
                        _ => z,
                    }
                }
                LayerSpec::Activation { activation } => {
                    if opts.linearize {
                        match (activation, self.pairing.depth[i]) {
                            (ActivationSpec::ReluBias { .. }, d) if d > 0 => tape.relu(cur)?,
                            _ => cur,
                        }
                    } else {
                        tape.act(cur, activation)?
                    }
                }
                LayerSpec::Resample { direction, kind, s } => resample(tape, cur, *direction, *kind, *s)?,
                LayerSpec::SkipAdd { from } => {
                    if opts.linearize {
                        cur
                    } else {
                        tape.add(cur, nodes[*from])?
                    }
                }
                LayerSpec::SkipConcat { from } => tape.concat(&[cur, nodes[*from]])?,
            };
            nodes.push(out);
        }
        let g = *nodes.last().unwrap();
        let out = if self.spec.residual && !opts.linearize { tape.sub(x, g)? } else { g };
        Ok((out, pvars))
    }

    pub fn predict(&self, y: &Image, opts: ForwardOptions) -> Result<Image> {
        let mut tape = Tape::new();
        let x = tape.leaf(y.clone());
        let (out, _) = self.forward_tape(&mut tape, x, opts)?;
        Ok(tape.value(out).clone())
    }

    /// MSE of the prediction against `target`; adds the parameter gradients to the store.
    pub fn accumulate_gradients(&mut self, input: &Image, target: &Image, opts: ForwardOptions) -> Result<f64> {
        let mut tape = Tape::new();
        let x = tape.leaf(input.clone());
        let t = tape.leaf(target.clone());
        let (out, pvars) = self.forward_tape(&mut tape, x, opts)?;
        let loss = tape.mse(out, t)?;
        let value = tape.value(loss).data()[0];
        let grads = tape.backward(loss)?;
        for (p, v) in self.store.params.iter_mut().zip(pvars) {
            if grads.is_connected(v) {
                p.grad.axpy(1.0, &grads.get(v))?;
            }
        }
        Ok(value)
    }
}

fn tile_rows(k: &Tensor4, rows: usize) -> Result<Tensor4> {
    let copies = rows / k.n_rows();
    Tensor4::concat_rows(&vec![k; copies])
}

fn resample(tape: &mut Tape, x: Var, direction: Direction, kind: ResampleKind, s: usize) -> Result<Var> {
    let bands = match kind {
        ResampleKind::Plain => {
            return match direction {
                Direction::Down => tape.down(x, s),
                Direction::Up => tape.up(x, s),
            }
        }
        ResampleKind::DwtLow => BandSet::LOW,
        ResampleKind::DwtFull => BandSet::FULL,
        ResampleKind::DwtHigh => BandSet::HIGH,
    };
    match direction {
        Direction::Down => tape.haar_analysis(x, bands),
        Direction::Up => tape.haar_synthesis(x, bands),
    }
}
