//! Eager tape: every op computes its value immediately and records enough to
//! replay the chain rule backwards.

use crate::activations::ActivationSpec;
use crate::error::{shape_err, Result};
use crate::framelets::haar_filters;
use crate::tensor::{
    conv2d, conv2d_adjoint, conv2d_adjoint_kernel_grad, conv2d_kernel_grad, downsample, tensor_transpose,
    upsample, Tensor4,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(pub usize);

/// Which Haar bands a depthwise transform keeps, in LL, LH, HL, HH order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BandSet(pub [bool; 4]);

impl BandSet {
    pub const FULL: BandSet = BandSet([true; 4]);
    pub const LOW: BandSet = BandSet([true, false, false, false]);
    pub const HIGH: BandSet = BandSet([false, true, true, true]);

    pub fn count(&self) -> usize {
        self.0.iter().filter(|b| **b).count()
    }

    fn filters(&self) -> Tensor4 {
        let w = haar_filters();
        let rows: Vec<Tensor4> = (0..4).filter(|&b| self.0[b]).map(|b| w.slice_rows(b, 1).unwrap()).collect();
        Tensor4::concat_rows(&rows.iter().collect::<Vec<_>>()).unwrap()
    }
}

/// Depthwise decimated Haar analysis: (C, M, H, W) to (nb·C, M, H/2, W/2), band-major.
pub fn haar_analysis(x: &Tensor4, bands: BandSet) -> Result<Tensor4> {
    let [c, m, h, w] = x.dims();
    let flat = x.clone().reshape([1, c * m, h, w])?;
    let y = downsample(&conv2d(&bands.filters(), &flat)?, 2)?;
    y.reshape([bands.count() * c, m, h / 2, w / 2])
}

/// Adjoint (and, for the full band set, inverse) of [`haar_analysis`].
pub fn haar_synthesis(y: &Tensor4, bands: BandSet) -> Result<Tensor4> {
    let nb = bands.count();
    let [r, m, h, w] = y.dims();
    if r % nb != 0 {
        return Err(shape_err!("{} rows do not split into {} bands", r, nb));
    }
    let c = r / nb;
    let flat = upsample(&y.clone().reshape([nb, c * m, h, w])?, 2)?;
    conv2d_adjoint(&bands.filters(), &flat)?.reshape([c, m, 2 * h, 2 * w])
}

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    Conv { k: Var, x: Var },
    ConvT { k: Var, x: Var },
    Transpose(Var),
    Down { x: Var, s: usize },
    Up { x: Var, s: usize },
    AddBias { x: Var, b: Var },
    Act { x: Var, spec: ActivationSpec },
    Add(Var, Var),
    Sub(Var, Var),
    Scale(Var, f64),
    Concat(Vec<Var>),
    Mse { a: Var, target: Var },
    HaarAnalysis { x: Var, bands: BandSet },
    HaarSynthesis { x: Var, bands: BandSet },
}

#[derive(Debug, Clone)]
struct Node {
    op: Op,
    value: Tensor4,
}

#[derive(Debug, Default, Clone)]
pub struct Tape {
    nodes: Vec<Node>,
}

/// Gradients of the leaves; leaves the loss does not reach have none.
#[derive(Debug, Clone)]
pub struct Gradients {
    grads: Vec<Option<Tensor4>>,
    dims: Vec<[usize; 4]>,
}

impl Gradients {
    /// Gradient of `v`, zeros when the loss does not depend on it.
    pub fn get(&self, v: Var) -> Tensor4 {
        self.grads[v.0].clone().unwrap_or_else(|| Tensor4::zeros(self.dims[v.0]))
    }

    pub fn is_connected(&self, v: Var) -> bool {
        self.grads[v.0].is_some()
    }
}

fn accumulate(slot: &mut Option<Tensor4>, g: Tensor4) {
    match slot {
        Some(acc) => acc.axpy(1.0, &g).expect("gradient dims"),
        None => *slot = Some(g),
    }
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &Tensor4 {
        &self.nodes[v.0].value
    }

    fn push(&mut self, op: Op, value: Tensor4) -> Var {
        self.nodes.push(Node { op, value });
        Var(self.nodes.len() - 1)
    }

    pub fn leaf(&mut self, value: Tensor4) -> Var {
        self.push(Op::Leaf, value)
    }

    pub fn conv(&mut self, k: Var, x: Var) -> Result<Var> {
        let v = conv2d(self.value(k), self.value(x))?;
        Ok(self.push(Op::Conv { k, x }, v))
    }

    /// Transpose convolution K̃ᵀ x with K̃ stored in encoder orientation.
    pub fn conv_t(&mut self, k: Var, x: Var) -> Result<Var> {
        let v = conv2d_adjoint(self.value(k), self.value(x))?;
        Ok(self.push(Op::ConvT { k, x }, v))
    }

    pub fn transpose(&mut self, x: Var) -> Var {
        let v = tensor_transpose(self.value(x));
        self.push(Op::Transpose(x), v)
    }

    pub fn down(&mut self, x: Var, s: usize) -> Result<Var> {
        let v = downsample(self.value(x), s)?;
        Ok(self.push(Op::Down { x, s }, v))
    }

    pub fn up(&mut self, x: Var, s: usize) -> Result<Var> {
        let v = upsample(self.value(x), s)?;
        Ok(self.push(Op::Up { x, s }, v))
    }

    /// Adds b[c] (dims (C, 1, 1, 1)) to every entry of row c.
    pub fn add_bias(&mut self, x: Var, b: Var) -> Result<Var> {
        let (xv, bv) = (self.value(x), self.value(b));
        if bv.len() != xv.n_rows() {
            return Err(shape_err!("bias of {} values for {} channels", bv.len(), xv.n_rows()));
        }
        let mut v = xv.clone();
        let per = v.len() / v.n_rows().max(1);
        for (r, chunk) in v.data_mut().chunks_mut(per.max(1)).enumerate() {
            let add = bv.data()[r];
            chunk.iter_mut().for_each(|z| *z += add);
        }
        Ok(self.push(Op::AddBias { x, b }, v))
    }

    pub fn act(&mut self, x: Var, spec: &ActivationSpec) -> Result<Var> {
        let v = spec.apply(self.value(x))?;
        Ok(self.push(Op::Act { x, spec: spec.clone() }, v))
    }

    pub fn relu(&mut self, x: Var) -> Result<Var> {
        self.act(x, &ActivationSpec::relu())
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let v = self.value(a).add(self.value(b))?;
        Ok(self.push(Op::Add(a, b), v))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        let v = self.value(a).sub(self.value(b))?;
        Ok(self.push(Op::Sub(a, b), v))
    }

    pub fn scale(&mut self, x: Var, a: f64) -> Var {
        let v = self.value(x).scale(a);
        self.push(Op::Scale(x, a), v)
    }

    pub fn concat(&mut self, parts: &[Var]) -> Result<Var> {
        let vals: Vec<&Tensor4> = parts.iter().map(|p| self.value(*p)).collect();
        let v = Tensor4::concat_rows(&vals)?;
        Ok(self.push(Op::Concat(parts.to_vec()), v))
    }

    /// Mean squared error, a (1, 1, 1, 1) scalar.
    pub fn mse(&mut self, a: Var, target: Var) -> Result<Var> {
        let d = self.value(a).sub(self.value(target))?;
        let v = Tensor4::new([1, 1, 1, 1], vec![d.norm_sq() / d.len() as f64])?;
        Ok(self.push(Op::Mse { a, target }, v))
    }

    pub fn haar_analysis(&mut self, x: Var, bands: BandSet) -> Result<Var> {
        let v = haar_analysis(self.value(x), bands)?;
        Ok(self.push(Op::HaarAnalysis { x, bands }, v))
    }

    pub fn haar_synthesis(&mut self, x: Var, bands: BandSet) -> Result<Var> {
        let v = haar_synthesis(self.value(x), bands)?;
        Ok(self.push(Op::HaarSynthesis { x, bands }, v))
    }

    /// Reverse sweep from a scalar `loss`.
    pub fn backward(&self, loss: Var) -> Result<Gradients> {
        if self.value(loss).len() != 1 {
            return Err(shape_err!("loss must be a scalar, got {:?}", self.value(loss).dims()));
        }
        let mut grads: Vec<Option<Tensor4>> = vec![None; self.nodes.len()];
        grads[loss.0] = Some(Tensor4::filled(self.value(loss).dims(), 1.0));
        for i in (0..=loss.0).rev() {
            let Some(g) = grads[i].take() else { continue };
            let node = &self.nodes[i];
            match &node.op {
                Op::Leaf => grads[i] = Some(g),
                Op::Conv { k, x } => {
                    let kd = self.value(*k).dims();
                    accumulate(&mut grads[k.0], conv2d_kernel_grad(&g, self.value(*x), kd[2], kd[3])?);
                    accumulate(&mut grads[x.0], conv2d_adjoint(self.value(*k), &g)?);
                }
                Op::ConvT { k, x } => {
                    let kd = self.value(*k).dims();
                    accumulate(&mut grads[k.0], conv2d_adjoint_kernel_grad(&g, self.value(*x), kd[2], kd[3])?);
                    accumulate(&mut grads[x.0], conv2d(self.value(*k), &g)?);
                }
                Op::Transpose(x) => accumulate(&mut grads[x.0], tensor_transpose(&g)),
                Op::Down { x, s } => accumulate(&mut grads[x.0], upsample(&g, *s)?),
                Op::Up { x, s } => accumulate(&mut grads[x.0], downsample(&g, *s)?),
                Op::AddBias { x, b } => {
                    let per = g.len() / g.n_rows().max(1);
                    let gb: Vec<f64> = g.data().chunks(per.max(1)).map(|c| c.iter().sum()).collect();
                    let gb = Tensor4::new(self.value(*b).dims(), gb)?;
                    accumulate(&mut grads[b.0], gb);
                    accumulate(&mut grads[x.0], g);
                }
                Op::Act { x, spec } => {
                    let d = spec.derivative(self.value(*x))?;
                    accumulate(&mut grads[x.0], g.zip(&d, |a, b| a * b)?);
                }
                Op::Add(a, b) => {
                    accumulate(&mut grads[b.0], g.clone());
                    accumulate(&mut grads[a.0], g);
                }
                Op::Sub(a, b) => {
                    accumulate(&mut grads[b.0], g.scale(-1.0));
                    accumulate(&mut grads[a.0], g);
                }
                Op::Scale(x, a) => accumulate(&mut grads[x.0], g.scale(*a)),
                Op::Concat(parts) => {
                    let mut start = 0;
                    for p in parts {
                        let n = self.value(*p).n_rows();
                        accumulate(&mut grads[p.0], g.slice_rows(start, n)?);
                        start += n;
                    }
                }
                Op::Mse { a, target } => {
                    let d = self.value(*a).sub(self.value(*target))?;
                    let f = 2.0 * g.data()[0] / d.len() as f64;
                    accumulate(&mut grads[target.0], d.scale(-f));
                    accumulate(&mut grads[a.0], d.scale(f));
                }
                Op::HaarAnalysis { x, bands } => accumulate(&mut grads[x.0], haar_synthesis(&g, *bands)?),
                Op::HaarSynthesis { x, bands } => accumulate(&mut grads[x.0], haar_analysis(&g, *bands)?),
            }
        }
        Ok(Gradients { grads, dims: self.nodes.iter().map(|n| n.value.dims()).collect() })
    }
}
