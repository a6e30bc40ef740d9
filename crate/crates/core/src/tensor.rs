//! Dense 4-D tensors with circular convolution and factor-s resampling.
//!
//! Dims are `(rows, cols, v, h)`. For filter banks rows are output channels and
//! cols input channels; for signals rows are channels and cols hold independent
//! columns (1 for an ordinary image, C for the identity tensor).

use crate::error::{config_err, shape_err, Result};
use serde::{Deserialize, Serialize};
use std::sync::atomic::{AtomicUsize, Ordering};

static THREADS: AtomicUsize = AtomicUsize::new(1);

/// Sets the number of worker threads used by the convolutions. Output values are
/// computed in the same order whatever the count, so results do not depend on it.
pub fn set_threads(n: usize) {
    THREADS.store(n.max(1), Ordering::Relaxed);
}

pub fn threads() -> usize {
    THREADS.load(Ordering::Relaxed)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tensor4 {
    dims: [usize; 4],
    data: Vec<f64>,
}

/// A single-channel image, dims `(1, 1, n_r, n_c)`.
pub type Image = Tensor4;

impl Tensor4 {
    pub fn new(dims: [usize; 4], data: Vec<f64>) -> Result<Self> {
        let n: usize = dims.iter().product();
        if data.len() != n {
            return Err(shape_err!("dims {:?} need {} values, got {}", dims, n, data.len()));
        }
        Ok(Self { dims, data })
    }

    pub fn zeros(dims: [usize; 4]) -> Self {
        Self { dims, data: vec![0.0; dims.iter().product()] }
    }

    pub fn filled(dims: [usize; 4], value: f64) -> Self {
        Self { dims, data: vec![value; dims.iter().product()] }
    }

    pub fn from_fn(dims: [usize; 4], mut f: impl FnMut(usize, usize, usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(dims.iter().product());
        for r in 0..dims[0] {
            for c in 0..dims[1] {
                for y in 0..dims[2] {
                    for x in 0..dims[3] {
                        data.push(f(r, c, y, x));
                    }
                }
            }
        }
        Self { dims, data }
    }

    /// Image of `n_r` rows by `n_c` columns from row-major pixels.
    pub fn image(n_r: usize, n_c: usize, pixels: Vec<f64>) -> Result<Self> {
        Self::new([1, 1, n_r, n_c], pixels)
    }

    /// Kronecker delta kernel of odd spatial size `n`: 1 at the center tap.
    pub fn delta(n: usize) -> Self {
        let mut t = Self::zeros([1, 1, n, n]);
        t.set(0, 0, n / 2, n / 2, 1.0);
        t
    }

    /// Identity tensor 𝐈 with `c` channels: a (c, c, n, n) stack of deltas on the diagonal.
    pub fn identity(c: usize, n: usize) -> Self {
        let mut t = Self::zeros([c, c, n, n]);
        for i in 0..c {
            t.set(i, i, n / 2, n / 2, 1.0);
        }
        t
    }

    pub fn dims(&self) -> [usize; 4] {
        self.dims
    }
    pub fn n_rows(&self) -> usize {
        self.dims[0]
    }
    pub fn n_cols(&self) -> usize {
        self.dims[1]
    }
    pub fn n_v(&self) -> usize {
        self.dims[2]
    }
    pub fn n_h(&self) -> usize {
        self.dims[3]
    }
    pub fn len(&self) -> usize {
        self.data.len()
    }
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }
    pub fn data(&self) -> &[f64] {
        &self.data
    }
    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }
    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    fn offset(&self, r: usize, c: usize, y: usize, x: usize) -> usize {
        ((r * self.dims[1] + c) * self.dims[2] + y) * self.dims[3] + x
    }

    pub fn get(&self, r: usize, c: usize, y: usize, x: usize) -> f64 {
        self.data[self.offset(r, c, y, x)]
    }

    pub fn set(&mut self, r: usize, c: usize, y: usize, x: usize, v: f64) {
        let o = self.offset(r, c, y, x);
        self.data[o] = v;
    }

    /// Spatial plane of entry (r, c).
    pub fn plane(&self, r: usize, c: usize) -> &[f64] {
        let n = self.dims[2] * self.dims[3];
        let o = (r * self.dims[1] + c) * n;
        &self.data[o..o + n]
    }

    pub fn plane_mut(&mut self, r: usize, c: usize) -> &mut [f64] {
        let n = self.dims[2] * self.dims[3];
        let o = (r * self.dims[1] + c) * n;
        &mut self.data[o..o + n]
    }

    pub fn reshape(mut self, dims: [usize; 4]) -> Result<Self> {
        if dims.iter().product::<usize>() != self.data.len() {
            return Err(shape_err!("cannot reshape {:?} into {:?}", self.dims, dims));
        }
        self.dims = dims;
        Ok(self)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self { dims: self.dims, data: self.data.iter().map(|&v| f(v)).collect() }
    }

    pub fn scale(&self, a: f64) -> Self {
        self.map(|v| v * a)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip(other, |a, b| a - b)
    }

    pub fn zip(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.same_dims(other)?;
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect();
        Ok(Self { dims: self.dims, data })
    }

    /// `self += a * other`
    pub fn axpy(&mut self, a: f64, other: &Self) -> Result<()> {
        self.same_dims(other)?;
        for (s, &o) in self.data.iter_mut().zip(&other.data) {
            *s += a * o;
        }
        Ok(())
    }

    pub fn dot(&self, other: &Self) -> Result<f64> {
        self.same_dims(other)?;
        Ok(self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum())
    }

    pub fn norm_sq(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    pub fn mean(&self) -> f64 {
        if self.data.is_empty() {
            0.0
        } else {
            self.sum() / self.data.len() as f64
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        self.same_dims(other)?;
        Ok(self.data.iter().zip(&other.data).fold(0.0, |m, (a, b)| m.max((a - b).abs())))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn same_dims(&self, other: &Self) -> Result<()> {
        if self.dims != other.dims {
            return Err(shape_err!("dims {:?} and {:?} differ", self.dims, other.dims));
        }
        Ok(())
    }

    /// Mirrors every filter through its center tap.
    pub fn flip_spatial(&self) -> Self {
        let [_, _, v, h] = self.dims;
        Self::from_fn(self.dims, |r, c, y, x| self.get(r, c, v - 1 - y, h - 1 - x))
    }

    /// Stacks tensors along the row (channel) axis.
    pub fn concat_rows(parts: &[&Self]) -> Result<Self> {
        let first = parts.first().ok_or_else(|| shape_err!("nothing to concatenate"))?;
        let [_, c, v, h] = first.dims;
        let mut rows = 0;
        let mut data = Vec::new();
        for p in parts {
            if p.dims[1..] != [c, v, h] {
                return Err(shape_err!("cannot stack {:?} onto {:?}", p.dims, first.dims));
            }
            rows += p.dims[0];
            data.extend_from_slice(&p.data);
        }
        Ok(Self { dims: [rows, c, v, h], data })
    }

    /// Rows `start..start + n` as a new tensor.
    pub fn slice_rows(&self, start: usize, n: usize) -> Result<Self> {
        if start + n > self.dims[0] {
            return Err(shape_err!("rows {}..{} out of {}", start, start + n, self.dims[0]));
        }
        let per = self.dims[1] * self.dims[2] * self.dims[3];
        Ok(Self {
            dims: [n, self.dims[1], self.dims[2], self.dims[3]],
            data: self.data[start * per..(start + n) * per].to_vec(),
        })
    }
}

/// A plane extended circularly by `pv` rows and `ph` columns on each side.
struct Padded {
    data: Vec<f64>,
    pv: usize,
    pw: usize,
}

impl Padded {
    fn new(p: &[f64], h: usize, w: usize, pv: usize, ph: usize) -> Self {
        let pw = w + 2 * ph;
        let mut data = Vec::with_capacity((h + 2 * pv) * pw);
        for yy in 0..h + 2 * pv {
            let y = (yy as isize - pv as isize).rem_euclid(h as isize) as usize;
            let row = &p[y * w..y * w + w];
            data.extend((0..pw).map(|xx| row[(xx as isize - ph as isize).rem_euclid(w as isize) as usize]));
        }
        Self { data, pv, pw }
    }

    /// Padded row for image row `y` (may lie in the halo), starting at column -ph.
    fn row(&self, y: isize) -> &[f64] {
        let r = (y + self.pv as isize) as usize;
        &self.data[r * self.pw..(r + 1) * self.pw]
    }
}

fn pad_all(t: &Tensor4, pv: usize, ph: usize) -> Vec<Padded> {
    let [r, c, h, w] = t.dims();
    (0..r).flat_map(|i| (0..c).map(move |m| (i, m))).map(|(i, m)| Padded::new(t.plane(i, m), h, w, pv, ph)).collect()
}

/// `dst[x] += Σ a·src[x + off]` over the given taps.
fn fused_row(dst: &mut [f64], src: &[f64], taps: &[(usize, f64)]) {
    let w = dst.len();
    if let [(o0, a0), (o1, a1), (o2, a2)] = *taps {
        let (s0, s1, s2) = (&src[o0..o0 + w], &src[o1..o1 + w], &src[o2..o2 + w]);
        for x in 0..w {
            dst[x] += a0 * s0[x] + a1 * s1[x] + a2 * s2[x];
        }
    } else {
        for &(o, a) in taps {
            for (d, s) in dst.iter_mut().zip(&src[o..o + w]) {
                *d += a * s;
            }
        }
    }
}

/// Adds the lane-wise products of `a` and `b` into four partial sums.
fn dot_lanes(lanes: &mut [f64; 4], a: &[f64], b: &[f64]) {
    let (ca, cb) = (a.chunks_exact(4), b.chunks_exact(4));
    for (x, y) in ca.remainder().iter().zip(cb.remainder()) {
        lanes[0] += x * y;
    }
    for (x, y) in ca.zip(cb) {
        for l in 0..4 {
            lanes[l] += x[l] * y[l];
        }
    }
}

/// Accumulates `Σ_u Σ_v f[u][v]·P[y + sign·(u - cv)][x + sign·(v - ch)]` into each output row.
fn correlate_plane(dst: &mut [f64], src: &Padded, filt: &[f64], kv: usize, kh: usize, w: usize, flip: bool) {
    let (cv, ch) = ((kv / 2) as isize, kh / 2);
    let mut taps = Vec::with_capacity(kh);
    for u in 0..kv {
        taps.clear();
        for v in 0..kh {
            let a = filt[u * kh + v];
            if a != 0.0 {
                taps.push((if flip { 2 * ch - v } else { v }, a));
            }
        }
        if taps.is_empty() {
            continue;
        }
        let du = u as isize - cv;
        for (y, row) in dst.chunks_mut(w).enumerate() {
            let sy = if flip { y as isize - du } else { y as isize + du };
            fused_row(row, src.row(sy), &taps);
        }
    }
}

/// `Σ_y Σ_x g[y][x]·P[y + sign·(u - cv)][x + sign·(v - ch)]` for every tap.
fn tap_dots(acc: &mut [f64], g: &[f64], src: &Padded, kv: usize, kh: usize, w: usize, flip: bool) {
    let (cv, ch) = ((kv / 2) as isize, kh / 2);
    let mut lanes = vec![[0.0; 4]; kv * kh];
    for (y, grow) in g.chunks(w).enumerate() {
        for u in 0..kv {
            let du = u as isize - cv;
            let srow = src.row(if flip { y as isize - du } else { y as isize + du });
            for v in 0..kh {
                let o = if flip { 2 * ch - v } else { v };
                dot_lanes(&mut lanes[u * kh + v], grow, &srow[o..o + w]);
            }
        }
    }
    for (a, l) in acc.iter_mut().zip(&lanes) {
        *a += (l[0] + l[1]) + (l[2] + l[3]);
    }
}

fn check_odd(k: &Tensor4) -> Result<()> {
    if k.n_v() % 2 == 0 || k.n_h() % 2 == 0 {
        return Err(config_err!("kernel spatial dims must be odd, got {}x{}", k.n_v(), k.n_h()));
    }
    Ok(())
}

/// Runs `f(row, out_row_slice)` for every output row, spread over the configured threads.
fn par_rows(out: &mut Tensor4, f: impl Fn(usize, &mut [f64]) + Sync) {
    let rows = out.n_rows();
    let per = out.len() / rows.max(1);
    let n_threads = threads().min(rows).max(1);
    if n_threads == 1 || per * rows < 4096 {
        for (r, chunk) in out.data.chunks_mut(per.max(1)).enumerate() {
            f(r, chunk);
        }
        return;
    }
    let rows_per = rows.div_ceil(n_threads);
    std::thread::scope(|scope| {
        for (t, block) in out.data.chunks_mut(per * rows_per).enumerate() {
            let f = &f;
            scope.spawn(move || {
                for (i, chunk) in block.chunks_mut(per).enumerate() {
                    f(t * rows_per + i, chunk);
                }
            });
        }
    });
}

/// Tensor convolution 𝐀𝐐: kernel (O, I, kv, kh) with signal (I, M, H, W) gives (O, M, H, W).
///
/// `out[o][m] = Σ_i k[o][i] ⊛ s[i][m]`, circular, kernel center at index n/2.
pub fn conv2d(kernel: &Tensor4, signal: &Tensor4) -> Result<Tensor4> {
    check_odd(kernel)?;
    if kernel.n_cols() != signal.n_rows() {
        return Err(shape_err!(
            "kernel {:?} cannot contract with signal {:?}",
            kernel.dims(),
            signal.dims()
        ));
    }
    let [o_n, i_n, kv, kh] = kernel.dims();
    let [_, m_n, h, w] = signal.dims();
    let padded = pad_all(signal, kv / 2, kh / 2);
    let mut out = Tensor4::zeros([o_n, m_n, h, w]);
    let hw = h * w;
    par_rows(&mut out, |o, out_row| {
        for i in 0..i_n {
            let filt = kernel.plane(o, i);
            for m in 0..m_n {
                correlate_plane(&mut out_row[m * hw..(m + 1) * hw], &padded[i * m_n + m], filt, kv, kh, w, true);
            }
        }
    });
    Ok(out)
}

/// Transpose convolution 𝐊ᵀ𝐐: kernel (O, I, kv, kh) with signal (O, M, H, W) gives (I, M, H, W).
///
/// Exact adjoint of [`conv2d`]; equals `conv2d(flip(transpose(k)), s)`.
pub fn conv2d_adjoint(kernel: &Tensor4, signal: &Tensor4) -> Result<Tensor4> {
    check_odd(kernel)?;
    if kernel.n_rows() != signal.n_rows() {
        return Err(shape_err!(
            "kernel {:?} cannot apply transposed to signal {:?}",
            kernel.dims(),
            signal.dims()
        ));
    }
    let [o_n, i_n, kv, kh] = kernel.dims();
    let [_, m_n, h, w] = signal.dims();
    let padded = pad_all(signal, kv / 2, kh / 2);
    let mut out = Tensor4::zeros([i_n, m_n, h, w]);
    let hw = h * w;
    par_rows(&mut out, |i, out_row| {
        for o in 0..o_n {
            let filt = kernel.plane(o, i);
            for m in 0..m_n {
                correlate_plane(&mut out_row[m * hw..(m + 1) * hw], &padded[o * m_n + m], filt, kv, kh, w, false);
            }
        }
    });
    Ok(out)
}

/// Gradient of `⟨g, conv2d(k, s)⟩` with respect to a kernel of spatial size `kv x kh`.
pub fn conv2d_kernel_grad(g: &Tensor4, signal: &Tensor4, kv: usize, kh: usize) -> Result<Tensor4> {
    if g.n_cols() != signal.n_cols() || g.dims()[2..] != signal.dims()[2..] {
        return Err(shape_err!("gradient {:?} and signal {:?} disagree", g.dims(), signal.dims()));
    }
    let (o_n, i_n, m_n) = (g.n_rows(), signal.n_rows(), g.n_cols());
    let w = g.n_h();
    let padded = pad_all(signal, kv / 2, kh / 2);
    let mut out = Tensor4::zeros([o_n, i_n, kv, kh]);
    par_rows(&mut out, |o, row| {
        for (i, acc) in row.chunks_mut(kv * kh).enumerate() {
            for m in 0..m_n {
                tap_dots(acc, g.plane(o, m), &padded[i * m_n + m], kv, kh, w, true);
            }
        }
    });
    Ok(out)
}

/// Gradient of `⟨g, conv2d_adjoint(k, s)⟩` with respect to a kernel of spatial size `kv x kh`.
pub fn conv2d_adjoint_kernel_grad(g: &Tensor4, signal: &Tensor4, kv: usize, kh: usize) -> Result<Tensor4> {
    if g.n_cols() != signal.n_cols() || g.dims()[2..] != signal.dims()[2..] {
        return Err(shape_err!("gradient {:?} and signal {:?} disagree", g.dims(), signal.dims()));
    }
    let (i_n, o_n, m_n) = (g.n_rows(), signal.n_rows(), g.n_cols());
    let w = g.n_h();
    let padded = pad_all(signal, kv / 2, kh / 2);
    let mut out = Tensor4::zeros([o_n, i_n, kv, kh]);
    par_rows(&mut out, |o, row| {
        for (i, acc) in row.chunks_mut(kv * kh).enumerate() {
            for m in 0..m_n {
                tap_dots(acc, g.plane(i, m), &padded[o * m_n + m], kv, kh, w, false);
            }
        }
    });
    Ok(out)
}

/// Swaps the row and column axes, leaving each filter's taps in place.
pub fn tensor_transpose(t: &Tensor4) -> Tensor4 {
    let [r, c, v, h] = t.dims();
    let mut out = Tensor4::zeros([c, r, v, h]);
    for i in 0..r {
        for j in 0..c {
            out.plane_mut(j, i).copy_from_slice(t.plane(i, j));
        }
    }
    out
}

/// Keeps the samples at indices ≡ 0 (mod s) on both spatial axes.
pub fn downsample(signal: &Tensor4, s: usize) -> Result<Tensor4> {
    downsample_axes(signal, s, s)
}

/// Decimation with separate vertical and horizontal factors.
pub fn downsample_axes(signal: &Tensor4, sv: usize, sh: usize) -> Result<Tensor4> {
    let [r, c, h, w] = signal.dims();
    if sv == 0 || sh == 0 || h % sv != 0 || w % sh != 0 {
        return Err(shape_err!("{}x{} is not divisible by factors ({}, {})", h, w, sv, sh));
    }
    let (ho, wo) = (h / sv, w / sh);
    let mut out = Tensor4::zeros([r, c, ho, wo]);
    for i in 0..r {
        for j in 0..c {
            let src = signal.plane(i, j);
            let dst = out.plane_mut(i, j);
            for y in 0..ho {
                for x in 0..wo {
                    dst[y * wo + x] = src[y * sv * w + x * sh];
                }
            }
        }
    }
    Ok(out)
}

/// Inserts s - 1 zeros after every sample on both spatial axes.
pub fn upsample(signal: &Tensor4, s: usize) -> Result<Tensor4> {
    upsample_axes(signal, s, s)
}

pub fn upsample_axes(signal: &Tensor4, sv: usize, sh: usize) -> Result<Tensor4> {
    if sv == 0 || sh == 0 {
        return Err(config_err!("upsampling factor must be positive"));
    }
    let [r, c, h, w] = signal.dims();
    let (ho, wo) = (h * sv, w * sh);
    let mut out = Tensor4::zeros([r, c, ho, wo]);
    for i in 0..r {
        for j in 0..c {
            let src = signal.plane(i, j);
            let dst = out.plane_mut(i, j);
            for y in 0..h {
                for x in 0..w {
                    dst[y * sv * wo + x * sh] = src[y * w + x];
                }
            }
        }
    }
    Ok(out)
}

/// Magnitude of the unnormalized 2-D DFT of each plane, DC at (0, 0).
pub fn dft_magnitude(signal: &Tensor4) -> Tensor4 {
    let [r, c, h, w] = signal.dims();
    let twiddles = |n: usize| -> Vec<(f64, f64)> {
        (0..n)
            .map(|k| {
                let a = -2.0 * std::f64::consts::PI * k as f64 / n as f64;
                (a.cos(), a.sin())
            })
            .collect()
    };
    let (tv, th) = (twiddles(h), twiddles(w));
    let mut out = Tensor4::zeros([r, c, h, w]);
    for i in 0..r {
        for j in 0..c {
            let p = signal.plane(i, j);
            // rows first, then columns
            let mut re = vec![0.0; h * w];
            let mut im = vec![0.0; h * w];
            for y in 0..h {
                for kx in 0..w {
                    let (mut sr, mut si) = (0.0, 0.0);
                    for x in 0..w {
                        let (cr, ci) = th[(kx * x) % w];
                        sr += p[y * w + x] * cr;
                        si += p[y * w + x] * ci;
                    }
                    re[y * w + kx] = sr;
                    im[y * w + kx] = si;
                }
            }
            let dst = out.plane_mut(i, j);
            for ky in 0..h {
                for kx in 0..w {
                    let (mut sr, mut si) = (0.0, 0.0);
                    for y in 0..h {
                        let (cr, ci) = tv[(ky * y) % h];
                        let (ar, ai) = (re[y * w + kx], im[y * w + kx]);
                        sr += ar * cr - ai * ci;
                        si += ar * ci + ai * cr;
                    }
                    dst[ky * w + kx] = sr.hypot(si);
                }
            }
        }
    }
    out
}

/// Checks the image invariant: single channel, even spatial dims of at least 2.
pub fn check_image(x: &Tensor4) -> Result<()> {
    let [r, c, h, w] = x.dims();
    if r != 1 || c != 1 {
        return Err(shape_err!("image must be 1x1xHxW, got {:?}", x.dims()));
    }
    if h < 2 || w < 2 || h % 2 != 0 || w % 2 != 0 {
        return Err(shape_err!("image dims must be even and at least 2, got {}x{}", h, w));
    }
    Ok(())
}
