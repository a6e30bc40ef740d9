//! Singular value decomposition by one-sided Jacobi rotations and low-rank
//! approximation of whole images.

use crate::error::{shape_err, Error, Result};
use crate::experiments::noise::{add_noise, NoiseModel};
use crate::experiments::metrics::snr_db;
use crate::tensor::{Image, Tensor4};
use serde::{Deserialize, Serialize};

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(shape_err!("{}x{} matrix needs {} values, got {}", rows, cols, rows * cols, data.len()));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn column(&self, c: usize) -> Vec<f64> {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t.set(c, r, self.get(r, c));
            }
        }
        t
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(shape_err!("cannot multiply {}x{} by {}x{}", self.rows, self.cols, other.rows, other.cols));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                for j in 0..other.cols {
                    out.data[i * other.cols + j] += a * other.get(k, j);
                }
            }
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        if (self.rows, self.cols) != (other.rows, other.cols) {
            return Err(shape_err!("matrix dims differ"));
        }
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        Ok(Self { rows: self.rows, cols: self.cols, data })
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn from_image(x: &Image) -> Result<Self> {
        if x.n_rows() != 1 || x.n_cols() != 1 {
            return Err(shape_err!("expected a single-channel image, got {:?}", x.dims()));
        }
        Self::new(x.n_v(), x.n_h(), x.data().to_vec())
    }

    pub fn to_image(&self) -> Image {
        Tensor4::new([1, 1, self.rows, self.cols], self.data.clone()).expect("matrix dims")
    }
}

/// Thin SVD y = U diag(σ) Vᵀ with k = min(m, n) columns in U and V.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvdFactors {
    /// m x k, columns u_n.
    pub u: Matrix,
    /// n x k, columns v_n.
    pub v: Matrix,
    /// Nonincreasing, nonnegative.
    pub sigma: Vec<f64>,
}

impl SvdFactors {
    pub fn n_sv(&self) -> usize {
        self.sigma.len()
    }

    pub fn reconstruct(&self) -> Matrix {
        self.partial(self.n_sv())
    }

    fn partial(&self, rank: usize) -> Matrix {
        let (m, n) = (self.u.rows, self.v.rows);
        let mut out = Matrix::zeros(m, n);
        for k in 0..rank {
            let s = self.sigma[k];
            for i in 0..m {
                let a = self.u.get(i, k) * s;
                if a == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * self.v.get(j, k);
                }
            }
        }
        out
    }
}

const MAX_SWEEPS: usize = 80;

/// Hestenes one-sided Jacobi on columns; requires rows >= cols.
fn jacobi_tall(a: &Matrix) -> SvdFactors {
    let (m, n) = (a.rows, a.cols);
    let mut cols: Vec<Vec<f64>> = (0..n).map(|c| a.column(c)).collect();
    let mut v: Vec<Vec<f64>> = (0..n).map(|c| (0..n).map(|r| if r == c { 1.0 } else { 0.0 }).collect()).collect();
    let eps = 1e-15;
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let (mut alpha, mut beta, mut gamma) = (0.0, 0.0, 0.0);
                for i in 0..m {
                    alpha += cols[p][i] * cols[p][i];
                    beta += cols[q][i] * cols[q][i];
                    gamma += cols[p][i] * cols[q][i];
                }
                if gamma == 0.0 || gamma.abs() <= eps * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                let rotate = |vecs: &mut Vec<Vec<f64>>| {
                    let (lo, hi) = vecs.split_at_mut(q);
                    for (x, y) in lo[p].iter_mut().zip(hi[0].iter_mut()) {
                        let (xp, yq) = (*x, *y);
                        *x = c * xp - s * yq;
                        *y = s * xp + c * yq;
                    }
                };
                rotate(&mut cols);
                rotate(&mut v);
            }
        }
        if !rotated {
            break;
        }
    }
    let norms: Vec<f64> = cols.iter().map(|c| c.iter().map(|x| x * x).sum::<f64>().sqrt()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]).then(i.cmp(&j)));
    let scale = norms.iter().cloned().fold(0.0, f64::max);
    let tiny = scale * 1e-14 * (m.max(n) as f64);

    let mut u_cols: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut v_cols: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut sigma = Vec::with_capacity(n);
    let mut missing = Vec::new();
    for &j in &order {
        let s = norms[j];
        if s > tiny && s > 0.0 {
            u_cols.push(cols[j].iter().map(|x| x / s).collect());
            sigma.push(s);
        } else {
            missing.push(u_cols.len());
            u_cols.push(vec![0.0; m]);
            sigma.push(0.0);
        }
        v_cols.push(v[j].clone());
    }
    complete_basis(&mut u_cols, &missing);

    for k in 0..n {
        if let Some(first) = u_cols[k].iter().find(|x| x.abs() > 1e-12) {
            if *first < 0.0 {
                u_cols[k].iter_mut().for_each(|x| *x = -*x);
                v_cols[k].iter_mut().for_each(|x| *x = -*x);
            }
        }
    }
    let pack = |cs: &[Vec<f64>], rows: usize| {
        let mut mat = Matrix::zeros(rows, cs.len());
        for (c, col) in cs.iter().enumerate() {
            for (r, x) in col.iter().enumerate() {
                mat.set(r, c, *x);
            }
        }
        mat
    };
    SvdFactors { u: pack(&u_cols, m), v: pack(&v_cols, n), sigma }
}

/// Fills the listed columns with unit vectors orthogonal to all others (Gram-Schmidt on e_i).
fn complete_basis(cols: &mut [Vec<f64>], missing: &[usize]) {
    let m = cols.first().map_or(0, |c| c.len());
    let mut candidate = 0;
    for &slot in missing {
        while candidate < m {
            let mut e = vec![0.0; m];
            e[candidate] = 1.0;
            candidate += 1;
            for _ in 0..2 {
                for (k, col) in cols.iter().enumerate() {
                    if k == slot {
                        continue;
                    }
                    let d: f64 = col.iter().zip(&e).map(|(a, b)| a * b).sum();
                    e.iter_mut().zip(col).for_each(|(x, c)| *x -= d * c);
                }
            }
            let norm = e.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 1e-8 {
                cols[slot] = e.iter().map(|x| x / norm).collect();
                break;
            }
        }
    }
}

/// Deterministic thin SVD of any finite matrix.
pub fn svd(y: &Matrix) -> Result<SvdFactors> {
    if y.data.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("matrix has non-finite entries".into()));
    }
    if y.rows >= y.cols {
        Ok(jacobi_tall(y))
    } else {
        let f = jacobi_tall(&y.transpose());
        let mut out = SvdFactors { u: f.v, v: f.u, sigma: f.sigma };
        // restore the sign convention on the new U
        for k in 0..out.sigma.len() {
            let first = (0..out.u.rows).map(|r| out.u.get(r, k)).find(|x| x.abs() > 1e-12);
            if first.is_some_and(|x| x < 0.0) {
                for r in 0..out.u.rows {
                    out.u.set(r, k, -out.u.get(r, k));
                }
                for r in 0..out.v.rows {
                    out.v.set(r, k, -out.v.get(r, k));
                }
            }
        }
        Ok(out)
    }
}

/// Σ_{n < N_LR} u_n v_nᵀ σ[n].
pub fn lowrank_approx(f: &SvdFactors, n_lr: usize) -> Result<Matrix> {
    if n_lr == 0 || n_lr > f.n_sv() {
        return Err(Error::Domain(format!("rank {} outside 1..={}", n_lr, f.n_sv())));
    }
    Ok(f.partial(n_lr))
}

/// Frobenius error predicted by the discarded singular values.
pub fn tail_energy(f: &SvdFactors, n_lr: usize) -> f64 {
    f.sigma[n_lr.min(f.n_sv())..].iter().map(|s| s * s).sum::<f64>().sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankRow {
    pub rank: usize,
    /// Reconstruction of the clean image against the clean image.
    pub snr_clean: f64,
    /// Reconstruction of the noisy image against the clean image.
    pub snr_noisy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LowRankReport {
    pub sigma: f64,
    pub noisy_input_snr: f64,
    pub rows: Vec<RankRow>,
    #[serde(skip)]
    pub noisy: Option<Image>,
    #[serde(skip)]
    pub clean_reconstructions: Vec<Image>,
    #[serde(skip)]
    pub noisy_reconstructions: Vec<Image>,
}

/// Truncated-SVD reconstructions of a clean image and a noisy copy at each rank.
pub fn lowrank_denoise_demo(x: &Image, sigma: f64, ranks: &[usize], seed: u64) -> Result<LowRankReport> {
    let noisy = add_noise(x, &NoiseModel { sigma_eta: sigma, seed })?;
    let fc = svd(&Matrix::from_image(x)?)?;
    let fnz = svd(&Matrix::from_image(&noisy)?)?;
    let mut report = LowRankReport {
        sigma,
        noisy_input_snr: snr_db(x, &noisy)?,
        rows: Vec::new(),
        noisy: Some(noisy),
        clean_reconstructions: Vec::new(),
        noisy_reconstructions: Vec::new(),
    };
    for &rank in ranks {
        let rc = lowrank_approx(&fc, rank)?.to_image();
        let rn = lowrank_approx(&fnz, rank)?.to_image();
        report.rows.push(RankRow { rank, snr_clean: snr_db(x, &rc)?, snr_noisy: snr_db(x, &rn)? });
        report.clean_reconstructions.push(rc);
        report.noisy_reconstructions.push(rn);
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(m: usize, n: usize, seed: u64) -> Matrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Matrix::new(m, n, (0..m * n).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap()
    }

    fn orthonormality_error(q: &Matrix) -> f64 {
        let g = q.transpose().matmul(q).unwrap();
        g.sub(&Matrix::identity(q.cols)).unwrap().data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    #[test]
    fn identity_has_unit_singular_values() {
        let f = svd(&Matrix::identity(4)).unwrap();
        assert!(f.sigma.iter().all(|s| (s - 1.0).abs() < 1e-14));
    }

    #[test]
    fn rank_one() {
        let a = [1.0, -2.0, 0.5, 3.0];
        let b = [2.0, 1.0, -1.0];
        let m = Matrix::new(4, 3, a.iter().flat_map(|x| b.iter().map(move |y| x * y)).collect()).unwrap();
        let f = svd(&m).unwrap();
        let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
        let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!((f.sigma[0] - na * nb).abs() < 1e-12);
        assert!(f.sigma[1..].iter().all(|s| s.abs() < 1e-12));
        assert!(orthonormality_error(&f.u) < 1e-12);
        assert!(lowrank_approx(&f, 1).unwrap().sub(&m).unwrap().frobenius() < 1e-12);
    }

    #[test]
    fn random_square_reconstruction() {
        let m = random(8, 8, 1);
        let f = svd(&m).unwrap();
        // multiply back U diag(σ) Vᵀ explicitly
        let mut us = f.u.clone();
        for r in 0..8 {
            for c in 0..8 {
                us.set(r, c, us.get(r, c) * f.sigma[c]);
            }
        }
        let back = us.matmul(&f.v.transpose()).unwrap();
        assert!(back.sub(&m).unwrap().data.iter().all(|v| v.abs() < 1e-10));
        assert!(orthonormality_error(&f.u) < 1e-10);
        assert!(orthonormality_error(&f.v) < 1e-10);
        assert!(f.sigma.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn wide_and_deficient_matrices() {
        let m = random(3, 7, 2);
        let f = svd(&m).unwrap();
        assert_eq!((f.u.rows, f.u.cols, f.v.rows, f.v.cols), (3, 3, 7, 3));
        assert!(f.reconstruct().sub(&m).unwrap().frobenius() < 1e-12);
        let z = Matrix::zeros(5, 4);
        let f = svd(&z).unwrap();
        assert!(f.sigma.iter().all(|s| *s == 0.0));
        assert!(orthonormality_error(&f.u) < 1e-12);
        // rank 2 in 6x5: completed U must stay orthonormal
        let a = random(6, 2, 3);
        let b = random(2, 5, 4);
        let f = svd(&a.matmul(&b).unwrap()).unwrap();
        assert!(orthonormality_error(&f.u) < 1e-10);
        assert!(orthonormality_error(&f.v) < 1e-10);
    }

    #[test]
    fn sign_convention() {
        let f = svd(&random(6, 4, 5)).unwrap();
        for k in 0..4 {
            let first = f.u.column(k).into_iter().find(|x| x.abs() > 1e-12).unwrap();
            assert!(first > 0.0);
        }
    }

    #[test]
    fn rank_bounds() {
        let f = svd(&random(4, 4, 6)).unwrap();
        assert!(matches!(lowrank_approx(&f, 0), Err(Error::Domain(_))));
        assert!(matches!(lowrank_approx(&f, 5), Err(Error::Domain(_))));
    }

    #[test]
    fn eckart_young_against_random_candidates() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let m = random(5, 5, 8);
        let f = svd(&m).unwrap();
        for k in 1..4 {
            let best = lowrank_approx(&f, k).unwrap().sub(&m).unwrap().frobenius();
            for _ in 0..1000 {
                // random rank-k candidate built around the optimum
                let a = random(5, k, rng.random());
                let b = random(k, 5, rng.random());
                let mut cand = a.matmul(&b).unwrap();
                let t: f64 = rng.random_range(0.0..1.0);
                let opt = lowrank_approx(&f, k).unwrap();
                if rng.random_bool(0.5) {
                    cand = Matrix::new(5, 5, opt.data.iter().zip(&cand.data).map(|(o, c)| o + 1e-3 * t * c).collect()).unwrap();
                    // the perturbed sum may exceed rank k; project back by truncation
                    cand = lowrank_approx(&svd(&cand).unwrap(), k).unwrap();
                }
                assert!(cand.sub(&m).unwrap().frobenius() >= best - 1e-12);
            }
        }
    }

    #[test]
    fn demo_on_zero_image() {
        let x = Tensor4::zeros([1, 1, 8, 8]);
        let report = lowrank_denoise_demo(&x, 0.0, &[1, 4, 8], 1).unwrap();
        for r in report.clean_reconstructions.iter().chain(&report.noisy_reconstructions) {
            assert!(r.data().iter().all(|v| *v == 0.0));
        }
    }

    proptest! {
        #[test]
        fn tail_energy_matches_error(seed in 0u64..500, k in 1usize..8) {
            let m = random(8, 8, seed);
            let f = svd(&m).unwrap();
            let err = lowrank_approx(&f, k).unwrap().sub(&m).unwrap().frobenius();
            prop_assert!((err - tail_energy(&f, k)).abs() < 1e-10);
        }

        #[test]
        fn error_nonincreasing_in_rank(seed in 0u64..500) {
            let m = random(6, 9, seed);
            let f = svd(&m).unwrap();
            let errs: Vec<f64> = (1..=6).map(|k| lowrank_approx(&f, k).unwrap().sub(&m).unwrap().frobenius()).collect();
            prop_assert!(errs.windows(2).all(|w| w[1] <= w[0] + 1e-12));
        }
    }
}
