use crate::error::Result;
use crate::tensor::Image;

/// Finite stand-in for +∞ dB when the estimate is exact.
pub const SNR_CAP_DB: f64 = 300.0;

/// 10·log10(‖x‖² / ‖x - x̂‖²), clamped to ±300 dB.
pub fn snr_db(reference: &Image, estimate: &Image) -> Result<f64> {
    let err = reference.sub(estimate)?.norm_sq();
    let sig = reference.norm_sq();
    if err == 0.0 {
        return Ok(SNR_CAP_DB);
    }
    if sig == 0.0 {
        return Ok(-SNR_CAP_DB);
    }
    Ok((10.0 * (sig / err).log10()).clamp(-SNR_CAP_DB, SNR_CAP_DB))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Tensor4;

    #[test]
    fn examples() {
        let x = Tensor4::from_fn([1, 1, 8, 8], |_, _, y, xx| (y * 8 + xx) as f64 / 64.0 + 0.1);
        assert_eq!(snr_db(&x, &x).unwrap(), SNR_CAP_DB);
        assert!(snr_db(&x, &Tensor4::zeros(x.dims())).unwrap().abs() < 1e-12);
        // error field scaled so that ‖x‖²/‖η‖² = 100
        let eta = Tensor4::from_fn(x.dims(), |_, _, y, xx| if (y + xx) % 2 == 0 { 1.0 } else { -1.0 });
        let eta = eta.scale((x.norm_sq() / 100.0 / eta.norm_sq()).sqrt());
        assert!((snr_db(&x, &x.add(&eta).unwrap()).unwrap() - 20.0).abs() < 0.5);
    }
}
