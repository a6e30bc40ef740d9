use fdl_core::activations::{ActivationSpec, Threshold};
use fdl_core::experiments::{add_noise, estimate_sigma_mad, snr_db, synthetic_scene, NoiseModel};
use fdl_core::framelets::{band_thresholds, denoise_framelet, haar};

#[test]
fn soft_shrinkage_beats_noisy_input_on_every_seed() {
    let basis = haar();
    let clean = synthetic_scene(64, 64);
    for decimated in [true, false] {
        for seed in 0..10 {
            let noisy = add_noise(&clean, &NoiseModel { sigma_eta: 0.1, seed }).unwrap();
            let sigma = estimate_sigma_mad(&noisy).unwrap();
            let t = band_thresholds(&basis, &noisy, sigma, decimated).unwrap();
            let act = ActivationSpec::SoftShrink { t: Threshold::PerChannel(t) };
            let out = denoise_framelet(&basis, &noisy, &act, decimated).unwrap();
            let (before, after) = (snr_db(&clean, &noisy).unwrap(), snr_db(&clean, &out).unwrap());
            assert!(after > before, "seed {seed}, decimated {decimated}: {after:.2} <= {before:.2} dB");
        }
    }
}
