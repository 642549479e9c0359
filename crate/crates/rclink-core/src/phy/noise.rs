//! Additive white Gaussian noise with the reference-SNR convention.
//!
//! `snr_db` is the reference signal-to-noise ratio against
//! `signal_power_ref`: the per-branch complex noise variance is
//! `sigma^2 = signal_power_ref / 10^(snr_db / 10)`, split evenly between the
//! real and imaginary parts. `snr_db = +inf` is the noise-off sentinel.

use crate::rng::{self, domain};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

/// Per-branch complex noise variance for a reference SNR.
pub fn noise_variance(snr_db: f64, signal_power_ref: f64) -> f64 {
    signal_power_ref / 10f64.powf(snr_db / 10.0)
}

/// Add complex AWGN at the given reference SNR, drawing from an existing
/// generator (one stream per receive branch keeps runs reproducible under
/// any scheduling).
pub fn awgn_with<R: Rng>(
    signal: &[Complex64],
    snr_db: f64,
    signal_power_ref: f64,
    rng: &mut R,
) -> Vec<Complex64> {
    assert!(
        !snr_db.is_nan(),
        "snr_db must be finite or the +inf noise-off sentinel"
    );
    if snr_db == f64::INFINITY {
        return signal.to_vec();
    }
    let sigma = (noise_variance(snr_db, signal_power_ref) / 2.0).sqrt();
    signal
        .iter()
        .map(|s| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            s + Complex64::new(re * sigma, im * sigma)
        })
        .collect()
}

/// Add complex AWGN at the given reference SNR from a fresh seeded stream.
pub fn awgn(signal: &[Complex64], snr_db: f64, signal_power_ref: f64, seed: u64) -> Vec<Complex64> {
    let mut rng = rng::stream_rng(seed, domain::NOISE, 0, 0, 0);
    awgn_with(signal, snr_db, signal_power_ref, &mut rng)
}
