use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng::substream;

/// Noise power for a virtual SNR: `10^((10 log10(P) - snr_db) / 10)`.
pub fn latent_noise_variance(power: f64, snr_db: f64) -> Result<f64> {
    if !(power > 0.0 && power.is_finite()) {
        return Err(Error::invalid(format!("signal power must be positive, got {power}")));
    }
    let power_db = 10.0 * power.log10();
    let noise_db = power_db - snr_db;
    Ok(10f64.powf(noise_db / 10.0))
}

/// `n × n_fft` i.i.d. draws from `N(0, sigma2)`.
pub fn sample_latent(n: usize, n_fft: usize, sigma2: f64, seed: u64) -> Result<Matrix> {
    sample_latent_with(n, n_fft, sigma2, &mut substream(seed, "latent"))
}

pub fn sample_latent_with<R: Rng + ?Sized>(n: usize, n_fft: usize, sigma2: f64, rng: &mut R) -> Result<Matrix> {
    if !(sigma2 > 0.0 && sigma2.is_finite()) {
        return Err(Error::invalid(format!("latent variance must be positive, got {sigma2}")));
    }
    let normal = Normal::new(0.0, sigma2.sqrt()).map_err(|e| Error::invalid(e.to_string()))?;
    Ok(Matrix::from_vec(n, n_fft, (0..n * n_fft).map(|_| normal.sample(rng)).collect()))
}
