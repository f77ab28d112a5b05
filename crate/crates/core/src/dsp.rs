//! Discrete Fourier transforms, raised-cosine smoothing taps, circular
//! convolution and overlap-save stream reconstruction.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Forward DFT, `X[k] = sum_n x[n] e^{-2 pi i k n / N}`.
///
/// Power-of-two lengths use an iterative radix-2 transform; other lengths
/// fall back to the direct sum.
pub fn dft(x: &[Complex64]) -> Vec<Complex64> {
    transform(x, false)
}

/// Inverse DFT with `1/N` scaling.
pub fn idft(x: &[Complex64]) -> Vec<Complex64> {
    let mut y = transform(x, true);
    let scale = 1.0 / x.len().max(1) as f64;
    y.iter_mut().for_each(|v| *v *= scale);
    y
}

fn transform(x: &[Complex64], inverse: bool) -> Vec<Complex64> {
    let n = x.len();
    if n <= 1 {
        return x.to_vec();
    }
    if n.is_power_of_two() {
        let mut buf = x.to_vec();
        fft_in_place(&mut buf, inverse);
        buf
    } else {
        direct_dft(x, inverse)
    }
}

/// `O(N^2)` transform; also the fallback for non-power-of-two lengths.
pub fn direct_dft(x: &[Complex64], inverse: bool) -> Vec<Complex64> {
    let n = x.len();
    let sign = if inverse { 1.0 } else { -1.0 };
    (0..n)
        .map(|k| {
            x.iter()
                .enumerate()
                .map(|(j, &v)| {
                    // reduce k*j mod n first so the angle stays small
                    let phase = sign * 2.0 * PI * ((k * j) % n) as f64 / n as f64;
                    v * Complex64::from_polar(1.0, phase)
                })
                .sum()
        })
        .collect()
}

fn fft_in_place(buf: &mut [Complex64], inverse: bool) {
    let n = buf.len();
    let bits = n.trailing_zeros();
    for i in 0..n {
        let j = i.reverse_bits() >> (usize::BITS - bits);
        if j > i {
            buf.swap(i, j);
        }
    }
    let sign = if inverse { 1.0 } else { -1.0 };
    // twiddles for the full length; stage `len` uses every (n/len)-th one
    let twiddles: Vec<Complex64> =
        (0..n / 2).map(|k| Complex64::from_polar(1.0, sign * 2.0 * PI * k as f64 / n as f64)).collect();
    let mut len = 2;
    while len <= n {
        let half = len / 2;
        let stride = n / len;
        for start in (0..n).step_by(len) {
            for k in 0..half {
                let w = twiddles[k * stride];
                let a = buf[start + k];
                let b = buf[start + k + half] * w;
                buf[start + k] = a + b;
                buf[start + k + half] = a - b;
            }
        }
        len <<= 1;
    }
}

/// Raised-cosine taps sampled uniformly across the filter's support.
#[derive(Debug, Clone, PartialEq)]
pub struct RaisedCosineSpec {
    pub length: usize,
    pub rolloff: f64,
    /// Unit DC gain (`sum == 1`).
    pub taps: Vec<f64>,
}

impl RaisedCosineSpec {
    /// A single unit tap: filtering becomes the identity.
    pub fn impulse() -> Self {
        Self { length: 1, rolloff: 0.0, taps: vec![1.0] }
    }
}

/// Continuous raised-cosine window of length parameter `length` at `tau`:
/// flat for `|tau| <= (1-beta)/(2L)`, cosine roll-off up to
/// `(1+beta)/(2L)`, zero beyond.
pub fn raised_cosine_response(tau: f64, length: usize, beta: f64) -> f64 {
    let l = length as f64;
    let a = tau.abs();
    let inner = (1.0 - beta) / (2.0 * l);
    let outer = (1.0 + beta) / (2.0 * l);
    if a <= inner {
        1.0
    } else if a <= outer {
        0.5 * (1.0 + (PI * l / beta * (a - inner)).cos())
    } else {
        0.0
    }
}

/// Sample positions `tau_j`, `j = 0..L`, spanning `[-(1+beta)/(2L), (1+beta)/(2L)]`.
pub fn raised_cosine_grid(length: usize, beta: f64) -> Vec<f64> {
    let l = length as f64;
    let step = (1.0 + beta) / (l * (l - 1.0));
    let mid = (l - 1.0) / 2.0;
    (0..length).map(|j| (j as f64 - mid) * step).collect()
}

/// Raised-cosine taps before DC normalization.
pub fn raised_cosine_raw(length: usize, beta: f64) -> Result<Vec<f64>> {
    if length < 3 || length % 2 == 0 {
        return Err(Error::invalid(format!("filter length must be odd and >= 3, got {length}")));
    }
    if !(beta > 0.0 && beta <= 1.0) {
        return Err(Error::invalid(format!("roll-off must be in (0, 1], got {beta}")));
    }
    let grid = raised_cosine_grid(length, beta);
    let mut taps: Vec<f64> = grid.iter().map(|&t| raised_cosine_response(t, length, beta)).collect();
    // mirror so symmetry holds bit-for-bit
    for j in 0..length / 2 {
        taps[length - 1 - j] = taps[j];
    }
    Ok(taps)
}

pub fn raised_cosine_taps(length: usize, beta: f64) -> Result<RaisedCosineSpec> {
    let mut taps = raised_cosine_raw(length, beta)?;
    let sum: f64 = taps.iter().sum();
    taps.iter_mut().for_each(|t| *t /= sum);
    Ok(RaisedCosineSpec { length, rolloff: beta, taps })
}

/// `y[n] = sum_m x[(n - m) mod N] h[m]`, taps zero-extended to `N`.
pub fn circular_convolve(signal: &[Complex64], taps: &[f64]) -> Result<Vec<Complex64>> {
    let n = signal.len();
    if taps.len() > n {
        return Err(Error::invalid(format!("{} taps exceed signal length {n}", taps.len())));
    }
    if n.is_power_of_two() {
        let h = taps_spectrum(taps, n);
        Ok(circular_convolve_with(signal, &h))
    } else {
        Ok(circular_convolve_direct(signal, taps))
    }
}

fn taps_spectrum(taps: &[f64], n: usize) -> Vec<Complex64> {
    let mut h = vec![Complex64::new(0.0, 0.0); n];
    for (d, &t) in h.iter_mut().zip(taps) {
        *d = Complex64::new(t, 0.0);
    }
    dft(&h)
}

fn circular_convolve_with(signal: &[Complex64], taps_spec: &[Complex64]) -> Vec<Complex64> {
    let mut x = dft(signal);
    x.iter_mut().zip(taps_spec).for_each(|(a, b)| *a *= b);
    idft(&x)
}

fn circular_convolve_direct(signal: &[Complex64], taps: &[f64]) -> Vec<Complex64> {
    let n = signal.len();
    (0..n)
        .map(|i| taps.iter().enumerate().map(|(m, &h)| signal[(i + n - m % n) % n] * h).sum())
        .collect()
}

/// Filters the concatenated packet stream with `spec.taps` using
/// overlap-save over `N_FFT`-point blocks.
///
/// Each block is the previous `L-1` input samples (zeros before the
/// stream) followed by `N_FFT - L + 1` new samples; the first `L-1`
/// outputs of every block are discarded. The result is shifted by the
/// group delay `(L-1)/2` so that it lines up with the input, and
/// truncated to the input length.
pub fn overlap_save_reconstruct(packets: &[Vec<Complex64>], spec: &RaisedCosineSpec) -> Result<Vec<Complex64>> {
    let n_fft = packets.first().map(Vec::len).ok_or_else(|| Error::invalid("no packets to reconstruct"))?;
    if packets.iter().any(|p| p.len() != n_fft) {
        return Err(Error::shape("packets differ in length"));
    }
    let taps = &spec.taps;
    let l = taps.len();
    if l == 0 || l > n_fft {
        return Err(Error::invalid(format!("filter length {l} must be in 1..={n_fft}")));
    }
    let total = packets.len() * n_fft;
    let stream: Vec<Complex64> = packets.iter().flatten().copied().collect();
    if taps.as_slice() == [1.0] {
        return Ok(stream);
    }
    let delay = (l - 1) / 2;
    let hop = n_fft - (l - 1);
    let zero = Complex64::new(0.0, 0.0);
    let at = |i: isize| -> Complex64 {
        if i >= 0 && (i as usize) < total {
            stream[i as usize]
        } else {
            zero
        }
    };
    let spectrum = n_fft.is_power_of_two().then(|| taps_spectrum(taps, n_fft));

    // linear-convolution outputs y[delay .. delay + total]
    let needed = total + delay;
    let mut lin = Vec::with_capacity(needed + hop);
    let mut block_start = 0usize;
    let mut window = vec![zero; n_fft];
    while lin.len() < needed {
        for (k, w) in window.iter_mut().enumerate() {
            *w = at(block_start as isize - (l as isize - 1) + k as isize);
        }
        let y = match &spectrum {
            Some(h) => circular_convolve_with(&window, h),
            None => circular_convolve_direct(&window, taps),
        };
        lin.extend_from_slice(&y[l - 1..]);
        block_start += hop;
    }
    Ok(lin[delay..delay + total].to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::substream;
    use rand::Rng;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn random_signal(n: usize, seed: u64) -> Vec<Complex64> {
        let mut rng = substream(seed, "dsp-test");
        (0..n).map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect()
    }

    fn max_err(a: &[Complex64], b: &[Complex64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
    }

    #[test]
    fn impulse_and_constant() {
        let mut x = vec![c(0.0); 16];
        x[0] = c(1.0);
        assert!(dft(&x).iter().all(|v| (v - c(1.0)).norm() < 1e-15));
        let k = Complex64::new(0.7, -0.2);
        let y = dft(&[k; 32]);
        assert!((y[0] - k * 32.0).norm() < 1e-12);
        assert!(y[1..].iter().all(|v| v.norm() < 1e-12));
    }

    #[test]
    fn non_power_of_two_falls_back() {
        let x = random_signal(12, 1);
        assert!(max_err(&dft(&x), &direct_dft(&x, false)) < 1e-12);
        assert!(max_err(&idft(&dft(&x)), &x) < 1e-12);
    }

    #[test]
    fn inverse_roundtrip() {
        let x = random_signal(1024, 2);
        assert!(max_err(&idft(&dft(&x)), &x) < 1e-12);
    }

    #[test]
    fn rc_shape() {
        let raw = raised_cosine_raw(129, 0.25).unwrap();
        assert_eq!(raw[64], 1.0);
        assert!(raw[0].abs() < 1e-12 && raw[128].abs() < 1e-12);
        assert!((raised_cosine_response(1.0 / (2.0 * 129.0), 129, 0.25) - 0.5).abs() < 1e-12);
        let spec = raised_cosine_taps(129, 0.25).unwrap();
        assert!((spec.taps.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        for j in 0..129 {
            assert_eq!(spec.taps[j], spec.taps[128 - j]);
        }
        assert!(spec.taps.iter().all(|&t| t <= spec.taps[64]));
    }

    #[test]
    fn rc_rejects_bad_args() {
        assert!(raised_cosine_taps(128, 0.25).is_err());
        assert!(raised_cosine_taps(1, 0.25).is_err());
        assert!(raised_cosine_taps(129, 0.0).is_err());
        assert!(raised_cosine_taps(129, 1.5).is_err());
    }

    #[test]
    fn circular_convolution_identities() {
        let x = random_signal(64, 3);
        assert!(max_err(&circular_convolve(&x, &[1.0]).unwrap(), &x) < 1e-12);
        let k = Complex64::new(0.3, 0.9);
        let taps = raised_cosine_taps(9, 0.5).unwrap().taps;
        let y = circular_convolve(&[k; 64], &taps).unwrap();
        assert!(y.iter().all(|v| (v - k).norm() < 1e-12));
        assert!(circular_convolve(&x[..4], &taps).is_err());
    }

    #[test]
    fn overlap_save_identity_cases() {
        let packets: Vec<Vec<Complex64>> = (0..3).map(|s| random_signal(32, s)).collect();
        let flat: Vec<Complex64> = packets.iter().flatten().copied().collect();
        let out = overlap_save_reconstruct(&packets[..1], &RaisedCosineSpec::impulse()).unwrap();
        assert_eq!(out, packets[0]);
        let out = overlap_save_reconstruct(&packets, &RaisedCosineSpec::impulse()).unwrap();
        assert!(max_err(&out, &flat) < 1e-12);
        let long = raised_cosine_taps(33, 0.25).unwrap();
        assert!(overlap_save_reconstruct(&packets, &long).is_err());
        assert!(overlap_save_reconstruct(&[], &long).is_err());
    }
}
