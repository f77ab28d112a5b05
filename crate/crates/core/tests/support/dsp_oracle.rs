//! Direct O(N^2) / O(N*L) references for the fast DSP routines.

#![allow(dead_code)]

use std::f64::consts::PI;

use num_complex::Complex64;
use psgan_core::rng::substream;
use rand::Rng;

pub fn random_signal(n: usize, seed: u64) -> Vec<Complex64> {
    let mut rng = substream(seed, "oracle");
    (0..n).map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect()
}

pub fn naive_dft(x: &[Complex64]) -> Vec<Complex64> {
    let n = x.len();
    (0..n)
        .map(|k| {
            let mut acc = Complex64::new(0.0, 0.0);
            for (j, v) in x.iter().enumerate() {
                let theta = -2.0 * PI * ((k * j) % n) as f64 / n as f64;
                acc += v * Complex64::new(theta.cos(), theta.sin());
            }
            acc
        })
        .collect()
}

pub fn max_err(a: &[Complex64], b: &[Complex64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// `y[i] = sum_m x[(i - m) mod n] h[m]`.
pub fn modular_sum(x: &[Complex64], taps: &[f64]) -> Vec<Complex64> {
    let n = x.len();
    (0..n)
        .map(|i| {
            let mut acc = Complex64::new(0.0, 0.0);
            for (m, &h) in taps.iter().enumerate() {
                acc += x[(i + n - m) % n] * h;
            }
            acc
        })
        .collect()
}

/// Full linear convolution, shifted back by the group delay and cut to the input length.
pub fn centered_linear(x: &[Complex64], taps: &[f64]) -> Vec<Complex64> {
    let d = (taps.len() - 1) / 2;
    (0..x.len())
        .map(|i| {
            let mut acc = Complex64::new(0.0, 0.0);
            for (m, &h) in taps.iter().enumerate() {
                let idx = i as isize + d as isize - m as isize;
                if idx >= 0 && (idx as usize) < x.len() {
                    acc += x[idx as usize] * h;
                }
            }
            acc
        })
        .collect()
}
