//! wasm-bindgen surface for the static page in `www/`.
//!
//! Everything returns plain `Vec<f64>` so the JS side can draw without
//! extra glue. Errors become `JsError` strings.

use num_complex::Complex64;
use wasm_bindgen::prelude::*;

use psgan_core::dsp::{dft, raised_cosine_taps};
use psgan_core::gan::{train, GanModel, TrainConfig};
use psgan_core::protogen::{synth_prototype, SyntheticScenario};
use psgan_core::signal::{frame_tensor, normalize_frames, Component, FrameStats, PrototypeTensor};
use psgan_core::synthesis::{assemble_iq, generate_packets};
use psgan_core::validation::{bin_freq, empirical_pdf, ks_distance, spectral_matrix};

const N_FFT: usize = 256;
const N_FRAMES: usize = 2;
const PDF_BINS: usize = 101;

fn js(e: psgan_core::Error) -> JsError {
    JsError::new(&e.to_string())
}

/// Normalized raised-cosine taps.
#[wasm_bindgen]
pub fn rc_taps(length: usize, rolloff: f64) -> Result<Vec<f64>, JsError> {
    raised_cosine_taps(length, rolloff).map(|s| s.taps).map_err(js)
}

/// `20 log10 |H|` of the taps on an `n_points` grid from 0 to Nyquist.
#[wasm_bindgen]
pub fn rc_response_db(length: usize, rolloff: f64, n_points: usize) -> Result<Vec<f64>, JsError> {
    let taps = rc_taps(length, rolloff)?;
    let n = (2 * n_points).max(taps.len()).next_power_of_two();
    let mut x = vec![Complex64::new(0.0, 0.0); n];
    for (k, &t) in taps.iter().enumerate() {
        x[k] = Complex64::new(t, 0.0);
    }
    let h = dft(&x);
    Ok((0..n_points).map(|i| db(h[i * n / (2 * n_points)].norm_sqr()) / 2.0).collect())
}

fn db(power: f64) -> f64 {
    10.0 * power.max(1e-30).log10()
}

/// Bin frequencies in cycles per sample, natural FFT order.
#[wasm_bindgen]
pub fn bin_freqs(n_fft: usize) -> Vec<f64> {
    (0..n_fft).map(|k| bin_freq(k, n_fft)).collect()
}

/// Mean per-bin power in dB over a set of packets.
fn spectrum_db(packets: &[Vec<Complex64>]) -> Result<Vec<f64>, JsError> {
    let s = spectral_matrix(packets).map_err(js)?;
    let n = s.n_packets() as f64;
    Ok(s.bin_energy().into_iter().map(|e| db(e / n)).collect())
}

fn pooled(packets: &[Vec<Complex64>]) -> Vec<f64> {
    packets.iter().flatten().flat_map(|c| [c.re, c.im]).collect()
}

fn pdf(values: &[f64], power: f64) -> Result<Vec<f64>, JsError> {
    let r = 4.0 * (power / 2.0).sqrt();
    empirical_pdf(values, PDF_BINS, (-r, r)).map(|h| h.masses).map_err(js)
}

/// A protogen preset framed and normalized at the demo packet size.
struct Prototype {
    tensor: PrototypeTensor,
    stats: FrameStats,
    raw_packets: Vec<Vec<Complex64>>,
}

impl Prototype {
    fn new(preset: &str, seed: u64) -> Result<Self, JsError> {
        let sc = SyntheticScenario::preset(preset, seed).map_err(js)?;
        let rec = synth_prototype(&sc).map_err(js)?;
        let raw = frame_tensor(&rec, N_FFT, N_FRAMES).map_err(js)?;
        let raw_packets = raw.frame_packets(0).map_err(js)?;
        let (tensor, stats) = normalize_frames(&raw).map_err(js)?;
        Ok(Self { tensor, stats, raw_packets })
    }

    fn power(&self) -> f64 {
        self.stats.power(0).expect("frame 0 exists")
    }
}

/// Interactive training on a synthetic prototype, a few epochs per call.
#[wasm_bindgen]
pub struct GanSession {
    proto: Prototype,
    models: Option<(GanModel, GanModel)>,
    cfg: TrainConfig,
    accuracy: Vec<f64>,
}

#[wasm_bindgen]
impl GanSession {
    #[wasm_bindgen(constructor)]
    pub fn new(preset: &str, seed: u64) -> Result<GanSession, JsError> {
        let proto = Prototype::new(preset, seed)?;
        let cfg = TrainConfig { seed, ..TrainConfig::desk() };
        cfg.validate(N_FFT).map_err(js)?;
        let i = GanModel::new(N_FFT, Component::I, &cfg).map_err(js)?;
        let q = GanModel::new(N_FFT, Component::Q, &cfg).map_err(js)?;
        Ok(GanSession { proto, models: Some((i, q)), cfg, accuracy: Vec::new() })
    }

    pub fn epoch(&self) -> usize {
        self.accuracy.len()
    }

    /// Runs `epochs` more epochs on both components and returns the mean
    /// discriminator accuracy of the last one.
    pub fn step(&mut self, epochs: usize) -> Result<f64, JsError> {
        let (mut i, mut q) = self.models.take().expect("models are always put back");
        for _ in 0..epochs {
            // each call restarts the per-run streams, so shift the seed
            let cfg = TrainConfig { n_epoch: 1, seed: self.cfg.seed.wrapping_add(self.accuracy.len() as u64), ..self.cfg.clone() };
            let (ni, li) = train(i, &self.proto.tensor, &self.proto.stats, 0, &cfg).map_err(js)?;
            let (nq, lq) = train(q, &self.proto.tensor, &self.proto.stats, 0, &cfg).map_err(js)?;
            i = ni;
            q = nq;
            self.accuracy.push(0.5 * (li.records[0].d_accuracy + lq.records[0].d_accuracy));
        }
        self.models = Some((i, q));
        Ok(self.accuracy.last().copied().unwrap_or(f64::NAN))
    }

    pub fn accuracy_history(&self) -> Vec<f64> {
        self.accuracy.clone()
    }

    fn generated(&self, n_gen: usize) -> Result<Vec<Vec<Complex64>>, JsError> {
        let (i, q) = self.models.as_ref().expect("models are always put back");
        let snr = 0.5 * (self.cfg.snr_range_db.0 + self.cfg.snr_range_db.1);
        let seed = self.cfg.seed.wrapping_add(self.accuracy.len() as u64);
        let gi = generate_packets(&i.generator, Component::I, n_gen, snr, seed).map_err(js)?;
        let gq = generate_packets(&q.generator, Component::Q, n_gen, snr, seed).map_err(js)?;
        assemble_iq(&gi, &gq, self.proto.power()).map_err(js)
    }

    pub fn prototype_spectrum_db(&self) -> Result<Vec<f64>, JsError> {
        spectrum_db(&self.proto.raw_packets)
    }

    pub fn generated_spectrum_db(&self) -> Result<Vec<f64>, JsError> {
        spectrum_db(&self.generated(self.proto.raw_packets.len())?)
    }

    /// Sample PDF of the prototype over +-4 sigma.
    pub fn prototype_pdf(&self) -> Result<Vec<f64>, JsError> {
        pdf(&pooled(&self.proto.raw_packets), self.proto.power())
    }

    pub fn generated_pdf(&self) -> Result<Vec<f64>, JsError> {
        pdf(&pooled(&self.generated(self.proto.raw_packets.len())?), self.proto.power())
    }

    /// KS distance between pooled prototype and generated I/Q values.
    pub fn ks(&self) -> Result<f64, JsError> {
        let g = pooled(&self.generated(self.proto.raw_packets.len())?);
        ks_distance(&pooled(&self.proto.raw_packets), &g).map_err(js)
    }

    /// Histogram bin centers matching the PDFs.
    pub fn pdf_centers(&self) -> Vec<f64> {
        let r = 4.0 * (self.proto.power() / 2.0).sqrt();
        let w = 2.0 * r / PDF_BINS as f64;
        (0..PDF_BINS).map(|b| -r + (b as f64 + 0.5) * w).collect()
    }
}

/// Names accepted by [`GanSession::new`].
#[wasm_bindgen]
pub fn presets() -> Vec<String> {
    psgan_core::protogen::PRESETS.iter().map(|s| s.to_string()).collect()
}
