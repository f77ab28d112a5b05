//! Synthetic prototype recordings with known structure.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::rng::substream;
use crate::signal::{CaptureMeta, IqRecording};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Modulation {
    Qpsk,
    Tone,
    Multitone,
}

impl fmt::Display for Modulation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Modulation::Qpsk => "qpsk",
            Modulation::Tone => "tone",
            Modulation::Multitone => "multitone",
        })
    }
}

impl FromStr for Modulation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "qpsk" => Ok(Modulation::Qpsk),
            "tone" => Ok(Modulation::Tone),
            "multitone" => Ok(Modulation::Multitone),
            _ => Err(Error::invalid(format!("unknown modulation {s:?}"))),
        }
    }
}

pub const PRESETS: [&str; 3] = ["qpsk-burst", "tone", "multitone"];

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticScenario {
    pub n_samples: usize,
    /// `[f_lo, f_hi]` as fractions of the sample rate.
    pub occupied_band: (f64, f64),
    pub burst_duty_cycle: f64,
    /// Bursts repeat with this period in samples.
    pub burst_period: usize,
    pub symbol_rate_frac: f64,
    pub modulation: Modulation,
    /// `f64::INFINITY` turns the noise off.
    pub snr_db: f64,
    pub cfo_frac: f64,
    pub seed: u64,
    pub sample_rate_hz: f64,
    pub center_freq_hz: f64,
}

impl SyntheticScenario {
    /// Named scenario; the qpsk-burst preset fills exactly two 64-packet
    /// frames at `n_fft = 256`.
    pub fn preset(name: &str, seed: u64) -> Result<Self> {
        let base = Self {
            n_samples: 32768,
            occupied_band: (0.05, 0.20),
            burst_duty_cycle: 0.5,
            burst_period: 1024,
            symbol_rate_frac: 0.0375,
            modulation: Modulation::Qpsk,
            snr_db: 20.0,
            cfo_frac: 0.002,
            seed,
            sample_rate_hz: 20e6,
            center_freq_hz: 2.412e9,
        };
        Ok(match name {
            "qpsk-burst" => base,
            "tone" => Self {
                occupied_band: (0.124, 0.126),
                burst_duty_cycle: 1.0,
                modulation: Modulation::Tone,
                snr_db: 30.0,
                cfo_frac: 0.0,
                ..base
            },
            "multitone" => Self { burst_duty_cycle: 0.75, modulation: Modulation::Multitone, ..base },
            _ => return Err(Error::invalid(format!("unknown preset {name:?}; expected one of {}", PRESETS.join(", ")))),
        })
    }

    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.occupied_band;
        if !(0.0 <= lo && lo < hi && hi <= 0.5) {
            return Err(Error::invalid(format!("occupied band must satisfy 0 <= f_lo < f_hi <= 0.5, got [{lo}, {hi}]")));
        }
        if !(self.burst_duty_cycle > 0.0 && self.burst_duty_cycle <= 1.0) {
            return Err(Error::invalid(format!("duty cycle must be in (0, 1], got {}", self.burst_duty_cycle)));
        }
        if self.n_samples == 0 || self.burst_period == 0 {
            return Err(Error::invalid("n_samples and burst_period must be positive"));
        }
        if self.modulation == Modulation::Qpsk && !(self.symbol_rate_frac > 0.0 && self.symbol_rate_frac <= 1.0) {
            return Err(Error::invalid(format!("symbol rate must be in (0, 1], got {}", self.symbol_rate_frac)));
        }
        if self.snr_db.is_nan() || !self.cfo_frac.is_finite() {
            return Err(Error::invalid("snr_db and cfo_frac must be numbers"));
        }
        if !(self.sample_rate_hz > 0.0 && self.sample_rate_hz.is_finite()) {
            return Err(Error::invalid("sample rate must be positive"));
        }
        Ok(())
    }

    fn center(&self) -> f64 {
        0.5 * (self.occupied_band.0 + self.occupied_band.1)
    }

    fn meta(&self) -> CaptureMeta {
        let mut meta = CaptureMeta::new(self.sample_rate_hz, self.center_freq_hz, 0.0);
        let x = &mut meta.extra;
        x.insert("scenario.n_samples".into(), self.n_samples.to_string());
        x.insert("scenario.band_lo".into(), format!("{:?}", self.occupied_band.0));
        x.insert("scenario.band_hi".into(), format!("{:?}", self.occupied_band.1));
        x.insert("scenario.duty_cycle".into(), format!("{:?}", self.burst_duty_cycle));
        x.insert("scenario.burst_period".into(), self.burst_period.to_string());
        x.insert("scenario.symbol_rate".into(), format!("{:?}", self.symbol_rate_frac));
        x.insert("scenario.modulation".into(), self.modulation.to_string());
        x.insert("scenario.snr_db".into(), format!("{:?}", self.snr_db));
        x.insert("scenario.cfo".into(), format!("{:?}", self.cfo_frac));
        x.insert("scenario.seed".into(), self.seed.to_string());
        meta
    }
}

/// Unit-power baseband waveform before the burst gate.
fn waveform<R: Rng + ?Sized>(sc: &SyntheticScenario, rng: &mut R) -> Vec<Complex64> {
    let n = sc.n_samples;
    let fc = sc.center() + sc.cfo_frac;
    let carrier = |k: usize, f: f64, phase: f64| Complex64::from_polar(1.0, 2.0 * PI * f * k as f64 + phase);
    match sc.modulation {
        Modulation::Qpsk => {
            let sps = (1.0 / sc.symbol_rate_frac).round().max(1.0) as usize;
            let s = std::f64::consts::FRAC_1_SQRT_2;
            let mut sym = Complex64::new(0.0, 0.0);
            (0..n)
                .map(|k| {
                    if k % sps == 0 {
                        let re = if rng.random::<bool>() { s } else { -s };
                        let im = if rng.random::<bool>() { s } else { -s };
                        sym = Complex64::new(re, im);
                    }
                    sym * carrier(k, fc, 0.0)
                })
                .collect()
        }
        Modulation::Tone => {
            let phase = rng.random_range(0.0..2.0 * PI);
            (0..n).map(|k| carrier(k, fc, phase)).collect()
        }
        Modulation::Multitone => {
            let (lo, hi) = sc.occupied_band;
            let tones = 4;
            let step = (hi - lo) / tones as f64;
            let freqs: Vec<f64> = (0..tones).map(|i| lo + step * (i as f64 + 0.5) + sc.cfo_frac).collect();
            let phases: Vec<f64> = (0..tones).map(|_| rng.random_range(0.0..2.0 * PI)).collect();
            let amp = 1.0 / (tones as f64).sqrt();
            (0..n)
                .map(|k| freqs.iter().zip(&phases).map(|(&f, &p)| carrier(k, f, p)).sum::<Complex64>() * amp)
                .collect()
        }
    }
}

/// Bursty modulated signal in additive white Gaussian noise. The ON
/// segments have unit power and the noise power is `10^(-snr_db/10)`.
pub fn synth_prototype(sc: &SyntheticScenario) -> Result<IqRecording> {
    sc.validate()?;
    let mut rng = substream(sc.seed, "protogen");
    let mut samples = waveform(sc, &mut rng);

    let period = sc.burst_period;
    let on_len = ((sc.burst_duty_cycle * period as f64).round() as usize).clamp(1, period);
    if on_len < period {
        let offset = rng.random_range(0..period);
        for (k, s) in samples.iter_mut().enumerate() {
            if (k + period - offset) % period >= on_len {
                *s = Complex64::new(0.0, 0.0);
            }
        }
    }

    if sc.snr_db.is_finite() {
        let sigma = (10f64.powf(-sc.snr_db / 10.0) / 2.0).sqrt();
        let normal = Normal::new(0.0, sigma).map_err(|e| Error::invalid(e.to_string()))?;
        let mut noise_rng = substream(sc.seed, "protogen.noise");
        for s in samples.iter_mut() {
            *s += Complex64::new(normal.sample(&mut noise_rng), normal.sample(&mut noise_rng));
        }
    }
    IqRecording::new(samples, sc.meta())
}
