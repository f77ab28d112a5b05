//! The `run.txt` summary that `train` leaves next to its checkpoints.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::{anyhow, Context, Result};
use psgan_core::signal::{parse_key_values, CaptureMeta, FrameStats};

pub const RUN_FILE: &str = "run.txt";
pub const I_MODEL: &str = "i_model.psg";
pub const Q_MODEL: &str = "q_model.psg";
pub const I_LOG: &str = "train_i.csv";
pub const Q_LOG: &str = "train_q.csv";

#[derive(Debug, Clone, PartialEq)]
pub struct RunInfo {
    pub n_fft: usize,
    pub n_frames: usize,
    pub n_packets: usize,
    pub train_frame: usize,
    pub frame_powers: Vec<f64>,
    pub snr_range_db: (f64, f64),
    pub seed: u64,
    pub epochs: usize,
    pub meta: CaptureMeta,
}

impl RunInfo {
    pub fn stats(&self) -> Result<FrameStats> {
        Ok(FrameStats::new(self.frame_powers.clone())?)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "n_fft={}", self.n_fft);
        let _ = writeln!(s, "n_frames={}", self.n_frames);
        let _ = writeln!(s, "n_packets={}", self.n_packets);
        let _ = writeln!(s, "train_frame={}", self.train_frame);
        for (i, p) in self.frame_powers.iter().enumerate() {
            let _ = writeln!(s, "frame_power.{i}={p:?}");
        }
        let _ = writeln!(s, "snr_lo_db={:?}", self.snr_range_db.0);
        let _ = writeln!(s, "snr_hi_db={:?}", self.snr_range_db.1);
        let _ = writeln!(s, "seed={}", self.seed);
        let _ = writeln!(s, "epochs={}", self.epochs);
        let _ = writeln!(s, "sample_rate_hz={:?}", self.meta.sample_rate_hz);
        let _ = writeln!(s, "center_freq_hz={:?}", self.meta.center_freq_hz);
        let _ = writeln!(s, "rx_gain_db={:?}", self.meta.rx_gain_db);
        s
    }

    pub fn parse(text: &str) -> Result<Self> {
        let map = parse_key_values(text)?;
        let get = |k: &str| map.get(k).ok_or_else(|| anyhow!("run file: missing {k}"));
        let n_frames: usize = get("n_frames")?.parse()?;
        let frame_powers = (0..n_frames)
            .map(|i| -> Result<f64> { Ok(get(&format!("frame_power.{i}"))?.parse()?) })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            n_fft: get("n_fft")?.parse()?,
            n_frames,
            n_packets: get("n_packets")?.parse()?,
            train_frame: get("train_frame")?.parse()?,
            frame_powers,
            snr_range_db: (get("snr_lo_db")?.parse()?, get("snr_hi_db")?.parse()?),
            seed: get("seed")?.parse()?,
            epochs: get("epochs")?.parse()?,
            meta: CaptureMeta::new(get("sample_rate_hz")?.parse()?, get("center_freq_hz")?.parse()?, get("rx_gain_db")?.parse()?),
        })
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let path = dir.join(RUN_FILE);
        let text = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("parsing {}", path.display()))
    }
}
