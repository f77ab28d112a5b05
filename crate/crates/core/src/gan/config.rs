use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::signal::parse_key_values;

/// Layer widths and regularization of both networks.
#[derive(Debug, Clone, PartialEq)]
pub struct Architecture {
    /// Hidden width of the generator.
    pub zeta_g: usize,
    pub g_weight_decay: f64,
    pub n_kernels: usize,
    pub kernel_len: usize,
    /// Width of the discriminator's dense stages.
    pub zeta_d: usize,
    pub d_dropout: f64,
    pub d_weight_decay: f64,
}

impl Default for Architecture {
    fn default() -> Self {
        Self { zeta_g: 128, g_weight_decay: 0.001, n_kernels: 32, kernel_len: 128, zeta_d: 32, d_dropout: 0.5, d_weight_decay: 1e-4 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub n_epoch: usize,
    pub n_epoch_pretrain: usize,
    pub s_batch: usize,
    pub s_minibatch_pretrain: usize,
    pub n_examples: usize,
    pub label_smoothing_alpha: f64,
    pub snr_range_db: (f64, f64),
    pub seed: u64,
    pub lr_g: f64,
    pub lr_d: f64,
    /// Linear learning-rate decay per optimizer step; 0 keeps rates constant.
    pub lr_decay: f64,
    pub arch: Architecture,
    /// Stop once the mean accuracy of the last `early_stop_window` epochs
    /// falls inside this band.
    pub early_stop_band: Option<(f64, f64)>,
    pub early_stop_window: usize,
    /// Fill `wall_ms` in the log. Off by default so logs are reproducible.
    pub record_timing: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            n_epoch: 1000,
            n_epoch_pretrain: 1,
            s_batch: 300,
            s_minibatch_pretrain: 32,
            n_examples: 128,
            label_smoothing_alpha: 0.2,
            snr_range_db: (-30.0, -24.0),
            seed: 0,
            lr_g: 0.011,
            lr_d: 1e-4,
            lr_decay: 0.0,
            arch: Architecture::default(),
            early_stop_band: None,
            early_stop_window: 50,
            record_timing: false,
        }
    }
}

fn parse_range(key: &str, v: &str) -> Result<(f64, f64)> {
    let (a, b) = v.split_once(':').ok_or_else(|| Error::Parse(format!("{key}: expected lo:hi, got {v:?}")))?;
    Ok((parse_num(key, a.trim())?, parse_num(key, b.trim())?))
}

fn parse_num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse().map_err(|_| Error::Parse(format!("{key}: bad value {v:?}")))
}

impl TrainConfig {
    /// Scaled-down setting that trains in about a minute per component at `n_fft = 256`.
    ///
    /// With only 300 epochs the generator outruns the discriminator at
    /// `lr_g = 0.011`: its tanh output saturates and the sample distribution
    /// drifts away from the prototype. A lower generator rate and a smaller
    /// batch (two discriminator steps per epoch) keep the two balanced.
    pub fn desk() -> Self {
        Self { n_epoch: 300, n_examples: 64, s_batch: 64, lr_g: 0.001, ..Self::default() }
    }

    /// Checks the settings against a packet length.
    pub fn validate(&self, n_fft: usize) -> Result<()> {
        let a = &self.arch;
        if !(0.0..0.5).contains(&self.label_smoothing_alpha) {
            return Err(Error::invalid(format!("label_smoothing_alpha must be in [0, 0.5), got {}", self.label_smoothing_alpha)));
        }
        let (lo, hi) = self.snr_range_db;
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(Error::invalid(format!("snr_range_db must be an ordered finite range, got {lo}:{hi}")));
        }
        let smallest = a.kernel_len.min(a.zeta_d).min(a.zeta_g);
        if !(smallest < self.s_batch && self.s_batch < n_fft) {
            return Err(Error::invalid(format!(
                "s_batch = {} must lie strictly between the smallest layer size {} and n_fft = {}",
                self.s_batch, smallest, n_fft
            )));
        }
        if self.n_examples == 0 || self.s_minibatch_pretrain == 0 {
            return Err(Error::invalid("n_examples and s_minibatch_pretrain must be positive"));
        }
        if a.kernel_len == 0 || a.kernel_len > n_fft || a.n_kernels == 0 || a.zeta_d == 0 || a.zeta_g == 0 {
            return Err(Error::invalid(format!("layer sizes do not fit n_fft = {n_fft}")));
        }
        if !(0.0..1.0).contains(&a.d_dropout) {
            return Err(Error::invalid(format!("d_dropout must be in [0, 1), got {}", a.d_dropout)));
        }
        for (name, v) in [
            ("lr_g", self.lr_g),
            ("lr_d", self.lr_d),
            ("lr_decay", self.lr_decay),
            ("g_weight_decay", a.g_weight_decay),
            ("d_weight_decay", a.d_weight_decay),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::invalid(format!("{name} must be finite and non-negative, got {v}")));
            }
        }
        if let Some((lo, hi)) = self.early_stop_band {
            if !(0.0 <= lo && lo <= hi && hi <= 1.0) || self.early_stop_window == 0 {
                return Err(Error::invalid("early_stop_band must be an accuracy range inside [0, 1] with a positive window"));
            }
        }
        Ok(())
    }

    /// Applies `key = value` lines on top of `self`. Unknown keys are errors.
    pub fn apply_text(mut self, text: &str) -> Result<Self> {
        for (k, v) in parse_key_values(text)? {
            let v = v.as_str();
            let key = k.as_str();
            match key {
                "n_epoch" => self.n_epoch = parse_num(key, v)?,
                "n_epoch_pretrain" => self.n_epoch_pretrain = parse_num(key, v)?,
                "s_batch" => self.s_batch = parse_num(key, v)?,
                "s_minibatch_pretrain" => self.s_minibatch_pretrain = parse_num(key, v)?,
                "n_examples" => self.n_examples = parse_num(key, v)?,
                "label_smoothing_alpha" => self.label_smoothing_alpha = parse_num(key, v)?,
                "snr_range_db" => self.snr_range_db = parse_range(key, v)?,
                "seed" => self.seed = parse_num(key, v)?,
                "lr_g" => self.lr_g = parse_num(key, v)?,
                "lr_d" => self.lr_d = parse_num(key, v)?,
                "lr_decay" => self.lr_decay = parse_num(key, v)?,
                "zeta_g" => self.arch.zeta_g = parse_num(key, v)?,
                "g_weight_decay" => self.arch.g_weight_decay = parse_num(key, v)?,
                "n_kernels" => self.arch.n_kernels = parse_num(key, v)?,
                "kernel_len" => self.arch.kernel_len = parse_num(key, v)?,
                "zeta_d" => self.arch.zeta_d = parse_num(key, v)?,
                "d_dropout" => self.arch.d_dropout = parse_num(key, v)?,
                "d_weight_decay" => self.arch.d_weight_decay = parse_num(key, v)?,
                "early_stop_band" => {
                    self.early_stop_band = if v == "none" { None } else { Some(parse_range(key, v)?) }
                }
                "early_stop_window" => self.early_stop_window = parse_num(key, v)?,
                "record_timing" => self.record_timing = parse_num(key, v)?,
                _ => return Err(Error::Parse(format!("unknown config key {key:?}"))),
            }
        }
        Ok(self)
    }

    pub fn parse(text: &str) -> Result<Self> {
        Self::default().apply_text(text)
    }

    pub fn to_text(&self) -> String {
        let a = &self.arch;
        let mut s = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        put("n_epoch", self.n_epoch.to_string());
        put("n_epoch_pretrain", self.n_epoch_pretrain.to_string());
        put("s_batch", self.s_batch.to_string());
        put("s_minibatch_pretrain", self.s_minibatch_pretrain.to_string());
        put("n_examples", self.n_examples.to_string());
        put("label_smoothing_alpha", format!("{:?}", self.label_smoothing_alpha));
        put("snr_range_db", format!("{:?}:{:?}", self.snr_range_db.0, self.snr_range_db.1));
        put("seed", self.seed.to_string());
        put("lr_g", format!("{:?}", self.lr_g));
        put("lr_d", format!("{:?}", self.lr_d));
        put("lr_decay", format!("{:?}", self.lr_decay));
        put("zeta_g", a.zeta_g.to_string());
        put("g_weight_decay", format!("{:?}", a.g_weight_decay));
        put("n_kernels", a.n_kernels.to_string());
        put("kernel_len", a.kernel_len.to_string());
        put("zeta_d", a.zeta_d.to_string());
        put("d_dropout", format!("{:?}", a.d_dropout));
        put("d_weight_decay", format!("{:?}", a.d_weight_decay));
        put(
            "early_stop_band",
            match self.early_stop_band {
                Some((lo, hi)) => format!("{lo:?}:{hi:?}"),
                None => "none".into(),
            },
        );
        put("early_stop_window", self.early_stop_window.to_string());
        put("record_timing", self.record_timing.to_string());
        s
    }
}
