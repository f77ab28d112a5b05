//! I/Q recordings, the raw `cf32` file format, packet/frame tensors and
//! per-frame power normalization.
//!
//! On disk a recording is a headerless stream of little-endian `f32`
//! pairs (I then Q) with a UTF-8 `key=value` sidecar next to it at
//! `<payload path>.meta`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Payload encodings understood by [`load_iq`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum IqFormat {
    /// Interleaved little-endian IEEE-754 `f32`, I then Q.
    #[default]
    Cf32Le,
}

impl std::str::FromStr for IqFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cf32" | "cf32le" | "cf32_le" => Ok(IqFormat::Cf32Le),
            other => Err(Error::invalid(format!("unknown I/Q format {other:?}"))),
        }
    }
}

/// Capture metadata carried in the sidecar file.
#[derive(Debug, Clone, PartialEq)]
pub struct CaptureMeta {
    pub sample_rate_hz: f64,
    pub center_freq_hz: f64,
    pub rx_gain_db: f64,
    /// Any further keys, preserved verbatim in sorted order.
    pub extra: BTreeMap<String, String>,
}

impl CaptureMeta {
    pub fn new(sample_rate_hz: f64, center_freq_hz: f64, rx_gain_db: f64) -> Self {
        Self { sample_rate_hz, center_freq_hz, rx_gain_db, extra: BTreeMap::new() }
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        // `{:?}` prints the shortest representation that round-trips.
        let _ = writeln!(s, "sample_rate_hz={:?}", self.sample_rate_hz);
        let _ = writeln!(s, "center_freq_hz={:?}", self.center_freq_hz);
        let _ = writeln!(s, "rx_gain_db={:?}", self.rx_gain_db);
        for (k, v) in &self.extra {
            let _ = writeln!(s, "{k}={v}");
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut map = parse_key_values(text)?;
        let mut take = |key: &str| -> Result<f64> {
            let v = map
                .remove(key)
                .ok_or_else(|| Error::Metadata(format!("missing key {key}")))?;
            v.parse::<f64>()
                .map_err(|_| Error::Metadata(format!("{key}: not a number: {v:?}")))
        };
        let sample_rate_hz = take("sample_rate_hz")?;
        let center_freq_hz = take("center_freq_hz")?;
        let rx_gain_db = take("rx_gain_db")?;
        if !(sample_rate_hz > 0.0 && sample_rate_hz.is_finite()) {
            return Err(Error::Metadata(format!("sample_rate_hz must be positive, got {sample_rate_hz}")));
        }
        if !(center_freq_hz >= 0.0 && center_freq_hz.is_finite()) {
            return Err(Error::Metadata(format!("center_freq_hz must be non-negative, got {center_freq_hz}")));
        }
        if !rx_gain_db.is_finite() {
            return Err(Error::Metadata("rx_gain_db must be finite".into()));
        }
        Ok(Self { sample_rate_hz, center_freq_hz, rx_gain_db, extra: map })
    }
}

/// Parses UTF-8 `key=value` lines. Blank lines and `#` comments are skipped.
pub fn parse_key_values(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("line {}: expected key=value, got {line:?}", n + 1)))?;
        map.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(map)
}

/// A finite complex baseband capture.
#[derive(Debug, Clone, PartialEq)]
pub struct IqRecording {
    samples: Vec<Complex64>,
    pub meta: CaptureMeta,
}

impl IqRecording {
    pub fn new(samples: Vec<Complex64>, meta: CaptureMeta) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::EmptyPayload);
        }
        if let Some(i) = samples.iter().position(|s| !(s.re.is_finite() && s.im.is_finite())) {
            return Err(Error::NonFinite(i));
        }
        if !(meta.sample_rate_hz > 0.0) {
            return Err(Error::Metadata("sample_rate_hz must be positive".into()));
        }
        Ok(Self { samples, meta })
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.meta.sample_rate_hz
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.meta.sample_rate_hz
    }

    /// Mean of `|s|^2` over the whole capture.
    pub fn mean_power(&self) -> f64 {
        self.samples.iter().map(|s| s.norm_sqr()).sum::<f64>() / self.samples.len() as f64
    }
}

pub fn sidecar_path(payload: &Path) -> PathBuf {
    let mut s = payload.as_os_str().to_os_string();
    s.push(".meta");
    PathBuf::from(s)
}

/// Decodes a raw `cf32` payload.
pub fn decode_cf32(bytes: &[u8]) -> Result<Vec<Complex64>> {
    if bytes.is_empty() {
        return Err(Error::EmptyPayload);
    }
    if bytes.len() % 8 != 0 {
        return Err(Error::TruncatedSample(bytes.len()));
    }
    bytes
        .chunks_exact(8)
        .enumerate()
        .map(|(k, c)| {
            let re = f32::from_le_bytes([c[0], c[1], c[2], c[3]]);
            let im = f32::from_le_bytes([c[4], c[5], c[6], c[7]]);
            if re.is_finite() && im.is_finite() {
                Ok(Complex64::new(f64::from(re), f64::from(im)))
            } else {
                Err(Error::NonFinite(k))
            }
        })
        .collect()
}

/// Encodes samples as `cf32`, narrowing each component to `f32`.
pub fn encode_cf32(samples: &[Complex64]) -> Vec<u8> {
    let mut out = Vec::with_capacity(samples.len() * 8);
    for s in samples {
        out.extend_from_slice(&(s.re as f32).to_le_bytes());
        out.extend_from_slice(&(s.im as f32).to_le_bytes());
    }
    out
}

pub fn load_iq(path: &Path, format: IqFormat) -> Result<IqRecording> {
    let IqFormat::Cf32Le = format;
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let samples = decode_cf32(&bytes)?;
    let meta_path = sidecar_path(path);
    let text = fs::read_to_string(&meta_path).map_err(|e| Error::io(&meta_path, e))?;
    let meta = CaptureMeta::parse(&text)?;
    IqRecording::new(samples, meta)
}

/// Writes the payload and its `.meta` sidecar.
pub fn save_iq(path: &Path, rec: &IqRecording) -> Result<()> {
    fs::write(path, encode_cf32(rec.samples())).map_err(|e| Error::io(path, e))?;
    let meta_path = sidecar_path(path);
    fs::write(&meta_path, rec.meta.to_text()).map_err(|e| Error::io(&meta_path, e))
}

/// I or Q.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Component {
    I = 0,
    Q = 1,
}

impl Component {
    pub const BOTH: [Component; 2] = [Component::I, Component::Q];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Component::I => "i",
            Component::Q => "q",
        }
    }
}

impl std::str::FromStr for Component {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "i" | "I" => Ok(Component::I),
            "q" | "Q" => Ok(Component::Q),
            other => Err(Error::invalid(format!("component must be I or Q, got {other:?}"))),
        }
    }
}

/// A recording arranged as `[frame][packet][I/Q][sample]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PrototypeTensor {
    data: Vec<f64>,
    n_frames: usize,
    n_packets: usize,
    packet_len: usize,
    normalized: bool,
}

impl PrototypeTensor {
    pub const DIM_IQ: usize = 2;

    pub fn n_frames(&self) -> usize {
        self.n_frames
    }

    pub fn n_packets(&self) -> usize {
        self.n_packets
    }

    pub fn packet_len(&self) -> usize {
        self.packet_len
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    fn offset(&self, frame: usize, packet: usize, comp: usize) -> usize {
        ((frame * self.n_packets + packet) * Self::DIM_IQ + comp) * self.packet_len
    }

    /// One packet of one component.
    pub fn packet(&self, frame: usize, packet: usize, comp: Component) -> &[f64] {
        let o = self.offset(frame, packet, comp.index());
        &self.data[o..o + self.packet_len]
    }

    /// All packets of one component of one frame, `[n_packets × packet_len]`.
    pub fn component_matrix(&self, frame: usize, comp: Component) -> Result<Matrix> {
        self.check_frame(frame)?;
        let mut m = Matrix::zeros(self.n_packets, self.packet_len);
        for p in 0..self.n_packets {
            m.row_mut(p).copy_from_slice(self.packet(frame, p, comp));
        }
        Ok(m)
    }

    /// Complex packets of one frame.
    pub fn frame_packets(&self, frame: usize) -> Result<Vec<Vec<Complex64>>> {
        self.check_frame(frame)?;
        Ok((0..self.n_packets)
            .map(|p| {
                let i = self.packet(frame, p, Component::I);
                let q = self.packet(frame, p, Component::Q);
                i.iter().zip(q).map(|(&re, &im)| Complex64::new(re, im)).collect()
            })
            .collect())
    }

    pub fn check_frame(&self, frame: usize) -> Result<()> {
        if frame >= self.n_frames {
            return Err(Error::invalid(format!("frame index {frame} out of range (N_f = {})", self.n_frames)));
        }
        Ok(())
    }

    /// Mean `I^2 + Q^2` over every sample of the frame.
    pub fn frame_power(&self, frame: usize) -> f64 {
        let start = self.offset(frame, 0, 0);
        let end = self.offset(frame + 1, 0, 0);
        let sum: f64 = self.data[start..end].iter().map(|v| v * v).sum();
        sum / (self.n_packets * self.packet_len) as f64
    }
}

/// Original per-frame average power, kept for denormalization.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameStats {
    pub per_frame_power: Vec<f64>,
}

impl FrameStats {
    pub fn new(per_frame_power: Vec<f64>) -> Result<Self> {
        if per_frame_power.is_empty() {
            return Err(Error::invalid("frame stats must hold at least one frame"));
        }
        if let Some(i) = per_frame_power.iter().position(|&p| !(p > 0.0 && p.is_finite())) {
            return Err(Error::ZeroPowerFrame(i));
        }
        Ok(Self { per_frame_power })
    }

    pub fn n_frames(&self) -> usize {
        self.per_frame_power.len()
    }

    pub fn power(&self, frame: usize) -> Result<f64> {
        self.per_frame_power
            .get(frame)
            .copied()
            .ok_or_else(|| Error::invalid(format!("frame index {frame} out of range (N_f = {})", self.n_frames())))
    }
}

/// Number of whole packets per frame, `floor(N_s / (N_f * N_FFT))`.
pub fn packets_per_frame(n_samples: usize, n_fft: usize, n_frames: usize) -> usize {
    n_samples / (n_frames * n_fft)
}

/// Splits a recording into `n_frames` frames of equal packet count.
/// Samples that do not fill a packet in every frame are dropped.
pub fn frame_tensor(rec: &IqRecording, n_fft: usize, n_frames: usize) -> Result<PrototypeTensor> {
    if n_fft < 2 {
        return Err(Error::invalid(format!("n_fft must be >= 2, got {n_fft}")));
    }
    if n_frames < 1 {
        return Err(Error::invalid("n_frames must be >= 1"));
    }
    let n_packets = packets_per_frame(rec.len(), n_fft, n_frames);
    if n_packets == 0 {
        return Err(Error::Insufficient(format!(
            "{} samples cannot fill one {n_fft}-sample packet in each of {n_frames} frames",
            rec.len()
        )));
    }
    let samples = rec.samples();
    let mut data = Vec::with_capacity(n_frames * n_packets * 2 * n_fft);
    for block in samples.chunks_exact(n_fft).take(n_frames * n_packets) {
        data.extend(block.iter().map(|s| s.re));
        data.extend(block.iter().map(|s| s.im));
    }
    Ok(PrototypeTensor { data, n_frames, n_packets, packet_len: n_fft, normalized: false })
}

/// Scales every frame to unit average power and returns the original powers.
pub fn normalize_frames(t: &PrototypeTensor) -> Result<(PrototypeTensor, FrameStats)> {
    if t.normalized {
        return Err(Error::invalid("tensor is already normalized"));
    }
    let mut out = t.clone();
    let frame_len = t.n_packets * PrototypeTensor::DIM_IQ * t.packet_len;
    let mut powers = Vec::with_capacity(t.n_frames);
    for (f, frame) in out.data.chunks_exact_mut(frame_len).enumerate() {
        let power = t.frame_power(f);
        if !(power > 0.0) {
            return Err(Error::ZeroPowerFrame(f));
        }
        let scale = power.sqrt().recip();
        frame.iter_mut().for_each(|v| *v *= scale);
        powers.push(power);
    }
    out.normalized = true;
    Ok((out, FrameStats { per_frame_power: powers }))
}

/// Inverse of [`normalize_frames`] for a block of packets.
pub fn denormalize(packets: &Matrix, frame_power: f64) -> Result<Matrix> {
    if !(frame_power > 0.0 && frame_power.is_finite()) {
        return Err(Error::invalid(format!("frame_power must be positive, got {frame_power}")));
    }
    let g = frame_power.sqrt();
    Ok(packets.map(|v| v * g))
}
