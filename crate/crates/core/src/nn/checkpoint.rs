//! Binary model container.
//!
//! All integers and floats are little-endian.
//!
//! ```text
//! magic            4 bytes  "PSG1"
//! version          u32      1
//! n_fft            u32
//! epochs_trained   u64
//! tag              u8       caller-defined (the GAN uses 0 = I, 1 = Q)
//! n_sections       u32
//! section*:
//!   n_layers       u32
//!   layer*:
//!     kind         u8       0 dense, 1 conv1d, 2 pointwise, 3 dropout, 4 flatten
//!     dense / pointwise:
//!       activation u8       0 identity, 1 tanh, 2 relu, 3 softmax
//!       decay      f64
//!       rows, cols u32, u32 (out, in)
//!       weights    f32[rows*cols]  row-major
//!       bias       f32[rows]
//!     conv1d:
//!       n_kernels, kernel_len  u32, u32
//!       kernels    f32[n_kernels*kernel_len]
//!       bias       f32[n_kernels]
//!     dropout:
//!       rate       f64
//!   has_optimizer  u8       0 or 1
//!   optimizer (if present):
//!     lr, beta1, beta2, epsilon, lr_decay   f64 x5
//!     step_count   u64
//!     n_tensors    u32
//!     tensor*:     len u32, first moment f32[len], second moment f32[len]
//! ```
//!
//! Parameters and moments are narrowed to `f32`; hyper-parameters keep
//! full precision. Decoding then re-encoding reproduces the input bytes.

use std::fs;
use std::path::Path;

use super::adam::AdamState;
use super::layers::{Activation, Conv1d, Dense, Dropout, Layer, Pointwise};
use super::network::Network;
use crate::error::{Error, Result};
use crate::matrix::Matrix;

pub const MAGIC: &[u8; 4] = b"PSG1";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Section {
    pub network: Network,
    pub optimizer: Option<AdamState>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub n_fft: u32,
    pub epochs_trained: u64,
    pub tag: u8,
    pub sections: Vec<Section>,
}

impl Checkpoint {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer::default();
        w.buf.extend_from_slice(MAGIC);
        w.u32(VERSION);
        w.u32(self.n_fft);
        w.u64(self.epochs_trained);
        w.u8(self.tag);
        w.u32(self.sections.len() as u32);
        for s in &self.sections {
            w.network(&s.network);
            match &s.optimizer {
                None => w.u8(0),
                Some(opt) => {
                    w.u8(1);
                    w.adam(opt);
                }
            }
        }
        w.buf
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { buf: bytes, pos: 0 };
        if r.take(4)? != MAGIC {
            return Err(Error::Checkpoint("bad magic, not a PSG1 checkpoint".into()));
        }
        let version = r.u32()?;
        if version != VERSION {
            return Err(Error::Checkpoint(format!("unsupported checkpoint version {version}")));
        }
        let n_fft = r.u32()?;
        let epochs_trained = r.u64()?;
        let tag = r.u8()?;
        let n_sections = r.u32()? as usize;
        let mut sections = Vec::with_capacity(n_sections.min(16));
        for _ in 0..n_sections {
            let network = r.network()?;
            let optimizer = match r.u8()? {
                0 => None,
                1 => Some(r.adam()?),
                other => return Err(Error::Checkpoint(format!("bad optimizer flag {other}"))),
            };
            sections.push(Section { network, optimizer });
        }
        if r.pos != bytes.len() {
            return Err(Error::Checkpoint(format!("{} trailing bytes", bytes.len() - r.pos)));
        }
        Ok(Self { n_fft, epochs_trained, tag, sections })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}

#[derive(Default)]
struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    fn u8(&mut self, v: u8) {
        self.buf.push(v);
    }
    fn u32(&mut self, v: u32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
    fn u64(&mut self, v: u64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
    fn f64(&mut self, v: f64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
    fn f32s(&mut self, vs: &[f64]) {
        for &v in vs {
            self.buf.extend_from_slice(&(v as f32).to_le_bytes());
        }
    }

    fn affine(&mut self, act: Activation, decay: f64, w: &Matrix, b: &[f64]) {
        self.u8(act.tag());
        self.f64(decay);
        self.u32(w.rows() as u32);
        self.u32(w.cols() as u32);
        self.f32s(w.as_slice());
        self.f32s(b);
    }

    fn network(&mut self, net: &Network) {
        self.u32(net.layers.len() as u32);
        for layer in &net.layers {
            match layer {
                Layer::Dense(l) => {
                    self.u8(0);
                    self.affine(l.activation, l.weight_decay, &l.weights, &l.bias);
                }
                Layer::Conv1d(l) => {
                    self.u8(1);
                    self.u32(l.n_kernels() as u32);
                    self.u32(l.kernel_len() as u32);
                    self.f32s(l.kernels.as_slice());
                    self.f32s(&l.bias);
                }
                Layer::Pointwise(l) => {
                    self.u8(2);
                    self.affine(l.activation, l.weight_decay, &l.weights, &l.bias);
                }
                Layer::Dropout(d) => {
                    self.u8(3);
                    self.f64(d.rate);
                }
                Layer::Flatten => self.u8(4),
            }
        }
    }

    fn adam(&mut self, s: &AdamState) {
        for v in [s.learning_rate, s.beta1, s.beta2, s.epsilon, s.lr_decay] {
            self.f64(v);
        }
        self.u64(s.step_count);
        self.u32(s.first_moment.len() as u32);
        for (m, v) in s.first_moment.iter().zip(&s.second_moment) {
            self.u32(m.len() as u32);
            self.f32s(m);
            self.f32s(v);
        }
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len());
        let end = end.ok_or_else(|| Error::Checkpoint(format!("unexpected end of data at byte {}", self.pos)))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }
    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn f32s(&mut self, n: usize) -> Result<Vec<f64>> {
        let raw = self.take(n.checked_mul(4).ok_or_else(|| Error::Checkpoint("length overflow".into()))?)?;
        Ok(raw.chunks_exact(4).map(|c| f64::from(f32::from_le_bytes(c.try_into().unwrap()))).collect())
    }

    fn activation(&mut self) -> Result<Activation> {
        let tag = self.u8()?;
        Activation::from_tag(tag).ok_or_else(|| Error::Checkpoint(format!("unknown activation tag {tag}")))
    }

    fn affine(&mut self) -> Result<(Activation, f64, Matrix, Vec<f64>)> {
        let act = self.activation()?;
        let decay = self.f64()?;
        let rows = self.u32()? as usize;
        let cols = self.u32()? as usize;
        let w = Matrix::from_vec(rows, cols, self.f32s(rows * cols)?);
        let b = self.f32s(rows)?;
        Ok((act, decay, w, b))
    }

    fn network(&mut self) -> Result<Network> {
        let n = self.u32()? as usize;
        let mut layers = Vec::with_capacity(n.min(64));
        for _ in 0..n {
            let layer = match self.u8()? {
                0 => {
                    let (activation, weight_decay, weights, bias) = self.affine()?;
                    Layer::Dense(Dense { weights, bias, activation, weight_decay })
                }
                1 => {
                    let nk = self.u32()? as usize;
                    let sk = self.u32()? as usize;
                    let kernels = Matrix::from_vec(nk, sk, self.f32s(nk * sk)?);
                    let bias = self.f32s(nk)?;
                    Layer::Conv1d(Conv1d { kernels, bias })
                }
                2 => {
                    let (activation, weight_decay, weights, bias) = self.affine()?;
                    Layer::Pointwise(Pointwise { weights, bias, activation, weight_decay })
                }
                3 => Layer::Dropout(Dropout::new(self.f64()?).map_err(|e| Error::Checkpoint(e.to_string()))?),
                4 => Layer::Flatten,
                other => return Err(Error::Checkpoint(format!("unknown layer kind {other}"))),
            };
            layers.push(layer);
        }
        Ok(Network::new(layers))
    }

    fn adam(&mut self) -> Result<AdamState> {
        let learning_rate = self.f64()?;
        let beta1 = self.f64()?;
        let beta2 = self.f64()?;
        let epsilon = self.f64()?;
        let lr_decay = self.f64()?;
        let step_count = self.u64()?;
        let n = self.u32()? as usize;
        let mut first_moment = Vec::with_capacity(n.min(64));
        let mut second_moment = Vec::with_capacity(n.min(64));
        for _ in 0..n {
            let len = self.u32()? as usize;
            first_moment.push(self.f32s(len)?);
            second_moment.push(self.f32s(len)?);
        }
        Ok(AdamState { first_moment, second_moment, step_count, learning_rate, beta1, beta2, epsilon, lr_decay })
    }
}
