use rand::Rng;
use rand_distr::{Distribution, Uniform};

use crate::error::{Error, Result};
use crate::matrix::{axpy, dot, Matrix};
use crate::rng::substream;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Identity,
    Tanh,
    Relu,
    /// Row-wise; only valid on dense layers.
    Softmax,
}

impl Activation {
    pub(crate) fn tag(self) -> u8 {
        match self {
            Activation::Identity => 0,
            Activation::Tanh => 1,
            Activation::Relu => 2,
            Activation::Softmax => 3,
        }
    }

    pub(crate) fn from_tag(tag: u8) -> Option<Self> {
        Some(match tag {
            0 => Activation::Identity,
            1 => Activation::Tanh,
            2 => Activation::Relu,
            3 => Activation::Softmax,
            _ => return None,
        })
    }

    /// Applies the activation in place to one row of pre-activations.
    fn apply_row(self, z: &mut [f64]) {
        match self {
            Activation::Identity => {}
            Activation::Tanh => z.iter_mut().for_each(|v| *v = v.tanh()),
            Activation::Relu => z.iter_mut().for_each(|v| *v = v.max(0.0)),
            Activation::Softmax => softmax_in_place(z),
        }
    }

    /// Turns `dL/dy` into `dL/dz` given the activation output `y` of one row.
    fn backward_row(self, y: &[f64], g: &mut [f64]) {
        match self {
            Activation::Identity => {}
            Activation::Tanh => g.iter_mut().zip(y).for_each(|(g, y)| *g *= 1.0 - y * y),
            Activation::Relu => g.iter_mut().zip(y).for_each(|(g, &y)| {
                if y <= 0.0 {
                    *g = 0.0
                }
            }),
            Activation::Softmax => {
                let s = dot(g, y);
                g.iter_mut().zip(y).for_each(|(g, y)| *g = y * (*g - s));
            }
        }
    }
}

fn softmax_in_place(z: &mut [f64]) {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in z.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    z.iter_mut().for_each(|v| *v /= sum);
}

/// Numerically stable softmax.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let mut out = logits.to_vec();
    softmax_in_place(&mut out);
    out
}

/// Glorot-uniform weights `[fan_out × fan_in]`.
pub fn xavier_init(fan_in: usize, fan_out: usize, seed: u64) -> Matrix {
    xavier_with(fan_in, fan_out, fan_out, fan_in, &mut substream(seed, "xavier"))
}

/// Draws a `rows × cols` matrix with the Glorot bound for the given fans.
pub(crate) fn xavier_with<R: Rng + ?Sized>(fan_in: usize, fan_out: usize, rows: usize, cols: usize, rng: &mut R) -> Matrix {
    assert!(fan_in >= 1 && fan_out >= 1, "fans must be positive");
    let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
    let dist = Uniform::new_inclusive(-bound, bound).expect("finite bound");
    Matrix::from_vec(rows, cols, (0..rows * cols).map(|_| dist.sample(rng)).collect())
}

/// Fully connected layer, `y = act(x W^T + b)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub weights: Matrix,
    pub bias: Vec<f64>,
    pub activation: Activation,
    pub weight_decay: f64,
}

impl Dense {
    pub fn new<R: Rng + ?Sized>(fan_in: usize, fan_out: usize, activation: Activation, weight_decay: f64, rng: &mut R) -> Self {
        Self {
            weights: xavier_with(fan_in, fan_out, fan_out, fan_in, rng),
            bias: vec![0.0; fan_out],
            activation,
            weight_decay,
        }
    }

    pub fn fan_in(&self) -> usize {
        self.weights.cols()
    }

    pub fn fan_out(&self) -> usize {
        self.weights.rows()
    }

    pub fn forward(&self, x: &Matrix) -> Result<Matrix> {
        if x.cols() != self.fan_in() {
            return Err(Error::shape(format!("dense expects width {}, got {}", self.fan_in(), x.cols())));
        }
        let mut out = Matrix::zeros(x.rows(), self.fan_out());
        for b in 0..x.rows() {
            let xr = x.row(b);
            let yr = out.row_mut(b);
            for (o, y) in yr.iter_mut().enumerate() {
                *y = dot(self.weights.row(o), xr) + self.bias[o];
            }
            self.activation.apply_row(yr);
        }
        Ok(out)
    }

    fn backward(&self, x: &Matrix, y: &Matrix, g: &Matrix) -> (Vec<Vec<f64>>, Matrix) {
        let (fan_in, fan_out) = (self.fan_in(), self.fan_out());
        let mut gz = g.clone();
        for b in 0..g.rows() {
            self.activation.backward_row(y.row(b), gz.row_mut(b));
        }
        let mut dw = vec![0.0; fan_out * fan_in];
        let mut db = vec![0.0; fan_out];
        let mut dx = Matrix::zeros(x.rows(), fan_in);
        for b in 0..x.rows() {
            let xr = x.row(b);
            for (o, &go) in gz.row(b).iter().enumerate() {
                if go == 0.0 {
                    continue;
                }
                axpy(go, xr, &mut dw[o * fan_in..(o + 1) * fan_in]);
                db[o] += go;
                axpy(go, self.weights.row(o), dx.row_mut(b));
            }
        }
        add_decay(&mut dw, self.weights.as_slice(), self.weight_decay);
        (vec![dw, db], dx)
    }
}

/// Valid (unpadded) 1-D cross-correlation over a single input channel.
///
/// Output rows are `[n_kernels × out_len]`, channel-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Conv1d {
    /// `[n_kernels × kernel_len]`
    pub kernels: Matrix,
    pub bias: Vec<f64>,
}

impl Conv1d {
    pub fn new<R: Rng + ?Sized>(n_kernels: usize, kernel_len: usize, rng: &mut R) -> Self {
        assert!(n_kernels >= 1 && kernel_len >= 1);
        Self {
            kernels: xavier_with(kernel_len, n_kernels * kernel_len, n_kernels, kernel_len, rng),
            bias: vec![0.0; n_kernels],
        }
    }

    pub fn n_kernels(&self) -> usize {
        self.kernels.rows()
    }

    pub fn kernel_len(&self) -> usize {
        self.kernels.cols()
    }

    pub fn out_len(&self, n_in: usize) -> usize {
        n_in + 1 - self.kernel_len()
    }

    pub fn forward(&self, x: &Matrix) -> Result<Matrix> {
        let (nk, sk) = (self.n_kernels(), self.kernel_len());
        if x.cols() < sk {
            return Err(Error::shape(format!("conv1d input length {} shorter than kernel {sk}", x.cols())));
        }
        let len = self.out_len(x.cols());
        let mut out = Matrix::zeros(x.rows(), nk * len);
        for b in 0..x.rows() {
            let xr = x.row(b);
            let yr = out.row_mut(b);
            for k in 0..nk {
                let kern = self.kernels.row(k);
                let bias = self.bias[k];
                for t in 0..len {
                    yr[k * len + t] = dot(kern, &xr[t..t + sk]) + bias;
                }
            }
        }
        Ok(out)
    }

    fn backward(&self, x: &Matrix, g: &Matrix) -> (Vec<Vec<f64>>, Matrix) {
        let (nk, sk) = (self.n_kernels(), self.kernel_len());
        let len = self.out_len(x.cols());
        let mut dk = vec![0.0; nk * sk];
        let mut db = vec![0.0; nk];
        let mut dx = Matrix::zeros(x.rows(), x.cols());
        for b in 0..x.rows() {
            let xr = x.row(b);
            let gr = g.row(b);
            let dxr = dx.row_mut(b);
            for k in 0..nk {
                let kern = self.kernels.row(k);
                let dkk = &mut dk[k * sk..(k + 1) * sk];
                for t in 0..len {
                    let gt = gr[k * len + t];
                    if gt == 0.0 {
                        continue;
                    }
                    db[k] += gt;
                    axpy(gt, &xr[t..t + sk], dkk);
                    axpy(gt, kern, &mut dxr[t..t + sk]);
                }
            }
        }
        (vec![dk, db], dx)
    }
}

/// Dense map over the channel axis of channel-major feature maps,
/// applied identically at every position.
#[derive(Debug, Clone, PartialEq)]
pub struct Pointwise {
    /// `[out_channels × in_channels]`
    pub weights: Matrix,
    pub bias: Vec<f64>,
    pub activation: Activation,
    pub weight_decay: f64,
}

impl Pointwise {
    pub fn new<R: Rng + ?Sized>(in_ch: usize, out_ch: usize, activation: Activation, weight_decay: f64, rng: &mut R) -> Self {
        assert!(activation != Activation::Softmax, "pointwise layers take element-wise activations");
        Self {
            weights: xavier_with(in_ch, out_ch, out_ch, in_ch, rng),
            bias: vec![0.0; out_ch],
            activation,
            weight_decay,
        }
    }

    pub fn in_channels(&self) -> usize {
        self.weights.cols()
    }

    pub fn out_channels(&self) -> usize {
        self.weights.rows()
    }

    fn positions(&self, x: &Matrix) -> Result<usize> {
        let c = self.in_channels();
        if x.cols() % c != 0 {
            return Err(Error::shape(format!("pointwise expects a multiple of {c} features, got {}", x.cols())));
        }
        Ok(x.cols() / c)
    }

    pub fn forward(&self, x: &Matrix) -> Result<Matrix> {
        let len = self.positions(x)?;
        let (ci, co) = (self.in_channels(), self.out_channels());
        let mut out = Matrix::zeros(x.rows(), co * len);
        for b in 0..x.rows() {
            let xr = x.row(b);
            let yr = out.row_mut(b);
            for o in 0..co {
                let seg = &mut yr[o * len..(o + 1) * len];
                seg.fill(self.bias[o]);
                for c in 0..ci {
                    axpy(self.weights[(o, c)], &xr[c * len..(c + 1) * len], seg);
                }
            }
            self.activation.apply_row(yr);
        }
        Ok(out)
    }

    fn backward(&self, x: &Matrix, y: &Matrix, g: &Matrix) -> (Vec<Vec<f64>>, Matrix) {
        let len = x.cols() / self.in_channels();
        let (ci, co) = (self.in_channels(), self.out_channels());
        let mut gz = g.clone();
        for b in 0..g.rows() {
            self.activation.backward_row(y.row(b), gz.row_mut(b));
        }
        let mut dw = vec![0.0; co * ci];
        let mut db = vec![0.0; co];
        let mut dx = Matrix::zeros(x.rows(), x.cols());
        for b in 0..x.rows() {
            let xr = x.row(b);
            let gr = gz.row(b);
            let dxr = dx.row_mut(b);
            for o in 0..co {
                let go = &gr[o * len..(o + 1) * len];
                db[o] += go.iter().sum::<f64>();
                for c in 0..ci {
                    dw[o * ci + c] += dot(go, &xr[c * len..(c + 1) * len]);
                    axpy(self.weights[(o, c)], go, &mut dxr[c * len..(c + 1) * len]);
                }
            }
        }
        add_decay(&mut dw, self.weights.as_slice(), self.weight_decay);
        (vec![dw, db], dx)
    }
}

fn add_decay(dw: &mut [f64], w: &[f64], lambda: f64) {
    if lambda > 0.0 {
        axpy(2.0 * lambda, w, dw);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Infer,
}

/// Inverted dropout: survivors are scaled by `1 / (1 - rate)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dropout {
    pub rate: f64,
}

impl Dropout {
    pub fn new(rate: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&rate) {
            return Err(Error::invalid(format!("dropout rate must be in [0, 1), got {rate}")));
        }
        Ok(Self { rate })
    }

    pub(crate) fn draw_mask<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<f64> {
        let keep = 1.0 / (1.0 - self.rate);
        (0..n).map(|_| if rng.random::<f64>() >= self.rate { keep } else { 0.0 }).collect()
    }
}

/// Applies dropout to `batch`; the returned mask holds the per-element
/// multiplier (all ones in inference mode).
pub fn dropout_apply(layer: &Dropout, batch: &Matrix, mode: Mode, seed: u64) -> Result<(Matrix, Vec<f64>)> {
    let layer = Dropout::new(layer.rate)?;
    let n = batch.rows() * batch.cols();
    match mode {
        Mode::Infer => Ok((batch.clone(), vec![1.0; n])),
        Mode::Train => {
            let mask = layer.draw_mask(n, &mut substream(seed, "dropout"));
            let data = batch.as_slice().iter().zip(&mask).map(|(x, m)| x * m).collect();
            Ok((Matrix::from_vec(batch.rows(), batch.cols(), data), mask))
        }
    }
}

/// One stage of a [`Network`](super::Network).
#[derive(Debug, Clone, PartialEq)]
pub enum Layer {
    Dense(Dense),
    Conv1d(Conv1d),
    Pointwise(Pointwise),
    Dropout(Dropout),
    /// Shape bookkeeping only; rows are already flat.
    Flatten,
}

impl Layer {
    pub(crate) fn params(&self) -> Vec<&[f64]> {
        match self {
            Layer::Dense(l) => vec![l.weights.as_slice(), &l.bias],
            Layer::Conv1d(l) => vec![l.kernels.as_slice(), &l.bias],
            Layer::Pointwise(l) => vec![l.weights.as_slice(), &l.bias],
            Layer::Dropout(_) | Layer::Flatten => vec![],
        }
    }

    pub(crate) fn params_mut(&mut self) -> Vec<&mut [f64]> {
        match self {
            Layer::Dense(l) => vec![l.weights.as_mut_slice(), &mut l.bias],
            Layer::Conv1d(l) => vec![l.kernels.as_mut_slice(), &mut l.bias],
            Layer::Pointwise(l) => vec![l.weights.as_mut_slice(), &mut l.bias],
            Layer::Dropout(_) | Layer::Flatten => vec![],
        }
    }

    /// `lambda * ||W||^2` for decayed layers.
    pub fn penalty(&self) -> f64 {
        let (w, lambda) = match self {
            Layer::Dense(l) => (&l.weights, l.weight_decay),
            Layer::Pointwise(l) => (&l.weights, l.weight_decay),
            _ => return 0.0,
        };
        if lambda > 0.0 {
            lambda * w.as_slice().iter().map(|v| v * v).sum::<f64>()
        } else {
            0.0
        }
    }

    pub(crate) fn forward<R: Rng + ?Sized>(&self, x: &Matrix, mode: Mode, rng: &mut R) -> Result<(Matrix, Option<Vec<f64>>)> {
        Ok(match self {
            Layer::Dense(l) => (l.forward(x)?, None),
            Layer::Conv1d(l) => (l.forward(x)?, None),
            Layer::Pointwise(l) => (l.forward(x)?, None),
            Layer::Flatten => (x.clone(), None),
            Layer::Dropout(d) => match mode {
                Mode::Infer => (x.clone(), None),
                Mode::Train => {
                    let mask = d.draw_mask(x.rows() * x.cols(), rng);
                    let data = x.as_slice().iter().zip(&mask).map(|(a, m)| a * m).collect();
                    (Matrix::from_vec(x.rows(), x.cols(), data), Some(mask))
                }
            },
        })
    }

    pub(crate) fn backward(&self, x: &Matrix, y: &Matrix, mask: Option<&[f64]>, g: &Matrix) -> (Vec<Vec<f64>>, Matrix) {
        match self {
            Layer::Dense(l) => l.backward(x, y, g),
            Layer::Conv1d(l) => l.backward(x, g),
            Layer::Pointwise(l) => l.backward(x, y, g),
            Layer::Flatten => (vec![], g.clone()),
            Layer::Dropout(_) => match mask {
                None => (vec![], g.clone()),
                Some(m) => {
                    let data = g.as_slice().iter().zip(m).map(|(a, m)| a * m).collect();
                    (vec![], Matrix::from_vec(g.rows(), g.cols(), data))
                }
            },
        }
    }
}
