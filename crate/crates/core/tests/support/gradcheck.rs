//! Central finite differences against the analytic backward pass.
//! Shared by the gradient tests and the acceptance runner.

#![allow(dead_code)]

use psgan_core::nn::{Activation, Conv1d, Dense, Dropout, Layer, Mode, Network, Pointwise};
use psgan_core::rng::substream;
use psgan_core::Matrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub const H: f64 = 1e-4;
pub const TOL: f64 = 1e-4;
pub const SEEDS: u64 = 50;

pub struct Case {
    pub name: &'static str,
    pub build: fn(&mut ChaCha8Rng) -> Network,
    pub in_cols: usize,
    pub mode: Mode,
}

fn uniform(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Matrix {
    Matrix::from_vec(rows, cols, (0..rows * cols).map(|_| rng.random_range(-1.0..1.0)).collect())
}

/// `L = sum(w .* y) + penalty`; the dropout stream is replayed so every
/// evaluation sees the same mask.
fn loss(net: &Network, x: &Matrix, w: &Matrix, mode: Mode, seed: u64) -> f64 {
    let y = net.forward(x, mode, &mut substream(seed, "mask")).unwrap();
    y.as_slice().iter().zip(w.as_slice()).map(|(a, b)| a * b).sum::<f64>() + net.penalty()
}

/// Largest deviation in any tensor, relative to that tensor's largest entry.
fn rel_err(analytic: &[f64], numeric: &[f64]) -> f64 {
    let diff = analytic.iter().zip(numeric).map(|(a, n)| (a - n).abs()).fold(0.0, f64::max);
    let scale = analytic.iter().chain(numeric).map(|v| v.abs()).fold(0.0, f64::max);
    if scale < 1e-12 {
        diff
    } else {
        diff / scale
    }
}

/// Checks every parameter tensor and the input gradient; returns the worst error.
fn check(net: &Network, x: &Matrix, mode: Mode, seed: u64) -> f64 {
    let mut rng = substream(seed, "weights");
    let cache = net.forward_cached(x, mode, &mut substream(seed, "mask")).unwrap();
    let out = cache.output();
    let w = uniform(out.rows(), out.cols(), &mut rng);
    let (grads, dx) = net.backward(&cache, &w).unwrap();

    let mut worst = 0.0f64;
    let n_tensors = net.params().len();
    for t in 0..n_tensors {
        let len = net.params()[t].len();
        let mut numeric = vec![0.0; len];
        for (i, slot) in numeric.iter_mut().enumerate() {
            let mut plus = net.clone();
            plus.params_mut()[t][i] += H;
            let mut minus = net.clone();
            minus.params_mut()[t][i] -= H;
            *slot = (loss(&plus, x, &w, mode, seed) - loss(&minus, x, &w, mode, seed)) / (2.0 * H);
        }
        worst = worst.max(rel_err(&grads.0[t], &numeric));
    }
    let mut numeric = vec![0.0; x.as_slice().len()];
    for (i, slot) in numeric.iter_mut().enumerate() {
        let mut xp = x.clone();
        xp.as_mut_slice()[i] += H;
        let mut xm = x.clone();
        xm.as_mut_slice()[i] -= H;
        *slot = (loss(net, &xp, &w, mode, seed) - loss(net, &xm, &w, mode, seed)) / (2.0 * H);
    }
    worst.max(rel_err(dx.as_slice(), &numeric))
}

fn randomize(layer: &mut Layer, rng: &mut ChaCha8Rng) {
    // non-zero biases so their gradients are exercised away from init
    let bias = match layer {
        Layer::Dense(d) => &mut d.bias,
        Layer::Conv1d(c) => &mut c.bias,
        Layer::Pointwise(p) => &mut p.bias,
        _ => return,
    };
    bias.iter_mut().for_each(|b| *b = rng.random_range(-0.5..0.5));
}

/// Smallest |pre-activation| of every ReLU in the stack, to keep finite
/// differences away from the kink.
fn relu_margin(net: &Network, x: &Matrix) -> f64 {
    let mut cur = x.clone();
    let mut margin = f64::INFINITY;
    for layer in &net.layers {
        let pre = match layer {
            Layer::Dense(d) if d.activation == Activation::Relu => {
                Some(Dense { activation: Activation::Identity, ..d.clone() }.forward(&cur).unwrap())
            }
            Layer::Pointwise(p) if p.activation == Activation::Relu => {
                Some(Pointwise { activation: Activation::Identity, ..p.clone() }.forward(&cur).unwrap())
            }
            _ => None,
        };
        if let Some(z) = pre {
            margin = margin.min(z.as_slice().iter().fold(f64::INFINITY, |m, v| m.min(v.abs())));
        }
        cur = Network::new(vec![layer.clone()]).forward(&cur, Mode::Infer, &mut substream(0, "x")).unwrap();
    }
    margin
}

/// Worst relative error over `SEEDS` random instantiations, with the seed that produced it.
pub fn worst_error(case: &Case) -> (f64, u64) {
    let mut worst = (0.0f64, 0);
    for seed in 0..SEEDS {
        let mut attempt = 0;
        let (net, x) = loop {
            let mut rng = substream(seed * 1000 + attempt, case.name);
            let mut net = (case.build)(&mut rng);
            for l in net.layers.iter_mut() {
                randomize(l, &mut rng);
            }
            let x = uniform(3, case.in_cols, &mut rng);
            if relu_margin(&net, &x) > 1e-3 {
                break (net, x);
            }
            attempt += 1;
        };
        let e = check(&net, &x, case.mode, seed);
        if e > worst.0 {
            worst = (e, seed);
        }
    }
    worst
}

fn drop() -> Layer {
    Layer::Dropout(Dropout::new(0.5).unwrap())
}

pub const CASES: &[Case] = &[
    Case { name: "dense_tanh", build: |r| Network::new(vec![Layer::Dense(Dense::new(6, 5, Activation::Tanh, 0.0, r))]), in_cols: 6, mode: Mode::Infer },
    Case { name: "dense_relu", build: |r| Network::new(vec![Layer::Dense(Dense::new(6, 5, Activation::Relu, 0.0, r))]), in_cols: 6, mode: Mode::Infer },
    Case {
        name: "dense_decay",
        build: |r| Network::new(vec![Layer::Dense(Dense::new(6, 4, Activation::Identity, 0.01, r))]),
        in_cols: 6,
        mode: Mode::Infer,
    },
    Case { name: "softmax", build: |r| Network::new(vec![Layer::Dense(Dense::new(7, 2, Activation::Softmax, 0.0, r))]), in_cols: 7, mode: Mode::Infer },
    Case {
        name: "softmax3",
        build: |r| Network::new(vec![Layer::Dense(Dense::new(5, 3, Activation::Softmax, 1e-3, r))]),
        in_cols: 5,
        mode: Mode::Infer,
    },
    Case { name: "conv1d", build: |r| Network::new(vec![Layer::Conv1d(Conv1d::new(3, 5, r))]), in_cols: 12, mode: Mode::Infer },
    Case {
        name: "pointwise",
        build: |r| Network::new(vec![Layer::Conv1d(Conv1d::new(3, 4, r)), Layer::Pointwise(Pointwise::new(3, 4, Activation::Relu, 1e-3, r))]),
        in_cols: 10,
        mode: Mode::Infer,
    },
    Case {
        name: "dropout",
        build: |r| {
            Network::new(vec![
                Layer::Dense(Dense::new(6, 8, Activation::Tanh, 0.0, r)),
                drop(),
                Layer::Dense(Dense::new(8, 3, Activation::Identity, 0.0, r)),
            ])
        },
        in_cols: 6,
        mode: Mode::Train,
    },
    Case {
        name: "discriminator",
        build: |r| {
            Network::new(vec![
                Layer::Conv1d(Conv1d::new(3, 4, r)),
                Layer::Pointwise(Pointwise::new(3, 4, Activation::Relu, 0.0, r)),
                drop(),
                Layer::Flatten,
                Layer::Dense(Dense::new(4 * 9, 4, Activation::Identity, 1e-4, r)),
                drop(),
                Layer::Dense(Dense::new(4, 4, Activation::Identity, 1e-4, r)),
                drop(),
                Layer::Dense(Dense::new(4, 2, Activation::Softmax, 0.0, r)),
            ])
        },
        in_cols: 12,
        mode: Mode::Train,
    },
    Case {
        name: "generator",
        build: |r| {
            Network::new(vec![
                Layer::Dense(Dense::new(8, 6, Activation::Tanh, 0.0, r)),
                Layer::Dense(Dense::new(6, 6, Activation::Tanh, 1e-3, r)),
                Layer::Dense(Dense::new(6, 8, Activation::Tanh, 0.0, r)),
            ])
        },
        in_cols: 8,
        mode: Mode::Infer,
    },
];
