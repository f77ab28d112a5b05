use rand::Rng;

use super::adam::AdamState;
use super::layers::{Layer, Mode};
use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// A feed-forward stack of layers.
#[derive(Debug, Clone)]
pub struct Network {
    pub layers: Vec<Layer>,
    /// Bumped on every parameter update; caches from older forwards are stale.
    version: u64,
}

impl PartialEq for Network {
    fn eq(&self, other: &Self) -> bool {
        self.layers == other.layers
    }
}

/// Activations recorded by [`Network::forward_cached`].
#[derive(Debug, Clone)]
pub struct ForwardCache {
    /// `acts[i]` is the input of layer `i`; the last entry is the output.
    acts: Vec<Matrix>,
    masks: Vec<Option<Vec<f64>>>,
    version: u64,
    n_layers: usize,
}

impl ForwardCache {
    pub fn output(&self) -> &Matrix {
        self.acts.last().expect("cache holds at least the input")
    }

    pub fn input(&self) -> &Matrix {
        &self.acts[0]
    }
}

/// Parameter gradients in [`Network::params`] order.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients(pub Vec<Vec<f64>>);

impl Gradients {
    pub fn zeros_like(net: &Network) -> Self {
        Gradients(net.params().iter().map(|p| vec![0.0; p.len()]).collect())
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

impl Network {
    pub fn new(layers: Vec<Layer>) -> Self {
        Self { layers, version: 0 }
    }

    pub fn params(&self) -> Vec<&[f64]> {
        self.layers.iter().flat_map(Layer::params).collect()
    }

    pub fn params_mut(&mut self) -> Vec<&mut [f64]> {
        self.version += 1;
        self.layers.iter_mut().flat_map(Layer::params_mut).collect()
    }

    pub fn n_params(&self) -> usize {
        self.params().iter().map(|p| p.len()).sum()
    }

    /// Sum of the weight-decay penalties of every decayed layer.
    pub fn penalty(&self) -> f64 {
        self.layers.iter().map(Layer::penalty).sum()
    }

    pub fn forward<R: Rng + ?Sized>(&self, x: &Matrix, mode: Mode, rng: &mut R) -> Result<Matrix> {
        let mut cur = x.clone();
        for layer in &self.layers {
            cur = layer.forward(&cur, mode, rng)?.0;
        }
        Ok(cur)
    }

    /// Forward pass that keeps every intermediate activation and dropout mask.
    pub fn forward_cached<R: Rng + ?Sized>(&self, x: &Matrix, mode: Mode, rng: &mut R) -> Result<ForwardCache> {
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        let mut masks = Vec::with_capacity(self.layers.len());
        acts.push(x.clone());
        for layer in &self.layers {
            let (y, mask) = layer.forward(acts.last().unwrap(), mode, rng)?;
            acts.push(y);
            masks.push(mask);
        }
        Ok(ForwardCache { acts, masks, version: self.version, n_layers: self.layers.len() })
    }

    /// Back-propagates `upstream = dL/d(output)` and returns the parameter
    /// gradients (weight-decay terms included) and `dL/d(input)`.
    pub fn backward(&self, cache: &ForwardCache, upstream: &Matrix) -> Result<(Gradients, Matrix)> {
        if cache.n_layers != self.layers.len() || cache.acts.len() != self.layers.len() + 1 {
            return Err(Error::shape("activation cache does not match this network"));
        }
        if cache.version != self.version {
            return Err(Error::shape("activation cache is stale: parameters changed after the forward pass"));
        }
        let out = cache.output();
        if (upstream.rows(), upstream.cols()) != (out.rows(), out.cols()) {
            return Err(Error::shape(format!(
                "upstream gradient is {}x{}, output is {}x{}",
                upstream.rows(),
                upstream.cols(),
                out.rows(),
                out.cols()
            )));
        }
        let mut per_layer = Vec::with_capacity(self.layers.len());
        let mut g = upstream.clone();
        for (i, layer) in self.layers.iter().enumerate().rev() {
            let (grads, dx) = layer.backward(&cache.acts[i], &cache.acts[i + 1], cache.masks[i].as_deref(), &g);
            per_layer.push(grads);
            g = dx;
        }
        per_layer.reverse();
        Ok((Gradients(per_layer.into_iter().flatten().collect()), g))
    }

    pub fn apply_adam(&mut self, grads: &Gradients, state: &mut AdamState) -> Result<()> {
        let mut params = self.params_mut();
        state.step(&mut params, &grads.0)
    }
}

/// Free-function form of [`Network::backward`].
pub fn backward_pass(net: &Network, cache: &ForwardCache, upstream: &Matrix) -> Result<Gradients> {
    net.backward(cache, upstream).map(|(g, _)| g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::layers::{Activation, Dense};
    use crate::rng::substream;

    #[test]
    fn zero_upstream_gives_zero_gradients() {
        let mut rng = substream(0, "t");
        let net = Network::new(vec![
            Layer::Dense(Dense::new(4, 3, Activation::Tanh, 0.0, &mut rng)),
            Layer::Dense(Dense::new(3, 2, Activation::Softmax, 0.0, &mut rng)),
        ]);
        let x = Matrix::filled(5, 4, 0.3);
        let cache = net.forward_cached(&x, Mode::Train, &mut rng).unwrap();
        let g = backward_pass(&net, &cache, &Matrix::zeros(5, 2)).unwrap();
        assert_eq!(g.max_abs(), 0.0);
    }

    #[test]
    fn squared_error_on_identity_layer() {
        // L = sum (y - t)^2 with y = W x; dL/dW = 2 (y - t) x^T
        let w = Matrix::from_vec(2, 3, vec![0.5, -1.0, 2.0, 0.0, 1.5, -0.5]);
        let net = Network::new(vec![Layer::Dense(Dense {
            weights: w,
            bias: vec![0.0; 2],
            activation: Activation::Identity,
            weight_decay: 0.0,
        })]);
        let x = Matrix::from_vec(1, 3, vec![1.0, 2.0, -3.0]);
        let t = [0.25, -1.0];
        let cache = net.forward_cached(&x, Mode::Infer, &mut substream(0, "t")).unwrap();
        let y = cache.output().clone();
        let up = Matrix::from_vec(1, 2, (0..2).map(|o| 2.0 * (y[(0, o)] - t[o])).collect());
        let g = backward_pass(&net, &cache, &up).unwrap();
        for o in 0..2 {
            for i in 0..3 {
                let expected = 2.0 * (y[(0, o)] - t[o]) * x[(0, i)];
                assert!((g.0[0][o * 3 + i] - expected).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn stale_and_mismatched_caches_are_rejected() {
        let mut rng = substream(0, "t");
        let mut net = Network::new(vec![Layer::Dense(Dense::new(2, 2, Activation::Identity, 0.0, &mut rng))]);
        let other = Network::new(vec![]);
        let x = Matrix::filled(1, 2, 1.0);
        let cache = net.forward_cached(&x, Mode::Infer, &mut rng).unwrap();
        assert!(other.backward(&cache, &Matrix::zeros(1, 2)).is_err());
        assert!(net.backward(&cache, &Matrix::zeros(2, 2)).is_err());
        net.params_mut()[0][0] += 1.0;
        assert!(net.backward(&cache, &Matrix::zeros(1, 2)).is_err());
    }
}
