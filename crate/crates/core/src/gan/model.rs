use rand::Rng;

use super::config::Architecture;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::nn::{Activation, Conv1d, Dense, Dropout, Layer, Mode, Network};

/// Maps a latent packet to a synthetic packet, both `n_fft` wide.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorNet {
    pub net: Network,
    n_fft: usize,
}

impl GeneratorNet {
    pub fn new<R: Rng + ?Sized>(n_fft: usize, arch: &Architecture, rng: &mut R) -> Self {
        let z = arch.zeta_g;
        let net = Network::new(vec![
            Layer::Dense(Dense::new(n_fft, z, Activation::Tanh, 0.0, rng)),
            Layer::Dense(Dense::new(z, z, Activation::Tanh, arch.g_weight_decay, rng)),
            Layer::Dense(Dense::new(z, n_fft, Activation::Tanh, 0.0, rng)),
        ]);
        Self { net, n_fft }
    }

    /// Wraps an existing network after checking its input and output widths.
    pub fn from_network(net: Network) -> Result<Self> {
        let dense: Vec<&Dense> = net
            .layers
            .iter()
            .filter_map(|l| match l {
                Layer::Dense(d) => Some(d),
                _ => None,
            })
            .collect();
        let (first, last) = match (dense.first(), dense.last()) {
            (Some(f), Some(l)) => (f, l),
            _ => return Err(Error::Checkpoint("generator has no dense layers".into())),
        };
        if first.fan_in() != last.fan_out() || dense.len() != net.layers.len() {
            return Err(Error::Checkpoint("generator layers do not form an n_fft -> n_fft stack".into()));
        }
        let n_fft = first.fan_in();
        Ok(Self { net, n_fft })
    }

    pub fn n_fft(&self) -> usize {
        self.n_fft
    }

    /// Inference-mode forward of a `[n × n_fft]` latent batch.
    pub fn generate(&self, z: &Matrix) -> Result<Matrix> {
        // no stochastic layers, so the rng is never drawn from
        self.net.forward(z, Mode::Infer, &mut crate::rng::substream(0, "unused"))
    }

    /// True when every parameter is finite and at least one weight is non-zero.
    pub fn is_initialized(&self) -> bool {
        let params = self.net.params();
        params.iter().all(|p| p.iter().all(|v| v.is_finite())) && params.iter().any(|p| p.iter().any(|&v| v != 0.0))
    }
}

/// Scores packets; column 0 of the output is the real-class probability.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscriminatorNet {
    pub net: Network,
}

impl DiscriminatorNet {
    pub fn new<R: Rng + ?Sized>(n_fft: usize, arch: &Architecture, rng: &mut R) -> Result<Self> {
        if arch.kernel_len > n_fft {
            return Err(Error::invalid(format!("kernel length {} exceeds n_fft {}", arch.kernel_len, n_fft)));
        }
        let conv = Conv1d::new(arch.n_kernels, arch.kernel_len, rng);
        let out_len = conv.out_len(n_fft);
        let zd = arch.zeta_d;
        let drop = || Dropout::new(arch.d_dropout).map(Layer::Dropout);
        let layers = vec![
            Layer::Conv1d(conv),
            Layer::Pointwise(crate::nn::Pointwise::new(arch.n_kernels, zd, Activation::Relu, 0.0, rng)),
            drop()?,
            Layer::Flatten,
            Layer::Dense(Dense::new(zd * out_len, zd, Activation::Identity, arch.d_weight_decay, rng)),
            drop()?,
            Layer::Dense(Dense::new(zd, zd, Activation::Identity, arch.d_weight_decay, rng)),
            drop()?,
            Layer::Dense(Dense::new(zd, zd, Activation::Identity, 0.0, rng)),
            drop()?,
            Layer::Dense(Dense::new(zd, 2, Activation::Softmax, 0.0, rng)),
        ];
        Ok(Self { net: Network::new(layers) })
    }

    /// Real-class probabilities of a batch.
    pub fn predict<R: Rng + ?Sized>(&self, x: &Matrix, mode: Mode, rng: &mut R) -> Result<Vec<f64>> {
        let out = self.net.forward(x, mode, rng)?;
        Ok(out.iter_rows().map(|r| r[0]).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::substream;

    #[test]
    fn generator_shapes_and_range() {
        let mut rng = substream(1, "g");
        let g = GeneratorNet::new(256, &Architecture::default(), &mut rng);
        assert_eq!(g.n_fft(), 256);
        let z = crate::gan::sample_latent(4, 256, 1000.0, 2).unwrap();
        let y = g.generate(&z).unwrap();
        assert_eq!((y.rows(), y.cols()), (4, 256));
        assert!(y.as_slice().iter().all(|v| v.abs() < 1.0));
        assert!(g.is_initialized());
        assert_eq!(GeneratorNet::from_network(g.net.clone()).unwrap(), g);
    }

    #[test]
    fn discriminator_outputs_distributions() {
        let mut rng = substream(1, "d");
        let d = DiscriminatorNet::new(256, &Architecture::default(), &mut rng).unwrap();
        let x = crate::gan::sample_latent(3, 256, 1.0, 2).unwrap();
        for mode in [Mode::Infer, Mode::Train] {
            let out = d.net.forward(&x, mode, &mut rng).unwrap();
            assert_eq!((out.rows(), out.cols()), (3, 2));
            for r in out.iter_rows() {
                assert!((r[0] + r[1] - 1.0).abs() < 1e-12);
            }
        }
        assert!(DiscriminatorNet::new(64, &Architecture::default(), &mut rng).is_err());
    }
}
