//! Generation mode: sample both generators, assemble I/Q, undo the frame
//! normalization and smooth packet boundaries into one stream.

use num_complex::Complex64;
use rand::Rng;

use crate::dsp::{overlap_save_reconstruct, raised_cosine_taps, RaisedCosineSpec};
use crate::error::{Error, Result};
use crate::gan::{latent_noise_variance, sample_latent_with, GeneratorNet, TrainConfig};
use crate::matrix::Matrix;
use crate::rng::substream;
use crate::signal::{CaptureMeta, Component, FrameStats, IqRecording};

/// Generator output for one component, values in (-1, 1).
#[derive(Debug, Clone, PartialEq)]
pub struct PseudoPacketMatrix {
    pub packets: Matrix,
    pub component: Component,
}

impl PseudoPacketMatrix {
    pub fn n_gen(&self) -> usize {
        self.packets.rows()
    }

    pub fn n_fft(&self) -> usize {
        self.packets.cols()
    }
}

/// `n_gen` inference passes over fresh latent draws.
pub fn generate_packets(g: &GeneratorNet, component: Component, n_gen: usize, snr_db: f64, seed: u64) -> Result<PseudoPacketMatrix> {
    if !g.is_initialized() {
        return Err(Error::Uninitialized);
    }
    if n_gen == 0 {
        return Err(Error::invalid("n_gen must be at least 1"));
    }
    let sigma2 = latent_noise_variance(1.0, snr_db)?;
    let mut rng = substream(seed, &format!("generate.latent.{}", component.name()));
    let z = sample_latent_with(n_gen, g.n_fft(), sigma2, &mut rng)?;
    Ok(PseudoPacketMatrix { packets: g.generate(&z)?, component })
}

fn check_pair(i: &PseudoPacketMatrix, q: &PseudoPacketMatrix) -> Result<()> {
    if i.component != Component::I || q.component != Component::Q {
        return Err(Error::invalid("expected an I matrix and a Q matrix"));
    }
    if (i.n_gen(), i.n_fft()) != (q.n_gen(), q.n_fft()) {
        return Err(Error::shape(format!(
            "I is {}x{}, Q is {}x{}",
            i.n_gen(),
            i.n_fft(),
            q.n_gen(),
            q.n_fft()
        )));
    }
    Ok(())
}

/// Complex packets `sqrt(P) * (I + jQ)`, row order preserved.
pub fn assemble_iq(i: &PseudoPacketMatrix, q: &PseudoPacketMatrix, frame_power: f64) -> Result<Vec<Vec<Complex64>>> {
    assemble_iq_per_packet(i, q, &vec![frame_power; i.n_gen()])
}

/// Like [`assemble_iq`] with one power per packet.
pub fn assemble_iq_per_packet(i: &PseudoPacketMatrix, q: &PseudoPacketMatrix, powers: &[f64]) -> Result<Vec<Vec<Complex64>>> {
    check_pair(i, q)?;
    if powers.len() != i.n_gen() {
        return Err(Error::shape(format!("{} powers for {} packets", powers.len(), i.n_gen())));
    }
    powers
        .iter()
        .enumerate()
        .map(|(r, &p)| {
            if !(p > 0.0 && p.is_finite()) {
                return Err(Error::invalid(format!("frame power must be positive, got {p}")));
            }
            let g = p.sqrt();
            Ok(i.packets.row(r).iter().zip(q.packets.row(r)).map(|(&a, &b)| Complex64::new(a * g, b * g)).collect())
        })
        .collect()
}

/// Which frame's power rescales the generated packets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrameChoice {
    Fixed(usize),
    /// One frame drawn uniformly per generation call.
    Random,
    /// A frame drawn uniformly for every packet.
    PerPacket,
}

impl std::str::FromStr for FrameChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random" => Ok(FrameChoice::Random),
            "per-packet" => Ok(FrameChoice::PerPacket),
            n => n
                .parse()
                .map(FrameChoice::Fixed)
                .map_err(|_| Error::invalid(format!("frame must be an index, \"random\" or \"per-packet\", got {n:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthesisConfig {
    pub n_gen: usize,
    pub snr_db: f64,
    /// Raised-cosine length; 1 disables filtering.
    pub rc_length: usize,
    pub rolloff: f64,
    pub seed: u64,
    pub frame: FrameChoice,
}

impl SynthesisConfig {
    /// Defaults: `n_gen = 20 * n_packets`, SNR at the middle of the training range,
    /// a 129-tap filter with roll-off 0.25 and a random frame.
    pub fn for_training(train: &TrainConfig, n_packets: usize) -> Self {
        let (lo, hi) = train.snr_range_db;
        Self { n_gen: 20 * n_packets, snr_db: 0.5 * (lo + hi), rc_length: 129, rolloff: 0.25, seed: train.seed, frame: FrameChoice::Random }
    }

    pub fn taps(&self) -> Result<RaisedCosineSpec> {
        if self.rc_length == 1 {
            Ok(RaisedCosineSpec::impulse())
        } else {
            raised_cosine_taps(self.rc_length, self.rolloff)
        }
    }
}

/// Frame power for each generated packet.
pub fn packet_powers(stats: &FrameStats, choice: FrameChoice, n_gen: usize, seed: u64) -> Result<Vec<f64>> {
    let mut rng = substream(seed, "generate.frame");
    let nf = stats.n_frames();
    Ok(match choice {
        FrameChoice::Fixed(f) => vec![stats.power(f)?; n_gen],
        FrameChoice::Random => vec![stats.power(rng.random_range(0..nf))?; n_gen],
        FrameChoice::PerPacket => (0..n_gen).map(|_| stats.power(rng.random_range(0..nf))).collect::<Result<_>>()?,
    })
}

/// Generated packets, denormalized but not yet filtered.
pub fn generate_assembled(i_model: &GeneratorNet, q_model: &GeneratorNet, cfg: &SynthesisConfig, stats: &FrameStats) -> Result<Vec<Vec<Complex64>>> {
    if i_model.n_fft() != q_model.n_fft() {
        return Err(Error::shape(format!("I model is {} wide, Q model is {}", i_model.n_fft(), q_model.n_fft())));
    }
    let i = generate_packets(i_model, Component::I, cfg.n_gen, cfg.snr_db, cfg.seed)?;
    let q = generate_packets(q_model, Component::Q, cfg.n_gen, cfg.snr_db, cfg.seed)?;
    let powers = packet_powers(stats, cfg.frame, cfg.n_gen, cfg.seed)?;
    assemble_iq_per_packet(&i, &q, &powers)
}

/// Full generation chain; the result carries `meta` from the prototype.
pub fn synthesize(
    i_model: &GeneratorNet,
    q_model: &GeneratorNet,
    cfg: &SynthesisConfig,
    stats: &FrameStats,
    meta: &CaptureMeta,
) -> Result<IqRecording> {
    let taps = cfg.taps()?;
    let packets = generate_assembled(i_model, q_model, cfg, stats)?;
    let stream = overlap_save_reconstruct(&packets, &taps)?;
    IqRecording::new(stream, meta.clone())
}
