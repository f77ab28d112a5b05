use std::path::Path;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::config::TrainConfig;
use super::latent::{latent_noise_variance, sample_latent_with};
use super::losses::{bce_grad, discriminator_accuracy, discriminator_loss, generator_loss, generator_loss_grad};
use super::model::{DiscriminatorNet, GeneratorNet};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::nn::{AdamState, Checkpoint, Mode, Section};
use crate::rng::substream;
use crate::signal::{Component, FrameStats, PrototypeTensor};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub d_loss: f64,
    pub g_loss: f64,
    pub d_accuracy: f64,
    pub snr_db: f64,
    pub wall_ms: u64,
}

/// Per-epoch metrics of one run, in epoch order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainingLog {
    pub records: Vec<EpochRecord>,
}

pub const LOG_HEADER: &str = "epoch,d_loss,g_loss,d_accuracy,snr_db,wall_ms";

impl TrainingLog {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Mean accuracy over the last `n` epochs (all of them if fewer).
    pub fn mean_accuracy_last(&self, n: usize) -> Option<f64> {
        let tail = &self.records[self.records.len().saturating_sub(n)..];
        if tail.is_empty() {
            return None;
        }
        Some(tail.iter().map(|r| r.d_accuracy).sum::<f64>() / tail.len() as f64)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from(LOG_HEADER);
        s.push('\n');
        for r in &self.records {
            s.push_str(&format!("{},{},{},{},{},{}\n", r.epoch, r.d_loss, r.g_loss, r.d_accuracy, r.snr_db, r.wall_ms));
        }
        s
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        if lines.next().map(str::trim) != Some(LOG_HEADER) {
            return Err(Error::Parse("training log: missing header".into()));
        }
        let mut records = Vec::new();
        for (i, line) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 6 {
                return Err(Error::Parse(format!("training log line {}: expected 6 fields", i + 2)));
            }
            let bad = |_| Error::Parse(format!("training log line {}: bad number", i + 2));
            records.push(EpochRecord {
                epoch: f[0].parse().map_err(|_| Error::Parse(format!("training log line {}: bad epoch", i + 2)))?,
                d_loss: f[1].parse().map_err(bad)?,
                g_loss: f[2].parse().map_err(bad)?,
                d_accuracy: f[3].parse().map_err(bad)?,
                snr_db: f[4].parse().map_err(bad)?,
                wall_ms: f[5].parse().map_err(|_| Error::Parse(format!("training log line {}: bad wall_ms", i + 2)))?,
            });
        }
        Ok(Self { records })
    }
}

/// Both networks of one component and their optimizer states.
#[derive(Debug, Clone, PartialEq)]
pub struct GanModel {
    pub component: Component,
    pub generator: GeneratorNet,
    pub discriminator: DiscriminatorNet,
    pub g_opt: AdamState,
    pub d_opt: AdamState,
    pub epochs_trained: u64,
}

fn stream(cfg: &TrainConfig, comp: Component, what: &str) -> ChaCha8Rng {
    substream(cfg.seed, &format!("{what}.{}", comp.name()))
}

impl GanModel {
    /// Freshly initialized networks for one component.
    pub fn new(n_fft: usize, component: Component, cfg: &TrainConfig) -> Result<Self> {
        let generator = GeneratorNet::new(n_fft, &cfg.arch, &mut stream(cfg, component, "init.g"));
        let discriminator = DiscriminatorNet::new(n_fft, &cfg.arch, &mut stream(cfg, component, "init.d"))?;
        let mut g_opt = AdamState::for_params(&generator.net.params(), cfg.lr_g);
        let mut d_opt = AdamState::for_params(&discriminator.net.params(), cfg.lr_d);
        g_opt.lr_decay = cfg.lr_decay;
        d_opt.lr_decay = cfg.lr_decay;
        Ok(Self { component, generator, discriminator, g_opt, d_opt, epochs_trained: 0 })
    }

    pub fn n_fft(&self) -> usize {
        self.generator.n_fft()
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        Checkpoint {
            n_fft: self.n_fft() as u32,
            epochs_trained: self.epochs_trained,
            tag: self.component.index() as u8,
            sections: vec![
                Section { network: self.generator.net.clone(), optimizer: Some(self.g_opt.clone()) },
                Section { network: self.discriminator.net.clone(), optimizer: Some(self.d_opt.clone()) },
            ],
        }
    }

    pub fn from_checkpoint(ck: Checkpoint) -> Result<Self> {
        let component = match ck.tag {
            0 => Component::I,
            1 => Component::Q,
            t => return Err(Error::Checkpoint(format!("unknown component tag {t}"))),
        };
        let [g, d]: [Section; 2] =
            ck.sections.try_into().map_err(|_| Error::Checkpoint("expected generator and discriminator sections".into()))?;
        let generator = GeneratorNet::from_network(g.network)?;
        if generator.n_fft() != ck.n_fft as usize {
            return Err(Error::Checkpoint(format!("header n_fft {} but generator width {}", ck.n_fft, generator.n_fft())));
        }
        let discriminator = DiscriminatorNet { net: d.network };
        let g_opt = g.optimizer.ok_or_else(|| Error::Checkpoint("generator optimizer state missing".into()))?;
        let d_opt = d.optimizer.ok_or_else(|| Error::Checkpoint("discriminator optimizer state missing".into()))?;
        Ok(Self { component, generator, discriminator, g_opt, d_opt, epochs_trained: ck.epochs_trained })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        self.to_checkpoint().save(path)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_checkpoint(Checkpoint::load(path)?)
    }
}

/// One supervised minibatch update of the discriminator. Returns the
/// train-mode real-class probabilities seen before the update.
fn discriminator_step<R: Rng + ?Sized>(
    d: &mut DiscriminatorNet,
    opt: &mut AdamState,
    x: &Matrix,
    targets: &[f64],
    rng: &mut R,
) -> Result<Vec<f64>> {
    let cache = d.net.forward_cached(x, Mode::Train, rng)?;
    let probs: Vec<f64> = cache.output().iter_rows().map(|r| r[0]).collect();
    let b = probs.len() as f64;
    let mut up = Matrix::zeros(probs.len(), 2);
    for (i, (&p, &t)) in probs.iter().zip(targets).enumerate() {
        up[(i, 0)] = bce_grad(p, t) / b;
    }
    let (grads, _) = d.net.backward(&cache, &up)?;
    d.net.apply_adam(&grads, opt)?;
    Ok(probs)
}

/// One generator update through the frozen discriminator. Returns `D(G(z))`.
fn generator_step<R: Rng + ?Sized>(
    g: &mut GeneratorNet,
    opt: &mut AdamState,
    d: &DiscriminatorNet,
    z: &Matrix,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let g_cache = g.net.forward_cached(z, Mode::Train, rng)?;
    let d_cache = d.net.forward_cached(g_cache.output(), Mode::Train, rng)?;
    let q: Vec<f64> = d_cache.output().iter_rows().map(|r| r[0]).collect();
    let b = q.len() as f64;
    let mut up = Matrix::zeros(q.len(), 2);
    for (i, &v) in q.iter().enumerate() {
        up[(i, 0)] = generator_loss_grad(v) / b;
    }
    let (_, dx) = d.net.backward(&d_cache, &up)?;
    let (grads, _) = g.net.backward(&g_cache, &dx)?;
    g.net.apply_adam(&grads, opt)?;
    Ok(q)
}

/// The per-epoch SNR draws `train` makes for component `comp`, in order.
pub fn snr_schedule(cfg: &TrainConfig, comp: Component, n: usize) -> Vec<f64> {
    let mut rng = stream(cfg, comp, "train.snr");
    (0..n).map(|_| draw_snr(cfg, &mut rng)).collect()
}

fn draw_snr<R: Rng + ?Sized>(cfg: &TrainConfig, rng: &mut R) -> f64 {
    let (lo, hi) = cfg.snr_range_db;
    if lo == hi {
        lo
    } else {
        rng.random_range(lo..=hi)
    }
}

/// Supervised rounds on prototype packets (target `1 - alpha`) against raw
/// latent noise (target 0). The generator is not touched.
pub fn pretrain_discriminator(model: &mut GanModel, frame_packets: &Matrix, cfg: &TrainConfig) -> Result<()> {
    let n_fft = model.n_fft();
    if frame_packets.cols() != n_fft {
        return Err(Error::shape(format!("packets are {} wide, model expects {}", frame_packets.cols(), n_fft)));
    }
    if frame_packets.rows() < cfg.n_examples {
        return Err(Error::Insufficient(format!(
            "pretraining needs {} packets, frame holds {}",
            cfg.n_examples,
            frame_packets.rows()
        )));
    }
    let comp = model.component;
    let mut rng = stream(cfg, comp, "pretrain");
    let mut drop_rng = stream(cfg, comp, "pretrain.dropout");
    let target_real = 1.0 - cfg.label_smoothing_alpha;
    for _ in 0..cfg.n_epoch_pretrain {
        let sigma2 = latent_noise_variance(1.0, draw_snr(cfg, &mut rng))?;
        let mut idx: Vec<usize> = (0..frame_packets.rows()).collect();
        idx.shuffle(&mut rng);
        idx.truncate(cfg.n_examples);
        let real = frame_packets.select_rows(&idx);
        let noise = sample_latent_with(cfg.n_examples, n_fft, sigma2, &mut rng)?;
        let pool = real.vstack(&noise);
        let mut targets = vec![target_real; cfg.n_examples];
        targets.resize(2 * cfg.n_examples, 0.0);
        let mut order: Vec<usize> = (0..pool.rows()).collect();
        order.shuffle(&mut rng);
        for chunk in order.chunks(cfg.s_minibatch_pretrain) {
            let x = pool.select_rows(chunk);
            let t: Vec<f64> = chunk.iter().map(|&i| targets[i]).collect();
            discriminator_step(&mut model.discriminator, &mut model.d_opt, &x, &t, &mut drop_rng)?;
        }
    }
    Ok(())
}

/// Adversarial training of `model` on one component of one frame.
pub fn train(
    mut model: GanModel,
    tensor: &PrototypeTensor,
    stats: &FrameStats,
    frame: usize,
    cfg: &TrainConfig,
) -> Result<(GanModel, TrainingLog)> {
    if !tensor.is_normalized() {
        return Err(Error::invalid("training expects a normalized prototype tensor"));
    }
    if stats.n_frames() != tensor.n_frames() {
        return Err(Error::shape(format!("{} frame powers for {} frames", stats.n_frames(), tensor.n_frames())));
    }
    tensor.check_frame(frame)?;
    let n_fft = tensor.packet_len();
    if model.n_fft() != n_fft {
        return Err(Error::shape(format!("model is {} wide, packets are {}", model.n_fft(), n_fft)));
    }
    cfg.validate(n_fft)?;
    if tensor.n_packets() < cfg.n_examples {
        return Err(Error::Insufficient(format!(
            "n_examples = {} but the frame holds {} packets",
            cfg.n_examples,
            tensor.n_packets()
        )));
    }
    let comp = model.component;
    let packets = tensor.component_matrix(frame, comp)?;
    let mut snr_rng = stream(cfg, comp, "train.snr");
    let mut latent_rng = stream(cfg, comp, "train.latent");
    let mut shuffle_rng = stream(cfg, comp, "train.shuffle");
    let mut drop_rng = stream(cfg, comp, "train.dropout");
    let target_real = 1.0 - cfg.label_smoothing_alpha;
    let n = cfg.n_examples;
    let mut log = TrainingLog::default();

    for epoch in 0..cfg.n_epoch {
        let started = Instant::now();
        let snr_db = draw_snr(cfg, &mut snr_rng);
        let sigma2 = latent_noise_variance(1.0, snr_db)?;

        let z = sample_latent_with(n, n_fft, sigma2, &mut latent_rng)?;
        let fake = model.generator.generate(&z)?;
        let mut idx: Vec<usize> = (0..packets.rows()).collect();
        idx.shuffle(&mut shuffle_rng);
        idx.truncate(n);
        let pool = packets.select_rows(&idx).vstack(&fake);
        let mut order: Vec<usize> = (0..2 * n).collect();
        order.shuffle(&mut shuffle_rng);

        let mut p_real = Vec::with_capacity(n);
        let mut p_fake = Vec::with_capacity(n);
        for chunk in order.chunks(cfg.s_batch) {
            let x = pool.select_rows(chunk);
            let t: Vec<f64> = chunk.iter().map(|&i| if i < n { target_real } else { 0.0 }).collect();
            let probs = discriminator_step(&mut model.discriminator, &mut model.d_opt, &x, &t, &mut drop_rng)?;
            for (&i, p) in chunk.iter().zip(probs) {
                if i < n {
                    p_real.push(p)
                } else {
                    p_fake.push(p)
                }
            }
        }
        let d_loss = discriminator_loss(&p_real, &p_fake, cfg.label_smoothing_alpha);
        let d_accuracy = discriminator_accuracy(&p_real, &p_fake)?;

        let z = sample_latent_with(n, n_fft, sigma2, &mut latent_rng)?;
        let mut q_all = Vec::with_capacity(n);
        for start in (0..n).step_by(cfg.s_batch) {
            let rows: Vec<usize> = (start..(start + cfg.s_batch).min(n)).collect();
            let q = generator_step(&mut model.generator, &mut model.g_opt, &model.discriminator, &z.select_rows(&rows), &mut drop_rng)?;
            q_all.extend(q);
        }
        let g_loss = generator_loss(&q_all);

        if !d_loss.is_finite() || !g_loss.is_finite() {
            return Err(Error::Diverged { epoch, d_loss, g_loss });
        }
        model.epochs_trained += 1;
        let wall_ms = if cfg.record_timing { started.elapsed().as_millis() as u64 } else { 0 };
        log.records.push(EpochRecord { epoch, d_loss, g_loss, d_accuracy, snr_db, wall_ms });

        if let Some((lo, hi)) = cfg.early_stop_band {
            if log.len() >= cfg.early_stop_window {
                let acc = log.mean_accuracy_last(cfg.early_stop_window).unwrap_or(0.0);
                if (lo..=hi).contains(&acc) {
                    break;
                }
            }
        }
    }
    Ok((model, log))
}
