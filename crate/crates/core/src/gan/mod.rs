//! Adversarial model of one IQ component: losses, latent sampling, the two
//! networks and the training loop.

mod config;
mod latent;
mod losses;
mod model;
mod train;

pub use config::{Architecture, TrainConfig};
pub use latent::{latent_noise_variance, sample_latent, sample_latent_with};
pub use losses::{
    bce, bce_grad, clamp_prob, discriminator_accuracy, discriminator_loss, generator_loss, generator_loss_grad,
    saturating_generator_loss, saturating_generator_loss_grad, zero_sum_generator_loss, PROB_EPS,
};
pub use model::{DiscriminatorNet, GeneratorNet};
pub use train::{pretrain_discriminator, snr_schedule, train, EpochRecord, GanModel, TrainingLog, LOG_HEADER};
