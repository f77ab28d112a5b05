//! Adversarial objectives on the discriminator's real-class probability.

/// Probabilities are clamped to `[PROB_EPS, 1 - PROB_EPS]` before any log.
pub const PROB_EPS: f64 = 1e-7;

#[inline]
pub fn clamp_prob(p: f64) -> f64 {
    p.clamp(PROB_EPS, 1.0 - PROB_EPS)
}

fn mean(xs: impl ExactSizeIterator<Item = f64>) -> f64 {
    let n = xs.len();
    if n == 0 {
        0.0
    } else {
        xs.sum::<f64>() / n as f64
    }
}

/// Binary cross-entropy of one prediction against a soft target.
#[inline]
pub fn bce(p: f64, target: f64) -> f64 {
    let p = clamp_prob(p);
    -(target * p.ln() + (1.0 - target) * (1.0 - p).ln())
}

/// `d bce / d p` at the clamped probability.
#[inline]
pub fn bce_grad(p: f64, target: f64) -> f64 {
    let p = clamp_prob(p);
    -(target / p - (1.0 - target) / (1.0 - p))
}

/// Half-weighted cross-entropy of the discriminator: prototype packets
/// carry the one-sided smoothed target `1 - alpha`, generated packets
/// target exactly 0.
pub fn discriminator_loss(d_real: &[f64], d_fake: &[f64], alpha: f64) -> f64 {
    0.5 * mean(d_real.iter().map(|&p| bce(p, 1.0 - alpha))) + 0.5 * mean(d_fake.iter().map(|&q| bce(q, 0.0)))
}

/// Non-saturating generator loss, `-1/2 E[log D(G(z))]`.
pub fn generator_loss(d_fake: &[f64]) -> f64 {
    -0.5 * mean(d_fake.iter().map(|&q| clamp_prob(q).ln()))
}

/// Per-sample derivative of [`generator_loss`] with respect to `D(G(z))`.
pub fn generator_loss_grad(q: f64) -> f64 {
    -0.5 / clamp_prob(q)
}

/// The saturating form `1/2 E[log(1 - D(G(z)))]`.
pub fn saturating_generator_loss(d_fake: &[f64]) -> f64 {
    0.5 * mean(d_fake.iter().map(|&q| (1.0 - clamp_prob(q)).ln()))
}

/// Per-sample derivative of [`saturating_generator_loss`].
pub fn saturating_generator_loss_grad(q: f64) -> f64 {
    -0.5 / (1.0 - clamp_prob(q))
}

/// The zero-sum generator objective over both batches,
/// `1/2 E[log D(x)] + 1/2 E[log(1 - D(G(z)))]`.
pub fn zero_sum_generator_loss(d_real: &[f64], d_fake: &[f64]) -> f64 {
    0.5 * mean(d_real.iter().map(|&p| clamp_prob(p).ln())) + saturating_generator_loss(d_fake)
}

/// Fraction of correct calls; a probability of exactly 0.5 is never correct.
pub fn discriminator_accuracy(d_real: &[f64], d_fake: &[f64]) -> crate::Result<f64> {
    let total = d_real.len() + d_fake.len();
    if d_real.is_empty() || d_fake.is_empty() {
        return Err(crate::Error::invalid("accuracy needs non-empty real and fake batches"));
    }
    let correct = d_real.iter().filter(|&&p| p > 0.5).count() + d_fake.iter().filter(|&&q| q < 0.5).count();
    Ok(correct as f64 / total as f64)
}
