use crate::error::{Error, Result};

pub const ADAM_EPSILON: f64 = 1e-8;

/// Bias-corrected Adam moments for one parameter set.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub first_moment: Vec<Vec<f64>>,
    pub second_moment: Vec<Vec<f64>>,
    pub step_count: u64,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    /// Linear decay: the step-`t` rate is `learning_rate * max(0, 1 - lr_decay * (t - 1))`.
    /// Zero keeps the rate constant.
    pub lr_decay: f64,
}

impl AdamState {
    /// Zeroed moments shaped after `shapes` (one length per parameter tensor).
    pub fn new(shapes: &[usize], learning_rate: f64) -> Self {
        Self {
            first_moment: shapes.iter().map(|&n| vec![0.0; n]).collect(),
            second_moment: shapes.iter().map(|&n| vec![0.0; n]).collect(),
            step_count: 0,
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: ADAM_EPSILON,
            lr_decay: 0.0,
        }
    }

    pub fn for_params(params: &[&[f64]], learning_rate: f64) -> Self {
        let shapes: Vec<usize> = params.iter().map(|p| p.len()).collect();
        Self::new(&shapes, learning_rate)
    }

    pub fn current_lr(&self) -> f64 {
        let t = self.step_count.saturating_sub(1) as f64;
        self.learning_rate * (1.0 - self.lr_decay * t).max(0.0)
    }

    /// One update of every parameter tensor in place.
    pub fn step(&mut self, params: &mut [&mut [f64]], grads: &[Vec<f64>]) -> Result<()> {
        if params.len() != grads.len() || params.len() != self.first_moment.len() {
            return Err(Error::shape(format!(
                "adam: {} parameter tensors, {} gradients, {} moment slots",
                params.len(),
                grads.len(),
                self.first_moment.len()
            )));
        }
        for (i, (p, g)) in params.iter().zip(grads).enumerate() {
            if p.len() != g.len() || p.len() != self.first_moment[i].len() {
                return Err(Error::shape(format!("adam: tensor {i} has mismatched lengths")));
            }
            if g.iter().any(|v| !v.is_finite()) {
                return Err(Error::invalid(format!("adam: non-finite gradient in tensor {i}")));
            }
        }
        self.step_count += 1;
        let t = self.step_count as i32;
        let c1 = 1.0 - self.beta1.powi(t);
        let c2 = 1.0 - self.beta2.powi(t);
        let lr = self.current_lr();
        for (i, (p, g)) in params.iter_mut().zip(grads).enumerate() {
            let m = &mut self.first_moment[i];
            let v = &mut self.second_moment[i];
            for j in 0..p.len() {
                m[j] = self.beta1 * m[j] + (1.0 - self.beta1) * g[j];
                v[j] = self.beta2 * v[j] + (1.0 - self.beta2) * g[j] * g[j];
                let m_hat = m[j] / c1;
                let v_hat = v[j] / c2;
                p[j] -= lr * m_hat / (v_hat.sqrt() + self.epsilon);
            }
        }
        Ok(())
    }
}

/// Functional wrapper over [`AdamState::step`].
pub fn adam_step(params: &mut [&mut [f64]], grads: &[Vec<f64>], state: &mut AdamState) -> Result<()> {
    state.step(params, grads)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_leaves_params() {
        let mut p = vec![1.0, -2.0];
        let mut s = AdamState::new(&[2], 0.1);
        adam_step(&mut [&mut p], &[vec![0.0, 0.0]], &mut s).unwrap();
        assert_eq!(p, vec![1.0, -2.0]);
        assert_eq!(s.step_count, 1);
    }

    #[test]
    fn first_step_moves_by_lr() {
        let mut p = vec![1.0];
        let mut s = AdamState::new(&[1], 0.1);
        adam_step(&mut [&mut p], &[vec![1.0]], &mut s).unwrap();
        let expected = 1.0 - 0.1 * 1.0 / (1.0 + 1e-8);
        assert!((p[0] - expected).abs() < 1e-15);
        assert!((p[0] - 0.9).abs() < 1e-8);
    }

    #[test]
    fn constant_gradient_update_tends_to_lr() {
        let mut p = vec![0.0];
        let mut s = AdamState::new(&[1], 0.01);
        let mut last = 0.0;
        for _ in 0..5000 {
            let before = p[0];
            adam_step(&mut [&mut p], &[vec![0.3]], &mut s).unwrap();
            last = before - p[0];
        }
        assert!((last - 0.01).abs() < 1e-6, "{last}");
    }

    #[test]
    fn rejects_bad_input() {
        let mut p = vec![0.0, 0.0];
        let mut s = AdamState::new(&[2], 0.1);
        assert!(adam_step(&mut [&mut p], &[vec![0.0]], &mut s).is_err());
        assert!(adam_step(&mut [&mut p], &[vec![f64::NAN, 0.0]], &mut s).is_err());
        assert_eq!(s.step_count, 0);
    }

    #[test]
    fn linear_decay() {
        let mut s = AdamState::new(&[1], 1.0);
        s.lr_decay = 0.25;
        let mut p = vec![0.0];
        let mut rates = vec![];
        for _ in 0..6 {
            adam_step(&mut [&mut p], &[vec![1.0]], &mut s).unwrap();
            rates.push(s.current_lr());
        }
        assert_eq!(rates, vec![1.0, 0.75, 0.5, 0.25, 0.0, 0.0]);
    }
}
