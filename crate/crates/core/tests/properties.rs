use num_complex::Complex64;
use proptest::prelude::*;

use psgan_core::gan::{discriminator_loss, generator_loss_grad, saturating_generator_loss_grad, zero_sum_generator_loss, GanModel, TrainConfig};
use psgan_core::nn::layers::softmax;
use psgan_core::nn::Checkpoint;
use psgan_core::signal::{denormalize, frame_tensor, load_iq, normalize_frames, save_iq, CaptureMeta, Component, IqFormat, IqRecording};
use psgan_core::validation::ks_distance;
use psgan_core::Matrix;

fn recording(samples: Vec<(f32, f32)>) -> IqRecording {
    let s = samples.into_iter().map(|(re, im)| Complex64::new(re as f64, im as f64)).collect();
    IqRecording::new(s, CaptureMeta::new(1e6, 2.4e9, 10.0)).unwrap()
}

fn probs(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(1e-6f64..1.0 - 1e-6, 1..n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn softmax_is_a_distribution(logits in prop::collection::vec(-700.0f64..700.0, 1..12)) {
        let p = softmax(&logits);
        prop_assert!(p.iter().all(|v| (0.0..=1.0).contains(v)));
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_sum_loss_mirrors_discriminator(real in probs(40), fake in probs(40)) {
        let lhs = zero_sum_generator_loss(&real, &fake);
        let rhs = -discriminator_loss(&real, &fake, 0.0);
        prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs.abs().max(1.0));
    }

    #[test]
    fn ks_is_a_bounded_metric(
        a in prop::collection::vec(-5.0f64..5.0, 1..60),
        b in prop::collection::vec(-5.0f64..5.0, 1..60),
        c in prop::collection::vec(-5.0f64..5.0, 1..60),
    ) {
        let ab = ks_distance(&a, &b).unwrap();
        prop_assert_eq!(ab, ks_distance(&b, &a).unwrap());
        prop_assert!((0.0..=1.0).contains(&ab));
        prop_assert_eq!(ks_distance(&a, &a).unwrap(), 0.0);
        let ac = ks_distance(&a, &c).unwrap();
        let cb = ks_distance(&c, &b).unwrap();
        prop_assert!(ab <= ac + cb + 1e-12);
    }

    #[test]
    fn normalization_round_trips(
        raw in prop::collection::vec((-100.0f32..100.0, -100.0f32..100.0), 64..200),
        n_frames in 1usize..3,
    ) {
        let rec = recording(raw);
        let t = frame_tensor(&rec, 8, n_frames).unwrap();
        prop_assume!((0..n_frames).all(|f| t.frame_power(f) > 1e-9));
        let (norm, stats) = normalize_frames(&t).unwrap();
        for f in 0..n_frames {
            prop_assert!((norm.frame_power(f) - 1.0).abs() < 1e-9);
            for comp in [Component::I, Component::Q] {
                let back = denormalize(&norm.component_matrix(f, comp).unwrap(), stats.power(f).unwrap()).unwrap();
                let orig = t.component_matrix(f, comp).unwrap();
                prop_assert!(back.max_abs_diff(&orig) <= 1e-9 * (1.0 + orig.as_slice().iter().fold(0.0f64, |m, v| m.max(v.abs()))));
            }
        }
    }

    #[test]
    fn iq_files_round_trip(raw in prop::collection::vec((any::<f32>(), any::<f32>()), 1..300)) {
        prop_assume!(raw.iter().all(|(a, b)| a.is_finite() && b.is_finite()));
        let mut rec = recording(raw);
        rec.meta.extra.insert("note".into(), "prop".into());
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.iq");
        save_iq(&path, &rec).unwrap();
        let back = load_iq(&path, IqFormat::Cf32Le).unwrap();
        prop_assert_eq!(back.samples(), rec.samples());
        prop_assert_eq!(&back.meta, &rec.meta);
    }

    #[test]
    fn checkpoints_round_trip(seed in any::<u64>(), q in any::<bool>()) {
        let cfg = TrainConfig { seed, ..TrainConfig::desk() };
        let comp = if q { Component::Q } else { Component::I };
        let model = GanModel::new(256, comp, &cfg).unwrap();
        let bytes = model.to_checkpoint().to_bytes();
        let back = GanModel::from_checkpoint(Checkpoint::from_bytes(&bytes).unwrap()).unwrap();
        prop_assert_eq!(back.component, comp);
        prop_assert_eq!(back.to_checkpoint().to_bytes(), bytes);
        let z = Matrix::filled(2, 256, 0.1);
        let a = model.generator.generate(&z).unwrap();
        let b = back.generator.generate(&z).unwrap();
        prop_assert!(a.max_abs_diff(&b) < 1e-5);
    }
}

#[test]
fn non_saturating_gradient_dominates_when_the_discriminator_wins() {
    let q = 1e-6;
    let ratio = generator_loss_grad(q).abs() / saturating_generator_loss_grad(q).abs();
    assert!(ratio > 1e3, "{ratio}");
}

#[test]
fn truncated_checkpoints_are_rejected() {
    let bytes = GanModel::new(256, Component::I, &TrainConfig::desk()).unwrap().to_checkpoint().to_bytes();
    for cut in [0, 3, 10, bytes.len() / 2, bytes.len() - 1] {
        assert!(Checkpoint::from_bytes(&bytes[..cut]).is_err(), "cut at {cut}");
    }
    let mut bad = bytes.clone();
    bad[0] = b'X';
    assert!(Checkpoint::from_bytes(&bad).is_err());
}
