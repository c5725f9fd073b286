use lesionkit_core::augment::{shared, AugmentChain, HFlip, InMemoryProvider, NO_SHUFFLE};
use lesionkit_core::imaging::{ColorSpace, RasterImage};
use lesionkit_core::metrics::argmax;
use lesionkit_core::trainer::{
    fit, predict_scores, train, BaselineClassifier, BaselineModel, ClassifierRegistry, Model,
    NoClock, TrainConfig, TrainError,
};
use lesionkit_core::{augment::epoch_order, ImageProvider};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Noisy flat images: class 0 around 60, class 1 around 190.
fn synthetic(n_per_class: usize, size: usize, seed: u64) -> Vec<(RasterImage, usize)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for i in 0..2 * n_per_class {
        let label = i % 2;
        let mean = if label == 0 { 60.0 } else { 190.0 };
        let img = RasterImage::from_fn(size, size, ColorSpace::Rgb, |_, _| {
            let v = (mean + rng.random_range(-50.0..50.0f64)).clamp(0.0, 255.0) as u8;
            [v, v, v]
        });
        out.push((img, label));
    }
    out
}

fn cfg(epochs: usize, weights: Vec<f64>) -> TrainConfig {
    TrainConfig {
        epochs,
        batch_size: 12,
        class_weights: weights,
        seed: 3,
        operating_threshold: 0.5,
    }
}

fn chain_source(
    chain: AugmentChain,
    seed: u64,
) -> impl FnMut(usize) -> std::vec::IntoIter<Result<lesionkit_core::Sample, lesionkit_core::ProviderError>>
{
    move |epoch| {
        epoch_order(chain.len(), epoch as u64, seed)
            .into_iter()
            .map(|i| chain.get(i))
            .collect::<Vec<_>>()
            .into_iter()
    }
}

fn random_batch(rng: &mut ChaCha8Rng, n: usize, classes: usize) -> (Vec<Vec<f64>>, Vec<usize>) {
    let feats = (0..n)
        .map(|_| {
            (0..BaselineModel::feature_len())
                .map(|_| rng.random_range(-1.0..1.0))
                .collect()
        })
        .collect();
    let labels = (0..n).map(|_| rng.random_range(0..classes)).collect();
    (feats, labels)
}

#[test]
fn analytic_gradient_matches_central_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let h = 1e-5;
    for _ in 0..20 {
        let classes = rng.random_range(2..4);
        let mut model = BaselineModel::new(classes);
        for p in model.params_mut() {
            *p = rng.random_range(-0.3..0.3);
        }
        let weights: Vec<f64> = (0..classes).map(|_| rng.random_range(0.1..2.0)).collect();
        let (feats, labels) = random_batch(&mut rng, 6, classes);
        let (_, grad) = model.loss_and_gradient(&feats, &labels, &weights);
        // spot-check a spread of coordinates including every bias
        let n = model.params().len();
        let stride = BaselineModel::feature_len() + 1;
        let mut coords: Vec<usize> = (0..n).step_by(17).collect();
        coords.extend((0..classes).map(|k| k * stride + stride - 1));
        for i in coords {
            let orig = model.params()[i];
            model.params_mut()[i] = orig + h;
            let up = model.loss(&feats, &labels, &weights);
            model.params_mut()[i] = orig - h;
            let down = model.loss(&feats, &labels, &weights);
            model.params_mut()[i] = orig;
            let numeric = (up - down) / (2.0 * h);
            let denom = numeric.abs().max(grad[i].abs()).max(1e-8);
            assert!(
                (numeric - grad[i]).abs() / denom <= 1e-4,
                "coord {i}: analytic {} numeric {}",
                grad[i],
                numeric
            );
        }
    }
}

#[test]
fn scaling_class_weights_scales_loss_and_gradient() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut model = BaselineModel::new(2);
    for p in model.params_mut() {
        *p = rng.random_range(-0.2..0.2);
    }
    let (feats, labels) = random_batch(&mut rng, 8, 2);
    let (l1, g1) = model.loss_and_gradient(&feats, &labels, &[0.3, 0.7]);
    let (l2, g2) = model.loss_and_gradient(&feats, &labels, &[1.5, 3.5]);
    assert!((l2 - 5.0 * l1).abs() < 1e-12);
    for (a, b) in g1.iter().zip(&g2) {
        assert!((b - 5.0 * a).abs() < 1e-12);
    }
}

#[test]
fn baseline_learns_dark_vs_bright() {
    let data = synthetic(100, 32, 1);
    let base = shared(InMemoryProvider::new(data));
    let val = InMemoryProvider::new(synthetic(50, 32, 2));
    let chain = AugmentChain::new(base).with_stage(HFlip);
    let mut source = chain_source(chain, 9);
    let (model, outcome) = train(
        &BaselineClassifier,
        2,
        &mut source,
        &val,
        &cfg(10, vec![0.5, 0.5]),
        &NoClock,
    )
    .unwrap();
    assert_eq!(outcome.logs.len(), 10);
    let scored = predict_scores(model.as_ref(), &val, 16).unwrap();
    let correct = scored
        .iter()
        .filter(|r| {
            let (p, y) = r.as_ref().unwrap();
            argmax(p) == Some(*y)
        })
        .count();
    assert!(
        correct as f64 / val.len() as f64 >= 0.95,
        "accuracy {correct}/{}",
        val.len()
    );
    assert!(
        outcome.logs.last().unwrap().train_loss < outcome.logs[0].train_loss,
        "{:?}",
        outcome.logs
    );
}

#[test]
fn zero_weight_class_is_never_learned() {
    let base = shared(InMemoryProvider::new(synthetic(100, 16, 4)));
    let val = InMemoryProvider::new(synthetic(50, 16, 5));
    let mut source = chain_source(AugmentChain::new(base), 1);
    let (model, _) = train(
        &BaselineClassifier,
        2,
        &mut source,
        &val,
        &cfg(5, vec![1.0, 0.0]),
        &NoClock,
    )
    .unwrap();
    let scored = predict_scores(model.as_ref(), &val, 32).unwrap();
    let class0 = scored
        .iter()
        .filter(|r| argmax(&r.as_ref().unwrap().0) == Some(0))
        .count();
    assert!(class0 as f64 / scored.len() as f64 >= 0.99);
}

#[test]
fn training_is_reproducible() {
    let run = || {
        let base = shared(InMemoryProvider::new(synthetic(20, 16, 7)));
        let val = InMemoryProvider::new(synthetic(5, 16, 8));
        let mut source = chain_source(AugmentChain::new(base).with_stage(HFlip), 21);
        let (model, out) = train(
            &BaselineClassifier,
            2,
            &mut source,
            &val,
            &cfg(3, vec![0.5, 0.5]),
            &NoClock,
        )
        .unwrap();
        let scores: Vec<Vec<f64>> = predict_scores(model.as_ref(), &val, 4)
            .unwrap()
            .into_iter()
            .map(|r| r.unwrap().0)
            .collect();
        (out.logs, scores)
    };
    assert_eq!(run(), run());
}

#[test]
fn single_class_training_is_rejected() {
    let items: Vec<_> = synthetic(10, 8, 1)
        .into_iter()
        .filter(|(_, l)| *l == 0)
        .collect();
    let base = shared(InMemoryProvider::new(items));
    let val = InMemoryProvider::new(synthetic(2, 8, 2));
    let mut source = chain_source(AugmentChain::new(base), NO_SHUFFLE);
    let err = train(
        &BaselineClassifier,
        2,
        &mut source,
        &val,
        &cfg(2, vec![0.5, 0.5]),
        &NoClock,
    )
    .err()
    .unwrap();
    assert_eq!(err, TrainError::SingleClass);
}

#[test]
fn epochs_zero_is_a_config_error() {
    let base = shared(InMemoryProvider::new(synthetic(2, 8, 1)));
    let val = InMemoryProvider::new(synthetic(2, 8, 2));
    let mut source = chain_source(AugmentChain::new(base), NO_SHUFFLE);
    let err = train(
        &BaselineClassifier,
        2,
        &mut source,
        &val,
        &cfg(0, vec![0.5, 0.5]),
        &NoClock,
    )
    .err()
    .unwrap();
    assert!(matches!(err, TrainError::InvalidConfig(_)));
}

struct Exploding;

impl Model for Exploding {
    fn num_classes(&self) -> usize {
        2
    }
    fn train_batch(
        &mut self,
        _: &[RasterImage],
        _: &[usize],
        _: &[f64],
    ) -> Result<f64, TrainError> {
        Ok(f64::NAN)
    }
    fn predict(&self, images: &[RasterImage]) -> Result<Vec<Vec<f64>>, TrainError> {
        Ok(images.iter().map(|_| vec![0.5, 0.5]).collect())
    }
}

#[test]
fn nan_loss_is_reported_as_divergence() {
    let base = shared(InMemoryProvider::new(synthetic(4, 8, 1)));
    let val = InMemoryProvider::new(synthetic(2, 8, 2));
    let mut source = chain_source(AugmentChain::new(base), NO_SHUFFLE);
    let err = fit(
        &mut Exploding,
        &mut source,
        &val,
        &cfg(2, vec![0.5, 0.5]),
        &NoClock,
    )
    .unwrap_err();
    assert_eq!(err, TrainError::Diverged { epoch: 0 });
}

#[test]
fn predict_scores_contract() {
    let mut items = synthetic(3, 8, 1);
    items.push(items[0].clone());
    let provider = InMemoryProvider::new(items);
    let model = BaselineModel::new(2);
    let mut trained = model.clone();
    let imgs: Vec<RasterImage> = (0..provider.len())
        .map(|i| provider.get(i).unwrap().image)
        .collect();
    let labels: Vec<usize> = (0..provider.len())
        .map(|i| provider.get(i).unwrap().label)
        .collect();
    trained.train_batch(&imgs, &labels, &[0.5, 0.5]).unwrap();
    let out = predict_scores(&trained, &provider, 3).unwrap();
    assert_eq!(out.len(), provider.len());
    for r in &out {
        let (p, _) = r.as_ref().unwrap();
        assert!(p.iter().all(|v| (0.0..=1.0).contains(v)));
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-6);
    }
    assert_eq!(out[0].as_ref().unwrap().0, out[6].as_ref().unwrap().0);
}

#[test]
fn binary_score_is_monotone_in_logit() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut model = BaselineModel::new(2);
    for p in model.params_mut() {
        *p = rng.random_range(-0.5..0.5);
    }
    let mut pairs: Vec<(f64, f64)> = (0..200)
        .map(|_| {
            let img = RasterImage::from_fn(8, 8, ColorSpace::Rgb, |_, _| {
                [rng.random(), rng.random(), rng.random()]
            });
            let z = model.logits(&BaselineModel::features(&img));
            let p = model.predict(&[img]).unwrap()[0][1];
            (z[1] - z[0], p)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    assert!(pairs.windows(2).all(|w| w[0].1 <= w[1].1));
}

#[test]
fn registry_builds_baseline_models() {
    let r = ClassifierRegistry::default();
    let m = r.build_classifier("baseline").unwrap().build(3, 0).unwrap();
    assert_eq!(m.num_classes(), 3);
}
