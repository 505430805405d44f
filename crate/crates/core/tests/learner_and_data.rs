use aft::criteria::{self, CriteriaConfig};
use aft::datagen::{self, DatagenConfig};
use aft::learner::{self, loss_and_gradient, Example, Learner, SoftmaxModel, TrainConfig};
use aft::oracle::evaluation_labels;
use aft::pool::Candidate;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// (dim, classes, weights, patches, labels) for a small softmax problem.
fn problem() -> impl Strategy<Value = (usize, usize, Vec<f64>, Vec<Vec<f64>>, Vec<usize>)> {
    (1usize..=5, 2usize..=3, 1usize..=20).prop_flat_map(|(d, k, n)| {
        (
            Just(d),
            Just(k),
            prop::collection::vec(-2.0..2.0f64, k * (d + 1)),
            prop::collection::vec(prop::collection::vec(-3.0..3.0f64, d), n),
            prop::collection::vec(0..k, n),
        )
    })
}

proptest! {
    #[test]
    fn gradient_matches_central_differences((d, k, w, xs, ys) in problem()) {
        let data: Vec<Example> = xs.iter().zip(&ys).map(|(x, &label)| Example { features: x, label }).collect();
        let (_, grad) = loss_and_gradient(&w, d, k, &data);
        let h = 1e-5;
        let numeric: Vec<f64> = (0..w.len()).map(|i| {
            let (mut plus, mut minus) = (w.clone(), w.clone());
            plus[i] += h;
            minus[i] -= h;
            (loss_and_gradient(&plus, d, k, &data).0 - loss_and_gradient(&minus, d, k, &data).0) / (2.0 * h)
        }).collect();
        let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let diff: Vec<f64> = grad.iter().zip(&numeric).map(|(a, b)| a - b).collect();
        let rel = norm(&diff) / norm(&grad).max(norm(&numeric)).max(1e-12);
        prop_assert!(rel <= 1e-4, "relative error {rel}");
    }

    #[test]
    fn predictions_are_row_stochastic(
        (d, k, w, xs, _) in problem(),
        scale in prop::sample::select(vec![1e-3, 1.0, 100.0]),
    ) {
        let w: Vec<f64> = w.iter().map(|v| v * scale).collect();
        let model = SoftmaxModel::from_weights(d, k, w).unwrap();
        let c = Candidate::new("c", xs, 0).unwrap();
        let p = model.predict(&c).unwrap();
        for row in p.rows() {
            prop_assert!((row.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
            prop_assert!(row.iter().all(|v| (0.0..=1.0).contains(v)));
        }
        let q = learner::candidate_probability(&p);
        prop_assert!((q.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
    }
}

#[test]
fn ambiguous_candidates_are_more_diverse_than_peers() {
    let eps = CriteriaConfig::DEFAULT_EPSILON;
    for seed in 1..=3 {
        let data = datagen::generate(&DatagenConfig::standard(seed)).unwrap();
        let labels = evaluation_labels(&data.train);
        let ex = learner::examples(data.train.iter().zip(labels.iter().copied()));
        let cfg = TrainConfig {
            epochs: 20,
            ..TrainConfig::default()
        };
        let model = SoftmaxModel::pretrain(10, 2, Some(&ex), &cfg, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        for class in 0..2 {
            let (mut amb, mut clean) = (Vec::new(), Vec::new());
            for (c, &label) in data.train.iter().zip(&labels) {
                if label != class {
                    continue;
                }
                let d = criteria::diversity(&model.predict(c).unwrap(), eps);
                if data.ambiguous.contains_key(c.id()) {
                    amb.push(d);
                } else {
                    clean.push(d);
                }
            }
            let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
            assert!(
                mean(&amb) > mean(&clean),
                "seed {seed} class {class}: {} vs {}",
                mean(&amb),
                mean(&clean)
            );
        }
    }
}

#[test]
fn checkpoint_file_resumes_cold_fits() {
    let data = datagen::generate(&DatagenConfig {
        train_candidates: 50,
        test_candidates: 10,
        ..DatagenConfig::standard(4)
    })
    .unwrap();
    let labels = evaluation_labels(&data.train);
    let ex = learner::examples(data.train.iter().zip(labels.iter().copied()));
    let cfg = TrainConfig::default();
    let m0 = SoftmaxModel::random(10, 2, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
    let fitted = m0.fit(&ex, &cfg, true, &mut ChaCha8Rng::seed_from_u64(2)).unwrap();

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.json");
    fitted.save(&path).unwrap();
    let loaded = SoftmaxModel::load(&path).unwrap();
    assert_eq!(loaded.weights(), fitted.weights());
    assert_eq!(loaded.trained_steps(), fitted.trained_steps());
    let a = fitted.fit(&ex, &cfg, false, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
    let b = loaded.fit(&ex, &cfg, false, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
    assert_eq!(a.weights(), b.weights());
}
