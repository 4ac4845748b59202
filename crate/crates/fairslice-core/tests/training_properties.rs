//! Optimizer correctness checks: finite-difference gradient verification,
//! full-batch descent monotonicity, regularization limits, determinism, and
//! the vectorizer's unit-norm guarantee.

use fairslice_core::rng::Rng;
use fairslice_core::{
    fit_vocabulary, train_logreg, vectorize, LogRegModel, ModelConfig, SparseVector,
    TfidfClassifier, TrainConfig,
};

/// Central-difference gradient of the full-batch loss; the oracle the
/// analytic gradient is checked against.
fn numerical_gradient(
    model: &LogRegModel,
    xs: &[SparseVector],
    ys: &[bool],
    eps: f64,
) -> (Vec<f64>, f64) {
    let loss_at = |weights: Vec<f64>, bias: f64| {
        LogRegModel::from_parts(weights, bias, model.l2_lambda())
            .loss(xs, ys)
            .unwrap()
    };
    let mut grad_w = Vec::with_capacity(model.dim());
    for i in 0..model.dim() {
        let mut plus = model.weights().to_vec();
        let mut minus = model.weights().to_vec();
        plus[i] += eps;
        minus[i] -= eps;
        let hi = loss_at(plus, model.bias());
        let lo = loss_at(minus, model.bias());
        grad_w.push((hi - lo) / (2.0 * eps));
    }
    let hi = loss_at(model.weights().to_vec(), model.bias() + eps);
    let lo = loss_at(model.weights().to_vec(), model.bias() - eps);
    (grad_w, (hi - lo) / (2.0 * eps))
}

fn relative_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / (a.abs() + b.abs()).max(1e-8)
}

/// Random instance: `n` sparse vectors over `dim` features with both label
/// classes present.
fn random_instance(
    rng: &mut Rng,
    n: usize,
    dim: usize,
) -> (Vec<SparseVector>, Vec<bool>, LogRegModel) {
    let mut xs = Vec::with_capacity(n);
    let mut ys = Vec::with_capacity(n);
    for i in 0..n {
        let mut entries = Vec::new();
        for idx in 0..dim {
            if rng.next_f64() < 0.6 {
                entries.push((idx, rng.next_f64() * 4.0 - 2.0));
            }
        }
        xs.push(SparseVector::from_entries(entries).unwrap());
        // Alternate the first two labels so both classes always appear.
        ys.push(if i < 2 { i == 0 } else { rng.next_f64() < 0.5 });
    }
    let weights: Vec<f64> = (0..dim).map(|_| rng.next_f64() * 2.0 - 1.0).collect();
    let bias = rng.next_f64() * 2.0 - 1.0;
    let lambdas = [0.0, 1e-4, 1e-2, 0.1];
    let lambda = lambdas[(rng.next_u64() % 4) as usize];
    (xs, ys, LogRegModel::from_parts(weights, bias, lambda))
}

#[test]
fn analytic_gradient_matches_finite_differences() {
    let mut rng = Rng::from_seed(0xFD);
    for _ in 0..30 {
        let (xs, ys, model) = random_instance(&mut rng, 20, 5);
        let (grad_w, grad_b) = model.gradient(&xs, &ys).unwrap();
        let (num_w, num_b) = numerical_gradient(&model, &xs, &ys, 1e-5);
        for (a, n) in grad_w.iter().zip(&num_w) {
            assert!(
                relative_error(*a, *n) < 1e-5,
                "weight gradient mismatch: analytic {a}, numerical {n}"
            );
        }
        assert!(
            relative_error(grad_b, num_b) < 1e-5,
            "bias gradient mismatch: analytic {grad_b}, numerical {num_b}"
        );
    }
}

#[test]
fn full_batch_loss_is_non_increasing() {
    let mut rng = Rng::from_seed(0x10);
    // Unit-norm features keep the objective's curvature under the step-size
    // bound, so full-batch descent must be monotone.
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for i in 0..50 {
        let mut raw: Vec<(usize, f64)> = Vec::new();
        for idx in 0..8 {
            if rng.next_f64() < 0.5 {
                raw.push((idx, rng.next_f64()));
            }
        }
        let norm: f64 = raw.iter().map(|&(_, v)| v * v).sum::<f64>().sqrt();
        let entries = if norm > 0.0 {
            raw.into_iter().map(|(i, v)| (i, v / norm)).collect()
        } else {
            vec![]
        };
        xs.push(SparseVector::from_entries(entries).unwrap());
        ys.push(i % 3 == 0);
    }

    let mut previous = f64::INFINITY;
    for epochs in 1..=12 {
        let config = TrainConfig {
            learning_rate: 0.1,
            batch_size: xs.len(), // full batch
            max_epochs: epochs,
            l2_lambda: 1e-3,
            tol: 0.0,
            seed: 77,
        };
        let model = train_logreg(&xs, &ys, 8, &config).unwrap();
        let loss = model.loss(&xs, &ys).unwrap();
        assert!(
            loss <= previous + 1e-12,
            "loss rose from {previous} to {loss} at {epochs} epochs"
        );
        previous = loss;
    }
}

#[test]
fn heavy_regularization_flattens_the_model() {
    let corpus = [
        "awful terrible words",
        "horrid awful words",
        "lovely day words",
        "kind lovely words",
    ];
    let labels = [true, true, false, false];

    let train_with = |l2_lambda: f64, learning_rate: f64| {
        let config = ModelConfig {
            max_features: 100,
            train: TrainConfig {
                learning_rate,
                batch_size: 4,
                max_epochs: 200,
                l2_lambda,
                tol: 0.0,
                seed: 3,
            },
        };
        TfidfClassifier::train(&corpus, &labels, &config).unwrap()
    };

    let norm = |clf: &TfidfClassifier| {
        clf.model()
            .weights()
            .iter()
            .map(|w| w * w)
            .sum::<f64>()
            .sqrt()
    };

    let light = train_with(1e-4, 0.1);
    let heavy = train_with(50.0, 0.01);
    assert!(
        norm(&heavy) < norm(&light) / 10.0,
        "heavy λ should crush ‖w‖"
    );

    // With ‖w‖ ~ 0 every score collapses to σ(bias).
    let sigma_bias = 1.0 / (1.0 + (-heavy.model().bias()).exp());
    for text in corpus {
        assert!((heavy.score_text(text) - sigma_bias).abs() < 0.01);
    }
}

#[test]
fn training_and_prediction_are_bit_deterministic() {
    let mut rng = Rng::from_seed(0xD0);
    let vocab_texts: Vec<String> = (0..40)
        .map(|i| {
            let toxic = i % 2 == 0;
            let marker = if toxic { "rotten" } else { "pleasant" };
            format!(
                "{marker} filler{} words{} common",
                rng.next_u64() % 7,
                i % 5
            )
        })
        .collect();
    let labels: Vec<bool> = (0..40).map(|i| i % 2 == 0).collect();

    let config = ModelConfig {
        max_features: 500,
        train: TrainConfig {
            learning_rate: 0.1,
            batch_size: 8,
            max_epochs: 6,
            l2_lambda: 1e-4,
            tol: 0.0,
            seed: 42,
        },
    };
    let a = TfidfClassifier::train(&vocab_texts, &labels, &config).unwrap();
    let b = TfidfClassifier::train(&vocab_texts, &labels, &config).unwrap();
    assert_eq!(a.model().weights(), b.model().weights());
    assert_eq!(a.model().bias().to_bits(), b.model().bias().to_bits());
    for text in &vocab_texts {
        assert_eq!(a.score_text(text).to_bits(), b.score_text(text).to_bits());
    }
}

#[test]
fn vectorize_is_unit_norm_or_zero() {
    let corpus = [
        "one two three four",
        "two three four five",
        "five six seven",
        "one seven eight nine",
    ];
    let vocab = fit_vocabulary(&corpus, 100).unwrap();
    let mut rng = Rng::from_seed(5);
    let words = [
        "one", "two", "three", "four", "five", "six", "seven", "eight", "nine", "oov",
    ];
    for _ in 0..200 {
        let len = (rng.next_u64() % 8) as usize;
        let text: Vec<&str> = (0..len)
            .map(|_| words[(rng.next_u64() % words.len() as u64) as usize])
            .collect();
        let v = vectorize(&text.join(" "), &vocab);
        if v.is_zero() {
            assert_eq!(v.l2_norm(), 0.0);
        } else {
            assert!((v.l2_norm() - 1.0).abs() < 1e-9);
        }
    }
}
