//! From-scratch TFIDF vectorizer and L2-regularized logistic regression.
//!
//! The vectorizer uses smoothed idf: `weight(t) = tf(t) * (ln((1 + N)/(1 + df(t))) + 1)`
//! with raw in-document term counts, then L2-normalizes the vector. The
//! regressor minimizes mean binary cross-entropy plus `(λ/2)‖w‖²` by
//! mini-batch gradient descent with seeded shuffling, so training is
//! deterministic for a fixed seed.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use crate::metrics::{MetricsError, PredictionSet};
use crate::rng::Rng;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModelError {
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("corpus produced an empty vocabulary")]
    EmptyVocabulary,
    #[error("max_features must be at least 1")]
    ZeroMaxFeatures,
    #[error("got {vectors} vectors but {labels} labels")]
    LengthMismatch { vectors: usize, labels: usize },
    #[error("training labels must contain both classes")]
    SingleClass,
    #[error("training diverged at epoch {0}: loss is not finite")]
    Diverged(usize),
    #[error("vector index {index} exceeds model dimension {dim}")]
    DimensionMismatch { index: usize, dim: usize },
    #[error("sparse vector indices must be strictly increasing")]
    UnsortedIndices,
    #[error("{name} must be positive, got {value}")]
    InvalidHyperparameter { name: &'static str, value: f64 },
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

/// Lowercases, splits on any non-alphanumeric character, and drops empty
/// tokens. No stemming, no stopword removal.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    let mut current = String::new();
    for ch in text.chars() {
        for lc in ch.to_lowercase() {
            if lc.is_alphanumeric() {
                current.push(lc);
            } else if !current.is_empty() {
                tokens.push(core::mem::take(&mut current));
            }
        }
    }
    if !current.is_empty() {
        tokens.push(current);
    }
    tokens
}

/// Fitted token vocabulary with per-term document frequencies.
///
/// Term order (and therefore feature index order) is descending document
/// frequency with lexicographic tie-breaks, the same rule used to cap the
/// vocabulary at `max_features`.
#[derive(Debug, Clone, PartialEq)]
pub struct Vocabulary {
    terms: Vec<String>,
    doc_freq: Vec<usize>,
    n_docs: usize,
    index: BTreeMap<String, usize>,
}

impl Vocabulary {
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn n_docs(&self) -> usize {
        self.n_docs
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn doc_freqs(&self) -> &[usize] {
        &self.doc_freq
    }

    pub fn index_of(&self, term: &str) -> Option<usize> {
        self.index.get(term).copied()
    }

    pub fn doc_freq_of(&self, term: &str) -> Option<usize> {
        self.index_of(term).map(|i| self.doc_freq[i])
    }

    /// Smoothed inverse document frequency of feature `i`.
    pub fn idf(&self, i: usize) -> f64 {
        libm::log((1.0 + self.n_docs as f64) / (1.0 + self.doc_freq[i] as f64)) + 1.0
    }

    /// Reassembles a vocabulary (e.g. from a model file), validating that
    /// terms are unique and each document frequency lies in `[1, n_docs]`.
    pub fn from_parts(
        terms: Vec<String>,
        doc_freq: Vec<usize>,
        n_docs: usize,
    ) -> Result<Self, ModelError> {
        if terms.is_empty() {
            return Err(ModelError::EmptyVocabulary);
        }
        if terms.len() != doc_freq.len() {
            return Err(ModelError::LengthMismatch {
                vectors: terms.len(),
                labels: doc_freq.len(),
            });
        }
        if !doc_freq.iter().all(|&df| df >= 1 && df <= n_docs) {
            return Err(ModelError::EmptyVocabulary);
        }
        let mut index = BTreeMap::new();
        for (i, term) in terms.iter().enumerate() {
            if index.insert(term.clone(), i).is_some() {
                return Err(ModelError::EmptyVocabulary);
            }
        }
        Ok(Vocabulary {
            terms,
            doc_freq,
            n_docs,
            index,
        })
    }
}

/// Counts document frequencies (once per document) over the tokenized
/// corpus and keeps the `max_features` most frequent terms, breaking ties
/// lexicographically.
pub fn fit_vocabulary<S: AsRef<str>>(
    corpus: &[S],
    max_features: usize,
) -> Result<Vocabulary, ModelError> {
    if corpus.is_empty() {
        return Err(ModelError::EmptyCorpus);
    }
    if max_features == 0 {
        return Err(ModelError::ZeroMaxFeatures);
    }
    let mut doc_freq: BTreeMap<String, usize> = BTreeMap::new();
    for doc in corpus {
        let unique: BTreeSet<String> = tokenize(doc.as_ref()).into_iter().collect();
        for term in unique {
            *doc_freq.entry(term).or_insert(0) += 1;
        }
    }
    if doc_freq.is_empty() {
        return Err(ModelError::EmptyVocabulary);
    }
    let mut ranked: Vec<(String, usize)> = doc_freq.into_iter().collect();
    ranked.sort_unstable_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    ranked.truncate(max_features);

    let mut terms = Vec::with_capacity(ranked.len());
    let mut freqs = Vec::with_capacity(ranked.len());
    let mut index = BTreeMap::new();
    for (i, (term, df)) in ranked.into_iter().enumerate() {
        index.insert(term.clone(), i);
        terms.push(term);
        freqs.push(df);
    }
    Ok(Vocabulary {
        terms,
        doc_freq: freqs,
        n_docs: corpus.len(),
        index,
    })
}

/// Sparse feature vector: `(index, weight)` entries with strictly
/// increasing indices.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SparseVector {
    entries: Vec<(usize, f64)>,
}

impl SparseVector {
    pub fn from_entries(entries: Vec<(usize, f64)>) -> Result<Self, ModelError> {
        if !entries.windows(2).all(|w| w[0].0 < w[1].0) {
            return Err(ModelError::UnsortedIndices);
        }
        Ok(SparseVector { entries })
    }

    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn max_index(&self) -> Option<usize> {
        self.entries.last().map(|&(i, _)| i)
    }

    pub fn l2_norm(&self) -> f64 {
        libm::sqrt(self.entries.iter().map(|&(_, v)| v * v).sum())
    }

    /// Dot product against a dense weight vector. Callers must have checked
    /// that all indices are in bounds.
    pub fn dot(&self, dense: &[f64]) -> f64 {
        self.entries.iter().map(|&(i, v)| v * dense[i]).sum()
    }
}

/// TFIDF-weights `text` against the vocabulary and L2-normalizes the result.
/// Out-of-vocabulary tokens are ignored; a text with no in-vocabulary tokens
/// yields the all-zero vector.
pub fn vectorize(text: &str, vocab: &Vocabulary) -> SparseVector {
    let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
    for token in tokenize(text) {
        if let Some(i) = vocab.index_of(&token) {
            *counts.entry(i).or_insert(0) += 1;
        }
    }
    let mut entries: Vec<(usize, f64)> = counts
        .into_iter()
        .map(|(i, tf)| (i, tf as f64 * vocab.idf(i)))
        .collect();
    let norm = libm::sqrt(entries.iter().map(|&(_, v)| v * v).sum());
    if norm > 0.0 {
        for entry in &mut entries {
            entry.1 /= norm;
        }
    }
    SparseVector { entries }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + libm::exp(-z))
    } else {
        let e = libm::exp(z);
        e / (1.0 + e)
    }
}

/// Numerically stable binary cross-entropy of logit `z` against label `y`:
/// `max(z, 0) - z*y + ln(1 + exp(-|z|))`.
fn bce(z: f64, y: f64) -> f64 {
    z.max(0.0) - z * y + libm::log1p(libm::exp(-libm::fabs(z)))
}

/// Optimizer settings for [`train_logreg`].
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub l2_lambda: f64,
    pub tol: f64,
    pub seed: u64,
}

impl TrainConfig {
    /// Defaults tuned for sparse unit-norm inputs.
    pub fn new(seed: u64) -> Self {
        TrainConfig {
            learning_rate: 0.1,
            batch_size: 1024,
            max_epochs: 10,
            l2_lambda: 1e-4,
            tol: 1e-5,
            seed,
        }
    }

    fn validate(&self) -> Result<(), ModelError> {
        let positive: [(&'static str, f64); 3] = [
            ("learning_rate", self.learning_rate),
            ("batch_size", self.batch_size as f64),
            ("max_epochs", self.max_epochs as f64),
        ];
        for (name, value) in positive {
            if value.is_nan() || value <= 0.0 {
                return Err(ModelError::InvalidHyperparameter { name, value });
            }
        }
        for (name, value) in [("l2_lambda", self.l2_lambda), ("tol", self.tol)] {
            if value.is_nan() || value < 0.0 {
                return Err(ModelError::InvalidHyperparameter { name, value });
            }
        }
        Ok(())
    }
}

/// Full pipeline settings: vocabulary cap plus optimizer settings.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    pub max_features: usize,
    pub train: TrainConfig,
}

impl ModelConfig {
    pub fn new(seed: u64) -> Self {
        ModelConfig {
            max_features: 50_000,
            train: TrainConfig::new(seed),
        }
    }
}

/// Logistic-regression weights over a fixed feature space.
#[derive(Debug, Clone, PartialEq)]
pub struct LogRegModel {
    weights: Vec<f64>,
    bias: f64,
    l2_lambda: f64,
}

impl LogRegModel {
    pub fn from_parts(weights: Vec<f64>, bias: f64, l2_lambda: f64) -> Self {
        LogRegModel {
            weights,
            bias,
            l2_lambda,
        }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn bias(&self) -> f64 {
        self.bias
    }

    pub fn l2_lambda(&self) -> f64 {
        self.l2_lambda
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    fn check_dim(&self, x: &SparseVector) -> Result<(), ModelError> {
        match x.max_index() {
            Some(i) if i >= self.weights.len() => Err(ModelError::DimensionMismatch {
                index: i,
                dim: self.weights.len(),
            }),
            _ => Ok(()),
        }
    }

    /// `σ(w·x + b)`, always inside `[0, 1]`.
    pub fn score(&self, x: &SparseVector) -> Result<f64, ModelError> {
        self.check_dim(x)?;
        Ok(sigmoid(x.dot(&self.weights) + self.bias))
    }

    pub fn score_all(&self, xs: &[SparseVector]) -> Result<Vec<f64>, ModelError> {
        xs.iter().map(|x| self.score(x)).collect()
    }

    /// Mean binary cross-entropy plus `(λ/2)‖w‖²` over the full set.
    pub fn loss(&self, xs: &[SparseVector], ys: &[bool]) -> Result<f64, ModelError> {
        if xs.len() != ys.len() {
            return Err(ModelError::LengthMismatch {
                vectors: xs.len(),
                labels: ys.len(),
            });
        }
        let mut total = 0.0;
        for (x, &y) in xs.iter().zip(ys) {
            self.check_dim(x)?;
            let z = x.dot(&self.weights) + self.bias;
            total += bce(z, if y { 1.0 } else { 0.0 });
        }
        let reg: f64 = self.weights.iter().map(|w| w * w).sum();
        Ok(total / xs.len() as f64 + 0.5 * self.l2_lambda * reg)
    }

    /// Analytic full-batch gradient of [`Self::loss`]:
    /// `∇w = (1/n) Σ (σ(z) - y) x + λw`, `∂b = (1/n) Σ (σ(z) - y)`.
    pub fn gradient(
        &self,
        xs: &[SparseVector],
        ys: &[bool],
    ) -> Result<(Vec<f64>, f64), ModelError> {
        if xs.len() != ys.len() {
            return Err(ModelError::LengthMismatch {
                vectors: xs.len(),
                labels: ys.len(),
            });
        }
        let mut grad_w = alloc::vec![0.0; self.weights.len()];
        let mut grad_b = 0.0;
        for (x, &y) in xs.iter().zip(ys) {
            self.check_dim(x)?;
            let z = x.dot(&self.weights) + self.bias;
            let delta = sigmoid(z) - if y { 1.0 } else { 0.0 };
            for &(i, v) in x.entries() {
                grad_w[i] += delta * v;
            }
            grad_b += delta;
        }
        let inv_n = 1.0 / xs.len() as f64;
        for (g, w) in grad_w.iter_mut().zip(&self.weights) {
            *g = *g * inv_n + self.l2_lambda * w;
        }
        Ok((grad_w, grad_b * inv_n))
    }
}

/// Trains an L2-regularized logistic regression by mini-batch gradient
/// descent over `dim` features.
///
/// Weights start at zero (the objective is convex, so no symmetry breaking
/// is needed). Each epoch shuffles the example order with the seeded
/// generator; training stops at `max_epochs` or as soon as the epoch-mean
/// loss improves by less than `tol`. Bit-identical results for a fixed
/// `(vectors, labels, dim, config)`.
pub fn train_logreg(
    vectors: &[SparseVector],
    labels: &[bool],
    dim: usize,
    config: &TrainConfig,
) -> Result<LogRegModel, ModelError> {
    if vectors.len() != labels.len() {
        return Err(ModelError::LengthMismatch {
            vectors: vectors.len(),
            labels: labels.len(),
        });
    }
    if vectors.is_empty() {
        return Err(ModelError::EmptyCorpus);
    }
    config.validate()?;
    let n_pos = labels.iter().filter(|&&y| y).count();
    if n_pos == 0 || n_pos == labels.len() {
        return Err(ModelError::SingleClass);
    }
    for x in vectors {
        if let Some(i) = x.max_index() {
            if i >= dim {
                return Err(ModelError::DimensionMismatch { index: i, dim });
            }
        }
    }

    let n = vectors.len();
    let mut weights = alloc::vec![0.0f64; dim];
    let mut bias = 0.0f64;
    let mut rng = Rng::from_seed(config.seed);
    let mut order: Vec<usize> = (0..n).collect();

    // Scratch gradient accumulator reused across batches; only the touched
    // entries are reset, so sparse batches stay cheap even at dim 50k.
    let mut grad = alloc::vec![0.0f64; dim];
    let mut touched: Vec<usize> = Vec::new();

    let mut prev_loss = f64::INFINITY;
    for epoch in 0..config.max_epochs {
        rng.shuffle(&mut order);
        let mut epoch_loss_sum = 0.0;

        for batch in order.chunks(config.batch_size) {
            let weight_sq: f64 = weights.iter().map(|w| w * w).sum();
            let mut batch_bce = 0.0;
            let mut grad_bias = 0.0;
            for &ex in batch {
                let z = vectors[ex].dot(&weights) + bias;
                let y = if labels[ex] { 1.0 } else { 0.0 };
                batch_bce += bce(z, y);
                let delta = sigmoid(z) - y;
                for &(i, v) in vectors[ex].entries() {
                    if grad[i] == 0.0 {
                        touched.push(i);
                    }
                    grad[i] += delta * v;
                }
                grad_bias += delta;
            }
            let inv_batch = 1.0 / batch.len() as f64;
            epoch_loss_sum += batch_bce + (0.5 * config.l2_lambda * weight_sq) * batch.len() as f64;

            // w <- (1 - lr*λ) w - lr * mean(delta * x); the scaling applies
            // the λw part of the gradient to every coordinate.
            let decay = 1.0 - config.learning_rate * config.l2_lambda;
            for w in &mut weights {
                *w *= decay;
            }
            for &i in &touched {
                weights[i] -= config.learning_rate * inv_batch * grad[i];
                grad[i] = 0.0;
            }
            touched.clear();
            bias -= config.learning_rate * inv_batch * grad_bias;
        }

        let epoch_loss = epoch_loss_sum / n as f64;
        if !epoch_loss.is_finite() {
            return Err(ModelError::Diverged(epoch));
        }
        if prev_loss - epoch_loss < config.tol {
            break;
        }
        prev_loss = epoch_loss;
    }

    Ok(LogRegModel {
        weights,
        bias,
        l2_lambda: config.l2_lambda,
    })
}

/// Scores vectors and pairs them with record ids.
pub fn predict(
    model: &LogRegModel,
    ids: &[String],
    vectors: &[SparseVector],
) -> Result<PredictionSet, ModelError> {
    if ids.len() != vectors.len() {
        return Err(ModelError::LengthMismatch {
            vectors: vectors.len(),
            labels: ids.len(),
        });
    }
    let mut predictions = PredictionSet::new();
    for (id, x) in ids.iter().zip(vectors) {
        predictions.insert(id.clone(), model.score(x)?)?;
    }
    Ok(predictions)
}

/// The trained baseline pipeline: fitted vocabulary plus regressor.
#[derive(Debug, Clone, PartialEq)]
pub struct TfidfClassifier {
    vocabulary: Vocabulary,
    model: LogRegModel,
}

impl TfidfClassifier {
    /// Fits the vocabulary on `corpus`, vectorizes it, and trains the
    /// regressor. `labels[i]` is the binarized toxicity of `corpus[i]`.
    pub fn train<S: AsRef<str>>(
        corpus: &[S],
        labels: &[bool],
        config: &ModelConfig,
    ) -> Result<Self, ModelError> {
        let vocabulary = fit_vocabulary(corpus, config.max_features)?;
        let vectors: Vec<SparseVector> = corpus
            .iter()
            .map(|text| vectorize(text.as_ref(), &vocabulary))
            .collect();
        let model = train_logreg(&vectors, labels, vocabulary.len(), &config.train)?;
        Ok(TfidfClassifier { vocabulary, model })
    }

    pub fn from_parts(vocabulary: Vocabulary, model: LogRegModel) -> Result<Self, ModelError> {
        if model.dim() != vocabulary.len() {
            return Err(ModelError::DimensionMismatch {
                index: model.dim(),
                dim: vocabulary.len(),
            });
        }
        Ok(TfidfClassifier { vocabulary, model })
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        &self.vocabulary
    }

    pub fn model(&self) -> &LogRegModel {
        &self.model
    }

    /// Scores one text; infallible because vectorizing with the model's own
    /// vocabulary cannot produce an out-of-range feature index.
    pub fn score_text(&self, text: &str) -> f64 {
        let x = vectorize(text, &self.vocabulary);
        self.model
            .score(&x)
            .expect("own vocabulary bounds all feature indices")
    }

    /// Scores every record of `dataset`, keyed by record id.
    pub fn predict_dataset(&self, dataset: &crate::dataset::Dataset) -> PredictionSet {
        let mut predictions = PredictionSet::new();
        for record in dataset {
            predictions
                .insert(record.id(), self.score_text(record.text()))
                .expect("dataset ids are unique and sigmoid scores lie in [0, 1]");
        }
        predictions
    }
}
