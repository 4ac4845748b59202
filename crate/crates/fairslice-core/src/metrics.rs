//! Rank-based AUC and the three slice metrics that expose unintended
//! subgroup bias: Subgroup AUC, BPSN AUC, and BNSP AUC.
//!
//! All metrics are threshold-agnostic: they depend only on the ordering of
//! classifier scores, never on a classification cutoff. A metric over an
//! empty positive or negative side is *undefined*, a first-class state that
//! renders as `N/A` downstream, never silently 0 or skipped.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::dataset::{Dataset, DatasetError, SubgroupSlice};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MetricsError {
    #[error("missing prediction for record id `{0}`")]
    MissingPrediction(String),
    #[error("score {score} for id `{id}` is outside [0, 1]")]
    ScoreOutOfRange { id: String, score: f64 },
    #[error("duplicate prediction id `{0}`")]
    DuplicatePrediction(String),
    #[error("predictions do not cover the dataset ({} missing: {}; {} extra: {})",
        missing.len(), format_ids(missing), extra.len(), format_ids(extra))]
    Coverage {
        missing: Vec<String>,
        extra: Vec<String>,
    },
    #[error("histogram needs at least one bin")]
    ZeroBins,
    #[error(transparent)]
    Dataset(#[from] DatasetError),
}

fn format_ids(ids: &[String]) -> String {
    const SHOWN: usize = 8;
    let mut out = String::new();
    for (i, id) in ids.iter().take(SHOWN).enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        out.push('`');
        out.push_str(id);
        out.push('`');
    }
    if ids.len() > SHOWN {
        out.push_str(&alloc::format!(", and {} more", ids.len() - SHOWN));
    }
    out
}

/// Classifier scores keyed by record id, each in `[0, 1]`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PredictionSet {
    scores: BTreeMap<String, f64>,
}

impl PredictionSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Inserts one score; rejects out-of-range values and duplicate ids.
    pub fn insert(&mut self, id: impl Into<String>, score: f64) -> Result<(), MetricsError> {
        let id = id.into();
        if !(0.0..=1.0).contains(&score) {
            return Err(MetricsError::ScoreOutOfRange { id, score });
        }
        if self.scores.contains_key(&id) {
            return Err(MetricsError::DuplicatePrediction(id));
        }
        self.scores.insert(id, score);
        Ok(())
    }

    pub fn from_pairs<I, S>(pairs: I) -> Result<Self, MetricsError>
    where
        I: IntoIterator<Item = (S, f64)>,
        S: Into<String>,
    {
        let mut set = PredictionSet::new();
        for (id, score) in pairs {
            set.insert(id, score)?;
        }
        Ok(set)
    }

    pub fn get(&self, id: &str) -> Option<f64> {
        self.scores.get(id).copied()
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    /// Iterates `(id, score)` in ascending id order.
    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.scores.iter().map(|(id, &s)| (id.as_str(), s))
    }

    /// Checks that the ids exactly cover `dataset`: no dataset record without
    /// a score, no score without a record.
    pub fn validate_coverage(&self, dataset: &Dataset) -> Result<(), MetricsError> {
        let dataset_ids: alloc::collections::BTreeSet<&str> =
            dataset.iter().map(|r| r.id()).collect();
        let missing: Vec<String> = dataset_ids
            .iter()
            .filter(|id| !self.scores.contains_key(**id))
            .map(|id| id.to_string())
            .collect();
        let extra: Vec<String> = self
            .scores
            .keys()
            .filter(|id| !dataset_ids.contains(id.as_str()))
            .cloned()
            .collect();
        if missing.is_empty() && extra.is_empty() {
            Ok(())
        } else {
            Err(MetricsError::Coverage { missing, extra })
        }
    }
}

/// An AUC value together with the positive/negative counts it was computed
/// over. Undefined (no value) exactly when either side is empty.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricValue {
    value: Option<f64>,
    n_pos: usize,
    n_neg: usize,
}

impl MetricValue {
    /// Reassembles a value, enforcing that it is undefined iff either side
    /// is empty. Used when re-importing exported reports.
    pub fn from_parts(value: Option<f64>, n_pos: usize, n_neg: usize) -> Option<Self> {
        let expect_defined = n_pos > 0 && n_neg > 0;
        if value.is_some() != expect_defined {
            return None;
        }
        if let Some(v) = value {
            if !(0.0..=1.0).contains(&v) {
                return None;
            }
        }
        Some(MetricValue {
            value,
            n_pos,
            n_neg,
        })
    }

    pub fn value(&self) -> Option<f64> {
        self.value
    }

    pub fn is_defined(&self) -> bool {
        self.value.is_some()
    }

    pub fn n_pos(&self) -> usize {
        self.n_pos
    }

    pub fn n_neg(&self) -> usize {
        self.n_neg
    }
}

/// Mann-Whitney AUC over two score samples, with midranks so a tied
/// positive/negative pair contributes half credit:
///
/// `AUC = [R_pos - n_pos(n_pos + 1)/2] / (n_pos * n_neg)`
///
/// where `R_pos` is the rank sum of the positives in the pooled ascending
/// ordering. Undefined when either side is empty. O(n log n).
pub fn auc(positives: &[f64], negatives: &[f64]) -> MetricValue {
    let n_pos = positives.len();
    let n_neg = negatives.len();
    if n_pos == 0 || n_neg == 0 {
        return MetricValue {
            value: None,
            n_pos,
            n_neg,
        };
    }

    let mut pooled: Vec<(f64, bool)> = Vec::with_capacity(n_pos + n_neg);
    pooled.extend(positives.iter().map(|&s| (s, true)));
    pooled.extend(negatives.iter().map(|&s| (s, false)));
    pooled.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));

    let mut rank_sum_pos = 0.0f64;
    let mut i = 0;
    while i < pooled.len() {
        let mut j = i + 1;
        while j < pooled.len() && pooled[j].0 == pooled[i].0 {
            j += 1;
        }
        // Mean of the 1-based ranks i+1..=j, shared by the whole tie group.
        let midrank = (i + 1 + j) as f64 / 2.0;
        let positives_in_group = pooled[i..j].iter().filter(|(_, pos)| *pos).count();
        rank_sum_pos += midrank * positives_in_group as f64;
        i = j;
    }

    let u = rank_sum_pos - (n_pos * (n_pos + 1)) as f64 / 2.0;
    MetricValue {
        value: Some(u / (n_pos as f64 * n_neg as f64)),
        n_pos,
        n_neg,
    }
}

/// Scores grouped by slice membership and binarized label.
struct SliceScores {
    subgroup_pos: Vec<f64>,
    subgroup_neg: Vec<f64>,
    background_pos: Vec<f64>,
    background_neg: Vec<f64>,
}

impl SliceScores {
    fn collect(
        dataset: &Dataset,
        predictions: &PredictionSet,
        slice: &SubgroupSlice,
        label_threshold: f64,
    ) -> Result<Self, MetricsError> {
        let idx = dataset
            .identity_index(slice.identity())
            .ok_or_else(|| DatasetError::UnknownIdentity(slice.identity().to_string()))?;
        let mut groups = SliceScores {
            subgroup_pos: Vec::new(),
            subgroup_neg: Vec::new(),
            background_pos: Vec::new(),
            background_neg: Vec::new(),
        };
        for record in dataset {
            let score = predictions
                .get(record.id())
                .ok_or_else(|| MetricsError::MissingPrediction(record.id().to_string()))?;
            let member = record.identity_values()[idx] >= slice.membership_threshold();
            let toxic = record.is_toxic(label_threshold);
            match (member, toxic) {
                (true, true) => groups.subgroup_pos.push(score),
                (true, false) => groups.subgroup_neg.push(score),
                (false, true) => groups.background_pos.push(score),
                (false, false) => groups.background_neg.push(score),
            }
        }
        Ok(groups)
    }
}

/// AUC restricted to subgroup members: can the model separate toxic from
/// non-toxic comments *within* the slice?
pub fn subgroup_auc(
    dataset: &Dataset,
    predictions: &PredictionSet,
    slice: &SubgroupSlice,
    label_threshold: f64,
) -> Result<MetricValue, MetricsError> {
    let groups = SliceScores::collect(dataset, predictions, slice, label_threshold)?;
    Ok(auc(&groups.subgroup_pos, &groups.subgroup_neg))
}

/// Background-Positive / Subgroup-Negative AUC: positives are toxic
/// background records, negatives are non-toxic subgroup members. A low value
/// means the model hands out high toxicity scores to non-toxic subgroup
/// comments: false positives on the slice.
pub fn bpsn_auc(
    dataset: &Dataset,
    predictions: &PredictionSet,
    slice: &SubgroupSlice,
    label_threshold: f64,
) -> Result<MetricValue, MetricsError> {
    let groups = SliceScores::collect(dataset, predictions, slice, label_threshold)?;
    Ok(auc(&groups.background_pos, &groups.subgroup_neg))
}

/// Background-Negative / Subgroup-Positive AUC: positives are toxic subgroup
/// members, negatives are non-toxic background records. A low value means
/// the model scores toxic subgroup comments low: false negatives on the
/// slice.
pub fn bnsp_auc(
    dataset: &Dataset,
    predictions: &PredictionSet,
    slice: &SubgroupSlice,
    label_threshold: f64,
) -> Result<MetricValue, MetricsError> {
    let groups = SliceScores::collect(dataset, predictions, slice, label_threshold)?;
    Ok(auc(&groups.subgroup_pos, &groups.background_neg))
}

/// AUC over the whole dataset, ignoring identity annotations.
pub fn overall_auc(
    dataset: &Dataset,
    predictions: &PredictionSet,
    label_threshold: f64,
) -> Result<MetricValue, MetricsError> {
    let mut positives = Vec::new();
    let mut negatives = Vec::new();
    for record in dataset {
        let score = predictions
            .get(record.id())
            .ok_or_else(|| MetricsError::MissingPrediction(record.id().to_string()))?;
        if record.is_toxic(label_threshold) {
            positives.push(score);
        } else {
            negatives.push(score);
        }
    }
    Ok(auc(&positives, &negatives))
}

/// One report row: the three slice metrics plus the slice size.
#[derive(Debug, Clone, PartialEq)]
pub struct BiasRow {
    pub identity: String,
    pub subgroup_auc: MetricValue,
    pub bpsn_auc: MetricValue,
    pub bnsp_auc: MetricValue,
    pub subgroup_size: usize,
}

/// Per-subgroup bias metrics plus the overall AUC.
///
/// Rows are ordered by Subgroup AUC ascending (worst slice first); undefined
/// rows sort last, and remaining ties break by identity name so the order is
/// total and deterministic.
#[derive(Debug, Clone, PartialEq)]
pub struct BiasReport {
    pub overall: MetricValue,
    pub rows: Vec<BiasRow>,
}

impl BiasReport {
    /// Reassembles a report from already-ordered rows (e.g. a re-imported
    /// export). Does not re-sort.
    pub fn from_parts(overall: MetricValue, rows: Vec<BiasRow>) -> Self {
        BiasReport { overall, rows }
    }

    pub fn row(&self, identity: &str) -> Option<&BiasRow> {
        self.rows.iter().find(|r| r.identity == identity)
    }
}

fn row_order(a: &BiasRow, b: &BiasRow) -> core::cmp::Ordering {
    use core::cmp::Ordering;
    match (a.subgroup_auc.value(), b.subgroup_auc.value()) {
        (Some(x), Some(y)) => x.total_cmp(&y),
        (Some(_), None) => Ordering::Less,
        (None, Some(_)) => Ordering::Greater,
        (None, None) => Ordering::Equal,
    }
    .then_with(|| a.identity.cmp(&b.identity))
}

/// Computes one row per slice plus the overall AUC. An empty slice list
/// yields a report with the overall value and zero rows.
pub fn bias_report(
    dataset: &Dataset,
    predictions: &PredictionSet,
    slices: &[SubgroupSlice],
    label_threshold: f64,
) -> Result<BiasReport, MetricsError> {
    let overall = overall_auc(dataset, predictions, label_threshold)?;
    let mut rows = Vec::with_capacity(slices.len());
    for slice in slices {
        let groups = SliceScores::collect(dataset, predictions, slice, label_threshold)?;
        rows.push(BiasRow {
            identity: slice.identity().to_string(),
            subgroup_auc: auc(&groups.subgroup_pos, &groups.subgroup_neg),
            bpsn_auc: auc(&groups.background_pos, &groups.subgroup_neg),
            bnsp_auc: auc(&groups.subgroup_pos, &groups.background_neg),
            subgroup_size: groups.subgroup_pos.len() + groups.subgroup_neg.len(),
        });
    }
    rows.sort_by(row_order);
    Ok(BiasReport { overall, rows })
}

/// Subgroup score distribution split by binarized true label.
///
/// `n_bins` equal-width bins over `[0, 1]`; the last bin is right-inclusive
/// so a score of exactly 1.0 lands in it.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreHistogram {
    pub toxic: Vec<usize>,
    pub non_toxic: Vec<usize>,
}

impl ScoreHistogram {
    pub fn n_bins(&self) -> usize {
        self.toxic.len()
    }

    /// `[lo, hi)` bounds of bin `i` (the last bin is closed at 1.0).
    pub fn bin_bounds(&self, i: usize) -> (f64, f64) {
        let n = self.n_bins() as f64;
        (i as f64 / n, (i + 1) as f64 / n)
    }
}

pub fn score_histogram(
    dataset: &Dataset,
    predictions: &PredictionSet,
    slice: &SubgroupSlice,
    label_threshold: f64,
    n_bins: usize,
) -> Result<ScoreHistogram, MetricsError> {
    if n_bins == 0 {
        return Err(MetricsError::ZeroBins);
    }
    let groups = SliceScores::collect(dataset, predictions, slice, label_threshold)?;
    let mut histogram = ScoreHistogram {
        toxic: alloc::vec![0; n_bins],
        non_toxic: alloc::vec![0; n_bins],
    };
    let bin_of = |score: f64| ((score * n_bins as f64) as usize).min(n_bins - 1);
    for &score in &groups.subgroup_pos {
        histogram.toxic[bin_of(score)] += 1;
    }
    for &score in &groups.subgroup_neg {
        histogram.non_toxic[bin_of(score)] += 1;
    }
    Ok(histogram)
}
