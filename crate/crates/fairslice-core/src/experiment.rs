//! Mixed/Naive training-split construction and the two-model comparison.
//!
//! A *naive* split samples only records whose `identity_targeted` value is
//! below the identity filter threshold, an "identity-free" training set. A
//! *mixed* split samples from the full dataset without filtering. Both are
//! seeded uniform samples without replacement of equal configurable size,
//! and both preserve source order, so a fixed `(dataset, spec)` always
//! yields the same split.

use alloc::collections::BTreeSet;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::dataset::{Dataset, SubgroupSlice};
use crate::metrics::{bias_report, BiasReport, MetricsError, PredictionSet};
use crate::model::{ModelConfig, ModelError, TfidfClassifier};
use crate::rng::Rng;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ExperimentError {
    #[error("split size must be at least 1")]
    ZeroSize,
    #[error("identity filter threshold {0} must lie in (0, 1)")]
    InvalidFilterThreshold(f64),
    #[error("label threshold {0} must lie in (0, 1)")]
    InvalidLabelThreshold(f64),
    #[error("only {eligible} records pass the identity filter, need {needed}")]
    InsufficientEligible { needed: usize, eligible: usize },
    #[error("train and test sets share {count} record ids (e.g. `{example}`)")]
    OverlappingIds { count: usize, example: String },
    #[error("mixed and naive specs disagree on label threshold ({mixed} vs {naive})")]
    LabelThresholdMismatch { mixed: f64, naive: f64 },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitMode {
    /// Sample from the full dataset, identity-targeted records included.
    Mixed,
    /// Sample only records with `identity_targeted` below the filter
    /// threshold.
    Naive,
}

impl SplitMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            SplitMode::Mixed => "mixed",
            SplitMode::Naive => "naive",
        }
    }
}

/// Configuration for one training split.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitSpec {
    pub mode: SplitMode,
    pub size: usize,
    pub identity_filter_threshold: f64,
    pub seed: u64,
    pub label_threshold: f64,
}

impl SplitSpec {
    pub const DEFAULT_FILTER_THRESHOLD: f64 = 0.25;
    pub const DEFAULT_LABEL_THRESHOLD: f64 = 0.5;

    pub fn mixed(size: usize, seed: u64) -> Self {
        SplitSpec {
            mode: SplitMode::Mixed,
            size,
            identity_filter_threshold: Self::DEFAULT_FILTER_THRESHOLD,
            seed,
            label_threshold: Self::DEFAULT_LABEL_THRESHOLD,
        }
    }

    pub fn naive(size: usize, seed: u64) -> Self {
        SplitSpec {
            mode: SplitMode::Naive,
            ..Self::mixed(size, seed)
        }
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        if self.size == 0 {
            return Err(ExperimentError::ZeroSize);
        }
        if !(self.identity_filter_threshold > 0.0 && self.identity_filter_threshold < 1.0) {
            return Err(ExperimentError::InvalidFilterThreshold(
                self.identity_filter_threshold,
            ));
        }
        if !(self.label_threshold > 0.0 && self.label_threshold < 1.0) {
            return Err(ExperimentError::InvalidLabelThreshold(self.label_threshold));
        }
        Ok(())
    }
}

/// Four-cell label distribution of a split, in the shape used to describe
/// training data: records are "subgroup" here when their `identity_targeted`
/// value reaches the membership threshold (distinct from the naive filter
/// threshold).
#[derive(Debug, Clone, PartialEq)]
pub struct SplitStats {
    pub total: usize,
    pub non_subgroup_toxic: usize,
    pub non_subgroup_non_toxic: usize,
    /// Undefined when the split holds no subgroup records at all.
    pub subgroup_toxic: Option<usize>,
    pub subgroup_non_toxic: Option<usize>,
    /// Non-toxic records per toxic record; undefined when nothing is toxic.
    pub nontoxic_to_toxic_ratio: Option<f64>,
}

impl SplitStats {
    /// The ratio rendered the way distribution tables print it: the real
    /// value rounded to the nearest whole "N to 1".
    pub fn ratio_label(&self) -> Option<u64> {
        self.nontoxic_to_toxic_ratio.map(|r| libm::round(r) as u64)
    }
}

/// Counts the four label/membership cells of a split plus the
/// non-toxic : toxic ratio.
pub fn split_stats(split: &Dataset, label_threshold: f64, membership_threshold: f64) -> SplitStats {
    let mut cells = [0usize; 4]; // [ns_nontoxic, ns_toxic, sg_nontoxic, sg_toxic]
    for record in split {
        let subgroup = record.identity_targeted() >= membership_threshold;
        let toxic = record.is_toxic(label_threshold);
        cells[(subgroup as usize) * 2 + (toxic as usize)] += 1;
    }
    let [ns_nontoxic, ns_toxic, sg_nontoxic, sg_toxic] = cells;
    let toxic_total = ns_toxic + sg_toxic;
    let nontoxic_total = ns_nontoxic + sg_nontoxic;
    let has_subgroup = sg_nontoxic + sg_toxic > 0;
    SplitStats {
        total: split.len(),
        non_subgroup_toxic: ns_toxic,
        non_subgroup_non_toxic: ns_nontoxic,
        subgroup_toxic: has_subgroup.then_some(sg_toxic),
        subgroup_non_toxic: has_subgroup.then_some(sg_nontoxic),
        nontoxic_to_toxic_ratio: (toxic_total > 0)
            .then(|| nontoxic_total as f64 / toxic_total as f64),
    }
}

/// Draws the split described by `spec` from `dataset`.
///
/// Sampling is uniform without replacement over the eligible pool (the whole
/// dataset for mixed, filtered for naive) and the output keeps source order.
pub fn build_split(dataset: &Dataset, spec: &SplitSpec) -> Result<Dataset, ExperimentError> {
    spec.validate()?;
    let eligible: Vec<usize> = match spec.mode {
        SplitMode::Mixed => (0..dataset.len()).collect(),
        SplitMode::Naive => dataset
            .iter()
            .enumerate()
            .filter(|(_, r)| r.identity_targeted() < spec.identity_filter_threshold)
            .map(|(i, _)| i)
            .collect(),
    };
    if eligible.len() < spec.size {
        return Err(ExperimentError::InsufficientEligible {
            needed: spec.size,
            eligible: eligible.len(),
        });
    }
    let mut rng = Rng::from_seed(spec.seed);
    let chosen = rng.sample_indices(eligible.len(), spec.size);
    let records = chosen
        .into_iter()
        .map(|i| dataset.records()[eligible[i]].clone())
        .collect();
    Ok(Dataset::from_validated_parts(
        dataset.tracked_identities().to_vec(),
        records,
    ))
}

/// Everything produced by one mixed-vs-naive comparison run. Both reports
/// are computed on the identical test set, so their prediction-set ids match
/// exactly.
#[derive(Debug, Clone)]
pub struct Comparison {
    pub mixed_report: BiasReport,
    pub naive_report: BiasReport,
    pub mixed_stats: SplitStats,
    pub naive_stats: SplitStats,
    pub mixed_predictions: PredictionSet,
    pub naive_predictions: PredictionSet,
}

/// Builds both splits, trains the baseline pipeline on each, scores the
/// shared test set, and reports per-subgroup bias metrics for both models.
///
/// `membership_threshold` drives both the evaluation slices and the
/// subgroup cells of the split statistics. Train and test ids must be
/// disjoint, and both specs must agree on the label threshold.
pub fn run_comparison(
    train: &Dataset,
    test: &Dataset,
    spec_mixed: &SplitSpec,
    spec_naive: &SplitSpec,
    model_config: &ModelConfig,
    membership_threshold: f64,
) -> Result<Comparison, ExperimentError> {
    let train_ids: BTreeSet<&str> = train.iter().map(|r| r.id()).collect();
    let shared: Vec<&str> = test
        .iter()
        .map(|r| r.id())
        .filter(|id| train_ids.contains(id))
        .collect();
    if let Some(first) = shared.first() {
        return Err(ExperimentError::OverlappingIds {
            count: shared.len(),
            example: first.to_string(),
        });
    }
    if spec_mixed.label_threshold != spec_naive.label_threshold {
        return Err(ExperimentError::LabelThresholdMismatch {
            mixed: spec_mixed.label_threshold,
            naive: spec_naive.label_threshold,
        });
    }
    let label_threshold = spec_mixed.label_threshold;

    let slices: Vec<SubgroupSlice> = test
        .tracked_identities()
        .iter()
        .map(|identity| SubgroupSlice::with_threshold(identity, membership_threshold))
        .collect::<Result<_, _>>()
        .map_err(MetricsError::from)?;

    let run_one = |spec: &SplitSpec| -> Result<_, ExperimentError> {
        let split = build_split(train, spec)?;
        let stats = split_stats(&split, label_threshold, membership_threshold);
        let corpus: Vec<&str> = split.iter().map(|r| r.text()).collect();
        let labels: Vec<bool> = split.iter().map(|r| r.is_toxic(label_threshold)).collect();
        let classifier = TfidfClassifier::train(&corpus, &labels, model_config)?;
        let predictions = classifier.predict_dataset(test);
        let report = bias_report(test, &predictions, &slices, label_threshold)?;
        Ok((report, stats, predictions))
    };

    let (mixed_report, mixed_stats, mixed_predictions) = run_one(spec_mixed)?;
    let (naive_report, naive_stats, naive_predictions) = run_one(spec_naive)?;

    Ok(Comparison {
        mixed_report,
        naive_report,
        mixed_stats,
        naive_stats,
        mixed_predictions,
        naive_predictions,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::DatasetBuilder;
    use alloc::format;

    /// Corpus where ~30% of records carry a "muslim" annotation above 0.5
    /// and toxicity alternates; texts carry class-correlated tokens.
    fn synthetic(n: usize, prefix: &str) -> Dataset {
        let mut builder = DatasetBuilder::with_default_identities();
        for i in 0..n {
            let id = format!("{prefix}{i:04}");
            let toxic = i % 3 == 0;
            let subgroup = i % 10 < 3;
            let toxicity = if toxic { 0.9 } else { 0.1 };
            let text = match (toxic, subgroup) {
                (true, true) => "insultz taunted muslim words filler",
                (true, false) => "insultz rude words filler",
                (false, true) => "kind muslim words filler",
                (false, false) => "kind gentle words filler",
            };
            let identities: &[(&str, f64)] = if subgroup { &[("muslim", 0.8)] } else { &[] };
            builder.push(&id, text, toxicity, identities).unwrap();
        }
        builder.finish()
    }

    #[test]
    fn naive_split_respects_filter() {
        let data = synthetic(200, "r");
        let spec = SplitSpec::naive(50, 9);
        let split = build_split(&data, &spec).unwrap();
        assert_eq!(split.len(), 50);
        assert!(split
            .iter()
            .all(|r| r.identity_targeted() < spec.identity_filter_threshold));
        assert!(split
            .iter()
            .all(|r| r.identity_values().iter().all(|&v| v < 0.25)));
    }

    #[test]
    fn mixed_and_naive_have_equal_sizes() {
        let data = synthetic(200, "r");
        let mixed = build_split(&data, &SplitSpec::mixed(80, 1)).unwrap();
        let naive = build_split(&data, &SplitSpec::naive(80, 1)).unwrap();
        assert_eq!(mixed.len(), naive.len());
    }

    #[test]
    fn build_split_is_deterministic_and_order_preserving() {
        let data = synthetic(200, "r");
        let spec = SplitSpec::mixed(60, 123);
        let a = build_split(&data, &spec).unwrap();
        let b = build_split(&data, &spec).unwrap();
        let ids_a: Vec<&str> = a.iter().map(|r| r.id()).collect();
        let ids_b: Vec<&str> = b.iter().map(|r| r.id()).collect();
        assert_eq!(ids_a, ids_b);
        let mut sorted = ids_a.clone();
        sorted.sort_unstable();
        assert_eq!(ids_a, sorted, "output should preserve source order");

        let other = build_split(&data, &SplitSpec::mixed(60, 124)).unwrap();
        let ids_other: Vec<&str> = other.iter().map(|r| r.id()).collect();
        assert_ne!(ids_a, ids_other, "different seeds should differ");
    }

    #[test]
    fn build_split_reports_eligible_count() {
        let data = synthetic(100, "r");
        let eligible = data.iter().filter(|r| r.identity_targeted() < 0.25).count();
        let err = build_split(&data, &SplitSpec::naive(eligible + 1, 0)).unwrap_err();
        assert_eq!(
            err,
            ExperimentError::InsufficientEligible {
                needed: eligible + 1,
                eligible
            }
        );
    }

    #[test]
    fn spec_validation() {
        assert_eq!(
            build_split(&synthetic(10, "r"), &SplitSpec::mixed(0, 0)).unwrap_err(),
            ExperimentError::ZeroSize
        );
        let mut spec = SplitSpec::mixed(1, 0);
        spec.identity_filter_threshold = 1.0;
        assert!(matches!(
            build_split(&synthetic(10, "r"), &spec).unwrap_err(),
            ExperimentError::InvalidFilterThreshold(_)
        ));
    }

    #[test]
    fn split_stats_hand_count() {
        // 10 records, 2 toxic -> ratio 8/2 = 4.0; no subgroup members.
        let mut builder = DatasetBuilder::with_default_identities();
        for i in 0..10 {
            let toxicity = if i < 2 { 1.0 } else { 0.0 };
            builder.push(&format!("r{i}"), "t", toxicity, &[]).unwrap();
        }
        let stats = split_stats(&builder.finish(), 0.5, 0.5);
        assert_eq!(stats.total, 10);
        assert_eq!(stats.non_subgroup_toxic, 2);
        assert_eq!(stats.non_subgroup_non_toxic, 8);
        assert_eq!(stats.subgroup_toxic, None);
        assert_eq!(stats.subgroup_non_toxic, None);
        assert_eq!(stats.nontoxic_to_toxic_ratio, Some(4.0));
        assert_eq!(stats.ratio_label(), Some(4));
    }

    #[test]
    fn naive_split_stats_have_undefined_subgroup_cells() {
        let data = synthetic(200, "r");
        let split = build_split(&data, &SplitSpec::naive(50, 3)).unwrap();
        let stats = split_stats(&split, 0.5, 0.5);
        // Filter at 0.25 is stricter than membership at 0.5, so the split
        // cannot contain members.
        assert_eq!(stats.subgroup_toxic, None);
        assert_eq!(stats.subgroup_non_toxic, None);
        assert_eq!(
            stats.non_subgroup_toxic + stats.non_subgroup_non_toxic,
            stats.total
        );
    }

    #[test]
    fn split_stats_cells_sum_to_total() {
        let data = synthetic(97, "r");
        let stats = split_stats(&data, 0.5, 0.5);
        let sum = stats.non_subgroup_toxic
            + stats.non_subgroup_non_toxic
            + stats.subgroup_toxic.unwrap_or(0)
            + stats.subgroup_non_toxic.unwrap_or(0);
        assert_eq!(sum, stats.total);
    }

    #[test]
    fn zero_toxic_split_has_undefined_ratio() {
        let mut builder = DatasetBuilder::with_default_identities();
        builder.push("a", "t", 0.0, &[]).unwrap();
        let stats = split_stats(&builder.finish(), 0.5, 0.5);
        assert_eq!(stats.nontoxic_to_toxic_ratio, None);
        assert_eq!(stats.ratio_label(), None);
    }

    #[test]
    fn comparison_smoke_on_small_corpus() {
        let train = synthetic(50, "tr");
        let test = synthetic(50, "te");
        let mut config = ModelConfig::new(5);
        config.train.max_epochs = 3;
        let comparison = run_comparison(
            &train,
            &test,
            &SplitSpec::mixed(30, 5),
            &SplitSpec::naive(30, 5),
            &config,
            0.5,
        )
        .unwrap();
        assert_eq!(comparison.mixed_report.rows.len(), 9);
        assert_eq!(comparison.naive_report.rows.len(), 9);
        assert_eq!(comparison.mixed_stats.total, 30);
        assert_eq!(comparison.naive_stats.total, 30);
        // Both models scored the byte-identical id set.
        let mixed_ids: Vec<&str> = comparison
            .mixed_predictions
            .iter()
            .map(|(id, _)| id)
            .collect();
        let naive_ids: Vec<&str> = comparison
            .naive_predictions
            .iter()
            .map(|(id, _)| id)
            .collect();
        assert_eq!(mixed_ids, naive_ids);
        assert_eq!(mixed_ids.len(), test.len());
    }

    #[test]
    fn comparison_rejects_overlapping_ids() {
        let train = synthetic(20, "x");
        let test = synthetic(10, "x");
        let err = run_comparison(
            &train,
            &test,
            &SplitSpec::mixed(5, 0),
            &SplitSpec::naive(5, 0),
            &ModelConfig::new(0),
            0.5,
        )
        .unwrap_err();
        match err {
            ExperimentError::OverlappingIds { count, example } => {
                assert_eq!(count, 10);
                assert_eq!(example, "x0000");
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn comparison_rejects_label_threshold_mismatch() {
        let train = synthetic(20, "tr");
        let test = synthetic(10, "te");
        let mut naive = SplitSpec::naive(5, 0);
        naive.label_threshold = 0.4;
        let err = run_comparison(
            &train,
            &test,
            &SplitSpec::mixed(5, 0),
            &naive,
            &ModelConfig::new(0),
            0.5,
        )
        .unwrap_err();
        assert!(matches!(
            err,
            ExperimentError::LabelThresholdMismatch { .. }
        ));
    }
}
