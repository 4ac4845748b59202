//! Core algorithms for auditing unintended subgroup bias in binary toxicity
//! classifiers.
//!
//! Everything in this crate is pure computation over in-memory data:
//!
//! - [`dataset`]: labeled comment records, identity annotations, and
//!   subgroup/background partitioning;
//! - [`metrics`]: Mann-Whitney AUC with midrank tie handling plus the three
//!   slice metrics (Subgroup, BPSN, BNSP AUC), bias reports, and score
//!   histograms;
//! - [`experiment`]: seeded mixed/naive training-split construction,
//!   distribution statistics, and the end-to-end two-model comparison;
//! - [`model`]: a from-scratch TFIDF vectorizer and L2-regularized logistic
//!   regression trained by deterministic mini-batch gradient descent;
//! - [`rng`]: the xoshiro256++ generator behind every seeded operation.
//!
//! The crate is `no_std` (with `alloc`); file formats, CSV ingestion, report
//! rendering, and the command-line interface live in the companion
//! `fairslice` crate.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod dataset;
pub mod experiment;
pub mod metrics;
pub mod model;
pub mod rng;

pub use dataset::{
    BinaryLabel, CommentRecord, Dataset, DatasetBuilder, DatasetError, SubgroupSlice,
    DEFAULT_IDENTITIES,
};
pub use experiment::{
    build_split, run_comparison, split_stats, Comparison, ExperimentError, SplitMode, SplitSpec,
    SplitStats,
};
pub use metrics::{
    auc, bias_report, bnsp_auc, bpsn_auc, overall_auc, score_histogram, subgroup_auc, BiasReport,
    BiasRow, MetricValue, MetricsError, PredictionSet, ScoreHistogram,
};
pub use model::{
    fit_vocabulary, predict, tokenize, train_logreg, vectorize, LogRegModel, ModelConfig,
    ModelError, SparseVector, TfidfClassifier, TrainConfig, Vocabulary,
};
