//! Bias-audit toolkit for binary toxicity classifiers: file formats, report
//! rendering, and the `fairslice` command-line interface.
//!
//! The algorithms (slice AUC metrics, split construction, the TFIDF +
//! logistic-regression baseline) live in the re-exported [`core`] crate;
//! this crate adds everything that touches the filesystem.

pub use fairslice_core as core;

pub mod cli;
pub mod io;
pub mod report;
