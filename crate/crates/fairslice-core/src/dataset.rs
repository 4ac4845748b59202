//! Labeled comment datasets and subgroup/background partitioning.
//!
//! A [`Dataset`] is an immutable, ordered collection of [`CommentRecord`]s
//! plus the list of identity annotations it tracks. Identity values are
//! stored densely, aligned with `tracked_identities`, so a record costs a
//! handful of floats rather than a per-record map.

use alloc::collections::BTreeSet;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

/// The nine identity subgroups tracked by default.
pub const DEFAULT_IDENTITIES: [&str; 9] = [
    "homosexual_gay_or_lesbian",
    "black",
    "white",
    "muslim",
    "jewish",
    "female",
    "psychiatric_or_mental_illness",
    "male",
    "christian",
];

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DatasetError {
    #[error("record id must be non-empty")]
    EmptyId,
    #[error("duplicate record id `{0}`")]
    DuplicateId(String),
    #[error("value {value} for `{field}` is outside [0, 1]")]
    ValueOutOfRange { field: String, value: f64 },
    #[error("unknown identity `{0}`")]
    UnknownIdentity(String),
    #[error("unknown record id `{0}`")]
    UnknownRecordId(String),
    #[error("membership threshold {0} must lie in (0, 1]")]
    InvalidMembershipThreshold(f64),
}

/// One labeled comment: text, fractional toxicity, and per-identity
/// annotation fractions aligned with the owning dataset's tracked identities.
#[derive(Debug, Clone, PartialEq)]
pub struct CommentRecord {
    id: String,
    text: String,
    toxicity: f64,
    identity_values: Vec<f64>,
}

impl CommentRecord {
    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    /// Fraction of annotators that marked the comment toxic, in `[0, 1]`.
    pub fn toxicity(&self) -> f64 {
        self.toxicity
    }

    /// Identity annotation values aligned with the dataset's tracked
    /// identities. Identities absent from the source data are 0.0.
    pub fn identity_values(&self) -> &[f64] {
        &self.identity_values
    }

    /// The scalar the identity filter thresholds: the maximum annotation
    /// value over all tracked identities, 0.0 when none are annotated.
    pub fn identity_targeted(&self) -> f64 {
        self.identity_values.iter().copied().fold(0.0, f64::max)
    }

    /// Binarizes the fractional toxicity label; toxic iff
    /// `toxicity >= label_threshold` (boundary inclusive).
    pub fn binarize(&self, label_threshold: f64) -> BinaryLabel {
        debug_assert!(
            label_threshold > 0.0 && label_threshold < 1.0,
            "label threshold must lie in (0, 1)"
        );
        if self.toxicity >= label_threshold {
            BinaryLabel::Toxic
        } else {
            BinaryLabel::NonToxic
        }
    }

    pub fn is_toxic(&self, label_threshold: f64) -> bool {
        self.binarize(label_threshold) == BinaryLabel::Toxic
    }
}

/// A comment's toxicity label after thresholding.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinaryLabel {
    NonToxic,
    Toxic,
}

/// A named identity plus the membership threshold that partitions a dataset
/// into subgroup and background.
#[derive(Debug, Clone, PartialEq)]
pub struct SubgroupSlice {
    identity: String,
    membership_threshold: f64,
}

impl SubgroupSlice {
    pub const DEFAULT_MEMBERSHIP_THRESHOLD: f64 = 0.5;

    /// Slice with the default membership threshold of 0.5.
    pub fn new(identity: impl Into<String>) -> Self {
        SubgroupSlice {
            identity: identity.into(),
            membership_threshold: Self::DEFAULT_MEMBERSHIP_THRESHOLD,
        }
    }

    /// Slice with an explicit membership threshold in `(0, 1]`.
    pub fn with_threshold(
        identity: impl Into<String>,
        membership_threshold: f64,
    ) -> Result<Self, DatasetError> {
        if !(membership_threshold > 0.0 && membership_threshold <= 1.0) {
            return Err(DatasetError::InvalidMembershipThreshold(
                membership_threshold,
            ));
        }
        Ok(SubgroupSlice {
            identity: identity.into(),
            membership_threshold,
        })
    }

    pub fn identity(&self) -> &str {
        &self.identity
    }

    pub fn membership_threshold(&self) -> f64 {
        self.membership_threshold
    }
}

/// Immutable, ordered collection of comment records.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    tracked_identities: Vec<String>,
    records: Vec<CommentRecord>,
}

impl Dataset {
    /// Collects the default nine tracked identities as owned strings.
    pub fn default_identities() -> Vec<String> {
        DEFAULT_IDENTITIES.iter().map(|s| s.to_string()).collect()
    }

    pub fn tracked_identities(&self) -> &[String] {
        &self.tracked_identities
    }

    pub fn records(&self) -> &[CommentRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn iter(&self) -> core::slice::Iter<'_, CommentRecord> {
        self.records.iter()
    }

    /// Position of `identity` in the tracked list.
    pub fn identity_index(&self, identity: &str) -> Option<usize> {
        self.tracked_identities.iter().position(|t| t == identity)
    }

    /// A record's annotation value for a tracked identity.
    pub fn identity_value(&self, record: &CommentRecord, identity: &str) -> Option<f64> {
        self.identity_index(identity)
            .map(|i| record.identity_values[i])
    }

    /// Whether `record` belongs to the slice's subgroup: member iff its
    /// annotation for the slice identity is at or above the membership
    /// threshold.
    pub fn is_member(
        &self,
        record: &CommentRecord,
        slice: &SubgroupSlice,
    ) -> Result<bool, DatasetError> {
        let idx = self
            .identity_index(slice.identity())
            .ok_or_else(|| DatasetError::UnknownIdentity(slice.identity().to_string()))?;
        Ok(record.identity_values[idx] >= slice.membership_threshold())
    }

    /// Splits the dataset into `(subgroup, background)`. Every record lands
    /// in exactly one side; input order is preserved within each side.
    pub fn partition(
        &self,
        slice: &SubgroupSlice,
    ) -> Result<(Vec<&CommentRecord>, Vec<&CommentRecord>), DatasetError> {
        let idx = self
            .identity_index(slice.identity())
            .ok_or_else(|| DatasetError::UnknownIdentity(slice.identity().to_string()))?;
        let mut subgroup = Vec::new();
        let mut background = Vec::new();
        for record in &self.records {
            if record.identity_values[idx] >= slice.membership_threshold() {
                subgroup.push(record);
            } else {
                background.push(record);
            }
        }
        Ok((subgroup, background))
    }

    /// Restricts the dataset to the given record ids, preserving dataset
    /// order. Errors on any id the dataset does not contain.
    pub fn subset_by_ids(&self, ids: &BTreeSet<String>) -> Result<Dataset, DatasetError> {
        let known: BTreeSet<&str> = self.records.iter().map(|r| r.id.as_str()).collect();
        for id in ids {
            if !known.contains(id.as_str()) {
                return Err(DatasetError::UnknownRecordId(id.clone()));
            }
        }
        let records = self
            .records
            .iter()
            .filter(|r| ids.contains(&r.id))
            .cloned()
            .collect();
        Ok(Dataset {
            tracked_identities: self.tracked_identities.clone(),
            records,
        })
    }

    pub(crate) fn from_validated_parts(
        tracked_identities: Vec<String>,
        records: Vec<CommentRecord>,
    ) -> Dataset {
        Dataset {
            tracked_identities,
            records,
        }
    }
}

impl<'a> IntoIterator for &'a Dataset {
    type Item = &'a CommentRecord;
    type IntoIter = core::slice::Iter<'a, CommentRecord>;

    fn into_iter(self) -> Self::IntoIter {
        self.records.iter()
    }
}

/// Validating accumulator for [`Dataset`]; the only way to construct records.
#[derive(Debug)]
pub struct DatasetBuilder {
    tracked_identities: Vec<String>,
    records: Vec<CommentRecord>,
    seen_ids: BTreeSet<String>,
}

impl DatasetBuilder {
    pub fn new(tracked_identities: Vec<String>) -> Self {
        DatasetBuilder {
            tracked_identities,
            records: Vec::new(),
            seen_ids: BTreeSet::new(),
        }
    }

    /// Builder tracking the default nine identities.
    pub fn with_default_identities() -> Self {
        Self::new(Dataset::default_identities())
    }

    /// Appends one record. `identities` lists (name, value) annotations;
    /// tracked identities not listed default to 0.0, and names that are not
    /// tracked are an error.
    pub fn push(
        &mut self,
        id: &str,
        text: &str,
        toxicity: f64,
        identities: &[(&str, f64)],
    ) -> Result<(), DatasetError> {
        if id.is_empty() {
            return Err(DatasetError::EmptyId);
        }
        if self.seen_ids.contains(id) {
            return Err(DatasetError::DuplicateId(id.to_string()));
        }
        if !(0.0..=1.0).contains(&toxicity) {
            return Err(DatasetError::ValueOutOfRange {
                field: "toxicity".to_string(),
                value: toxicity,
            });
        }
        let mut values = alloc::vec![0.0; self.tracked_identities.len()];
        for &(name, value) in identities {
            let idx = self
                .tracked_identities
                .iter()
                .position(|t| t == name)
                .ok_or_else(|| DatasetError::UnknownIdentity(name.to_string()))?;
            if !(0.0..=1.0).contains(&value) {
                return Err(DatasetError::ValueOutOfRange {
                    field: name.to_string(),
                    value,
                });
            }
            values[idx] = value;
        }
        self.seen_ids.insert(id.to_string());
        self.records.push(CommentRecord {
            id: id.to_string(),
            text: text.to_string(),
            toxicity,
            identity_values: values,
        });
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn finish(self) -> Dataset {
        Dataset {
            tracked_identities: self.tracked_identities,
            records: self.records,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn single_identity_dataset(values: &[(&str, f64, f64)]) -> Dataset {
        // (id, toxicity, muslim annotation)
        let mut builder = DatasetBuilder::new(vec!["muslim".to_string()]);
        for &(id, tox, muslim) in values {
            builder
                .push(id, "text", tox, &[("muslim", muslim)])
                .unwrap();
        }
        builder.finish()
    }

    #[test]
    fn binarize_boundary_is_inclusive() {
        let data = single_identity_dataset(&[("a", 0.0, 0.0), ("b", 0.5, 0.0), ("c", 0.49, 0.0)]);
        assert_eq!(data.records()[0].binarize(0.5), BinaryLabel::NonToxic);
        assert_eq!(data.records()[1].binarize(0.5), BinaryLabel::Toxic);
        assert_eq!(data.records()[2].binarize(0.5), BinaryLabel::NonToxic);
    }

    #[test]
    fn membership_follows_threshold() {
        let data = single_identity_dataset(&[("a", 0.0, 0.8), ("b", 0.0, 0.4)]);
        let slice = SubgroupSlice::new("muslim");
        assert!(data.is_member(&data.records()[0], &slice).unwrap());
        assert!(!data.is_member(&data.records()[1], &slice).unwrap());
    }

    #[test]
    fn partition_counts_and_order() {
        let data = single_identity_dataset(&[
            ("a", 0.0, 0.9),
            ("b", 0.0, 0.1),
            ("c", 0.0, 0.2),
            ("d", 0.0, 0.7),
            ("e", 0.0, 0.0),
            ("f", 0.0, 0.3),
        ]);
        let (subgroup, background) = data.partition(&SubgroupSlice::new("muslim")).unwrap();
        assert_eq!(subgroup.len(), 2);
        assert_eq!(background.len(), 4);
        assert_eq!(subgroup.len() + background.len(), data.len());
        let ids: Vec<&str> = subgroup.iter().map(|r| r.id()).collect();
        assert_eq!(ids, vec!["a", "d"]);
    }

    #[test]
    fn partition_rejects_unknown_identity() {
        let data = single_identity_dataset(&[("a", 0.0, 0.9)]);
        let err = data.partition(&SubgroupSlice::new("martian")).unwrap_err();
        assert_eq!(err, DatasetError::UnknownIdentity("martian".to_string()));
    }

    #[test]
    fn identity_targeted_is_max_annotation() {
        let mut builder = DatasetBuilder::with_default_identities();
        builder.push("none", "t", 0.0, &[]).unwrap();
        builder
            .push("two", "t", 0.0, &[("black", 0.3), ("female", 0.6)])
            .unwrap();
        builder.push("low", "t", 0.0, &[("jewish", 0.24)]).unwrap();
        let data = builder.finish();
        assert_eq!(data.records()[0].identity_targeted(), 0.0);
        assert_eq!(data.records()[1].identity_targeted(), 0.6);
        // 0.24 passes the < 0.25 identity filter.
        let low = data.records()[2].identity_targeted();
        assert_eq!(low, 0.24);
        assert!(low < 0.25);
    }

    #[test]
    fn builder_rejects_bad_input() {
        let mut builder = DatasetBuilder::with_default_identities();
        assert_eq!(builder.push("", "t", 0.0, &[]), Err(DatasetError::EmptyId));
        assert_eq!(
            builder.push("a", "t", 1.2, &[]),
            Err(DatasetError::ValueOutOfRange {
                field: "toxicity".to_string(),
                value: 1.2
            })
        );
        assert_eq!(
            builder.push("a", "t", 0.0, &[("muslim", -0.1)]),
            Err(DatasetError::ValueOutOfRange {
                field: "muslim".to_string(),
                value: -0.1
            })
        );
        assert_eq!(
            builder.push("a", "t", 0.0, &[("martian", 0.5)]),
            Err(DatasetError::UnknownIdentity("martian".to_string()))
        );
        builder.push("a", "t", 0.0, &[]).unwrap();
        assert_eq!(
            builder.push("a", "t", 0.0, &[]),
            Err(DatasetError::DuplicateId("a".to_string()))
        );
    }

    #[test]
    fn slice_threshold_must_be_in_range() {
        assert!(SubgroupSlice::with_threshold("muslim", 0.0).is_err());
        assert!(SubgroupSlice::with_threshold("muslim", 1.01).is_err());
        assert!(SubgroupSlice::with_threshold("muslim", 1.0).is_ok());
    }

    #[test]
    fn subset_preserves_order_and_rejects_unknown_ids() {
        let data = single_identity_dataset(&[("a", 0.0, 0.0), ("b", 0.1, 0.0), ("c", 0.2, 0.0)]);
        let ids: BTreeSet<String> = ["c", "a"].iter().map(|s| s.to_string()).collect();
        let subset = data.subset_by_ids(&ids).unwrap();
        let got: Vec<&str> = subset.iter().map(|r| r.id()).collect();
        assert_eq!(got, vec!["a", "c"]);

        let missing: BTreeSet<String> = ["zz"].iter().map(|s| s.to_string()).collect();
        assert_eq!(
            data.subset_by_ids(&missing).unwrap_err(),
            DatasetError::UnknownRecordId("zz".to_string())
        );
    }
}
