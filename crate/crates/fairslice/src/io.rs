//! File formats: dataset CSV ingestion, prediction files, split id lists,
//! and the flat-text model format.
//!
//! All CSV handling is RFC 4180 (quoted fields, embedded commas/newlines)
//! with a required header row. Floats are written with Rust's shortest
//! round-trip formatting, so exporting and re-importing reproduces values
//! bit for bit.

use std::collections::BTreeSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use fairslice_core::{
    Dataset, DatasetBuilder, DatasetError, LogRegModel, MetricsError, PredictionSet,
    TfidfClassifier, Vocabulary,
};

#[derive(Debug, thiserror::Error)]
pub enum IoError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: {source}", path.display())]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("{}: missing column `{column}`", path.display())]
    MissingColumn { path: PathBuf, column: String },
    #[error("{}:{line}: column `{column}`: {message}", path.display())]
    Cell {
        path: PathBuf,
        line: u64,
        column: String,
        message: String,
    },
    #[error("{}:{line}: {message}", path.display())]
    Row {
        path: PathBuf,
        line: u64,
        message: String,
    },
    #[error("{}: {source}", path.display())]
    Coverage {
        path: PathBuf,
        #[source]
        source: MetricsError,
    },
    #[error("{}:{line}: malformed model file: {message}", path.display())]
    Model {
        path: PathBuf,
        line: u64,
        message: String,
    },
}

impl IoError {
    /// True for filesystem-level failures (as opposed to validation of file
    /// contents); the CLI maps these to a distinct exit code.
    pub fn is_io(&self) -> bool {
        match self {
            IoError::Io { .. } => true,
            IoError::Csv { source, .. } => source.is_io_error(),
            _ => false,
        }
    }
}

fn io_err(path: &Path, source: std::io::Error) -> IoError {
    IoError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn csv_err(path: &Path, source: csv::Error) -> IoError {
    IoError::Csv {
        path: path.to_path_buf(),
        source,
    }
}

/// Maps the required dataset columns to the names used in a particular
/// file. Identity columns are always named by the identity itself.
#[derive(Debug, Clone, PartialEq)]
pub struct ColumnMap {
    pub id: String,
    pub text: String,
    pub target: String,
}

impl Default for ColumnMap {
    fn default() -> Self {
        ColumnMap {
            id: "id".to_string(),
            text: "comment_text".to_string(),
            target: "target".to_string(),
        }
    }
}

fn parse_unit_value(cell: &str, path: &Path, line: u64, column: &str) -> Result<f64, IoError> {
    let trimmed = cell.trim();
    let value: f64 = trimmed.parse().map_err(|_| IoError::Cell {
        path: path.to_path_buf(),
        line,
        column: column.to_string(),
        message: format!("invalid number `{trimmed}`"),
    })?;
    if !(0.0..=1.0).contains(&value) {
        return Err(IoError::Cell {
            path: path.to_path_buf(),
            line,
            column: column.to_string(),
            message: format!("value {value} is outside [0, 1]"),
        });
    }
    Ok(value)
}

/// Loads a labeled comment CSV. The header must contain the three mapped
/// columns plus one column per tracked identity; extra columns are ignored.
/// Empty identity cells read as 0.0. Row order is preserved.
pub fn load_dataset(
    path: &Path,
    columns: &ColumnMap,
    tracked_identities: &[String],
) -> Result<Dataset, IoError> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    let headers = reader.headers().map_err(|e| csv_err(path, e))?.clone();
    let find = |column: &str| {
        headers
            .iter()
            .position(|h| h == column)
            .ok_or_else(|| IoError::MissingColumn {
                path: path.to_path_buf(),
                column: column.to_string(),
            })
    };
    let id_idx = find(&columns.id)?;
    let text_idx = find(&columns.text)?;
    let target_idx = find(&columns.target)?;
    let identity_idx: Vec<usize> = tracked_identities
        .iter()
        .map(|name| find(name))
        .collect::<Result<_, _>>()?;

    let mut builder = DatasetBuilder::new(tracked_identities.to_vec());
    for result in reader.records() {
        let record = result.map_err(|e| csv_err(path, e))?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let cell = |idx: usize| -> Result<&str, IoError> {
            record.get(idx).ok_or_else(|| IoError::Row {
                path: path.to_path_buf(),
                line,
                message: format!("row has only {} fields", record.len()),
            })
        };
        let id = cell(id_idx)?;
        let text = cell(text_idx)?;
        let toxicity = parse_unit_value(cell(target_idx)?, path, line, &columns.target)?;
        let mut identities = Vec::with_capacity(tracked_identities.len());
        for (name, &idx) in tracked_identities.iter().zip(&identity_idx) {
            let raw = cell(idx)?;
            let value = if raw.trim().is_empty() {
                0.0
            } else {
                parse_unit_value(raw, path, line, name)?
            };
            identities.push((name.as_str(), value));
        }
        builder
            .push(id, text, toxicity, &identities)
            .map_err(|e| match e {
                DatasetError::ValueOutOfRange { field, value } => IoError::Cell {
                    path: path.to_path_buf(),
                    line,
                    column: field,
                    message: format!("value {value} is outside [0, 1]"),
                },
                other => IoError::Row {
                    path: path.to_path_buf(),
                    line,
                    message: other.to_string(),
                },
            })?;
    }
    Ok(builder.finish())
}

/// Writes a dataset back to CSV with the given column names; loading the
/// result with the same column map yields an identical dataset.
pub fn write_dataset_csv(
    dataset: &Dataset,
    columns: &ColumnMap,
    path: &Path,
) -> Result<(), IoError> {
    let mut writer = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    let mut header = vec![
        columns.id.as_str(),
        columns.text.as_str(),
        columns.target.as_str(),
    ];
    header.extend(dataset.tracked_identities().iter().map(|s| s.as_str()));
    writer.write_record(&header).map_err(|e| csv_err(path, e))?;
    for record in dataset {
        let mut row = vec![
            record.id().to_string(),
            record.text().to_string(),
            record.toxicity().to_string(),
        ];
        row.extend(record.identity_values().iter().map(|v| v.to_string()));
        writer.write_record(&row).map_err(|e| csv_err(path, e))?;
    }
    writer.flush().map_err(|e| io_err(path, e))
}

/// Reads a `id,score` prediction file and checks it covers `dataset`
/// exactly: missing and extra ids are both listed in the error.
pub fn import_predictions(path: &Path, dataset: &Dataset) -> Result<PredictionSet, IoError> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    let headers = reader.headers().map_err(|e| csv_err(path, e))?.clone();
    let find = |column: &str| {
        headers
            .iter()
            .position(|h| h == column)
            .ok_or_else(|| IoError::MissingColumn {
                path: path.to_path_buf(),
                column: column.to_string(),
            })
    };
    let id_idx = find("id")?;
    let score_idx = find("score")?;

    let mut predictions = PredictionSet::new();
    for result in reader.records() {
        let record = result.map_err(|e| csv_err(path, e))?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let id = record.get(id_idx).unwrap_or("");
        let raw = record.get(score_idx).unwrap_or("");
        let score = parse_unit_value(raw, path, line, "score")?;
        predictions.insert(id, score).map_err(|e| IoError::Row {
            path: path.to_path_buf(),
            line,
            message: e.to_string(),
        })?;
    }
    predictions
        .validate_coverage(dataset)
        .map_err(|source| IoError::Coverage {
            path: path.to_path_buf(),
            source,
        })?;
    Ok(predictions)
}

/// Writes predictions as `id,score`, one row per record in ascending id
/// order, scores at full precision.
pub fn write_predictions_csv(predictions: &PredictionSet, path: &Path) -> Result<(), IoError> {
    let mut writer = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    writer
        .write_record(["id", "score"])
        .map_err(|e| csv_err(path, e))?;
    for (id, score) in predictions.iter() {
        writer
            .write_record([id, &score.to_string()])
            .map_err(|e| csv_err(path, e))?;
    }
    writer.flush().map_err(|e| io_err(path, e))
}

/// Reads a one-column `id` list, preserving file order. Duplicates are an
/// error.
pub fn read_id_list(path: &Path) -> Result<Vec<String>, IoError> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    let headers = reader.headers().map_err(|e| csv_err(path, e))?.clone();
    let id_idx = headers
        .iter()
        .position(|h| h == "id")
        .ok_or_else(|| IoError::MissingColumn {
            path: path.to_path_buf(),
            column: "id".to_string(),
        })?;
    let mut ids = Vec::new();
    let mut seen = BTreeSet::new();
    for result in reader.records() {
        let record = result.map_err(|e| csv_err(path, e))?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let id = record.get(id_idx).unwrap_or("").to_string();
        if id.is_empty() {
            return Err(IoError::Row {
                path: path.to_path_buf(),
                line,
                message: "empty id".to_string(),
            });
        }
        if !seen.insert(id.clone()) {
            return Err(IoError::Row {
                path: path.to_path_buf(),
                line,
                message: format!("duplicate id `{id}`"),
            });
        }
        ids.push(id);
    }
    Ok(ids)
}

pub fn write_id_list<'a, I>(ids: I, path: &Path) -> Result<(), IoError>
where
    I: IntoIterator<Item = &'a str>,
{
    let mut writer = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    writer.write_record(["id"]).map_err(|e| csv_err(path, e))?;
    for id in ids {
        writer.write_record([id]).map_err(|e| csv_err(path, e))?;
    }
    writer.flush().map_err(|e| io_err(path, e))
}

/// Saves the trained pipeline as flat text: a header line
/// `vocab_size,bias,l2_lambda,n_docs` followed by one
/// `term,weight,doc_freq` line per feature, in feature-index order.
/// Terms are tokenizer output (alphanumeric only), so no quoting is needed.
pub fn save_model(classifier: &TfidfClassifier, path: &Path) -> Result<(), IoError> {
    let file = File::create(path).map_err(|e| io_err(path, e))?;
    let mut out = BufWriter::new(file);
    let vocab = classifier.vocabulary();
    let model = classifier.model();
    writeln!(
        out,
        "{},{},{},{}",
        vocab.len(),
        model.bias(),
        model.l2_lambda(),
        vocab.n_docs()
    )
    .map_err(|e| io_err(path, e))?;
    for (i, term) in vocab.terms().iter().enumerate() {
        writeln!(
            out,
            "{},{},{}",
            term,
            model.weights()[i],
            vocab.doc_freqs()[i]
        )
        .map_err(|e| io_err(path, e))?;
    }
    out.flush().map_err(|e| io_err(path, e))
}

pub fn load_model(path: &Path) -> Result<TfidfClassifier, IoError> {
    let malformed = |line: u64, message: String| IoError::Model {
        path: path.to_path_buf(),
        line,
        message,
    };
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    let mut lines = BufReader::new(file).lines().enumerate();

    let (_, header) = lines
        .next()
        .ok_or_else(|| malformed(1, "empty file".to_string()))?;
    let header = header.map_err(|e| io_err(path, e))?;
    let fields: Vec<&str> = header.split(',').collect();
    if fields.len() != 4 {
        return Err(malformed(
            1,
            format!(
                "expected `vocab_size,bias,l2_lambda,n_docs`, got {} fields",
                fields.len()
            ),
        ));
    }
    let parse = |i: usize, what: &str| -> Result<f64, IoError> {
        fields[i]
            .parse()
            .map_err(|_| malformed(1, format!("invalid {what} `{}`", fields[i])))
    };
    let vocab_size = fields[0]
        .parse::<usize>()
        .map_err(|_| malformed(1, format!("invalid vocab size `{}`", fields[0])))?;
    let bias = parse(1, "bias")?;
    let l2_lambda = parse(2, "l2 lambda")?;
    let n_docs = fields[3]
        .parse::<usize>()
        .map_err(|_| malformed(1, format!("invalid document count `{}`", fields[3])))?;

    let mut terms = Vec::with_capacity(vocab_size);
    let mut weights = Vec::with_capacity(vocab_size);
    let mut doc_freqs = Vec::with_capacity(vocab_size);
    for (index, line) in lines {
        let line_no = index as u64 + 1;
        let line = line.map_err(|e| io_err(path, e))?;
        if line.is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != 3 {
            return Err(malformed(
                line_no,
                format!(
                    "expected `term,weight,doc_freq`, got {} fields",
                    parts.len()
                ),
            ));
        }
        let weight: f64 = parts[1]
            .parse()
            .map_err(|_| malformed(line_no, format!("invalid weight `{}`", parts[1])))?;
        let doc_freq: usize = parts[2]
            .parse()
            .map_err(|_| malformed(line_no, format!("invalid doc_freq `{}`", parts[2])))?;
        terms.push(parts[0].to_string());
        weights.push(weight);
        doc_freqs.push(doc_freq);
    }
    if terms.len() != vocab_size {
        return Err(malformed(
            1,
            format!(
                "header promises {vocab_size} features, file has {}",
                terms.len()
            ),
        ));
    }
    let vocabulary = Vocabulary::from_parts(terms, doc_freqs, n_docs)
        .map_err(|e| malformed(2, e.to_string()))?;
    let model = LogRegModel::from_parts(weights, bias, l2_lambda);
    TfidfClassifier::from_parts(vocabulary, model).map_err(|e| malformed(1, e.to_string()))
}

/// FNV-1a (64-bit) digest of a file, rendered `fnv1a64:<hex>`. A provenance
/// marker for run metadata, not a cryptographic hash.
pub fn file_digest(path: &Path) -> Result<String, IoError> {
    let bytes = std::fs::read(path).map_err(|e| io_err(path, e))?;
    let mut hash = 0xcbf2_9ce4_8422_2325u64;
    for byte in bytes {
        hash ^= byte as u64;
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    Ok(format!("fnv1a64:{hash:016x}"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use fairslice_core::ModelConfig;

    fn write_file(dir: &Path, name: &str, contents: &str) -> PathBuf {
        let path = dir.join(name);
        std::fs::write(&path, contents).unwrap();
        path
    }

    #[test]
    fn load_small_dataset() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_file(
            dir.path(),
            "data.csv",
            "id,comment_text,target,muslim,female\n\
             a,\"hello, world\",0.0,0.1,\n\
             b,second row,0.75,,0.9\n\
             c,third,1.0,0.5,0.5\n",
        );
        let tracked = vec!["muslim".to_string(), "female".to_string()];
        let data = load_dataset(&path, &ColumnMap::default(), &tracked).unwrap();
        assert_eq!(data.len(), 3);
        assert_eq!(data.records()[0].text(), "hello, world");
        assert_eq!(data.records()[0].identity_values(), &[0.1, 0.0]);
        assert_eq!(data.records()[1].identity_values(), &[0.0, 0.9]);
        assert_eq!(data.records()[1].toxicity(), 0.75);
    }

    #[test]
    fn out_of_range_target_names_line_and_column() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_file(
            dir.path(),
            "bad.csv",
            "id,comment_text,target\na,ok,0.5\nb,bad,1.2\n",
        );
        let err = load_dataset(&path, &ColumnMap::default(), &[]).unwrap_err();
        match err {
            IoError::Cell { line, column, .. } => {
                assert_eq!(line, 3);
                assert_eq!(column, "target");
            }
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn missing_identity_column_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_file(dir.path(), "no_id.csv", "id,comment_text,target\na,x,0.1\n");
        let err = load_dataset(&path, &ColumnMap::default(), &["muslim".to_string()]).unwrap_err();
        match err {
            IoError::MissingColumn { column, .. } => assert_eq!(column, "muslim"),
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn duplicate_id_reports_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_file(
            dir.path(),
            "dup.csv",
            "id,comment_text,target\na,x,0.1\na,y,0.2\n",
        );
        let err = load_dataset(&path, &ColumnMap::default(), &[]).unwrap_err();
        match err {
            IoError::Row { line, message, .. } => {
                assert_eq!(line, 3);
                assert!(message.contains("duplicate"), "{message}");
            }
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn dataset_round_trips_through_csv() {
        let dir = tempfile::tempdir().unwrap();
        let tracked = vec!["muslim".to_string()];
        let mut builder = DatasetBuilder::new(tracked.clone());
        builder
            .push(
                "a",
                "line with \"quotes\", commas\nand a newline",
                0.123456789012345,
                &[("muslim", 0.25)],
            )
            .unwrap();
        builder.push("b", "plain", 1.0, &[]).unwrap();
        let original = builder.finish();

        let path = dir.path().join("roundtrip.csv");
        write_dataset_csv(&original, &ColumnMap::default(), &path).unwrap();
        let reloaded = load_dataset(&path, &ColumnMap::default(), &tracked).unwrap();
        assert_eq!(original, reloaded);
    }

    #[test]
    fn predictions_import_validates_coverage_and_range() {
        let dir = tempfile::tempdir().unwrap();
        let mut builder = DatasetBuilder::new(vec![]);
        builder.push("a", "x", 0.0, &[]).unwrap();
        builder.push("b", "y", 1.0, &[]).unwrap();
        let data = builder.finish();

        let ok = write_file(dir.path(), "ok.csv", "id,score\na,0.25\nb,0.75\n");
        let preds = import_predictions(&ok, &data).unwrap();
        assert_eq!(preds.get("a"), Some(0.25));

        let missing = write_file(dir.path(), "missing.csv", "id,score\na,0.25\n");
        let err = import_predictions(&missing, &data).unwrap_err();
        assert!(err.to_string().contains("`b`"), "{err}");

        let range = write_file(dir.path(), "range.csv", "id,score\na,0.25\nb,1.5\n");
        match import_predictions(&range, &data).unwrap_err() {
            IoError::Cell { line, column, .. } => {
                assert_eq!(line, 3);
                assert_eq!(column, "score");
            }
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn predictions_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let mut builder = DatasetBuilder::new(vec![]);
        builder.push("a", "x", 0.0, &[]).unwrap();
        builder.push("b", "y", 1.0, &[]).unwrap();
        let data = builder.finish();
        let preds =
            PredictionSet::from_pairs([("a", 0.123456789012345), ("b", 1.0 / 3.0)]).unwrap();
        let path = dir.path().join("preds.csv");
        write_predictions_csv(&preds, &path).unwrap();
        let reloaded = import_predictions(&path, &data).unwrap();
        assert_eq!(preds, reloaded);
    }

    #[test]
    fn id_list_round_trip_and_duplicates() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ids.csv");
        write_id_list(["b", "a", "c"], &path).unwrap();
        assert_eq!(read_id_list(&path).unwrap(), vec!["b", "a", "c"]);

        let dup = write_file(dir.path(), "dup.csv", "id\nx\nx\n");
        assert!(read_id_list(&dup).is_err());
    }

    #[test]
    fn model_round_trips_bit_exactly() {
        let corpus = [
            "awful terrible words",
            "horrid awful words",
            "lovely day words",
            "kind lovely words",
        ];
        let labels = [true, true, false, false];
        let mut config = ModelConfig::new(9);
        config.train.max_epochs = 20;
        let trained = TfidfClassifier::train(&corpus, &labels, &config).unwrap();

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.txt");
        save_model(&trained, &path).unwrap();
        let loaded = load_model(&path).unwrap();
        assert_eq!(trained, loaded);
        for text in corpus {
            assert_eq!(
                trained.score_text(text).to_bits(),
                loaded.score_text(text).to_bits()
            );
        }
    }

    #[test]
    fn model_loader_rejects_garbage() {
        let dir = tempfile::tempdir().unwrap();
        let bad_header = write_file(dir.path(), "bad1.txt", "1,2\n");
        assert!(matches!(
            load_model(&bad_header),
            Err(IoError::Model { .. })
        ));
        let short = write_file(dir.path(), "bad2.txt", "2,0.0,0.0001,4\nterm,0.5,2\n");
        assert!(matches!(load_model(&short), Err(IoError::Model { .. })));
    }

    #[test]
    fn digest_is_stable_and_content_sensitive() {
        let dir = tempfile::tempdir().unwrap();
        let a = write_file(dir.path(), "a.txt", "same contents");
        let b = write_file(dir.path(), "b.txt", "same contents");
        let c = write_file(dir.path(), "c.txt", "different");
        assert_eq!(file_digest(&a).unwrap(), file_digest(&b).unwrap());
        assert_ne!(file_digest(&a).unwrap(), file_digest(&c).unwrap());
        assert!(file_digest(&a).unwrap().starts_with("fnv1a64:"));
    }
}
