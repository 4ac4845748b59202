//! Report rendering and export: Markdown tables for humans, CSV files for
//! machines, and a JSON metadata record sufficient to rerun the audit.
//!
//! Markdown values are rounded to three decimals; CSVs keep full precision
//! so that re-importing an exported report reproduces the in-memory values
//! exactly. Rendering is deterministic: an identical bundle produces
//! byte-identical output (timestamps live only in the metadata file).

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use fairslice_core::{BiasReport, BiasRow, MetricValue, ScoreHistogram, SplitStats};
use serde::Serialize;

#[derive(Debug, thiserror::Error)]
pub enum ReportError {
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
    #[error("bias tables take one or two reports, got {0}")]
    WrongReportCount(usize),
    #[error("reports cover different slice sets")]
    MismatchedSlices,
    #[error("duplicate name `{0}` in report bundle")]
    DuplicateName(String),
    #[error("{}:{line}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },
}

impl ReportError {
    pub fn is_io(&self) -> bool {
        match self {
            ReportError::Io { .. } => true,
            ReportError::Csv { source, .. } => source.is_io_error(),
            _ => false,
        }
    }
}

fn io_err(path: &Path, source: std::io::Error) -> ReportError {
    ReportError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn csv_err(path: &Path, source: csv::Error) -> ReportError {
    ReportError::Csv {
        path: path.to_path_buf(),
        source,
    }
}

/// `N/A` for undefined metrics, three decimals otherwise (display form).
fn fmt_metric(value: &MetricValue) -> String {
    match value.value() {
        Some(v) => format!("{v:.3}"),
        None => "N/A".to_string(),
    }
}

/// Renders one or two bias reports as a Markdown table in the audit layout:
/// one row per subgroup, the three slice metrics per report, and the
/// subgroup size as the final column.
///
/// Rows follow the first report's order (Subgroup AUC ascending). With two
/// reports the slice sets must match; sizes are taken from the first report.
pub fn render_bias_table(reports: &[(&str, &BiasReport)]) -> Result<String, ReportError> {
    if reports.is_empty() || reports.len() > 2 {
        return Err(ReportError::WrongReportCount(reports.len()));
    }
    let (first_label, first) = reports[0];
    let second = reports.get(1).copied();

    if let Some((_, other)) = second {
        let mut a: Vec<&str> = first.rows.iter().map(|r| r.identity.as_str()).collect();
        let mut b: Vec<&str> = other.rows.iter().map(|r| r.identity.as_str()).collect();
        a.sort_unstable();
        b.sort_unstable();
        if a != b {
            return Err(ReportError::MismatchedSlices);
        }
    }

    let mut header = vec!["subgroup".to_string()];
    let metric_cols = |label: &str| {
        let prefix = if reports.len() == 2 {
            format!("{label} ")
        } else {
            String::new()
        };
        vec![
            format!("{prefix}Subgroup AUC"),
            format!("{prefix}BPSN AUC"),
            format!("{prefix}BNSP AUC"),
        ]
    };
    header.extend(metric_cols(first_label));
    if let Some((label, _)) = second {
        header.extend(metric_cols(label));
    }
    header.push("subgroup size".to_string());

    let mut out = String::new();
    writeln!(out, "| {} |", header.join(" | ")).unwrap();
    writeln!(out, "|{}|", vec![" --- "; header.len()].join("|")).unwrap();
    for row in &first.rows {
        let mut cells = vec![row.identity.clone()];
        cells.push(fmt_metric(&row.subgroup_auc));
        cells.push(fmt_metric(&row.bpsn_auc));
        cells.push(fmt_metric(&row.bnsp_auc));
        if let Some((_, other)) = second {
            let twin = other
                .row(&row.identity)
                .expect("slice sets verified identical");
            cells.push(fmt_metric(&twin.subgroup_auc));
            cells.push(fmt_metric(&twin.bpsn_auc));
            cells.push(fmt_metric(&twin.bnsp_auc));
        }
        cells.push(row.subgroup_size.to_string());
        writeln!(out, "| {} |", cells.join(" | ")).unwrap();
    }
    Ok(out)
}

/// Renders split distribution statistics as a Markdown table, one column
/// per named split. Undefined subgroup cells render `N/A`; the ratio renders
/// as a rounded `N to 1`, or `undefined` when the split has no toxic
/// records.
pub fn render_stats_table(stats: &[(&str, &SplitStats)]) -> String {
    let count = |v: usize| v.to_string();
    let opt = |v: Option<usize>| v.map_or_else(|| "N/A".to_string(), |x| x.to_string());
    let ratio = |s: &SplitStats| {
        s.ratio_label()
            .map_or_else(|| "undefined".to_string(), |n| format!("{n} to 1"))
    };

    let mut out = String::new();
    let mut header = vec!["statistic".to_string()];
    header.extend(stats.iter().map(|(label, _)| label.to_string()));
    writeln!(out, "| {} |", header.join(" | ")).unwrap();
    writeln!(out, "|{}|", vec![" --- "; header.len()].join("|")).unwrap();

    type StatCell = Box<dyn Fn(&SplitStats) -> String>;
    let rows: [(&str, StatCell); 6] = [
        ("total comments", Box::new(move |s| count(s.total))),
        (
            "non-subgroup toxic comments",
            Box::new(move |s| count(s.non_subgroup_toxic)),
        ),
        (
            "non-subgroup non-toxic comments",
            Box::new(move |s| count(s.non_subgroup_non_toxic)),
        ),
        (
            "subgroup toxic comments",
            Box::new(move |s| opt(s.subgroup_toxic)),
        ),
        (
            "subgroup non-toxic comments",
            Box::new(move |s| opt(s.subgroup_non_toxic)),
        ),
        ("non-toxic to toxic ratio", Box::new(ratio)),
    ];
    for (name, cell) in rows {
        let mut cells = vec![name.to_string()];
        cells.extend(stats.iter().map(|(_, s)| cell(s)));
        writeln!(out, "| {} |", cells.join(" | ")).unwrap();
    }
    out
}

/// Run provenance written alongside every export: the resolved
/// configuration, seed, and input digests needed to reproduce the run.
/// The timestamp is the only non-deterministic field and lives only here.
#[derive(Debug, Clone, Serialize)]
pub struct RunMetadata {
    pub command: String,
    pub seed: Option<u64>,
    pub config: BTreeMap<String, String>,
    pub input_digests: BTreeMap<String, String>,
    pub created_unix_secs: u64,
}

impl RunMetadata {
    pub fn new(command: impl Into<String>) -> Self {
        RunMetadata {
            command: command.into(),
            seed: None,
            config: BTreeMap::new(),
            input_digests: BTreeMap::new(),
            created_unix_secs: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
        }
    }
}

/// A named histogram: `name` is the run/model label, `identity` the slice.
#[derive(Debug, Clone)]
pub struct HistogramEntry {
    pub name: String,
    pub identity: String,
    pub histogram: ScoreHistogram,
}

/// Everything one run produces, ready for export.
#[derive(Debug, Clone)]
pub struct ReportBundle {
    bias_reports: Vec<(String, BiasReport)>,
    stats: Vec<(String, SplitStats)>,
    histograms: Vec<HistogramEntry>,
    metadata: RunMetadata,
}

impl ReportBundle {
    pub fn new(metadata: RunMetadata) -> Self {
        ReportBundle {
            bias_reports: Vec::new(),
            stats: Vec::new(),
            histograms: Vec::new(),
            metadata,
        }
    }

    pub fn add_bias_report(
        &mut self,
        name: impl Into<String>,
        report: BiasReport,
    ) -> Result<(), ReportError> {
        let name = name.into();
        if self.bias_reports.iter().any(|(n, _)| *n == name) {
            return Err(ReportError::DuplicateName(name));
        }
        self.bias_reports.push((name, report));
        Ok(())
    }

    pub fn add_stats(
        &mut self,
        name: impl Into<String>,
        stats: SplitStats,
    ) -> Result<(), ReportError> {
        let name = name.into();
        if self.stats.iter().any(|(n, _)| *n == name) {
            return Err(ReportError::DuplicateName(name));
        }
        self.stats.push((name, stats));
        Ok(())
    }

    pub fn add_histogram(
        &mut self,
        name: impl Into<String>,
        identity: impl Into<String>,
        histogram: ScoreHistogram,
    ) -> Result<(), ReportError> {
        let name = name.into();
        let identity = identity.into();
        if self
            .histograms
            .iter()
            .any(|h| h.name == name && h.identity == identity)
        {
            return Err(ReportError::DuplicateName(format!("{name}_{identity}")));
        }
        self.histograms.push(HistogramEntry {
            name,
            identity,
            histogram,
        });
        Ok(())
    }

    pub fn bias_reports(&self) -> &[(String, BiasReport)] {
        &self.bias_reports
    }

    pub fn stats(&self) -> &[(String, SplitStats)] {
        &self.stats
    }

    pub fn histograms(&self) -> &[HistogramEntry] {
        &self.histograms
    }

    pub fn metadata(&self) -> &RunMetadata {
        &self.metadata
    }
}

const BIAS_HEADER: [&str; 11] = [
    "slice",
    "subgroup_auc",
    "subgroup_n_pos",
    "subgroup_n_neg",
    "bpsn_auc",
    "bpsn_n_pos",
    "bpsn_n_neg",
    "bnsp_auc",
    "bnsp_n_pos",
    "bnsp_n_neg",
    "subgroup_size",
];
const OVERALL_SLICE: &str = "__overall__";

const STATS_HEADER: [&str; 6] = [
    "total",
    "non_subgroup_toxic",
    "non_subgroup_non_toxic",
    "subgroup_toxic",
    "subgroup_non_toxic",
    "nontoxic_to_toxic_ratio",
];

/// Full-precision form: `NA` for undefined, shortest round-trip otherwise.
fn csv_metric(value: &MetricValue) -> [String; 3] {
    [
        value
            .value()
            .map_or_else(|| "NA".to_string(), |v| v.to_string()),
        value.n_pos().to_string(),
        value.n_neg().to_string(),
    ]
}

fn write_bias_report_csv(report: &BiasReport, path: &Path) -> Result<(), ReportError> {
    let mut writer = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    writer
        .write_record(BIAS_HEADER)
        .map_err(|e| csv_err(path, e))?;
    let [v, p, n] = csv_metric(&report.overall);
    let overall_row = [OVERALL_SLICE, &v, &p, &n, "", "", "", "", "", "", ""];
    writer
        .write_record(overall_row)
        .map_err(|e| csv_err(path, e))?;
    for row in &report.rows {
        let mut record = vec![row.identity.clone()];
        record.extend(csv_metric(&row.subgroup_auc));
        record.extend(csv_metric(&row.bpsn_auc));
        record.extend(csv_metric(&row.bnsp_auc));
        record.push(row.subgroup_size.to_string());
        writer.write_record(&record).map_err(|e| csv_err(path, e))?;
    }
    writer.flush().map_err(|e| io_err(path, e))
}

fn parse_metric(path: &Path, line: u64, cells: &[&str]) -> Result<MetricValue, ReportError> {
    let parse_err = |message: String| ReportError::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let value = match cells[0] {
        "NA" => None,
        raw => Some(
            raw.parse::<f64>()
                .map_err(|_| parse_err(format!("invalid metric value `{raw}`")))?,
        ),
    };
    let n_pos: usize = cells[1]
        .parse()
        .map_err(|_| parse_err(format!("invalid count `{}`", cells[1])))?;
    let n_neg: usize = cells[2]
        .parse()
        .map_err(|_| parse_err(format!("invalid count `{}`", cells[2])))?;
    MetricValue::from_parts(value, n_pos, n_neg)
        .ok_or_else(|| parse_err("metric value inconsistent with counts".to_string()))
}

/// Re-imports a bias-report CSV written by [`export_csv`], reproducing the
/// in-memory report exactly.
pub fn read_bias_report_csv(path: &Path) -> Result<BiasReport, ReportError> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    let headers = reader.headers().map_err(|e| csv_err(path, e))?.clone();
    if headers.iter().ne(BIAS_HEADER) {
        return Err(ReportError::Parse {
            path: path.to_path_buf(),
            line: 1,
            message: "unexpected header".to_string(),
        });
    }
    let mut overall: Option<MetricValue> = None;
    let mut rows: Vec<BiasRow> = Vec::new();
    for result in reader.records() {
        let record = result.map_err(|e| csv_err(path, e))?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let cells: Vec<&str> = record.iter().collect();
        if cells.len() != BIAS_HEADER.len() {
            return Err(ReportError::Parse {
                path: path.to_path_buf(),
                line,
                message: format!("expected {} cells, got {}", BIAS_HEADER.len(), cells.len()),
            });
        }
        if cells[0] == OVERALL_SLICE {
            overall = Some(parse_metric(path, line, &cells[1..4])?);
            continue;
        }
        let subgroup_size: usize = cells[10].parse().map_err(|_| ReportError::Parse {
            path: path.to_path_buf(),
            line,
            message: format!("invalid subgroup size `{}`", cells[10]),
        })?;
        rows.push(BiasRow {
            identity: cells[0].to_string(),
            subgroup_auc: parse_metric(path, line, &cells[1..4])?,
            bpsn_auc: parse_metric(path, line, &cells[4..7])?,
            bnsp_auc: parse_metric(path, line, &cells[7..10])?,
            subgroup_size,
        });
    }
    let overall = overall.ok_or_else(|| ReportError::Parse {
        path: path.to_path_buf(),
        line: 2,
        message: format!("missing `{OVERALL_SLICE}` row"),
    })?;
    Ok(BiasReport::from_parts(overall, rows))
}

fn write_split_stats_csv(stats: &SplitStats, path: &Path) -> Result<(), ReportError> {
    let mut writer = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    writer
        .write_record(STATS_HEADER)
        .map_err(|e| csv_err(path, e))?;
    let opt_count = |v: Option<usize>| v.map_or_else(|| "NA".to_string(), |x| x.to_string());
    let row = [
        stats.total.to_string(),
        stats.non_subgroup_toxic.to_string(),
        stats.non_subgroup_non_toxic.to_string(),
        opt_count(stats.subgroup_toxic),
        opt_count(stats.subgroup_non_toxic),
        stats
            .nontoxic_to_toxic_ratio
            .map_or_else(|| "NA".to_string(), |r| r.to_string()),
    ];
    writer.write_record(row).map_err(|e| csv_err(path, e))?;
    writer.flush().map_err(|e| io_err(path, e))
}

/// Re-imports a stats CSV written by [`export_csv`].
pub fn read_split_stats_csv(path: &Path) -> Result<SplitStats, ReportError> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    let headers = reader.headers().map_err(|e| csv_err(path, e))?.clone();
    if headers.iter().ne(STATS_HEADER) {
        return Err(ReportError::Parse {
            path: path.to_path_buf(),
            line: 1,
            message: "unexpected header".to_string(),
        });
    }
    let record = reader
        .records()
        .next()
        .ok_or_else(|| ReportError::Parse {
            path: path.to_path_buf(),
            line: 2,
            message: "missing stats row".to_string(),
        })?
        .map_err(|e| csv_err(path, e))?;
    let line = record.position().map(|p| p.line()).unwrap_or(2);
    let parse_err = |message: String| ReportError::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let cells: Vec<&str> = record.iter().collect();
    if cells.len() != STATS_HEADER.len() {
        return Err(parse_err(format!("expected {} cells", STATS_HEADER.len())));
    }
    let count = |raw: &str| -> Result<usize, ReportError> {
        raw.parse()
            .map_err(|_| parse_err(format!("invalid count `{raw}`")))
    };
    let opt_count = |raw: &str| -> Result<Option<usize>, ReportError> {
        if raw == "NA" {
            Ok(None)
        } else {
            count(raw).map(Some)
        }
    };
    Ok(SplitStats {
        total: count(cells[0])?,
        non_subgroup_toxic: count(cells[1])?,
        non_subgroup_non_toxic: count(cells[2])?,
        subgroup_toxic: opt_count(cells[3])?,
        subgroup_non_toxic: opt_count(cells[4])?,
        nontoxic_to_toxic_ratio: if cells[5] == "NA" {
            None
        } else {
            Some(
                cells[5]
                    .parse()
                    .map_err(|_| parse_err(format!("invalid ratio `{}`", cells[5])))?,
            )
        },
    })
}

fn write_histogram_csv(histogram: &ScoreHistogram, path: &Path) -> Result<(), ReportError> {
    let mut writer = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    writer
        .write_record(["bin_lo", "bin_hi", "toxic_count", "non_toxic_count"])
        .map_err(|e| csv_err(path, e))?;
    for i in 0..histogram.n_bins() {
        let (lo, hi) = histogram.bin_bounds(i);
        writer
            .write_record([
                lo.to_string(),
                hi.to_string(),
                histogram.toxic[i].to_string(),
                histogram.non_toxic[i].to_string(),
            ])
            .map_err(|e| csv_err(path, e))?;
    }
    writer.flush().map_err(|e| io_err(path, e))
}

/// Writes one CSV per report, stats table, and histogram, plus
/// `run_metadata.json`. Returns the written paths in write order.
pub fn export_csv(bundle: &ReportBundle, dir: &Path) -> Result<Vec<PathBuf>, ReportError> {
    std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let mut written = Vec::new();
    for (name, report) in &bundle.bias_reports {
        let path = dir.join(format!("bias_{name}.csv"));
        write_bias_report_csv(report, &path)?;
        written.push(path);
    }
    for (name, stats) in &bundle.stats {
        let path = dir.join(format!("stats_{name}.csv"));
        write_split_stats_csv(stats, &path)?;
        written.push(path);
    }
    for entry in &bundle.histograms {
        let path = dir.join(format!("hist_{}_{}.csv", entry.name, entry.identity));
        write_histogram_csv(&entry.histogram, &path)?;
        written.push(path);
    }
    let meta_path = dir.join("run_metadata.json");
    let json =
        serde_json::to_vec_pretty(&bundle.metadata).expect("metadata is plain serializable data");
    std::fs::write(&meta_path, json).map_err(|e| io_err(&meta_path, e))?;
    written.push(meta_path);
    Ok(written)
}

/// Assembles the human-readable Markdown report: split statistics, overall
/// AUCs, the bias table (side-by-side when the bundle holds exactly two
/// reports), and the histogram file listing. Deterministic.
pub fn write_markdown_report(bundle: &ReportBundle, path: &Path) -> Result<(), ReportError> {
    let mut out = String::new();
    writeln!(out, "# fairslice report").unwrap();
    writeln!(out).unwrap();
    writeln!(out, "Command: `{}`", bundle.metadata.command).unwrap();
    writeln!(out).unwrap();

    if !bundle.stats.is_empty() {
        writeln!(out, "## Training split distribution").unwrap();
        writeln!(out).unwrap();
        let labeled: Vec<(&str, &SplitStats)> = bundle
            .stats
            .iter()
            .map(|(name, s)| (name.as_str(), s))
            .collect();
        out.push_str(&render_stats_table(&labeled));
        writeln!(out).unwrap();
    }

    if !bundle.bias_reports.is_empty() {
        writeln!(out, "## Bias metrics").unwrap();
        writeln!(out).unwrap();
        for (name, report) in &bundle.bias_reports {
            writeln!(out, "- {name} overall AUC: {}", fmt_metric(&report.overall)).unwrap();
        }
        writeln!(out).unwrap();
        if bundle.bias_reports.len() == 2 {
            let labeled: Vec<(&str, &BiasReport)> = bundle
                .bias_reports
                .iter()
                .map(|(name, r)| (name.as_str(), r))
                .collect();
            out.push_str(&render_bias_table(&labeled)?);
            writeln!(out).unwrap();
        } else {
            for (name, report) in &bundle.bias_reports {
                writeln!(out, "### {name}").unwrap();
                writeln!(out).unwrap();
                out.push_str(&render_bias_table(&[(name.as_str(), report)])?);
                writeln!(out).unwrap();
            }
        }
    }

    if !bundle.histograms.is_empty() {
        writeln!(out, "## Score distribution histograms").unwrap();
        writeln!(out).unwrap();
        for entry in &bundle.histograms {
            writeln!(out, "- `hist_{}_{}.csv`", entry.name, entry.identity).unwrap();
        }
    }

    std::fs::write(path, out).map_err(|e| io_err(path, e))
}
