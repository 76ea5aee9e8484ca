//! Report files: per-domain JSON with full alignment evidence, and the CSV
//! tables built from them.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::align::AlignedScore;
use crate::error::{Error, Result};
use crate::tokenize::AnalyzerDescriptor;
use crate::topic::{ModelKind, TopicRepresentation};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub documents: usize,
    pub vocab_size: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_star: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub degenerate: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cluster_sizes: Option<BTreeMap<i32, usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub retained_variance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distance_correlation: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub dropped_documents: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelReport {
    pub model_kind: ModelKind,
    pub source_topic: TopicRepresentation,
    pub target_topic: TopicRepresentation,
    pub score: AlignedScore,
    pub source_diagnostics: Diagnostics,
    pub target_diagnostics: Diagnostics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainReport {
    pub schema_version: u32,
    pub domain: String,
    pub seed: u64,
    pub pairs: usize,
    pub analyzers: Vec<AnalyzerDescriptor>,
    pub models: Vec<ModelReport>,
    /// Means of the corpus-supplied per-pair scores, by metric name.
    pub baselines: BTreeMap<String, f64>,
}

impl DomainReport {
    pub fn similarity(&self, kind: ModelKind) -> Option<f64> {
        self.models.iter().find(|m| m.model_kind == kind).map(|m| m.score.similarity)
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }
}

/// Parses a report, rejecting unknown schema versions.
pub fn parse_report(raw: &str) -> Result<DomainReport> {
    let value: serde_json::Value = serde_json::from_str(raw)?;
    let version = value
        .get("schema_version")
        .and_then(serde_json::Value::as_u64)
        .ok_or_else(|| Error::Config("report has no schema_version".into()))?;
    if version != u64::from(SCHEMA_VERSION) {
        return Err(Error::SchemaVersion(version.try_into().unwrap_or(u32::MAX)));
    }
    Ok(serde_json::from_value(value)?)
}

pub fn load_report(path: impl AsRef<Path>) -> Result<DomainReport> {
    let path = path.as_ref();
    let raw = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_report(&raw)
}

/// File-name-safe form of a domain name.
pub fn domain_file_stem(domain: &str) -> String {
    domain
        .chars()
        .map(|c| if c.is_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect()
}

/// One row per domain; failed domains keep their row with empty cells.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub domain: String,
    pub values: BTreeMap<String, f64>,
    pub status: String,
}

pub fn summary_columns(baselines: &[String]) -> Vec<String> {
    ModelKind::ALL
        .iter()
        .map(|k| k.as_str().to_string())
        .chain(baselines.iter().cloned())
        .collect()
}

pub fn write_summary<W: Write>(columns: &[String], rows: &[SummaryRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["domain".to_string()];
    header.extend(columns.iter().cloned());
    header.push("status".into());
    w.write_record(&header)?;
    for r in rows {
        let mut rec = vec![r.domain.clone()];
        rec.extend(columns.iter().map(|c| r.values.get(c).map(f64::to_string).unwrap_or_default()));
        rec.push(r.status.clone());
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io("summary.csv", e))?;
    Ok(())
}

pub fn read_summary(raw: &str) -> Result<(Vec<String>, Vec<SummaryRow>)> {
    let mut r = csv::Reader::from_reader(raw.as_bytes());
    let header: Vec<String> = r.headers()?.iter().map(String::from).collect();
    if header.len() < 2 || header[0] != "domain" || header.last().map(String::as_str) != Some("status") {
        return Err(Error::Config("summary table must have `domain` first and `status` last".into()));
    }
    let columns = header[1..header.len() - 1].to_vec();
    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let mut values = BTreeMap::new();
        for (c, cell) in columns.iter().zip(rec.iter().skip(1)) {
            if !cell.is_empty() {
                let v = cell.parse::<f64>().map_err(|_| Error::Format {
                    row: i + 2,
                    message: format!("column `{c}` holds non-numeric `{cell}`"),
                })?;
                values.insert(c.clone(), v);
            }
        }
        rows.push(SummaryRow {
            domain: rec[0].to_string(),
            values,
            status: rec[rec.len() - 1].to_string(),
        });
    }
    Ok((columns, rows))
}

/// Correlation matrix as CSV; undefined cells are left empty.
pub fn write_matrix<W: Write>(names: &[String], matrix: &[Vec<Option<f64>>], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["metric".to_string()];
    header.extend(names.iter().cloned());
    w.write_record(&header)?;
    for (name, row) in names.iter().zip(matrix) {
        let mut rec = vec![name.clone()];
        rec.extend(row.iter().map(|c| c.map(|v| v.to_string()).unwrap_or_default()));
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io("correlation.csv", e))?;
    Ok(())
}
