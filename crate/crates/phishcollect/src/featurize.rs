//! Feature vectors from archived samples, intelligence providers, and the
//! feature matrix file formats.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use phishcollect_core::analyze::FeatureMatrix;
use phishcollect_core::extract::{discover, document_base};
use phishcollect_core::features::{feature_vector, FeatureName, PageContent, LABEL_COLUMN};
use phishcollect_core::manifest::{ResourceKind, INLINE_ORIGIN};
use phishcollect_core::{FeatureVector, IntelligenceReport, Url, UrlRecord};

use crate::fetch::decode_html;
use crate::store::{self, SampleDir, StoreError};

#[derive(Debug, thiserror::Error)]
pub enum FeatureError {
    #[error("sample has no archived landing page")]
    MissingHtml,
    #[error("manifest final URL `{0}` is not usable")]
    BadFinalUrl(String),
    #[error(transparent)]
    Store(#[from] StoreError),
}

/// Source of third-party facts about a sample's domain.
pub trait IntelligenceProvider: Sync {
    fn report(&self, record: &UrlRecord) -> IntelligenceReport;
}

/// Knows nothing; every intelligence-based feature comes out `0`.
#[derive(Debug, Clone, Copy, Default)]
pub struct OfflineProvider;

impl IntelligenceProvider for OfflineProvider {
    fn report(&self, _record: &UrlRecord) -> IntelligenceReport {
        IntelligenceReport::default()
    }
}

/// Reports looked up by sample id first, then by lowercased host, from a
/// JSON object of `IntelligenceReport` objects.
#[derive(Debug, Clone, Default)]
pub struct FileProvider {
    reports: HashMap<String, IntelligenceReport>,
}

impl FileProvider {
    pub fn from_json(json: &str) -> serde_json::Result<Self> {
        let raw: HashMap<String, IntelligenceReport> = serde_json::from_str(json)?;
        Ok(FileProvider { reports: raw })
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        Ok(Self::from_json(&fs::read_to_string(path)?)?)
    }
}

impl IntelligenceProvider for FileProvider {
    fn report(&self, record: &UrlRecord) -> IntelligenceReport {
        self.reports
            .get(record.sample_id.as_str())
            .or_else(|| self.reports.get(&record.url.host().to_ascii_lowercase()))
            .cloned()
            .unwrap_or_default()
    }
}

/// Computes the vector of an archived sample from its manifest, HTML and
/// external scripts.
pub fn extract_feature_vector(dir: &SampleDir, report: &IntelligenceReport) -> Result<FeatureVector, FeatureError> {
    let manifest = store::read_manifest(dir)?;
    let html_ref = manifest.html().ok_or(FeatureError::MissingHtml)?;
    let html_path = html_ref.local_path.as_deref().ok_or(FeatureError::MissingHtml)?;
    let bytes = fs::read(dir.resolve(html_path)).map_err(|source| StoreError::IoFailure {
        path: dir.resolve(html_path),
        source,
    })?;
    let html = decode_html(&bytes, None);
    let final_url = Url::parse(&manifest.final_url).map_err(|_| FeatureError::BadFinalUrl(manifest.final_url.clone()))?;
    let base = document_base(&html, &final_url);
    let resources = discover(&html, &base);

    let mut external_scripts = Vec::new();
    for r in manifest.ok_resources(ResourceKind::Javascript) {
        if r.origin_url == INLINE_ORIGIN {
            continue;
        }
        if let Some(p) = &r.local_path {
            if let Ok(b) = fs::read(dir.resolve(p)) {
                external_scripts.push(String::from_utf8_lossy(&b).into_owned());
            }
        }
    }
    let page = PageContent {
        html: &html,
        final_url: &final_url,
        resources: &resources,
        external_scripts: &external_scripts,
        redirect_hops: html_ref.redirect_hops.unwrap_or(0),
    };
    Ok(feature_vector(&manifest.record.url, &page, report, manifest.record.label))
}

/// Header line of the feature matrix CSV.
pub fn matrix_header() -> String {
    let mut out: Vec<&str> = FeatureName::ALL.iter().map(|f| f.as_str()).collect();
    out.push(LABEL_COLUMN);
    out.join(",")
}

/// Feature matrix CSV: the 30 canonical columns plus `Result`.
pub fn matrix_csv(vectors: &[FeatureVector]) -> String {
    let mut out = matrix_header();
    out.push('\n');
    for v in vectors {
        let row: Vec<String> = v.to_row().iter().map(|x| x.to_string()).collect();
        writeln!(out, "{}", row.join(",")).unwrap();
    }
    out
}

#[derive(Debug, thiserror::Error)]
pub enum MatrixError {
    #[error("no `{LABEL_COLUMN}` label column")]
    MissingLabel,
    #[error("no feature columns recognised")]
    NoFeatures,
    #[error("line {line}: {message}")]
    Row { line: usize, message: String },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Analyze(#[from] phishcollect_core::AnalyzeError),
}

fn parse_value(s: &str, line: usize) -> Result<i8, MatrixError> {
    let t = s.trim().trim_matches(['"', '\'']);
    t.strip_prefix('+')
        .unwrap_or(t)
        .parse::<i8>()
        .map_err(|_| MatrixError::Row {
            line,
            message: format!("`{s}` is not an integer"),
        })
}

struct Columns {
    features: Vec<(usize, String)>,
    label: usize,
}

fn pick_columns(headers: &[String]) -> Result<Columns, MatrixError> {
    let label = headers
        .iter()
        .position(|h| h.trim().eq_ignore_ascii_case(LABEL_COLUMN))
        .ok_or(MatrixError::MissingLabel)?;
    let features: Vec<(usize, String)> = headers
        .iter()
        .enumerate()
        .filter_map(|(i, h)| FeatureName::from_column(h).map(|f| (i, f.as_str().to_string())))
        .collect();
    if features.is_empty() {
        return Err(MatrixError::NoFeatures);
    }
    Ok(Columns { features, label })
}

fn build(columns: &Columns, rows: Vec<(usize, Vec<String>)>) -> Result<FeatureMatrix, MatrixError> {
    let mut values = Vec::with_capacity(rows.len());
    let mut labels = Vec::with_capacity(rows.len());
    for (line, row) in rows {
        let get = |i: usize| {
            row.get(i).ok_or_else(|| MatrixError::Row {
                line,
                message: format!("missing column {}", i + 1),
            })
        };
        let mut v = Vec::with_capacity(columns.features.len());
        for (i, _) in &columns.features {
            v.push(parse_value(get(*i)?, line)?);
        }
        labels.push(parse_value(get(columns.label)?, line)?);
        values.push(v);
    }
    let names = columns.features.iter().map(|(_, n)| n.clone()).collect();
    Ok(FeatureMatrix::new(names, values, labels)?)
}

/// Reads a feature matrix from CSV (this tool's output or the UCI tabular
/// export) or ARFF. Columns are matched by feature name; unknown columns
/// such as a leading index are ignored.
pub fn parse_matrix(text: &str) -> Result<FeatureMatrix, MatrixError> {
    let first = text.trim_start_matches('\u{feff}').trim_start();
    if first.starts_with('@') || first.starts_with('%') {
        parse_arff(text)
    } else {
        parse_csv(text)
    }
}

pub fn read_matrix(path: &Path) -> anyhow::Result<FeatureMatrix> {
    let text = fs::read_to_string(path)?;
    parse_matrix(&text).map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))
}

fn parse_csv(text: &str) -> Result<FeatureMatrix, MatrixError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.trim_start_matches('\u{feff}').as_bytes());
    let headers: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    let columns = pick_columns(&headers)?;
    let mut rows = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec?;
        if rec.iter().all(|f| f.is_empty()) {
            continue;
        }
        rows.push((i + 2, rec.iter().map(str::to_string).collect()));
    }
    build(&columns, rows)
}

fn parse_arff(text: &str) -> Result<FeatureMatrix, MatrixError> {
    let mut headers = Vec::new();
    let mut rows = Vec::new();
    let mut in_data = false;
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('%') {
            continue;
        }
        let lower = line.to_ascii_lowercase();
        if !in_data {
            if lower.starts_with("@attribute") {
                let rest = line["@attribute".len()..].trim_start();
                let name = match rest.strip_prefix(['\'', '"']) {
                    Some(quoted) => quoted.split(['\'', '"']).next().unwrap_or(""),
                    None => rest.split_whitespace().next().unwrap_or(""),
                };
                headers.push(name.to_string());
            } else if lower.starts_with("@data") {
                in_data = true;
            }
            continue;
        }
        rows.push((i + 1, line.split(',').map(|s| s.trim().to_string()).collect()));
    }
    let columns = pick_columns(&headers)?;
    build(&columns, rows)
}
