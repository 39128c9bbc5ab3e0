//! Labeled input URLs and the pure parts of ingestion.

use alloc::collections::BTreeSet;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::html::{element_text, Tag};
use crate::url::{Url, UrlError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Phishing,
    Legitimate,
}

impl Label {
    /// `-1` for phishing, `+1` for legitimate.
    pub fn as_i8(self) -> i8 {
        match self {
            Label::Phishing => -1,
            Label::Legitimate => 1,
        }
    }

    pub fn from_i8(v: i8) -> Option<Label> {
        match v {
            -1 => Some(Label::Phishing),
            1 => Some(Label::Legitimate),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Phishing => "phishing",
            Label::Legitimate => "legitimate",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = IngestError;

    /// Accepts the names (any case) and the UCI encodings `-1`/`1`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "phishing" | "phish" | "-1" => Ok(Label::Phishing),
            "legitimate" | "legit" | "benign" | "1" | "+1" => Ok(Label::Legitimate),
            other => Err(IngestError::InvalidLabel(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    PhishtankDetail,
    CsvFeed,
}

/// Sample identifier, also used verbatim as the sample directory name.
/// Non-empty, `[A-Za-z0-9_-]` only.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct SampleId(String);

impl SampleId {
    pub fn new(id: impl Into<String>) -> Result<Self, IngestError> {
        let id = id.into();
        if id.is_empty() || !id.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'_' || b == b'-') {
            return Err(IngestError::InvalidSampleId(id));
        }
        Ok(SampleId(id))
    }

    /// Zero-padded row ordinal used when a feed has no `id` column.
    pub fn from_ordinal(n: usize) -> Self {
        SampleId(alloc::format!("{n:06}"))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for SampleId {
    type Error = IngestError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        SampleId::new(s)
    }
}

impl From<SampleId> for String {
    fn from(id: SampleId) -> String {
        id.0
    }
}

impl fmt::Display for SampleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UrlRecord {
    pub sample_id: SampleId,
    pub url: Url,
    pub label: Label,
    pub source: Source,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum IngestError {
    #[error("detail page has no URL element (layout changed or invalid id)")]
    MissingUrlElement,
    #[error("`{text}` is not an absolute http(s) URL: {reason}")]
    InvalidUrl { text: String, reason: UrlError },
    #[error("sample id `{0}` must be non-empty and use only [A-Za-z0-9_-]")]
    InvalidSampleId(String),
    #[error("unknown class label `{0}`")]
    InvalidLabel(String),
    #[error("feed has no `url` column")]
    MissingUrlColumn,
    #[error("feed contains no valid rows")]
    EmptyFeed,
    #[error("duplicate sample id `{0}`")]
    DuplicateSampleId(String),
}

/// Whether `tag` is the detail page's URL container: the
/// `word-wrap:break-word` span PhishTank wraps the submitted URL in, or
/// any element with id/class `url`.
fn is_url_container(tag: &Tag<'_>) -> bool {
    if tag.is("span") {
        if let Some(style) = tag.attr("style") {
            let compact: String = style.chars().filter(|c| !c.is_whitespace()).collect();
            if compact.to_ascii_lowercase().contains("word-wrap:break-word") {
                return true;
            }
        }
    }
    let named_url = |v: Option<alloc::borrow::Cow<'_, str>>| v.is_some_and(|v| v.split_ascii_whitespace().any(|w| w == "url"));
    named_url(tag.attr("id")) || named_url(tag.attr("class"))
}

/// Extracts the submitted URL from a saved PhishTank detail page.
pub fn parse_phishtank_detail(page_html: &str, phish_id: &str) -> Result<UrlRecord, IngestError> {
    let sample_id = SampleId::new(phish_id)?;
    let text = element_text(page_html, is_url_container).ok_or(IngestError::MissingUrlElement)?;
    let text = text.trim();
    if text.is_empty() {
        return Err(IngestError::MissingUrlElement);
    }
    let url = Url::parse(text).map_err(|reason| IngestError::InvalidUrl {
        text: text.to_string(),
        reason,
    })?;
    Ok(UrlRecord {
        sample_id,
        url,
        label: Label::Phishing,
        source: Source::PhishtankDetail,
    })
}

/// Drops records whose normalized URL was already seen; first occurrence
/// wins and relative order is preserved.
pub fn dedupe(records: impl IntoIterator<Item = UrlRecord>) -> Vec<UrlRecord> {
    let mut seen = BTreeSet::new();
    records
        .into_iter()
        .filter(|r| seen.insert(r.url.normalized_key()))
        .collect()
}
