//! Input feeds: CSV files, directories of saved PhishTank detail pages, and
//! PhishTank id ranges fetched live.

use std::collections::HashSet;
use std::fs;
use std::ops::RangeInclusive;
use std::path::Path;

use phishcollect_core::ingest::{parse_phishtank_detail, IngestError};
use phishcollect_core::{Label, SampleId, Source, Url, UrlRecord};

use crate::fetch::Fetcher;

pub const PHISHTANK_DETAIL_BASE: &str = "https://phishtank.org/phish_detail.php?phish_id=";

/// Records read from one input plus the number of rows that were dropped.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Feed {
    pub records: Vec<UrlRecord>,
    pub skipped: usize,
}

fn column(headers: &csv::StringRecord, name: &str) -> Option<usize> {
    headers
        .iter()
        .position(|h| h.trim().trim_start_matches('\u{feff}').eq_ignore_ascii_case(name))
}

/// Parses a CSV feed with a header row. `url` is required; `id` and `label`
/// are optional, defaulting to the 1-based row ordinal and `default_label`.
/// Rows with an unusable URL, id or label, or a repeated id, are skipped.
pub fn load_csv_feed(csv_bytes: &[u8], default_label: Label) -> Result<Feed, IngestError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(csv_bytes);
    let headers = reader.headers().map_err(|_| IngestError::MissingUrlColumn)?.clone();
    let url_col = column(&headers, "url").ok_or(IngestError::MissingUrlColumn)?;
    let id_col = column(&headers, "id");
    let label_col = column(&headers, "label");

    let mut feed = Feed::default();
    let mut ids = HashSet::new();
    for (i, row) in reader.records().enumerate() {
        let parsed = row.ok().and_then(|row| {
            let url = Url::parse(row.get(url_col)?).ok()?;
            let sample_id = match id_col.and_then(|c| row.get(c)).filter(|s| !s.is_empty()) {
                Some(id) => SampleId::new(id).ok()?,
                None => SampleId::from_ordinal(i + 1),
            };
            let label = match label_col.and_then(|c| row.get(c)).filter(|s| !s.is_empty()) {
                Some(l) => l.parse().ok()?,
                None => default_label,
            };
            Some(UrlRecord {
                sample_id,
                url,
                label,
                source: Source::CsvFeed,
            })
        });
        match parsed {
            Some(r) if ids.insert(r.sample_id.clone()) => feed.records.push(r),
            _ => {
                log::warn!("skipping feed row {}", i + 1);
                feed.skipped += 1;
            }
        }
    }
    if feed.records.is_empty() {
        return Err(IngestError::EmptyFeed);
    }
    Ok(feed)
}

/// Reads every `<phish_id>.html` in `dir`, in file name order.
pub fn load_phishtank_dir(dir: &Path) -> anyhow::Result<Feed> {
    let mut files: Vec<_> = fs::read_dir(dir)?
        .filter_map(Result::ok)
        .map(|e| e.path())
        .filter(|p| p.extension().is_some_and(|e| e.eq_ignore_ascii_case("html") || e.eq_ignore_ascii_case("htm")))
        .collect();
    files.sort();
    let mut feed = Feed::default();
    for path in files {
        let id = path.file_stem().unwrap_or_default().to_string_lossy().into_owned();
        let bytes = fs::read(&path)?;
        let html = crate::fetch::decode_html(&bytes, None);
        match parse_phishtank_detail(&html, &id) {
            Ok(r) => feed.records.push(r),
            Err(e) => {
                log::warn!("{}: {e}", path.display());
                feed.skipped += 1;
            }
        }
    }
    if feed.records.is_empty() {
        return Err(IngestError::EmptyFeed.into());
    }
    Ok(feed)
}

/// Parses `first-last` (inclusive) or a single id.
pub fn parse_id_range(s: &str) -> Option<RangeInclusive<u64>> {
    let (a, b) = s.split_once('-').unwrap_or((s, s));
    let (a, b) = (a.trim().parse().ok()?, b.trim().parse().ok()?);
    (a <= b).then_some(a..=b)
}

/// Fetches and parses the detail page of every id in `ids`.
pub fn load_phishtank_range(fetcher: &Fetcher, base: &str, ids: RangeInclusive<u64>) -> Result<Feed, IngestError> {
    let mut feed = Feed::default();
    for id in ids {
        let page = Url::parse(&format!("{base}{id}"))
            .map_err(|reason| IngestError::InvalidUrl {
                text: format!("{base}{id}"),
                reason,
            })
            .and_then(|url| fetcher.fetch_page(&url).map_err(|e| {
                log::warn!("detail page {id}: {e}");
                IngestError::MissingUrlElement
            }))
            .and_then(|r| parse_phishtank_detail(&r.text(), &id.to_string()));
        match page {
            Ok(r) => feed.records.push(r),
            Err(e) => {
                log::warn!("phish id {id}: {e}");
                feed.skipped += 1;
            }
        }
    }
    if feed.records.is_empty() {
        return Err(IngestError::EmptyFeed);
    }
    Ok(feed)
}
