//! The per-sample archiving pipeline and the worker pool running it.

use std::collections::{BTreeMap, HashMap, HashSet, VecDeque};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::thread;
use std::time::Instant;

use chrono::{SecondsFormat, Utc};
use phishcollect_core::extract::{discover, document_base, DiscoveredResources};
use phishcollect_core::ingest::dedupe;
use phishcollect_core::manifest::{ResourceKind, ResourceRef, SampleError, SampleManifest, INLINE_ORIGIN};
use phishcollect_core::{Url, UrlRecord};
use serde::{Deserialize, Serialize};

use crate::fetch::{FetchError, FetchResult, Fetcher};
use crate::snapshot::{CaptureTarget, ProviderPool, ViewportSpec};
use crate::store::{self, SampleDir, StoreError};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OverwritePolicy {
    /// Leave existing samples alone without touching the network.
    #[default]
    Skip,
    Overwrite,
    /// Count an existing sample as failed.
    Fail,
}

impl FromStr for OverwritePolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "skip" => Ok(OverwritePolicy::Skip),
            "overwrite" => Ok(OverwritePolicy::Overwrite),
            "fail" => Ok(OverwritePolicy::Fail),
            _ => Err(format!("unknown overwrite policy `{s}` (skip, overwrite, fail)")),
        }
    }
}

/// What the screenshot is taken of.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum CaptureSource {
    /// The archived HTML file.
    #[default]
    LocalFile,
    /// The live final URL.
    LiveUrl,
}

pub struct Collector<'a> {
    pub fetcher: &'a Fetcher,
    /// `None` disables screenshots.
    pub screenshots: Option<&'a ProviderPool>,
    pub viewport: ViewportSpec,
    pub capture: CaptureSource,
    pub root: PathBuf,
    pub workers: usize,
    pub overwrite: OverwritePolicy,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SampleOutcome {
    Archived { resource_failures: Vec<String> },
    /// Landing page or storage failure; the value is the error class.
    Failed(String),
    /// Already archived and left untouched.
    Present,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub attempted: u64,
    pub succeeded: u64,
    pub failed: u64,
    /// Samples already archived and skipped.
    pub already_present: u64,
    /// Input rows dropped during ingestion.
    pub input_skipped: u64,
    /// Records dropped as duplicate URLs.
    pub duplicates: u64,
    /// Sample failures by error class.
    pub errors: BTreeMap<String, u64>,
    /// Sub-resource failures by error class.
    pub resource_errors: BTreeMap<String, u64>,
    pub started_at: String,
    pub finished_at: String,
    pub elapsed_secs: f64,
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_TOTAL_FAILURE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_PARTIAL_FAILURE: i32 = 3;

impl RunSummary {
    /// 1 when nothing is archived, 3 when the failed share of attempted
    /// samples exceeds `threshold`, 0 otherwise.
    pub fn exit_code(&self, threshold: f64) -> i32 {
        if self.attempted > 0 && self.succeeded + self.already_present == 0 {
            EXIT_TOTAL_FAILURE
        } else if self.attempted > 0 && self.failed as f64 / self.attempted as f64 > threshold {
            EXIT_PARTIAL_FAILURE
        } else {
            EXIT_OK
        }
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        writeln!(
            out,
            "attempted {}, succeeded {}, failed {}, already present {}, duplicates {}, input rows skipped {}",
            self.attempted, self.succeeded, self.failed, self.already_present, self.duplicates, self.input_skipped
        )
        .unwrap();
        for (kind, n) in &self.errors {
            writeln!(out, "  {kind}: {n}").unwrap();
        }
        if !self.resource_errors.is_empty() {
            writeln!(out, "resource failures:").unwrap();
            for (kind, n) in &self.resource_errors {
                writeln!(out, "  {kind}: {n}").unwrap();
            }
        }
        out
    }
}

/// `<parent>/<root name>.summary.json`, beside the archive root.
pub fn summary_path(root: &Path) -> PathBuf {
    let name = root
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "archive".into());
    root.with_file_name(format!("{name}.summary.json"))
}

pub fn now_utc() -> String {
    Utc::now().to_rfc3339_opts(SecondsFormat::Secs, true)
}

fn suggested_name(url: &Url) -> &str {
    url.last_segment().unwrap_or("")
}

impl Collector<'_> {
    /// Archives every record on the worker pool. Records repeating an
    /// earlier normalized URL or sample id are dropped first; the rest are
    /// dispatched round-robin across hosts.
    pub fn run(&self, records: Vec<UrlRecord>) -> RunSummary {
        let started = Instant::now();
        let started_at = now_utc();
        let total = records.len();
        let mut ids = HashSet::new();
        let records: Vec<_> = dedupe(records).into_iter().filter(|r| ids.insert(r.sample_id.clone())).collect();
        let records = interleave_hosts(records);
        let mut summary = RunSummary {
            duplicates: (total - records.len()) as u64,
            started_at,
            ..RunSummary::default()
        };

        let next = AtomicUsize::new(0);
        let outcomes = Mutex::new(Vec::with_capacity(records.len()));
        thread::scope(|s| {
            for _ in 0..self.workers.max(1).min(records.len().max(1)) {
                s.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::Relaxed);
                    let Some(record) = records.get(i) else { break };
                    let outcome = self.collect_sample(record);
                    match &outcome {
                        SampleOutcome::Archived { .. } => log::info!("{} archived", record.sample_id),
                        SampleOutcome::Failed(kind) => log::info!("{} failed: {kind}", record.sample_id),
                        SampleOutcome::Present => log::info!("{} already present", record.sample_id),
                    }
                    outcomes.lock().unwrap_or_else(|e| e.into_inner()).push(outcome);
                });
            }
        });

        for outcome in outcomes.into_inner().unwrap_or_else(|e| e.into_inner()) {
            summary.attempted += 1;
            match outcome {
                SampleOutcome::Archived { resource_failures } => {
                    summary.succeeded += 1;
                    for kind in resource_failures {
                        *summary.resource_errors.entry(kind).or_default() += 1;
                    }
                }
                SampleOutcome::Failed(kind) => {
                    summary.failed += 1;
                    *summary.errors.entry(kind).or_default() += 1;
                }
                SampleOutcome::Present => summary.already_present += 1,
            }
        }
        summary.finished_at = now_utc();
        summary.elapsed_secs = started.elapsed().as_secs_f64();
        summary
    }

    /// Archives one sample. Never panics on network or page content
    /// problems; those end up in the manifest.
    pub fn collect_sample(&self, record: &UrlRecord) -> SampleOutcome {
        match self.try_collect(record) {
            Ok(outcome) => outcome,
            Err(e) => {
                log::error!("{}: {e}", record.sample_id);
                SampleOutcome::Failed(
                    match e {
                        StoreError::SampleExists(_) => "SampleExists",
                        StoreError::IoFailure { .. } => "IoFailure",
                        StoreError::BadManifest { .. } => "BadManifest",
                    }
                    .to_string(),
                )
            }
        }
    }

    fn try_collect(&self, record: &UrlRecord) -> Result<SampleOutcome, StoreError> {
        let id = &record.sample_id;
        let dir = match self.overwrite {
            OverwritePolicy::Skip if store::sample_exists(&self.root, id) => return Ok(SampleOutcome::Present),
            OverwritePolicy::Overwrite => store::reset_sample_dir(&self.root, id)?,
            _ => store::init_sample_dir(&self.root, id)?,
        };
        let fetched_at = now_utc();

        let page = match self.fetcher.fetch_page(&record.url) {
            Ok(page) => page,
            Err(e) => {
                let manifest = SampleManifest {
                    record: record.clone(),
                    final_url: record.url.to_string(),
                    fetched_at,
                    resources: vec![ResourceRef::failed(ResourceKind::Html, record.url.as_str(), e.kind())],
                    error: Some(SampleError {
                        kind: e.kind().to_string(),
                        status_code: e.status_code(),
                        message: e.to_string(),
                    }),
                };
                store::write_manifest(&dir, &manifest)?;
                return Ok(SampleOutcome::Failed(e.kind().to_string()));
            }
        };

        let mut resources = Vec::new();
        let mut html_ref = store::write_resource(
            &dir,
            ResourceKind::Html,
            page.final_url.as_str(),
            &format!("{id}.html"),
            &page.body,
        )?;
        html_ref.truncated = page.truncated;
        html_ref.redirect_hops = Some(page.redirect_hops);
        let html_path = html_ref.local_path.clone();
        resources.push(html_ref);

        let text = page.text();
        let base = document_base(&text, &page.final_url);
        let found = discover(&text, &base);
        self.archive_resources(&dir, &found, &mut resources)?;

        if let Some(pool) = self.screenshots {
            resources.push(self.screenshot(pool, &dir, record, &page, html_path.as_deref())?);
        } else {
            resources.push(ResourceRef::skipped(ResourceKind::Screenshot, page.final_url.as_str(), "disabled"));
        }

        let resource_failures = resources
            .iter()
            .filter_map(|r| match &r.status {
                phishcollect_core::ResourceStatus::FetchFailed(kind) => Some(kind.clone()),
                _ => None,
            })
            .collect();
        let manifest = SampleManifest {
            record: record.clone(),
            final_url: page.final_url.to_string(),
            fetched_at,
            resources,
            error: None,
        };
        store::write_manifest(&dir, &manifest)?;
        Ok(SampleOutcome::Archived { resource_failures })
    }

    fn fetch_into(
        &self,
        dir: &SampleDir,
        kind: ResourceKind,
        url: &Url,
        out: &mut Vec<ResourceRef>,
    ) -> Result<(), StoreError> {
        let r = match self.fetcher.fetch_resource(url) {
            Ok(res) => {
                let mut r = store::write_resource(dir, kind, url.as_str(), suggested_name(url), &res.body)?;
                r.truncated = res.truncated;
                r.redirect_hops = Some(res.redirect_hops).filter(|&h| h > 0);
                r
            }
            Err(e) => failed_ref(kind, url, &e),
        };
        out.push(r);
        Ok(())
    }

    fn archive_resources(
        &self,
        dir: &SampleDir,
        found: &DiscoveredResources,
        out: &mut Vec<ResourceRef>,
    ) -> Result<(), StoreError> {
        if !found.inline_scripts.is_empty() {
            let js = found.inline_scripts.join("\n");
            out.push(store::write_resource(dir, ResourceKind::Javascript, INLINE_ORIGIN, "inline.js", js.as_bytes())?);
        }
        for url in &found.external_script_urls {
            self.fetch_into(dir, ResourceKind::Javascript, url, out)?;
        }

        if !found.inline_style_decls.is_empty() || !found.internal_style_blocks.is_empty() {
            let mut css = String::new();
            for decl in &found.inline_style_decls {
                writeln!(css, "/* style attribute of <{}> */\n{}", decl.element, decl.declarations).unwrap();
            }
            for block in &found.internal_style_blocks {
                writeln!(css, "{block}").unwrap();
            }
            out.push(store::write_resource(dir, ResourceKind::Css, INLINE_ORIGIN, "inline.css", css.as_bytes())?);
        }
        for url in &found.external_stylesheet_urls {
            self.fetch_into(dir, ResourceKind::Css, url, out)?;
        }

        for url in &found.favicon_urls {
            self.fetch_into(dir, ResourceKind::Favicon, url, out)?;
            if found.favicon_fallback {
                if let Some(last) = out.last_mut() {
                    last.fallback = true;
                }
            }
        }
        for url in &found.image_urls {
            self.fetch_into(dir, ResourceKind::Image, url, out)?;
        }
        Ok(())
    }

    fn screenshot(
        &self,
        pool: &ProviderPool,
        dir: &SampleDir,
        record: &UrlRecord,
        page: &FetchResult,
        html_path: Option<&str>,
    ) -> Result<ResourceRef, StoreError> {
        let target = match (self.capture, html_path) {
            (CaptureSource::LiveUrl, _) => CaptureTarget::Url(page.final_url.clone()),
            (CaptureSource::LocalFile, Some(p)) => CaptureTarget::File(dir.resolve(p)),
            (CaptureSource::LocalFile, None) => {
                return Ok(ResourceRef::skipped(
                    ResourceKind::Screenshot,
                    page.final_url.as_str(),
                    "no archived HTML",
                ))
            }
        };
        let origin = target.to_url();
        match pool.capture(&target, &self.viewport) {
            Ok(png) => store::write_resource(
                dir,
                ResourceKind::Screenshot,
                &origin,
                &format!("{}.png", record.sample_id),
                &png,
            ),
            Err(e) => {
                log::warn!("{}: screenshot: {e}", record.sample_id);
                Ok(ResourceRef::skipped(ResourceKind::Screenshot, origin, e.kind()))
            }
        }
    }
}

/// Round-robin over hosts in order of first appearance, keeping each
/// host's records in input order.
fn interleave_hosts(records: Vec<UrlRecord>) -> Vec<UrlRecord> {
    let total = records.len();
    let mut slot = HashMap::new();
    let mut queues: Vec<VecDeque<UrlRecord>> = Vec::new();
    for r in records {
        let i = *slot.entry(r.url.host().to_ascii_lowercase()).or_insert_with(|| {
            queues.push(VecDeque::new());
            queues.len() - 1
        });
        queues[i].push_back(r);
    }
    let mut out = Vec::with_capacity(total);
    while !queues.is_empty() {
        for q in &mut queues {
            out.extend(q.pop_front());
        }
        queues.retain(|q| !q.is_empty());
    }
    out
}

fn failed_ref(kind: ResourceKind, url: &Url, e: &FetchError) -> ResourceRef {
    log::debug!("{url}: {e}");
    ResourceRef::failed(kind, url.as_str(), e.kind())
}
