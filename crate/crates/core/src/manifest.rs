//! Per-sample manifest model and corpus resource statistics.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::ingest::{Label, UrlRecord};

/// `origin_url` marker for content taken from the page itself.
pub const INLINE_ORIGIN: &str = "inline";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ResourceKind {
    Html,
    Css,
    Javascript,
    Favicon,
    Image,
    Screenshot,
}

impl ResourceKind {
    pub const ALL: [ResourceKind; 6] = [
        ResourceKind::Html,
        ResourceKind::Css,
        ResourceKind::Javascript,
        ResourceKind::Favicon,
        ResourceKind::Image,
        ResourceKind::Screenshot,
    ];

    /// Subdirectory of the sample directory holding this kind.
    pub fn dir_name(self) -> &'static str {
        match self {
            ResourceKind::Html => "HTML",
            ResourceKind::Css => "CSS",
            ResourceKind::Javascript => "Javascript",
            ResourceKind::Favicon => "Favicon",
            ResourceKind::Image => "Images",
            ResourceKind::Screenshot => "Screenshots",
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ResourceKind::Html => "html",
            ResourceKind::Css => "css",
            ResourceKind::Javascript => "javascript",
            ResourceKind::Favicon => "favicon",
            ResourceKind::Image => "image",
            ResourceKind::Screenshot => "screenshot",
        }
    }

    pub fn from_dir_name(name: &str) -> Option<ResourceKind> {
        ResourceKind::ALL.into_iter().find(|k| k.dir_name() == name)
    }

    fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for ResourceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResourceStatus {
    Ok,
    FetchFailed(String),
    Skipped(String),
}

impl ResourceStatus {
    pub fn is_ok(&self) -> bool {
        matches!(self, ResourceStatus::Ok)
    }
}

/// One archived (or attempted) resource of a sample.
///
/// `local_path` is set exactly when `status` is ok, and is relative to the
/// sample directory, always inside `kind.dir_name()`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResourceRef {
    pub kind: ResourceKind,
    pub origin_url: String,
    pub local_path: Option<String>,
    pub byte_count: u64,
    pub status: ResourceStatus,
    /// Conventional `/favicon.ico` guessed because the page declared none.
    #[serde(default, skip_serializing_if = "core::ops::Not::not")]
    pub fallback: bool,
    /// Body was cut at the fetch policy's size limit.
    #[serde(default, skip_serializing_if = "core::ops::Not::not")]
    pub truncated: bool,
    /// HTTP redirects followed to reach the resource.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub redirect_hops: Option<u32>,
}

impl ResourceRef {
    pub fn failed(kind: ResourceKind, origin_url: impl Into<String>, reason: impl Into<String>) -> Self {
        ResourceRef {
            kind,
            origin_url: origin_url.into(),
            local_path: None,
            byte_count: 0,
            status: ResourceStatus::FetchFailed(reason.into()),
            fallback: false,
            truncated: false,
            redirect_hops: None,
        }
    }

    pub fn skipped(kind: ResourceKind, origin_url: impl Into<String>, reason: impl Into<String>) -> Self {
        ResourceRef {
            status: ResourceStatus::Skipped(reason.into()),
            ..ResourceRef::failed(kind, origin_url, "")
        }
    }

    /// Checks the per-entry invariants: path presence matches status,
    /// path lies in the kind's directory, and bytes are zero exactly when
    /// the entry is not ok.
    pub fn is_consistent(&self) -> bool {
        let path_ok = match (&self.local_path, self.status.is_ok()) {
            (Some(p), true) => p
                .strip_prefix(self.kind.dir_name())
                .and_then(|rest| rest.strip_prefix('/'))
                .is_some_and(|name| !name.is_empty() && !name.contains('/') && name != ".."),
            (None, false) => true,
            _ => false,
        };
        path_ok && ((self.byte_count == 0) == !self.status.is_ok())
    }
}

/// Top-level failure of a sample, typically the landing-page fetch.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleError {
    /// Error class name, e.g. `FileNotFound` or `ContentForbidden`.
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub status_code: Option<u16>,
    pub message: String,
}

/// Field order is the serialized key order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleManifest {
    pub record: UrlRecord,
    pub final_url: String,
    /// ISO-8601 UTC.
    pub fetched_at: String,
    pub resources: Vec<ResourceRef>,
    pub error: Option<SampleError>,
}

impl SampleManifest {
    pub fn html(&self) -> Option<&ResourceRef> {
        self.resources.iter().find(|r| r.kind == ResourceKind::Html && r.status.is_ok())
    }

    pub fn ok_resources(&self, kind: ResourceKind) -> impl Iterator<Item = &ResourceRef> {
        self.resources.iter().filter(move |r| r.kind == kind && r.status.is_ok())
    }

    /// At most one html entry, no ok entries when a top-level error is
    /// set, and every entry consistent.
    pub fn is_consistent(&self) -> bool {
        let html_entries = self.resources.iter().filter(|r| r.kind == ResourceKind::Html).count();
        html_entries <= 1
            && (self.error.is_none() || self.resources.iter().all(|r| !r.status.is_ok()))
            && self.resources.iter().all(ResourceRef::is_consistent)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct KindCount {
    /// Samples holding at least one ok resource of the kind.
    pub samples_with: u64,
    /// Ok resources of the kind across all samples.
    pub total_files: u64,
}

/// Per class label and resource kind counts over an archive.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResourceStats {
    pub phishing_samples: u64,
    pub legitimate_samples: u64,
    phishing: [KindCount; 6],
    legitimate: [KindCount; 6],
    /// Sample directories whose manifest could not be read.
    pub unreadable: u64,
}

impl ResourceStats {
    pub fn add(&mut self, manifest: &SampleManifest) {
        let (samples, table) = match manifest.record.label {
            Label::Phishing => (&mut self.phishing_samples, &mut self.phishing),
            Label::Legitimate => (&mut self.legitimate_samples, &mut self.legitimate),
        };
        *samples += 1;
        for kind in ResourceKind::ALL {
            let n = manifest.ok_resources(kind).count() as u64;
            let cell = &mut table[kind.index()];
            cell.total_files += n;
            cell.samples_with += u64::from(n > 0);
        }
    }

    pub fn add_unreadable(&mut self) {
        self.unreadable += 1;
    }

    pub fn get(&self, label: Label, kind: ResourceKind) -> KindCount {
        match label {
            Label::Phishing => self.phishing[kind.index()],
            Label::Legitimate => self.legitimate[kind.index()],
        }
    }

    pub fn samples(&self, label: Label) -> u64 {
        match label {
            Label::Phishing => self.phishing_samples,
            Label::Legitimate => self.legitimate_samples,
        }
    }

    /// Both classes summed.
    pub fn total(&self, kind: ResourceKind) -> KindCount {
        let p = self.phishing[kind.index()];
        let l = self.legitimate[kind.index()];
        KindCount {
            samples_with: p.samples_with + l.samples_with,
            total_files: p.total_files + l.total_files,
        }
    }

    /// `(label, kind, counts)` rows, phishing first, kinds in
    /// [`ResourceKind::ALL`] order.
    pub fn rows(&self) -> impl Iterator<Item = (Label, ResourceKind, KindCount)> + '_ {
        [Label::Phishing, Label::Legitimate]
            .into_iter()
            .flat_map(move |l| ResourceKind::ALL.into_iter().map(move |k| (l, k, self.get(l, k))))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{SampleId, Source};
    use crate::url::Url;
    use alloc::string::ToString;
    use alloc::vec;

    fn ok(kind: ResourceKind, name: &str) -> ResourceRef {
        ResourceRef {
            kind,
            origin_url: "http://x.com/".into(),
            local_path: Some(alloc::format!("{}/{}", kind.dir_name(), name)),
            byte_count: 3,
            status: ResourceStatus::Ok,
            fallback: false,
            truncated: false,
            redirect_hops: None,
        }
    }

    fn manifest(label: Label, resources: Vec<ResourceRef>) -> SampleManifest {
        SampleManifest {
            record: UrlRecord {
                sample_id: SampleId::new("1").unwrap(),
                url: Url::parse("http://x.com/").unwrap(),
                label,
                source: Source::CsvFeed,
            },
            final_url: "http://x.com/".into(),
            fetched_at: "2023-07-09T00:00:00Z".into(),
            resources,
            error: None,
        }
    }

    #[test]
    fn status_serialization() {
        assert_eq!(serde_json::to_string(&ResourceStatus::Ok).unwrap(), r#""ok""#);
        assert_eq!(
            serde_json::to_string(&ResourceStatus::FetchFailed("FileNotFound".into())).unwrap(),
            r#"{"fetch_failed":"FileNotFound"}"#
        );
    }

    #[test]
    fn manifest_key_order() {
        let json = serde_json::to_string(&manifest(Label::Phishing, vec![])).unwrap();
        let pos = |k: &str| json.find(&alloc::format!("\"{k}\"")).unwrap();
        assert!(pos("record") < pos("final_url"));
        assert!(pos("final_url") < pos("fetched_at"));
        assert!(pos("fetched_at") < pos("resources"));
        assert!(pos("resources") < pos("error"));
    }

    #[test]
    fn consistency_rules() {
        assert!(ok(ResourceKind::Css, "a.css").is_consistent());
        let mut wrong_dir = ok(ResourceKind::Css, "a.css");
        wrong_dir.local_path = Some("Javascript/a.css".to_string());
        assert!(!wrong_dir.is_consistent());
        let mut zero = ok(ResourceKind::Css, "a.css");
        zero.byte_count = 0;
        assert!(!zero.is_consistent());
        assert!(ResourceRef::failed(ResourceKind::Image, "http://x/", "FileNotFound").is_consistent());

        let two_html = manifest(Label::Phishing, vec![ok(ResourceKind::Html, "a.html"), ok(ResourceKind::Html, "b.html")]);
        assert!(!two_html.is_consistent());
        let mut errored = manifest(Label::Phishing, vec![ok(ResourceKind::Html, "a.html")]);
        errored.error = Some(SampleError {
            kind: "Timeout".into(),
            status_code: None,
            message: String::new(),
        });
        assert!(!errored.is_consistent());
    }

    #[test]
    fn stats_counts() {
        let mut stats = ResourceStats::default();
        stats.add(&manifest(Label::Phishing, vec![ok(ResourceKind::Favicon, "f.ico")]));
        stats.add(&manifest(Label::Phishing, vec![ok(ResourceKind::Image, "a.png"), ok(ResourceKind::Image, "b.png")]));
        stats.add(&manifest(Label::Legitimate, vec![ResourceRef::failed(ResourceKind::Favicon, "x", "FileNotFound")]));
        assert_eq!(stats.get(Label::Phishing, ResourceKind::Favicon).samples_with, 1);
        assert_eq!(
            stats.get(Label::Phishing, ResourceKind::Image),
            KindCount {
                samples_with: 1,
                total_files: 2
            }
        );
        assert_eq!(stats.get(Label::Legitimate, ResourceKind::Favicon), KindCount::default());
        assert_eq!(stats.samples(Label::Phishing), 2);
        assert_eq!(stats.total(ResourceKind::Image).total_files, 2);
        assert_eq!(stats.rows().count(), 12);
    }
}
