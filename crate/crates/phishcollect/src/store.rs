//! On-disk archive layout: `<root>/<sample_id>/{CSS,Favicon,HTML,Images,
//! Javascript,Screenshots}/` plus `manifest.json`, and corpus statistics.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use phishcollect_core::manifest::{ResourceKind, ResourceRef, ResourceStats, ResourceStatus, SampleManifest};
use phishcollect_core::{Label, SampleId};
use sha2::{Digest, Sha256};

pub const MANIFEST_FILE: &str = "manifest.json";

const MAX_NAME_LEN: usize = 96;

const IMAGE_EXTENSIONS: &[&str] = &[
    "png", "jpg", "jpeg", "gif", "webp", "svg", "bmp", "ico", "avif", "tif", "tiff", "apng", "jfif",
];

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("sample directory {0} already exists and is not empty")]
    SampleExists(PathBuf),
    #[error("I/O failure on {path}: {source}")]
    IoFailure {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("malformed manifest {path}: {source}")]
    BadManifest {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> StoreError + '_ {
    move |source| StoreError::IoFailure {
        path: path.to_path_buf(),
        source,
    }
}

/// A sample directory with its six kind subdirectories.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampleDir {
    path: PathBuf,
}

impl SampleDir {
    /// Wraps an existing directory without touching the filesystem.
    pub fn open(path: impl Into<PathBuf>) -> Self {
        SampleDir { path: path.into() }
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn manifest_path(&self) -> PathBuf {
        self.path.join(MANIFEST_FILE)
    }

    pub fn resolve(&self, local_path: &str) -> PathBuf {
        self.path.join(local_path)
    }
}

fn has_files(dir: &Path) -> io::Result<bool> {
    for entry in fs::read_dir(dir)? {
        let entry = entry?;
        if !entry.file_type()?.is_dir() || has_files(&entry.path())? {
            return Ok(true);
        }
    }
    Ok(false)
}

/// Whether `<root>/<sample_id>` exists and holds any file.
pub fn sample_exists(root: &Path, sample_id: &SampleId) -> bool {
    let path = root.join(sample_id.as_str());
    path.is_dir() && has_files(&path).unwrap_or(true)
}

/// Creates `<root>/<sample_id>/` with its six subdirectories. Succeeds
/// again on a directory that holds no files yet.
pub fn init_sample_dir(root: &Path, sample_id: &SampleId) -> Result<SampleDir, StoreError> {
    let path = root.join(sample_id.as_str());
    match fs::create_dir(&path) {
        Ok(()) => {}
        Err(e) if e.kind() == io::ErrorKind::AlreadyExists && path.is_dir() => {
            if has_files(&path).map_err(io_err(&path))? {
                return Err(StoreError::SampleExists(path));
            }
        }
        Err(e) => return Err(io_err(&path)(e)),
    }
    for kind in ResourceKind::ALL {
        let sub = path.join(kind.dir_name());
        match fs::create_dir(&sub) {
            Ok(()) => {}
            Err(e) if e.kind() == io::ErrorKind::AlreadyExists && sub.is_dir() => {}
            Err(e) => return Err(io_err(&sub)(e)),
        }
    }
    Ok(SampleDir { path })
}

/// Removes an existing sample directory and creates it afresh.
pub fn reset_sample_dir(root: &Path, sample_id: &SampleId) -> Result<SampleDir, StoreError> {
    let path = root.join(sample_id.as_str());
    if path.exists() {
        fs::remove_dir_all(&path).map_err(io_err(&path))?;
    }
    init_sample_dir(root, sample_id)
}

/// Keeps `[A-Za-z0-9._-]`, maps everything else to `_`, drops leading dots
/// and caps the length.
pub fn sanitize_name(name: &str) -> String {
    let cleaned: String = name
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || matches!(c, '.' | '_' | '-') {
                c
            } else {
                '_'
            }
        })
        .collect();
    let trimmed = cleaned.trim_start_matches('.');
    let mut out: String = trimmed.chars().take(MAX_NAME_LEN).collect();
    while out.ends_with('.') {
        out.pop();
    }
    out
}

fn extension(name: &str) -> Option<&str> {
    let (stem, ext) = name.rsplit_once('.')?;
    (!stem.is_empty() && !ext.is_empty()).then_some(ext)
}

/// Applies the kind's extension rule to a sanitized, non-empty name.
fn with_extension(kind: ResourceKind, name: &str) -> String {
    let forced = match kind {
        ResourceKind::Html => "html",
        ResourceKind::Css => "css",
        ResourceKind::Javascript => "js",
        ResourceKind::Favicon => "ico",
        ResourceKind::Screenshot => "png",
        ResourceKind::Image => {
            return match extension(name) {
                Some(ext) if IMAGE_EXTENSIONS.contains(&ext.to_ascii_lowercase().as_str()) => name.to_string(),
                _ => format!("{name}.img"),
            };
        }
    };
    match extension(name) {
        Some(ext) if ext.eq_ignore_ascii_case(forced) => name.to_string(),
        _ => format!("{name}.{forced}"),
    }
}

fn content_name(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    hex::encode(&digest[..6])
}

/// Final file name for a resource: sanitized, extension applied, hash
/// fallback for empty names.
pub fn file_name_for(kind: ResourceKind, suggested: &str, bytes: &[u8]) -> String {
    let mut name = sanitize_name(suggested);
    if name.is_empty() || name.chars().all(|c| c == '_' || c == '-' || c == '.') {
        name = content_name(bytes);
    }
    with_extension(kind, &name)
}

fn split_name(name: &str) -> (&str, &str) {
    match name.rsplit_once('.') {
        Some((stem, _)) if !stem.is_empty() => (stem, &name[stem.len()..]),
        _ => (name, ""),
    }
}

/// Writes `bytes` into the kind's subdirectory. Taken names get `-1`,
/// `-2`, ... before the extension. Empty content is recorded as skipped and
/// no file is written, so that every file has a non-zero byte count.
pub fn write_resource(
    dir: &SampleDir,
    kind: ResourceKind,
    origin_url: &str,
    suggested_name: &str,
    bytes: &[u8],
) -> Result<ResourceRef, StoreError> {
    if bytes.is_empty() {
        return Ok(ResourceRef::skipped(kind, origin_url, "empty content"));
    }
    let name = file_name_for(kind, suggested_name, bytes);
    let (stem, ext) = split_name(&name);
    let sub = dir.path.join(kind.dir_name());
    let mut candidate = name.clone();
    let mut n = 0;
    loop {
        let path = sub.join(&candidate);
        match fs::OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(mut file) => {
                io::Write::write_all(&mut file, bytes).map_err(io_err(&path))?;
                break;
            }
            Err(e) if e.kind() == io::ErrorKind::AlreadyExists => {
                n += 1;
                candidate = format!("{stem}-{n}{ext}");
            }
            Err(e) => return Err(io_err(&path)(e)),
        }
    }
    Ok(ResourceRef {
        kind,
        origin_url: origin_url.to_string(),
        local_path: Some(format!("{}/{}", kind.dir_name(), candidate)),
        byte_count: bytes.len() as u64,
        status: ResourceStatus::Ok,
        fallback: false,
        truncated: false,
        redirect_hops: None,
    })
}

/// Serializes the manifest as pretty JSON to `manifest.json`.
pub fn write_manifest(dir: &SampleDir, manifest: &SampleManifest) -> Result<PathBuf, StoreError> {
    let path = dir.manifest_path();
    let mut json = serde_json::to_vec_pretty(manifest).expect("manifest serializes");
    json.push(b'\n');
    fs::write(&path, json).map_err(io_err(&path))?;
    Ok(path)
}

pub fn read_manifest(dir: &SampleDir) -> Result<SampleManifest, StoreError> {
    let path = dir.manifest_path();
    let bytes = fs::read(&path).map_err(io_err(&path))?;
    serde_json::from_slice(&bytes).map_err(|source| StoreError::BadManifest { path, source })
}

/// Sample directories directly under `root`, sorted by name.
pub fn sample_dirs(root: &Path) -> Result<Vec<SampleDir>, StoreError> {
    let mut dirs = Vec::new();
    for entry in fs::read_dir(root).map_err(io_err(root))? {
        let entry = entry.map_err(io_err(root))?;
        if entry.file_type().map_err(io_err(root))?.is_dir() {
            dirs.push(entry.path());
        }
    }
    dirs.sort();
    Ok(dirs.into_iter().map(SampleDir::open).collect())
}

/// Aggregates per-class, per-kind counts over every sample directory under
/// `root`. Directories without a readable manifest are counted as
/// unreadable.
pub fn collect_stats(root: &Path) -> Result<ResourceStats, StoreError> {
    let mut stats = ResourceStats::default();
    for dir in sample_dirs(root)? {
        match read_manifest(&dir) {
            Ok(m) => stats.add(&m),
            Err(e) => {
                log::warn!("{e}");
                stats.add_unreadable();
            }
        }
    }
    Ok(stats)
}

/// `class,kind,samples_with,total_files`, phishing rows first.
pub fn stats_csv(stats: &ResourceStats) -> String {
    let mut out = String::from("class,kind,samples_with,total_files\n");
    for (label, kind, c) in stats.rows() {
        writeln!(out, "{},{},{},{}", label.as_str(), kind.as_str(), c.samples_with, c.total_files).unwrap();
    }
    out
}

/// Fixed-width table with one row per kind and both classes side by side.
pub fn stats_table(stats: &ResourceStats) -> String {
    let mut out = String::new();
    writeln!(
        out,
        "{:<12} {:>18} {:>18} {:>18} {:>18}",
        "kind", "phishing samples", "phishing files", "legit samples", "legit files"
    )
    .unwrap();
    for kind in ResourceKind::ALL {
        let p = stats.get(Label::Phishing, kind);
        let l = stats.get(Label::Legitimate, kind);
        writeln!(
            out,
            "{:<12} {:>18} {:>18} {:>18} {:>18}",
            kind.dir_name(),
            p.samples_with,
            p.total_files,
            l.samples_with,
            l.total_files
        )
        .unwrap();
    }
    writeln!(
        out,
        "samples: {} phishing, {} legitimate, {} unreadable",
        stats.phishing_samples, stats.legitimate_samples, stats.unreadable
    )
    .unwrap();
    out
}

/// Differences between the files under a sample directory and the ok
/// entries of its manifest. Empty when they are in bijection and the
/// manifest is internally consistent.
pub fn verify_sample(dir: &SampleDir) -> Result<Vec<String>, StoreError> {
    let manifest = read_manifest(dir)?;
    let mut problems = Vec::new();
    if !manifest.is_consistent() {
        problems.push("manifest violates its invariants".to_string());
    }
    let mut on_disk = BTreeSet::new();
    for entry in fs::read_dir(&dir.path).map_err(io_err(&dir.path))? {
        let entry = entry.map_err(io_err(&dir.path))?;
        let name = entry.file_name().to_string_lossy().into_owned();
        let is_dir = entry.file_type().map_err(io_err(&dir.path))?.is_dir();
        match ResourceKind::from_dir_name(&name) {
            Some(_) if is_dir => {
                for file in fs::read_dir(entry.path()).map_err(io_err(&entry.path()))? {
                    let file = file.map_err(io_err(&entry.path()))?;
                    on_disk.insert(format!("{name}/{}", file.file_name().to_string_lossy()));
                }
            }
            _ if name == MANIFEST_FILE && !is_dir => {}
            _ => problems.push(format!("unexpected entry {name}")),
        }
    }
    let mut referenced = BTreeSet::new();
    for r in manifest.resources.iter().filter(|r| r.status.is_ok()) {
        let Some(path) = &r.local_path else { continue };
        if !referenced.insert(path.clone()) {
            problems.push(format!("{path} referenced twice"));
        }
        match fs::metadata(dir.resolve(path)) {
            Ok(m) if m.len() == r.byte_count => {}
            Ok(m) => problems.push(format!("{path} has {} bytes, manifest says {}", m.len(), r.byte_count)),
            Err(_) => {}
        }
    }
    for path in on_disk.difference(&referenced) {
        problems.push(format!("{path} not in manifest"));
    }
    for path in referenced.difference(&on_disk) {
        problems.push(format!("{path} missing on disk"));
    }
    Ok(problems)
}
