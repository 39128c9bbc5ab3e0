//! Allocation-only building blocks for collecting and analysing phishing
//! webpage datasets.
//!
//! Everything in this crate is a pure function of its inputs: RFC 3986
//! reference resolution, a lenient HTML tokenizer with resource discovery,
//! the ternary phishing feature rules, per-feature correlation against the
//! class label, and the serializable sample manifest model. Network access,
//! the filesystem and the command line live in the `phishcollect` crate.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod analyze;
pub mod domain;
pub mod extract;
pub mod features;
pub mod html;
pub mod ingest;
pub mod manifest;
pub mod url;

pub use analyze::{AnalyzeError, Comparison, CorrelationReport, FeatureMatrix};
pub use extract::DiscoveredResources;
pub use features::{FeatureName, FeatureVector, IntelligenceReport, Ternary};
pub use ingest::{IngestError, Label, SampleId, Source, UrlRecord};
pub use manifest::{ResourceKind, ResourceRef, ResourceStats, ResourceStatus, SampleManifest};
pub use url::{ResolveError, Url, UrlError};
