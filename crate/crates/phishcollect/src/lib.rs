//! Collection pipeline for phishing webpage datasets: fetch landing pages
//! and every resource they reference into a fixed per-sample directory
//! layout, take viewport screenshots, compute the 30 ternary phishing
//! features per sample and rank them by correlation with the class label.
//!
//! The pure parts (URL resolution, HTML resource discovery, feature rules,
//! correlation) live in [`phishcollect_core`]; this crate adds HTTP, the
//! filesystem, the screenshot providers and the command line.

pub mod cli;
pub mod collect;
pub mod featurize;
pub mod fetch;
pub mod ingest;
pub mod report;
pub mod snapshot;
pub mod store;

pub use phishcollect_core as core;
