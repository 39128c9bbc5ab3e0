//! Renderings of correlation reports and matrix comparisons.

use std::fmt::Write as _;

use phishcollect_core::analyze::{Comparison, CorrelationReport};
use serde::Serialize;

fn cell(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// `rank,feature,coefficient` for the top `k`, then undefined features with
/// an empty rank and coefficient.
pub fn report_csv(report: &CorrelationReport, k: usize) -> String {
    let mut out = String::from("rank,feature,coefficient\n");
    for (i, (name, c)) in report.top_k(k.max(1)).iter().enumerate() {
        writeln!(out, "{},{name},{c}", i + 1).unwrap();
    }
    for name in report.undefined() {
        writeln!(out, ",{name},").unwrap();
    }
    out
}

pub fn report_table(report: &CorrelationReport, k: usize) -> String {
    let mut out = String::new();
    writeln!(out, "{:>4}  {:<28} {:>10}", "rank", "feature", "r").unwrap();
    for (i, (name, c)) in report.top_k(k.max(1)).iter().enumerate() {
        writeln!(out, "{:>4}  {:<28} {:>+10.4}", i + 1, name, c).unwrap();
    }
    let undefined: Vec<&str> = report.undefined().collect();
    if !undefined.is_empty() {
        writeln!(out, "undefined (zero variance): {}", undefined.join(", ")).unwrap();
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeriesEntry {
    pub feature: String,
    /// One value per dataset, `null` where undefined.
    pub coefficients: Vec<Option<f64>>,
}

/// Bar-chart friendly series: dataset names and, per feature, one
/// coefficient per dataset.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Series {
    pub datasets: Vec<String>,
    pub series: Vec<SeriesEntry>,
}

/// Series over the top `k` features of `report`.
pub fn report_series(name: &str, report: &CorrelationReport, k: usize) -> Series {
    Series {
        datasets: vec![name.to_string()],
        series: report
            .top_k(k.max(1))
            .into_iter()
            .map(|(feature, c)| SeriesEntry {
                feature,
                coefficients: vec![Some(c)],
            })
            .collect(),
    }
}

/// Series over every compared feature, ordered by the first dataset's
/// ranking, undefined features last.
pub fn comparison_series(names: [&str; 2], first: &CorrelationReport, comparison: &Comparison) -> Series {
    let mut order: Vec<&str> = first.ranked().map(|(n, _)| n).collect();
    order.extend(first.undefined());
    Series {
        datasets: names.iter().map(|n| n.to_string()).collect(),
        series: order
            .into_iter()
            .filter_map(|f| comparison.rows.iter().find(|r| r.feature == f))
            .map(|r| SeriesEntry {
                feature: r.feature.clone(),
                coefficients: vec![r.a, r.b],
            })
            .collect(),
    }
}

/// `feature,a,b,difference`, empty cells for undefined values.
pub fn comparison_csv(comparison: &Comparison) -> String {
    let mut out = String::from("feature,a,b,difference\n");
    for r in &comparison.rows {
        writeln!(out, "{},{},{},{}", r.feature, cell(r.a), cell(r.b), cell(r.difference)).unwrap();
    }
    out
}

pub fn comparison_table(names: [&str; 2], comparison: &Comparison) -> String {
    let fmt = |v: Option<f64>| v.map(|x| format!("{x:+.4}")).unwrap_or_else(|| "n/a".into());
    let mut out = String::new();
    writeln!(out, "{:<28} {:>10} {:>10} {:>10}", "feature", names[0], names[1], "b - a").unwrap();
    for r in &comparison.rows {
        writeln!(out, "{:<28} {:>10} {:>10} {:>10}", r.feature, fmt(r.a), fmt(r.b), fmt(r.difference)).unwrap();
    }
    out
}
