//! Per-feature Pearson correlation against the class label.
//!
//! For ternary columns the coefficient is computed from exact integer
//! moment sums, so results do not depend on row order. Against a binary
//! label this is the point-biserial correlation.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::cmp::Ordering;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AnalyzeError {
    #[error("all labels are identical; correlation is undefined")]
    SingleClassMatrix,
    #[error("matrix needs at least 2 rows, got {0}")]
    TooFewRows(usize),
    #[error("row {row} has {got} values, expected {expected}")]
    RowLength { row: usize, got: usize, expected: usize },
    #[error("row {row}: value {value} is not in {{-1, 0, 1}}")]
    InvalidValue { row: usize, value: i8 },
    #[error("row {row}: label {value} is not -1 or 1")]
    InvalidLabel { row: usize, value: i8 },
    #[error("duplicate feature name `{0}`")]
    DuplicateFeature(String),
    #[error("feature sets differ: {0}")]
    SchemaMismatch(String),
}

/// `N` rows of ternary feature values with a `-1`/`+1` label per row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureMatrix {
    feature_names: Vec<String>,
    rows: Vec<Vec<i8>>,
    labels: Vec<i8>,
}

impl FeatureMatrix {
    pub fn new(feature_names: Vec<String>, rows: Vec<Vec<i8>>, labels: Vec<i8>) -> Result<Self, AnalyzeError> {
        if rows.len() < 2 {
            return Err(AnalyzeError::TooFewRows(rows.len()));
        }
        let mut seen = BTreeMap::new();
        for name in &feature_names {
            if seen.insert(name.as_str(), ()).is_some() {
                return Err(AnalyzeError::DuplicateFeature(name.clone()));
            }
        }
        if labels.len() != rows.len() {
            return Err(AnalyzeError::RowLength {
                row: labels.len().min(rows.len()),
                got: labels.len(),
                expected: rows.len(),
            });
        }
        for (i, row) in rows.iter().enumerate() {
            if row.len() != feature_names.len() {
                return Err(AnalyzeError::RowLength {
                    row: i,
                    got: row.len(),
                    expected: feature_names.len(),
                });
            }
            if let Some(&value) = row.iter().find(|v| !(-1..=1).contains(*v)) {
                return Err(AnalyzeError::InvalidValue { row: i, value });
            }
            if labels[i] != 1 && labels[i] != -1 {
                return Err(AnalyzeError::InvalidLabel { row: i, value: labels[i] });
            }
        }
        Ok(FeatureMatrix {
            feature_names,
            rows,
            labels,
        })
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn rows(&self) -> &[Vec<i8>] {
        &self.rows
    }

    pub fn labels(&self) -> &[i8] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn column(&self, j: usize) -> impl Iterator<Item = i8> + '_ {
        self.rows.iter().map(move |r| r[j])
    }
}

/// Pearson correlation of two equally long integer series from exact
/// moment sums. `None` when either series has zero variance.
fn pearson_exact(xs: impl Iterator<Item = i64>, ys: &[i8]) -> Option<f64> {
    let (mut n, mut sx, mut sy, mut sxx, mut syy, mut sxy) = (0i128, 0i128, 0i128, 0i128, 0i128, 0i128);
    for (x, &y) in xs.zip(ys) {
        let (x, y) = (i128::from(x), i128::from(y));
        n += 1;
        sx += x;
        sy += y;
        sxx += x * x;
        syy += y * y;
        sxy += x * y;
    }
    let cov = n * sxy - sx * sy;
    let var_x = n * sxx - sx * sx;
    let var_y = n * syy - sy * sy;
    if var_x == 0 || var_y == 0 {
        return None;
    }
    let r = cov as f64 / libm::sqrt(var_x as f64 * var_y as f64);
    Some(r.clamp(-1.0, 1.0))
}

/// Pearson correlation of two real-valued series (two-pass, centred).
/// `None` for mismatched lengths, fewer than two points or zero variance.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return None;
    }
    let constant = |v: &[f64]| v.iter().all(|&a| a == v[0]);
    if constant(xs) || constant(ys) {
        return None;
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some((sxy / libm::sqrt(sxx * syy)).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureCorrelation {
    pub feature: String,
    /// `None` for zero-variance features.
    pub coefficient: Option<f64>,
}

/// Coefficients in matrix column order plus the ranking of the defined
/// ones by descending absolute value, ties broken by feature name.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationReport {
    pub features: Vec<FeatureCorrelation>,
    ranking: Vec<usize>,
}

impl CorrelationReport {
    /// Indices into `features`, strongest first.
    pub fn ranking(&self) -> &[usize] {
        &self.ranking
    }

    pub fn ranked(&self) -> impl Iterator<Item = (&str, f64)> + '_ {
        self.ranking.iter().map(move |&i| {
            let f = &self.features[i];
            (f.feature.as_str(), f.coefficient.expect("ranked features are defined"))
        })
    }

    pub fn undefined(&self) -> impl Iterator<Item = &str> + '_ {
        self.features
            .iter()
            .filter(|f| f.coefficient.is_none())
            .map(|f| f.feature.as_str())
    }

    pub fn coefficient(&self, feature: &str) -> Option<f64> {
        self.features
            .iter()
            .find(|f| f.feature == feature)
            .and_then(|f| f.coefficient)
    }

    /// The first `min(k, defined)` ranked features.
    pub fn top_k(&self, k: usize) -> Vec<(String, f64)> {
        self.ranked().take(k).map(|(n, c)| (n.to_string(), c)).collect()
    }
}

fn rank(features: &[FeatureCorrelation]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..features.len())
        .filter(|&i| features[i].coefficient.is_some())
        .collect();
    idx.sort_by(|&a, &b| {
        let (fa, fb) = (&features[a], &features[b]);
        let (ca, cb) = (fa.coefficient.unwrap_or(0.0).abs(), fb.coefficient.unwrap_or(0.0).abs());
        cb.partial_cmp(&ca)
            .unwrap_or(Ordering::Equal)
            .then_with(|| fa.feature.cmp(&fb.feature))
    });
    idx
}

/// Correlation of every feature column with the label column.
pub fn correlation_with_label(matrix: &FeatureMatrix) -> Result<CorrelationReport, AnalyzeError> {
    let first = matrix.labels[0];
    if matrix.labels.iter().all(|&l| l == first) {
        return Err(AnalyzeError::SingleClassMatrix);
    }
    let features: Vec<FeatureCorrelation> = matrix
        .feature_names
        .iter()
        .enumerate()
        .map(|(j, name)| FeatureCorrelation {
            feature: name.clone(),
            coefficient: pearson_exact(matrix.column(j).map(i64::from), &matrix.labels),
        })
        .collect();
    let ranking = rank(&features);
    Ok(CorrelationReport { features, ranking })
}

/// Ranked `(feature, coefficient)` pairs, strongest first.
pub fn top_k_report(report: &CorrelationReport, k: usize) -> Vec<(String, f64)> {
    report.top_k(k.max(1))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub feature: String,
    pub a: Option<f64>,
    pub b: Option<f64>,
    /// `b - a` when both are defined.
    pub difference: Option<f64>,
}

/// Side-by-side coefficients of two matrices over the same feature set,
/// in the first matrix's column order.
#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub rows: Vec<ComparisonRow>,
}

pub fn compare_matrices(a: &FeatureMatrix, b: &FeatureMatrix) -> Result<Comparison, AnalyzeError> {
    let mut a_names: Vec<&String> = a.feature_names.iter().collect();
    let mut b_names: Vec<&String> = b.feature_names.iter().collect();
    a_names.sort();
    b_names.sort();
    if a_names != b_names {
        let missing: Vec<&str> = a_names
            .iter()
            .filter(|n| !b_names.contains(n))
            .chain(b_names.iter().filter(|n| !a_names.contains(n)))
            .map(|n| n.as_str())
            .collect();
        return Err(AnalyzeError::SchemaMismatch(missing.join(", ")));
    }
    let ra = correlation_with_label(a)?;
    let rb = correlation_with_label(b)?;
    let rows = ra
        .features
        .iter()
        .map(|fa| {
            let cb = rb.coefficient(&fa.feature);
            ComparisonRow {
                feature: fa.feature.clone(),
                a: fa.coefficient,
                b: cb,
                difference: fa.coefficient.zip(cb).map(|(x, y)| y - x),
            }
        })
        .collect();
    Ok(Comparison { rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn matrix(cols: &[(&str, &[i8])], labels: &[i8]) -> FeatureMatrix {
        let names = cols.iter().map(|(n, _)| n.to_string()).collect();
        let rows = (0..labels.len()).map(|i| cols.iter().map(|(_, c)| c[i]).collect()).collect();
        FeatureMatrix::new(names, rows, labels.to_vec()).unwrap()
    }

    #[test]
    fn perfect_and_inverse() {
        let labels = [1, -1, 1, -1, -1];
        let neg: Vec<i8> = labels.iter().map(|l| -l).collect();
        let m = matrix(&[("same", &labels), ("neg", &neg)], &labels);
        let r = correlation_with_label(&m).unwrap();
        assert_eq!(r.coefficient("same"), Some(1.0));
        assert_eq!(r.coefficient("neg"), Some(-1.0));
    }

    #[test]
    fn orthogonal_column() {
        // hand computation: sum(x*y) = 1 - 1 - 1 + 1 = 0 with zero means
        let m = matrix(&[("f", &[1, 1, -1, -1])], &[1, -1, 1, -1]);
        assert_eq!(correlation_with_label(&m).unwrap().coefficient("f"), Some(0.0));
    }

    #[test]
    fn zero_variance_is_undefined_and_unranked() {
        let m = matrix(&[("flat", &[0, 0, 0]), ("x", &[1, 0, -1])], &[1, 1, -1]);
        let r = correlation_with_label(&m).unwrap();
        assert_eq!(r.undefined().collect::<Vec<_>>(), ["flat"]);
        assert_eq!(r.ranking().len(), 1);
    }

    #[test]
    fn single_class() {
        let m = matrix(&[("x", &[1, 0, -1])], &[1, 1, 1]);
        assert_eq!(correlation_with_label(&m), Err(AnalyzeError::SingleClassMatrix));
    }

    #[test]
    fn ties_break_by_name() {
        let labels = [1, -1, 1, -1];
        let m = matrix(&[("b", &labels), ("a", &labels), ("c", &[1, 1, -1, -1])], &labels);
        let r = correlation_with_label(&m).unwrap();
        let names: Vec<&str> = r.ranked().map(|(n, _)| n).collect();
        assert_eq!(names, ["a", "b", "c"]);
    }

    #[test]
    fn top_k_limits() {
        let labels = [1, -1, 1, -1];
        let m = matrix(&[("weak", &[1, 0, 0, -1]), ("perfect", &labels)], &labels);
        let r = correlation_with_label(&m).unwrap();
        assert_eq!(top_k_report(&r, 1), [("perfect".to_string(), 1.0)]);
        assert_eq!(top_k_report(&r, 16).len(), 2);
    }

    #[test]
    fn validation() {
        assert_eq!(
            FeatureMatrix::new(vec!["a".into()], vec![vec![1]], vec![1]),
            Err(AnalyzeError::TooFewRows(1))
        );
        assert!(matches!(
            FeatureMatrix::new(vec!["a".into()], vec![vec![2], vec![1]], vec![1, -1]),
            Err(AnalyzeError::InvalidValue { row: 0, value: 2 })
        ));
        assert!(matches!(
            FeatureMatrix::new(vec!["a".into()], vec![vec![1], vec![1, 0]], vec![1, -1]),
            Err(AnalyzeError::RowLength { row: 1, .. })
        ));
        assert!(matches!(
            FeatureMatrix::new(vec!["a".into()], vec![vec![1], vec![0]], vec![1, 0]),
            Err(AnalyzeError::InvalidLabel { row: 1, value: 0 })
        ));
    }

    #[test]
    fn compare_aligns_by_name() {
        let labels = [1, -1, 1, -1];
        let x: &[i8] = &[1, -1, 0, -1];
        let y: &[i8] = &[0, 1, 1, -1];
        let a = matrix(&[("x", x), ("y", y)], &labels);
        let b = matrix(&[("y", y), ("x", x)], &labels);
        let cmp = compare_matrices(&a, &b).unwrap();
        assert_eq!(cmp.rows.len(), 2);
        assert!(cmp.rows.iter().all(|r| r.difference == Some(0.0)));
        let c = matrix(&[("x", x), ("z", y)], &labels);
        assert!(matches!(compare_matrices(&a, &c), Err(AnalyzeError::SchemaMismatch(_))));
    }

    #[test]
    fn real_valued_pearson() {
        assert_eq!(pearson(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]), Some(1.0));
        assert_eq!(pearson(&[1.0, 1.0], &[2.0, 4.0]), None);
        assert_eq!(pearson(&[1.0], &[2.0]), None);
        // a mean that does not round-trip must not fake a tiny variance
        let c = [0.1 * 3.0; 7];
        assert_eq!(pearson(&c, &[1.0, -1.0, 1.0, -1.0, 1.0, -1.0, 1.0]), None);
    }
}
