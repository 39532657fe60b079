//! Dataset ingestion, bundled classification datasets, summary statistics for
//! the recommender, and stratified fold assignment for cross-validation.

use std::fmt;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

const IRIS_CSV: &str = include_str!("../assets/iris.csv");
const WINE_CSV: &str = include_str!("../assets/wine.csv");
const BREAST_CANCER_CSV: &str = include_str!("../assets/breast_cancer.csv");

/// Names accepted by [`builtin`], sorted.
pub const BUILTIN_NAMES: [&str; 3] = ["breast_cancer", "iris", "wine"];

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DataError {
    #[error("cannot read {path}: {reason}")]
    Io { path: String, reason: String },
    #[error("empty dataset: need a header row and at least 2 data rows")]
    Empty,
    #[error("label column {0} not found in header")]
    MissingLabelColumn(String),
    #[error("row {row} has {got} fields, expected {expected}")]
    RaggedRow { row: usize, got: usize, expected: usize },
    #[error("non-numeric feature value {value:?} at row {row}, column {column}")]
    NonNumericCell { row: usize, column: String, value: String },
    #[error("missing value at row {row}, column {column}")]
    MissingCell { row: usize, column: String },
    #[error("single-class dataset: all labels are {0:?}")]
    SingleClass(String),
    #[error("unknown builtin dataset {0:?}; valid names: breast_cancer, iris, wine")]
    UnknownBuiltin(String),
    #[error("invalid dataset: {0}")]
    Invalid(String),
    #[error("k={k} exceeds the smallest class count {min_class}")]
    FoldTooFine { k: usize, min_class: usize },
    #[error("k={0} must be at least 2")]
    FoldTooCoarse(usize),
}

/// Which column of a CSV file holds the class label.
#[derive(Debug, Clone, PartialEq)]
pub enum LabelColumn {
    Name(String),
    Index(usize),
}

impl fmt::Display for LabelColumn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LabelColumn::Name(n) => write!(f, "{n:?}"),
            LabelColumn::Index(i) => write!(f, "#{i}"),
        }
    }
}

/// An in-memory classification dataset. Immutable after load.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    name: String,
    features: Vec<Vec<f64>>,
    labels: Vec<usize>,
    feature_names: Vec<String>,
    class_names: Vec<String>,
}

impl Dataset {
    pub fn from_parts(
        name: impl Into<String>,
        features: Vec<Vec<f64>>,
        labels: Vec<usize>,
        feature_names: Vec<String>,
        class_names: Vec<String>,
    ) -> Result<Self, DataError> {
        let n = features.len();
        if n < 2 {
            return Err(DataError::Invalid("need at least 2 samples".into()));
        }
        if labels.len() != n {
            return Err(DataError::Invalid("labels/features length mismatch".into()));
        }
        let d = features[0].len();
        if d == 0 {
            return Err(DataError::Invalid("need at least 1 feature".into()));
        }
        if features.iter().any(|row| row.len() != d) {
            return Err(DataError::Invalid("ragged feature matrix".into()));
        }
        if feature_names.len() != d {
            return Err(DataError::Invalid("feature_names length mismatch".into()));
        }
        let c = class_names.len();
        if labels.iter().any(|&y| y >= c) {
            return Err(DataError::Invalid("class id out of range".into()));
        }
        let mut seen = vec![false; c];
        for &y in &labels {
            seen[y] = true;
        }
        if seen.iter().filter(|&&s| s).count() < 2 {
            return Err(DataError::SingleClass(
                class_names.first().cloned().unwrap_or_default(),
            ));
        }
        Ok(Dataset {
            name: name.into(),
            features,
            labels,
            feature_names,
            class_names,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn n_samples(&self) -> usize {
        self.features.len()
    }

    pub fn n_features(&self) -> usize {
        self.features[0].len()
    }

    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn features(&self) -> &[Vec<f64>] {
        &self.features
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    /// Row subsets as owned matrices, used to split folds into train/test.
    pub fn subset(&self, indices: &[usize]) -> (Vec<Vec<f64>>, Vec<usize>) {
        let x = indices.iter().map(|&i| self.features[i].clone()).collect();
        let y = indices.iter().map(|&i| self.labels[i]).collect();
        (x, y)
    }

    /// Exact counts and per-feature population moments.
    pub fn summarize(&self) -> DatasetSummary {
        let n = self.n_samples();
        let d = self.n_features();
        let mut class_counts = vec![0usize; self.n_classes()];
        for &y in &self.labels {
            class_counts[y] += 1;
        }
        let mut feature_stats = Vec::with_capacity(d);
        for j in 0..d {
            let mut sum = 0.0;
            let mut min = f64::INFINITY;
            let mut max = f64::NEG_INFINITY;
            for row in &self.features {
                let v = row[j];
                sum += v;
                min = min.min(v);
                max = max.max(v);
            }
            let mean = sum / n as f64;
            let var = self
                .features
                .iter()
                .map(|row| (row[j] - mean).powi(2))
                .sum::<f64>()
                / n as f64;
            feature_stats.push(FeatureStats {
                name: self.feature_names[j].clone(),
                mean,
                std: var.sqrt(),
                min,
                max,
            });
        }
        DatasetSummary {
            name: self.name.clone(),
            n_samples: n,
            n_features: d,
            n_classes: self.n_classes(),
            class_counts,
            feature_stats,
            missing_count: 0,
        }
    }
}

/// Per-feature population statistics (std uses divisor n).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureStats {
    pub name: String,
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub max: f64,
}

/// Dataset characteristics handed to the recommender.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub name: String,
    pub n_samples: usize,
    pub n_features: usize,
    pub n_classes: usize,
    pub class_counts: Vec<usize>,
    pub feature_stats: Vec<FeatureStats>,
    pub missing_count: usize,
}

/// Assignment of every sample to one of k folds.
#[derive(Debug, Clone, PartialEq)]
pub struct FoldAssignment {
    k: usize,
    fold_of: Vec<usize>,
}

impl FoldAssignment {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn fold_of(&self) -> &[usize] {
        &self.fold_of
    }

    /// Sample indices held out by `fold`, ascending.
    pub fn test_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.fold_of.len())
            .filter(|&i| self.fold_of[i] == fold)
            .collect()
    }

    /// Sample indices used for training when `fold` is held out, ascending.
    pub fn train_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.fold_of.len())
            .filter(|&i| self.fold_of[i] != fold)
            .collect()
    }
}

fn parse_csv(text: &str, name: &str, label: &LabelColumn) -> Result<Dataset, DataError> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or(DataError::Empty)?;
    let columns: Vec<&str> = header.split(',').map(str::trim).collect();
    let label_idx = match label {
        LabelColumn::Name(n) => columns
            .iter()
            .position(|c| c == n)
            .ok_or_else(|| DataError::MissingLabelColumn(label.to_string()))?,
        LabelColumn::Index(i) => {
            if *i >= columns.len() {
                return Err(DataError::MissingLabelColumn(label.to_string()));
            }
            *i
        }
    };

    let mut features = Vec::new();
    let mut labels_raw: Vec<String> = Vec::new();
    for (lineno, line) in lines {
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != columns.len() {
            return Err(DataError::RaggedRow {
                row: lineno + 1,
                got: fields.len(),
                expected: columns.len(),
            });
        }
        let mut row = Vec::with_capacity(columns.len() - 1);
        for (j, field) in fields.iter().enumerate() {
            if j == label_idx {
                continue;
            }
            if field.is_empty() {
                return Err(DataError::MissingCell {
                    row: lineno + 1,
                    column: columns[j].to_string(),
                });
            }
            let v: f64 = field.parse().map_err(|_| DataError::NonNumericCell {
                row: lineno + 1,
                column: columns[j].to_string(),
                value: field.to_string(),
            })?;
            row.push(v);
        }
        let y = fields[label_idx];
        if y.is_empty() {
            return Err(DataError::MissingCell {
                row: lineno + 1,
                column: columns[label_idx].to_string(),
            });
        }
        features.push(row);
        labels_raw.push(y.to_string());
    }

    if features.len() < 2 {
        return Err(DataError::Empty);
    }

    // Factorize labels in first-appearance order.
    let mut class_names: Vec<String> = Vec::new();
    let mut labels = Vec::with_capacity(labels_raw.len());
    for y in &labels_raw {
        let id = match class_names.iter().position(|c| c == y) {
            Some(id) => id,
            None => {
                class_names.push(y.clone());
                class_names.len() - 1
            }
        };
        labels.push(id);
    }
    if class_names.len() < 2 {
        return Err(DataError::SingleClass(class_names[0].clone()));
    }

    let feature_names: Vec<String> = columns
        .iter()
        .enumerate()
        .filter(|(j, _)| *j != label_idx)
        .map(|(_, c)| c.to_string())
        .collect();

    Dataset::from_parts(name, features, labels, feature_names, class_names)
}

/// Load a CSV dataset. The first row is a header; feature columns must be
/// numeric; the label column is factorized in first-appearance order.
pub fn load_csv(path: impl AsRef<Path>, label: &LabelColumn) -> Result<Dataset, DataError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| DataError::Io {
        path: path.display().to_string(),
        reason: e.to_string(),
    })?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string());
    parse_csv(&text, &name, label)
}

/// One of the bundled datasets: `iris`, `wine`, or `breast_cancer`.
pub fn builtin(name: &str) -> Result<Dataset, DataError> {
    let text = match name {
        "iris" => IRIS_CSV,
        "wine" => WINE_CSV,
        "breast_cancer" => BREAST_CANCER_CSV,
        other => return Err(DataError::UnknownBuiltin(other.to_string())),
    };
    parse_csv(text, name, &LabelColumn::Name("target".to_string()))
}

/// Stratified fold assignment: within each class, samples are shuffled by
/// `seed` then dealt round-robin to folds, so fold sizes and per-class
/// per-fold counts each differ by at most one.
pub fn stratified_folds(
    dataset: &Dataset,
    k: usize,
    seed: u64,
) -> Result<FoldAssignment, DataError> {
    if k < 2 {
        return Err(DataError::FoldTooCoarse(k));
    }
    let n_classes = dataset.n_classes();
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); n_classes];
    for (i, &y) in dataset.labels().iter().enumerate() {
        by_class[y].push(i);
    }
    let min_class = by_class
        .iter()
        .filter(|c| !c.is_empty())
        .map(Vec::len)
        .min()
        .unwrap_or(0);
    if k > min_class {
        return Err(DataError::FoldTooFine { k, min_class });
    }

    // One global shuffle of sample indices, so the assignment depends only on
    // the class partition, not on how class ids are numbered.
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..dataset.n_samples()).collect();
    order.shuffle(&mut rng);

    // Deal classes in first-occurrence order; `cursor` staggers the deal so
    // fold sizes stay balanced even when class counts are not multiples of k.
    let mut class_order: Vec<usize> = (0..n_classes)
        .filter(|&c| !by_class[c].is_empty())
        .collect();
    class_order.sort_by_key(|&c| by_class[c][0]);

    let labels = dataset.labels();
    let mut fold_of = vec![0usize; dataset.n_samples()];
    let mut cursor = 0usize;
    for &class in &class_order {
        for &i in order.iter().filter(|&&i| labels[i] == class) {
            fold_of[i] = cursor % k;
            cursor += 1;
        }
    }
    Ok(FoldAssignment { k, fold_of })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::io::Write;

    fn toy_csv(rows: &[&str]) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        for row in rows {
            writeln!(f, "{row}").unwrap();
        }
        f.flush().unwrap();
        f
    }

    #[test]
    fn load_small_csv() {
        let f = toy_csv(&["a,b,target", "1,2,x", "3,4,y", "5,6,x", "7,8,y"]);
        let ds = load_csv(f.path(), &LabelColumn::Name("target".into())).unwrap();
        assert_eq!(ds.n_samples(), 4);
        assert_eq!(ds.n_features(), 2);
        assert_eq!(ds.n_classes(), 2);
        assert_eq!(ds.labels(), &[0, 1, 0, 1]);
        assert_eq!(ds.class_names(), &["x".to_string(), "y".to_string()]);
    }

    #[test]
    fn single_class_rejected() {
        let f = toy_csv(&["a,target", "1,x", "2,x", "3,x"]);
        let err = load_csv(f.path(), &LabelColumn::Name("target".into())).unwrap_err();
        assert!(matches!(err, DataError::SingleClass(_)));
    }

    #[test]
    fn non_numeric_cell_reports_position() {
        let f = toy_csv(&["a,b,target", "1,2,x", "1,oops,y"]);
        let err = load_csv(f.path(), &LabelColumn::Name("target".into())).unwrap_err();
        match err {
            DataError::NonNumericCell { row, column, value } => {
                assert_eq!(row, 3);
                assert_eq!(column, "b");
                assert_eq!(value, "oops");
            }
            other => panic!("unexpected error: {other}"),
        }
    }

    #[test]
    fn missing_file_is_io_error() {
        let err = load_csv("/nonexistent/nope.csv", &LabelColumn::Index(0)).unwrap_err();
        assert!(matches!(err, DataError::Io { .. }));
    }

    #[test]
    fn builtin_shapes() {
        let iris = builtin("iris").unwrap();
        assert_eq!(iris.n_samples(), 150);
        assert_eq!(iris.n_features(), 4);
        assert_eq!(iris.n_classes(), 3);

        let wine = builtin("wine").unwrap();
        assert_eq!(wine.n_samples(), 178);
        assert_eq!(wine.n_classes(), 3);

        let bc = builtin("breast_cancer").unwrap();
        assert_eq!(bc.n_samples(), 569);
        assert_eq!(bc.n_features(), 30);
        assert_eq!(bc.n_classes(), 2);
    }

    #[test]
    fn unknown_builtin_lists_options() {
        let err = builtin("mnist").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("iris") && msg.contains("wine") && msg.contains("breast_cancer"));
    }

    #[test]
    fn summarize_hand_computed() {
        let ds = Dataset::from_parts(
            "toy",
            vec![vec![0.0], vec![2.0]],
            vec![0, 1],
            vec!["f".into()],
            vec!["a".into(), "b".into()],
        )
        .unwrap();
        let s = ds.summarize();
        assert_eq!(s.n_samples, 2);
        assert_eq!(s.class_counts, vec![1, 1]);
        // Population std: mean 1, deviations {-1, +1}, variance 1.
        assert_eq!(s.feature_stats[0].mean, 1.0);
        assert_eq!(s.feature_stats[0].std, 1.0);
        assert_eq!(s.feature_stats[0].min, 0.0);
        assert_eq!(s.feature_stats[0].max, 2.0);
    }

    #[test]
    fn summarize_all_zero_features() {
        let ds = Dataset::from_parts(
            "zeros",
            vec![vec![0.0, 0.0], vec![0.0, 0.0]],
            vec![0, 1],
            vec!["f1".into(), "f2".into()],
            vec!["a".into(), "b".into()],
        )
        .unwrap();
        for fs in ds.summarize().feature_stats {
            assert_eq!(fs.mean, 0.0);
            assert_eq!(fs.std, 0.0);
        }
    }

    #[test]
    fn summarize_wine_classes() {
        assert_eq!(builtin("wine").unwrap().summarize().n_classes, 3);
    }

    #[test]
    fn summarize_is_row_order_invariant() {
        let ds = builtin("iris").unwrap();
        let mut perm: Vec<usize> = (0..ds.n_samples()).collect();
        perm.reverse();
        let (x, y) = ds.subset(&perm);
        let shuffled = Dataset::from_parts(
            ds.name(),
            x,
            y,
            ds.feature_names().to_vec(),
            ds.class_names().to_vec(),
        )
        .unwrap();
        let (a, b) = (ds.summarize(), shuffled.summarize());
        assert_eq!(a.class_counts, b.class_counts);
        // Summation order changes with row order, so moments match to float
        // accumulation accuracy rather than bit-for-bit.
        for (fa, fb) in a.feature_stats.iter().zip(&b.feature_stats) {
            assert!((fa.mean - fb.mean).abs() < 1e-9);
            assert!((fa.std - fb.std).abs() < 1e-9);
            assert_eq!(fa.min, fb.min);
            assert_eq!(fa.max, fb.max);
        }
    }

    fn balanced_binary(n_per_class: usize) -> Dataset {
        let mut features = Vec::new();
        let mut labels = Vec::new();
        for i in 0..2 * n_per_class {
            features.push(vec![i as f64]);
            labels.push(i % 2);
        }
        Dataset::from_parts(
            "toy",
            features,
            labels,
            vec!["f".into()],
            vec!["a".into(), "b".into()],
        )
        .unwrap()
    }

    #[test]
    fn balanced_folds_get_one_per_class() {
        let ds = balanced_binary(5); // n=10, 5 per class
        let folds = stratified_folds(&ds, 5, 0).unwrap();
        for fold in 0..5 {
            let test = folds.test_indices(fold);
            assert_eq!(test.len(), 2);
            let classes: Vec<usize> = test.iter().map(|&i| ds.labels()[i]).collect();
            assert!(classes.contains(&0) && classes.contains(&1));
        }
    }

    #[test]
    fn iris_folds_are_30_with_10_per_class() {
        let ds = builtin("iris").unwrap();
        let folds = stratified_folds(&ds, 5, 42).unwrap();
        for fold in 0..5 {
            let test = folds.test_indices(fold);
            assert_eq!(test.len(), 30);
            let mut counts = [0usize; 3];
            for &i in &test {
                counts[ds.labels()[i]] += 1;
            }
            assert_eq!(counts, [10, 10, 10]);
        }
    }

    #[test]
    fn k_larger_than_smallest_class_rejected() {
        let ds = balanced_binary(5);
        let err = stratified_folds(&ds, 7, 0).unwrap_err();
        assert!(matches!(err, DataError::FoldTooFine { k: 7, min_class: 5 }));
    }

    #[test]
    fn folds_deterministic_per_seed() {
        let ds = builtin("wine").unwrap();
        assert_eq!(
            stratified_folds(&ds, 5, 9).unwrap(),
            stratified_folds(&ds, 5, 9).unwrap()
        );
        assert_ne!(
            stratified_folds(&ds, 5, 9).unwrap(),
            stratified_folds(&ds, 5, 10).unwrap()
        );
    }

    fn write_csv(ds: &Dataset) -> String {
        // Test-only writer used for the load round-trip check.
        let mut out = String::new();
        out.push_str(&ds.feature_names().join(","));
        out.push_str(",target\n");
        for (row, &y) in ds.features().iter().zip(ds.labels()) {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
            out.push_str(&cells.join(","));
            out.push(',');
            out.push_str(&ds.class_names()[y]);
            out.push('\n');
        }
        out
    }

    #[test]
    fn csv_write_load_roundtrip() {
        let ds = builtin("iris").unwrap();
        let text = write_csv(&ds);
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(text.as_bytes()).unwrap();
        f.flush().unwrap();
        let back = load_csv(f.path(), &LabelColumn::Name("target".into())).unwrap();
        assert_eq!(ds.features(), back.features());
        assert_eq!(ds.labels(), back.labels());
        assert_eq!(ds.class_names(), back.class_names());
    }

    proptest! {
        #[test]
        fn stratified_fold_invariants(
            seed in 0u64..200,
            k in 2usize..6,
            class_sizes in proptest::collection::vec(6usize..40, 2..4),
        ) {
            let mut features = Vec::new();
            let mut labels = Vec::new();
            for (c, &size) in class_sizes.iter().enumerate() {
                for i in 0..size {
                    features.push(vec![i as f64, c as f64]);
                    labels.push(c);
                }
            }
            let class_names: Vec<String> = (0..class_sizes.len()).map(|c| format!("c{c}")).collect();
            let ds = Dataset::from_parts("prop", features, labels, vec!["f0".into(), "f1".into()], class_names).unwrap();
            let folds = stratified_folds(&ds, k, seed).unwrap();

            // Folds partition the index set.
            let mut seen = vec![false; ds.n_samples()];
            for fold in 0..k {
                for i in folds.test_indices(fold) {
                    prop_assert!(!seen[i]);
                    seen[i] = true;
                }
            }
            prop_assert!(seen.iter().all(|&s| s));

            // Fold sizes differ by at most one.
            let sizes: Vec<usize> = (0..k).map(|f| folds.test_indices(f).len()).collect();
            prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
            prop_assert!(sizes.iter().all(|&s| s > 0));

            // Per-class counts across folds differ by at most one.
            for c in 0..ds.n_classes() {
                let counts: Vec<usize> = (0..k)
                    .map(|f| folds.test_indices(f).iter().filter(|&&i| ds.labels()[i] == c).count())
                    .collect();
                prop_assert!(counts.iter().max().unwrap() - counts.iter().min().unwrap() <= 1);
            }
        }
    }
}
