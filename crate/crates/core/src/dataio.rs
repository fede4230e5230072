//! Dataset ingestion, train/validation splitting, standardization and the
//! synthetic benchmark problems.

use ndarray::{Array1, Array2, Axis};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use thiserror::Error;

pub const TRAIN_FRACTION: f64 = 0.8;
pub const MAX_TRAIN_ROWS: usize = 10_000;
const MIN_ROWS: usize = 5;
const STD_FLOOR: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("missing header")]
    MissingHeader,
    #[error("target column `{0}` not found in header")]
    MissingTarget(String),
    #[error("non-numeric cell `{value}` at data row {row}, column `{column}`")]
    NonNumeric {
        row: usize,
        column: String,
        value: String,
    },
    #[error("row {row} has {found} cells, expected {expected}")]
    RaggedRow {
        row: usize,
        found: usize,
        expected: usize,
    },
    #[error("dataset `{name}` has {rows} rows; at least {MIN_ROWS} are required")]
    TooFewRows { name: String, rows: usize },
    #[error("unknown synthetic problem `{0}`")]
    UnknownSynthetic(String),
    #[error("invalid manifest: {0}")]
    Manifest(String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct RawDataset {
    pub name: String,
    pub feature_names: Vec<String>,
    pub x: Array2<f64>,
    pub y: Array1<f64>,
}

impl RawDataset {
    pub fn n_rows(&self) -> usize {
        self.x.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.x.ncols()
    }
}

/// Per-feature affine map learned on the training partition.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Standardization {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Standardization {
    pub fn fit(x: &Array2<f64>) -> Self {
        let n = x.nrows() as f64;
        let mean: Vec<f64> = x.mean_axis(Axis(0)).expect("non-empty").to_vec();
        let std = x
            .axis_iter(Axis(1))
            .zip(&mean)
            .map(|(col, m)| {
                let var = col.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n;
                let s = var.sqrt();
                if s < STD_FLOOR {
                    1.0
                } else {
                    s
                }
            })
            .collect();
        Self { mean, std }
    }

    pub fn apply(&self, x: &Array2<f64>) -> Array2<f64> {
        let mut out = x.clone();
        for (j, mut col) in out.axis_iter_mut(Axis(1)).enumerate() {
            col.mapv_inplace(|v| (v - self.mean[j]) / self.std[j]);
        }
        out
    }
}

#[derive(Clone, Debug)]
pub struct DatasetSplit {
    pub name: String,
    pub x_train: Array2<f64>,
    pub y_train: Arc<[f64]>,
    pub x_val: Array2<f64>,
    pub y_val: Vec<f64>,
    pub standardization: Standardization,
    pub train_rows: Vec<usize>,
    pub val_rows: Vec<usize>,
}

impl DatasetSplit {
    pub fn n_features(&self) -> usize {
        self.x_train.ncols()
    }
}

/// Seeded 80:20 split with train-only standardization. Features are
/// standardized; the target is left on its original scale.
pub fn make_split(raw: &RawDataset, seed: u64) -> Result<DatasetSplit, DataError> {
    make_split_capped(raw, seed, MAX_TRAIN_ROWS)
}

pub fn make_split_capped(
    raw: &RawDataset,
    seed: u64,
    max_train_rows: usize,
) -> Result<DatasetSplit, DataError> {
    let n = raw.n_rows();
    if n < MIN_ROWS {
        return Err(DataError::TooFewRows {
            name: raw.name.clone(),
            rows: n,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let n_train = ((n as f64) * TRAIN_FRACTION).round() as usize;
    let (train, val) = order.split_at(n_train);
    let mut train_rows = train.to_vec();
    train_rows.truncate(max_train_rows);
    let val_rows = val.to_vec();

    let x_train_raw = raw.x.select(Axis(0), &train_rows);
    let x_val_raw = raw.x.select(Axis(0), &val_rows);
    let standardization = Standardization::fit(&x_train_raw);
    Ok(DatasetSplit {
        name: raw.name.clone(),
        x_train: standardization.apply(&x_train_raw),
        y_train: train_rows.iter().map(|&i| raw.y[i]).collect(),
        x_val: standardization.apply(&x_val_raw),
        y_val: val_rows.iter().map(|&i| raw.y[i]).collect(),
        standardization,
        train_rows,
        val_rows,
    })
}

pub fn load_csv(path: impl AsRef<Path>, target_column: &str) -> Result<RawDataset, DataError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| DataError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".into());
    parse_csv(&text, target_column, name)
}

pub fn parse_csv(text: &str, target_column: &str, name: String) -> Result<RawDataset, DataError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header: Vec<String> = reader.headers()?.iter().map(str::to_owned).collect();
    if header.is_empty() || header.iter().all(|h| h.parse::<f64>().is_ok()) {
        return Err(DataError::MissingHeader);
    }
    let target = header
        .iter()
        .position(|h| h == target_column)
        .ok_or_else(|| DataError::MissingTarget(target_column.to_owned()))?;

    let mut features = Vec::new();
    let mut targets = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record?;
        if record.len() != header.len() {
            return Err(DataError::RaggedRow {
                row,
                found: record.len(),
                expected: header.len(),
            });
        }
        for (col, cell) in record.iter().enumerate() {
            let value: f64 = cell.parse().ok().filter(|v: &f64| v.is_finite()).ok_or_else(|| {
                DataError::NonNumeric {
                    row,
                    column: header[col].clone(),
                    value: cell.to_owned(),
                }
            })?;
            if col == target {
                targets.push(value);
            } else {
                features.push(value);
            }
        }
    }
    let rows = targets.len();
    let d = header.len() - 1;
    let x = Array2::from_shape_vec((rows, d), features).expect("row lengths checked");
    let feature_names = header
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != target)
        .map(|(_, h)| h.clone())
        .collect();
    Ok(RawDataset {
        name,
        feature_names,
        x,
        y: Array1::from(targets),
    })
}

/// Writes `raw` with a header, the target last. Values use the shortest
/// round-trip decimal form, so loading the file back is lossless.
pub fn write_csv(raw: &RawDataset, path: impl AsRef<Path>, target_column: &str) -> Result<(), DataError> {
    let path = path.as_ref();
    let mut writer = csv::Writer::from_path(path)?;
    let mut header = raw.feature_names.clone();
    header.push(target_column.to_owned());
    writer.write_record(&header)?;
    for (row, y) in raw.x.axis_iter(Axis(0)).zip(raw.y.iter()) {
        let mut cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        cells.push(y.to_string());
        writer.write_record(&cells)?;
    }
    writer.flush().map_err(|source| DataError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(())
}

/// Desk-scale regression problems with known generating expressions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SyntheticProblem {
    /// `y = x0 * x1 + x2`
    Product,
    /// `y = sin(pi x0) + x1^2`
    Sine,
    /// Ten features, three active: `y = 1.5 x0 - 2 x3 + 0.5 x7`
    SparseLinear,
    /// `y = x0 / (1 + x1^2) + 0.5 x2`, observed with noise by default.
    Rational,
}

impl SyntheticProblem {
    pub const ALL: [SyntheticProblem; 4] = [
        SyntheticProblem::Product,
        SyntheticProblem::Sine,
        SyntheticProblem::SparseLinear,
        SyntheticProblem::Rational,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SyntheticProblem::Product => "product",
            SyntheticProblem::Sine => "sine",
            SyntheticProblem::SparseLinear => "sparse_linear",
            SyntheticProblem::Rational => "rational",
        }
    }

    pub fn from_name(name: &str) -> Result<Self, DataError> {
        Self::ALL
            .into_iter()
            .find(|p| p.name() == name)
            .ok_or_else(|| DataError::UnknownSynthetic(name.to_owned()))
    }

    pub fn n_features(self) -> usize {
        match self {
            SyntheticProblem::Product | SyntheticProblem::Rational => 3,
            SyntheticProblem::Sine => 2,
            SyntheticProblem::SparseLinear => 10,
        }
    }

    pub fn default_noise(self) -> f64 {
        match self {
            SyntheticProblem::Rational => 0.05,
            _ => 0.0,
        }
    }

    /// Generating expression in canonical tree syntax over the raw features.
    /// The rational target has no exact tree form and returns `None`.
    pub fn ground_truth(self) -> Option<&'static str> {
        match self {
            SyntheticProblem::Product => Some("add(mul(x0,x1),x2)"),
            SyntheticProblem::Sine => Some("add(sin_pi(x0),square(x1))"),
            SyntheticProblem::SparseLinear => Some("add(sub(mul(1.5,x0),mul(2,x3)),mul(0.5,x7))"),
            SyntheticProblem::Rational => None,
        }
    }

    fn target(self, row: &[f64]) -> f64 {
        match self {
            SyntheticProblem::Product => row[0] * row[1] + row[2],
            SyntheticProblem::Sine => (std::f64::consts::PI * row[0]).sin() + row[1] * row[1],
            SyntheticProblem::SparseLinear => 1.5 * row[0] - 2.0 * row[3] + 0.5 * row[7],
            SyntheticProblem::Rational => row[0] / (1.0 + row[1] * row[1]) + 0.5 * row[2],
        }
    }

    /// Inputs are uniform on `[-1, 1]`; `noise` is the standard deviation of
    /// additive Gaussian noise on the target.
    pub fn generate(self, rows: usize, noise: f64, seed: u64) -> RawDataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (self as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        let d = self.n_features();
        let x = Array2::from_shape_simple_fn((rows, d), || rng.gen_range(-1.0..=1.0));
        let normal = Normal::new(0.0, noise.max(0.0)).expect("finite noise");
        let y: Array1<f64> = x
            .axis_iter(Axis(0))
            .map(|row| {
                let clean = self.target(row.as_slice().expect("row-major"));
                if noise > 0.0 {
                    clean + normal.sample(&mut rng)
                } else {
                    clean
                }
            })
            .collect();
        RawDataset {
            name: self.name().to_owned(),
            feature_names: (0..d).map(|i| format!("x{i}")).collect(),
            x,
            y,
        }
    }
}

/// The four-problem synthetic suite at the given size, each problem with its
/// default noise level.
pub fn synthetic_suite(seed: u64, rows: usize) -> Vec<RawDataset> {
    SyntheticProblem::ALL
        .iter()
        .map(|p| p.generate(rows, p.default_noise(), seed))
        .collect()
}

/// One entry of a dataset manifest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum DatasetSpec {
    Csv {
        path: PathBuf,
        #[serde(default = "default_target")]
        target: String,
    },
    Synthetic {
        problem: SyntheticProblem,
        #[serde(default = "default_rows")]
        rows: usize,
        #[serde(default)]
        noise: Option<f64>,
        #[serde(default)]
        seed: u64,
    },
}

fn default_target() -> String {
    "y".into()
}

fn default_rows() -> usize {
    500
}

impl DatasetSpec {
    /// Loads the dataset; relative CSV paths resolve against `base_dir`.
    pub fn load(&self, base_dir: &Path) -> Result<RawDataset, DataError> {
        match self {
            DatasetSpec::Csv { path, target } => {
                let path = if path.is_absolute() {
                    path.clone()
                } else {
                    base_dir.join(path)
                };
                load_csv(path, target)
            }
            DatasetSpec::Synthetic {
                problem,
                rows,
                noise,
                seed,
            } => Ok(problem.generate(*rows, noise.unwrap_or(problem.default_noise()), *seed)),
        }
    }
}

/// JSON list of datasets used to score operator candidates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub datasets: Vec<DatasetSpec>,
    #[serde(default)]
    pub split_seed: u64,
}

impl DatasetManifest {
    pub fn from_file(path: impl AsRef<Path>) -> Result<(Self, PathBuf), DataError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| DataError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let manifest: DatasetManifest =
            serde_json::from_str(&text).map_err(|e| DataError::Manifest(e.to_string()))?;
        if manifest.datasets.is_empty() {
            return Err(DataError::Manifest("no datasets listed".into()));
        }
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok((manifest, base))
    }

    pub fn load_splits(&self, base_dir: &Path) -> Result<Vec<DatasetSplit>, DataError> {
        self.datasets
            .iter()
            .map(|spec| make_split(&spec.load(base_dir)?, self.split_seed))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exprtree::ExpressionTree;
    use crate::fitness::r2_score;

    #[test]
    fn parse_three_rows() {
        let raw = parse_csv("a,b,y\n1,2,3\n4,5,6\n7,8,9\n", "y", "t".into()).unwrap();
        assert_eq!(raw.x.dim(), (3, 2));
        assert_eq!(raw.y.to_vec(), vec![3.0, 6.0, 9.0]);
        assert_eq!(raw.feature_names, vec!["a", "b"]);
    }

    #[test]
    fn target_may_be_any_column() {
        let raw = parse_csv("y,a\n1,2\n3,4\n", "y", "t".into()).unwrap();
        assert_eq!(raw.y.to_vec(), vec![1.0, 3.0]);
        assert_eq!(raw.x.column(0).to_vec(), vec![2.0, 4.0]);
    }

    #[test]
    fn headerless_file_rejected() {
        let err = parse_csv("1,2,3\n4,5,6\n", "y", "t".into()).unwrap_err();
        assert_eq!(err.to_string(), "missing header");
    }

    #[test]
    fn missing_target_rejected() {
        let err = parse_csv("a,b\n1,2\n", "y", "t".into()).unwrap_err();
        assert!(matches!(err, DataError::MissingTarget(t) if t == "y"));
    }

    #[test]
    fn non_numeric_cell_reports_row() {
        let err = parse_csv("a,y\n1,2\n3,oops\n", "y", "t".into()).unwrap_err();
        match err {
            DataError::NonNumeric { row, column, .. } => {
                assert_eq!(row, 1);
                assert_eq!(column, "y");
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn csv_round_trip_is_bit_exact() {
        let raw = SyntheticProblem::Rational.generate(40, 0.1, 3);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rational.csv");
        write_csv(&raw, &path, "y").unwrap();
        let back = load_csv(&path, "y").unwrap();
        assert_eq!(back.x, raw.x);
        assert_eq!(back.y, raw.y);
    }

    #[test]
    fn ten_rows_split_eight_two() {
        let raw = SyntheticProblem::Product.generate(10, 0.0, 1);
        let split = make_split(&raw, 7).unwrap();
        assert_eq!(split.x_train.nrows(), 8);
        assert_eq!(split.x_val.nrows(), 2);
    }

    #[test]
    fn split_is_a_partition_and_deterministic() {
        let raw = SyntheticProblem::Sine.generate(57, 0.0, 1);
        let a = make_split(&raw, 3).unwrap();
        let b = make_split(&raw, 3).unwrap();
        assert_eq!(a.train_rows, b.train_rows);
        assert_eq!(a.val_rows, b.val_rows);
        let mut all: Vec<usize> = a.train_rows.iter().chain(&a.val_rows).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..57).collect::<Vec<_>>());
        assert!((a.train_rows.len() as f64 - 0.8 * 57.0).abs() <= 1.0);
    }

    #[test]
    fn train_features_are_standardized() {
        let mut raw = SyntheticProblem::SparseLinear.generate(200, 0.0, 5);
        raw.x.column_mut(4).fill(3.0);
        let split = make_split(&raw, 1).unwrap();
        for (j, col) in split.x_train.axis_iter(Axis(1)).enumerate() {
            let n = col.len() as f64;
            let mean = col.sum() / n;
            let std = (col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
            assert!(mean.abs() <= 1e-9);
            if j == 4 {
                assert_eq!(std, 0.0);
            } else {
                assert!((std - 1.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn too_few_rows() {
        let raw = SyntheticProblem::Product.generate(4, 0.0, 1);
        assert!(matches!(make_split(&raw, 0), Err(DataError::TooFewRows { .. })));
    }

    #[test]
    fn train_rows_are_capped() {
        let raw = SyntheticProblem::Product.generate(50, 0.0, 1);
        let split = make_split_capped(&raw, 0, 10).unwrap();
        assert_eq!(split.x_train.nrows(), 10);
        assert_eq!(split.x_val.nrows(), 10);
    }

    #[test]
    fn ground_truth_trees_fit_noiseless_targets() {
        for problem in [
            SyntheticProblem::Product,
            SyntheticProblem::Sine,
            SyntheticProblem::SparseLinear,
        ] {
            let raw = problem.generate(300, 0.0, 9);
            let tree: ExpressionTree = problem.ground_truth().unwrap().parse().unwrap();
            let pred = tree.evaluate(raw.x.view()).unwrap();
            assert!(r2_score(&pred, raw.y.as_slice().unwrap()) >= 1.0 - 1e-10);
        }
    }

    #[test]
    fn noisy_target_not_perfectly_fit() {
        let raw = SyntheticProblem::Product.generate(300, 0.1, 9);
        let tree: ExpressionTree = "add(mul(x0,x1),x2)".parse().unwrap();
        let pred = tree.evaluate(raw.x.view()).unwrap();
        assert!(r2_score(&pred, raw.y.as_slice().unwrap()) < 1.0);
    }

    #[test]
    fn seeds_change_values_not_schema() {
        let a = synthetic_suite(1, 30);
        let b = synthetic_suite(2, 30);
        assert_eq!(a.len(), 4);
        for (da, db) in a.iter().zip(&b) {
            assert_eq!(da.feature_names, db.feature_names);
            assert_eq!(da.x.dim(), db.x.dim());
            assert_ne!(da.x, db.x);
        }
    }

    #[test]
    fn manifest_parses_both_sources() {
        let text = r#"{"datasets":[
            {"source":"synthetic","problem":"product","rows":40},
            {"source":"csv","path":"data/a.csv","target":"out"}
        ],"split_seed":3}"#;
        let m: DatasetManifest = serde_json::from_str(text).unwrap();
        assert_eq!(m.datasets.len(), 2);
        assert_eq!(m.split_seed, 3);
    }
}
