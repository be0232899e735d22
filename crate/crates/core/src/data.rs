//! Labeled datasets: CSV ingestion and emission, min-max normalization into
//! the unit hypercube, seeded splitting and synthetic generators.

use std::collections::BTreeSet;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SimapError};

pub const DEFAULT_LABEL_COLUMN: &str = "label";

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    points: Vec<Vec<f64>>,
    labels: Vec<usize>,
    class_count: usize,
    feature_names: Vec<String>,
    /// Original label value of each dense class index.
    label_values: Vec<i64>,
}

impl LabeledDataset {
    pub fn new(points: Vec<Vec<f64>>, labels: Vec<usize>, class_count: usize) -> Result<Self> {
        let dim = points.first().map_or(0, Vec::len);
        let feature_names = (0..dim).map(|i| format!("x{i}")).collect();
        let label_values = (0..class_count as i64).collect();
        Self::with_metadata(points, labels, class_count, feature_names, label_values)
    }

    pub fn with_metadata(
        points: Vec<Vec<f64>>,
        labels: Vec<usize>,
        class_count: usize,
        feature_names: Vec<String>,
        label_values: Vec<i64>,
    ) -> Result<Self> {
        if points.is_empty() {
            return Err(SimapError::EmptyDataset);
        }
        if points.len() != labels.len() {
            return Err(SimapError::DimensionMismatch {
                expected: points.len(),
                found: labels.len(),
            });
        }
        let dim = points[0].len();
        if dim == 0 {
            return Err(SimapError::ZeroDimension);
        }
        if let Some(p) = points.iter().find(|p| p.len() != dim) {
            return Err(SimapError::DimensionMismatch {
                expected: dim,
                found: p.len(),
            });
        }
        if let Some(&label) = labels.iter().find(|&&l| l >= class_count) {
            return Err(SimapError::InvalidLabel {
                label,
                classes: class_count,
            });
        }
        if feature_names.len() != dim || label_values.len() != class_count {
            return Err(SimapError::InvalidConfig(
                "dataset metadata does not match its shape".into(),
            ));
        }
        Ok(Self {
            points,
            labels,
            class_count,
            feature_names,
            label_values,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points[0].len()
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn label_values(&self) -> &[i64] {
        &self.label_values
    }

    pub fn onehot(&self, i: usize) -> Vec<f64> {
        let mut v = vec![0.0; self.class_count];
        v[self.labels[i]] = 1.0;
        v
    }

    pub fn onehots(&self) -> Vec<Vec<f64>> {
        (0..self.len()).map(|i| self.onehot(i)).collect()
    }

    /// Same labels and metadata, new coordinates.
    pub fn with_points(&self, points: Vec<Vec<f64>>) -> Result<Self> {
        Self::with_metadata(
            points,
            self.labels.clone(),
            self.class_count,
            self.feature_names.clone(),
            self.label_values.clone(),
        )
    }

    fn subset(&self, idx: &[usize]) -> Result<Self> {
        Self::with_metadata(
            idx.iter().map(|&i| self.points[i].clone()).collect(),
            idx.iter().map(|&i| self.labels[i]).collect(),
            self.class_count,
            self.feature_names.clone(),
            self.label_values.clone(),
        )
    }
}

/// Per-dimension affine map `(x - shift) / scale` into `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizationTransform {
    pub shift: Vec<f64>,
    pub scale: Vec<f64>,
}

/// Output of [`NormalizationTransform::apply`].
#[derive(Debug, Clone, PartialEq)]
pub struct Normalized {
    pub points: Vec<Vec<f64>>,
    /// Indices of points with some coordinate outside `[0, 1]` before
    /// clamping.
    pub out_of_range: Vec<usize>,
}

impl NormalizationTransform {
    /// Min-max fit. A constant dimension maps to 0.5.
    pub fn fit(dataset: &LabeledDataset) -> Result<Self> {
        Self::fit_points(dataset.points())
    }

    pub fn fit_points(points: &[Vec<f64>]) -> Result<Self> {
        let first = points.first().ok_or(SimapError::EmptyDataset)?;
        let mut lo = first.clone();
        let mut hi = first.clone();
        for p in points {
            for (d, &v) in p.iter().enumerate() {
                lo[d] = lo[d].min(v);
                hi[d] = hi[d].max(v);
            }
        }
        let (shift, scale) = lo
            .iter()
            .zip(&hi)
            .map(|(&l, &h)| if h > l { (l, h - l) } else { (l - 0.5, 1.0) })
            .unzip();
        Ok(Self { shift, scale })
    }

    pub fn dim(&self) -> usize {
        self.shift.len()
    }

    pub fn apply_point(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim() {
            return Err(SimapError::DimensionMismatch {
                expected: self.dim(),
                found: x.len(),
            });
        }
        Ok(x.iter()
            .zip(self.shift.iter().zip(&self.scale))
            .map(|(v, (s, k))| (v - s) / k)
            .collect())
    }

    pub fn apply(&self, points: &[Vec<f64>], clamp: bool) -> Result<Normalized> {
        let mut out = Vec::with_capacity(points.len());
        let mut out_of_range = Vec::new();
        for (i, p) in points.iter().enumerate() {
            let mut q = self.apply_point(p)?;
            if q.iter().any(|v| !(0.0..=1.0).contains(v)) {
                out_of_range.push(i);
                if clamp {
                    q.iter_mut().for_each(|v| *v = v.clamp(0.0, 1.0));
                }
            }
            out.push(q);
        }
        Ok(Normalized {
            points: out,
            out_of_range,
        })
    }

    pub fn apply_dataset(
        &self,
        dataset: &LabeledDataset,
        clamp: bool,
    ) -> Result<(LabeledDataset, Vec<usize>)> {
        let n = self.apply(dataset.points(), clamp)?;
        Ok((dataset.with_points(n.points)?, n.out_of_range))
    }

    /// Maps normalized coordinates back to the original axes.
    pub fn invert_point(&self, y: &[f64]) -> Vec<f64> {
        y.iter()
            .zip(self.shift.iter().zip(&self.scale))
            .map(|(v, (s, k))| v * k + s)
            .collect()
    }
}

/// The eight XOR-style anchors, label 0 on the diagonal and 1 off it.
const XOR_ANCHORS: [[f64; 2]; 8] = [
    [1.0, 1.0],
    [1.5, 1.5],
    [2.5, 2.5],
    [3.0, 3.0],
    [1.0, 3.0],
    [1.5, 2.5],
    [2.5, 1.5],
    [3.0, 1.0],
];

/// `n_per_cluster` copies of each XOR anchor, jittered by isotropic
/// Gaussian noise of standard deviation `noise_sd`. Anchor-major order.
pub fn generate_xor(n_per_cluster: usize, noise_sd: f64, seed: u64) -> Result<LabeledDataset> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = Vec::with_capacity(8 * n_per_cluster);
    let mut labels = Vec::with_capacity(8 * n_per_cluster);
    for (i, anchor) in XOR_ANCHORS.iter().enumerate() {
        for _ in 0..n_per_cluster {
            let p = anchor
                .iter()
                .map(|&a| {
                    if noise_sd > 0.0 {
                        a + noise_sd * rng.sample::<f64, _>(StandardNormal)
                    } else {
                        a
                    }
                })
                .collect();
            points.push(p);
            labels.push(usize::from(i >= 4));
        }
    }
    LabeledDataset::new(points, labels, 2)
}

/// Parameters of the two-cluster binary generator.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub n_samples: usize,
    pub n_features: usize,
    /// Cluster centers sit at `-class_sep` and `+class_sep` along every
    /// informative feature.
    pub class_sep: f64,
    pub n_informative: usize,
    /// Fraction of labels replaced by a uniformly random class.
    pub flip_rate: f64,
    pub seed: u64,
}

impl SyntheticSpec {
    pub fn new(n_samples: usize, n_features: usize, class_sep: f64, seed: u64) -> Self {
        Self {
            n_samples,
            n_features,
            class_sep,
            n_informative: n_features.min(2),
            flip_rate: 0.01,
            seed,
        }
    }
}

pub fn generate_classification(
    n_samples: usize,
    n_features: usize,
    class_sep: f64,
    seed: u64,
) -> Result<LabeledDataset> {
    generate_classification_with(&SyntheticSpec::new(n_samples, n_features, class_sep, seed))
}

/// Two unit-variance Gaussian clusters on opposite corners of the
/// informative subspace, the remaining features pure noise, classes
/// balanced before label flipping.
pub fn generate_classification_with(spec: &SyntheticSpec) -> Result<LabeledDataset> {
    if spec.n_samples < 2 || spec.n_features < 2 {
        return Err(SimapError::InvalidConfig(
            "the generator needs at least 2 samples and 2 features".into(),
        ));
    }
    if spec.n_informative == 0 || spec.n_informative > spec.n_features {
        return Err(SimapError::InvalidConfig(format!(
            "{} informative features out of {}",
            spec.n_informative, spec.n_features
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut labels: Vec<usize> = (0..spec.n_samples)
        .map(|i| usize::from(i >= spec.n_samples / 2))
        .collect();
    labels.shuffle(&mut rng);
    let points = labels
        .iter()
        .map(|&y| {
            let center = if y == 0 {
                -spec.class_sep
            } else {
                spec.class_sep
            };
            (0..spec.n_features)
                .map(|d| {
                    let z: f64 = rng.sample(StandardNormal);
                    if d < spec.n_informative {
                        center + z
                    } else {
                        z
                    }
                })
                .collect()
        })
        .collect();
    for y in labels.iter_mut() {
        if rng.random::<f64>() < spec.flip_rate {
            *y = rng.random_range(0..2);
        }
    }
    LabeledDataset::new(points, labels, 2)
}

/// Seeded shuffle, then the first `round(train_fraction * N)` points (at
/// least one, and leaving at least one) go to the training set.
pub fn split(
    dataset: &LabeledDataset,
    train_fraction: f64,
    seed: u64,
) -> Result<(LabeledDataset, LabeledDataset)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(SimapError::InvalidFraction(train_fraction));
    }
    let n = dataset.len();
    if n < 2 {
        return Err(SimapError::InvalidConfig(
            "splitting needs at least two points".into(),
        ));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_train = ((train_fraction * n as f64).round() as usize).clamp(1, n - 1);
    Ok((
        dataset.subset(&idx[..n_train])?,
        dataset.subset(&idx[n_train..])?,
    ))
}

/// Reads a CSV with a header row. Every column except `label_column` is a
/// feature; labels are integers re-indexed densely in ascending order.
pub fn load_csv(path: impl AsRef<Path>, label_column: &str) -> Result<LabeledDataset> {
    load_csv_with_labels(path, label_column, None)
}

/// Like [`load_csv`] but with a fixed label alphabet, e.g. the one a model
/// was trained with. Labels outside it are rejected.
pub fn load_csv_with_labels(
    path: impl AsRef<Path>,
    label_column: &str,
    known_labels: Option<&[i64]>,
) -> Result<LabeledDataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)?;
    let header = reader.headers()?.clone();
    let label_idx = header
        .iter()
        .position(|h| h == label_column)
        .ok_or_else(|| SimapError::MissingLabelColumn(label_column.to_string()))?;
    let feature_names: Vec<String> = header
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != label_idx)
        .map(|(_, h)| h.to_string())
        .collect();

    let mut points = Vec::new();
    let mut raw_labels = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            SimapError::Malformed {
                line,
                message: e.to_string(),
            }
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let mut point = Vec::with_capacity(feature_names.len());
        for (i, field) in record.iter().enumerate() {
            if i == label_idx {
                let label = field.parse::<i64>().map_err(|_| SimapError::Malformed {
                    line,
                    message: format!("label `{field}` is not an integer"),
                })?;
                raw_labels.push(label);
            } else {
                let v = field
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| SimapError::Malformed {
                        line,
                        message: format!(
                            "feature `{}` value `{field}` is not a number",
                            header.get(i).unwrap_or("?")
                        ),
                    })?;
                point.push(v);
            }
        }
        points.push(point);
    }
    if points.is_empty() {
        return Err(SimapError::EmptyDataset);
    }

    let label_values: Vec<i64> = match known_labels {
        Some(known) => known.to_vec(),
        None => raw_labels
            .iter()
            .copied()
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect(),
    };
    let labels = raw_labels
        .iter()
        .map(|raw| {
            label_values
                .binary_search(raw)
                .ok()
                .or_else(|| label_values.iter().position(|v| v == raw))
                .ok_or_else(|| SimapError::InvalidConfig(format!("unknown label {raw}")))
        })
        .collect::<Result<Vec<_>>>()?;
    let classes = label_values.len();
    LabeledDataset::with_metadata(points, labels, classes, feature_names, label_values)
}

/// Writes features in column order followed by the original label values.
/// Floats use the shortest representation that parses back exactly.
pub fn write_csv(
    dataset: &LabeledDataset,
    path: impl AsRef<Path>,
    label_column: &str,
) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    let mut header: Vec<&str> = dataset.feature_names.iter().map(String::as_str).collect();
    header.push(label_column);
    writer.write_record(&header)?;
    for (p, &l) in dataset.points.iter().zip(&dataset.labels) {
        let mut row: Vec<String> = p.iter().map(|v| v.to_string()).collect();
        row.push(dataset.label_values[l].to_string());
        writer.write_record(&row)?;
    }
    writer.flush()?;
    Ok(())
}
