//! Labeled datasets: ingestion (CSV, IDX), min-max normalization, splitting,
//! noise injection and the four-blob synthetic set used for robustness checks.
//!
//! Features are stored column-major by sample: an `n x N` matrix whose columns
//! are samples. Labels are contiguous class ids `1..=c`.

use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    name: String,
    features: DMatrix<f64>,
    labels: Vec<usize>,
    num_classes: usize,
    class_index: Vec<Vec<usize>>,
    /// Original label value of each class, `label_values[k]` for class `k + 1`.
    label_values: Vec<i64>,
}

impl LabeledDataset {
    /// Builds a dataset from contiguous labels `1..=num_classes`.
    pub fn new(
        name: impl Into<String>,
        features: DMatrix<f64>,
        labels: Vec<usize>,
        num_classes: usize,
    ) -> Result<Self> {
        let label_values = (1..=num_classes as i64).collect();
        Self::with_label_values(name.into(), features, labels, num_classes, label_values)
    }

    /// Builds a dataset from arbitrary integer labels, remapped to `1..=c` in
    /// order of first appearance.
    pub fn from_raw_labels(
        name: impl Into<String>,
        features: DMatrix<f64>,
        raw: &[i64],
    ) -> Result<Self> {
        let mut seen: HashMap<i64, usize> = HashMap::new();
        let mut label_values = Vec::new();
        let labels = raw
            .iter()
            .map(|&v| {
                *seen.entry(v).or_insert_with(|| {
                    label_values.push(v);
                    label_values.len()
                })
            })
            .collect();
        let c = label_values.len();
        if c < 2 {
            return Err(Error::TooFewClasses(c));
        }
        Self::with_label_values(name.into(), features, labels, c, label_values)
    }

    fn with_label_values(
        name: String,
        features: DMatrix<f64>,
        labels: Vec<usize>,
        num_classes: usize,
        label_values: Vec<i64>,
    ) -> Result<Self> {
        if features.ncols() != labels.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} samples but {} labels",
                features.ncols(),
                labels.len()
            )));
        }
        if features.ncols() == 0 || features.nrows() == 0 {
            return Err(Error::EmptyInput(name));
        }
        let mut class_index = vec![Vec::new(); num_classes];
        for (l, &y) in labels.iter().enumerate() {
            if y == 0 || y > num_classes {
                return Err(Error::InvalidParameter(format!(
                    "label {y} of sample {l} outside 1..={num_classes}"
                )));
            }
            class_index[y - 1].push(l);
        }
        Ok(Self {
            name,
            features,
            labels,
            num_classes,
            class_index,
            label_values,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    /// `n x N` feature matrix, one column per sample.
    pub fn features(&self) -> &DMatrix<f64> {
        &self.features
    }

    pub fn sample(&self, l: usize) -> DVector<f64> {
        self.features.column(l).into_owned()
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn class_index(&self) -> &[Vec<usize>] {
        &self.class_index
    }

    pub fn label_values(&self) -> &[i64] {
        &self.label_values
    }

    pub fn num_features(&self) -> usize {
        self.features.nrows()
    }

    pub fn num_samples(&self) -> usize {
        self.features.ncols()
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    /// Checks the training-set invariants: `N >= c >= 2` and no empty class.
    pub fn check_trainable(&self) -> Result<()> {
        if self.num_classes < 2 {
            return Err(Error::TooFewClasses(self.num_classes));
        }
        if let Some(k) = self.class_index.iter().position(Vec::is_empty) {
            return Err(Error::EmptyClass { class: k + 1 });
        }
        Ok(())
    }

    /// Selects samples by column index, keeping the parent's label space.
    /// The result may be empty, e.g. the test part of a split of tiny classes.
    pub fn subset(&self, indices: &[usize]) -> LabeledDataset {
        let labels: Vec<usize> = indices.iter().map(|&l| self.labels[l]).collect();
        let mut class_index = vec![Vec::new(); self.num_classes];
        for (l, &y) in labels.iter().enumerate() {
            class_index[y - 1].push(l);
        }
        LabeledDataset {
            name: self.name.clone(),
            features: self.features.select_columns(indices),
            labels,
            num_classes: self.num_classes,
            class_index,
            label_values: self.label_values.clone(),
        }
    }

    /// Replaces the feature matrix, keeping labels.
    pub fn map_features(&self, features: DMatrix<f64>) -> LabeledDataset {
        assert_eq!(features.ncols(), self.num_samples());
        LabeledDataset {
            features,
            ..self.clone()
        }
    }

    /// Concatenates two datasets sharing a label space.
    pub fn concat(&self, other: &LabeledDataset) -> Result<LabeledDataset> {
        if self.num_features() != other.num_features() || self.num_classes != other.num_classes {
            return Err(Error::DimensionMismatch(
                "datasets differ in feature or class count".into(),
            ));
        }
        let n = self.num_features();
        let total = self.num_samples() + other.num_samples();
        let mut features = DMatrix::zeros(n, total);
        features
            .columns_mut(0, self.num_samples())
            .copy_from(&self.features);
        features
            .columns_mut(self.num_samples(), other.num_samples())
            .copy_from(&other.features);
        let mut labels = self.labels.clone();
        labels.extend_from_slice(&other.labels);
        Self::with_label_values(
            self.name.clone(),
            features,
            labels,
            self.num_classes,
            self.label_values.clone(),
        )
    }

    /// Writes the dataset as CSV: one row per sample, features then a
    /// `label` column holding the original label values.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut wtr = csv::Writer::from_path(path).map_err(|e| Error::Csv(e.to_string()))?;
        let mut header: Vec<String> = (1..=self.num_features()).map(|j| format!("x{j}")).collect();
        header.push("label".into());
        wtr.write_record(&header)
            .map_err(|e| Error::Csv(e.to_string()))?;
        for l in 0..self.num_samples() {
            let mut row: Vec<String> = self
                .features
                .column(l)
                .iter()
                .map(|v| v.to_string())
                .collect();
            row.push(self.label_values[self.labels[l] - 1].to_string());
            wtr.write_record(&row)
                .map_err(|e| Error::Csv(e.to_string()))?;
        }
        wtr.flush().map_err(|e| Error::io(path, e))
    }
}

/// Which CSV column carries the class label.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LabelColumn {
    Index(usize),
    Name(String),
}

impl Default for LabelColumn {
    fn default() -> Self {
        LabelColumn::Name("label".into())
    }
}

impl std::str::FromStr for LabelColumn {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Ok(match s.parse::<usize>() {
            Ok(i) => LabelColumn::Index(i),
            Err(_) => LabelColumn::Name(s.to_string()),
        })
    }
}

pub fn load_csv(path: impl AsRef<Path>, label_column: &LabelColumn) -> Result<LabeledDataset> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "csv".into());
    parse_csv(&name, &text, label_column)
}

/// Parses CSV text. A first row containing any non-numeric cell is taken as a
/// header. Rows are reported 1-based as they appear in the file.
///
/// `LabelColumn::Index` is 0-based. A `Name` selector needs a header, except
/// that the default name `label` falls back to the last column on headerless
/// input.
pub fn parse_csv(name: &str, text: &str, label_column: &LabelColumn) -> Result<LabeledDataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut records = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::Csv(e.to_string()))?;
        if rec.iter().all(|c| c.is_empty()) {
            continue;
        }
        let line = rec
            .position()
            .map(|p| p.line() as usize)
            .unwrap_or(records.len() + 1);
        records.push((line, rec));
    }
    if records.is_empty() {
        return Err(Error::EmptyInput(name.to_string()));
    }
    let has_header = records[0].1.iter().any(|c| c.parse::<f64>().is_err());
    let header: Option<Vec<String>> =
        has_header.then(|| records[0].1.iter().map(str::to_string).collect());
    let body = if has_header {
        &records[1..]
    } else {
        &records[..]
    };
    if body.is_empty() {
        return Err(Error::EmptyInput(name.to_string()));
    }
    let width = records[0].1.len();
    if width < 2 {
        return Err(Error::Csv(
            "need at least one feature column and a label column".into(),
        ));
    }
    let label_col = match label_column {
        LabelColumn::Index(i) if *i < width => *i,
        LabelColumn::Index(i) => return Err(Error::UnknownColumn(i.to_string())),
        LabelColumn::Name(col) => match &header {
            Some(h) => h
                .iter()
                .position(|c| c == col)
                .ok_or_else(|| Error::UnknownColumn(col.clone()))?,
            None if col == "label" => width - 1,
            None => return Err(Error::UnknownColumn(col.clone())),
        },
    };

    let n = width - 1;
    let mut values = Vec::with_capacity(n * body.len());
    let mut raw_labels = Vec::with_capacity(body.len());
    for (line, rec) in body {
        if rec.len() != width {
            return Err(Error::RaggedRow {
                row: *line,
                expected: width,
                found: rec.len(),
            });
        }
        for (j, cell) in rec.iter().enumerate() {
            if j == label_col {
                let label = cell
                    .parse::<i64>()
                    .ok()
                    .or_else(|| {
                        cell.parse::<f64>()
                            .ok()
                            .filter(|v| v.fract() == 0.0)
                            .map(|v| v as i64)
                    })
                    .ok_or_else(|| Error::BadLabel {
                        row: *line,
                        column: j + 1,
                        value: cell.to_string(),
                    })?;
                raw_labels.push(label);
            } else {
                let v = cell.parse::<f64>().map_err(|_| Error::NonNumeric {
                    row: *line,
                    column: j + 1,
                    value: cell.to_string(),
                })?;
                values.push(v);
            }
        }
    }
    let features = DMatrix::from_column_slice(n, body.len(), &values);
    LabeledDataset::from_raw_labels(name, features, &raw_labels)
}

const IDX_IMAGES_MAGIC: u32 = 0x0000_0803;
const IDX_LABELS_MAGIC: u32 = 0x0000_0801;

fn be_u32(bytes: &[u8], offset: usize, file: &str) -> Result<u32> {
    bytes
        .get(offset..offset + 4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or_else(|| Error::Truncated {
            file: file.to_string(),
            expected: offset + 4,
            found: bytes.len(),
        })
}

/// Loads an IDX image/label pair. Pixels are scaled by 1/255 and each image is
/// flattened row-major into one sample column. Labels are remapped in
/// ascending order, so digits 0-9 become classes 1-10.
pub fn load_idx(
    images_path: impl AsRef<Path>,
    labels_path: impl AsRef<Path>,
) -> Result<LabeledDataset> {
    let images_path = images_path.as_ref();
    let labels_path = labels_path.as_ref();
    let images = fs::read(images_path).map_err(|e| Error::io(images_path, e))?;
    let labels = fs::read(labels_path).map_err(|e| Error::io(labels_path, e))?;
    parse_idx("idx", &images, &labels)
}

/// Returns the dataset together with its image shape `(rows, cols)`.
pub fn parse_idx_with_shape(
    name: &str,
    images: &[u8],
    labels: &[u8],
) -> Result<(LabeledDataset, (usize, usize))> {
    let magic = be_u32(images, 0, "images")?;
    if magic != IDX_IMAGES_MAGIC {
        return Err(Error::BadMagic {
            file: "images".into(),
            expected: IDX_IMAGES_MAGIC,
            found: magic,
        });
    }
    let count = be_u32(images, 4, "images")? as usize;
    let rows = be_u32(images, 8, "images")? as usize;
    let cols = be_u32(images, 12, "images")? as usize;

    let label_magic = be_u32(labels, 0, "labels")?;
    if label_magic != IDX_LABELS_MAGIC {
        return Err(Error::BadMagic {
            file: "labels".into(),
            expected: IDX_LABELS_MAGIC,
            found: label_magic,
        });
    }
    let label_count = be_u32(labels, 4, "labels")? as usize;
    if label_count != count {
        return Err(Error::CountMismatch {
            images: count,
            labels: label_count,
        });
    }
    let n = rows * cols;
    let expected = 16 + count * n;
    if images.len() < expected {
        return Err(Error::Truncated {
            file: "images".into(),
            expected,
            found: images.len(),
        });
    }
    if labels.len() < 8 + count {
        return Err(Error::Truncated {
            file: "labels".into(),
            expected: 8 + count,
            found: labels.len(),
        });
    }
    let features = DMatrix::from_iterator(
        n,
        count,
        images[16..expected].iter().map(|&b| f64::from(b) / 255.0),
    );
    let raw = &labels[8..8 + count];
    let mut distinct: Vec<u8> = raw.to_vec();
    distinct.sort_unstable();
    distinct.dedup();
    if distinct.len() < 2 {
        return Err(Error::TooFewClasses(distinct.len()));
    }
    let ids: Vec<usize> = raw
        .iter()
        .map(|b| distinct.binary_search(b).expect("present") + 1)
        .collect();
    let label_values = distinct.iter().map(|&b| i64::from(b)).collect();
    let data = LabeledDataset::with_label_values(
        name.to_string(),
        features,
        ids,
        distinct.len(),
        label_values,
    )?;
    Ok((data, (rows, cols)))
}

pub fn parse_idx(name: &str, images: &[u8], labels: &[u8]) -> Result<LabeledDataset> {
    parse_idx_with_shape(name, images, labels).map(|(d, _)| d)
}

/// Bilinear resampling of every sample viewed as a row-major `from` image.
pub fn resample_bilinear(
    data: &LabeledDataset,
    from: (usize, usize),
    to: (usize, usize),
) -> Result<LabeledDataset> {
    let (h, w) = from;
    let (h2, w2) = to;
    if h * w != data.num_features() {
        return Err(Error::ShapeMismatch {
            height: h,
            width: w,
            n: data.num_features(),
        });
    }
    if h2 == 0 || w2 == 0 {
        return Err(Error::InvalidParameter(
            "resample target must be nonempty".into(),
        ));
    }
    // Half-pixel centers: destination pixel i samples source coordinate (i + 0.5) * h / h2 - 0.5.
    let axis = |dst: usize, src_len: usize, dst_len: usize| -> (usize, usize, f64) {
        let pos = ((dst as f64 + 0.5) * src_len as f64 / dst_len as f64 - 0.5)
            .clamp(0.0, (src_len - 1) as f64);
        let lo = pos.floor() as usize;
        let hi = (lo + 1).min(src_len - 1);
        (lo, hi, pos - lo as f64)
    };
    let rows: Vec<_> = (0..h2).map(|r| axis(r, h, h2)).collect();
    let cols: Vec<_> = (0..w2).map(|c| axis(c, w, w2)).collect();
    let src = data.features();
    let mut out = DMatrix::zeros(h2 * w2, data.num_samples());
    for l in 0..data.num_samples() {
        let img = src.column(l);
        for (r, &(r0, r1, fr)) in rows.iter().enumerate() {
            for (c, &(c0, c1, fc)) in cols.iter().enumerate() {
                let top = img[r0 * w + c0] * (1.0 - fc) + img[r0 * w + c1] * fc;
                let bottom = img[r1 * w + c0] * (1.0 - fc) + img[r1 * w + c1] * fc;
                out[(r * w2 + c, l)] = top * (1.0 - fr) + bottom * fr;
            }
        }
    }
    Ok(data.map_features(out))
}

/// Maps every feature row to `[0, 1]` by `(x - min) / (max - min)`.
/// Constant features map to 0.
pub fn normalize_minmax(data: &LabeledDataset) -> LabeledDataset {
    let mut features = data.features().clone();
    for mut row in features.row_iter_mut() {
        let (lo, hi) = row
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            });
        let range = hi - lo;
        if range > 0.0 {
            row.apply(|v| *v = (*v - lo) / range);
        } else {
            row.fill(0.0);
        }
    }
    data.map_features(features)
}

fn train_count(fraction: f64, size: usize) -> usize {
    // Guard against 0.7 * 50 landing a hair above 35.
    ((fraction * size as f64) - 1e-9).ceil().max(0.0) as usize
}

/// Seeded train/test split. Stratified mode keeps `ceil(fraction * N_i)`
/// samples of every class for training; both parts keep the parent's label
/// space and the original sample order.
pub fn split(
    data: &LabeledDataset,
    train_fraction: f64,
    seed: u64,
    stratified: bool,
) -> Result<(LabeledDataset, LabeledDataset)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "train fraction {train_fraction} outside (0, 1)"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut is_train = vec![false; data.num_samples()];
    if stratified {
        for members in data.class_index() {
            let mut members = members.clone();
            members.shuffle(&mut rng);
            for &l in &members[..train_count(train_fraction, members.len())] {
                is_train[l] = true;
            }
        }
    } else {
        let mut all: Vec<usize> = (0..data.num_samples()).collect();
        all.shuffle(&mut rng);
        for &l in &all[..train_count(train_fraction, all.len())] {
            is_train[l] = true;
        }
    }
    let (train_idx, test_idx): (Vec<usize>, Vec<usize>) =
        (0..data.num_samples()).partition(|&l| is_train[l]);
    let train = data.subset(&train_idx);
    if let Some(k) = train.class_index().iter().position(Vec::is_empty) {
        return Err(Error::EmptyClass { class: k + 1 });
    }
    Ok((train, data.subset(&test_idx)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseKind {
    FeatureGaussian,
    ImageGaussianBlock,
    ImageBlackBlock,
}

impl NoiseKind {
    pub fn as_str(self) -> &'static str {
        match self {
            NoiseKind::FeatureGaussian => "feature-gaussian",
            NoiseKind::ImageGaussianBlock => "image-gaussian-block",
            NoiseKind::ImageBlackBlock => "image-black-block",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub kind: NoiseKind,
    /// Fraction of features, or of the image area for block kinds.
    pub fraction: f64,
    #[serde(default)]
    pub variance: f64,
    #[serde(default)]
    pub image_shape: Option<(usize, usize)>,
    #[serde(default)]
    pub seed: u64,
}

impl NoiseSpec {
    pub fn feature_gaussian(fraction: f64, variance: f64, seed: u64) -> Self {
        Self {
            kind: NoiseKind::FeatureGaussian,
            fraction,
            variance,
            image_shape: None,
            seed,
        }
    }

    /// Short tag such as `feature-gaussian-30`, used in report file names.
    pub fn label(&self) -> String {
        format!(
            "{}-{}",
            self.kind.as_str(),
            (self.fraction * 100.0).round() as i64
        )
    }

    fn validate(&self, n: usize) -> Result<()> {
        if !(self.fraction > 0.0 && self.fraction <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "noise fraction {} outside (0, 1]",
                self.fraction
            )));
        }
        if !(self.variance >= 0.0 && self.variance.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "noise variance {}",
                self.variance
            )));
        }
        if self.kind != NoiseKind::FeatureGaussian {
            let (h, w) = self
                .image_shape
                .ok_or(Error::MissingImageShape(self.kind.as_str()))?;
            if h * w != n {
                return Err(Error::ShapeMismatch {
                    height: h,
                    width: w,
                    n,
                });
            }
        }
        Ok(())
    }
}

impl fmt::Display for NoiseSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} fraction={} variance={} seed={}",
            self.kind.as_str(),
            self.fraction,
            self.variance,
            self.seed
        )
    }
}

/// Side lengths of a block covering about `fraction` of an `h x w` image.
pub(crate) fn block_sides(fraction: f64, h: usize, w: usize) -> (usize, usize) {
    let bh = ((fraction.sqrt() * h as f64).round() as usize).clamp(1, h);
    let bw = ((fraction * (h * w) as f64 / bh as f64).round() as usize).clamp(1, w);
    (bh, bw)
}

/// Corrupts a dataset. No clamping is applied, so values may leave `[0, 1]`.
pub fn inject_noise(data: &LabeledDataset, spec: &NoiseSpec) -> Result<LabeledDataset> {
    let n = data.num_features();
    spec.validate(n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let normal = Normal::new(0.0, spec.variance.sqrt())
        .map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let mut features = data.features().clone();
    match spec.kind {
        NoiseKind::FeatureGaussian => {
            let count = (spec.fraction * n as f64 + 1e-9).floor() as usize;
            let mut chosen = rand::seq::index::sample(&mut rng, n, count).into_vec();
            chosen.sort_unstable();
            for l in 0..data.num_samples() {
                for &j in &chosen {
                    features[(j, l)] += normal.sample(&mut rng);
                }
            }
        }
        NoiseKind::ImageGaussianBlock | NoiseKind::ImageBlackBlock => {
            let (h, w) = spec.image_shape.expect("validated");
            let (bh, bw) = block_sides(spec.fraction, h, w);
            for l in 0..data.num_samples() {
                let top = rng.random_range(0..=h - bh);
                let left = rng.random_range(0..=w - bw);
                for r in top..top + bh {
                    for c in left..left + bw {
                        let v = &mut features[(r * w + c, l)];
                        if spec.kind == NoiseKind::ImageBlackBlock {
                            *v = 0.0;
                        } else {
                            *v += normal.sample(&mut rng);
                        }
                    }
                }
            }
        }
    }
    Ok(data.map_features(features))
}

/// Blob centers of the four-class synthetic set, along the first axis.
pub const FIG1_CENTERS: [(f64, f64); 4] = [(0.0, 0.0), (3.0, 0.0), (6.0, 0.0), (9.0, 0.0)];
/// Per-axis standard deviation of every blob.
pub const FIG1_STD: (f64, f64) = (0.4, 1.5);
pub const FIG1_SIZES: [usize; 4] = [120, 30, 30, 30];

/// Four 2-D Gaussian blobs of sizes 120/30/30/30. With `with_outliers`, two
/// far-away points are appended to class 1.
pub fn make_synthetic_fig1(seed: u64, with_outliers: bool) -> LabeledDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nx = Normal::new(0.0, FIG1_STD.0).expect("std");
    let ny = Normal::new(0.0, FIG1_STD.1).expect("std");
    let total: usize = FIG1_SIZES.iter().sum::<usize>() + if with_outliers { 2 } else { 0 };
    let mut values = Vec::with_capacity(2 * total);
    let mut labels = Vec::with_capacity(total);
    for (k, (&(cx, cy), &size)) in FIG1_CENTERS.iter().zip(FIG1_SIZES.iter()).enumerate() {
        for _ in 0..size {
            values.push(cx + nx.sample(&mut rng));
            values.push(cy + ny.sample(&mut rng));
            labels.push(k + 1);
        }
    }
    if with_outliers {
        for (x, y) in fig1_outliers() {
            values.push(x);
            values.push(y);
            labels.push(1);
        }
    }
    let name = if with_outliers {
        "fig1-outliers"
    } else {
        "fig1"
    };
    LabeledDataset::new(name, DMatrix::from_vec(2, total, values), labels, 4)
        .expect("valid synthetic set")
}

/// The two outliers: off class 1 along the anti-diagonal, 1.5x the center
/// spread away on each axis.
pub fn fig1_outliers() -> [(f64, f64); 2] {
    let reach = 1.5 * (FIG1_CENTERS[3].0 - FIG1_CENTERS[0].0);
    let (cx, cy) = FIG1_CENTERS[0];
    [(cx - reach, cy + reach), (cx - reach + 1.0, cy + reach)]
}

/// Iris (150 samples, 4 features, 3 classes), bundled with the crate.
pub fn iris() -> LabeledDataset {
    parse_csv(
        "iris",
        include_str!("../data/iris.csv"),
        &LabelColumn::Name("species".into()),
    )
    .expect("bundled iris parses")
}

/// Writes raw bytes; used by tests and tooling that emit IDX files.
pub fn write_idx(
    images_path: impl AsRef<Path>,
    labels_path: impl AsRef<Path>,
    images: &[Vec<u8>],
    rows: usize,
    cols: usize,
    labels: &[u8],
) -> Result<()> {
    let mut img = Vec::with_capacity(16 + images.len() * rows * cols);
    img.extend_from_slice(&IDX_IMAGES_MAGIC.to_be_bytes());
    img.extend_from_slice(&(images.len() as u32).to_be_bytes());
    img.extend_from_slice(&(rows as u32).to_be_bytes());
    img.extend_from_slice(&(cols as u32).to_be_bytes());
    for im in images {
        img.extend_from_slice(im);
    }
    let mut lab = Vec::with_capacity(8 + labels.len());
    lab.extend_from_slice(&IDX_LABELS_MAGIC.to_be_bytes());
    lab.extend_from_slice(&(labels.len() as u32).to_be_bytes());
    lab.extend_from_slice(labels);
    let ip = images_path.as_ref();
    fs::File::create(ip)
        .and_then(|mut f| f.write_all(&img))
        .map_err(|e| Error::io(ip, e))?;
    let lp = labels_path.as_ref();
    fs::File::create(lp)
        .and_then(|mut f| f.write_all(&lab))
        .map_err(|e| Error::io(lp, e))
}
