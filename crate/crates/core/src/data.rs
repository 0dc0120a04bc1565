//! Expression-matrix data model: CSV ingestion, two-class views and a
//! synthetic generator with planted biomarkers.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An m×n abundance matrix with sample ids, feature names and one
/// categorical label per sample. Immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpressionMatrix {
    sample_ids: Vec<String>,
    feature_names: Vec<String>,
    labels: Vec<String>,
    /// Row-major, m rows × n columns.
    values: Vec<f64>,
}

impl ExpressionMatrix {
    pub fn new(
        sample_ids: Vec<String>,
        feature_names: Vec<String>,
        labels: Vec<String>,
        values: Vec<f64>,
    ) -> Result<Self> {
        let m = sample_ids.len();
        let n = feature_names.len();
        if labels.len() != m {
            return Err(Error::InvalidSpec(format!(
                "{} labels for {} samples",
                labels.len(),
                m
            )));
        }
        if values.len() != m * n {
            return Err(Error::InvalidSpec(format!(
                "value buffer has {} entries, expected {}x{}",
                values.len(),
                m,
                n
            )));
        }
        let mut seen = HashSet::new();
        for id in &sample_ids {
            if !seen.insert(id.as_str()) {
                return Err(Error::DuplicateSampleId(id.clone()));
            }
        }
        let mut seen = HashSet::new();
        for name in &feature_names {
            if !seen.insert(name.as_str()) {
                return Err(Error::DuplicateFeatureName(name.clone()));
            }
        }
        for (idx, v) in values.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFiniteValue {
                    row: idx / n + 1,
                    column: feature_names[idx % n].clone(),
                });
            }
        }
        Ok(Self {
            sample_ids,
            feature_names,
            labels,
            values,
        })
    }

    pub fn n_samples(&self) -> usize {
        self.sample_ids.len()
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn value(&self, sample: usize, feature: usize) -> f64 {
        self.values[sample * self.n_features() + feature]
    }

    pub fn row(&self, sample: usize) -> &[f64] {
        let n = self.n_features();
        &self.values[sample * n..(sample + 1) * n]
    }

    pub fn sample_ids(&self) -> &[String] {
        &self.sample_ids
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Replace every value with its log2. Values must be strictly positive.
    pub fn log2_transform(&self) -> Result<Self> {
        let n = self.n_features();
        let mut values = Vec::with_capacity(self.values.len());
        for (idx, v) in self.values.iter().enumerate() {
            if *v <= 0.0 {
                return Err(Error::NonFiniteValue {
                    row: idx / n + 1,
                    column: self.feature_names[idx % n].clone(),
                });
            }
            values.push(v.log2());
        }
        Ok(Self {
            sample_ids: self.sample_ids.clone(),
            feature_names: self.feature_names.clone(),
            labels: self.labels.clone(),
            values,
        })
    }
}

/// Parse a sample-major CSV: header `sample_id,label,<feature_1>,...`,
/// one row per sample.
pub fn load_csv(path: impl AsRef<Path>) -> Result<ExpressionMatrix> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    load_csv_str(&text)
}

pub fn load_csv_str(text: &str) -> Result<ExpressionMatrix> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(text.as_bytes());
    let mut records = reader.records();

    let header = match records.next() {
        Some(Ok(rec)) => rec,
        Some(Err(e)) => return Err(Error::MalformedHeader(e.to_string())),
        None => return Err(Error::MalformedHeader("empty file".into())),
    };
    if header.len() < 3 {
        return Err(Error::MalformedHeader(
            "expected at least `sample_id,label,<feature>` columns".into(),
        ));
    }
    if &header[0] != "sample_id" {
        return Err(Error::MalformedHeader(format!(
            "first column must be `sample_id`, found {:?}",
            &header[0]
        )));
    }
    if &header[1] != "label" {
        return Err(Error::MalformedHeader(format!(
            "second column must be `label`, found {:?}",
            &header[1]
        )));
    }
    let feature_names: Vec<String> = header.iter().skip(2).map(str::to_owned).collect();
    for (i, name) in feature_names.iter().enumerate() {
        if name.is_empty() {
            return Err(Error::MalformedHeader(format!(
                "feature column {} has an empty name",
                i + 1
            )));
        }
    }
    let n = feature_names.len();

    let mut sample_ids = Vec::new();
    let mut labels = Vec::new();
    let mut values = Vec::new();
    for (row_idx, rec) in records.enumerate() {
        let row = row_idx + 1;
        let rec = rec.map_err(|e| Error::MalformedHeader(e.to_string()))?;
        if rec.len() != n + 2 {
            return Err(Error::RaggedRow {
                row,
                got: rec.len(),
                expected: n + 2,
            });
        }
        sample_ids.push(rec[0].to_owned());
        labels.push(rec[1].to_owned());
        for (j, cell) in rec.iter().skip(2).enumerate() {
            let v: f64 = cell.parse().map_err(|_| Error::NonNumericCell {
                row,
                column: feature_names[j].clone(),
                token: cell.to_owned(),
            })?;
            if !v.is_finite() {
                return Err(Error::NonFiniteValue {
                    row,
                    column: feature_names[j].clone(),
                });
            }
            values.push(v);
        }
    }
    ExpressionMatrix::new(sample_ids, feature_names, labels, values)
}

/// Serialize in the same layout `load_csv` expects. f64 values are printed
/// with the shortest representation that round-trips exactly.
pub fn write_csv(matrix: &ExpressionMatrix, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, to_csv_string(matrix)).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn to_csv_string(matrix: &ExpressionMatrix) -> String {
    let mut out = String::new();
    out.push_str("sample_id,label");
    for name in matrix.feature_names() {
        out.push(',');
        out.push_str(name);
    }
    out.push('\n');
    for i in 0..matrix.n_samples() {
        out.push_str(&matrix.sample_ids()[i]);
        out.push(',');
        out.push_str(&matrix.labels()[i]);
        for v in matrix.row(i) {
            let _ = write!(out, ",{v}");
        }
        out.push('\n');
    }
    out
}

/// Two-class slice of an [`ExpressionMatrix`]: retained row indices plus the
/// label assignment. Holds only indices, never copies columns.
#[derive(Debug, Clone)]
pub struct BinaryView<'a> {
    base: &'a ExpressionMatrix,
    positive_label: String,
    negative_label: String,
    sample_indices: Vec<usize>,
}

impl<'a> BinaryView<'a> {
    pub fn base(&self) -> &'a ExpressionMatrix {
        self.base
    }

    pub fn positive_label(&self) -> &str {
        &self.positive_label
    }

    pub fn negative_label(&self) -> &str {
        &self.negative_label
    }

    /// Retained row indices into the base matrix, in original order.
    pub fn sample_indices(&self) -> &[usize] {
        &self.sample_indices
    }

    pub fn n_samples(&self) -> usize {
        self.sample_indices.len()
    }

    pub fn n_features(&self) -> usize {
        self.base.n_features()
    }

    pub fn value(&self, sample: usize, feature: usize) -> f64 {
        self.base.value(self.sample_indices[sample], feature)
    }

    pub fn row(&self, sample: usize) -> &[f64] {
        self.base.row(self.sample_indices[sample])
    }

    pub fn is_positive(&self, sample: usize) -> bool {
        self.base.labels()[self.sample_indices[sample]] == self.positive_label
    }

    /// +1 for the positive class, -1 for the negative class.
    pub fn sign(&self, sample: usize) -> f64 {
        if self.is_positive(sample) {
            1.0
        } else {
            -1.0
        }
    }

    pub fn class_counts(&self) -> (usize, usize) {
        let pos = (0..self.n_samples()).filter(|&i| self.is_positive(i)).count();
        (self.n_samples() - pos, pos)
    }

    /// View with one retained sample removed (LOOCV training fold).
    pub fn without_sample(&self, sample: usize) -> BinaryView<'a> {
        let mut sample_indices = self.sample_indices.clone();
        sample_indices.remove(sample);
        BinaryView {
            base: self.base,
            positive_label: self.positive_label.clone(),
            negative_label: self.negative_label.clone(),
            sample_indices,
        }
    }
}

/// Restrict a matrix to the samples carrying either of two class tags.
pub fn binary_view<'a>(
    matrix: &'a ExpressionMatrix,
    negative: &str,
    positive: &str,
) -> Result<BinaryView<'a>> {
    if negative == positive {
        return Err(Error::IdenticalLabels(negative.to_owned()));
    }
    for tag in [negative, positive] {
        if !matrix.labels().iter().any(|l| l == tag) {
            return Err(Error::UnknownLabel(tag.to_owned()));
        }
    }
    let sample_indices: Vec<usize> = matrix
        .labels()
        .iter()
        .enumerate()
        .filter(|(_, l)| *l == negative || *l == positive)
        .map(|(i, _)| i)
        .collect();
    for tag in [negative, positive] {
        let count = sample_indices
            .iter()
            .filter(|&&i| matrix.labels()[i] == tag)
            .count();
        if count < 2 {
            return Err(Error::TooFewSamples {
                label: tag.to_owned(),
                count,
                min: 2,
            });
        }
    }
    Ok(BinaryView {
        base: matrix,
        positive_label: positive.to_owned(),
        negative_label: negative.to_owned(),
        sample_indices,
    })
}

/// Recipe for a synthetic two-class dataset with planted biomarkers.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SynthSpec {
    pub m_per_class: usize,
    pub n: usize,
    pub n_planted: usize,
    /// Class-mean shift of planted features, in units of within-class sigma.
    pub effect_size: f64,
    /// Size of correlated feature blocks; 1 = independent features.
    pub correlation_block: usize,
    pub seed: u64,
}

impl SynthSpec {
    fn validate(&self) -> Result<()> {
        if self.n_planted > self.n {
            return Err(Error::InvalidSpec(format!(
                "n_planted = {} exceeds n = {}",
                self.n_planted, self.n
            )));
        }
        if self.m_per_class < 2 {
            return Err(Error::InvalidSpec("m_per_class must be >= 2".into()));
        }
        if !(self.effect_size >= 0.0) {
            return Err(Error::InvalidSpec("effect_size must be >= 0".into()));
        }
        if self.correlation_block == 0 {
            return Err(Error::InvalidSpec("correlation_block must be >= 1".into()));
        }
        Ok(())
    }
}

pub const SYNTH_NEGATIVE_LABEL: &str = "control";
pub const SYNTH_POSITIVE_LABEL: &str = "treated";

/// Deterministic synthetic dataset. Planted features (indices
/// `0..n_planted`) carry a class-mean shift of `effect_size` within-class
/// sigmas; all features have unit within-class variance. Correlated blocks
/// share a latent factor with loading 0.7.
pub fn synthesize(spec: &SynthSpec) -> Result<ExpressionMatrix> {
    spec.validate()?;
    let mut rng = ChaCha20Rng::seed_from_u64(spec.seed);
    let m = 2 * spec.m_per_class;
    let n_blocks = spec.n.div_ceil(spec.correlation_block);
    let loading = 0.7_f64;
    let residual = (1.0 - loading * loading).sqrt();

    let mut values = Vec::with_capacity(m * spec.n);
    let mut sample_ids = Vec::with_capacity(m);
    let mut labels = Vec::with_capacity(m);
    for i in 0..m {
        let treated = i >= spec.m_per_class;
        let (label, prefix, ordinal) = if treated {
            (SYNTH_POSITIVE_LABEL, "trt", i - spec.m_per_class + 1)
        } else {
            (SYNTH_NEGATIVE_LABEL, "ctrl", i + 1)
        };
        sample_ids.push(format!("{prefix}_{ordinal:03}"));
        labels.push(label.to_owned());

        let latent: Vec<f64> = (0..n_blocks)
            .map(|_| StandardNormal.sample(&mut rng))
            .collect();
        for j in 0..spec.n {
            let eps: f64 = StandardNormal.sample(&mut rng);
            let mut x = if spec.correlation_block > 1 {
                loading * latent[j / spec.correlation_block] + residual * eps
            } else {
                eps
            };
            if treated && j < spec.n_planted {
                x += spec.effect_size;
            }
            values.push(x);
        }
    }

    let feature_names = (0..spec.n)
        .map(|j| {
            if j < spec.n_planted {
                format!("planted_{:04}", j + 1)
            } else {
                format!("feat_{:04}", j + 1)
            }
        })
        .collect();
    ExpressionMatrix::new(sample_ids, feature_names, labels, values)
}
