//! Labeled feature datasets: CSV I/O, per-group averaging and a synthetic generator.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Which partition a sample belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Validation,
    Test,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Validation => "validation",
            Split::Test => "test",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "validation" => Ok(Split::Validation),
            "test" => Ok(Split::Test),
            other => Err(Error::Validation(format!(
                "unknown split tag '{other}' (expected train, validation or test)"
            ))),
        }
    }
}

/// Column roles for [`load_csv`]. Every column not claimed by a role is a feature column.
///
/// The split and group columns are optional: when the header lacks them, every row is
/// tagged `train` and no groups are recorded.
#[derive(Debug, Clone)]
pub struct CsvSchema {
    pub label: String,
    pub split: Option<String>,
    pub group: Option<String>,
}

impl Default for CsvSchema {
    fn default() -> Self {
        CsvSchema {
            label: "label".into(),
            split: Some("split".into()),
            group: Some("group".into()),
        }
    }
}

/// Dense sample-by-feature matrix with class labels, split tags and optional group IDs.
///
/// Immutable after construction. Labels are stored as indices into [`class_ids`], which
/// holds the distinct label strings in lexicographic order.
///
/// [`class_ids`]: FeatureDataset::class_ids
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureDataset {
    feature_names: Vec<String>,
    values: Vec<f64>,
    rows: usize,
    labels: Vec<usize>,
    class_ids: Vec<String>,
    splits: Vec<Split>,
    groups: Option<Vec<String>>,
}

impl FeatureDataset {
    /// Builds a dataset from row vectors. Feature columns are named `f0..f{D-1}`.
    pub fn new(
        rows: Vec<Vec<f64>>,
        labels: Vec<String>,
        splits: Vec<Split>,
        groups: Option<Vec<String>>,
    ) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        let names = (0..dim).map(|j| format!("f{j}")).collect();
        Self::with_feature_names(names, rows, labels, splits, groups)
    }

    pub fn with_feature_names(
        feature_names: Vec<String>,
        rows: Vec<Vec<f64>>,
        labels: Vec<String>,
        splits: Vec<Split>,
        groups: Option<Vec<String>>,
    ) -> Result<Self> {
        let n = rows.len();
        let dim = feature_names.len();
        if dim == 0 {
            return Err(Error::Validation("dataset has no feature columns".into()));
        }
        if labels.len() != n || splits.len() != n {
            return Err(Error::Validation(format!(
                "{n} rows but {} labels and {} split tags",
                labels.len(),
                splits.len()
            )));
        }
        if let Some(g) = &groups {
            if g.len() != n {
                return Err(Error::Validation(format!("{n} rows but {} group IDs", g.len())));
            }
        }
        let mut values = Vec::with_capacity(n * dim);
        for (r, row) in rows.iter().enumerate() {
            if row.len() != dim {
                return Err(Error::Validation(format!(
                    "row {r} has {} values, expected {dim}",
                    row.len()
                )));
            }
            if let Some(j) = row.iter().position(|v| !v.is_finite()) {
                return Err(Error::Parse {
                    row: r,
                    column: feature_names[j].clone(),
                    message: format!("non-finite value {}", row[j]),
                });
            }
            values.extend_from_slice(row);
        }
        let class_ids: Vec<String> = labels
            .iter()
            .cloned()
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let lookup: HashMap<&str, usize> = class_ids
            .iter()
            .enumerate()
            .map(|(i, c)| (c.as_str(), i))
            .collect();
        let labels = labels.iter().map(|l| lookup[l.as_str()]).collect();
        Ok(FeatureDataset {
            feature_names,
            values,
            rows: n,
            labels,
            class_ids,
            splits,
            groups,
        })
    }

    pub fn feature_count(&self) -> usize {
        self.feature_names.len()
    }

    pub fn len(&self) -> usize {
        self.rows
    }

    pub fn is_empty(&self) -> bool {
        self.rows == 0
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let d = self.feature_count();
        &self.values[i * d..(i + 1) * d]
    }

    /// Class index of row `i` into [`FeatureDataset::class_ids`].
    pub fn label(&self, i: usize) -> usize {
        self.labels[i]
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn label_name(&self, i: usize) -> &str {
        &self.class_ids[self.labels[i]]
    }

    pub fn class_ids(&self) -> &[String] {
        &self.class_ids
    }

    pub fn class_count(&self) -> usize {
        self.class_ids.len()
    }

    pub fn split(&self, i: usize) -> Split {
        self.splits[i]
    }

    pub fn groups(&self) -> Option<&[String]> {
        self.groups.as_deref()
    }

    /// Row indices tagged with `split`, in file order.
    pub fn rows_in(&self, split: Split) -> Vec<usize> {
        (0..self.rows).filter(|&i| self.splits[i] == split).collect()
    }

    /// Serializes to the canonical CSV layout: features, `label`, `split`, then `group` if present.
    pub fn to_csv_bytes(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header: Vec<&str> = self.feature_names.iter().map(String::as_str).collect();
        header.push("label");
        header.push("split");
        if self.groups.is_some() {
            header.push("group");
        }
        w.write_record(&header)?;
        let mut record: Vec<String> = Vec::with_capacity(header.len());
        for i in 0..self.rows {
            record.clear();
            record.extend(self.row(i).iter().map(|v| v.to_string()));
            record.push(self.label_name(i).to_string());
            record.push(self.splits[i].to_string());
            if let Some(g) = &self.groups {
                record.push(g[i].clone());
            }
            w.write_record(&record)?;
        }
        w.into_inner()
            .map_err(|e| Error::Validation(format!("CSV buffer flush failed: {e}")))
    }

    /// Content hash (SHA-256, hex) of the canonical CSV serialization.
    pub fn fingerprint(&self) -> Result<String> {
        Ok(hex::encode(Sha256::digest(self.to_csv_bytes()?)))
    }

    /// Copy of the dataset restricted to the given feature columns, in the given order.
    pub fn select_features(&self, features: &[usize]) -> Result<FeatureDataset> {
        if let Some(&bad) = features.iter().find(|&&f| f >= self.feature_count()) {
            return Err(Error::InvalidMask(format!(
                "feature index {bad} out of range for dimension {}",
                self.feature_count()
            )));
        }
        let names = features.iter().map(|&f| self.feature_names[f].clone()).collect();
        let rows = (0..self.rows)
            .map(|i| features.iter().map(|&f| self.row(i)[f]).collect())
            .collect();
        let labels = (0..self.rows).map(|i| self.label_name(i).to_string()).collect();
        FeatureDataset::with_feature_names(
            names,
            rows,
            labels,
            self.splits.clone(),
            self.groups.clone(),
        )
    }
}

/// Reads a dataset from CSV.
pub fn load_csv(path: impl AsRef<Path>, schema: &CsvSchema) -> Result<FeatureDataset> {
    let path = path.as_ref();
    let mut text = String::new();
    File::open(path)
        .and_then(|mut f| f.read_to_string(&mut text))
        .map_err(|e| Error::io(path, e))?;
    parse_csv(text.as_bytes(), schema)
}

/// Parses CSV content; see [`load_csv`].
pub fn parse_csv<R: Read>(reader: R, schema: &CsvSchema) -> Result<FeatureDataset> {
    let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let find = |name: &str| header.iter().position(|h| h == name);
    let label_col = find(&schema.label)
        .ok_or_else(|| Error::Schema(format!("missing label column '{}'", schema.label)))?;
    let split_col = schema.split.as_deref().and_then(find);
    let group_col = schema.group.as_deref().and_then(find);
    let feature_cols: Vec<usize> = (0..header.len())
        .filter(|&c| c != label_col && Some(c) != split_col && Some(c) != group_col)
        .collect();
    if feature_cols.is_empty() {
        return Err(Error::Schema("no feature columns in header".into()));
    }
    let names: Vec<String> = feature_cols.iter().map(|&c| header[c].clone()).collect();

    let mut rows = Vec::new();
    let mut labels = Vec::new();
    let mut splits = Vec::new();
    let mut groups = group_col.map(|_| Vec::new());
    for (r, record) in rdr.records().enumerate() {
        let record = record?;
        if record.len() != header.len() {
            return Err(Error::Parse {
                row: r,
                column: "*".into(),
                message: format!("expected {} fields, found {}", header.len(), record.len()),
            });
        }
        let mut row = Vec::with_capacity(feature_cols.len());
        for &c in &feature_cols {
            let cell = record[c].trim();
            let v: f64 = cell.parse().map_err(|_| Error::Parse {
                row: r,
                column: header[c].clone(),
                message: format!("not a number: '{cell}'"),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    row: r,
                    column: header[c].clone(),
                    message: format!("non-finite value '{cell}'"),
                });
            }
            row.push(v);
        }
        rows.push(row);
        labels.push(record[label_col].to_string());
        splits.push(match split_col {
            Some(c) => record[c].trim().parse::<Split>()?,
            None => Split::Train,
        });
        if let (Some(g), Some(c)) = (groups.as_mut(), group_col) {
            g.push(record[c].to_string());
        }
    }
    FeatureDataset::with_feature_names(names, rows, labels, splits, groups)
}

pub fn save_csv(ds: &FeatureDataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes = ds.to_csv_bytes()?;
    File::create(path)
        .and_then(|mut f| f.write_all(&bytes))
        .map_err(|e| Error::io(path, e))
}

/// Collapses each group of rows to its arithmetic mean (one row per group, first-seen order).
///
/// Every member of a group must share the same label and split.
pub fn mean_feature_vectors(ds: &FeatureDataset) -> Result<FeatureDataset> {
    let groups = ds
        .groups()
        .ok_or_else(|| Error::Validation("dataset has no group column".into()))?;
    let d = ds.feature_count();
    let mut order: Vec<&str> = Vec::new();
    let mut members: HashMap<&str, Vec<usize>> = HashMap::new();
    for (i, g) in groups.iter().enumerate() {
        members
            .entry(g.as_str())
            .or_insert_with(|| {
                order.push(g.as_str());
                Vec::new()
            })
            .push(i);
    }
    let mut rows = Vec::with_capacity(order.len());
    let mut labels = Vec::with_capacity(order.len());
    let mut splits = Vec::with_capacity(order.len());
    for g in order {
        let idx = &members[g];
        let first = idx[0];
        for &i in &idx[1..] {
            if ds.label(i) != ds.label(first) {
                return Err(Error::Consistency {
                    group: g.to_string(),
                    message: format!(
                        "labels '{}' and '{}' in the same group",
                        ds.label_name(first),
                        ds.label_name(i)
                    ),
                });
            }
            if ds.split(i) != ds.split(first) {
                return Err(Error::Consistency {
                    group: g.to_string(),
                    message: format!(
                        "splits '{}' and '{}' in the same group",
                        ds.split(first),
                        ds.split(i)
                    ),
                });
            }
        }
        let mut mean = vec![0.0; d];
        for &i in idx {
            for (m, v) in mean.iter_mut().zip(ds.row(i)) {
                *m += v;
            }
        }
        let count = idx.len() as f64;
        mean.iter_mut().for_each(|m| *m /= count);
        rows.push(mean);
        labels.push(ds.label_name(first).to_string());
        splits.push(ds.split(first));
    }
    FeatureDataset::with_feature_names(ds.feature_names.clone(), rows, labels, splits, None)
}

/// Per-class sample counts for each split.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitCounts {
    pub train: usize,
    pub validation: usize,
    pub test: usize,
}

/// Parameters of the planted-feature generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub feature_count: usize,
    pub informative_count: usize,
    pub class_count: usize,
    pub samples_per_split: SplitCounts,
    pub separation: f64,
    pub noise_sd: f64,
    pub seed: u64,
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Validation(m));
        if self.feature_count == 0 {
            return fail("feature_count must be positive".into());
        }
        if self.informative_count > self.feature_count {
            return fail(format!(
                "informative_count {} exceeds feature_count {}",
                self.informative_count, self.feature_count
            ));
        }
        if self.class_count < 2 {
            return fail(format!("class_count must be >= 2, got {}", self.class_count));
        }
        if !(self.separation > 0.0 && self.separation.is_finite()) {
            return fail(format!("separation must be > 0, got {}", self.separation));
        }
        if !(self.noise_sd > 0.0 && self.noise_sd.is_finite()) {
            return fail(format!("noise_sd must be > 0, got {}", self.noise_sd));
        }
        let c = self.samples_per_split;
        if c.train == 0 {
            return fail("at least one training sample per class is required".into());
        }
        Ok(())
    }
}

/// Synthetic dataset plus the planted informative feature indices (ascending).
#[derive(Debug, Clone)]
pub struct SyntheticData {
    pub dataset: FeatureDataset,
    pub informative: Vec<usize>,
}

/// Generates Gaussian data where class `c` is centered at `c * separation` on every
/// informative feature and at 0 on all others.
///
/// Rows are emitted split by split (train, validation, test), class by class.
pub fn synthesize(spec: &SyntheticSpec) -> Result<SyntheticData> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let d = spec.feature_count;
    let mut informative = sample(&mut rng, d, spec.informative_count).into_vec();
    informative.sort_unstable();
    let mut is_informative = vec![false; d];
    for &f in &informative {
        is_informative[f] = true;
    }
    let noise = Normal::new(0.0, spec.noise_sd)
        .map_err(|e| Error::Validation(format!("noise distribution: {e}")))?;

    let width = (spec.class_count - 1).to_string().len();
    let c = spec.samples_per_split;
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    let mut splits = Vec::new();
    for (split, per_class) in [
        (Split::Train, c.train),
        (Split::Validation, c.validation),
        (Split::Test, c.test),
    ] {
        for class in 0..spec.class_count {
            let center = class as f64 * spec.separation;
            for _ in 0..per_class {
                let row = (0..d)
                    .map(|j| {
                        let v = noise.sample(&mut rng);
                        if is_informative[j] {
                            v + center
                        } else {
                            v
                        }
                    })
                    .collect();
                rows.push(row);
                labels.push(format!("c{class:0width$}"));
                splits.push(split);
            }
        }
    }
    Ok(SyntheticData {
        dataset: FeatureDataset::new(rows, labels, splits, None)?,
        informative,
    })
}
