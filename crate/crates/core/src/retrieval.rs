//! kNN retrieval scoring of feature masks.
//!
//! Query samples are matched against the training split by squared Euclidean distance
//! over the selected features. The k nearest neighbors vote; a vote tie goes to the tied
//! class whose member is closest, and a distance tie goes to the lower training row.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::dataset::{FeatureDataset, Split};
use crate::error::{Error, Result};
use crate::mask::FeatureMask;

pub const DEFAULT_K: usize = 3;

/// Per-class confusion counts, indexed by class.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ConfusionCounts {
    pub true_positive: Vec<usize>,
    pub false_positive: Vec<usize>,
    pub false_negative: Vec<usize>,
}

impl ConfusionCounts {
    pub fn new(class_count: usize) -> Self {
        ConfusionCounts {
            true_positive: vec![0; class_count],
            false_positive: vec![0; class_count],
            false_negative: vec![0; class_count],
        }
    }

    pub fn from_predictions(class_count: usize, truth: &[usize], predicted: &[usize]) -> Self {
        assert_eq!(truth.len(), predicted.len());
        let mut c = ConfusionCounts::new(class_count);
        for (&t, &p) in truth.iter().zip(predicted) {
            c.record(t, p);
        }
        c
    }

    pub fn record(&mut self, truth: usize, predicted: usize) {
        if truth == predicted {
            self.true_positive[truth] += 1;
        } else {
            self.false_negative[truth] += 1;
            self.false_positive[predicted] += 1;
        }
    }

    pub fn class_count(&self) -> usize {
        self.true_positive.len()
    }

    /// Number of evaluated queries (sum of TP + FN over classes).
    pub fn total(&self) -> usize {
        self.true_positive.iter().sum::<usize>() + self.false_negative.iter().sum::<usize>()
    }

    pub fn f1(&self, class: usize) -> f64 {
        let (p, r) = precision_recall(self, class);
        f1_score(p, r)
    }

    pub fn per_class_f1(&self) -> Vec<f64> {
        (0..self.class_count()).map(|c| self.f1(c)).collect()
    }

    /// Unweighted mean of per-class F1.
    pub fn macro_f1(&self) -> f64 {
        let f = self.per_class_f1();
        if f.is_empty() {
            0.0
        } else {
            f.iter().sum::<f64>() / f.len() as f64
        }
    }
}

/// `(TP/(TP+FP), TP/(TP+FN))`, each 0 when its denominator is 0.
pub fn precision_recall(counts: &ConfusionCounts, class: usize) -> (f64, f64) {
    let tp = counts.true_positive[class];
    let fp = counts.false_positive[class];
    let fn_ = counts.false_negative[class];
    let ratio = |num: usize, den: usize| if den == 0 { 0.0 } else { num as f64 / den as f64 };
    (ratio(tp, tp + fp), ratio(tp, tp + fn_))
}

/// Harmonic mean of precision and recall; 0 when both are 0.
pub fn f1_score(precision: f64, recall: f64) -> f64 {
    let s = precision + recall;
    if s == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / s
    }
}

/// The two minimized objectives of a mask, plus bookkeeping.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveVector {
    /// Selected-feature count divided by the stage dimension.
    pub feature_fraction: f64,
    /// `1 - macro-F1`.
    pub retrieval_error: f64,
    pub raw_feature_count: usize,
    /// Per-class F1 in `class_ids` order.
    pub per_class_f1: Vec<f64>,
}

impl ObjectiveVector {
    /// `[feature_fraction, retrieval_error]`.
    pub fn pair(&self) -> [f64; 2] {
        [self.feature_fraction, self.retrieval_error]
    }

    pub fn macro_f1(&self) -> f64 {
        1.0 - self.retrieval_error
    }
}

fn squared_distance(a: &[f64], b: &[f64], features: &[usize]) -> f64 {
    features
        .iter()
        .map(|&f| {
            let d = a[f] - b[f];
            d * d
        })
        .sum()
}

fn by_distance_then_index(a: &(f64, usize), b: &(f64, usize)) -> Ordering {
    a.0.total_cmp(&b.0).then(a.1.cmp(&b.1))
}

/// Majority vote over `neighbors` (sorted nearest first, already truncated to k).
fn vote(neighbors: &[(f64, usize)], labels: &[usize], votes: &mut Vec<usize>) -> usize {
    votes.iter_mut().for_each(|v| *v = 0);
    for &(_, i) in neighbors {
        let l = labels[i];
        if l >= votes.len() {
            votes.resize(l + 1, 0);
        }
        votes[l] += 1;
    }
    let best = votes.iter().copied().max().unwrap_or(0);
    neighbors
        .iter()
        .map(|&(_, i)| labels[i])
        .find(|&l| votes[l] == best)
        .expect("at least one neighbor")
}

/// Keeps the `k` smallest entries of `dists`, sorted by (distance, index).
fn nearest(dists: &mut Vec<(f64, usize)>, k: usize) {
    let k = k.min(dists.len());
    if k < dists.len() {
        dists.select_nth_unstable_by(k - 1, by_distance_then_index);
        dists.truncate(k);
    }
    dists.sort_unstable_by(by_distance_then_index);
}

/// Predicts the class of `query` from its `k` nearest training rows over `features`.
///
/// `train_labels[i]` is the class of `train_rows[i]`; ties in distance prefer lower `i`.
pub fn knn_predict<R: AsRef<[f64]>>(
    train_rows: &[R],
    train_labels: &[usize],
    query: &[f64],
    features: &[usize],
    k: usize,
) -> Result<usize> {
    if features.is_empty() {
        return Err(Error::InvalidMask("mask selects no features".into()));
    }
    if train_rows.is_empty() {
        return Err(Error::EmptySplit(Split::Train.to_string()));
    }
    if k == 0 {
        return Err(Error::Config("k must be >= 1".into()));
    }
    assert_eq!(train_rows.len(), train_labels.len());
    let mut dists: Vec<(f64, usize)> = train_rows
        .iter()
        .enumerate()
        .map(|(i, r)| (squared_distance(r.as_ref(), query, features), i))
        .collect();
    nearest(&mut dists, k);
    Ok(vote(&dists, train_labels, &mut Vec::new()))
}

/// Classifies every `query_split` row against the training split and returns the
/// resulting confusion counts.
pub fn confusion_for_features(
    ds: &FeatureDataset,
    features: &[usize],
    k: usize,
    query_split: Split,
) -> Result<ConfusionCounts> {
    if features.is_empty() {
        return Err(Error::InvalidMask("mask selects no features".into()));
    }
    if let Some(&bad) = features.iter().find(|&&f| f >= ds.feature_count()) {
        return Err(Error::InvalidMask(format!(
            "feature index {bad} out of range for dimension {}",
            ds.feature_count()
        )));
    }
    if k == 0 {
        return Err(Error::Config("k must be >= 1".into()));
    }
    let train = ds.rows_in(Split::Train);
    if train.is_empty() {
        return Err(Error::EmptySplit(Split::Train.to_string()));
    }
    let queries = ds.rows_in(query_split);
    if queries.is_empty() {
        return Err(Error::EmptySplit(query_split.to_string()));
    }

    // Gather the selected columns contiguously; distances then run over dense rows.
    let p = features.len();
    let pack = |rows: &[usize]| -> Vec<f64> {
        let mut out = Vec::with_capacity(rows.len() * p);
        for &r in rows {
            let row = ds.row(r);
            out.extend(features.iter().map(|&f| row[f]));
        }
        out
    };
    let train_packed = pack(&train);
    let query_packed = pack(&queries);
    let train_labels: Vec<usize> = train.iter().map(|&r| ds.label(r)).collect();

    let mut counts = ConfusionCounts::new(ds.class_count());
    let mut dists = Vec::with_capacity(train.len());
    let mut votes = vec![0; ds.class_count()];
    for (qi, &q) in queries.iter().enumerate() {
        let query = &query_packed[qi * p..(qi + 1) * p];
        dists.clear();
        dists.extend(train_packed.chunks_exact(p).enumerate().map(|(i, t)| {
            let d: f64 = t
                .iter()
                .zip(query)
                .map(|(a, b)| {
                    let d = a - b;
                    d * d
                })
                .sum();
            (d, i)
        }));
        nearest(&mut dists, k);
        let predicted = vote(&dists, &train_labels, &mut votes);
        counts.record(ds.label(q), predicted);
    }
    Ok(counts)
}

/// Scores a feature-index list; `stage_dim` only scales the feature fraction.
pub fn evaluate_features(
    ds: &FeatureDataset,
    features: &[usize],
    k: usize,
    query_split: Split,
    stage_dim: usize,
) -> Result<ObjectiveVector> {
    if stage_dim == 0 {
        return Err(Error::Config("stage dimension must be positive".into()));
    }
    let counts = confusion_for_features(ds, features, k, query_split)?;
    Ok(ObjectiveVector {
        feature_fraction: features.len() as f64 / stage_dim as f64,
        retrieval_error: 1.0 - counts.macro_f1(),
        raw_feature_count: features.len(),
        per_class_f1: counts.per_class_f1(),
    })
}

/// Scores a full-length mask over the dataset's features.
pub fn evaluate_mask(
    ds: &FeatureDataset,
    mask: &FeatureMask,
    k: usize,
    query_split: Split,
    stage_dim: usize,
) -> Result<ObjectiveVector> {
    if mask.len() != ds.feature_count() {
        return Err(Error::InvalidMask(format!(
            "mask length {} does not match dimension {}",
            mask.len(),
            ds.feature_count()
        )));
    }
    evaluate_features(ds, &mask.indices(), k, query_split, stage_dim)
}
