//! Post-hoc evaluation of fronts: best subsets, stability, per-class decision fronts,
//! single-feature ranking and paired significance tests.

mod stability;
mod wilcoxon;

use std::collections::BTreeSet;

use rayon::prelude::*;

use crate::dataset::{FeatureDataset, Split};
use crate::error::{Error, Result};
use crate::innovization::{top_features, FreqHistogram};
use crate::mask::FeatureMask;
use crate::moea::{dominates, Individual, ParetoFront};
use crate::retrieval::{evaluate_features, evaluate_mask};

pub use stability::{jaccard, stability, StabilityReport};
pub use wilcoxon::{
    wilcoxon_signed_rank, wilcoxon_signed_rank_with, Alternative, WilcoxonResult, EXACT_MAX_N,
};

/// Member with the lowest retrieval error; ties go to fewer features, then to the
/// lexicographically smallest selected-index list.
pub fn best_subset(front: &ParetoFront) -> Result<&Individual> {
    front
        .solutions
        .iter()
        .min_by(|a, b| {
            let (oa, ob) = (a.objectives(), b.objectives());
            oa.retrieval_error
                .total_cmp(&ob.retrieval_error)
                .then(oa.raw_feature_count.cmp(&ob.raw_feature_count))
                .then_with(|| a.mask.indices().cmp(&b.mask.indices()))
        })
        .ok_or_else(|| Error::Validation(format!("run {} has an empty front", front.run_id)))
}

/// One point of a per-class decision front.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionPoint {
    pub raw_feature_count: usize,
    /// `1 - F1` of this class.
    pub class_error: f64,
    pub mask: FeatureMask,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassFront {
    pub class: String,
    pub points: Vec<DecisionPoint>,
}

/// Per-class Pareto fronts over (feature count, class error).
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionSpace {
    pub classes: Vec<ClassFront>,
}

/// Re-scores every front member on `split` and keeps, for each class, the members
/// nondominated in (feature count, 1 - class F1).
pub fn decision_space(
    front: &ParetoFront,
    ds: &FeatureDataset,
    split: Split,
    k: usize,
) -> Result<DecisionSpace> {
    let scored = front
        .solutions
        .par_iter()
        .map(|s| evaluate_mask(ds, &s.mask, k, split, front.stage_dim.max(1)))
        .collect::<Result<Vec<_>>>()?;
    let classes = ds
        .class_ids()
        .iter()
        .enumerate()
        .map(|(c, name)| {
            let pts: Vec<[f64; 2]> = scored
                .iter()
                .map(|o| [o.raw_feature_count as f64, 1.0 - o.per_class_f1[c]])
                .collect();
            let mut points: Vec<DecisionPoint> = (0..pts.len())
                .filter(|&i| !pts.iter().any(|q| dominates(q, &pts[i])))
                .map(|i| DecisionPoint {
                    raw_feature_count: scored[i].raw_feature_count,
                    class_error: pts[i][1],
                    mask: front.solutions[i].mask.clone(),
                })
                .collect();
            points.sort_by(|a, b| {
                a.raw_feature_count
                    .cmp(&b.raw_feature_count)
                    .then(a.class_error.total_cmp(&b.class_error))
                    .then(a.mask.cmp(&b.mask))
            });
            ClassFront {
                class: name.clone(),
                points,
            }
        })
        .collect();
    Ok(DecisionSpace { classes })
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRank {
    pub feature: usize,
    pub freq_score: f64,
    pub singleton_f1: f64,
    /// Share of front features whose singleton F1 is strictly lower.
    pub rank_fraction: f64,
    /// Singleton F1 minus the mean singleton F1 of the front features.
    pub difference: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SingleFeatureRanking {
    /// Every feature used by some member, with its singleton macro-F1.
    pub front_features: Vec<(usize, f64)>,
    pub mean_front_f1: f64,
    pub ranks: Vec<FeatureRank>,
}

/// Compares the `top_n` most frequent features against all features used on the given
/// front members, each feature scored alone by kNN retrieval on `split`.
pub fn single_feature_rank(
    h: &FreqHistogram,
    members: &[Individual],
    ds: &FeatureDataset,
    top_n: usize,
    split: Split,
    k: usize,
) -> Result<SingleFeatureRanking> {
    if members.is_empty() {
        return Err(Error::Validation("no front members to rank against".into()));
    }
    let front_set: BTreeSet<usize> = members.iter().flat_map(|m| m.mask.indices()).collect();
    let frequent = top_features(h, top_n)?;
    let mut wanted: BTreeSet<usize> = front_set.clone();
    wanted.extend(frequent.iter().copied());
    let wanted: Vec<usize> = wanted.into_iter().collect();
    let f1s = wanted
        .par_iter()
        .map(|&f| evaluate_features(ds, &[f], k, split, 1).map(|o| o.macro_f1()))
        .collect::<Result<Vec<_>>>()?;
    let singleton = |f: usize| f1s[wanted.binary_search(&f).expect("scored")];

    let front_features: Vec<(usize, f64)> = front_set.iter().map(|&f| (f, singleton(f))).collect();
    let mean_front_f1 =
        front_features.iter().map(|(_, v)| v).sum::<f64>() / front_features.len() as f64;
    let ranks = frequent
        .into_iter()
        .map(|f| {
            let v = singleton(f);
            let lower = front_features.iter().filter(|(_, g)| *g < v).count();
            FeatureRank {
                feature: f,
                freq_score: h.scores[f],
                singleton_f1: v,
                rank_fraction: lower as f64 / front_features.len() as f64,
                difference: v - mean_front_f1,
            }
        })
        .collect();
    Ok(SingleFeatureRanking {
        front_features,
        mean_front_f1,
        ranks,
    })
}
