//! Frequent-features histogram over several coarse runs and the fine re-optimization
//! it drives.
//!
//! A feature earns `1 + Fr/R` from every run whose front contains it, where `Fr` is the
//! number of distinct subsets on that front that select it and `R` is the number of runs.
//! Occurrence across runs therefore outweighs repetition within a single front.

use std::collections::{BTreeSet, HashSet};

use crate::dataset::FeatureDataset;
use crate::error::{Error, Result};
use crate::mask::FeatureMask;
use crate::moea::{run_engine, EngineConfig, EngineRun, ParetoFront};

/// Fronts of `R` independent coarse runs over the same dataset.
#[derive(Debug, Clone)]
pub struct RunArchive {
    pub fronts: Vec<ParetoFront>,
    /// Length of every mask in the archive.
    pub feature_count: usize,
    pub dataset_fingerprint: String,
    pub config_fingerprint: String,
}

impl RunArchive {
    pub fn new(
        fronts: Vec<ParetoFront>,
        feature_count: usize,
        dataset_fingerprint: impl Into<String>,
        config_fingerprint: impl Into<String>,
    ) -> Result<Self> {
        if fronts.is_empty() {
            return Err(Error::Validation("archive holds no fronts".into()));
        }
        let stage_dim = fronts[0].stage_dim;
        let mut ids = HashSet::new();
        for f in &fronts {
            if f.stage_dim != stage_dim {
                return Err(Error::Validation(format!(
                    "run {} has stage_dim {}, expected {stage_dim}",
                    f.run_id, f.stage_dim
                )));
            }
            if !ids.insert(f.run_id) {
                return Err(Error::Validation(format!("duplicate run_id {}", f.run_id)));
            }
            if let Some(s) = f.solutions.iter().find(|s| s.mask.len() != feature_count) {
                return Err(Error::Validation(format!(
                    "run {}: mask length {} differs from {feature_count}",
                    f.run_id,
                    s.mask.len()
                )));
            }
        }
        Ok(RunArchive {
            fronts,
            feature_count,
            dataset_fingerprint: dataset_fingerprint.into(),
            config_fingerprint: config_fingerprint.into(),
        })
    }

    pub fn runs(&self) -> usize {
        self.fronts.len()
    }
}

/// Distinct masks of a front.
fn distinct_masks(front: &ParetoFront) -> Vec<&FeatureMask> {
    let mut seen = HashSet::new();
    front
        .solutions
        .iter()
        .map(|s| &s.mask)
        .filter(|m| seen.insert(*m))
        .collect()
}

/// Per-run membership counts `Fr(r, f)` for every feature.
fn membership_counts(archive: &RunArchive) -> Vec<Vec<usize>> {
    archive
        .fronts
        .iter()
        .map(|front| {
            let mut counts = vec![0usize; archive.feature_count];
            for m in distinct_masks(front) {
                for f in m.indices() {
                    counts[f] += 1;
                }
            }
            counts
        })
        .collect()
}

/// Combines per-run counts as `runs_present + total / R`, which is `Σ_r δ_r (1 + Fr/R)`
/// evaluated with integer partial sums (independent of run order).
fn score_from_counts(per_run: impl Iterator<Item = usize>, r: usize) -> f64 {
    let (present, total) = per_run.fold((0usize, 0usize), |(p, t), c| {
        (p + usize::from(c > 0), t + c)
    });
    present as f64 + total as f64 / r as f64
}

/// FreqScore of feature `f`.
pub fn freq_score(archive: &RunArchive, f: usize) -> f64 {
    assert!(f < archive.feature_count, "feature {f} out of range");
    let r = archive.runs();
    let per_run = archive.fronts.iter().map(|front| {
        distinct_masks(front)
            .into_iter()
            .filter(|m| m.get(f))
            .count()
    });
    score_from_counts(per_run, r)
}

/// Scores for every feature plus the descending score order.
#[derive(Debug, Clone, PartialEq)]
pub struct FreqHistogram {
    pub scores: Vec<f64>,
    /// Number of runs `R` the scores were built from.
    pub runs: usize,
    /// Feature indices by score descending; ties keep ascending index.
    pub top_order: Vec<usize>,
}

impl FreqHistogram {
    /// Builds a histogram from precomputed scores (e.g. read back from disk).
    pub fn from_scores(scores: Vec<f64>, runs: usize) -> Self {
        let mut top_order: Vec<usize> = (0..scores.len()).collect();
        top_order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
        FreqHistogram {
            scores,
            runs,
            top_order,
        }
    }

    pub fn feature_count(&self) -> usize {
        self.scores.len()
    }

    pub fn nonzero_count(&self) -> usize {
        self.scores.iter().filter(|&&s| s > 0.0).count()
    }
}

pub fn build_histogram(archive: &RunArchive) -> FreqHistogram {
    let counts = membership_counts(archive);
    let r = archive.runs();
    let scores = (0..archive.feature_count)
        .map(|f| score_from_counts(counts.iter().map(|c| c[f]), r))
        .collect();
    FreqHistogram::from_scores(scores, r)
}

/// The first `nff` entries of the histogram's top order.
///
/// When `nff` exceeds the number of features with a nonzero score, zero-score features
/// are admitted in index order; callers can detect this with [`FreqHistogram::nonzero_count`].
pub fn top_features(h: &FreqHistogram, nff: usize) -> Result<Vec<usize>> {
    if nff > h.feature_count() {
        return Err(Error::Validation(format!(
            "nff {nff} exceeds the feature count {}",
            h.feature_count()
        )));
    }
    Ok(h.top_order[..nff].to_vec())
}

/// Mask selecting the `size` highest-scoring features.
pub fn ordered_selection(h: &FreqHistogram, size: usize) -> Result<FeatureMask> {
    if size == 0 {
        return Err(Error::Validation("ordered selection size must be >= 1".into()));
    }
    let top = top_features(h, size)?;
    Ok(FeatureMask::from_indices(h.feature_count(), &top))
}

/// Search space of the fine stage: the top-`nff` features, in ascending index order.
pub fn fine_subspace(h: &FreqHistogram, nff: usize) -> Result<Vec<usize>> {
    let set: BTreeSet<usize> = top_features(h, nff)?.into_iter().collect();
    Ok(set.into_iter().collect())
}

/// Re-runs the engine on the top-`nff` features with the cardinality cap lifted
/// (`cf = stage_dim = nff`). `cfg` supplies budgets, `k`, rates and the seed; its
/// `stage_dim` and `cf` are overridden. A mutation rate of `None` becomes `1/nff`.
pub fn run_fine_stage(
    ds: &FeatureDataset,
    archive: &RunArchive,
    nff: usize,
    cfg: &EngineConfig,
) -> Result<EngineRun> {
    if archive.feature_count != ds.feature_count() {
        return Err(Error::Validation(format!(
            "archive covers {} features but the dataset has {}",
            archive.feature_count,
            ds.feature_count()
        )));
    }
    let h = build_histogram(archive);
    run_fine_stage_with(ds, &h, nff, cfg)
}

/// [`run_fine_stage`] from an already built histogram.
pub fn run_fine_stage_with(
    ds: &FeatureDataset,
    h: &FreqHistogram,
    nff: usize,
    cfg: &EngineConfig,
) -> Result<EngineRun> {
    if nff == 0 {
        return Err(Error::Config("nff must be >= 1".into()));
    }
    let subspace = fine_subspace(h, nff)?;
    let fine_cfg = fine_config(cfg, nff);
    run_engine(ds, &fine_cfg, Some(&subspace))
}

/// `cfg` with `stage_dim = cf = nff`.
pub fn fine_config(cfg: &EngineConfig, nff: usize) -> EngineConfig {
    EngineConfig {
        stage_dim: nff,
        cf: nff,
        ..cfg.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moea::{Individual, Stage};
    use crate::retrieval::ObjectiveVector;

    fn front(run_id: usize, dim: usize, subsets: &[&[usize]]) -> ParetoFront {
        let solutions = subsets
            .iter()
            .map(|s| {
                Individual::evaluated(
                    FeatureMask::from_indices(dim, s),
                    ObjectiveVector {
                        feature_fraction: s.len() as f64 / dim as f64,
                        retrieval_error: 0.5,
                        raw_feature_count: s.len(),
                        per_class_f1: vec![0.5, 0.5],
                    },
                )
            })
            .collect();
        ParetoFront {
            run_id,
            stage: Stage::Coarse,
            seed: run_id as u64,
            stage_dim: dim,
            solutions,
        }
    }

    fn archive(fronts: Vec<ParetoFront>, dim: usize) -> RunArchive {
        RunArchive::new(fronts, dim, "ds", "cfg").unwrap()
    }

    #[test]
    fn freq_score_examples() {
        let dim = 8;
        let mut fronts = vec![
            front(0, dim, &[&[1, 2], &[1], &[1, 3]]),
            front(1, dim, &[&[1, 4]]),
        ];
        for r in 2..10 {
            fronts.push(front(r, dim, &[&[5]]));
        }
        let a = archive(fronts, dim);
        assert_eq!(freq_score(&a, 0), 0.0);
        assert!((freq_score(&a, 1) - 2.4).abs() < 1e-12);

        let every: Vec<ParetoFront> = (0..10).map(|r| front(r, dim, &[&[6]])).collect();
        let a = archive(every, dim);
        assert!((freq_score(&a, 6) - 11.0).abs() < 1e-12);
    }

    #[test]
    fn histogram_single_subset() {
        let a = archive(vec![front(0, 6, &[&[2, 5]])], 6);
        let h = build_histogram(&a);
        assert_eq!(h.scores, vec![0.0, 0.0, 2.0, 0.0, 0.0, 2.0]);
        assert_eq!(&h.top_order[..2], &[2, 5]);
        assert_eq!(h.nonzero_count(), 2);
    }

    #[test]
    fn duplicate_masks_count_once() {
        let a = archive(vec![front(0, 4, &[&[1], &[1]]), front(1, 4, &[&[2]])], 4);
        assert_eq!(freq_score(&a, 1), 1.5);
    }

    #[test]
    fn top_features_and_ordered_selection() {
        let a = archive(
            vec![front(0, 5, &[&[3], &[3, 1]]), front(1, 5, &[&[3, 4]])],
            5,
        );
        let h = build_histogram(&a);
        assert_eq!(top_features(&h, 1).unwrap(), vec![3]);
        let all = top_features(&h, 5).unwrap();
        let mut sorted = all.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, vec![0, 1, 2, 3, 4]);
        // 1 and 4 tie at 1.5: lower index first; zero-score 0 and 2 follow by index
        assert_eq!(all, vec![3, 1, 4, 0, 2]);
        assert!(top_features(&h, 6).is_err());

        assert_eq!(ordered_selection(&h, 1).unwrap().indices(), vec![3]);
        for k in 1..5 {
            let small = ordered_selection(&h, k).unwrap();
            let big = ordered_selection(&h, k + 1).unwrap();
            assert!(small.is_subset_of(&big));
        }
    }

    #[test]
    fn archive_validation() {
        assert!(RunArchive::new(vec![], 4, "", "").is_err());
        let dup = vec![front(0, 4, &[&[1]]), front(0, 4, &[&[2]])];
        assert!(RunArchive::new(dup, 4, "", "").is_err());
    }
}
