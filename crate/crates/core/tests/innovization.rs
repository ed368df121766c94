use std::collections::BTreeSet;

use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use emofs::dataset::{synthesize, FeatureDataset, SplitCounts, SyntheticSpec};
use emofs::innovization::{
    build_histogram, fine_config, fine_subspace, freq_score, ordered_selection, run_fine_stage,
    top_features, RunArchive,
};
use emofs::moea::{run_engine, EngineConfig, Individual, ParetoFront, Stage};
use emofs::retrieval::ObjectiveVector;
use emofs::FeatureMask;

fn front(run_id: usize, dim: usize, subsets: &[Vec<usize>]) -> ParetoFront {
    let solutions = subsets
        .iter()
        .map(|s| {
            Individual::evaluated(
                FeatureMask::from_indices(dim, s),
                ObjectiveVector {
                    feature_fraction: s.len() as f64 / dim as f64,
                    retrieval_error: 0.5,
                    raw_feature_count: s.len(),
                    per_class_f1: vec![],
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

fn random_archive(rng: &mut ChaCha8Rng, runs: usize, dim: usize) -> Vec<Vec<Vec<usize>>> {
    (0..runs)
        .map(|_| {
            let members = rng.random_range(1..8);
            (0..members)
                .map(|_| {
                    // skewed toward low indices so scores differ
                    let size = rng.random_range(1..6);
                    let set: BTreeSet<usize> = (0..size)
                        .map(|_| {
                            let u: f64 = rng.random();
                            ((u * u) * dim as f64) as usize
                        })
                        .collect();
                    set.into_iter().collect()
                })
                .collect()
        })
        .collect()
}

fn to_archive(raw: &[Vec<Vec<usize>>], dim: usize) -> RunArchive {
    let fronts = raw
        .iter()
        .enumerate()
        .map(|(r, subsets)| front(r, dim, subsets))
        .collect();
    RunArchive::new(fronts, dim, "ds", "cfg").unwrap()
}

/// Σ over runs containing f of (1 + distinct subsets with f / R).
fn recount(raw: &[Vec<Vec<usize>>], dim: usize) -> Vec<f64> {
    let r = raw.len() as f64;
    (0..dim)
        .map(|f| {
            raw.iter()
                .map(|subsets| {
                    let distinct: BTreeSet<&Vec<usize>> = subsets.iter().collect();
                    let fr = distinct.iter().filter(|s| s.contains(&f)).count();
                    if fr > 0 {
                        1.0 + fr as f64 / r
                    } else {
                        0.0
                    }
                })
                .sum()
        })
        .collect()
}

proptest! {
    #[test]
    fn histogram_ignores_run_order(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dim = 40;
        let raw = random_archive(&mut rng, 7, dim);
        let mut shuffled = raw.clone();
        shuffled.shuffle(&mut rng);
        let a = build_histogram(&to_archive(&raw, dim));
        let b = build_histogram(&to_archive(&shuffled, dim));
        prop_assert_eq!(&a, &b);
        for f in 0..dim {
            prop_assert_eq!(a.scores[f], freq_score(&to_archive(&raw, dim), f));
        }
    }
}

#[test]
fn top_thirty_matches_recount() {
    let mut rng = ChaCha8Rng::seed_from_u64(30);
    let dim = 120;
    for _ in 0..20 {
        let raw = random_archive(&mut rng, 10, dim);
        let h = build_histogram(&to_archive(&raw, dim));
        let expected = recount(&raw, dim);
        for f in 0..dim {
            assert!((h.scores[f] - expected[f]).abs() <= 1e-12);
        }
        let mut order: Vec<usize> = (0..dim).collect();
        order.sort_by(|&a, &b| {
            expected[b]
                .partial_cmp(&expected[a])
                .unwrap()
                .then(a.cmp(&b))
        });
        // exact comparisons are safe only where the recount separates scores clearly
        let top = top_features(&h, 30).unwrap();
        let want: BTreeSet<usize> = order[..30].iter().copied().collect();
        let got: BTreeSet<usize> = top.iter().copied().collect();
        let boundary = expected[order[29]];
        for f in want.symmetric_difference(&got) {
            assert!((expected[*f] - boundary).abs() <= 1e-12, "feature {f}");
        }
        let sub = fine_subspace(&h, 30).unwrap();
        assert!(sub.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(sub.iter().copied().collect::<BTreeSet<_>>(), got);
    }
}

#[test]
fn ordered_selection_is_a_prefix_chain() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let raw = random_archive(&mut rng, 5, 25);
    let h = build_histogram(&to_archive(&raw, 25));
    assert_eq!(ordered_selection(&h, 1).unwrap().indices(), vec![h.top_order[0]]);
    for k in 1..25 {
        let small = ordered_selection(&h, k).unwrap();
        let big = ordered_selection(&h, k + 1).unwrap();
        assert!(small.is_subset_of(&big));
        assert_eq!(big.popcount(), k + 1);
    }
    assert!(ordered_selection(&h, 26).is_err());
}

fn planted(seed: u64) -> FeatureDataset {
    synthesize(&SyntheticSpec {
        feature_count: 48,
        informative_count: 4,
        class_count: 4,
        samples_per_split: SplitCounts {
            train: 12,
            validation: 8,
            test: 8,
        },
        separation: 1.5,
        noise_sd: 1.0,
        seed,
    })
    .unwrap()
    .dataset
}

fn coarse_archive(ds: &FeatureDataset, runs: u64) -> RunArchive {
    let fronts = (0..runs)
        .map(|r| {
            let mut cfg = EngineConfig::new(48, 8);
            cfg.population_size = 12;
            cfg.max_generations = 10;
            cfg.seed = r;
            let mut run = run_engine(ds, &cfg, None).unwrap();
            run.front.run_id = r as usize;
            run.front
        })
        .collect();
    RunArchive::new(fronts, 48, "", "").unwrap()
}

#[test]
fn fine_masks_stay_within_frequent_features() {
    let ds = planted(1);
    let archive = coarse_archive(&ds, 4);
    let h = build_histogram(&archive);
    let nff = 10;
    let allowed: BTreeSet<usize> = top_features(&h, nff).unwrap().into_iter().collect();
    let mut cfg = EngineConfig::new(48, 8);
    cfg.population_size = 10;
    cfg.max_generations = 8;
    let run = run_fine_stage(&ds, &archive, nff, &cfg).unwrap();
    assert_eq!(run.front.stage, Stage::Fine);
    assert_eq!(run.front.stage_dim, nff);
    for s in &run.front.solutions {
        assert!(s.mask.indices().iter().all(|f| allowed.contains(f)));
        let o = s.objectives();
        assert!((o.feature_fraction - o.raw_feature_count as f64 / nff as f64).abs() < 1e-15);
    }
}

#[test]
fn full_width_fine_stage_is_an_unconstrained_coarse_run() {
    let ds = planted(2);
    let archive = coarse_archive(&ds, 2);
    let h = build_histogram(&archive);
    let mut cfg = EngineConfig::new(48, 8);
    cfg.population_size = 10;
    cfg.max_generations = 6;
    cfg.seed = 77;
    let fine = run_fine_stage(&ds, &archive, 48, &cfg).unwrap();
    assert_eq!(fine_subspace(&h, 48).unwrap(), (0..48).collect::<Vec<_>>());
    let coarse = run_engine(&ds, &fine_config(&cfg, 48), None).unwrap();
    assert_eq!(fine.front.solutions, coarse.front.solutions);
    assert_eq!(fine.evaluations, coarse.evaluations);
}
