use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::niching::nsga3_select;
use super::operators::{bitwise_mutation, init_population, one_point_crossover};
use super::sorting::{nondominated_indices, reference_points};
use super::{EngineConfig, Individual, ParetoFront, Stage};
use crate::dataset::{FeatureDataset, Split};
use crate::error::{Error, Result};
use crate::mask::FeatureMask;
use crate::retrieval::{evaluate_features, ObjectiveVector};

/// Result of one engine run.
#[derive(Debug, Clone)]
pub struct EngineRun {
    pub front: ParetoFront,
    /// Number of fitness evaluations performed.
    pub evaluations: usize,
    pub generations: usize,
}

/// Runs the search and returns the nondominated, mask-deduplicated final population.
///
/// With `feature_subspace`, the search runs over those original feature indices (bit `i`
/// of a search mask is feature `subspace[i]`); `cfg.stage_dim` must equal its length.
/// Returned masks are always expressed over all dataset features.
pub fn run_engine(
    ds: &FeatureDataset,
    cfg: &EngineConfig,
    feature_subspace: Option<&[usize]>,
) -> Result<EngineRun> {
    run_engine_observed(ds, cfg, feature_subspace, &mut |_, _| {})
}

/// [`run_engine`] that reports every evaluated search-space mask to `observer`, in order.
pub fn run_engine_observed(
    ds: &FeatureDataset,
    cfg: &EngineConfig,
    feature_subspace: Option<&[usize]>,
    observer: &mut dyn FnMut(&FeatureMask, &ObjectiveVector),
) -> Result<EngineRun> {
    cfg.validate()?;
    let full_dim = ds.feature_count();
    let subspace: Vec<usize> = match feature_subspace {
        Some(s) => {
            if s.len() != cfg.stage_dim {
                return Err(Error::Config(format!(
                    "subspace has {} features but stage_dim is {}",
                    s.len(),
                    cfg.stage_dim
                )));
            }
            let mut seen = HashSet::new();
            for &f in s {
                if f >= full_dim || !seen.insert(f) {
                    return Err(Error::Config(format!(
                        "subspace index {f} is out of range or repeated"
                    )));
                }
            }
            s.to_vec()
        }
        None => {
            if cfg.stage_dim != full_dim {
                return Err(Error::Config(format!(
                    "stage_dim {} does not match dataset dimension {full_dim}",
                    cfg.stage_dim
                )));
            }
            (0..full_dim).collect()
        }
    };
    let stage = if feature_subspace.is_some() {
        Stage::Fine
    } else {
        Stage::Coarse
    };

    let evaluate = |m: &FeatureMask| -> Result<ObjectiveVector> {
        let features: Vec<usize> = m.indices().into_iter().map(|i| subspace[i]).collect();
        evaluate_features(ds, &features, cfg.k, Split::Validation, cfg.stage_dim)
    };
    let mut evaluations = 0usize;
    let mut evaluate_all = |pop: Vec<Individual>, count: &mut usize| -> Result<Vec<Individual>> {
        let objs = pop
            .par_iter()
            .map(|ind| evaluate(&ind.mask))
            .collect::<Result<Vec<_>>>()?;
        *count += pop.len();
        Ok(pop
            .into_iter()
            .zip(objs)
            .map(|(ind, o)| {
                observer(&ind.mask, &o);
                Individual::evaluated(ind.mask, o)
            })
            .collect())
    };

    let np = cfg.population_size;
    let rate = cfg.effective_mutation_rate();
    let refs = reference_points(np);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let mut population = evaluate_all(init_population(cfg, &mut rng), &mut evaluations)?;
    let mut generations = 0;
    while generations < cfg.max_generations {
        if let Some(cap) = cfg.max_evaluations {
            if evaluations + np > cap {
                break;
            }
        }
        let mut order: Vec<usize> = (0..np).collect();
        order.shuffle(&mut rng);
        let mut children = Vec::with_capacity(np);
        for pair in order.chunks_exact(2) {
            let (p1, p2) = (&population[pair[0]].mask, &population[pair[1]].mask);
            let (c1, c2) = if rng.random_bool(cfg.crossover_rate) {
                one_point_crossover(p1, p2, cfg.cf, &mut rng)
            } else {
                (p1.clone(), p2.clone())
            };
            children.push(Individual::new(bitwise_mutation(&c1, rate, cfg.cf, &mut rng)));
            children.push(Individual::new(bitwise_mutation(&c2, rate, cfg.cf, &mut rng)));
        }
        let children = evaluate_all(children, &mut evaluations)?;
        let mut merged = population;
        merged.extend(children);
        population = nsga3_select(merged, np, &refs, &mut rng);
        generations += 1;
    }

    let points: Vec<[f64; 2]> = population.iter().map(|i| i.objectives().pair()).collect();
    let mut seen = HashSet::new();
    let mut solutions: Vec<Individual> = nondominated_indices(&points)
        .into_iter()
        .filter(|&i| seen.insert(population[i].mask.clone()))
        .map(|i| {
            let ind = &population[i];
            Individual::evaluated(ind.mask.lift(&subspace, full_dim), ind.objectives().clone())
        })
        .collect();
    sort_front(&mut solutions);

    Ok(EngineRun {
        front: ParetoFront {
            run_id: 0,
            stage,
            seed: cfg.seed,
            stage_dim: cfg.stage_dim,
            solutions,
        },
        evaluations,
        generations,
    })
}

/// Orders by feature count, then error, then mask.
pub(crate) fn sort_front(solutions: &mut [Individual]) {
    solutions.sort_by(|a, b| {
        let (oa, ob) = (a.objectives(), b.objectives());
        oa.raw_feature_count
            .cmp(&ob.raw_feature_count)
            .then(oa.retrieval_error.total_cmp(&ob.retrieval_error))
            .then(a.mask.cmp(&b.mask))
    });
}
