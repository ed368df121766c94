use rand::seq::index::sample;
use rand::Rng;

use super::{EngineConfig, Individual};
use crate::mask::FeatureMask;

/// A mask of length `dim` with exactly `count` uniformly chosen bits set.
pub fn random_mask<R: Rng + ?Sized>(dim: usize, count: usize, rng: &mut R) -> FeatureMask {
    let picks = sample(rng, dim, count);
    FeatureMask::from_indices(dim, &picks.into_vec())
}

/// `NP` unevaluated individuals; individual `i` gets `NF_i ~ U{1..CF}` random bits.
pub fn init_population<R: Rng + ?Sized>(cfg: &EngineConfig, rng: &mut R) -> Vec<Individual> {
    let counts: Vec<usize> = (0..cfg.population_size)
        .map(|_| rng.random_range(1..=cfg.cf))
        .collect();
    counts
        .into_iter()
        .map(|nf| Individual::new(random_mask(cfg.stage_dim, nf, rng)))
        .collect()
}

/// Children `p1[..cut] ++ p2[cut..]` and `p2[..cut] ++ p1[cut..]`.
pub fn crossover_at(p1: &FeatureMask, p2: &FeatureMask, cut: usize) -> (FeatureMask, FeatureMask) {
    assert_eq!(p1.len(), p2.len(), "parents differ in length");
    assert!(cut <= p1.len());
    let (a, b) = (p1.bits(), p2.bits());
    let c1 = a[..cut].iter().chain(&b[cut..]).copied().collect();
    let c2 = b[..cut].iter().chain(&a[cut..]).copied().collect();
    (FeatureMask::from_bits(c1), FeatureMask::from_bits(c2))
}

/// One-point crossover with the cut drawn from `1..D`, then repair of both children.
/// Masks of length < 2 have no interior cut and are copied.
pub fn one_point_crossover<R: Rng + ?Sized>(
    p1: &FeatureMask,
    p2: &FeatureMask,
    cf: usize,
    rng: &mut R,
) -> (FeatureMask, FeatureMask) {
    let (c1, c2) = if p1.len() < 2 {
        (p1.clone(), p2.clone())
    } else {
        let cut = rng.random_range(1..p1.len());
        crossover_at(p1, p2, cut)
    };
    let c1 = repair_mask(&c1, cf, rng);
    let c2 = repair_mask(&c2, cf, rng);
    (c1, c2)
}

/// Flips each bit independently with probability `rate` (no repair).
pub fn flip_bits<R: Rng + ?Sized>(m: &FeatureMask, rate: f64, rng: &mut R) -> FeatureMask {
    let mut out = m.clone();
    if rate <= 0.0 {
        return out;
    }
    for i in 0..out.len() {
        if rng.random_bool(rate) {
            out.flip(i);
        }
    }
    out
}

/// Bit-flip mutation followed by repair.
pub fn bitwise_mutation<R: Rng + ?Sized>(
    m: &FeatureMask,
    rate: f64,
    cf: usize,
    rng: &mut R,
) -> FeatureMask {
    let flipped = flip_bits(m, rate, rng);
    repair_mask(&flipped, cf, rng)
}

/// Restores `1 <= popcount <= cf`.
///
/// With `EF` selected bits and `EF > cf`, draws `RF ~ U[EF - cf, EF - 1]` and clears `RF`
/// uniformly chosen selected bits. An empty mask gains one uniformly chosen bit.
pub fn repair_mask<R: Rng + ?Sized>(m: &FeatureMask, cf: usize, rng: &mut R) -> FeatureMask {
    let ef = m.popcount();
    let mut out = m.clone();
    if ef == 0 {
        if !out.is_empty() {
            let i = rng.random_range(0..out.len());
            out.set(i, true);
        }
    } else if ef > cf {
        // Upper bound EF - 1 keeps at least one feature.
        let rf = rng.random_range(ef - cf..=ef - 1);
        let selected = m.indices();
        for pos in sample(rng, ef, rf) {
            out.set(selected[pos], false);
        }
    }
    out
}
