use rand::seq::IndexedRandom;
use rand::Rng;

use super::sorting::nondominated_sort;
use super::Individual;

/// Selects `np` of `points` (2 objectives, minimized).
///
/// Whole fronts are admitted while they fit. The front that overflows is filled by
/// reference-line niching: objectives are translated by the ideal point (minimum of all
/// points) and scaled by the extent of the first front (a zero extent becomes 1); each
/// candidate attaches to the line with the smallest perpendicular distance; then the
/// least crowded line (random among ties) takes its closest unpicked candidate.
///
/// Returns indices into `points`: admitted fronts in order, then niche picks.
pub fn nsga3_select_indices<R: Rng + ?Sized>(
    points: &[[f64; 2]],
    np: usize,
    refs: &[[f64; 2]],
    rng: &mut R,
) -> Vec<usize> {
    assert!(np <= points.len(), "cannot select {np} of {} points", points.len());
    assert!(!refs.is_empty());
    let fronts = nondominated_sort(points);
    let mut selected: Vec<usize> = Vec::with_capacity(np);
    let mut splitting: Vec<usize> = Vec::new();
    for front in &fronts {
        if selected.len() + front.len() <= np {
            selected.extend_from_slice(front);
            if selected.len() == np {
                return selected;
            }
        } else {
            splitting = front.clone();
            break;
        }
    }
    if selected.len() == np {
        return selected;
    }

    let mut ideal = [f64::INFINITY; 2];
    for p in points {
        for m in 0..2 {
            ideal[m] = ideal[m].min(p[m]);
        }
    }
    let mut nadir = [f64::NEG_INFINITY; 2];
    for &i in &fronts[0] {
        for m in 0..2 {
            nadir[m] = nadir[m].max(points[i][m]);
        }
    }
    let mut extent = [0.0; 2];
    for m in 0..2 {
        let e = nadir[m] - ideal[m];
        extent[m] = if e > 0.0 { e } else { 1.0 };
    }
    let units: Vec<[f64; 2]> = refs
        .iter()
        .map(|w| {
            let n = (w[0] * w[0] + w[1] * w[1]).sqrt();
            [w[0] / n, w[1] / n]
        })
        .collect();
    let associate = |i: usize| -> (usize, f64) {
        let f = [
            (points[i][0] - ideal[0]) / extent[0],
            (points[i][1] - ideal[1]) / extent[1],
        ];
        let norm2 = f[0] * f[0] + f[1] * f[1];
        let mut best = (0, f64::INFINITY);
        for (j, u) in units.iter().enumerate() {
            let proj = f[0] * u[0] + f[1] * u[1];
            let d = (norm2 - proj * proj).max(0.0).sqrt();
            if d < best.1 {
                best = (j, d);
            }
        }
        best
    };

    let mut niche = vec![0usize; refs.len()];
    for &i in &selected {
        niche[associate(i).0] += 1;
    }
    // (candidate index, perpendicular distance) per line
    let mut pool: Vec<Vec<(usize, f64)>> = vec![Vec::new(); refs.len()];
    for &i in &splitting {
        let (j, d) = associate(i);
        pool[j].push((i, d));
    }

    let mut remaining = np - selected.len();
    while remaining > 0 {
        let open: Vec<usize> = (0..refs.len()).filter(|&j| !pool[j].is_empty()).collect();
        let min_count = open.iter().map(|&j| niche[j]).min().expect("candidates left");
        let ties: Vec<usize> = open.into_iter().filter(|&j| niche[j] == min_count).collect();
        let j = *ties.choose(rng).expect("non-empty ties");
        let pos = pool[j]
            .iter()
            .enumerate()
            .min_by(|(_, a), (_, b)| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
            .map(|(pos, _)| pos)
            .expect("non-empty pool");
        let (i, _) = pool[j].swap_remove(pos);
        selected.push(i);
        niche[j] += 1;
        remaining -= 1;
    }
    selected
}

/// [`nsga3_select_indices`] over evaluated individuals.
pub fn nsga3_select<R: Rng + ?Sized>(
    merged: Vec<Individual>,
    np: usize,
    refs: &[[f64; 2]],
    rng: &mut R,
) -> Vec<Individual> {
    let points: Vec<[f64; 2]> = merged.iter().map(|ind| ind.objectives().pair()).collect();
    let picks = nsga3_select_indices(&points, np, refs, rng);
    let mut slots: Vec<Option<Individual>> = merged.into_iter().map(Some).collect();
    picks
        .into_iter()
        .map(|i| slots[i].take().expect("index picked once"))
        .collect()
}
