use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::moea::Stage;

/// `|a ∩ b| / |a ∪ b|` over feature index sets.
pub fn jaccard(a: &[usize], b: &[usize]) -> Result<f64> {
    let a: BTreeSet<usize> = a.iter().copied().collect();
    let b: BTreeSet<usize> = b.iter().copied().collect();
    let union = a.union(&b).count();
    if union == 0 {
        return Err(Error::UndefinedInput("Jaccard index of two empty sets".into()));
    }
    let inter = a.intersection(&b).count();
    Ok(inter as f64 / union as f64)
}

/// Mean pairwise Jaccard index over `L >= 2` subsets.
pub fn stability(subsets: &[Vec<usize>]) -> Result<f64> {
    let l = subsets.len();
    if l < 2 {
        return Err(Error::Validation(format!(
            "stability needs at least two subsets, got {l}"
        )));
    }
    let mut sum = 0.0;
    for i in 0..l {
        for j in (i + 1)..l {
            sum += jaccard(&subsets[i], &subsets[j])?;
        }
    }
    Ok(2.0 * sum / (l * (l - 1)) as f64)
}

/// Pairwise Jaccard matrix and aggregate stability for one stage.
#[derive(Debug, Clone, PartialEq)]
pub struct StabilityReport {
    pub stage: Stage,
    pub subsets: Vec<Vec<usize>>,
    pub pairwise_jaccard: Vec<Vec<f64>>,
    pub s_index: f64,
}

impl StabilityReport {
    pub fn compute(stage: Stage, subsets: Vec<Vec<usize>>) -> Result<Self> {
        let s_index = stability(&subsets)?;
        let l = subsets.len();
        let mut pairwise = vec![vec![0.0; l]; l];
        for i in 0..l {
            for j in i..l {
                let v = jaccard(&subsets[i], &subsets[j])?;
                pairwise[i][j] = v;
                pairwise[j][i] = v;
            }
        }
        Ok(StabilityReport {
            stage,
            subsets,
            pairwise_jaccard: pairwise,
            s_index,
        })
    }
}
