/// `a` dominates `b` under minimization: no worse anywhere, strictly better somewhere.
pub fn dominates(a: &[f64], b: &[f64]) -> bool {
    debug_assert_eq!(a.len(), b.len());
    let mut strictly = false;
    for (x, y) in a.iter().zip(b) {
        if x > y {
            return false;
        }
        if x < y {
            strictly = true;
        }
    }
    strictly
}

/// Fast non-dominated sort. Front 0 is the nondominated set; indices within a front ascend.
pub fn nondominated_sort<P: AsRef<[f64]>>(points: &[P]) -> Vec<Vec<usize>> {
    let n = points.len();
    let mut dominated_by_count = vec![0usize; n];
    let mut dominates_list: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 0..n {
        for j in (i + 1)..n {
            let (a, b) = (points[i].as_ref(), points[j].as_ref());
            if dominates(a, b) {
                dominates_list[i].push(j);
                dominated_by_count[j] += 1;
            } else if dominates(b, a) {
                dominates_list[j].push(i);
                dominated_by_count[i] += 1;
            }
        }
    }
    let mut fronts = Vec::new();
    let mut current: Vec<usize> = (0..n).filter(|&i| dominated_by_count[i] == 0).collect();
    while !current.is_empty() {
        let mut next = Vec::new();
        for &i in &current {
            for &j in &dominates_list[i] {
                dominated_by_count[j] -= 1;
                if dominated_by_count[j] == 0 {
                    next.push(j);
                }
            }
        }
        next.sort_unstable();
        fronts.push(current);
        current = next;
    }
    fronts
}

/// Indices of the nondominated points, ascending.
pub fn nondominated_indices<P: AsRef<[f64]>>(points: &[P]) -> Vec<usize> {
    (0..points.len())
        .filter(|&i| {
            !points
                .iter()
                .any(|q| dominates(q.as_ref(), points[i].as_ref()))
        })
        .collect()
}

/// Das–Dennis points on the 2-objective unit simplex with `n - 1` divisions:
/// `(i/(n-1), 1 - i/(n-1))` for `i = 0..n`.
pub fn reference_points(n: usize) -> Vec<[f64; 2]> {
    assert!(n >= 2, "need at least two reference points");
    let divisions = (n - 1) as f64;
    (0..n)
        .map(|i| {
            let a = i as f64 / divisions;
            [a, 1.0 - a]
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dominance_examples() {
        assert!(dominates(&[0.2, 0.3], &[0.4, 0.5]));
        assert!(!dominates(&[0.2, 0.3], &[0.2, 0.3]));
        assert!(!dominates(&[0.2, 0.5], &[0.4, 0.3]));
        assert!(!dominates(&[0.4, 0.3], &[0.2, 0.5]));
        assert!(dominates(&[0.2, 0.3], &[0.2, 0.5]));
    }

    #[test]
    fn sort_examples() {
        let p = [[0.0, 1.0], [1.0, 0.0], [1.0, 1.0]];
        assert_eq!(nondominated_sort(&p), vec![vec![0, 1], vec![2]]);

        let same = [[0.5, 0.5]; 4];
        assert_eq!(nondominated_sort(&same), vec![vec![0, 1, 2, 3]]);

        let chain = [[0.2, 0.2], [0.0, 0.0], [0.1, 0.1]];
        assert_eq!(nondominated_sort(&chain), vec![vec![1], vec![2], vec![0]]);
    }

    /// Reference points by enumerating all integer compositions of `n - 1` into two parts.
    fn das_dennis_oracle(n: usize) -> Vec<[f64; 2]> {
        let h = n - 1;
        let mut pts = Vec::new();
        for a in 0..=h {
            for b in 0..=h {
                if a + b == h {
                    pts.push([a as f64 / h as f64, b as f64 / h as f64]);
                }
            }
        }
        pts
    }

    #[test]
    fn reference_point_examples() {
        assert_eq!(reference_points(2), vec![[0.0, 1.0], [1.0, 0.0]]);
        assert_eq!(reference_points(3), das_dennis_oracle(3));
        assert_eq!(reference_points(3), vec![[0.0, 1.0], [0.5, 0.5], [1.0, 0.0]]);
        let five = reference_points(5);
        assert_eq!(five, das_dennis_oracle(5));
        for w in five.windows(2) {
            assert!((w[1][0] - w[0][0] - 0.25).abs() < 1e-15);
        }
    }
}
