use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use emofs::dataset::{
    load_csv, mean_feature_vectors, save_csv, synthesize, CsvSchema, FeatureDataset, Split,
    SplitCounts, SyntheticSpec,
};

fn random_dataset(rng: &mut ChaCha8Rng, rows: usize, dim: usize) -> FeatureDataset {
    let values = (0..rows)
        .map(|_| (0..dim).map(|_| rng.random_range(-1e3..1e3)).collect())
        .collect();
    let labels = (0..rows).map(|i| format!("class{}", i % 3)).collect();
    let splits = (0..rows)
        .map(|i| [Split::Train, Split::Validation, Split::Test][i % 3])
        .collect();
    let groups = (0..rows).map(|i| format!("slide-{}", i / 4)).collect();
    FeatureDataset::new(values, labels, splits, Some(groups)).unwrap()
}

#[test]
fn csv_round_trip_preserves_values() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let ds = random_dataset(&mut rng, 37, 9);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ds.csv");
    save_csv(&ds, &path).unwrap();
    let back = load_csv(&path, &CsvSchema::default()).unwrap();

    assert_eq!(back.len(), ds.len());
    assert_eq!(back.feature_count(), ds.feature_count());
    assert_eq!(back.class_ids(), ds.class_ids());
    assert_eq!(back.groups(), ds.groups());
    for i in 0..ds.len() {
        assert_eq!(back.label_name(i), ds.label_name(i));
        assert_eq!(back.split(i), ds.split(i));
        for (a, b) in back.row(i).iter().zip(ds.row(i)) {
            assert!((a - b).abs() <= 1e-9, "row {i}: {a} vs {b}");
        }
    }
    assert_eq!(back.fingerprint().unwrap(), ds.fingerprint().unwrap());
}

#[test]
fn mfv_matches_two_pass_oracle() {
    let (groups, per_group, dim) = (3, 135, 1024);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let n = groups * per_group;
    // interleave groups so first-seen order is exercised
    let group_of = |i: usize| i % groups;
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            (0..dim)
                .map(|_| rng.random_range(-2.0..2.0) + group_of(i) as f64)
                .collect()
        })
        .collect();
    let labels = (0..n).map(|i| format!("t{}", group_of(i))).collect();
    let splits = (0..n).map(|_| Split::Train).collect();
    let gids = (0..n).map(|i| format!("g{}", group_of(i))).collect();
    let ds = FeatureDataset::new(rows.clone(), labels, splits, Some(gids)).unwrap();

    let mfv = mean_feature_vectors(&ds).unwrap();
    assert_eq!((mfv.len(), mfv.feature_count()), (groups, dim));
    assert!(mfv.groups().is_none());

    for g in 0..groups {
        let members: Vec<&Vec<f64>> = (0..n).filter(|&i| group_of(i) == g).map(|i| &rows[i]).collect();
        // two-pass: mean first, then a residual correction
        for j in 0..dim {
            let naive = members.iter().map(|r| r[j]).sum::<f64>() / members.len() as f64;
            let residual =
                members.iter().map(|r| r[j] - naive).sum::<f64>() / members.len() as f64;
            let expected = naive + residual;
            assert!((mfv.row(g)[j] - expected).abs() <= 1e-12, "group {g} col {j}");
        }
        assert_eq!(mfv.label_name(g), format!("t{g}"));
    }
}

#[test]
fn mfv_rejects_split_conflict() {
    let ds = FeatureDataset::new(
        vec![vec![0.0], vec![1.0]],
        vec!["A".into(), "A".into()],
        vec![Split::Train, Split::Test],
        Some(vec!["g".into(), "g".into()]),
    )
    .unwrap();
    assert!(matches!(
        mean_feature_vectors(&ds),
        Err(emofs::Error::Consistency { .. })
    ));
}

fn class_column_mean(ds: &FeatureDataset, class: usize, col: usize) -> (f64, usize) {
    let rows: Vec<usize> = (0..ds.len()).filter(|&i| ds.label(i) == class).collect();
    let sum: f64 = rows.iter().map(|&i| ds.row(i)[col]).sum();
    (sum / rows.len() as f64, rows.len())
}

#[test]
fn synthetic_class_means_follow_separation() {
    let spec = SyntheticSpec {
        feature_count: 64,
        informative_count: 4,
        class_count: 3,
        samples_per_split: SplitCounts {
            train: 100,
            validation: 50,
            test: 50,
        },
        separation: 3.0,
        noise_sd: 1.0,
        seed: 21,
    };
    let data = synthesize(&spec).unwrap();
    let ds = &data.dataset;
    assert_eq!(data.informative.len(), 4);
    assert!(data.informative.windows(2).all(|w| w[0] < w[1]));

    // difference of two class means, each over n samples with unit noise
    let n: f64 = 200.0;
    let se = (2.0 / n).sqrt();
    // pooled over columns to keep the number of checks small
    let pooled_gap = |cols: &[usize], a: usize, b: usize| {
        let diffs: Vec<f64> = cols
            .iter()
            .map(|&j| class_column_mean(ds, b, j).0 - class_column_mean(ds, a, j).0)
            .collect();
        diffs.iter().sum::<f64>() / diffs.len() as f64
    };
    let informative = &data.informative;
    let noise: Vec<usize> = (0..64).filter(|f| !informative.contains(f)).collect();
    for (a, b) in [(0, 1), (1, 2)] {
        let gap = pooled_gap(informative, a, b);
        let pooled_se = se / (informative.len() as f64).sqrt();
        assert!((gap - 3.0).abs() <= 3.0 * pooled_se, "informative gap {gap}");
        let gap = pooled_gap(&noise, a, b);
        let pooled_se = se / (noise.len() as f64).sqrt();
        assert!(gap.abs() <= 3.0 * pooled_se, "noise gap {gap}");
    }
}

#[test]
fn synthesize_is_deterministic_and_ordered() {
    let spec = SyntheticSpec {
        feature_count: 16,
        informative_count: 3,
        class_count: 2,
        samples_per_split: SplitCounts {
            train: 4,
            validation: 2,
            test: 3,
        },
        separation: 1.0,
        noise_sd: 0.5,
        seed: 3,
    };
    let a = synthesize(&spec).unwrap();
    let b = synthesize(&spec).unwrap();
    assert_eq!(a.dataset, b.dataset);
    assert_eq!(a.informative, b.informative);
    let ds = &a.dataset;
    assert_eq!(ds.len(), 2 * (4 + 2 + 3));
    assert_eq!(ds.rows_in(Split::Train).len(), 8);
    assert_eq!(ds.rows_in(Split::Test).len(), 6);
    assert_eq!(ds.split(0), Split::Train);
    assert_eq!(ds.split(ds.len() - 1), Split::Test);

    let other = synthesize(&SyntheticSpec { seed: 4, ..spec }).unwrap();
    assert_ne!(other.dataset, a.dataset);
}

#[test]
fn select_features_keeps_metadata() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let ds = random_dataset(&mut rng, 12, 6);
    let sub = ds.select_features(&[4, 1]).unwrap();
    assert_eq!(sub.feature_count(), 2);
    assert_eq!(sub.feature_names(), &["f4".to_string(), "f1".to_string()]);
    for i in 0..ds.len() {
        assert_eq!(sub.row(i), &[ds.row(i)[4], ds.row(i)[1]]);
        assert_eq!(sub.label(i), ds.label(i));
    }
    assert!(ds.select_features(&[6]).is_err());
}
