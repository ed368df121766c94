use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use emofs::config::PipelineConfig;
use emofs::dataset::{load_csv, save_csv, synthesize, CsvSchema, Split, SplitCounts, SyntheticSpec};
use emofs::moea::{dominates, EngineConfig, Stage};
use emofs::pipeline::{
    cmd_coarse, cmd_ffh, cmd_fine, cmd_report, cmd_run, load_stage, ReportOptions, FFH_FILE,
};
use emofs::records::{read_jsonl, write_jsonl, FrontRecord, RunEntry, RunManifest};

fn spec(seed: u64) -> SyntheticSpec {
    SyntheticSpec {
        feature_count: 40,
        informative_count: 4,
        class_count: 3,
        samples_per_split: SplitCounts {
            train: 10,
            validation: 6,
            test: 6,
        },
        separation: 2.0,
        noise_sd: 1.0,
        seed,
    }
}

fn setup(dir: &Path, seed: u64) -> PipelineConfig {
    let data = synthesize(&spec(seed)).unwrap();
    save_csv(&data.dataset, dir.join("data.csv")).unwrap();
    let text = "dataset = data.csv\nout = out\ncf = 8\nnff = 10\nnp = 10\ngenerations = 8\n\
                fine_np = 8\nfine_generations = 6\nr = 3\nseed = 5\ntop_n = 5\n";
    fs::write(dir.join("run.cfg"), text).unwrap();
    PipelineConfig::from_file(dir.join("run.cfg")).unwrap()
}

fn read_csv(path: &Path) -> Vec<BTreeMap<String, String>> {
    let mut rdr = csv::Reader::from_path(path).unwrap();
    let headers = rdr.headers().unwrap().clone();
    rdr.records()
        .map(|r| {
            let r = r.unwrap();
            headers.iter().map(String::from).zip(r.iter().map(String::from)).collect()
        })
        .collect()
}

#[test]
fn coarse_stage_files() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = setup(tmp.path(), 1);
    let manifest = cmd_coarse(&cfg).unwrap();
    let dir = cfg.out.join("coarse");
    assert_eq!(manifest.runs.len(), 3);
    for (i, entry) in manifest.runs.iter().enumerate() {
        assert_eq!(entry.run_id, i);
        assert_eq!(entry.seed, 5 + i as u64);
        assert_eq!(entry.evaluations, 10 * 9);
        let records = read_jsonl(dir.join(&entry.file)).unwrap();
        assert_eq!(records.len(), entry.front_size);
        for r in &records {
            assert!((1..=8).contains(&r.mask.len()));
            assert_eq!(r.stage, Stage::Coarse);
            assert!((r.feature_fraction - r.mask.len() as f64 / 40.0).abs() < 1e-15);
        }
    }
    let files: Vec<_> = fs::read_dir(&dir).unwrap().map(|e| e.unwrap().file_name()).collect();
    assert_eq!(files.len(), 4);

    // jsonl load -> save reproduces the file byte for byte
    let path = dir.join("run_0.jsonl");
    let again = tmp.path().join("copy.jsonl");
    write_jsonl(&again, &read_jsonl(&path).unwrap()).unwrap();
    assert_eq!(fs::read(&path).unwrap(), fs::read(&again).unwrap());
}

#[test]
fn fine_stage_uses_the_histogram() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = setup(tmp.path(), 2);
    cmd_coarse(&cfg).unwrap();
    let ffh = cmd_ffh(&cfg.out.join("coarse"), cfg.nff, &cfg.out).unwrap();
    let rows = fs::read_to_string(cfg.out.join(FFH_FILE)).unwrap();
    assert_eq!(rows.lines().count(), 1 + 40);

    let manifest = cmd_fine(&cfg, &cfg.out.join(FFH_FILE)).unwrap();
    let mut expected = ffh.top.clone();
    expected.sort_unstable();
    assert_eq!(manifest.subspace.as_deref(), Some(expected.as_slice()));
    assert_eq!(manifest.stage_dim, 10);
    let stage = load_stage(&cfg.out.join("fine")).unwrap();
    for front in &stage.fronts {
        for s in &front.solutions {
            assert!(s.mask.indices().iter().all(|f| expected.contains(f)));
            let o = s.objectives();
            assert!((o.feature_fraction - o.raw_feature_count as f64 / 10.0).abs() < 1e-15);
        }
    }
}

fn handmade_archive(dir: &Path) {
    fs::create_dir_all(dir).unwrap();
    let record = FrontRecord {
        run_id: 0,
        stage: Stage::Coarse,
        seed: 0,
        mask: vec![2, 5],
        raw_feature_count: 2,
        feature_fraction: 2.0 / 8.0,
        retrieval_error: 0.25,
        per_class_f1: [("a".to_string(), 0.75), ("b".to_string(), 0.75)].into(),
    };
    write_jsonl(dir.join("run_0.jsonl"), &[record]).unwrap();
    RunManifest {
        stage: Stage::Coarse,
        feature_count: 8,
        stage_dim: 8,
        class_ids: vec!["a".into(), "b".into()],
        dataset_fingerprint: "x".into(),
        config_fingerprint: "y".into(),
        engine: EngineConfig::new(8, 4),
        subspace: None,
        runs: vec![RunEntry {
            run_id: 0,
            seed: 0,
            file: "run_0.jsonl".into(),
            evaluations: 0,
            generations: 0,
            front_size: 1,
        }],
    }
    .save(dir)
    .unwrap();
}

#[test]
fn ffh_of_a_single_subset() {
    let tmp = tempfile::tempdir().unwrap();
    let archive = tmp.path().join("coarse");
    handmade_archive(&archive);
    let out = cmd_ffh(&archive, 2, tmp.path()).unwrap();
    assert_eq!(out.histogram.scores, vec![0.0, 0.0, 2.0, 0.0, 0.0, 2.0, 0.0, 0.0]);
    assert!(out.warning.is_none());
    assert_eq!(out.top, vec![2, 5]);

    let lenient = cmd_ffh(&archive, 4, tmp.path()).unwrap();
    assert!(lenient.warning.is_some());
    assert_eq!(lenient.top, vec![2, 5, 0, 1]);
    let rows = fs::read_to_string(tmp.path().join(FFH_FILE)).unwrap();
    assert_eq!(rows.lines().count(), 1 + 8);
}

#[test]
fn full_run_report() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = setup(tmp.path(), 3);
    let outcome = cmd_run(&cfg).unwrap();
    let report = cfg.out.join("report");

    let best = read_csv(&report.join("best_subsets.csv"));
    for stage in ["coarse", "fine"] {
        assert_eq!(best.iter().filter(|r| r["stage"] == stage).count(), 3);
    }
    for s in &outcome.report.stages {
        let v = s.s_index.unwrap();
        assert!((0.0..=1.0).contains(&v));
    }
    assert_eq!(outcome.report.split, Split::Test);

    let ds = load_csv(&cfg.dataset, &CsvSchema::default()).unwrap();
    let decision = report.join("decision_space");
    let mut seen = 0;
    for entry in fs::read_dir(&decision).unwrap() {
        let rows = read_csv(&entry.unwrap().path());
        // one class front per run
        let mut by_run: BTreeMap<&str, Vec<[f64; 2]>> = BTreeMap::new();
        for r in &rows {
            by_run.entry(&r["run_id"]).or_default().push([
                r["raw_feature_count"].parse().unwrap(),
                r["class_error"].parse().unwrap(),
            ]);
        }
        assert_eq!(by_run.len(), 3);
        for pts in by_run.values() {
            for a in pts {
                assert!(!pts.iter().any(|b| dominates(b, a)));
            }
        }
        seen += 1;
    }
    assert_eq!(seen, 2 * ds.class_count());
    for name in [
        "stability.csv",
        "fronts_coarse.csv",
        "fronts_fine.csv",
        "single_feature_rank.csv",
        "ordered_baseline.csv",
        "wilcoxon.csv",
        "summary.json",
    ] {
        assert!(report.join(name).is_file(), "{name}");
    }
    // three runs are too few for the signed-rank test: recorded as NA, not an error
    let tests = read_csv(&report.join("wilcoxon.csv"));
    assert!(tests.iter().all(|r| r["p_value"] == "NA" && !r["note"].is_empty()));
}

#[test]
fn report_refuses_a_different_dataset() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = setup(tmp.path(), 4);
    cmd_coarse(&cfg).unwrap();
    let other = synthesize(&spec(99)).unwrap().dataset;
    let err = cmd_report(&ReportOptions {
        coarse_dir: Some(cfg.out.join("coarse")),
        fine_dir: None,
        dataset: &other,
        split: Split::Test,
        out_dir: tmp.path().join("report"),
        k: 3,
        top_n: 5,
    })
    .unwrap_err();
    assert!(matches!(err, emofs::Error::Fingerprint(_)), "{err}");
    assert!(!tmp.path().join("report").exists());
}

#[test]
fn rerun_is_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let (ca, cb) = (setup(a.path(), 6), setup(b.path(), 6));
    cmd_coarse(&ca).unwrap();
    cmd_coarse(&cb).unwrap();
    for i in 0..3 {
        let name = format!("coarse/run_{i}.jsonl");
        assert_eq!(
            fs::read(ca.out.join(&name)).unwrap(),
            fs::read(cb.out.join(&name)).unwrap()
        );
    }
    assert_eq!(
        fs::read(ca.out.join("coarse/manifest.json")).unwrap(),
        fs::read(cb.out.join("coarse/manifest.json")).unwrap()
    );
}
