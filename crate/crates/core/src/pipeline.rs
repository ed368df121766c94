//! End-to-end commands: synthesize, coarse runs, histogram, fine runs, report.
//!
//! Output layout under the configured directory:
//!
//! ```text
//! out/coarse/run_{id}.jsonl   out/coarse/manifest.json
//! out/ffh.csv                 out/ffh_top.csv
//! out/fine/run_{id}.jsonl     out/fine/manifest.json
//! out/report/*.csv            out/report/summary.json
//! ```
//!
//! Every file is a deterministic function of the config, the dataset and the seed.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use crate::analysis::{
    best_subset, decision_space, single_feature_rank, wilcoxon_signed_rank, StabilityReport,
    WilcoxonResult,
};
use crate::config::PipelineConfig;
use crate::dataset::{
    load_csv, mean_feature_vectors, save_csv, synthesize, CsvSchema, FeatureDataset, Split,
    SyntheticData, SyntheticSpec,
};
use crate::error::{Error, Result};
use crate::innovization::{
    build_histogram, fine_subspace, ordered_selection, top_features, FreqHistogram, RunArchive,
};
use crate::moea::{run_engine, EngineConfig, ParetoFront, Stage};
use crate::records::{
    front_to_records, read_jsonl, records_to_front, write_jsonl, RunEntry, RunManifest,
};
use crate::retrieval::evaluate_mask;

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn csv_writer() -> csv::Writer<Vec<u8>> {
    csv::Writer::from_writer(Vec::new())
}

fn finish_csv(w: csv::Writer<Vec<u8>>, path: &Path) -> Result<()> {
    let bytes = w
        .into_inner()
        .map_err(|e| Error::Validation(format!("CSV buffer flush failed: {e}")))?;
    write_file(path, &bytes)
}

fn join_indices(idx: &[usize]) -> String {
    idx.iter().map(usize::to_string).collect::<Vec<_>>().join(" ")
}

/// Loads the configured dataset, averaging groups first when `mfv` is set.
pub fn load_dataset(cfg: &PipelineConfig) -> Result<FeatureDataset> {
    let mut ds = load_csv(&cfg.dataset, &CsvSchema::default())?;
    if cfg.mfv {
        ds = mean_feature_vectors(&ds)?;
    }
    if let Some(dim) = cfg.dim {
        if dim != ds.feature_count() {
            return Err(Error::Config(format!(
                "config expects dim {dim} but the dataset has {} features",
                ds.feature_count()
            )));
        }
    }
    Ok(ds)
}

#[derive(Serialize)]
struct GroundTruth<'a> {
    informative: &'a [usize],
    spec: &'a SyntheticSpec,
}

/// Writes a synthetic dataset CSV and a JSON file with the planted feature indices.
pub fn cmd_synth(spec: &SyntheticSpec, csv_path: &Path, truth_path: &Path) -> Result<SyntheticData> {
    let data = synthesize(spec)?;
    save_csv(&data.dataset, csv_path)?;
    let mut json = serde_json::to_string_pretty(&GroundTruth {
        informative: &data.informative,
        spec,
    })?;
    json.push('\n');
    write_file(truth_path, json.as_bytes())?;
    Ok(data)
}

/// Averages rows per group and writes the result.
pub fn cmd_mfv(input: &Path, output: &Path) -> Result<FeatureDataset> {
    let ds = load_csv(input, &CsvSchema::default())?;
    let out = mean_feature_vectors(&ds)?;
    save_csv(&out, output)?;
    Ok(out)
}

fn run_file(run_id: usize) -> String {
    format!("run_{run_id}.jsonl")
}

/// Runs `r` independent searches (seed `base + run_id`) and persists their fronts.
fn run_stage(
    ds: &FeatureDataset,
    engine: &EngineConfig,
    subspace: Option<&[usize]>,
    stage: Stage,
    r: usize,
    dir: &Path,
    config_fingerprint: String,
) -> Result<RunManifest> {
    create_dir(dir)?;
    let runs = (0..r)
        .into_par_iter()
        .map(|run_id| {
            let cfg = EngineConfig {
                seed: engine.seed.wrapping_add(run_id as u64),
                ..engine.clone()
            };
            run_engine(ds, &cfg, subspace)
                .map(|mut run| {
                    run.front.run_id = run_id;
                    run.front.stage = stage;
                    run
                })
                .map_err(|e| Error::Run {
                    run_id,
                    source: Box::new(e),
                })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut entries = Vec::with_capacity(r);
    for run in &runs {
        let file = run_file(run.front.run_id);
        write_jsonl(dir.join(&file), &front_to_records(&run.front, ds.class_ids()))?;
        entries.push(RunEntry {
            run_id: run.front.run_id,
            seed: run.front.seed,
            file,
            evaluations: run.evaluations,
            generations: run.generations,
            front_size: run.front.len(),
        });
    }
    let manifest = RunManifest {
        stage,
        feature_count: ds.feature_count(),
        stage_dim: engine.stage_dim,
        class_ids: ds.class_ids().to_vec(),
        dataset_fingerprint: ds.fingerprint()?,
        config_fingerprint,
        engine: engine.clone(),
        subspace: subspace.map(<[usize]>::to_vec),
        runs: entries,
    };
    manifest.save(dir)?;
    Ok(manifest)
}

/// Coarse stage: `r` constrained runs over all features into `out/coarse`.
pub fn cmd_coarse(cfg: &PipelineConfig) -> Result<RunManifest> {
    cfg.validate()?;
    let ds = load_dataset(cfg)?;
    let engine = cfg.coarse_engine(ds.feature_count());
    engine.validate()?;
    run_stage(
        &ds,
        &engine,
        None,
        Stage::Coarse,
        cfg.r,
        &cfg.out.join("coarse"),
        cfg.fingerprint(),
    )
}

/// A stage directory read back from disk.
#[derive(Debug, Clone)]
pub struct LoadedStage {
    pub manifest: RunManifest,
    pub fronts: Vec<ParetoFront>,
}

impl LoadedStage {
    pub fn archive(&self) -> Result<RunArchive> {
        RunArchive::new(
            self.fronts.clone(),
            self.manifest.feature_count,
            self.manifest.dataset_fingerprint.clone(),
            self.manifest.config_fingerprint.clone(),
        )
    }
}

pub fn load_stage(dir: &Path) -> Result<LoadedStage> {
    let manifest = RunManifest::load(dir)?;
    if manifest.runs.is_empty() {
        return Err(Error::Validation(format!(
            "{} lists no runs",
            dir.join(RunManifest::FILE_NAME).display()
        )));
    }
    let fronts = manifest
        .runs
        .iter()
        .map(|entry| {
            let records = read_jsonl(dir.join(&entry.file))?;
            records_to_front(
                &records,
                entry.run_id,
                manifest.stage,
                entry.seed,
                manifest.feature_count,
                manifest.stage_dim,
                &manifest.class_ids,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(LoadedStage { manifest, fronts })
}

/// Histogram plus the features handed to the fine stage.
#[derive(Debug, Clone)]
pub struct FfhOutput {
    pub histogram: FreqHistogram,
    pub top: Vec<usize>,
    /// Set when fewer than `nff` features have a nonzero score.
    pub warning: Option<String>,
}

pub const FFH_FILE: &str = "ffh.csv";
pub const FFH_TOP_FILE: &str = "ffh_top.csv";

/// Builds the histogram of a coarse archive and writes `ffh.csv` (one row per feature,
/// index order) and `ffh_top.csv` (top `nff` in score order) into `out_dir`.
pub fn cmd_ffh(archive_dir: &Path, nff: usize, out_dir: &Path) -> Result<FfhOutput> {
    let stage = load_stage(archive_dir)?;
    let h = build_histogram(&stage.archive()?);
    let top = top_features(&h, nff)?;
    let nonzero = h.nonzero_count();
    let warning = (nff > nonzero).then(|| {
        format!(
            "nff = {nff} but only {nonzero} features have a nonzero score; \
             zero-score features were admitted in index order"
        )
    });
    create_dir(out_dir)?;
    write_histogram(&h, &out_dir.join(FFH_FILE))?;
    let mut w = csv_writer();
    w.write_record(["rank", "feature_index", "score"])?;
    for (rank, &f) in top.iter().enumerate() {
        w.write_record([rank.to_string(), f.to_string(), h.scores[f].to_string()])?;
    }
    finish_csv(w, &out_dir.join(FFH_TOP_FILE))?;
    Ok(FfhOutput {
        histogram: h,
        top,
        warning,
    })
}

pub fn write_histogram(h: &FreqHistogram, path: &Path) -> Result<()> {
    let mut w = csv_writer();
    w.write_record(["feature_index", "score"])?;
    for (f, s) in h.scores.iter().enumerate() {
        w.write_record([f.to_string(), s.to_string()])?;
    }
    finish_csv(w, path)
}

/// Reads `ffh.csv` back; rows must cover indices `0..D` in order.
pub fn read_histogram(path: &Path, runs: usize) -> Result<FreqHistogram> {
    let mut rdr = csv::Reader::from_path(path)?;
    let mut scores = Vec::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let parse_err = |column: &str, message: String| Error::Parse {
            row,
            column: column.into(),
            message,
        };
        let idx: usize = rec
            .get(0)
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| parse_err("feature_index", "not an index".into()))?;
        if idx != row {
            return Err(parse_err("feature_index", format!("expected {row}, found {idx}")));
        }
        let score: f64 = rec
            .get(1)
            .and_then(|s| s.parse().ok())
            .filter(|v: &f64| v.is_finite() && *v >= 0.0)
            .ok_or_else(|| parse_err("score", "not a non-negative number".into()))?;
        scores.push(score);
    }
    if scores.is_empty() {
        return Err(Error::Validation(format!("{} is empty", path.display())));
    }
    Ok(FreqHistogram::from_scores(scores, runs))
}

/// Fine stage: `r` unconstrained runs over the top-`nff` features of `ffh_path`.
pub fn cmd_fine(cfg: &PipelineConfig, ffh_path: &Path) -> Result<RunManifest> {
    cfg.validate()?;
    let ds = load_dataset(cfg)?;
    let h = read_histogram(ffh_path, cfg.r)?;
    if h.feature_count() != ds.feature_count() {
        return Err(Error::Validation(format!(
            "histogram covers {} features but the dataset has {}",
            h.feature_count(),
            ds.feature_count()
        )));
    }
    let subspace = fine_subspace(&h, cfg.nff)?;
    let engine = cfg.fine_engine();
    engine.validate()?;
    run_stage(
        &ds,
        &engine,
        Some(&subspace),
        Stage::Fine,
        cfg.r,
        &cfg.out.join("fine"),
        cfg.fingerprint(),
    )
}

pub struct ReportOptions<'a> {
    pub coarse_dir: Option<PathBuf>,
    pub fine_dir: Option<PathBuf>,
    pub dataset: &'a FeatureDataset,
    pub split: Split,
    pub out_dir: PathBuf,
    pub k: usize,
    pub top_n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StageSummary {
    pub stage: Stage,
    pub runs: usize,
    /// Mean over runs of the best subset's macro-F1 on the report split.
    pub mean_best_f1: f64,
    pub mean_best_size: f64,
    pub s_index: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    pub name: String,
    pub result: Option<WilcoxonResult>,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportSummary {
    pub split: Split,
    pub stages: Vec<StageSummary>,
    pub comparisons: Vec<Comparison>,
}

/// Best subset of one run, scored on the report split.
#[derive(Debug, Clone)]
struct BestRow {
    run_id: usize,
    features: Vec<usize>,
    validation_error: f64,
    split_f1: f64,
}

fn best_rows(
    fronts: &[ParetoFront],
    ds: &FeatureDataset,
    split: Split,
    k: usize,
) -> Result<Vec<BestRow>> {
    fronts
        .par_iter()
        .map(|front| {
            let best = best_subset(front)?;
            let scored = evaluate_mask(ds, &best.mask, k, split, front.stage_dim)?;
            Ok(BestRow {
                run_id: front.run_id,
                features: best.mask.indices(),
                validation_error: best.objectives().retrieval_error,
                split_f1: scored.macro_f1(),
            })
        })
        .collect()
}

fn sanitize(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' { c } else { '_' })
        .collect()
}

fn compare(name: &str, a: &[f64], b: &[f64]) -> Comparison {
    match wilcoxon_signed_rank(a, b) {
        Ok(r) => Comparison {
            name: name.into(),
            result: Some(r),
            note: None,
        },
        Err(e) => Comparison {
            name: name.into(),
            result: None,
            note: Some(e.to_string()),
        },
    }
}

fn check_fingerprint(stage: &LoadedStage, expected: &str, dir: &Path) -> Result<()> {
    if stage.manifest.dataset_fingerprint != expected {
        return Err(Error::Fingerprint(format!(
            "{} was produced from a dataset with fingerprint {} but the supplied dataset \
             hashes to {expected}; regenerate the runs or pass the matching dataset",
            dir.display(),
            stage.manifest.dataset_fingerprint
        )));
    }
    Ok(())
}

/// Writes the report bundle into `opts.out_dir`.
pub fn cmd_report(opts: &ReportOptions<'_>) -> Result<ReportSummary> {
    let ds = opts.dataset;
    let fingerprint = ds.fingerprint()?;
    let mut stages: Vec<LoadedStage> = Vec::new();
    for dir in [&opts.coarse_dir, &opts.fine_dir].into_iter().flatten() {
        let stage = load_stage(dir)?;
        check_fingerprint(&stage, &fingerprint, dir)?;
        stages.push(stage);
    }
    if stages.is_empty() {
        return Err(Error::Validation("no coarse or fine archive given".into()));
    }
    let out = &opts.out_dir;
    create_dir(out)?;
    create_dir(&out.join("decision_space"))?;

    let split_col = format!("{}_macro_f1", opts.split);
    let mut best_w = csv_writer();
    best_w.write_record(["stage", "run_id", "size", "validation_error", &split_col, "features"])?;
    let mut stab_w = csv_writer();
    stab_w.write_record(["stage", "subsets", "s_index"])?;

    let mut summaries = Vec::new();
    let mut best_by_stage: Vec<(Stage, Vec<BestRow>)> = Vec::new();
    for stage in &stages {
        let st = stage.manifest.stage;
        let rows = best_rows(&stage.fronts, ds, opts.split, opts.k)?;
        for r in &rows {
            best_w.write_record([
                st.to_string(),
                r.run_id.to_string(),
                r.features.len().to_string(),
                r.validation_error.to_string(),
                r.split_f1.to_string(),
                join_indices(&r.features),
            ])?;
        }

        let subsets: Vec<Vec<usize>> = rows.iter().map(|r| r.features.clone()).collect();
        let s_index = if subsets.len() >= 2 {
            let rep = StabilityReport::compute(st, subsets)?;
            let mut jw = csv_writer();
            let mut header = vec!["run_id".to_string()];
            header.extend(rows.iter().map(|r| r.run_id.to_string()));
            jw.write_record(&header)?;
            for (i, row) in rep.pairwise_jaccard.iter().enumerate() {
                let mut rec = vec![rows[i].run_id.to_string()];
                rec.extend(row.iter().map(f64::to_string));
                jw.write_record(&rec)?;
            }
            finish_csv(jw, &out.join(format!("jaccard_{st}.csv")))?;
            stab_w.write_record([st.to_string(), rows.len().to_string(), rep.s_index.to_string()])?;
            Some(rep.s_index)
        } else {
            None
        };

        let n = rows.len() as f64;
        summaries.push(StageSummary {
            stage: st,
            runs: rows.len(),
            mean_best_f1: rows.iter().map(|r| r.split_f1).sum::<f64>() / n,
            mean_best_size: rows.iter().map(|r| r.features.len() as f64).sum::<f64>() / n,
            s_index,
        });

        // Decision space: one CSV per class, rows from every run.
        let spaces = stage
            .fronts
            .iter()
            .map(|f| decision_space(f, ds, opts.split, opts.k).map(|d| (f.run_id, d)))
            .collect::<Result<Vec<_>>>()?;
        for (c, class) in ds.class_ids().iter().enumerate() {
            let mut w = csv_writer();
            w.write_record(["run_id", "raw_feature_count", "class_error", "features"])?;
            for (run_id, space) in &spaces {
                for p in &space.classes[c].points {
                    w.write_record([
                        run_id.to_string(),
                        p.raw_feature_count.to_string(),
                        p.class_error.to_string(),
                        join_indices(&p.mask.indices()),
                    ])?;
                }
            }
            let name = format!("{st}_{}.csv", sanitize(class));
            finish_csv(w, &out.join("decision_space").join(name))?;
        }

        // Front points for plotting (error = 1 - validation macro-F1).
        let mut fw = csv_writer();
        fw.write_record(["run_id", "raw_feature_count", "feature_fraction", "retrieval_error"])?;
        for f in &stage.fronts {
            for s in &f.solutions {
                let o = s.objectives();
                fw.write_record([
                    f.run_id.to_string(),
                    o.raw_feature_count.to_string(),
                    o.feature_fraction.to_string(),
                    o.retrieval_error.to_string(),
                ])?;
            }
        }
        finish_csv(fw, &out.join(format!("fronts_{st}.csv")))?;
        best_by_stage.push((st, rows));
    }
    finish_csv(best_w, &out.join("best_subsets.csv"))?;
    finish_csv(stab_w, &out.join("stability.csv"))?;

    let rows_of = |s: Stage| {
        best_by_stage
            .iter()
            .find(|(st, _)| *st == s)
            .map(|(_, rows)| rows)
    };
    let mut comparisons = Vec::new();
    if let Some(coarse) = stages.iter().find(|s| s.manifest.stage == Stage::Coarse) {
        let h = build_histogram(&coarse.archive()?);
        let members: Vec<_> = coarse
            .fronts
            .iter()
            .flat_map(|f| f.solutions.iter().cloned())
            .collect();
        let top_n = opts.top_n.min(h.feature_count());
        let ranking = single_feature_rank(&h, &members, ds, top_n, opts.split, opts.k)?;
        let mut w = csv_writer();
        w.write_record(["rank", "feature", "freq_score", "singleton_f1", "rank_fraction", "difference"])?;
        for (i, r) in ranking.ranks.iter().enumerate() {
            w.write_record([
                (i + 1).to_string(),
                r.feature.to_string(),
                r.freq_score.to_string(),
                r.singleton_f1.to_string(),
                r.rank_fraction.to_string(),
                r.difference.to_string(),
            ])?;
        }
        finish_csv(w, &out.join("single_feature_rank.csv"))?;

        if let Some(fine_rows) = rows_of(Stage::Fine) {
            let coarse_rows = rows_of(Stage::Coarse).expect("coarse rows computed");
            let mut w = csv_writer();
            w.write_record(["run_id", "size", "fine_f1", "ordered_f1"])?;
            let mut fine_f1 = Vec::new();
            let mut ordered_f1 = Vec::new();
            for r in fine_rows {
                let mask = ordered_selection(&h, r.features.len())?;
                let o = evaluate_mask(ds, &mask, opts.k, opts.split, r.features.len())?;
                w.write_record([
                    r.run_id.to_string(),
                    r.features.len().to_string(),
                    r.split_f1.to_string(),
                    o.macro_f1().to_string(),
                ])?;
                fine_f1.push(r.split_f1);
                ordered_f1.push(o.macro_f1());
            }
            finish_csv(w, &out.join("ordered_baseline.csv"))?;

            if coarse_rows.len() == fine_rows.len() {
                let c: Vec<f64> = coarse_rows.iter().map(|r| r.split_f1).collect();
                comparisons.push(compare("fine_vs_coarse", &fine_f1, &c));
            } else {
                comparisons.push(Comparison {
                    name: "fine_vs_coarse".into(),
                    result: None,
                    note: Some(format!(
                        "run counts differ: {} fine vs {} coarse",
                        fine_rows.len(),
                        coarse_rows.len()
                    )),
                });
            }
            comparisons.push(compare("fine_vs_ordered", &fine_f1, &ordered_f1));
        }
    }
    let mut w = csv_writer();
    w.write_record(["comparison", "n", "statistic", "p_value", "exact", "note"])?;
    for c in &comparisons {
        let (n, stat, p, exact) = match &c.result {
            Some(r) => (
                r.n.to_string(),
                r.statistic.to_string(),
                r.p_value.to_string(),
                r.exact.to_string(),
            ),
            None => ("NA".into(), "NA".into(), "NA".into(), "NA".into()),
        };
        w.write_record([c.name.clone(), n, stat, p, exact, c.note.clone().unwrap_or_default()])?;
    }
    finish_csv(w, &out.join("wilcoxon.csv"))?;

    let summary = ReportSummary {
        split: opts.split,
        stages: summaries,
        comparisons,
    };
    let mut json = serde_json::to_string_pretty(&summary)?;
    json.push('\n');
    write_file(&out.join("summary.json"), json.as_bytes())?;
    Ok(summary)
}

/// Outcome of the full pipeline.
#[derive(Debug, Clone)]
pub struct PipelineOutcome {
    pub coarse: RunManifest,
    pub ffh: FfhOutput,
    pub fine: RunManifest,
    pub report: ReportSummary,
}

/// Coarse runs, histogram, fine runs and report in one go.
pub fn cmd_run(cfg: &PipelineConfig) -> Result<PipelineOutcome> {
    let coarse = cmd_coarse(cfg)?;
    let ffh = cmd_ffh(&cfg.out.join("coarse"), cfg.nff, &cfg.out)?;
    let fine = cmd_fine(cfg, &cfg.out.join(FFH_FILE))?;
    let ds = load_dataset(cfg)?;
    let report = cmd_report(&ReportOptions {
        coarse_dir: Some(cfg.out.join("coarse")),
        fine_dir: Some(cfg.out.join("fine")),
        dataset: &ds,
        split: cfg.report_split,
        out_dir: cfg.out.join("report"),
        k: cfg.k,
        top_n: cfg.top_n,
    })?;
    Ok(PipelineOutcome {
        coarse,
        ffh,
        fine,
        report,
    })
}

/// Writes the dataset restricted to `features` (plus label/split/group) for external
/// clustering or embedding tools.
pub fn cmd_export(ds: &FeatureDataset, features: &[usize], path: &Path) -> Result<()> {
    if features.is_empty() {
        return Err(Error::InvalidMask("no features to export".into()));
    }
    save_csv(&ds.select_features(features)?, path)
}
