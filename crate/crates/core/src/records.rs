//! On-disk front records (JSON lines) and per-stage run manifests.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mask::FeatureMask;
use crate::moea::{EngineConfig, Individual, ParetoFront, Stage};
use crate::retrieval::ObjectiveVector;

/// One front member as persisted; `mask` lists original feature indices, ascending.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontRecord {
    pub run_id: usize,
    pub stage: Stage,
    pub seed: u64,
    pub mask: Vec<usize>,
    pub raw_feature_count: usize,
    pub feature_fraction: f64,
    pub retrieval_error: f64,
    pub per_class_f1: BTreeMap<String, f64>,
}

impl FrontRecord {
    pub fn validate(&self) -> Result<()> {
        if self.mask.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Validation(format!(
                "run {}: mask indices are not strictly ascending",
                self.run_id
            )));
        }
        if self.mask.len() != self.raw_feature_count {
            return Err(Error::Validation(format!(
                "run {}: raw_feature_count {} but mask has {} indices",
                self.run_id,
                self.raw_feature_count,
                self.mask.len()
            )));
        }
        Ok(())
    }
}

pub fn front_to_records(front: &ParetoFront, class_ids: &[String]) -> Vec<FrontRecord> {
    front
        .solutions
        .iter()
        .map(|s| {
            let o = s.objectives();
            FrontRecord {
                run_id: front.run_id,
                stage: front.stage,
                seed: front.seed,
                mask: s.mask.indices(),
                raw_feature_count: o.raw_feature_count,
                feature_fraction: o.feature_fraction,
                retrieval_error: o.retrieval_error,
                per_class_f1: class_ids
                    .iter()
                    .cloned()
                    .zip(o.per_class_f1.iter().copied())
                    .collect(),
            }
        })
        .collect()
}

/// Rebuilds a front from the records of one run.
pub fn records_to_front(
    records: &[FrontRecord],
    run_id: usize,
    stage: Stage,
    seed: u64,
    feature_count: usize,
    stage_dim: usize,
    class_ids: &[String],
) -> Result<ParetoFront> {
    let mut solutions = Vec::with_capacity(records.len());
    for r in records {
        r.validate()?;
        if r.run_id != run_id || r.stage != stage {
            return Err(Error::Validation(format!(
                "record for {} run {} found in the file of {stage} run {run_id}",
                r.stage, r.run_id
            )));
        }
        if let Some(&bad) = r.mask.iter().find(|&&f| f >= feature_count) {
            return Err(Error::Validation(format!(
                "run {run_id}: feature index {bad} out of range for dimension {feature_count}"
            )));
        }
        let per_class_f1 = class_ids
            .iter()
            .map(|c| {
                r.per_class_f1.get(c).copied().ok_or_else(|| {
                    Error::Validation(format!("run {run_id}: missing F1 for class '{c}'"))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        solutions.push(Individual::evaluated(
            FeatureMask::from_indices(feature_count, &r.mask),
            ObjectiveVector {
                feature_fraction: r.feature_fraction,
                retrieval_error: r.retrieval_error,
                raw_feature_count: r.raw_feature_count,
                per_class_f1,
            },
        ));
    }
    Ok(ParetoFront {
        run_id,
        stage,
        seed,
        stage_dim,
        solutions,
    })
}

pub fn write_jsonl(path: impl AsRef<Path>, records: &[FrontRecord]) -> Result<()> {
    let path = path.as_ref();
    let mut buf = Vec::new();
    for r in records {
        serde_json::to_writer(&mut buf, r)?;
        buf.push(b'\n');
    }
    File::create(path)
        .and_then(|mut f| f.write_all(&buf))
        .map_err(|e| Error::io(path, e))
}

pub fn read_jsonl(path: impl AsRef<Path>) -> Result<Vec<FrontRecord>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for line in BufReader::new(file).lines() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: FrontRecord = serde_json::from_str(&line)?;
        rec.validate()?;
        out.push(rec);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunEntry {
    pub run_id: usize,
    pub seed: u64,
    pub file: String,
    pub evaluations: usize,
    pub generations: usize,
    pub front_size: usize,
}

/// Summary of one stage's runs, written next to the front files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub stage: Stage,
    pub feature_count: usize,
    pub stage_dim: usize,
    pub class_ids: Vec<String>,
    pub dataset_fingerprint: String,
    pub config_fingerprint: String,
    /// Engine settings shared by all runs; `seed` holds the base seed.
    pub engine: EngineConfig,
    /// Original feature indices searched by a fine stage.
    pub subspace: Option<Vec<usize>>,
    pub runs: Vec<RunEntry>,
}

impl RunManifest {
    pub const FILE_NAME: &'static str = "manifest.json";

    pub fn save(&self, dir: impl AsRef<Path>) -> Result<()> {
        let path = dir.as_ref().join(Self::FILE_NAME);
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        fs::write(&path, text).map_err(|e| Error::io(&path, e))
    }

    pub fn load(dir: impl AsRef<Path>) -> Result<Self> {
        let path = dir.as_ref().join(Self::FILE_NAME);
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}
