//! Flat `key = value` pipeline configuration.
//!
//! Lines starting with `#` and blank lines are ignored. Relative paths are resolved
//! against the directory of the config file. Recognised keys:
//!
//! | key | meaning | default |
//! |-----|---------|---------|
//! | `dataset` | dataset CSV | required |
//! | `out` | output directory | `out` |
//! | `mfv` | average rows per group before searching | `false` |
//! | `dim` | expected feature count (checked) | unset |
//! | `cf` | coarse cap on selected features | 50 |
//! | `nff` | frequent features kept for the fine stage | 30 |
//! | `np` | coarse population size | 50 |
//! | `generations` | coarse generation budget | 10239 |
//! | `max_evaluations` | coarse evaluation cap | unset |
//! | `fine_np` | fine population size | 30 |
//! | `fine_generations` | fine generation budget | 999 |
//! | `fine_max_evaluations` | fine evaluation cap | unset |
//! | `mutation_rate` | coarse per-bit flip probability | `1/D` |
//! | `fine_mutation_rate` | fine per-bit flip probability | `1/nff` |
//! | `crossover_rate` | pair recombination probability | 1.0 |
//! | `k` | neighbours in kNN retrieval | 3 |
//! | `r` | independent runs per stage | 10 |
//! | `seed` | base seed; run `i` uses `seed + i` | 0 |
//! | `report_split` | split scored by reports | `test` |
//! | `top_n` | frequent features in the single-feature ranking | 10 |

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::dataset::Split;
use crate::error::{Error, Result};
use crate::moea::EngineConfig;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PipelineConfig {
    pub dataset: PathBuf,
    pub out: PathBuf,
    pub mfv: bool,
    pub dim: Option<usize>,
    pub cf: usize,
    pub nff: usize,
    pub np: usize,
    pub generations: usize,
    pub max_evaluations: Option<usize>,
    pub fine_np: usize,
    pub fine_generations: usize,
    pub fine_max_evaluations: Option<usize>,
    pub mutation_rate: Option<f64>,
    pub fine_mutation_rate: Option<f64>,
    pub crossover_rate: f64,
    pub k: usize,
    pub r: usize,
    pub seed: u64,
    pub report_split: Split,
    pub top_n: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            dataset: PathBuf::new(),
            out: PathBuf::from("out"),
            mfv: false,
            dim: None,
            cf: 50,
            nff: 30,
            np: 50,
            // 50 × (10239 + 1) = 512,000 evaluations
            generations: 10_239,
            max_evaluations: None,
            fine_np: 30,
            // 30 × (999 + 1) = 30,000 evaluations
            fine_generations: 999,
            fine_max_evaluations: None,
            mutation_rate: None,
            fine_mutation_rate: None,
            crossover_rate: 1.0,
            k: 3,
            r: 10,
            seed: 0,
            report_split: Split::Test,
            top_n: 10,
        }
    }
}

fn parse_value<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("invalid value '{value}' for '{key}'")))
}

fn parse_optional<T: std::str::FromStr>(key: &str, value: &str) -> Result<Option<T>> {
    if value.is_empty() || value == "none" {
        Ok(None)
    } else {
        parse_value(key, value).map(Some)
    }
}

impl PipelineConfig {
    /// Parses config text; relative paths are joined onto `base_dir`.
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self> {
        let mut cfg = PipelineConfig::default();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected 'key = value'", lineno + 1))
            })?;
            cfg.set(key.trim(), value.trim())?;
        }
        cfg.dataset = resolve(base_dir, &cfg.dataset);
        cfg.out = resolve(base_dir, &cfg.out);
        Ok(cfg)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base)
    }

    /// Sets one key from its string form (also used for command-line overrides).
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "dataset" => self.dataset = PathBuf::from(value),
            "out" => self.out = PathBuf::from(value),
            "mfv" => self.mfv = parse_value(key, value)?,
            "dim" => self.dim = parse_optional(key, value)?,
            "cf" => self.cf = parse_value(key, value)?,
            "nff" => self.nff = parse_value(key, value)?,
            "np" => self.np = parse_value(key, value)?,
            "generations" => self.generations = parse_value(key, value)?,
            "max_evaluations" => self.max_evaluations = parse_optional(key, value)?,
            "fine_np" => self.fine_np = parse_value(key, value)?,
            "fine_generations" => self.fine_generations = parse_value(key, value)?,
            "fine_max_evaluations" => self.fine_max_evaluations = parse_optional(key, value)?,
            "mutation_rate" => self.mutation_rate = parse_optional(key, value)?,
            "fine_mutation_rate" => self.fine_mutation_rate = parse_optional(key, value)?,
            "crossover_rate" => self.crossover_rate = parse_value(key, value)?,
            "k" => self.k = parse_value(key, value)?,
            "r" => self.r = parse_value(key, value)?,
            "seed" => self.seed = parse_value(key, value)?,
            "report_split" => self.report_split = value.parse()?,
            "top_n" => self.top_n = parse_value(key, value)?,
            other => return Err(Error::Config(format!("unknown key '{other}'"))),
        }
        Ok(())
    }

    /// Checks everything that does not depend on the dataset.
    pub fn validate(&self) -> Result<()> {
        if self.dataset.as_os_str().is_empty() {
            return Err(Error::Config("'dataset' is required".into()));
        }
        if self.r == 0 {
            return Err(Error::Config("r must be >= 1".into()));
        }
        if self.nff == 0 {
            return Err(Error::Config("nff must be >= 1".into()));
        }
        Ok(())
    }

    pub fn coarse_engine(&self, dim: usize) -> EngineConfig {
        EngineConfig {
            stage_dim: dim,
            cf: self.cf,
            population_size: self.np,
            max_generations: self.generations,
            max_evaluations: self.max_evaluations,
            mutation_rate: self.mutation_rate,
            crossover_rate: self.crossover_rate,
            k: self.k,
            seed: self.seed,
        }
    }

    pub fn fine_engine(&self) -> EngineConfig {
        EngineConfig {
            stage_dim: self.nff,
            cf: self.nff,
            population_size: self.fine_np,
            max_generations: self.fine_generations,
            max_evaluations: self.fine_max_evaluations,
            mutation_rate: self.fine_mutation_rate,
            crossover_rate: self.crossover_rate,
            k: self.k,
            seed: self.seed,
        }
    }

    /// Hash of every search-relevant setting (paths excluded).
    pub fn fingerprint(&self) -> String {
        let mut canon = self.clone();
        canon.dataset = PathBuf::new();
        canon.out = PathBuf::new();
        let json = serde_json::to_string(&canon).expect("config serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.as_os_str().is_empty() || p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}
