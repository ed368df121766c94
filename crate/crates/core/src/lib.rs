//! Two-stage evolutionary multi-objective feature selection over precomputed
//! embedding vectors.
//!
//! The coarse stage searches all features under a cap on the number selected,
//! minimizing (selected fraction, 1 − macro-F1 of kNN retrieval). Several coarse runs
//! feed a frequent-features histogram; the fine stage repeats the search, uncapped,
//! over the highest-scoring features. [`analysis`] scores the outcome: per-run best
//! subsets, Jaccard stability, per-class decision fronts, single-feature ranking and
//! Wilcoxon signed-rank tests.
//!
//! ```no_run
//! use emofs::dataset::{synthesize, SplitCounts, SyntheticSpec};
//! use emofs::moea::{run_engine, EngineConfig};
//!
//! let data = synthesize(&SyntheticSpec {
//!     feature_count: 64,
//!     informative_count: 4,
//!     class_count: 3,
//!     samples_per_split: SplitCounts { train: 30, validation: 15, test: 15 },
//!     separation: 3.0,
//!     noise_sd: 1.0,
//!     seed: 7,
//! })?;
//! let mut cfg = EngineConfig::new(64, 10);
//! cfg.population_size = 20;
//! cfg.max_generations = 40;
//! let run = run_engine(&data.dataset, &cfg, None)?;
//! println!("{} nondominated subsets", run.front.len());
//! # Ok::<(), emofs::Error>(())
//! ```

pub mod analysis;
pub mod config;
pub mod dataset;
mod error;
pub mod innovization;
pub mod mask;
pub mod moea;
pub mod pipeline;
pub mod records;
pub mod retrieval;

pub use error::{Error, Result};
pub use mask::FeatureMask;
