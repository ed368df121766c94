//! Command-line front end for the two-stage feature-selection pipeline.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use emofs::config::PipelineConfig;
use emofs::dataset::{load_csv, CsvSchema, Split, SplitCounts, SyntheticSpec};
use emofs::pipeline::{self, ReportOptions, ReportSummary, FFH_FILE};
use emofs::records::RunManifest;

#[derive(Parser)]
#[command(name = "emofs", version, about = "Two-stage evolutionary multi-objective feature selection")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a labelled dataset with planted informative features.
    Synth(SynthArgs),
    /// Average rows sharing a group ID into one mean feature vector.
    Mfv {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
    },
    /// Run the constrained coarse search R times.
    Coarse(ConfigArgs),
    /// Build the frequent-features histogram from a coarse archive.
    Ffh {
        /// Directory holding the coarse manifest and front files.
        #[arg(long)]
        archive: PathBuf,
        #[arg(long, default_value_t = 30)]
        nff: usize,
        /// Directory receiving ffh.csv and ffh_top.csv.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the fine search over the most frequent features R times.
    Fine {
        #[command(flatten)]
        config: ConfigArgs,
        /// Histogram written by `ffh` (default: <out>/ffh.csv).
        #[arg(long)]
        ffh: Option<PathBuf>,
    },
    /// Score best subsets, stability, decision fronts and significance tests.
    Report(ReportArgs),
    /// Coarse search, histogram, fine search and report in one go.
    Run(ConfigArgs),
    /// Write the dataset restricted to a feature subset.
    Export {
        #[arg(long)]
        dataset: PathBuf,
        /// Comma-separated feature indices.
        #[arg(long, value_delimiter = ',', required = true)]
        features: Vec<usize>,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    dim: usize,
    #[arg(long)]
    informative: usize,
    #[arg(long)]
    classes: usize,
    /// Samples per class in each split.
    #[arg(long, default_value_t = 40)]
    train: usize,
    #[arg(long, default_value_t = 20)]
    validation: usize,
    #[arg(long, default_value_t = 20)]
    test: usize,
    #[arg(long, default_value_t = 3.0)]
    separation: f64,
    #[arg(long, default_value_t = 1.0)]
    noise_sd: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Dataset CSV to write.
    #[arg(long)]
    out: PathBuf,
    /// Planted-feature JSON (default: <out> with extension .truth.json).
    #[arg(long)]
    truth: Option<PathBuf>,
}

#[derive(Args)]
struct ConfigArgs {
    /// `key = value` config file.
    #[arg(long)]
    config: PathBuf,
    /// Override a config key, e.g. `--set r=3`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Args)]
struct ReportArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Coarse run directory (default: <out>/coarse).
    #[arg(long)]
    coarse: Option<PathBuf>,
    /// Fine run directory (default: <out>/fine).
    #[arg(long)]
    fine: Option<PathBuf>,
    /// Skip the fine stage even if its directory exists.
    #[arg(long)]
    coarse_only: bool,
    /// Split to score on (default: the config's report_split).
    #[arg(long)]
    split: Option<Split>,
    /// Report directory (default: <out>/report).
    #[arg(long)]
    out: Option<PathBuf>,
}

impl ConfigArgs {
    fn load(&self) -> Result<PipelineConfig> {
        let mut cfg = PipelineConfig::from_file(&self.config)
            .with_context(|| format!("reading config {}", self.config.display()))?;
        for item in &self.overrides {
            let Some((key, value)) = item.split_once('=') else {
                bail!("--set expects KEY=VALUE, got '{item}'");
            };
            let (key, value) = (key.trim(), value.trim());
            cfg.set(key, value)?;
            // paths given on the command line are relative to the working directory
            if key == "dataset" || key == "out" {
                let p = PathBuf::from(value);
                let p = if p.is_absolute() { p } else { std::env::current_dir()?.join(p) };
                cfg.set(key, &p.to_string_lossy())?;
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn print_manifest(m: &RunManifest, dir: &Path) {
    println!("{} stage: {} runs written to {}", m.stage, m.runs.len(), dir.display());
    for r in &m.runs {
        println!(
            "  run {:>3}  seed {:>6}  evaluations {:>8}  front size {}",
            r.run_id, r.seed, r.evaluations, r.front_size
        );
    }
}

fn print_report(s: &ReportSummary, dir: &Path) {
    println!("report on the {} split written to {}", s.split, dir.display());
    for st in &s.stages {
        let stab = st.s_index.map_or("NA".to_string(), |v| format!("{v:.4}"));
        println!(
            "  {:<6} runs {:>3}  mean best F1 {:.4}  mean size {:.2}  stability {stab}",
            st.stage.to_string(),
            st.runs,
            st.mean_best_f1,
            st.mean_best_size
        );
    }
    for c in &s.comparisons {
        match (&c.result, &c.note) {
            (Some(r), _) => println!(
                "  {:<16} p = {:.4} (n = {}, {})",
                c.name,
                r.p_value,
                r.n,
                if r.exact { "exact" } else { "normal approx." }
            ),
            (None, Some(note)) => println!("  {:<16} NA ({note})", c.name),
            (None, None) => println!("  {:<16} NA", c.name),
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Synth(a) => {
            let spec = SyntheticSpec {
                feature_count: a.dim,
                informative_count: a.informative,
                class_count: a.classes,
                samples_per_split: SplitCounts {
                    train: a.train,
                    validation: a.validation,
                    test: a.test,
                },
                separation: a.separation,
                noise_sd: a.noise_sd,
                seed: a.seed,
            };
            let truth = a.truth.unwrap_or_else(|| a.out.with_extension("truth.json"));
            let data = pipeline::cmd_synth(&spec, &a.out, &truth)?;
            println!(
                "wrote {} rows x {} features to {}; planted features {:?} in {}",
                data.dataset.len(),
                data.dataset.feature_count(),
                a.out.display(),
                data.informative,
                truth.display()
            );
        }
        Command::Mfv { input, output } => {
            let ds = pipeline::cmd_mfv(&input, &output)?;
            println!("wrote {} mean feature vectors to {}", ds.len(), output.display());
        }
        Command::Coarse(c) => {
            let cfg = c.load()?;
            let m = pipeline::cmd_coarse(&cfg)?;
            print_manifest(&m, &cfg.out.join("coarse"));
        }
        Command::Ffh { archive, nff, out } => {
            let r = pipeline::cmd_ffh(&archive, nff, &out)?;
            if let Some(w) = &r.warning {
                eprintln!("warning: {w}");
            }
            println!(
                "histogram over {} runs: {} of {} features scored; top {nff}: {:?}",
                r.histogram.runs,
                r.histogram.nonzero_count(),
                r.histogram.feature_count(),
                r.top
            );
        }
        Command::Fine { config, ffh } => {
            let cfg = config.load()?;
            let ffh = ffh.unwrap_or_else(|| cfg.out.join(FFH_FILE));
            let m = pipeline::cmd_fine(&cfg, &ffh)?;
            print_manifest(&m, &cfg.out.join("fine"));
        }
        Command::Report(a) => {
            let cfg = a.config.load()?;
            let ds = pipeline::load_dataset(&cfg)?;
            let fine = if a.coarse_only {
                None
            } else {
                Some(a.fine.unwrap_or_else(|| cfg.out.join("fine")))
            };
            let out = a.out.unwrap_or_else(|| cfg.out.join("report"));
            let summary = pipeline::cmd_report(&ReportOptions {
                coarse_dir: Some(a.coarse.unwrap_or_else(|| cfg.out.join("coarse"))),
                fine_dir: fine,
                dataset: &ds,
                split: a.split.unwrap_or(cfg.report_split),
                out_dir: out.clone(),
                k: cfg.k,
                top_n: cfg.top_n,
            })?;
            print_report(&summary, &out);
        }
        Command::Run(c) => {
            let cfg = c.load()?;
            let o = pipeline::cmd_run(&cfg)?;
            print_manifest(&o.coarse, &cfg.out.join("coarse"));
            if let Some(w) = &o.ffh.warning {
                eprintln!("warning: {w}");
            }
            println!("fine search over features {:?}", o.fine.subspace.as_deref().unwrap_or_default());
            print_manifest(&o.fine, &cfg.out.join("fine"));
            print_report(&o.report, &cfg.out.join("report"));
        }
        Command::Export {
            dataset,
            features,
            out,
        } => {
            let ds = load_csv(&dataset, &CsvSchema::default())?;
            pipeline::cmd_export(&ds, &features, &out)?;
            println!("wrote {} features of {} rows to {}", features.len(), ds.len(), out.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
