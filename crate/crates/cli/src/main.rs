use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use log::{info, warn};

use voxpath::audio::Window;
use voxpath::classify::{Knn, RandomForest};
use voxpath::experiment::{format_report, rule_of_30, run_experiment, ClassifierKind, ExperimentConfig};
use voxpath::matrix::{FeatureMatrix, Gender};
use voxpath::pipeline::{extract_all, read_manifest, write_extraction, ExtractConfig, Extractor};
use voxpath::select::{select_features, DEFAULT_ALPHA, REPORT_TOP};

/// Pathological voice feature extraction, selection and classification.
#[derive(Parser)]
#[command(name = "voxpath", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ClassifierArg {
    Knn,
    Forest,
}

#[derive(Subcommand)]
enum Command {
    /// Extract the feature matrix of every recording in a manifest.
    Extract {
        /// CSV with header path,label,speaker,gender.
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 25.0)]
        frame_ms: f64,
        #[arg(long, default_value_t = 10.0)]
        hop_ms: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Rank every feature by its Mann-Whitney p-value over all rows.
    Select {
        #[arg(long)]
        features: PathBuf,
        #[arg(long, default_value_t = DEFAULT_ALPHA)]
        alpha: f64,
        #[arg(long)]
        out: PathBuf,
        /// Restrict to one gender (M or F).
        #[arg(long)]
        gender: Option<Gender>,
    },
    /// Repeated 75/25 train/test evaluation.
    Experiment {
        #[arg(long)]
        features: PathBuf,
        #[arg(long, value_enum, default_value_t = ClassifierArg::Forest)]
        classifier: ClassifierArg,
        #[arg(long, default_value_t = 100)]
        reps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = DEFAULT_ALPHA)]
        alpha: f64,
        /// Restrict to one gender (M or F).
        #[arg(long)]
        gender: Option<Gender>,
        /// Neighbours for the k-NN classifier.
        #[arg(long, default_value_t = 5)]
        k: usize,
        /// Trees in the random forest.
        #[arg(long, default_value_t = 100)]
        trees: usize,
    },
    /// Write the band-averaged modulation spectrum of one recording.
    Psi {
        #[arg(long)]
        wav: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write the auditory-model band profile of one recording.
    Xi {
        #[arg(long)]
        wav: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Minimum reliable error rate for a number of trials.
    Rule30 {
        #[arg(long)]
        n: usize,
    },
}

fn configure_threads() -> Result<()> {
    let Ok(value) = std::env::var("VOXPATH_THREADS") else {
        return Ok(());
    };
    let n: usize = value.trim().parse().with_context(|| format!("VOXPATH_THREADS={value:?} is not a count"))?;
    if n == 0 {
        bail!("VOXPATH_THREADS must be positive");
    }
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    Ok(())
}

fn write_pairs<A: ToString, B: ToString>(path: &Path, header: [&str; 2], rows: impl Iterator<Item = (A, B)>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    w.write_record(header)?;
    for (a, b) in rows {
        w.write_record([a.to_string(), b.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

fn extract(manifest: &Path, out: &Path, frame_ms: f64, hop_ms: f64, seed: u64) -> Result<()> {
    let entries = read_manifest(manifest)?;
    let config = ExtractConfig { frame_ms, hop_ms, seed, window: Window::Hamming, ..Default::default() };
    let ex = extract_all(&entries, &config)?;
    write_extraction(&ex, &config, out)?;
    for s in &ex.skipped {
        warn!("skipped {}: {}", s.path, s.reason);
    }
    println!(
        "extracted {} of {} recordings, {} features -> {}",
        ex.matrix.n_rows(),
        entries.len(),
        ex.matrix.n_cols(),
        out.display()
    );
    Ok(())
}

fn select(features: &Path, alpha: f64, out: &Path, gender: Option<Gender>) -> Result<()> {
    let fm = FeatureMatrix::read_csv(features)?.with_gender(gender);
    let sel = select_features(&fm, alpha)?;
    write_pairs(out, ["feature_name", "p_value"], sel.ranked.iter().map(|f| (&f.name, f.p_value)))?;
    println!(
        "{} of {} features pass alpha = {alpha} ({} too sparse)",
        sel.selected.len(),
        fm.n_cols(),
        sel.too_sparse.len()
    );
    for (i, f) in sel.top(REPORT_TOP).iter().enumerate() {
        println!("{:>3}  {:<48} {:.3e}", i + 1, f.name, f.p_value);
    }
    Ok(())
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    configure_threads()?;
    match cli.command {
        Command::Extract { manifest, out, frame_ms, hop_ms, seed } => extract(&manifest, &out, frame_ms, hop_ms, seed)?,
        Command::Select { features, alpha, out, gender } => select(&features, alpha, &out, gender)?,
        Command::Experiment { features, classifier, reps, seed, out, alpha, gender, k, trees } => {
            let fm = FeatureMatrix::read_csv(&features)?;
            let cfg = ExperimentConfig {
                classifier: match classifier {
                    ClassifierArg::Knn => ClassifierKind::Knn,
                    ClassifierArg::Forest => ClassifierKind::Forest,
                },
                repetitions: reps,
                seed,
                alpha,
                gender,
                knn: Knn { k },
                forest: RandomForest { trees, ..Default::default() },
                ..Default::default()
            };
            info!("running {reps} repetitions on {} rows", fm.n_rows());
            let report = run_experiment(&fm, &cfg)?;
            std::fs::write(&out, serde_json::to_string_pretty(&report)? + "\n")
                .with_context(|| format!("writing {}", out.display()))?;
            print!("{}", format_report(&report));
        }
        Command::Psi { wav, out } => {
            let ex = Extractor::new(ExtractConfig::default())?;
            let ms = ex.modulation_profile(&ex.load(&wav)?)?;
            write_pairs(&out, ["mod_freq_hz", "psi"], ms.psi.iter().enumerate().map(|(l, &v)| (ms.mod_freq(l), v)))?;
        }
        Command::Xi { wav, out } => {
            let ex = Extractor::new(ExtractConfig::default())?;
            let icc = ex.colliculus_profile(&ex.load(&wav)?)?;
            write_pairs(&out, ["band_index", "xi"], icc.matrix.xi.iter().enumerate().map(|(p, &v)| (p + 1, v)))?;
        }
        Command::Rule30 { n } => println!("{:.2}", rule_of_30(n)?),
    }
    Ok(())
}
