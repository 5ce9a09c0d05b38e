//! `antispoof`: feature extraction, augmentation, scoring, fusion and EER.

mod commands;
mod failure;
mod feature;
mod fsutil;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use antispoof::eval::{compare_ablation, AblationRun};
use antispoof::features::{CqtConfig, MelConfig};
use antispoof::models::{ModelKind, ModelSpec};
use clap::{Args, Parser, Subcommand};

use commands::augment::AugmentConfig;
use commands::corpus::CorpusSpec;
use failure::{CliResult, Context, Failure};
use feature::{FeatureKind, FeatureSettings};

#[derive(Parser)]
#[command(name = "antispoof", version, about = "Spoofed-speech detection pipeline")]
struct Cli {
    /// More log output (-v info, -vv debug). RUST_LOG overrides.
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic two-class WAV corpus with labels.tsv.
    GenCorpus {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 20)]
        clips: usize,
        #[arg(long, default_value_t = 4.0)]
        seconds: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Compute one NPY feature file (plus JSON sidecar) per WAV.
    Extract {
        /// WAV file or directory of WAV files.
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum)]
        feature: FeatureKind,
        /// JSON replacing the chosen feature's parameters.
        #[arg(long)]
        feature_config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Apply mixup and frequency feature masking to NPY features.
    Augment {
        #[arg(long)]
        input: PathBuf,
        /// Augmentation JSON; defaults apply when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// id<TAB>bonafide|fake file, used for mixed labels.
        #[arg(long)]
        labels: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write a built-in model spec as JSON.
    ModelSpec {
        #[arg(long, value_parser = parse_kind)]
        preset: ModelKind,
        #[arg(long)]
        out: PathBuf,
    },
    /// Initialize model weights.
    InitWeights {
        #[command(flatten)]
        model: ModelArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score NPY features with a model: softmax probability of bonafide.
    Forward {
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        weights: PathBuf,
        #[arg(long)]
        scores: PathBuf,
        #[arg(long)]
        labels: Option<PathBuf>,
        /// Reject specs that depart from the published architectures.
        #[arg(long)]
        strict_paper: bool,
    },
    /// Weighted-mean fusion of score files (in weight order).
    Fuse {
        #[arg(long, num_args = 1.., required = true)]
        scores: Vec<PathBuf>,
        #[arg(long)]
        weights: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Equal error rate of a labeled score file.
    Eer {
        #[arg(long)]
        scores: PathBuf,
    },
    /// Print the augmentation ablation grid, optionally beside measured runs.
    Ablation {
        /// JSON array of {model, feature, mixup, lf, hf, rf, eer_percent}.
        #[arg(long)]
        runs: Option<PathBuf>,
    },
    /// Run extract, augment, forward, fuse and eer from one JSON config.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct ModelArg {
    /// Model spec JSON.
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long, value_parser = parse_kind)]
    preset: Option<ModelKind>,
}

fn parse_kind(s: &str) -> Result<ModelKind, String> {
    s.parse().map_err(|e: antispoof::Error| e.to_string())
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = fs::read_to_string(path).context(path.display())?;
    serde_json::from_str(&text).context(path.display())
}

fn feature_settings(kind: FeatureKind, config: Option<&Path>) -> CliResult<FeatureSettings> {
    let mut s = FeatureSettings::new(kind);
    if let Some(path) = config {
        match kind {
            FeatureKind::Mel1 | FeatureKind::Mel2 => s.mel = Some(read_json::<MelConfig>(path)?),
            FeatureKind::Cqt => s.cqt = Some(read_json::<CqtConfig>(path)?),
        }
    }
    Ok(s)
}

fn execute(command: Command) -> CliResult {
    match command {
        Command::GenCorpus {
            out,
            clips,
            seconds,
            seed,
        } => {
            let labels = commands::corpus::generate(&out, &CorpusSpec { clips, seconds, seed })?;
            println!("wrote {} clips to {}", labels.len(), out.display());
        }
        Command::Extract {
            input,
            feature,
            feature_config,
            out,
        } => {
            let settings = feature_settings(feature, feature_config.as_deref())?;
            let n = commands::extract::extract(&input, &settings, &out)?;
            println!("extracted {n} files to {}", out.display());
        }
        Command::Augment {
            input,
            config,
            seed,
            labels,
            out,
        } => {
            let cfg = match config {
                Some(p) => AugmentConfig::load(&p)?,
                None => AugmentConfig::default(),
            };
            let labels = labels.as_deref().map(fsutil::read_labels).transpose()?;
            let n = commands::augment::augment(&input, &cfg, seed, labels.as_ref(), &out)?;
            println!("augmented {n} files to {}", out.display());
        }
        Command::ModelSpec { preset, out } => commands::models::write_preset(preset, &out)?,
        Command::InitWeights { model, seed, out } => {
            let spec = match (model.model, model.preset) {
                (Some(p), _) => ModelSpec::load(&p).context(p.display())?,
                (None, Some(k)) => ModelSpec::preset(k),
                (None, None) => unreachable!("clap requires one of --model and --preset"),
            };
            let n = commands::models::write_init_weights(&spec, seed, &out)?;
            println!("wrote {n} parameters to {}", out.display());
        }
        Command::Forward {
            features,
            model,
            weights,
            scores,
            labels,
            strict_paper,
        } => {
            let spec = commands::forward::load_model_spec(&model, strict_paper)?;
            let labels = labels.as_deref().map(fsutil::read_labels).transpose()?;
            let set =
                commands::forward::score_features(&features, &spec, &weights, labels.as_ref(), &scores)?;
            println!("scored {} files into {}", set.len(), scores.display());
        }
        Command::Fuse {
            scores,
            weights,
            out,
        } => {
            let fused = commands::fuse::fuse(&scores, &weights, &out)?;
            println!("fused {} utterances into {}", fused.len(), out.display());
        }
        Command::Eer { scores } => {
            println!("{}", commands::fuse::eer_line(&commands::fuse::eer(&scores)?));
        }
        Command::Ablation { runs } => {
            let runs: Vec<AblationRun> = match runs {
                Some(p) => read_json(&p)?,
                None => Vec::new(),
            };
            print!("{}", compare_ablation(&runs));
        }
        Command::Run { config } => {
            let cfg = commands::pipeline::PipelineConfig::load(&config)?;
            let summary = commands::pipeline::run(&cfg)?;
            println!(
                "processed {} clips with {} systems into {}",
                summary.clips,
                summary.systems.len(),
                cfg.io.output.display()
            );
            if let Some(e) = &summary.eer {
                println!("{}", commands::fuse::eer_line(e));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure { code, message }) => {
            eprintln!("error: {message}");
            ExitCode::from(code)
        }
    }
}
