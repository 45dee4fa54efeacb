//! Command-line front end for the signal-quality-assessment toolkit.
//!
//! Exit codes: 0 success, 2 usage errors, 3 data errors, 4 model/data
//! mismatches. Every run writes a resolved-config echo file into the output
//! directory so results are attributable to exact settings.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use sqa_core::accounting::emit_cost_report;
use sqa_core::dataio::{
    load_record, load_samples, load_weights, save_weights, synthesize_corpus, write_predictions,
    DatasetManifest, Prediction, SplitTag, SynthesisConfig, PREDICTION_THRESHOLD,
};
use sqa_core::dsp::{defaults, ChannelKind, SignalRecord};
use sqa_core::metrics::{accuracy, auc, confusion_matrix};
use sqa_core::nn::{Model, ModelConfig};
use sqa_core::pipeline::{prepare_dataset, prepare_record, PipelineConfig, PreparedDataset};
use sqa_core::training::{
    cross_validate, evaluate, train_full, EpochMetrics, TrainConfig,
};
use sqa_core::SqaError;

#[derive(Parser)]
#[command(name = "sqa", version, about = "PPG signal quality assessment toolkit")]
struct Cli {
    /// Root seed for all randomness in the run.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Assert byte-identical artifacts across reruns. Execution is
    /// single-threaded and fully seeded, so this is always in effect; the
    /// flag records the guarantee in the config echo.
    #[arg(long, global = true)]
    deterministic: bool,
    /// Dataset manifest (required by preprocess, train, cv, and eval).
    #[arg(long, global = true)]
    manifest: Option<PathBuf>,
    /// Directory for all output artifacts.
    #[arg(long, global = true, default_value = "out")]
    out_dir: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, ValueEnum)]
enum Toggle {
    On,
    Off,
}

impl Toggle {
    fn as_bool(self) -> bool {
        self == Toggle::On
    }
}

#[derive(Args)]
struct ChannelArgs {
    /// Comma-separated input channels from {ppg, fdp, sdp, atc}.
    #[arg(long, value_delimiter = ',', required = true)]
    channels: Vec<String>,
    /// Squeeze-and-excitation blocks.
    #[arg(long, value_enum, default_value_t = Toggle::On)]
    se: Toggle,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic labeled corpus plus its manifest.
    Synth {
        #[arg(long, default_value_t = 15)]
        subjects: usize,
        #[arg(long, default_value_t = 3)]
        test_subjects: usize,
        #[arg(long, default_value_t = 30.0)]
        minutes: f64,
        /// Per-window artifact probability.
        #[arg(long, default_value_t = 0.4)]
        corruption: f64,
        #[arg(long, default_value_t = 50.0)]
        hr_low: f64,
        #[arg(long, default_value_t = 110.0)]
        hr_high: f64,
    },
    /// Print and save the per-layer parameter/MAC cost report.
    Count {
        #[command(flatten)]
        channels: ChannelArgs,
    },
    /// Run the preprocessing stage and report per-record segment counts.
    Preprocess {
        #[command(flatten)]
        channels: ChannelArgs,
    },
    /// Train on the manifest's train split and save a weight file.
    Train {
        #[command(flatten)]
        channels: ChannelArgs,
        #[arg(long, default_value_t = 60)]
        epochs: usize,
    },
    /// Subject-level cross-validation on the manifest's train split.
    Cv {
        #[command(flatten)]
        channels: ChannelArgs,
        #[arg(long, default_value_t = 60)]
        epochs: usize,
        #[arg(long, default_value_t = 5)]
        folds: usize,
    },
    /// Score the manifest's test split with a trained weight file.
    Eval {
        #[arg(long)]
        weights: PathBuf,
    },
    /// Classify every segment of a single record.
    Predict {
        #[arg(long)]
        weights: PathBuf,
        #[arg(long)]
        record: PathBuf,
        /// Optional ground-truth label file; enables the true_label column.
        #[arg(long)]
        labels: Option<PathBuf>,
        #[arg(long, default_value_t = defaults::FS_HZ)]
        fs: f64,
    },
}

enum CliError {
    Usage(String),
    Core(SqaError),
}

impl From<SqaError> for CliError {
    fn from(e: SqaError) -> Self {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Core(SqaError::Io(e))
    }
}

fn exit_code(e: &CliError) -> u8 {
    match e {
        CliError::Usage(_) => 2,
        CliError::Core(err) => match err {
            SqaError::InvalidBand(_) | SqaError::InvalidP(_) | SqaError::InvalidMode(_) => 2,
            SqaError::MalformedFile { .. }
            | SqaError::CoverageGap { .. }
            | SqaError::EmptyDataset
            | SqaError::TooFewSubjects { .. }
            | SqaError::EmptyFold
            | SqaError::SingleClass
            | SqaError::EmptyInput
            | SqaError::DegenerateSignal
            | SqaError::RangeError(_)
            | SqaError::Io(_) => 3,
            SqaError::ShapeMismatch(_)
            | SqaError::VersionMismatch(_)
            | SqaError::TruncatedBody { .. }
            | SqaError::StaleCache(_)
            | SqaError::NonFinite(_)
            | SqaError::RecordTooShort { .. } => 4,
        },
    }
}

fn parse_channels(specs: &[String]) -> Result<Vec<ChannelKind>, CliError> {
    let mut kinds = Vec::new();
    for s in specs {
        let kind = ChannelKind::parse(s)
            .ok_or_else(|| CliError::Usage(format!("unknown channel {s:?}")))?;
        if kinds.contains(&kind) {
            return Err(CliError::Usage(format!("duplicate channel {s:?}")));
        }
        kinds.push(kind);
    }
    kinds.sort();
    Ok(kinds)
}

fn channel_names(kinds: &[ChannelKind]) -> String {
    kinds.iter().map(|k| k.name()).collect::<Vec<_>>().join(",")
}

fn require_manifest(cli: &Cli) -> Result<DatasetManifest, CliError> {
    let path = cli
        .manifest
        .as_ref()
        .ok_or_else(|| CliError::Usage("this subcommand requires --manifest".into()))?;
    Ok(DatasetManifest::load(path)?)
}

fn load_split(manifest: &DatasetManifest, tag: SplitTag) -> Result<Vec<SignalRecord>, CliError> {
    manifest
        .split(tag)
        .into_iter()
        .map(|e| {
            load_record(&e.record_path, &e.label_path, e.fs, &e.subject_id).map_err(CliError::from)
        })
        .collect()
}

fn pipeline_for(channels: Vec<ChannelKind>) -> PipelineConfig {
    PipelineConfig {
        channels,
        ..PipelineConfig::default()
    }
}

fn write_config_echo(cli: &Cli, command: &str, extra: serde_json::Value) -> Result<(), CliError> {
    std::fs::create_dir_all(&cli.out_dir)?;
    let echo = json!({
        "command": command,
        "seed": cli.seed,
        "deterministic": cli.deterministic,
        "manifest": cli.manifest,
        "out_dir": cli.out_dir,
        "settings": extra,
    });
    let path = cli.out_dir.join(format!("{command}_config.json"));
    std::fs::write(&path, serde_json::to_string_pretty(&echo).unwrap() + "\n")?;
    Ok(())
}

fn write_jsonl(epochs: &[EpochMetrics], path: &Path) -> Result<(), CliError> {
    let mut out = String::new();
    for e in epochs {
        out.push_str(&serde_json::to_string(e).unwrap());
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}

fn train_settings(cli: &Cli, epochs: usize, folds: usize) -> TrainConfig {
    TrainConfig {
        epochs,
        folds,
        global_seed: cli.seed,
        ..TrainConfig::default()
    }
}

fn predictions_from(
    prepared: &PreparedDataset,
    model: &Model<f32>,
    batch: usize,
    truth_known: bool,
) -> Result<Vec<Prediction>, CliError> {
    let refs: Vec<_> = prepared.segments.iter().collect();
    let (_, scored) = evaluate(model, &refs, batch)?;
    Ok(prepared
        .segments
        .iter()
        .zip(&scored)
        .map(|(seg, s)| Prediction {
            subject_id: seg.subject_id.clone(),
            start_sample: seg.start,
            score: s.score,
            true_good: truth_known.then_some(s.good),
        })
        .collect())
}

fn run(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Synth {
            subjects,
            test_subjects,
            minutes,
            corruption,
            hr_low,
            hr_high,
        } => {
            let cfg = SynthesisConfig {
                n_subjects: *subjects,
                test_subjects: *test_subjects,
                minutes_per_subject: *minutes,
                heart_rate_range: (*hr_low, *hr_high),
                corruption_prob: *corruption,
                seed: cli.seed,
                ..SynthesisConfig::default()
            };
            write_config_echo(cli, "synth", serde_json::to_value(&cfg).unwrap())?;
            let manifest = synthesize_corpus(&cfg, &cli.out_dir)?;
            println!(
                "wrote {} subjects ({} test) to {}",
                manifest.entries.len(),
                manifest.split(SplitTag::Test).len(),
                cli.out_dir.join("manifest.json").display()
            );
            Ok(())
        }
        Command::Count { channels } => {
            let kinds = parse_channels(&channels.channels)?;
            let se = channels.se.as_bool();
            let config = ModelConfig::new(kinds.len(), se);
            write_config_echo(
                cli,
                "count",
                json!({"channels": channel_names(&kinds), "se": se}),
            )?;
            let report = emit_cost_report(&config, config.segment_len);
            print!("{}", report.to_table());
            let path = cli.out_dir.join("cost_report.json");
            std::fs::write(&path, serde_json::to_string_pretty(&report).unwrap() + "\n")?;
            Ok(())
        }
        Command::Preprocess { channels } => {
            let kinds = parse_channels(&channels.channels)?;
            write_config_echo(
                cli,
                "preprocess",
                json!({"channels": channel_names(&kinds), "se": channels.se.as_bool()}),
            )?;
            let manifest = require_manifest(cli)?;
            let pipe = pipeline_for(kinds);
            let mut rows = Vec::new();
            for entry in &manifest.entries {
                let rec =
                    load_record(&entry.record_path, &entry.label_path, entry.fs, &entry.subject_id)?;
                let prepared = prepare_record(&rec, &pipe)?;
                let good = prepared
                    .segments
                    .iter()
                    .filter(|s| s.stack.label == sqa_core::dsp::QualityLabel::Good)
                    .count();
                rows.push(json!({
                    "subject_id": entry.subject_id,
                    "split": entry.split,
                    "segments": prepared.segments.len(),
                    "good": good,
                    "bad": prepared.segments.len() - good,
                    "skipped_degenerate": prepared.skipped_degenerate,
                }));
            }
            let path = cli.out_dir.join("preprocess_summary.json");
            std::fs::write(&path, serde_json::to_string_pretty(&rows).unwrap() + "\n")?;
            println!("summarized {} records into {}", rows.len(), path.display());
            Ok(())
        }
        Command::Train { channels, epochs } => {
            let kinds = parse_channels(&channels.channels)?;
            let se = channels.se.as_bool();
            write_config_echo(
                cli,
                "train",
                json!({"channels": channel_names(&kinds), "se": se, "epochs": epochs}),
            )?;
            let manifest = require_manifest(cli)?;
            let records = load_split(&manifest, SplitTag::Train)?;
            let prepared = prepare_dataset(&records, &pipeline_for(kinds.clone()))?;
            let config = ModelConfig::new(kinds.len(), se);
            let cfg = train_settings(cli, *epochs, TrainConfig::default().folds);
            let outcome = train_full(&config, &prepared.segments, &cfg)?;
            write_jsonl(&outcome.epochs, &cli.out_dir.join("train_metrics.jsonl"))?;
            let weights_path = cli.out_dir.join("weights.sqaw");
            save_weights(&outcome.model.params, &config, &kinds, cli.seed, &weights_path)?;
            println!(
                "trained on {} segments, weights at {}",
                prepared.segments.len(),
                weights_path.display()
            );
            Ok(())
        }
        Command::Cv {
            channels,
            epochs,
            folds,
        } => {
            let kinds = parse_channels(&channels.channels)?;
            let se = channels.se.as_bool();
            write_config_echo(
                cli,
                "cv",
                json!({
                    "channels": channel_names(&kinds), "se": se,
                    "epochs": epochs, "folds": folds,
                }),
            )?;
            let manifest = require_manifest(cli)?;
            let records = load_split(&manifest, SplitTag::Train)?;
            let prepared = prepare_dataset(&records, &pipeline_for(kinds.clone()))?;
            let config = ModelConfig::new(kinds.len(), se);
            let cfg = train_settings(cli, *epochs, *folds);
            let cv = cross_validate(&config, &prepared.segments, &cfg)?;
            for (i, epochs) in cv.fold_epochs.iter().enumerate() {
                write_jsonl(epochs, &cli.out_dir.join(format!("cv_fold{i}.jsonl")))?;
            }
            let n = cv.fold_aucs.len() as f64;
            let std = (cv
                .fold_aucs
                .iter()
                .map(|a| (a - cv.mean_auc).powi(2))
                .sum::<f64>()
                / n)
                .sqrt();
            let summary = json!({
                "fold_val_auc": cv.fold_aucs,
                "mean_val_auc": cv.mean_auc,
                "std_val_auc": std,
            });
            let path = cli.out_dir.join("cv_summary.json");
            std::fs::write(&path, serde_json::to_string_pretty(&summary).unwrap() + "\n")?;
            println!(
                "cv mean val AUC {:.4} +/- {:.4} over {} folds",
                cv.mean_auc, std, cv.fold_aucs.len()
            );
            Ok(())
        }
        Command::Eval { weights } => {
            let loaded = load_weights(weights)?;
            write_config_echo(
                cli,
                "eval",
                json!({
                    "weights": weights,
                    "channels": channel_names(&loaded.channels),
                    "weights_seed": loaded.seed,
                }),
            )?;
            let manifest = require_manifest(cli)?;
            let records = load_split(&manifest, SplitTag::Test)?;
            let prepared = prepare_dataset(&records, &pipeline_for(loaded.channels.clone()))?;
            let model = Model {
                config: loaded.config,
                params: loaded.store,
                mode: sqa_core::nn::Mode::Eval,
            };
            let refs: Vec<_> = prepared.segments.iter().collect();
            let (loss, scored) = evaluate(&model, &refs, TrainConfig::default().batch_size)?;
            let test_auc = auc(&scored)?;
            let acc = accuracy(&scored, PREDICTION_THRESHOLD)?;
            let cm = confusion_matrix(&scored, PREDICTION_THRESHOLD)?;
            let metrics = json!({
                "segments": scored.len(),
                "loss": loss,
                "auc": test_auc,
                "accuracy": acc,
                "confusion": {
                    "true_good": cm.true_good, "false_good": cm.false_good,
                    "true_bad": cm.true_bad, "false_bad": cm.false_bad,
                },
            });
            let path = cli.out_dir.join("eval_metrics.json");
            std::fs::write(&path, serde_json::to_string_pretty(&metrics).unwrap() + "\n")?;
            let preds = predictions_from(&prepared, &model, TrainConfig::default().batch_size, true)?;
            write_predictions(&preds, &cli.out_dir.join("predictions.csv"))?;
            println!("test AUC {test_auc:.4}, accuracy {acc:.4} over {} segments", scored.len());
            Ok(())
        }
        Command::Predict {
            weights,
            record,
            labels,
            fs,
        } => {
            let loaded = load_weights(weights)?;
            write_config_echo(
                cli,
                "predict",
                json!({
                    "weights": weights, "record": record, "labels": labels, "fs": fs,
                    "channels": channel_names(&loaded.channels),
                }),
            )?;
            println!("channels: {}", channel_names(&loaded.channels));
            let subject_id = record
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "record".into());
            let rec = match labels {
                Some(label_path) => load_record(record, label_path, *fs, &subject_id)?,
                None => {
                    let samples = load_samples(record)?;
                    let n = samples.len();
                    SignalRecord::new(subject_id, samples, *fs, vec![true; n])?
                }
            };
            let prepared = prepare_record(&rec, &pipeline_for(loaded.channels.clone()))?;
            if prepared.segments.is_empty() {
                return Err(SqaError::RecordTooShort {
                    got: rec.samples.len(),
                    need: (defaults::SEGMENT_SECONDS * rec.fs).round() as usize,
                }
                .into());
            }
            let model = Model {
                config: loaded.config,
                params: loaded.store,
                mode: sqa_core::nn::Mode::Eval,
            };
            let preds = predictions_from(
                &prepared,
                &model,
                TrainConfig::default().batch_size,
                labels.is_some(),
            )?;
            write_predictions(&preds, &cli.out_dir.join("predictions.csv"))?;
            let good = preds
                .iter()
                .filter(|p| p.score >= PREDICTION_THRESHOLD)
                .count();
            println!("good {good} bad {}", preds.len() - good);
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            match &e {
                CliError::Usage(msg) => eprintln!("error: {msg}"),
                CliError::Core(err) => eprintln!("error: {err}"),
            }
            ExitCode::from(exit_code(&e))
        }
    }
}
