//! Subcommand implementations. Each writes its report to `out` and returns
//! a [`CliError`] carrying the exit code on failure.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde_json::json;

use gradecast_core::encode::{encode, FeatureSchema};
use gradecast_core::ingest::{parse_dataset, parse_unlabeled, summarize, validate, RecordTable, ViolationKind};
use gradecast_core::mlp::argmax;
use gradecast_core::optim::AdamConfig;
use gradecast_core::pipeline::{run_pipeline, PipelineConfig};
use gradecast_core::preprocess::SplitIndices;
use gradecast_core::train::{evaluate, Dataset, EpochMetrics, Metrics, TrainConfig, TrainHistory};
use gradecast_core::NUM_CLASSES;

use crate::bundle::{load_bundle, save_bundle, BundleMetadata, ModelBundle, FORMAT_VERSION};
use crate::error::CliError;
use crate::plot::render_svg;

type CmdResult = Result<(), CliError>;

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

fn write(path: &Path, text: &str) -> CmdResult {
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

fn emit(out: &mut dyn Write, text: &str) -> CmdResult {
    out.write_all(text.as_bytes()).map_err(|e| CliError::io("<stdout>", e))
}

fn source_name(path: &Path) -> String {
    path.display().to_string()
}

fn load_table(path: &Path) -> Result<RecordTable, CliError> {
    Ok(parse_dataset(&read(path)?, &source_name(path))?)
}

/// Lists violations on `out` and fails with exit code 2 if there are any.
fn require_valid(table: &RecordTable, out: &mut dyn Write, ignore_class: bool) -> CmdResult {
    let report = validate(table);
    let violations: Vec<_> = report
        .violations
        .iter()
        .filter(|v| {
            !(ignore_class
                && matches!(
                    v.kind,
                    ViolationKind::MissingClassLabel | ViolationKind::UnknownClassLabel { .. }
                ))
        })
        .collect();
    if violations.is_empty() {
        return Ok(());
    }
    let mut text = format!("{}: {} violation(s)\n", table.source_name, violations.len());
    for v in &violations {
        text.push_str(&format!("  {v}\n"));
    }
    emit(out, &text)?;
    Err(CliError::Violations(format!(
        "{} failed validation with {} violation(s)",
        table.source_name,
        violations.len()
    )))
}

fn load_model(path: &Path) -> Result<ModelBundle, CliError> {
    load_bundle(&read(path)?).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

fn to_json(value: &impl serde::Serialize) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    s
}

pub fn inspect(path: &Path, as_json: bool, out: &mut dyn Write) -> CmdResult {
    let table = load_table(path)?;
    require_valid(&table, out, false)?;
    let summary = summarize(&table);
    if as_json {
        emit(out, &to_json(&summary))
    } else {
        emit(out, &summary.render_text())
    }
}

#[derive(Debug, Clone)]
pub struct TrainArgs {
    pub data: PathBuf,
    pub output: PathBuf,
    pub history: Option<PathBuf>,
    pub split_manifest: Option<PathBuf>,
    pub schema: Option<PathBuf>,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub test_fraction: f64,
    pub val_fraction: f64,
    pub scale_after_split: bool,
    pub post_epoch_metrics: bool,
    pub adam: AdamConfig,
}

impl Default for TrainArgs {
    fn default() -> Self {
        let cfg = PipelineConfig::default();
        Self {
            data: PathBuf::new(),
            output: PathBuf::from("model.json"),
            history: None,
            split_manifest: None,
            schema: None,
            epochs: cfg.train.epochs,
            batch_size: cfg.train.batch_size,
            seed: cfg.train.seed,
            test_fraction: cfg.test_fraction,
            val_fraction: cfg.val_fraction,
            scale_after_split: cfg.scale_after_split,
            post_epoch_metrics: false,
            adam: cfg.train.adam,
        }
    }
}

fn metrics_line(name: &str, m: &Metrics) -> String {
    format!(
        "{name:<5}  loss {:.4}  accuracy {:.4}  (n = {})\n",
        m.loss,
        m.accuracy,
        m.confusion.total()
    )
}

pub fn train(args: &TrainArgs, out: &mut dyn Write) -> CmdResult {
    if args.epochs == 0 || args.batch_size == 0 {
        return Err(CliError::Usage("--epochs and --batch-size must be at least 1".into()));
    }
    let schema = match &args.schema {
        Some(path) => FeatureSchema::from_json(&read(path)?)?,
        None => gradecast_core::encode::default_schema(),
    };
    let defaults = PipelineConfig::default();
    let config = PipelineConfig {
        schema,
        hidden_layers: defaults.hidden_layers,
        test_fraction: args.test_fraction,
        val_fraction: args.val_fraction,
        scale_after_split: args.scale_after_split,
        train: TrainConfig {
            epochs: args.epochs,
            batch_size: args.batch_size,
            seed: args.seed,
            epoch_metrics: if args.post_epoch_metrics {
                EpochMetrics::PostEpoch
            } else {
                EpochMetrics::RunningMean
            },
            adam: args.adam,
            ..defaults.train
        },
    };
    config.train.validate().map_err(|e| CliError::Usage(e.to_string()))?;

    let table = load_table(&args.data)?;
    require_valid(&table, out, false)?;
    let run = run_pipeline(&table, &config).map_err(|e| match e {
        gradecast_core::Error::InvalidArgument(m) => CliError::Usage(m),
        e => CliError::Core(e),
    })?;

    let bundle = ModelBundle {
        format_version: FORMAT_VERSION,
        metadata: BundleMetadata {
            seed: config.train.seed,
            epochs: config.train.epochs,
            batch_size: config.train.batch_size,
            epoch_metrics: config.train.epoch_metrics,
            adam: config.train.adam,
            hidden_layers: config.hidden_layers.clone(),
            test_fraction: config.test_fraction,
            val_fraction: config.val_fraction,
            scale_after_split: config.scale_after_split,
            created_at: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
        },
        schema: run.fitted,
        scaler: run.scaler,
        mlp: run.model,
    };
    write(&args.output, &save_bundle(&bundle))?;
    if let Some(path) = &args.history {
        write(path, &run.history.to_csv()?)?;
    }
    if let Some(path) = &args.split_manifest {
        write(path, &format!("{}\n", run.split.to_json()))?;
    }

    let sizes: Vec<String> = bundle.mlp.layer_sizes().iter().map(|s| s.to_string()).collect();
    let mut text = format!(
        "trained {} for {} epochs on {} rows ({} train / {} val / {} test)\n",
        sizes.join("-"),
        config.train.epochs,
        table.len(),
        run.split.train.len(),
        run.split.val.len(),
        run.split.test.len()
    );
    text += &metrics_line("train", &run.train_metrics);
    if let Some(m) = &run.val_metrics {
        text += &metrics_line("val", m);
    }
    if let Some(m) = &run.test_metrics {
        text += &metrics_line("test", m);
    }
    text += &format!("model written to {}\n", args.output.display());
    emit(out, &text)
}

pub fn evaluate_cmd(
    model_path: &Path,
    data_path: &Path,
    split_manifest: Option<&Path>,
    as_json: bool,
    out: &mut dyn Write,
) -> CmdResult {
    let bundle = load_model(model_path)?;
    let table = load_table(data_path)?;
    require_valid(&table, out, false)?;
    let design = encode(&table, &bundle.schema)?;
    let data = Dataset::new(bundle.scaler.transform(&design.features)?, design.labels)?;

    let data = match split_manifest {
        Some(path) => {
            let split = SplitIndices::from_json(&read(path)?).map_err(|e| CliError::Usage(e.to_string()))?;
            if split.n_rows() != data.len() || split.test.iter().any(|&i| i >= data.len()) {
                return Err(CliError::Usage(format!(
                    "split manifest covers {} rows but {} has {}",
                    split.n_rows(),
                    data_path.display(),
                    data.len()
                )));
            }
            if split.test.is_empty() {
                return Err(CliError::Usage("split manifest has no test rows".into()));
            }
            data.subset(&split.test)
        }
        None => data,
    };

    let metrics = evaluate(&bundle.mlp, &data)?;
    if as_json {
        return emit(out, &to_json(&metrics));
    }
    let names = bundle.schema.label_order();
    let mut text = metrics_line("eval", &metrics);
    text += &format!("confusion (rows: actual, columns: predicted)\n{:>6}", "");
    for name in names {
        text += &format!("{name:>6}");
    }
    text.push('\n');
    for (name, row) in names.iter().zip(&metrics.confusion.counts) {
        text += &format!("{name:>6}");
        for n in row {
            text += &format!("{n:>6}");
        }
        text.push('\n');
    }
    emit(out, &text)
}

pub fn predict(model_path: &Path, data_path: &Path, as_json: bool, out: &mut dyn Write) -> CmdResult {
    let bundle = load_model(model_path)?;
    let table = parse_unlabeled(&read(data_path)?, &source_name(data_path))?;
    require_valid(&table, out, true)?;
    let probs = bundle.predict_proba(&table.records)?;
    let names = bundle.schema.label_order();

    let rows: Vec<_> = probs
        .iter_rows()
        .zip(&table.records)
        .enumerate()
        .map(|(i, (p, record))| (i + 1, names[argmax(p)].as_str(), p, record.class_label.as_deref()))
        .collect();

    if as_json {
        let value: Vec<_> = rows
            .iter()
            .map(|(row, label, p, actual)| {
                let probabilities: serde_json::Map<_, _> =
                    names.iter().zip(p.iter()).map(|(n, v)| (n.clone(), json!(v))).collect();
                json!({ "row": row, "predicted": label, "probabilities": probabilities, "actual": actual })
            })
            .collect();
        return emit(out, &to_json(&value));
    }
    let mut text = String::new();
    for (row, label, p, actual) in rows {
        text += &format!("row {row}: {label}");
        for k in 0..NUM_CLASSES {
            text += &format!("  {}={:.9}", names[k], p[k]);
        }
        if let Some(actual) = actual {
            text += &format!("  actual={actual}");
        }
        text.push('\n');
    }
    emit(out, &text)
}

pub fn plot(history_path: &Path, output: &Path, out: &mut dyn Write) -> CmdResult {
    let history = TrainHistory::from_csv(&read(history_path)?)
        .map_err(|e| CliError::Usage(format!("{}: {e}", history_path.display())))?;
    let svg = render_svg(&history)
        .ok_or_else(|| CliError::Usage(format!("{}: history has no epochs", history_path.display())))?;
    write(output, &svg)?;
    emit(
        out,
        &format!("{} epochs plotted to {}\n", history.len(), output.display()),
    )
}
