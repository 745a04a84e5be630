//! The reference run: validate → fit schema → encode → split → scale →
//! train → evaluate.

use crate::encode::{default_schema, encode, fit_schema, FeatureSchema, FittedSchema};
use crate::error::{Error, Result};
use crate::ingest::{validate, RecordTable};
use crate::mlp::{init_mlp, MlpModel};
use crate::preprocess::{fit_scaler, split, Scaler, SplitIndices};
use crate::train::{evaluate, train, Dataset, Metrics, TrainConfig, TrainHistory};
use crate::NUM_CLASSES;

#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub schema: FeatureSchema,
    pub hidden_layers: Vec<usize>,
    pub test_fraction: f64,
    pub val_fraction: f64,
    /// Fit the scaler on the training rows only instead of the full matrix.
    pub scale_after_split: bool,
    /// `train.seed` drives the split, the weight initialization and the
    /// per-epoch shuffles.
    pub train: TrainConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            schema: default_schema(),
            hidden_layers: vec![64, 64],
            test_fraction: 0.2,
            val_fraction: 0.2,
            scale_after_split: false,
            train: TrainConfig::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct PipelineRun {
    pub fitted: FittedSchema,
    pub scaler: Scaler,
    pub split: SplitIndices,
    pub model: MlpModel,
    pub history: TrainHistory,
    /// Full pass over the training rows with the final parameters.
    pub train_metrics: Metrics,
    pub val_metrics: Option<Metrics>,
    pub test_metrics: Option<Metrics>,
}

impl PipelineRun {
    pub fn layer_sizes(&self) -> Vec<usize> {
        self.model.layer_sizes()
    }
}

pub fn run_pipeline(table: &RecordTable, config: &PipelineConfig) -> Result<PipelineRun> {
    let report = validate(table);
    if let Some(first) = report.violations.first() {
        return Err(Error::Validation {
            count: report.violations.len(),
            first: first.to_string(),
        });
    }
    config.train.validate()?;

    let fitted = fit_schema(table, &config.schema)?;
    let design = encode(table, &fitted)?;
    let split = split(
        design.n_rows(),
        config.test_fraction,
        config.val_fraction,
        config.train.seed,
    )?;

    let scaler = if config.scale_after_split {
        fit_scaler(&design.features.select_rows(&split.train))?
    } else {
        fit_scaler(&design.features)?
    };
    let all = Dataset::new(scaler.transform(&design.features)?, design.labels)?;
    let train_set = all.subset(&split.train);
    let val_set = all.subset(&split.val);
    let test_set = all.subset(&split.test);

    let mut layer_sizes = vec![fitted.width()];
    layer_sizes.extend(&config.hidden_layers);
    layer_sizes.push(NUM_CLASSES);
    let model = init_mlp(&layer_sizes, config.train.seed)?;

    let (model, history) = train(model, &train_set, Some(&val_set), &config.train)?;
    let train_metrics = evaluate(&model, &train_set)?;
    let val_metrics = (!val_set.is_empty()).then(|| evaluate(&model, &val_set)).transpose()?;
    let test_metrics = (!test_set.is_empty())
        .then(|| evaluate(&model, &test_set))
        .transpose()?;

    Ok(PipelineRun {
        fitted,
        scaler,
        split,
        model,
        history,
        train_metrics,
        val_metrics,
        test_metrics,
    })
}
