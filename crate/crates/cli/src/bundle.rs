//! Self-contained model file: fitted schema, scaler, network and run
//! metadata, as versioned JSON. Floats are written in shortest round-trip
//! form, so loading reproduces every parameter bit for bit.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use gradecast_core::encode::{encode_features, FittedSchema};
use gradecast_core::ingest::StudentRecord;
use gradecast_core::matrix::Matrix;
use gradecast_core::mlp::MlpModel;
use gradecast_core::optim::AdamConfig;
use gradecast_core::preprocess::Scaler;
use gradecast_core::train::EpochMetrics;
use gradecast_core::NUM_CLASSES;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum BundleError {
    #[error("bundle is not valid JSON: {0}")]
    Parse(#[source] serde_json::Error),

    #[error("bundle has no format_version field")]
    MissingVersion,

    #[error("bundle format version {found} is not supported (expected {FORMAT_VERSION})")]
    Version { found: u64 },

    #[error("bundle is malformed: {0}")]
    Malformed(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BundleMetadata {
    pub seed: u64,
    pub epochs: usize,
    pub batch_size: usize,
    pub epoch_metrics: EpochMetrics,
    pub adam: AdamConfig,
    pub hidden_layers: Vec<usize>,
    pub test_fraction: f64,
    pub val_fraction: f64,
    pub scale_after_split: bool,
    /// RFC 3339, UTC.
    pub created_at: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelBundle {
    pub format_version: u32,
    pub metadata: BundleMetadata,
    pub schema: FittedSchema,
    pub scaler: Scaler,
    pub mlp: MlpModel,
}

impl ModelBundle {
    fn check(&self) -> Result<(), BundleError> {
        let malformed = |m: String| Err(BundleError::Malformed(m));
        self.schema.check().map_err(|e| BundleError::Malformed(e.to_string()))?;
        let width = self.schema.width();
        if self.scaler.width() != width {
            return malformed(format!("scaler width {} != schema width {width}", self.scaler.width()));
        }
        if self.mlp.n_inputs() != width {
            return malformed(format!("network input {} != schema width {width}", self.mlp.n_inputs()));
        }
        if self.mlp.n_outputs() != NUM_CLASSES {
            return malformed(format!(
                "network has {} outputs, expected {NUM_CLASSES}",
                self.mlp.n_outputs()
            ));
        }
        Ok(())
    }

    /// Standardized feature matrix for raw records.
    pub fn features(&self, records: &[StudentRecord]) -> gradecast_core::Result<Matrix> {
        self.scaler.transform(&encode_features(records, &self.schema)?)
    }

    /// Class probabilities, one row per record.
    pub fn predict_proba(&self, records: &[StudentRecord]) -> gradecast_core::Result<Matrix> {
        self.mlp.predict_proba(&self.features(records)?)
    }
}

pub fn save_bundle(bundle: &ModelBundle) -> String {
    let mut text = serde_json::to_string_pretty(bundle).expect("bundle serializes");
    text.push('\n');
    text
}

pub fn load_bundle(text: &str) -> Result<ModelBundle, BundleError> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(BundleError::Parse)?;
    let version = value
        .get("format_version")
        .ok_or(BundleError::MissingVersion)?
        .as_u64()
        .ok_or(BundleError::MissingVersion)?;
    if version != u64::from(FORMAT_VERSION) {
        return Err(BundleError::Version { found: version });
    }
    // deserialize from the text again rather than from `Value`, which would
    // round floats through its own number type
    let bundle: ModelBundle = serde_json::from_str(text).map_err(|e| BundleError::Malformed(e.to_string()))?;
    bundle.check()?;
    Ok(bundle)
}
