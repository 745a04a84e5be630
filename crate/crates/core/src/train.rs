//! Mini-batch training, per-epoch history and evaluation metrics.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::mlp::{argmax, loss_sce, MlpModel};
use crate::optim::{adam_init, AdamConfig};
use crate::rng::Xorshift64Star;
use crate::NUM_CLASSES;

/// Features with their class indices.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub features: Matrix,
    pub labels: Vec<usize>,
}

impl Dataset {
    pub fn new(features: Matrix, labels: Vec<usize>) -> Result<Self> {
        if features.rows() != labels.len() {
            return Err(Error::Shape(format!(
                "{} feature rows but {} labels",
                features.rows(),
                labels.len()
            )));
        }
        Ok(Self { features, labels })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            features: self.features.select_rows(indices),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
        }
    }

    fn check_against(&self, model: &MlpModel, what: &str) -> Result<()> {
        if self.features.cols() != model.n_inputs() {
            return Err(Error::Shape(format!(
                "{what} set has {} features, model expects {}",
                self.features.cols(),
                model.n_inputs()
            )));
        }
        if let Some(&y) = self.labels.iter().find(|&&y| y >= model.n_outputs()) {
            return Err(Error::LabelOutOfRange(y));
        }
        Ok(())
    }
}

/// How the per-epoch training loss and accuracy are recorded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EpochMetrics {
    /// Mean of the batch losses seen during the epoch, and accuracy of the
    /// pre-update predictions on each batch.
    #[default]
    RunningMean,
    /// A full pass over the training set after the epoch's last update.
    PostEpoch,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub shuffle_each_epoch: bool,
    pub epoch_metrics: EpochMetrics,
    pub adam: AdamConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 30,
            batch_size: 16,
            seed: 0,
            shuffle_each_epoch: true,
            epoch_metrics: EpochMetrics::RunningMean,
            adam: AdamConfig::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::InvalidArgument(format!(
                "epochs and batch size must be at least 1 (got {} and {})",
                self.epochs, self.batch_size
            )));
        }
        self.adam.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub train_accuracy: f64,
    pub val_loss: Option<f64>,
    pub val_accuracy: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    pub epochs: Vec<EpochRecord>,
}

pub const HISTORY_HEADER: [&str; 5] = ["epoch", "train_loss", "train_acc", "val_loss", "val_acc"];

impl TrainHistory {
    pub fn len(&self) -> usize {
        self.epochs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.epochs.is_empty()
    }

    pub fn first(&self) -> Option<&EpochRecord> {
        self.epochs.first()
    }

    pub fn last(&self) -> Option<&EpochRecord> {
        self.epochs.last()
    }

    /// `epoch,train_loss,train_acc,val_loss,val_acc`; validation cells are
    /// empty when no validation set was used.
    pub fn to_csv(&self) -> Result<String> {
        let mut writer = csv::Writer::from_writer(Vec::new());
        writer.write_record(HISTORY_HEADER)?;
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for e in &self.epochs {
            writer.write_record([
                e.epoch.to_string(),
                e.train_loss.to_string(),
                e.train_accuracy.to_string(),
                opt(e.val_loss),
                opt(e.val_accuracy),
            ])?;
        }
        let bytes = writer.into_inner().map_err(|e| Error::InvalidArgument(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::InvalidArgument(e.to_string()))
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
        if header != HISTORY_HEADER {
            return Err(Error::Header(format!(
                "history header must be {}, found {}",
                HISTORY_HEADER.join(","),
                header.join(",")
            )));
        }
        let mut epochs = Vec::new();
        for (i, row) in reader.records().enumerate() {
            let row = row?;
            let field = |c: usize| -> Result<Option<f64>> {
                let raw = &row[c];
                if raw.is_empty() {
                    return Ok(None);
                }
                raw.parse().map(Some).map_err(|_| Error::Field {
                    row: i + 1,
                    column: HISTORY_HEADER[c].to_string(),
                    message: format!("{raw:?} is not a number"),
                })
            };
            let required = |c: usize| -> Result<f64> {
                field(c)?.ok_or_else(|| Error::Field {
                    row: i + 1,
                    column: HISTORY_HEADER[c].to_string(),
                    message: "missing value".into(),
                })
            };
            epochs.push(EpochRecord {
                epoch: required(0)? as usize,
                train_loss: required(1)?,
                train_accuracy: required(2)?,
                val_loss: field(3)?,
                val_accuracy: field(4)?,
            });
        }
        Ok(Self { epochs })
    }
}

/// Confusion counts; `counts[true][predicted]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: [[usize; NUM_CLASSES]; NUM_CLASSES],
}

impl ConfusionMatrix {
    pub fn total(&self) -> usize {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> usize {
        (0..NUM_CLASSES).map(|i| self.counts[i][i]).sum()
    }

    /// Rows per true class.
    pub fn support(&self) -> [usize; NUM_CLASSES] {
        self.counts.map(|row| row.iter().sum())
    }

    pub fn accuracy(&self) -> f64 {
        self.trace() as f64 / self.total() as f64
    }
}

impl fmt::Display for ConfusionMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for row in &self.counts {
            let cells: Vec<String> = row.iter().map(|c| format!("{c:>5}")).collect();
            writeln!(f, "{}", cells.join(""))?;
        }
        Ok(())
    }
}

pub fn confusion_matrix(predicted: &[usize], actual: &[usize]) -> Result<ConfusionMatrix> {
    if predicted.len() != actual.len() {
        return Err(Error::Shape(format!(
            "{} predictions for {} labels",
            predicted.len(),
            actual.len()
        )));
    }
    let mut cm = ConfusionMatrix::default();
    for (&p, &a) in predicted.iter().zip(actual) {
        if p >= NUM_CLASSES {
            return Err(Error::LabelOutOfRange(p));
        }
        if a >= NUM_CLASSES {
            return Err(Error::LabelOutOfRange(a));
        }
        cm.counts[a][p] += 1;
    }
    Ok(cm)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub loss: f64,
    pub accuracy: f64,
    pub confusion: ConfusionMatrix,
}

pub fn evaluate(model: &MlpModel, data: &Dataset) -> Result<Metrics> {
    if data.is_empty() {
        return Err(Error::InvalidArgument("cannot evaluate on an empty dataset".into()));
    }
    data.check_against(model, "evaluation")?;
    let probs = model.predict_proba(&data.features)?;
    let loss = loss_sce(&probs, &data.labels)?;
    let predicted: Vec<usize> = probs.iter_rows().map(argmax).collect();
    let confusion = confusion_matrix(&predicted, &data.labels)?;
    Ok(Metrics {
        loss,
        accuracy: confusion.accuracy(),
        confusion,
    })
}

/// Runs `config.epochs` epochs of Adam on `model`. Each epoch shuffles the training rows with
/// [`Xorshift64Star`] seeded by `seed + epoch` (epoch counted from 0), cuts
/// them into batches of `batch_size` (the last may be short), and applies
/// one Adam step per batch.
pub fn train(
    mut model: MlpModel,
    train_set: &Dataset,
    val_set: Option<&Dataset>,
    config: &TrainConfig,
) -> Result<(MlpModel, TrainHistory)> {
    config.validate()?;
    if train_set.is_empty() {
        return Err(Error::InvalidArgument("training set is empty".into()));
    }
    train_set.check_against(&model, "training")?;
    let val_set = val_set.filter(|v| !v.is_empty());
    if let Some(val) = val_set {
        val.check_against(&model, "validation")?;
    }

    let mut adam = adam_init(&model, config.adam)?;
    let mut history = TrainHistory::default();
    let n = train_set.len();

    for epoch in 0..config.epochs {
        let mut order: Vec<usize> = (0..n).collect();
        if config.shuffle_each_epoch {
            Xorshift64Star::new(config.seed.wrapping_add(epoch as u64)).shuffle(&mut order);
        }

        let mut batch_losses = 0.0;
        let mut n_batches = 0usize;
        let mut correct = 0usize;
        for chunk in order.chunks(config.batch_size) {
            let batch = train_set.subset(chunk);
            let trace = model.forward(&batch.features)?;
            let probs = trace.probabilities();
            batch_losses += loss_sce(probs, &batch.labels)?;
            n_batches += 1;
            correct += probs
                .iter_rows()
                .zip(&batch.labels)
                .filter(|(row, &y)| argmax(row) == y)
                .count();
            let grads = model.backward(&trace, &batch.labels)?;
            adam.step(&mut model, &grads)?;
        }

        let (train_loss, train_accuracy) = match config.epoch_metrics {
            EpochMetrics::RunningMean => (batch_losses / n_batches as f64, correct as f64 / n as f64),
            EpochMetrics::PostEpoch => {
                let m = evaluate(&model, train_set)?;
                (m.loss, m.accuracy)
            }
        };
        let val = val_set.map(|v| evaluate(&model, v)).transpose()?;
        history.epochs.push(EpochRecord {
            epoch: epoch + 1,
            train_loss,
            train_accuracy,
            val_loss: val.map(|m| m.loss),
            val_accuracy: val.map(|m| m.accuracy),
        });
    }
    Ok((model, history))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mlp::init_mlp;
    use proptest::prelude::*;

    fn toy(n: usize, seed: u64) -> Dataset {
        // three separable blobs in 4 dimensions
        let mut rng = Xorshift64Star::new(seed);
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for i in 0..n {
            let y = i % 3;
            let mut row = vec![0.0; 4];
            for (j, v) in row.iter_mut().enumerate() {
                *v = rng.symmetric(0.5) + if j == y { 2.0 } else { 0.0 };
            }
            rows.push(row);
            labels.push(y);
        }
        Dataset::new(Matrix::from_rows(&rows).unwrap(), labels).unwrap()
    }

    #[test]
    fn confusion_examples() {
        let cm = confusion_matrix(&[0, 1, 2], &[0, 1, 2]).unwrap();
        assert_eq!(cm.counts, [[1, 0, 0], [0, 1, 0], [0, 0, 1]]);
        let cm = confusion_matrix(&[0, 0, 0, 0], &[0, 0, 1, 2]).unwrap();
        assert_eq!(cm.counts, [[2, 0, 0], [1, 0, 0], [1, 0, 0]]);
        assert_eq!(cm.support(), [2, 1, 1]);
        assert!(confusion_matrix(&[0], &[0, 1]).is_err());
        assert!(confusion_matrix(&[3], &[0]).is_err());
    }

    #[test]
    fn history_length_and_csv() {
        let data = toy(30, 1);
        let model = init_mlp(&[4, 5, 3], 1).unwrap();
        let config = TrainConfig {
            epochs: 7,
            batch_size: 4,
            ..Default::default()
        };
        let (_, history) = train(model, &data, Some(&toy(9, 2)), &config).unwrap();
        assert_eq!(history.len(), 7);
        let csv = history.to_csv().unwrap();
        assert!(csv.starts_with("epoch,train_loss,train_acc,val_loss,val_acc\n"));
        assert_eq!(csv.lines().count(), 8);
        assert_eq!(TrainHistory::from_csv(&csv).unwrap(), history);
    }

    #[test]
    fn history_without_validation() {
        let (_, history) = train(
            init_mlp(&[4, 3], 0).unwrap(),
            &toy(10, 3),
            None,
            &TrainConfig {
                epochs: 2,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(history.epochs.iter().all(|e| e.val_loss.is_none()));
        let csv = history.to_csv().unwrap();
        assert!(csv.lines().nth(1).unwrap().ends_with(",,"));
        assert_eq!(TrainHistory::from_csv(&csv).unwrap(), history);
    }

    #[test]
    fn identical_rows_loss_decreases() {
        let x = Matrix::from_rows(&[[0.3, -0.2, 0.9, 0.1]; 8]).unwrap();
        let data = Dataset::new(x, vec![2; 8]).unwrap();
        let config = TrainConfig {
            epochs: 30,
            batch_size: 8,
            ..Default::default()
        };
        let (_, history) = train(init_mlp(&[4, 6, 3], 9).unwrap(), &data, None, &config).unwrap();
        for w in history.epochs[..5].windows(2) {
            assert!(w[1].train_loss < w[0].train_loss);
        }
    }

    #[test]
    fn evaluate_examples() {
        let data = toy(10, 4);
        // a zero model predicts class 0 everywhere with uniform probability
        let zero = MlpModel::zeros(&[4, 3]).unwrap();
        let m = evaluate(&zero, &data).unwrap();
        let zeros = data.labels.iter().filter(|&&y| y == 0).count();
        assert_eq!(m.accuracy, zeros as f64 / 10.0);
        assert!((m.loss - 3f64.ln()).abs() < 1e-12);

        // one-hot lookup: weights = large identity on the first three inputs
        let mut perfect = MlpModel::zeros(&[4, 3]).unwrap();
        for c in 0..3 {
            perfect.layers[0].weights.set(c, c, 50.0);
        }
        let m = evaluate(&perfect, &data).unwrap();
        assert_eq!(m.accuracy, 1.0);
        assert_eq!(m.confusion.trace(), 10);
        assert!(evaluate(&zero, &data.subset(&[])).is_err());
    }

    #[test]
    fn rejects_bad_config_and_shapes() {
        let data = toy(6, 5);
        let model = init_mlp(&[4, 3], 0).unwrap();
        let zero_epochs = TrainConfig {
            epochs: 0,
            ..Default::default()
        };
        assert!(train(model.clone(), &data, None, &zero_epochs).is_err());
        let zero_batch = TrainConfig {
            batch_size: 0,
            ..Default::default()
        };
        assert!(train(model.clone(), &data, None, &zero_batch).is_err());
        assert!(train(model.clone(), &data.subset(&[]), None, &TrainConfig::default()).is_err());
        let wide = init_mlp(&[5, 3], 0).unwrap();
        assert!(train(wide, &data, None, &TrainConfig::default()).is_err());
        let mut bad = data.clone();
        bad.labels[0] = 3;
        assert!(matches!(
            train(model, &bad, None, &TrainConfig::default()),
            Err(Error::LabelOutOfRange(3))
        ));
    }

    #[test]
    fn training_is_bit_reproducible() {
        let data = toy(40, 6);
        let config = TrainConfig {
            epochs: 5,
            batch_size: 16,
            seed: 3,
            ..Default::default()
        };
        let run = || train(init_mlp(&[4, 8, 3], 3).unwrap(), &data, Some(&data), &config).unwrap();
        let (a, ha) = run();
        let (b, hb) = run();
        assert!(a.values().zip(b.values()).all(|(x, y)| x.to_bits() == y.to_bits()));
        assert_eq!(ha, hb);
    }

    #[test]
    fn post_epoch_metrics_match_evaluate() {
        let data = toy(24, 7);
        let config = TrainConfig {
            epochs: 3,
            batch_size: 5,
            epoch_metrics: EpochMetrics::PostEpoch,
            ..Default::default()
        };
        let (model, history) = train(init_mlp(&[4, 4, 3], 1).unwrap(), &data, None, &config).unwrap();
        let m = evaluate(&model, &data).unwrap();
        assert_eq!(history.last().unwrap().train_loss, m.loss);
        assert_eq!(history.last().unwrap().train_accuracy, m.accuracy);
    }

    #[test]
    fn single_class_loss_falls_below_threshold() {
        let data = toy(12, 8).subset(&[0, 3, 6, 9]);
        assert!(data.labels.iter().all(|&y| y == 0));
        let config = TrainConfig {
            epochs: 30,
            batch_size: 16,
            adam: AdamConfig {
                learning_rate: 0.05,
                ..Default::default()
            },
            ..Default::default()
        };
        let (_, history) = train(init_mlp(&[4, 8, 3], 2).unwrap(), &data, None, &config).unwrap();
        assert!(history.last().unwrap().train_loss < 0.01, "{:?}", history.last());
    }

    proptest! {
        #[test]
        fn confusion_partitions_input(pairs in prop::collection::vec((0usize..3, 0usize..3), 0..200)) {
            let (p, a): (Vec<usize>, Vec<usize>) = pairs.into_iter().unzip();
            let cm = confusion_matrix(&p, &a).unwrap();
            prop_assert_eq!(cm.total(), p.len());
            for c in 0..3 {
                prop_assert_eq!(cm.support()[c], a.iter().filter(|&&y| y == c).count());
            }
        }
    }
}
