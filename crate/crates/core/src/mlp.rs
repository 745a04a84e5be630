//! Dense feed-forward classifier: ReLU hidden layers, softmax output,
//! sparse categorical cross-entropy, and hand-derived backpropagation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng::Xorshift64Star;

/// Probabilities are clamped to at least this before taking the log.
pub const PROB_CLAMP: f64 = 1e-12;

pub fn relu(x: &[f64]) -> Vec<f64> {
    x.iter().map(|&v| v.max(0.0)).collect()
}

/// Max-shifted softmax.
pub fn softmax(z: &[f64]) -> Vec<f64> {
    let mut out = z.to_vec();
    softmax_in_place(&mut out);
    out
}

fn softmax_in_place(z: &mut [f64]) {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in z.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    for v in z.iter_mut() {
        *v /= sum;
    }
}

/// Index of the largest value, lowest index on ties.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Number of weights and biases in a dense stack of the given widths.
pub fn param_count(layer_sizes: &[usize]) -> usize {
    layer_sizes.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
}

/// One dense layer; `weights` is fan_in × fan_out.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub weights: Matrix,
    pub bias: Vec<f64>,
}

impl Layer {
    pub fn zeros(fan_in: usize, fan_out: usize) -> Self {
        Self {
            weights: Matrix::zeros(fan_in, fan_out),
            bias: vec![0.0; fan_out],
        }
    }

    pub fn fan_in(&self) -> usize {
        self.weights.rows()
    }

    pub fn fan_out(&self) -> usize {
        self.weights.cols()
    }

    /// Weights (row-major) then biases.
    pub fn values(&self) -> impl Iterator<Item = &f64> {
        self.weights.as_slice().iter().chain(&self.bias)
    }

    pub fn values_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.weights.as_mut_slice().iter_mut().chain(self.bias.iter_mut())
    }
}

/// Per-parameter derivatives, laid out like the model's layers.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<Layer>,
}

impl Gradients {
    pub fn zeros_like(model: &MlpModel) -> Self {
        Self {
            layers: model
                .layers
                .iter()
                .map(|l| Layer::zeros(l.fan_in(), l.fan_out()))
                .collect(),
        }
    }

    pub fn values(&self) -> impl Iterator<Item = &f64> {
        self.layers.iter().flat_map(Layer::values)
    }

    pub fn values_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.layers.iter_mut().flat_map(Layer::values_mut)
    }

    pub fn layer_sizes(&self) -> Vec<usize> {
        layer_sizes_of(&self.layers)
    }
}

fn layer_sizes_of(layers: &[Layer]) -> Vec<usize> {
    let mut sizes: Vec<usize> = layers.iter().map(Layer::fan_in).collect();
    if let Some(last) = layers.last() {
        sizes.push(last.fan_out());
    }
    sizes
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MlpRepr", into = "MlpRepr")]
pub struct MlpModel {
    pub layers: Vec<Layer>,
    pub seed: u64,
}

/// On-disk form: weights as nested fan_in × fan_out rows.
#[derive(Serialize, Deserialize)]
struct MlpRepr {
    layer_sizes: Vec<usize>,
    seed: u64,
    weights: Vec<Vec<Vec<f64>>>,
    biases: Vec<Vec<f64>>,
}

impl From<MlpModel> for MlpRepr {
    fn from(model: MlpModel) -> Self {
        MlpRepr {
            layer_sizes: model.layer_sizes(),
            seed: model.seed,
            weights: model.layers.iter().map(|l| l.weights.to_rows()).collect(),
            biases: model.layers.into_iter().map(|l| l.bias).collect(),
        }
    }
}

impl TryFrom<MlpRepr> for MlpModel {
    type Error = Error;

    fn try_from(repr: MlpRepr) -> Result<Self> {
        check_sizes(&repr.layer_sizes)?;
        let n_layers = repr.layer_sizes.len() - 1;
        if repr.weights.len() != n_layers || repr.biases.len() != n_layers {
            return Err(Error::Shape(format!(
                "{} layer sizes need {n_layers} weight matrices and bias vectors, found {} and {}",
                repr.layer_sizes.len(),
                repr.weights.len(),
                repr.biases.len()
            )));
        }
        let mut layers = Vec::with_capacity(n_layers);
        for (l, (rows, bias)) in repr.weights.into_iter().zip(repr.biases).enumerate() {
            let (fan_in, fan_out) = (repr.layer_sizes[l], repr.layer_sizes[l + 1]);
            if rows.len() != fan_in || rows.iter().any(|r| r.len() != fan_out) || bias.len() != fan_out {
                return Err(Error::Shape(format!(
                    "layer {l} parameters do not match its {fan_in}x{fan_out} shape"
                )));
            }
            let weights = Matrix::from_rows(&rows)?;
            layers.push(Layer { weights, bias });
        }
        let model = MlpModel {
            layers,
            seed: repr.seed,
        };
        if !model.values().all(|v| v.is_finite()) {
            return Err(Error::Shape("model holds non-finite parameters".into()));
        }
        Ok(model)
    }
}

fn check_sizes(layer_sizes: &[usize]) -> Result<()> {
    if layer_sizes.len() < 2 || layer_sizes.contains(&0) {
        return Err(Error::InvalidArgument(format!(
            "need at least two positive layer sizes, got {layer_sizes:?}"
        )));
    }
    Ok(())
}

/// Glorot-uniform weights in ±√(6/(fan_in+fan_out)), zero biases. Layers are
/// drawn in order from one generator seeded with `seed`, each weight matrix
/// in row-major order.
pub fn init_mlp(layer_sizes: &[usize], seed: u64) -> Result<MlpModel> {
    check_sizes(layer_sizes)?;
    let mut rng = Xorshift64Star::new(seed);
    let layers = layer_sizes
        .windows(2)
        .map(|w| {
            let (fan_in, fan_out) = (w[0], w[1]);
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            let mut layer = Layer::zeros(fan_in, fan_out);
            for v in layer.weights.as_mut_slice() {
                *v = rng.symmetric(limit);
            }
            layer
        })
        .collect();
    Ok(MlpModel { layers, seed })
}

/// Intermediates kept from a forward pass.
#[derive(Debug, Clone)]
pub struct ForwardTrace {
    pub input: Matrix,
    /// Affine outputs, one per layer.
    pub pre_activations: Vec<Matrix>,
    /// ReLU outputs for hidden layers, softmax probabilities for the last.
    pub activations: Vec<Matrix>,
}

impl ForwardTrace {
    pub fn probabilities(&self) -> &Matrix {
        self.activations.last().expect("trace has at least one layer")
    }
}

impl MlpModel {
    /// All-zero parameters; every input maps to uniform probabilities.
    pub fn zeros(layer_sizes: &[usize]) -> Result<Self> {
        check_sizes(layer_sizes)?;
        Ok(Self {
            layers: layer_sizes.windows(2).map(|w| Layer::zeros(w[0], w[1])).collect(),
            seed: 0,
        })
    }

    pub fn layer_sizes(&self) -> Vec<usize> {
        layer_sizes_of(&self.layers)
    }

    pub fn n_inputs(&self) -> usize {
        self.layers[0].fan_in()
    }

    pub fn n_outputs(&self) -> usize {
        self.layers.last().map_or(0, Layer::fan_out)
    }

    pub fn param_count(&self) -> usize {
        param_count(&self.layer_sizes())
    }

    pub fn values(&self) -> impl Iterator<Item = &f64> {
        self.layers.iter().flat_map(Layer::values)
    }

    pub fn values_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.layers.iter_mut().flat_map(Layer::values_mut)
    }

    fn check_input(&self, batch: &Matrix) -> Result<()> {
        if batch.cols() != self.n_inputs() {
            return Err(Error::Shape(format!(
                "batch has {} columns, model expects {}",
                batch.cols(),
                self.n_inputs()
            )));
        }
        Ok(())
    }

    pub fn forward(&self, batch: &Matrix) -> Result<ForwardTrace> {
        self.check_input(batch)?;
        let last = self.layers.len() - 1;
        let mut pre_activations = Vec::with_capacity(self.layers.len());
        let mut activations: Vec<Matrix> = Vec::with_capacity(self.layers.len());
        for (l, layer) in self.layers.iter().enumerate() {
            let input = if l == 0 { batch } else { &activations[l - 1] };
            let mut z = input.matmul(&layer.weights)?;
            for r in 0..z.rows() {
                for (v, b) in z.row_mut(r).iter_mut().zip(&layer.bias) {
                    *v += b;
                }
            }
            let mut a = z.clone();
            for r in 0..a.rows() {
                let row = a.row_mut(r);
                if l == last {
                    softmax_in_place(row);
                } else {
                    row.iter_mut().for_each(|v| *v = v.max(0.0));
                }
            }
            pre_activations.push(z);
            activations.push(a);
        }
        Ok(ForwardTrace {
            input: batch.clone(),
            pre_activations,
            activations,
        })
    }

    pub fn predict_proba(&self, batch: &Matrix) -> Result<Matrix> {
        Ok(self.forward(batch)?.activations.pop().expect("non-empty"))
    }

    /// Argmax class per row, lowest index on ties.
    pub fn predict(&self, batch: &Matrix) -> Result<Vec<usize>> {
        let probs = self.predict_proba(batch)?;
        Ok(probs.iter_rows().map(argmax).collect())
    }

    /// Gradients of [`loss_sce`] with respect to every parameter.
    ///
    /// The output delta is `(p − onehot(y)) / b`; each hidden delta is the
    /// next layer's delta times its weights, gated by `z > 0`.
    pub fn backward(&self, trace: &ForwardTrace, labels: &[usize]) -> Result<Gradients> {
        let probs = trace.probabilities();
        let batch = probs.rows();
        if labels.len() != batch || trace.activations.len() != self.layers.len() {
            return Err(Error::Shape(format!(
                "trace of {batch} rows over {} layers does not match {} labels and {} layers",
                trace.activations.len(),
                labels.len(),
                self.layers.len()
            )));
        }
        if trace.input.cols() != self.n_inputs() || probs.cols() != self.n_outputs() {
            return Err(Error::Shape("trace was not produced by this model".into()));
        }
        let n_classes = self.n_outputs();
        let mut delta = probs.clone();
        for (r, &y) in labels.iter().enumerate() {
            if y >= n_classes {
                return Err(Error::LabelOutOfRange(y));
            }
            let row = delta.row_mut(r);
            row[y] -= 1.0;
            row.iter_mut().for_each(|v| *v /= batch as f64);
        }

        let mut grads = Gradients::zeros_like(self);
        for l in (0..self.layers.len()).rev() {
            let input = if l == 0 {
                &trace.input
            } else {
                &trace.activations[l - 1]
            };
            grads.layers[l].weights = input.t_matmul(&delta)?;
            let bias = &mut grads.layers[l].bias;
            for row in delta.iter_rows() {
                for (g, d) in bias.iter_mut().zip(row) {
                    *g += d;
                }
            }
            if l > 0 {
                let mut upstream = delta.matmul_t(&self.layers[l].weights)?;
                let gate = &trace.pre_activations[l - 1];
                for r in 0..upstream.rows() {
                    for (u, &z) in upstream.row_mut(r).iter_mut().zip(gate.row(r)) {
                        if z <= 0.0 {
                            *u = 0.0;
                        }
                    }
                }
                delta = upstream;
            }
        }
        Ok(grads)
    }

    /// Loss of the model on a batch; forward pass plus [`loss_sce`].
    pub fn loss(&self, batch: &Matrix, labels: &[usize]) -> Result<f64> {
        loss_sce(self.forward(batch)?.probabilities(), labels)
    }
}

/// Mean of `−ln p[row][label]` with `p` clamped to `[PROB_CLAMP, 1]`.
pub fn loss_sce(probabilities: &Matrix, labels: &[usize]) -> Result<f64> {
    if labels.len() != probabilities.rows() {
        return Err(Error::Shape(format!(
            "{} probability rows but {} labels",
            probabilities.rows(),
            labels.len()
        )));
    }
    if labels.is_empty() {
        return Err(Error::InvalidArgument("loss of an empty batch".into()));
    }
    let mut total = 0.0;
    for (row, &y) in probabilities.iter_rows().zip(labels) {
        let p = *row.get(y).ok_or(Error::LabelOutOfRange(y))?;
        total -= p.clamp(PROB_CLAMP, 1.0).ln();
    }
    Ok(total / labels.len() as f64)
}
