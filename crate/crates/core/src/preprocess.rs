//! Standard scaling and seeded row partitions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng::Xorshift64Star;

/// Standard deviations below this are treated as constant columns.
pub const STD_FLOOR: f64 = 1e-12;

/// Per-column z-scoring with population standard deviation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ScalerRepr")]
pub struct Scaler {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    pub std_floor: f64,
}

#[derive(Deserialize)]
struct ScalerRepr {
    mean: Vec<f64>,
    std: Vec<f64>,
    std_floor: f64,
}

impl TryFrom<ScalerRepr> for Scaler {
    type Error = Error;

    fn try_from(repr: ScalerRepr) -> Result<Self> {
        if repr.mean.len() != repr.std.len() {
            return Err(Error::Shape(format!(
                "scaler has {} means but {} standard deviations",
                repr.mean.len(),
                repr.std.len()
            )));
        }
        if repr.mean.iter().chain(&repr.std).any(|v| !v.is_finite()) || repr.std.iter().any(|&s| s < repr.std_floor) {
            return Err(Error::Shape("scaler holds non-finite or sub-floor values".into()));
        }
        Ok(Scaler {
            mean: repr.mean,
            std: repr.std,
            std_floor: repr.std_floor,
        })
    }
}

/// Column means and population standard deviations. Columns whose std falls
/// below [`STD_FLOOR`] get std 1, so they transform to zero.
pub fn fit_scaler(features: &Matrix) -> Result<Scaler> {
    if features.is_empty() {
        return Err(Error::InvalidArgument("cannot fit a scaler on an empty matrix".into()));
    }
    let n = features.rows() as f64;
    let (mean, std) = (0..features.cols())
        .map(|c| {
            let mean = features.column(c).sum::<f64>() / n;
            let var = features.column(c).map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
            let std = var.sqrt();
            (mean, if std < STD_FLOOR { 1.0 } else { std })
        })
        .unzip();
    Ok(Scaler {
        mean,
        std,
        std_floor: STD_FLOOR,
    })
}

impl Scaler {
    pub fn width(&self) -> usize {
        self.mean.len()
    }

    fn check_width(&self, features: &Matrix) -> Result<()> {
        if features.cols() != self.width() {
            return Err(Error::Shape(format!(
                "matrix has {} columns, scaler was fitted on {}",
                features.cols(),
                self.width()
            )));
        }
        Ok(())
    }

    pub fn transform(&self, features: &Matrix) -> Result<Matrix> {
        self.check_width(features)?;
        let mut out = features.clone();
        for r in 0..out.rows() {
            for ((x, m), s) in out.row_mut(r).iter_mut().zip(&self.mean).zip(&self.std) {
                *x = (*x - m) / s;
            }
        }
        Ok(out)
    }

    pub fn inverse_transform(&self, scaled: &Matrix) -> Result<Matrix> {
        self.check_width(scaled)?;
        let mut out = scaled.clone();
        for r in 0..out.rows() {
            for ((x, m), s) in out.row_mut(r).iter_mut().zip(&self.mean).zip(&self.std) {
                *x = *x * s + m;
            }
        }
        Ok(out)
    }
}

/// Row indices for the three partitions, in shuffled order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitIndices {
    pub seed: u64,
    #[serde(rename = "test_indices")]
    pub test: Vec<usize>,
    #[serde(rename = "val_indices")]
    pub val: Vec<usize>,
    #[serde(rename = "train_indices")]
    pub train: Vec<usize>,
}

impl SplitIndices {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("split serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidArgument(format!("split manifest: {e}")))
    }

    pub fn n_rows(&self) -> usize {
        self.test.len() + self.val.len() + self.train.len()
    }
}

// Products like 0.29 * 100 land a hair below the intended integer.
const FLOOR_SLACK: f64 = 1e-9;

fn portion(n_rows: usize, fraction: f64) -> usize {
    ((n_rows as f64 * fraction) + FLOOR_SLACK).floor() as usize
}

/// Shuffles `0..n_rows` with [`Xorshift64Star`] seeded by `seed`, then takes
/// `⌊n·test_fraction⌋` rows for test, the next `⌊n·val_fraction⌋` for
/// validation and the rest for training. No stratification.
pub fn split(n_rows: usize, test_fraction: f64, val_fraction: f64, seed: u64) -> Result<SplitIndices> {
    if n_rows == 0 {
        return Err(Error::InvalidArgument("cannot split zero rows".into()));
    }
    let valid = |f: f64| f.is_finite() && f >= 0.0;
    if !valid(test_fraction) || !valid(val_fraction) || test_fraction + val_fraction >= 1.0 {
        return Err(Error::InvalidArgument(format!(
            "fractions must be non-negative with test + val < 1 (got test {test_fraction}, val {val_fraction})"
        )));
    }
    let mut order: Vec<usize> = (0..n_rows).collect();
    Xorshift64Star::new(seed).shuffle(&mut order);

    let n_test = portion(n_rows, test_fraction);
    let n_val = portion(n_rows, val_fraction).min(n_rows - n_test);
    let train = order.split_off(n_test + n_val);
    let val = order.split_off(n_test);
    Ok(SplitIndices {
        seed,
        test: order,
        val,
        train,
    })
}
