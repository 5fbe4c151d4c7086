//! One-layer softmax network trained with mini-batch gradient descent.

use std::io::Write;
use std::path::Path;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, ArrayViewMut2, Axis};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::binio::{BinReader, BinWriter};
use crate::error::{Error, Result};
use crate::readout::FeatureSet;

pub const NUM_CLASSES: usize = 10;

/// Floor applied to the true-class probability before taking its log.
pub const LOG_CLAMP: f64 = 1e-12;

/// Affine map `u = Wᵀx + B` feeding a softmax over the ten digits.
#[derive(Clone, Debug, PartialEq)]
pub struct OnnModel {
    /// `m × 10`, entry `(i, l)` weighs feature `i` into class `l`.
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
}

impl OnnModel {
    pub fn zeros(num_features: usize) -> Self {
        OnnModel {
            weights: Array2::zeros((num_features, NUM_CLASSES)),
            bias: Array1::zeros(NUM_CLASSES),
        }
    }

    /// Uniform weights in `[-a, a]`, zero bias. `a` defaults to `sqrt(6 / (m + 10))`.
    pub fn initialize(num_features: usize, init_scale: Option<f64>, seed: u64) -> Self {
        let a = init_scale.unwrap_or_else(|| (6.0 / (num_features + NUM_CLASSES) as f64).sqrt());
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let weights = Array2::from_shape_simple_fn((num_features, NUM_CLASSES), || {
            if a == 0.0 {
                0.0
            } else {
                rng.random_range(-a..=a)
            }
        });
        OnnModel {
            weights,
            bias: Array1::zeros(NUM_CLASSES),
        }
    }

    pub fn num_features(&self) -> usize {
        self.weights.nrows()
    }

    /// Flat binary checkpoint: `m`, `10`, W row-major, B (little-endian).
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = BinWriter::create(path)?;
        w.u64(self.num_features() as u64)?;
        w.u64(NUM_CLASSES as u64)?;
        w.f64s(self.weights.iter())?;
        w.f64s(self.bias.iter())?;
        w.finish()
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut r = BinReader::open(path)?;
        let m = r.u64()? as usize;
        let classes = r.u64()? as usize;
        if classes != NUM_CLASSES {
            return Err(Error::CacheMismatch {
                path: path.to_path_buf(),
                reason: format!("checkpoint has {classes} classes"),
            });
        }
        let weights = Array2::from_shape_vec((m, classes), r.f64s(m * classes)?).expect("m*10");
        let bias = Array1::from(r.f64s(classes)?);
        r.expect_eof()?;
        Ok(OnnModel { weights, bias })
    }
}

/// One-hot target for a digit.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LabelTarget(u8);

impl LabelTarget {
    pub fn new(label: u8) -> Result<Self> {
        if label as usize >= NUM_CLASSES {
            return Err(Error::Contract(format!("label {label} outside 0..=9")));
        }
        Ok(LabelTarget(label))
    }

    pub fn class(self) -> usize {
        self.0 as usize
    }

    pub fn to_vector(self) -> Array1<f64> {
        let mut t = Array1::zeros(NUM_CLASSES);
        t[self.class()] = 1.0;
        t
    }
}

fn softmax_rows(mut logits: ArrayViewMut2<f64>) {
    for mut row in logits.rows_mut() {
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        row.mapv_inplace(|u| (u - max).exp());
        let total = row.sum();
        row.mapv_inplace(|e| e / total);
    }
}

/// Class probabilities for one feature vector.
pub fn forward(model: &OnnModel, x: ArrayView1<f64>) -> Result<Array1<f64>> {
    if x.len() != model.num_features() {
        return Err(Error::Contract(format!(
            "feature vector has {} entries, model expects {}",
            x.len(),
            model.num_features()
        )));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Contract("non-finite feature value".into()));
    }
    let mut u = model.weights.t().dot(&x) + &model.bias;
    softmax_rows(u.view_mut().insert_axis(Axis(0)));
    Ok(u)
}

/// Row-wise class probabilities for a batch.
pub fn forward_batch(model: &OnnModel, x: ArrayView2<f64>) -> Array2<f64> {
    let mut u = x.dot(&model.weights) + &model.bias;
    softmax_rows(u.view_mut());
    u
}

/// Cross-entropy `-log y_class`, with `y_class` floored at [`LOG_CLAMP`].
pub fn loss(y: ArrayView1<f64>, target: LabelTarget) -> f64 {
    clamped_neg_log(y[target.class()])
}

fn clamped_neg_log(p: f64) -> f64 {
    // NaN must survive so that divergence is detected
    if p.is_nan() {
        p
    } else {
        -p.max(LOG_CLAMP).ln()
    }
}

/// Gradients of the batch-mean cross-entropy: `dW = Xᵀ(Y - T)/M`, `dB = Σ_rows(Y - T)/M`.
pub fn batch_gradients(
    x: ArrayView2<f64>,
    y: ArrayView2<f64>,
    t: ArrayView2<f64>,
) -> Result<(Array2<f64>, Array1<f64>)> {
    let m = x.nrows();
    if m == 0 || y.dim() != t.dim() || y.nrows() != m || y.ncols() != NUM_CLASSES {
        return Err(Error::Contract(format!(
            "gradient shapes disagree: X {:?}, Y {:?}, T {:?}",
            x.dim(),
            y.dim(),
            t.dim()
        )));
    }
    let mut residual = &y - &t;
    residual.mapv_inplace(|r| r / m as f64);
    let dw = x.t().dot(&residual);
    let db = residual.sum_axis(Axis(0));
    Ok((dw, db))
}

/// Inverted dropout: zero each entry with probability `rate`, scale survivors by `1/(1 - rate)`.
pub fn apply_dropout<R: Rng + ?Sized>(x: &mut [f64], rate: f64, rng: &mut R) {
    if rate == 0.0 {
        return;
    }
    let keep = 1.0 / (1.0 - rate);
    for v in x.iter_mut() {
        if rng.random::<f64>() < rate {
            *v = 0.0;
        } else {
            *v *= keep;
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    /// Dropout rate D on the measurement-layer features.
    pub dropout: f64,
    pub seed: u64,
    /// Half-width of the uniform weight initialization; `None` uses `sqrt(6/(m+10))`.
    pub init_scale: Option<f64>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.1,
            batch_size: 100,
            epochs: 300,
            dropout: 0.0,
            seed: 0,
            init_scale: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self, dataset_size: usize) -> Result<()> {
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!(
                "learning_rate = {} must be a nonnegative number",
                self.learning_rate
            )));
        }
        if self.batch_size == 0 || self.batch_size > dataset_size {
            return Err(Error::Config(format!(
                "batch_size = {} must lie in 1..={dataset_size}",
                self.batch_size
            )));
        }
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be at least 1".into()));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::Config(format!("dropout = {} outside [0, 1)", self.dropout)));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub train_acc: f64,
    pub test_acc: Option<f64>,
    /// Mean cross-entropy over the epoch's mini-batches, dropout applied.
    pub train_loss: f64,
}

/// Mini-batch gradient descent. Each epoch shuffles with a seeded permutation,
/// keeps the final short batch, and redraws dropout masks per batch.
pub fn train(
    mut model: OnnModel,
    train_set: &FeatureSet,
    test_set: Option<&FeatureSet>,
    cfg: &TrainConfig,
) -> Result<(OnnModel, Vec<EpochMetrics>)> {
    cfg.validate(train_set.len())?;
    if train_set.dim() != model.num_features() {
        return Err(Error::Contract(format!(
            "features have width {}, model expects {}",
            train_set.dim(),
            model.num_features()
        )));
    }
    let targets = one_hot_rows(&train_set.labels)?;
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut dropout_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    dropout_rng.set_stream(1);

    let mut history = Vec::with_capacity(cfg.epochs);
    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut shuffle_rng);
        let mut loss_sum = 0.0;
        for (batch_index, batch) in order.chunks(cfg.batch_size).enumerate() {
            let mut x = train_set.features.select(Axis(0), batch);
            if cfg.dropout > 0.0 {
                for mut row in x.rows_mut() {
                    apply_dropout(row.as_slice_mut().expect("owned rows are contiguous"), cfg.dropout, &mut dropout_rng);
                }
            }
            let t = targets.select(Axis(0), batch);
            let y = forward_batch(&model, x.view());
            let batch_loss: f64 = y
                .rows()
                .into_iter()
                .zip(batch)
                .map(|(row, &i)| clamped_neg_log(row[train_set.labels[i] as usize]))
                .sum();
            if !batch_loss.is_finite() {
                return Err(Error::Diverged {
                    epoch,
                    batch: batch_index,
                    loss: batch_loss,
                    learning_rate: cfg.learning_rate,
                });
            }
            loss_sum += batch_loss;
            let (dw, db) = batch_gradients(x.view(), y.view(), t.view())?;
            model.weights.scaled_add(-cfg.learning_rate, &dw);
            model.bias.scaled_add(-cfg.learning_rate, &db);
        }
        let metrics = EpochMetrics {
            epoch,
            train_acc: evaluate(&model, train_set),
            test_acc: test_set.map(|s| evaluate(&model, s)),
            train_loss: loss_sum / train_set.len() as f64,
        };
        log::debug!("{metrics:?}");
        history.push(metrics);
    }
    Ok((model, history))
}

fn one_hot_rows(labels: &[u8]) -> Result<Array2<f64>> {
    let mut t = Array2::zeros((labels.len(), NUM_CLASSES));
    for (r, &l) in labels.iter().enumerate() {
        t[[r, LabelTarget::new(l)?.class()]] = 1.0;
    }
    Ok(t)
}

/// Index of the largest entry, lowest index on ties.
fn argmax(row: ArrayView1<f64>) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate() {
        if v > row[best] {
            best = i;
        }
    }
    best
}

/// Fraction of samples whose most probable class equals the label.
pub fn evaluate(model: &OnnModel, set: &FeatureSet) -> f64 {
    if set.is_empty() {
        return 0.0;
    }
    // softmax is monotone, so comparing logits suffices
    let logits = set.features.dot(&model.weights) + &model.bias;
    let correct = logits
        .rows()
        .into_iter()
        .zip(&set.labels)
        .filter(|(row, &l)| argmax(row.view()) == l as usize)
        .count();
    correct as f64 / set.len() as f64
}

/// Mean and population standard deviation of accuracies over an epoch window.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WindowSummary {
    pub first_epoch: usize,
    pub last_epoch: usize,
    pub train_mean: f64,
    pub train_std: f64,
    pub test_mean: Option<f64>,
    pub test_std: Option<f64>,
    /// Mean of `train_acc - test_acc`.
    pub gap_mean: Option<f64>,
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Statistics over epochs `first..=last` (1-based, clipped to the history).
pub fn window_summary(history: &[EpochMetrics], first: usize, last: usize) -> Result<WindowSummary> {
    let window: Vec<&EpochMetrics> = history
        .iter()
        .filter(|m| m.epoch >= first && m.epoch <= last)
        .collect();
    if window.is_empty() {
        return Err(Error::Config(format!(
            "epoch window {first}..={last} contains no recorded epochs (trained {})",
            history.len()
        )));
    }
    let train: Vec<f64> = window.iter().map(|m| m.train_acc).collect();
    let (train_mean, train_std) = mean_std(&train);
    let test: Option<Vec<f64>> = window.iter().map(|m| m.test_acc).collect();
    let (test_mean, test_std, gap_mean) = match test {
        Some(test) => {
            let (m, s) = mean_std(&test);
            let gaps: Vec<f64> = train.iter().zip(&test).map(|(a, b)| a - b).collect();
            (Some(m), Some(s), Some(mean_std(&gaps).0))
        }
        None => (None, None, None),
    };
    Ok(WindowSummary {
        first_epoch: window[0].epoch,
        last_epoch: window[window.len() - 1].epoch,
        train_mean,
        train_std,
        test_mean,
        test_std,
        gap_mean,
    })
}

/// `epoch,train_acc,test_acc,train_loss`; an absent test accuracy is left empty.
pub fn write_metrics_csv<W: Write>(mut out: W, history: &[EpochMetrics]) -> std::io::Result<()> {
    writeln!(out, "epoch,train_acc,test_acc,train_loss")?;
    for m in history {
        let test = m.test_acc.map(|v| v.to_string()).unwrap_or_default();
        writeln!(out, "{},{},{},{}", m.epoch, m.train_acc, test, m.train_loss)?;
    }
    Ok(())
}
