//! Mini-batch training with a seeded validation split and best-validation
//! checkpointing.

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::mlp::{Adam, MlpModel};
use super::pca::PcaModel;
use super::GlyphSample;
use crate::error::{OcrError, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub epochs: usize,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub dropout: f64,
    pub seed: u64,
    pub validation_fraction: f64,
    pub hidden: Vec<usize>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            batch_size: 8192,
            epochs: 80,
            lr: 0.001,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            dropout: 0.10,
            seed: 0,
            validation_fraction: 0.01,
            hidden: vec![150, 70],
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(OcrError::Config(m.to_string()));
        if !(0.0..1.0).contains(&self.dropout) {
            return bad("dropout must lie in [0, 1)");
        }
        if self.lr.is_nan() || self.lr <= 0.0 {
            return bad("learning rate must be positive");
        }
        if self.batch_size == 0 || self.epochs == 0 {
            return bad("batch size and epochs must be positive");
        }
        if !(0.0..1.0).contains(&self.validation_fraction) {
            return bad("validation fraction must lie in [0, 1)");
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return bad("Adam betas must lie in [0, 1)");
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    pub val_accuracy: f64,
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub model: MlpModel,
    pub history: Vec<EpochMetrics>,
    /// 1-based epoch of the returned checkpoint.
    pub best_epoch: usize,
    pub train_size: usize,
    pub val_size: usize,
}

/// Index of the largest value, lowest index on ties.
pub(crate) fn argmax(v: impl IntoIterator<Item = f64>) -> usize {
    let mut best = (0, f64::NEG_INFINITY);
    for (i, x) in v.into_iter().enumerate() {
        if x > best.1 {
            best = (i, x);
        }
    }
    best.0
}

fn evaluate(model: &MlpModel, x: &DMatrix<f64>, labels: &[usize]) -> (f64, f64) {
    if labels.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let p = model.forward_batch(x);
    let mut loss = 0.0;
    let mut correct = 0;
    for (r, &y) in labels.iter().enumerate() {
        loss -= p[(r, y)].max(f64::MIN_POSITIVE).ln();
        correct += usize::from(argmax(p.row(r).iter().copied()) == y);
    }
    let n = labels.len() as f64;
    (loss / n, correct as f64 / n)
}

fn gather(x: &DMatrix<f64>, rows: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), x.ncols(), |i, j| x[(rows[i], j)])
}

/// Trains a classifier on PCA-projected samples.
///
/// `n_classes` fixes the output width; labels must be below it.
pub fn train(samples: &[GlyphSample], cfg: &TrainConfig, pca: &PcaModel, n_classes: usize) -> Result<TrainOutcome> {
    cfg.validate()?;
    if let Some(s) = samples.iter().find(|s| s.label >= n_classes) {
        return Err(OcrError::invalid(format!("label {} outside {n_classes} classes", s.label)));
    }
    let mut present: Vec<usize> = samples.iter().map(|s| s.label).collect();
    present.sort_unstable();
    present.dedup();
    if present.len() < 2 {
        return Err(OcrError::DegenerateTraining(format!(
            "{} sample(s) covering {} class(es)",
            samples.len(),
            present.len()
        )));
    }

    let dim = pca.dim();
    if let Some(s) = samples.iter().find(|s| s.pixels.len() != dim) {
        return Err(OcrError::invalid(format!("sample of length {} for a {dim}-d PCA", s.pixels.len())));
    }
    let raw = DMatrix::from_fn(samples.len(), dim, |i, j| samples[i].pixels[j] as f64);
    let features = pca.project_rows(&raw);
    drop(raw);
    let labels: Vec<usize> = samples.iter().map(|s| s.label).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..samples.len()).collect();
    order.shuffle(&mut rng);
    let n_val = if cfg.validation_fraction > 0.0 {
        ((samples.len() as f64 * cfg.validation_fraction).ceil() as usize).min(samples.len() - 1)
    } else {
        0
    };
    let (val_idx, train_idx) = order.split_at(n_val);
    let mut train_idx = train_idx.to_vec();
    let val_x = gather(&features, val_idx);
    let val_y: Vec<usize> = val_idx.iter().map(|&i| labels[i]).collect();

    let mut sizes = vec![pca.k()];
    sizes.extend(&cfg.hidden);
    sizes.push(n_classes);
    let mut model = MlpModel::he_init(&sizes, &mut rng);
    let mut adam = Adam::new(&model, cfg.lr, cfg.beta1, cfg.beta2, cfg.eps);

    let mut history = Vec::with_capacity(cfg.epochs);
    let mut best: Option<(f64, f64, usize, MlpModel)> = None;
    for epoch in 1..=cfg.epochs {
        train_idx.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        for batch in train_idx.chunks(cfg.batch_size) {
            let x = gather(&features, batch);
            let y: Vec<usize> = batch.iter().map(|&i| labels[i]).collect();
            let (loss, grads) = model.loss_and_gradients(&x, &y, cfg.dropout, &mut rng);
            adam.step(&mut model, &grads);
            loss_sum += loss * batch.len() as f64;
        }
        let train_loss = loss_sum / train_idx.len() as f64;
        let (val_loss, val_accuracy) = evaluate(&model, &val_x, &val_y);
        history.push(EpochMetrics {
            epoch,
            train_loss,
            val_loss,
            val_accuracy,
        });
        log::debug!("epoch {epoch}: loss {train_loss:.4}, val acc {val_accuracy:.4}");

        // Without a validation set the last epoch wins.
        let better = match &best {
            _ if n_val == 0 => true,
            None => true,
            Some((acc, vloss, _, _)) => val_accuracy > *acc || (val_accuracy == *acc && val_loss < *vloss),
        };
        if better {
            let mut snapshot = model.clone();
            snapshot.round_to_f32();
            best = Some((val_accuracy, val_loss, epoch, snapshot));
        }
    }
    let (_, _, best_epoch, model) = best.expect("at least one epoch");
    Ok(TrainOutcome {
        model,
        history,
        best_epoch,
        train_size: train_idx.len(),
        val_size: n_val,
    })
}
