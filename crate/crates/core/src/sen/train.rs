//! Mini-batch training with momentum and early stopping, and test metrics.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{gradient, mean_loss, ResultDataset, Sample, SenError, SenParams, Split};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub momentum: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub patience: usize,
    pub hidden: Vec<usize>,
    /// Share of the train split held out for early stopping.
    pub validation_fraction: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.01,
            momentum: 0.9,
            epochs: 2000,
            batch_size: 32,
            patience: 20,
            hidden: vec![64, 64],
            validation_fraction: 0.1,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    pub best_val_loss: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainOutcome {
    /// Parameters with the lowest validation loss.
    pub params: SenParams,
    pub history: Vec<EpochStats>,
    pub best_epoch: usize,
}

/// Trains on the train split. Stops after `epochs` or once the validation
/// loss has not improved for `patience` epochs.
pub fn train(data: &ResultDataset, cfg: &TrainConfig) -> Result<TrainOutcome, SenError> {
    let mut samples = data.samples(Split::Train);
    if samples.is_empty() {
        return Err(SenError::Empty("train split"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    samples.shuffle(&mut rng);
    let n_val = ((samples.len() as f64) * cfg.validation_fraction).round() as usize;
    let n_val = n_val.min(samples.len() - 1);
    let val: Vec<Sample> = samples.split_off(samples.len() - n_val);
    let fit = samples;
    let val_set: &[Sample] = if val.is_empty() { &fit } else { &val };

    let mut params = SenParams::init(&cfg.hidden, cfg.seed);
    let mut velocity = SenParams::zeros(&params.shape());
    let mut best = params.clone();
    let mut best_val = mean_loss(&params, val_set)?;
    let mut best_epoch = 0;
    let mut history = Vec::new();
    let mut order: Vec<usize> = (0..fit.len()).collect();
    let batch_size = cfg.batch_size.max(1);
    let mut batch = Vec::with_capacity(batch_size);

    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        let mut train_loss = 0.0;
        for chunk in order.chunks(batch_size) {
            batch.clear();
            batch.extend(chunk.iter().map(|&i| fit[i].clone()));
            let (loss, grad) = gradient(&params, &batch)?;
            train_loss += loss * chunk.len() as f64;
            for ((p, v), g) in params.layers.iter_mut().zip(&mut velocity.layers).zip(&grad.layers) {
                for ((pw, vw), gw) in p.w.iter_mut().zip(&mut v.w).zip(&g.w) {
                    *vw = cfg.momentum * *vw - cfg.learning_rate * gw;
                    *pw += *vw;
                }
                for ((pb, vb), gb) in p.b.iter_mut().zip(&mut v.b).zip(&g.b) {
                    *vb = cfg.momentum * *vb - cfg.learning_rate * gb;
                    *pb += *vb;
                }
            }
        }
        let val_loss = mean_loss(&params, val_set)?;
        if val_loss < best_val {
            best_val = val_loss;
            best = params.clone();
            best_epoch = epoch;
        }
        history.push(EpochStats {
            epoch,
            train_loss: train_loss / fit.len() as f64,
            val_loss,
            best_val_loss: best_val,
        });
        if epoch - best_epoch >= cfg.patience {
            break;
        }
    }
    Ok(TrainOutcome {
        params: best,
        history,
        best_epoch,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub n: usize,
    pub accuracy: f64,
    /// `[[true negatives, false positives], [false negatives, true positives]]`.
    pub confusion: [[usize; 2]; 2],
    pub fp_rate: f64,
    pub mean_loss: f64,
}

/// Test metrics with targets binarized at r > 0.5 and predictions at
/// `threshold`.
pub fn evaluate(p: &SenParams, test: &ResultDataset, threshold: f64) -> Result<Metrics, SenError> {
    let mut confusion = [[0usize; 2]; 2];
    let mut loss = 0.0;
    for rec in &test.records {
        let s = rec.sample();
        let pred = p.predict(&s.x)?;
        loss += super::bce_loss(pred, s.target);
        let actual = usize::from(rec.r > 0.5);
        let predicted = usize::from(pred > threshold);
        confusion[actual][predicted] += 1;
    }
    let n = test.len();
    if n == 0 {
        return Err(SenError::Empty("test set"));
    }
    let correct = confusion[0][0] + confusion[1][1];
    let negatives = confusion[0][0] + confusion[0][1];
    Ok(Metrics {
        n,
        accuracy: correct as f64 / n as f64,
        confusion,
        fp_rate: if negatives == 0 {
            0.0
        } else {
            confusion[0][1] as f64 / negatives as f64
        },
        mean_loss: loss / n as f64,
    })
}
