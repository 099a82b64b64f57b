//! Strategy evaluation network: a small MLP scoring how likely one strategy
//! beats another.
//!
//! The input is the concatenation of both encoded strategies. Hidden layers
//! use ReLU and the single output a logistic sigmoid. Training minimizes
//! binary cross-entropy against soft targets with momentum SGD.

mod data;
mod train;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::strategy::{encode, enumerate_space, Strategy, VECTOR_LEN};

pub use data::{
    read_dataset, split_dataset, write_dataset, DatasetRecord, ResultDataset, Split,
};
pub use train::{evaluate, train, EpochStats, Metrics, TrainConfig, TrainOutcome};

/// Version written to parameter files.
pub const FORMAT_VERSION: u32 = 1;

/// Probabilities are kept this far from 0 and 1 inside the loss.
pub const LOSS_EPSILON: f64 = 1e-7;

#[derive(Debug, Error)]
pub enum SenError {
    #[error("input has {got} values, network expects {expected}")]
    Shape { expected: usize, got: usize },
    #[error("malformed parameters: {0}")]
    Params(String),
    #[error("empty {0}")]
    Empty(&'static str),
    #[error("dataset record {line}: {message}")]
    Record { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Affine layer; `w` is row-major with one row per output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub n_in: usize,
    pub n_out: usize,
    pub w: Vec<f64>,
    pub b: Vec<f64>,
}

impl Layer {
    fn zeros(n_in: usize, n_out: usize) -> Self {
        Layer {
            n_in,
            n_out,
            w: vec![0.0; n_in * n_out],
            b: vec![0.0; n_out],
        }
    }

    fn apply(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        for o in 0..self.n_out {
            let row = &self.w[o * self.n_in..(o + 1) * self.n_in];
            let z: f64 = row.iter().zip(x).map(|(w, x)| w * x).sum::<f64>() + self.b[o];
            out.push(z);
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SenParams {
    pub format_version: u32,
    pub layers: Vec<Layer>,
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

impl SenParams {
    /// Layer widths from input to output, e.g. `[28, 64, 64, 1]`.
    pub fn shape(&self) -> Vec<usize> {
        let mut s: Vec<usize> = self.layers.iter().map(|l| l.n_in).collect();
        s.extend(self.layers.last().map(|l| l.n_out));
        s
    }

    pub fn zeros(widths: &[usize]) -> Self {
        SenParams {
            format_version: FORMAT_VERSION,
            layers: widths.windows(2).map(|w| Layer::zeros(w[0], w[1])).collect(),
        }
    }

    /// Uniform in ±1/sqrt(fan_in) for weights and biases, seeded.
    pub fn init(hidden: &[usize], seed: u64) -> Self {
        let mut widths = vec![2 * VECTOR_LEN];
        widths.extend_from_slice(hidden);
        widths.push(1);
        let mut p = Self::zeros(&widths);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for l in &mut p.layers {
            let bound = 1.0 / (l.n_in as f64).sqrt();
            for v in l.w.iter_mut().chain(l.b.iter_mut()) {
                *v = rng.gen_range(-bound..bound);
            }
        }
        p
    }

    pub fn input_len(&self) -> usize {
        self.layers.first().map_or(0, |l| l.n_in)
    }

    pub fn n_params(&self) -> usize {
        self.layers.iter().map(|l| l.w.len() + l.b.len()).sum()
    }

    pub fn validate(&self) -> Result<(), SenError> {
        if self.format_version != FORMAT_VERSION {
            return Err(SenError::Params(format!(
                "format_version {} is not {FORMAT_VERSION}",
                self.format_version
            )));
        }
        if self.layers.is_empty() {
            return Err(SenError::Params("no layers".into()));
        }
        for (i, l) in self.layers.iter().enumerate() {
            if l.w.len() != l.n_in * l.n_out || l.b.len() != l.n_out {
                return Err(SenError::Params(format!("layer {i} sizes do not match its shape")));
            }
            if i > 0 && self.layers[i - 1].n_out != l.n_in {
                return Err(SenError::Params(format!("layer {i} does not chain")));
            }
            if l.w.iter().chain(&l.b).any(|v| !v.is_finite()) {
                return Err(SenError::Params(format!("layer {i} holds a non-finite value")));
            }
        }
        if self.layers.last().unwrap().n_out != 1 {
            return Err(SenError::Params("output layer must have one unit".into()));
        }
        Ok(())
    }

    /// Output probability for a raw input vector.
    pub fn predict(&self, x: &[f64]) -> Result<f64, SenError> {
        if x.len() != self.input_len() {
            return Err(SenError::Shape {
                expected: self.input_len(),
                got: x.len(),
            });
        }
        let mut cur = x.to_vec();
        let mut next = Vec::new();
        let last = self.layers.len() - 1;
        for (i, l) in self.layers.iter().enumerate() {
            l.apply(&cur, &mut next);
            if i < last {
                for v in &mut next {
                    *v = v.max(0.0);
                }
            }
            std::mem::swap(&mut cur, &mut next);
        }
        Ok(sigmoid(cur[0]))
    }

    pub fn save_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("params serialize")
    }

    pub fn load_json(text: &str) -> Result<SenParams, SenError> {
        let p: SenParams = serde_json::from_str(text)?;
        p.validate()?;
        Ok(p)
    }
}

/// Concatenation `[a ‖ b]`.
pub fn pair_input(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut x = Vec::with_capacity(a.len() + b.len());
    x.extend_from_slice(a);
    x.extend_from_slice(b);
    x
}

/// Predicted probability that `a` beats `b`.
pub fn forward(p: &SenParams, a: &[f64], b: &[f64]) -> Result<f64, SenError> {
    p.predict(&pair_input(a, b))
}

/// Binary cross-entropy with `pred` clamped to [ε, 1-ε].
pub fn bce_loss(pred: f64, target: f64) -> f64 {
    let p = pred.clamp(LOSS_EPSILON, 1.0 - LOSS_EPSILON);
    -(target * p.ln() + (1.0 - target) * (1.0 - p).ln())
}

/// One training example.
#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    pub x: Vec<f64>,
    pub target: f64,
}

impl Sample {
    pub fn new(a: &Strategy, b: &Strategy, target: f64) -> Self {
        Sample {
            x: pair_input(&encode(a), &encode(b)),
            target,
        }
    }
}

/// Gradient of the mean batch loss, laid out like the parameters.
pub type Gradients = SenParams;

/// Mean batch loss and its exact gradient by backpropagation. The output
/// gradient uses the unclamped sigmoid, `pred - target`.
pub fn gradient(p: &SenParams, batch: &[Sample]) -> Result<(f64, Gradients), SenError> {
    if batch.is_empty() {
        return Err(SenError::Empty("batch"));
    }
    let mut grad = SenParams::zeros(&p.shape());
    let n = batch.len() as f64;
    let mut loss = 0.0;
    let last = p.layers.len() - 1;
    let mut acts: Vec<Vec<f64>> = Vec::with_capacity(p.layers.len() + 1);
    for s in batch {
        if s.x.len() != p.input_len() {
            return Err(SenError::Shape {
                expected: p.input_len(),
                got: s.x.len(),
            });
        }
        acts.clear();
        acts.push(s.x.clone());
        for (i, l) in p.layers.iter().enumerate() {
            let mut z = Vec::with_capacity(l.n_out);
            l.apply(&acts[i], &mut z);
            if i < last {
                for v in &mut z {
                    *v = v.max(0.0);
                }
            }
            acts.push(z);
        }
        let pred = sigmoid(acts[last + 1][0]);
        loss += bce_loss(pred, s.target);

        let mut delta = vec![(pred - s.target) / n];
        for i in (0..p.layers.len()).rev() {
            let l = &p.layers[i];
            let g = &mut grad.layers[i];
            let input = &acts[i];
            for o in 0..l.n_out {
                g.b[o] += delta[o];
                let row = &mut g.w[o * l.n_in..(o + 1) * l.n_in];
                for (gw, x) in row.iter_mut().zip(input) {
                    *gw += delta[o] * x;
                }
            }
            if i == 0 {
                break;
            }
            let mut prev = vec![0.0; l.n_in];
            for o in 0..l.n_out {
                let row = &l.w[o * l.n_in..(o + 1) * l.n_in];
                for (pv, w) in prev.iter_mut().zip(row) {
                    *pv += delta[o] * w;
                }
            }
            // ReLU derivative, taken as 0 at 0.
            for (pv, a) in prev.iter_mut().zip(&acts[i]) {
                if *a <= 0.0 {
                    *pv = 0.0;
                }
            }
            delta = prev;
        }
    }
    Ok((loss / n, grad))
}

/// Mean loss over `samples`.
pub fn mean_loss(p: &SenParams, samples: &[Sample]) -> Result<f64, SenError> {
    if samples.is_empty() {
        return Err(SenError::Empty("samples"));
    }
    let mut total = 0.0;
    for s in samples {
        total += bce_loss(p.predict(&s.x)?, s.target);
    }
    Ok(total / samples.len() as f64)
}

/// Exhaustive scan of the strategy space for the response with the highest
/// predicted win probability against `opp`. Ties go to the first in
/// enumeration order.
pub fn best_response(p: &SenParams, opp: &Strategy) -> (Strategy, f64) {
    let b = encode(opp);
    let mut best: Option<(Strategy, f64)> = None;
    for s in enumerate_space() {
        let v = forward(p, &encode(&s), &b).expect("network input matches strategy encoding");
        if best.is_none_or(|(_, bv)| v > bv) {
            best = Some((s, v));
        }
    }
    best.expect("strategy space is not empty")
}

#[cfg(test)]
mod tests;
