//! Win-rate datasets and their JSON Lines form.

use std::io::{BufRead, Write};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Sample, SenError};
use crate::strategy::{encode, Strategy};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    #[default]
    Train,
    Test,
}

/// Score `r` of strategy `a` against `b`: wins plus half the draws, over
/// `episodes` matches.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetRecord {
    pub a: Strategy,
    pub b: Strategy,
    pub a_vector: Vec<f64>,
    pub b_vector: Vec<f64>,
    pub r: f64,
    #[serde(default)]
    pub episodes: u32,
    #[serde(default)]
    pub split: Split,
}

impl DatasetRecord {
    pub fn new(a: Strategy, b: Strategy, r: f64, episodes: u32) -> Self {
        DatasetRecord {
            a,
            b,
            a_vector: encode(&a).to_vec(),
            b_vector: encode(&b).to_vec(),
            r,
            episodes,
            split: Split::Train,
        }
    }

    pub fn sample(&self) -> Sample {
        Sample::new(&self.a, &self.b, self.r)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ResultDataset {
    pub records: Vec<DatasetRecord>,
}

impl ResultDataset {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn samples(&self, split: Split) -> Vec<Sample> {
        self.records
            .iter()
            .filter(|r| r.split == split)
            .map(DatasetRecord::sample)
            .collect()
    }

    pub fn with_split(&self, split: Split) -> ResultDataset {
        ResultDataset {
            records: self.records.iter().filter(|r| r.split == split).cloned().collect(),
        }
    }
}

/// Tags a seeded `test_fraction` of the records as test, the rest as train.
pub fn split_dataset(data: &ResultDataset, test_fraction: f64, seed: u64) -> ResultDataset {
    let n = data.len();
    let n_test = ((n as f64) * test_fraction.clamp(0.0, 1.0)).round() as usize;
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut out = data.clone();
    for r in &mut out.records {
        r.split = Split::Train;
    }
    for &i in &idx[..n_test] {
        out.records[i].split = Split::Test;
    }
    out
}

pub fn write_dataset<W: Write>(data: &ResultDataset, mut w: W) -> Result<(), SenError> {
    for r in &data.records {
        writeln!(w, "{}", serde_json::to_string(r)?)?;
    }
    Ok(())
}

/// Reads JSON Lines records. A truncated final line, as left by an
/// interrupted writer, is ignored; any other bad line is an error.
pub fn read_dataset<R: BufRead>(r: R) -> Result<ResultDataset, SenError> {
    let lines: Vec<String> = r.lines().collect::<Result<_, _>>()?;
    let mut data = ResultDataset::default();
    let last = lines.len().saturating_sub(1);
    for (n, line) in lines.iter().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let rec: DatasetRecord = match serde_json::from_str(line) {
            Ok(rec) => rec,
            Err(_) if n == last && !line.trim_end().ends_with('}') => break,
            Err(e) => {
                return Err(SenError::Record {
                    line: n + 1,
                    message: e.to_string(),
                })
            }
        };
        let bad = |message: &str| SenError::Record {
            line: n + 1,
            message: message.into(),
        };
        if !(0.0..=1.0).contains(&rec.r) {
            return Err(bad("r outside [0, 1]"));
        }
        if !rec.a.is_valid() || !rec.b.is_valid() {
            return Err(bad("invalid strategy"));
        }
        if rec.a_vector != encode(&rec.a).to_vec() || rec.b_vector != encode(&rec.b).to_vec() {
            return Err(bad("vector does not match strategy"));
        }
        data.records.push(rec);
    }
    Ok(data)
}
