//! Strategy libraries: generation with duplicate filtering, seen/unseen
//! splits and JSON Lines persistence.

use std::io::{BufRead, Write};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{encode, enumerate_space, Strategy, StrategyError, DIMENSIONS, SPACE_SIZE};
use crate::remote::TextGenerator;

/// Proposals rejected in a row before falling back to an unused strategy.
const MAX_RETRIES: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Sampled,
    Generated,
}

/// One library record: the strategy's named fields, its encoding and where
/// it came from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LibraryEntry {
    #[serde(flatten)]
    pub strategy: Strategy,
    pub vector: Vec<f64>,
    pub provenance: Provenance,
}

impl LibraryEntry {
    pub fn new(strategy: Strategy, provenance: Provenance) -> Self {
        LibraryEntry {
            strategy,
            vector: encode(&strategy).to_vec(),
            provenance,
        }
    }
}

/// Ordered list of unique strategies.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StrategyLibrary {
    pub entries: Vec<LibraryEntry>,
}

impl StrategyLibrary {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, s: &Strategy) -> bool {
        self.entries.iter().any(|e| e.strategy == *s)
    }

    pub fn strategies(&self) -> Vec<Strategy> {
        self.entries.iter().map(|e| e.strategy).collect()
    }

    /// Adds `s` unless already present; returns whether it was added.
    pub fn push(&mut self, s: Strategy, provenance: Provenance) -> bool {
        if self.contains(&s) {
            return false;
        }
        self.entries.push(LibraryEntry::new(s, provenance));
        true
    }
}

/// Supplies candidate strategies for a library.
pub trait StrategySource {
    /// A candidate given the strategies accepted so far; `None` when the
    /// source has nothing usable this round.
    fn propose(&mut self, prior: &[Strategy], rng: &mut ChaCha8Rng) -> Option<Strategy>;

    fn provenance(&self) -> Provenance;
}

/// Uniform draws over the whole space.
#[derive(Clone, Debug)]
pub struct UniformSource {
    space: Vec<Strategy>,
}

impl Default for UniformSource {
    fn default() -> Self {
        UniformSource {
            space: enumerate_space(),
        }
    }
}

impl StrategySource for UniformSource {
    fn propose(&mut self, _prior: &[Strategy], rng: &mut ChaCha8Rng) -> Option<Strategy> {
        self.space.choose(rng).copied()
    }

    fn provenance(&self) -> Provenance {
        Provenance::Sampled
    }
}

/// Rule-based stand-in for a generator asked for strategies unlike the
/// ones so far: picks an unused strategy farthest, by the number of
/// differing dimensions, from its nearest prior strategy, preferring values
/// used least so far. Remaining ties are broken at random.
#[derive(Clone, Debug)]
pub struct DiverseSource {
    space: Vec<Strategy>,
}

impl Default for DiverseSource {
    fn default() -> Self {
        DiverseSource {
            space: enumerate_space(),
        }
    }
}

/// Number of dimensions on which `a` and `b` differ.
pub fn hamming(a: &Strategy, b: &Strategy) -> usize {
    (0..DIMENSIONS.len())
        .filter(|&d| a.value_name(d) != b.value_name(d))
        .count()
}

impl StrategySource for DiverseSource {
    fn propose(&mut self, prior: &[Strategy], rng: &mut ChaCha8Rng) -> Option<Strategy> {
        let usage = |s: &Strategy| -> usize {
            prior
                .iter()
                .map(|p| DIMENSIONS.len() - hamming(s, p))
                .sum()
        };
        let mut best: Vec<Strategy> = Vec::new();
        let mut best_key = (0usize, usize::MAX);
        for s in self.space.iter().filter(|s| !prior.contains(s)) {
            let spread = prior.iter().map(|p| hamming(s, p)).min().unwrap_or(DIMENSIONS.len());
            let key = (spread, usage(s));
            let better = key.0 > best_key.0 || (key.0 == best_key.0 && key.1 < best_key.1);
            if best.is_empty() || better {
                best.clear();
                best_key = key;
                best.push(*s);
            } else if key == best_key {
                best.push(*s);
            }
        }
        best.choose(rng).copied()
    }

    fn provenance(&self) -> Provenance {
        Provenance::Generated
    }
}

/// Asks a text generator for a new strategy given the environment, the
/// space and the strategies so far, and parses the first line of the reply
/// that is a valid strategy record.
pub struct TextStrategySource<G> {
    pub generator: G,
    pub env_info: String,
    /// Log of failures, one message per rejected call.
    pub warnings: Vec<String>,
}

impl<G: TextGenerator> TextStrategySource<G> {
    pub fn new(generator: G, env_info: impl Into<String>) -> Self {
        TextStrategySource {
            generator,
            env_info: env_info.into(),
            warnings: Vec::new(),
        }
    }

    pub fn prompt(&self, prior: &[Strategy]) -> (String, String) {
        let system = format!(
            "You design strategies for a two-player real-time strategy game.\n{}\n",
            self.env_info.trim_end()
        );
        let mut user = String::from("Strategy space:\n");
        user.push_str(&space_description());
        user.push_str("\nStrategies already in the library:\n");
        if prior.is_empty() {
            user.push_str("(none)\n");
        }
        for s in prior {
            user.push_str(&s.to_record());
            user.push('\n');
        }
        user.push_str(
            "\nPropose one new strategy that differs from all of the above. \
             Reply with a single line of key=value pairs covering every dimension.\n",
        );
        (system, user)
    }
}

impl<G: TextGenerator> StrategySource for TextStrategySource<G> {
    fn propose(&mut self, prior: &[Strategy], _rng: &mut ChaCha8Rng) -> Option<Strategy> {
        let (system, user) = self.prompt(prior);
        match self.generator.complete(&system, &user) {
            Ok(reply) => {
                let parsed = reply.lines().find_map(|l| Strategy::from_record(l).ok());
                if parsed.is_none() {
                    self.warnings.push("reply holds no valid strategy".into());
                }
                parsed
            }
            Err(e) => {
                self.warnings.push(e.to_string());
                None
            }
        }
    }

    fn provenance(&self) -> Provenance {
        Provenance::Generated
    }
}

/// One line per dimension listing its values.
pub fn space_description() -> String {
    use super::{AttackTarget, BarracksTiming, Composition, Defense, Economy};
    fn join<T: std::fmt::Display>(vals: &[T]) -> String {
        vals.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(", ")
    }
    format!(
        "economy: {}\nbarracks: {}\ncomposition: {}\naggression: true, false\nattack_target: {}\ndefense: {}\n\
         constraint: composition other than worker needs barracks other than none\n",
        join(Economy::ALL),
        join(BarracksTiming::ALL),
        join(Composition::ALL),
        join(AttackTarget::ALL),
        join(Defense::ALL),
    )
}

/// `k` unique strategies from `source`. Duplicates are redrawn; after a run
/// of rejected proposals an unused strategy is drawn uniformly instead.
pub fn generate_library(
    k: usize,
    source: &mut dyn StrategySource,
    seed: u64,
) -> Result<StrategyLibrary, StrategyError> {
    if k > SPACE_SIZE {
        return Err(StrategyError::LibraryTooLarge {
            wanted: k,
            available: SPACE_SIZE,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let space = enumerate_space();
    let mut lib = StrategyLibrary::default();
    let mut accepted = Vec::with_capacity(k);
    while lib.len() < k {
        let mut added = false;
        for _ in 0..MAX_RETRIES {
            if let Some(s) = source.propose(&accepted, &mut rng) {
                if s.is_valid() && lib.push(s, source.provenance()) {
                    accepted.push(s);
                    added = true;
                    break;
                }
            }
        }
        if !added {
            let unused: Vec<Strategy> = space.iter().copied().filter(|s| !lib.contains(s)).collect();
            let s = unused[rng.gen_range(0..unused.len())];
            lib.push(s, Provenance::Sampled);
            accepted.push(s);
        }
    }
    Ok(lib)
}

/// Seeded partition into `n_seen` seen and the remaining unseen strategies,
/// each keeping library order.
pub fn split_seen_unseen(
    lib: &StrategyLibrary,
    n_seen: usize,
    seed: u64,
) -> Result<(StrategyLibrary, StrategyLibrary), StrategyError> {
    if n_seen > lib.len() {
        return Err(StrategyError::SplitTooLarge {
            n_seen,
            len: lib.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut idx: Vec<usize> = (0..lib.len()).collect();
    idx.shuffle(&mut rng);
    let mut seen_mask = vec![false; lib.len()];
    for &i in &idx[..n_seen] {
        seen_mask[i] = true;
    }
    let mut seen = StrategyLibrary::default();
    let mut unseen = StrategyLibrary::default();
    for (e, is_seen) in lib.entries.iter().zip(seen_mask) {
        if is_seen {
            seen.entries.push(e.clone());
        } else {
            unseen.entries.push(e.clone());
        }
    }
    Ok((seen, unseen))
}

/// One JSON object per line.
pub fn write_library<W: Write>(lib: &StrategyLibrary, mut w: W) -> Result<(), StrategyError> {
    for e in &lib.entries {
        let line = serde_json::to_string(e).expect("library entries serialize");
        writeln!(w, "{line}")?;
    }
    Ok(())
}

/// Reads records written by [`write_library`]. The vector field is checked
/// against the named fields.
pub fn read_library<R: BufRead>(r: R) -> Result<StrategyLibrary, StrategyError> {
    let mut lib = StrategyLibrary::default();
    for (n, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record = |message: String| StrategyError::Record {
            line: n + 1,
            message,
        };
        let e: LibraryEntry = serde_json::from_str(&line).map_err(|e| record(e.to_string()))?;
        e.strategy.validate().map_err(|e| record(e.to_string()))?;
        if e.vector != encode(&e.strategy).to_vec() {
            return Err(record("vector does not match the named fields".into()));
        }
        if !lib.push(e.strategy, e.provenance) {
            return Err(record(format!("duplicate strategy {}", e.strategy)));
        }
    }
    Ok(lib)
}
