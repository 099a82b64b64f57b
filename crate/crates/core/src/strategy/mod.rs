//! The explicit strategy space, its numeric encoding, and strategy libraries.
//!
//! A [`Strategy`] fixes one value on each of six dimensions. Its text record
//! form is a single line of `key=value` pairs:
//!
//! ```text
//! economy=high barracks=early composition=light aggression=true attack_target=closest defense=none
//! ```

mod library;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use library::{
    generate_library, hamming, read_library, space_description, split_seen_unseen, write_library,
    DiverseSource, LibraryEntry, Provenance, StrategyLibrary, StrategySource, TextStrategySource,
    UniformSource,
};

macro_rules! dimension {
    ($(#[$m:meta])* $name:ident { $($variant:ident => $text:literal),+ $(,)? }) => {
        $(#[$m])*
        #[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
        #[serde(rename_all = "lowercase")]
        pub enum $name {
            $($variant),+
        }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn name(self) -> &'static str {
                match self {
                    $($name::$variant => $text),+
                }
            }

            pub fn ordinal(self) -> usize {
                Self::ALL.iter().position(|v| *v == self).expect("listed")
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.name())
            }
        }

        impl FromStr for $name {
            type Err = StrategyError;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                let t = s.trim().to_ascii_lowercase();
                Self::ALL
                    .iter()
                    .copied()
                    .find(|v| v.name() == t)
                    .ok_or_else(|| StrategyError::BadValue {
                        dimension: stringify!($name),
                        value: s.to_string(),
                    })
            }
        }
    };
}

dimension!(Economy { Low => "low", Med => "med", High => "high" });
dimension!(BarracksTiming { None => "none", Early => "early", Late => "late" });
dimension!(Composition {
    Worker => "worker",
    Light => "light",
    Heavy => "heavy",
    Ranged => "ranged",
    Mixed => "mixed",
});
dimension!(AttackTarget { Closest => "closest", Workers => "workers", Buildings => "buildings" });
dimension!(Defense { None => "none", Perimeter => "perimeter", Full => "full" });

#[derive(Debug, Error)]
pub enum StrategyError {
    #[error("bad value `{value}` for {dimension}")]
    BadValue { dimension: &'static str, value: String },
    #[error("missing dimension `{0}`")]
    Missing(&'static str),
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("composition {0} needs barracks")]
    NeedsBarracks(Composition),
    #[error("vector has length {0}, expected {VECTOR_LEN}")]
    VectorLength(usize),
    #[error("malformed vector: {0}")]
    MalformedVector(String),
    #[error("library of {wanted} requested but the space has {available}")]
    LibraryTooLarge { wanted: usize, available: usize },
    #[error("cannot keep {n_seen} of {len} strategies")]
    SplitTooLarge { n_seen: usize, len: usize },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("library record {line}: {message}")]
    Record { line: usize, message: String },
}

/// A point in the strategy space.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Strategy {
    pub economy: Economy,
    pub barracks: BarracksTiming,
    pub composition: Composition,
    pub aggression: bool,
    pub attack_target: AttackTarget,
    pub defense: Defense,
}

/// Number of slots in an encoded strategy.
pub const VECTOR_LEN: usize = 14;

/// Size of the valid strategy space.
pub const SPACE_SIZE: usize = 594;

pub type StrategyVector = [f64; VECTOR_LEN];

/// Names of the six dimensions, in field order.
pub const DIMENSIONS: [&str; 6] = [
    "economy",
    "barracks",
    "composition",
    "aggression",
    "attack_target",
    "defense",
];

impl Default for Strategy {
    /// The neutral strategy: first value on every dimension.
    fn default() -> Self {
        Strategy {
            economy: Economy::Low,
            barracks: BarracksTiming::None,
            composition: Composition::Worker,
            aggression: false,
            attack_target: AttackTarget::Closest,
            defense: Defense::None,
        }
    }
}

impl Strategy {
    pub fn is_valid(&self) -> bool {
        self.composition == Composition::Worker || self.barracks != BarracksTiming::None
    }

    pub fn validate(self) -> Result<Strategy, StrategyError> {
        if self.is_valid() {
            Ok(self)
        } else {
            Err(StrategyError::NeedsBarracks(self.composition))
        }
    }

    /// Value of dimension `dim` (an index into [`DIMENSIONS`]) as text.
    pub fn value_name(&self, dim: usize) -> &'static str {
        match dim {
            0 => self.economy.name(),
            1 => self.barracks.name(),
            2 => self.composition.name(),
            3 => {
                if self.aggression {
                    "true"
                } else {
                    "false"
                }
            }
            4 => self.attack_target.name(),
            5 => self.defense.name(),
            _ => panic!("dimension index {dim} out of range"),
        }
    }

    pub fn to_record(&self) -> String {
        (0..DIMENSIONS.len())
            .map(|d| format!("{}={}", DIMENSIONS[d], self.value_name(d)))
            .collect::<Vec<_>>()
            .join(" ")
    }

    /// Parses a record line. Pairs may be separated by spaces or commas.
    pub fn from_record(line: &str) -> Result<Strategy, StrategyError> {
        let mut fields: [Option<&str>; 6] = [None; 6];
        for pair in line.split(|c: char| c.is_whitespace() || c == ',') {
            let pair = pair.trim();
            if pair.is_empty() {
                continue;
            }
            let (k, v) = pair
                .split_once(['=', ':'])
                .ok_or_else(|| StrategyError::UnknownKey(pair.to_string()))?;
            let key = k.trim().to_ascii_lowercase().replace('-', "_");
            let i = DIMENSIONS
                .iter()
                .position(|d| *d == key)
                .ok_or(StrategyError::UnknownKey(key))?;
            fields[i] = Some(v.trim());
        }
        let get = |i: usize| fields[i].ok_or(StrategyError::Missing(DIMENSIONS[i]));
        let economy = get(0)?.parse()?;
        let barracks = get(1)?.parse()?;
        let composition = get(2)?.parse()?;
        let aggression = match get(3)?.to_ascii_lowercase().as_str() {
            "true" => true,
            "false" => false,
            other => {
                return Err(StrategyError::BadValue {
                    dimension: "Aggression",
                    value: other.to_string(),
                })
            }
        };
        Strategy {
            economy,
            barracks,
            composition,
            aggression,
            attack_target: get(4)?.parse()?,
            defense: get(5)?.parse()?,
        }
        .validate()
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_record())
    }
}

impl FromStr for Strategy {
    type Err = StrategyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Strategy::from_record(s)
    }
}

fn ordinal_value(i: usize) -> f64 {
    i as f64 * 0.5
}

/// Ordinal slots for economy and defense, one-hot blocks for the categorical
/// dimensions, and 0/1 for aggression.
pub fn encode(s: &Strategy) -> StrategyVector {
    let mut v = [0.0; VECTOR_LEN];
    v[0] = ordinal_value(s.economy.ordinal());
    v[1 + s.barracks.ordinal()] = 1.0;
    v[4 + s.composition.ordinal()] = 1.0;
    v[9] = if s.aggression { 1.0 } else { 0.0 };
    v[10 + s.attack_target.ordinal()] = 1.0;
    v[13] = ordinal_value(s.defense.ordinal());
    v
}

fn decode_ordinal(x: f64, slot: &str) -> Result<usize, StrategyError> {
    [0.0, 0.5, 1.0]
        .iter()
        .position(|o| *o == x)
        .ok_or_else(|| StrategyError::MalformedVector(format!("{slot} slot is {x}")))
}

fn decode_one_hot(block: &[f64], slot: &str) -> Result<usize, StrategyError> {
    let mut hot = None;
    for (i, x) in block.iter().enumerate() {
        if *x == 1.0 {
            if hot.is_some() {
                return Err(StrategyError::MalformedVector(format!("{slot} block has two hot slots")));
            }
            hot = Some(i);
        } else if *x != 0.0 {
            return Err(StrategyError::MalformedVector(format!("{slot} block holds {x}")));
        }
    }
    hot.ok_or_else(|| StrategyError::MalformedVector(format!("{slot} block is all zero")))
}

pub fn decode(v: &[f64]) -> Result<Strategy, StrategyError> {
    if v.len() != VECTOR_LEN {
        return Err(StrategyError::VectorLength(v.len()));
    }
    let aggression = match v[9] {
        x if x == 0.0 => false,
        x if x == 1.0 => true,
        x => return Err(StrategyError::MalformedVector(format!("aggression slot is {x}"))),
    };
    Strategy {
        economy: Economy::ALL[decode_ordinal(v[0], "economy")?],
        barracks: BarracksTiming::ALL[decode_one_hot(&v[1..4], "barracks")?],
        composition: Composition::ALL[decode_one_hot(&v[4..9], "composition")?],
        aggression,
        attack_target: AttackTarget::ALL[decode_one_hot(&v[10..13], "attack_target")?],
        defense: Defense::ALL[decode_ordinal(v[13], "defense")?],
    }
    .validate()
}

/// Every valid strategy exactly once, lexicographic in field order.
pub fn enumerate_space() -> Vec<Strategy> {
    let mut out = Vec::with_capacity(SPACE_SIZE);
    for &economy in Economy::ALL {
        for &barracks in BarracksTiming::ALL {
            for &composition in Composition::ALL {
                for aggression in [false, true] {
                    for &attack_target in AttackTarget::ALL {
                        for &defense in Defense::ALL {
                            let s = Strategy {
                                economy,
                                barracks,
                                composition,
                                aggression,
                                attack_target,
                                defense,
                            };
                            if s.is_valid() {
                                out.push(s);
                            }
                        }
                    }
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests;
