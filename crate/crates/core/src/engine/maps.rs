//! Built-in maps and the one-char-per-cell text map format.
//!
//! | char | meaning      | char | meaning     |
//! |------|--------------|------|-------------|
//! | `.`  | empty        | `M`  | mineral     |
//! | `b`  | P1 base      | `B`  | P2 base     |
//! | `w`  | P1 worker    | `W`  | P2 worker   |
//! | `k`  | P1 barracks  | `K`  | P2 barracks |
//! | `l`  | P1 light     | `L`  | P2 light    |
//! | `h`  | P1 heavy     | `H`  | P2 heavy    |
//! | `r`  | P1 ranged    | `R`  | P2 ranged   |
//!
//! Unit ids are assigned in row-major reading order.

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{EngineError, GameState, Owner, Position, StatTable, Unit, UnitId, UnitType};

const BASES_WORKERS_8X8: &str = "\
M.......
Mwb.....
........
........
........
........
.....BWM
.......M
";

const BASES_WORKERS_16X16: &str = "\
MM..............
Mwb.............
................
................
................
................
................
................
................
................
................
................
................
................
.............BWM
..............MM
";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MapId {
    #[serde(rename = "basesWorkers8x8")]
    BasesWorkers8x8,
    #[serde(rename = "basesWorkers16x16")]
    BasesWorkers16x16,
}

impl MapId {
    pub fn name(self) -> &'static str {
        match self {
            MapId::BasesWorkers8x8 => "basesWorkers8x8",
            MapId::BasesWorkers16x16 => "basesWorkers16x16",
        }
    }

    pub fn text(self) -> &'static str {
        match self {
            MapId::BasesWorkers8x8 => BASES_WORKERS_8X8,
            MapId::BasesWorkers16x16 => BASES_WORKERS_16X16,
        }
    }

    pub fn default_step_limit(self) -> u32 {
        match self {
            MapId::BasesWorkers8x8 => 2000,
            MapId::BasesWorkers16x16 => 4000,
        }
    }

    pub fn mineral_amount(self) -> u32 {
        match self {
            MapId::BasesWorkers8x8 => 25,
            MapId::BasesWorkers16x16 => 40,
        }
    }
}

impl fmt::Display for MapId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MapId {
    type Err = EngineError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "basesWorkers8x8" => Ok(MapId::BasesWorkers8x8),
            "basesWorkers16x16" => Ok(MapId::BasesWorkers16x16),
            other => Err(EngineError::UnknownMap(other.to_string())),
        }
    }
}

/// Knobs shared by every map load.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EngineConfig {
    pub stats: StatTable,
    pub starting_resources: u32,
    /// Overrides the map's default step limit.
    pub step_limit: Option<u32>,
    /// Overrides the map's default minerals per patch.
    pub mineral_amount: Option<u32>,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            stats: StatTable::default(),
            starting_resources: 5,
            step_limit: None,
            mineral_amount: None,
        }
    }
}

/// Loads a built-in map with default settings.
pub fn load_map(map: MapId, seed: u64) -> GameState {
    load_map_with(map, seed, &EngineConfig::default())
}

pub fn load_map_with(map: MapId, seed: u64, cfg: &EngineConfig) -> GameState {
    parse_text_map(
        map.text(),
        cfg,
        cfg.step_limit.unwrap_or(map.default_step_limit()),
        cfg.mineral_amount.unwrap_or(map.mineral_amount()),
        seed,
    )
    .expect("built-in maps are well formed")
}

/// Parses a text map. Rows may be ragged only if they are all equal length.
pub fn parse_text_map(
    text: &str,
    cfg: &EngineConfig,
    step_limit: u32,
    mineral_amount: u32,
    seed: u64,
) -> Result<GameState, EngineError> {
    let rows: Vec<&str> = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .collect();
    if rows.is_empty() {
        return Err(EngineError::MapParse("empty map".into()));
    }
    let width = rows[0].chars().count();
    let mut units = Vec::new();
    let mut next_id = 0u32;
    for (y, row) in rows.iter().enumerate() {
        if row.chars().count() != width {
            return Err(EngineError::MapParse(format!(
                "row {y} has {} cells, expected {width}",
                row.chars().count()
            )));
        }
        for (x, c) in row.chars().enumerate() {
            if c == '.' {
                continue;
            }
            let (owner, kind) = match c {
                'M' | 'm' => (Owner::Neutral, UnitType::Mineral),
                'b' => (Owner::P1, UnitType::Base),
                'B' => (Owner::P2, UnitType::Base),
                'w' => (Owner::P1, UnitType::Worker),
                'W' => (Owner::P2, UnitType::Worker),
                'k' => (Owner::P1, UnitType::Barracks),
                'K' => (Owner::P2, UnitType::Barracks),
                'l' => (Owner::P1, UnitType::Light),
                'L' => (Owner::P2, UnitType::Light),
                'h' => (Owner::P1, UnitType::Heavy),
                'H' => (Owner::P2, UnitType::Heavy),
                'r' => (Owner::P1, UnitType::Ranged),
                'R' => (Owner::P2, UnitType::Ranged),
                other => {
                    return Err(EngineError::MapParse(format!(
                        "unknown cell `{other}` at ({x},{y})"
                    )))
                }
            };
            let hp = if kind == UnitType::Mineral {
                1
            } else {
                cfg.stats.get(kind).hp_max
            };
            units.push(Unit {
                id: UnitId(next_id),
                owner,
                kind,
                pos: Position::new(x as i32, y as i32),
                hp,
                carrying: 0,
                minerals: if kind == UnitType::Mineral {
                    mineral_amount
                } else {
                    0
                },
                busy: None,
            });
            next_id += 1;
        }
    }
    Ok(GameState {
        tick: 0,
        width: width as i32,
        height: rows.len() as i32,
        units,
        resources: [cfg.starting_resources; 2],
        sunk: [0; 2],
        step_limit,
        next_id,
        stats: cfg.stats,
        rng: ChaCha8Rng::seed_from_u64(seed),
    })
}

/// Renders the unit layout back into the text format (busy state and hp are dropped).
pub fn render_text_map(state: &GameState) -> String {
    let mut grid = vec![vec!['.'; state.width as usize]; state.height as usize];
    for u in &state.units {
        let c = match (u.kind, u.owner) {
            (UnitType::Mineral, _) => 'M',
            (UnitType::Base, Owner::P1) => 'b',
            (UnitType::Base, _) => 'B',
            (UnitType::Worker, Owner::P1) => 'w',
            (UnitType::Worker, _) => 'W',
            (UnitType::Barracks, Owner::P1) => 'k',
            (UnitType::Barracks, _) => 'K',
            (UnitType::Light, Owner::P1) => 'l',
            (UnitType::Light, _) => 'L',
            (UnitType::Heavy, Owner::P1) => 'h',
            (UnitType::Heavy, _) => 'H',
            (UnitType::Ranged, Owner::P1) => 'r',
            (UnitType::Ranged, _) => 'R',
        };
        grid[u.pos.y as usize][u.pos.x as usize] = c;
    }
    let mut out = String::new();
    for row in grid {
        out.extend(row);
        out.push('\n');
    }
    out
}
