use serde::{Deserialize, Serialize};

use super::UnitType;

/// Per-type constants. Times are in ticks.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(default)]
pub struct UnitStats {
    pub hp_max: i32,
    pub cost: u32,
    pub attack_damage: i32,
    /// Euclidean reach: a target at offset (dx, dy) is in range when dx² + dy² ≤ range².
    pub attack_range: i32,
    pub move_time: u32,
    pub harvest_time: u32,
    pub return_time: u32,
    pub attack_time: u32,
    /// Time to produce a unit of this type.
    pub produce_time: u32,
}

impl Default for UnitStats {
    fn default() -> Self {
        UnitStats {
            hp_max: 1,
            cost: 0,
            attack_damage: 0,
            attack_range: 0,
            move_time: 0,
            harvest_time: 0,
            return_time: 0,
            attack_time: 0,
            produce_time: 0,
        }
    }
}

/// MicroRTS-like stat table shared by both players.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(default)]
pub struct StatTable {
    pub base: UnitStats,
    pub barracks: UnitStats,
    pub worker: UnitStats,
    pub light: UnitStats,
    pub heavy: UnitStats,
    pub ranged: UnitStats,
    pub mineral: UnitStats,
}

impl Default for StatTable {
    fn default() -> Self {
        StatTable {
            base: UnitStats {
                hp_max: 10,
                cost: 10,
                produce_time: 250,
                ..UnitStats::default()
            },
            barracks: UnitStats {
                hp_max: 4,
                cost: 5,
                produce_time: 200,
                ..UnitStats::default()
            },
            worker: UnitStats {
                hp_max: 1,
                cost: 1,
                attack_damage: 1,
                attack_range: 1,
                move_time: 10,
                harvest_time: 20,
                return_time: 10,
                attack_time: 5,
                produce_time: 50,
            },
            light: UnitStats {
                hp_max: 4,
                cost: 2,
                attack_damage: 2,
                attack_range: 1,
                move_time: 8,
                attack_time: 5,
                produce_time: 80,
                ..UnitStats::default()
            },
            heavy: UnitStats {
                hp_max: 8,
                cost: 3,
                attack_damage: 4,
                attack_range: 1,
                move_time: 10,
                attack_time: 5,
                produce_time: 120,
                ..UnitStats::default()
            },
            ranged: UnitStats {
                hp_max: 1,
                cost: 2,
                attack_damage: 1,
                attack_range: 3,
                move_time: 10,
                attack_time: 5,
                produce_time: 100,
                ..UnitStats::default()
            },
            mineral: UnitStats::default(),
        }
    }
}

impl StatTable {
    pub fn get(&self, kind: UnitType) -> &UnitStats {
        match kind {
            UnitType::Base => &self.base,
            UnitType::Barracks => &self.barracks,
            UnitType::Worker => &self.worker,
            UnitType::Light => &self.light,
            UnitType::Heavy => &self.heavy,
            UnitType::Ranged => &self.ranged,
            UnitType::Mineral => &self.mineral,
        }
    }

    /// Checks the table's basic sanity rules.
    pub fn validate(&self) -> Result<(), String> {
        for kind in UnitType::ALL {
            let s = self.get(kind);
            if kind != UnitType::Mineral && s.hp_max <= 0 {
                return Err(format!("{kind}: hp_max must be positive"));
            }
            if kind.can_attack() && (s.attack_range < 1 || s.attack_time == 0) {
                return Err(format!("{kind}: combat units need range ≥ 1 and attack_time > 0"));
            }
            if kind.is_mobile() && s.move_time == 0 {
                return Err(format!("{kind}: move_time must be positive"));
            }
            if kind.producer().is_some() && s.produce_time == 0 {
                return Err(format!("{kind}: produce_time must be positive"));
            }
        }
        if self.worker.harvest_time == 0 || self.worker.return_time == 0 {
            return Err("worker harvest/return times must be positive".into());
        }
        Ok(())
    }
}
