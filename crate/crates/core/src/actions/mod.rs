//! Abstract actions and plans, and the executor that grounds them into
//! per-tick atomic actions.
//!
//! A [`Plan`] is an ordered list of [`AbstractAction`]s; order is priority.
//! Plans have a line-oriented text form, one entry per line:
//!
//! ```text
//! BUILD_BUILDING building_type=Barracks site=4,2
//! HARVEST_MINERAL worker_count=2
//! PRODUCE_UNIT unit_type=Light direction=S
//! ATTACK_ENEMY attacker_type=Light target_type=Any
//! DEPLOY_UNIT unit_type=Light target=3,3
//! ```
//!
//! Blank lines and lines starting with `#` are ignored.

mod executor;
mod path;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::engine::{Direction, GameState, Player, Position, UnitType};

pub use executor::{tick_controller, EntryStatus, ExecutorConfig, ExecutorState};
pub use path::{pathfind, NavGrid};

/// Which enemy units an attack entry goes after.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TargetType {
    Any,
    Unit(UnitType),
}

impl TargetType {
    pub fn matches(self, kind: UnitType) -> bool {
        match self {
            TargetType::Any => kind != UnitType::Mineral,
            TargetType::Unit(t) => t == kind,
        }
    }
}

impl fmt::Display for TargetType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TargetType::Any => f.write_str("Any"),
            TargetType::Unit(t) => write!(f, "{t}"),
        }
    }
}

impl FromStr for TargetType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.trim().eq_ignore_ascii_case("any") {
            Ok(TargetType::Any)
        } else {
            s.parse().map(TargetType::Unit)
        }
    }
}

/// Parameterized macro over atomic actions.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AbstractAction {
    DeployUnit {
        unit_type: UnitType,
        target: Position,
    },
    HarvestMineral {
        worker_count: u32,
    },
    BuildBuilding {
        building_type: UnitType,
        site: Position,
    },
    ProduceUnit {
        unit_type: UnitType,
        direction: Direction,
    },
    AttackEnemy {
        attacker_type: UnitType,
        target_type: TargetType,
    },
}

/// Abstract action type without parameters.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum AbstractKind {
    DeployUnit,
    HarvestMineral,
    BuildBuilding,
    ProduceUnit,
    AttackEnemy,
}

impl AbstractKind {
    pub const ALL: [AbstractKind; 5] = [
        AbstractKind::DeployUnit,
        AbstractKind::HarvestMineral,
        AbstractKind::BuildBuilding,
        AbstractKind::ProduceUnit,
        AbstractKind::AttackEnemy,
    ];

    pub fn record_name(self) -> &'static str {
        match self {
            AbstractKind::DeployUnit => "DEPLOY_UNIT",
            AbstractKind::HarvestMineral => "HARVEST_MINERAL",
            AbstractKind::BuildBuilding => "BUILD_BUILDING",
            AbstractKind::ProduceUnit => "PRODUCE_UNIT",
            AbstractKind::AttackEnemy => "ATTACK_ENEMY",
        }
    }

    /// Display name used in prompts and tips.
    pub fn label(self) -> &'static str {
        match self {
            AbstractKind::DeployUnit => "Deploy Unit",
            AbstractKind::HarvestMineral => "Harvest Mineral",
            AbstractKind::BuildBuilding => "Build Building",
            AbstractKind::ProduceUnit => "Produce Unit",
            AbstractKind::AttackEnemy => "Attack Enemy",
        }
    }
}

impl FromStr for AbstractKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm: String = s
            .trim()
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .collect::<String>()
            .to_ascii_uppercase();
        AbstractKind::ALL
            .into_iter()
            .find(|k| k.record_name().replace('_', "") == norm)
            .ok_or_else(|| format!("unknown abstract action `{s}`"))
    }
}

impl AbstractAction {
    pub fn kind(&self) -> AbstractKind {
        match self {
            AbstractAction::DeployUnit { .. } => AbstractKind::DeployUnit,
            AbstractAction::HarvestMineral { .. } => AbstractKind::HarvestMineral,
            AbstractAction::BuildBuilding { .. } => AbstractKind::BuildBuilding,
            AbstractAction::ProduceUnit { .. } => AbstractKind::ProduceUnit,
            AbstractAction::AttackEnemy { .. } => AbstractKind::AttackEnemy,
        }
    }

    /// One line of the plan text format.
    pub fn to_record(&self) -> String {
        let name = self.kind().record_name();
        match self {
            AbstractAction::DeployUnit { unit_type, target } => {
                format!("{name} unit_type={unit_type} target={},{}", target.x, target.y)
            }
            AbstractAction::HarvestMineral { worker_count } => {
                format!("{name} worker_count={worker_count}")
            }
            AbstractAction::BuildBuilding {
                building_type,
                site,
            } => format!("{name} building_type={building_type} site={},{}", site.x, site.y),
            AbstractAction::ProduceUnit {
                unit_type,
                direction,
            } => format!("{name} unit_type={unit_type} direction={direction}"),
            AbstractAction::AttackEnemy {
                attacker_type,
                target_type,
            } => format!("{name} attacker_type={attacker_type} target_type={target_type}"),
        }
    }

    /// Parses one record line.
    pub fn from_record(line: &str) -> Result<AbstractAction, String> {
        let mut parts = line.split_whitespace();
        let head = parts.next().ok_or("empty record")?;
        let kind: AbstractKind = head.parse()?;
        let mut params = std::collections::BTreeMap::new();
        for p in parts {
            let (k, v) = p
                .split_once('=')
                .ok_or_else(|| format!("parameter `{p}` is not key=value"))?;
            params.insert(k.to_ascii_lowercase(), v.to_string());
        }
        let get = |key: &str| -> Result<&String, String> {
            params
                .get(key)
                .ok_or_else(|| format!("{head}: missing `{key}`"))
        };
        let action = match kind {
            AbstractKind::DeployUnit => AbstractAction::DeployUnit {
                unit_type: get("unit_type")?.parse()?,
                target: parse_position(get("target")?)?,
            },
            AbstractKind::HarvestMineral => AbstractAction::HarvestMineral {
                worker_count: get("worker_count")?
                    .parse()
                    .map_err(|e| format!("worker_count: {e}"))?,
            },
            AbstractKind::BuildBuilding => AbstractAction::BuildBuilding {
                building_type: get("building_type")?.parse()?,
                site: parse_position(get("site")?)?,
            },
            AbstractKind::ProduceUnit => AbstractAction::ProduceUnit {
                unit_type: get("unit_type")?.parse()?,
                direction: get("direction")?.parse()?,
            },
            AbstractKind::AttackEnemy => AbstractAction::AttackEnemy {
                attacker_type: get("attacker_type")?.parse()?,
                target_type: get("target_type")?.parse()?,
            },
        };
        Ok(action)
    }
}

fn parse_position(s: &str) -> Result<Position, String> {
    let t = s.trim().trim_start_matches('(').trim_end_matches(')');
    let (x, y) = t
        .split_once(',')
        .ok_or_else(|| format!("position `{s}` is not x,y"))?;
    let x = x.trim().parse().map_err(|_| format!("bad x in `{s}`"))?;
    let y = y.trim().parse().map_err(|_| format!("bad y in `{s}`"))?;
    Ok(Position::new(x, y))
}

/// Ordered, executable list of abstract actions.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Plan {
    pub entries: Vec<AbstractAction>,
    pub created_tick: u32,
}

impl Plan {
    pub fn new(entries: Vec<AbstractAction>, created_tick: u32) -> Self {
        Plan {
            entries,
            created_tick,
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn count(&self, kind: AbstractKind) -> usize {
        self.entries.iter().filter(|e| e.kind() == kind).count()
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for e in &self.entries {
            out.push_str(&e.to_record());
            out.push('\n');
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum IssueKind {
    OutOfBounds,
    Unproducible,
    Unaffordable,
    BadParameter,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanIssue {
    pub entry: usize,
    pub kind: IssueKind,
    pub message: String,
}

/// Non-fatal plan checks against the current state, from `player`'s side.
pub fn validate_plan(plan: &Plan, state: &GameState, player: Player) -> Vec<PlanIssue> {
    let mut issues = Vec::new();
    let mut push = |entry: usize, kind: IssueKind, message: String| {
        issues.push(PlanIssue {
            entry,
            kind,
            message,
        })
    };
    for (i, e) in plan.entries.iter().enumerate() {
        match e {
            AbstractAction::DeployUnit { unit_type, target } => {
                if !state.in_bounds(*target) {
                    push(i, IssueKind::OutOfBounds, format!("deploy target {target} is off the map"));
                }
                if !unit_type.is_mobile() {
                    push(i, IssueKind::BadParameter, format!("{unit_type} cannot move"));
                }
            }
            AbstractAction::HarvestMineral { worker_count } => {
                if *worker_count == 0 {
                    push(i, IssueKind::BadParameter, "worker_count is 0".into());
                }
            }
            AbstractAction::BuildBuilding {
                building_type,
                site,
            } => {
                if !state.in_bounds(*site) {
                    push(i, IssueKind::OutOfBounds, format!("build site {site} is off the map"));
                }
                if !UnitType::Worker.produces().contains(building_type) {
                    push(
                        i,
                        IssueKind::Unproducible,
                        format!("workers cannot build {building_type}"),
                    );
                } else if state.stats.get(*building_type).cost > state.stock(player) {
                    push(
                        i,
                        IssueKind::Unaffordable,
                        format!(
                            "{building_type} costs {} but stock is {}",
                            state.stats.get(*building_type).cost,
                            state.stock(player)
                        ),
                    );
                }
            }
            AbstractAction::ProduceUnit { unit_type, .. } => {
                if unit_type.producer().is_none() {
                    push(i, IssueKind::Unproducible, format!("nothing produces {unit_type}"));
                }
            }
            AbstractAction::AttackEnemy {
                attacker_type,
                target_type,
            } => {
                if !attacker_type.can_attack() {
                    push(i, IssueKind::BadParameter, format!("{attacker_type} cannot attack"));
                }
                if *target_type == TargetType::Unit(UnitType::Mineral) {
                    push(i, IssueKind::BadParameter, "minerals are not enemies".into());
                }
            }
        }
    }
    issues
}

#[cfg(test)]
mod tests;
