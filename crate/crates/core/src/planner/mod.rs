//! From strategy to plan.
//!
//! [`rule_plan`] is the deterministic reference planner. It first lays out a
//! sketch from the strategy (harvesters, barracks, production, attackers,
//! defensive posts), then applies the matching expert tips as deltas, and
//! finally emits entries in priority order: build, harvest, produce, attack,
//! deploy. Planning happens in the first player's frame, so both seats get
//! mirrored plans for mirrored states.
//!
//! [`PlannerPort`] abstracts over the rule planner and [`TextPlanner`], which
//! asks a text generator for a plan and falls back to the rules on failure.

mod port;
mod prompt;
mod tips;

use serde::{Deserialize, Serialize};

use crate::actions::{AbstractAction, Plan, TargetType};
use crate::engine::{AtomicAction, Direction, GameState, Owner, Player, Position, UnitType};
use crate::strategy::{AttackTarget, BarracksTiming, Composition, Defense, Economy, Strategy};

pub use port::{invert_strategy, PlannerPort, RulePlanner, TextPlanner};
pub use prompt::{
    assemble_prompt, parse_plan, ParsedPlan, PlanParseError, PromptBundle, PromptError, ENV_INFO,
};
pub use tips::{default_tips, tips_for, ExpertTip, TipEffect};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlannerConfig {
    /// Entries beyond this are dropped from the tail.
    pub max_entries: usize,
    /// ProduceUnit entries per plan before tips.
    pub base_production: u32,
    /// Extra stock over the barracks cost before a late barracks is planned.
    pub late_barracks_margin: u32,
    /// Prompt size limit in characters.
    pub prompt_budget: usize,
    /// Army size at which a non-aggressive strategy counterattacks.
    pub counterattack_army: u32,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        PlannerConfig {
            max_entries: 24,
            base_production: 2,
            late_barracks_margin: 3,
            prompt_budget: 6000,
            counterattack_army: 5,
        }
    }
}

/// Strategy used by the plan-level baselines, which get no strategy from
/// outside: harvest a little, produce workers and attack the nearest enemy.
pub fn unguided_strategy() -> Strategy {
    Strategy {
        economy: Economy::Med,
        barracks: BarracksTiming::None,
        composition: Composition::Worker,
        aggression: true,
        attack_target: AttackTarget::Closest,
        defense: Defense::None,
    }
}

/// Intermediate plan description that tips adjust.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Sketch {
    pub build: Option<Position>,
    pub harvesters: u32,
    /// Produced unit types, cycled over `production` entries.
    pub produce_types: Vec<UnitType>,
    pub production: u32,
    /// Extra worker entries that staff the harvest.
    pub staff_workers: u32,
    pub attackers: u32,
    pub attack_types: Vec<UnitType>,
    pub target: TargetType,
    pub posts: u32,
    pub post_type: UnitType,
}

fn composition_types(c: Composition) -> Vec<UnitType> {
    match c {
        Composition::Worker => vec![UnitType::Worker],
        Composition::Light => vec![UnitType::Light],
        Composition::Heavy => vec![UnitType::Heavy],
        Composition::Ranged => vec![UnitType::Ranged],
        Composition::Mixed => vec![UnitType::Light, UnitType::Heavy, UnitType::Ranged],
    }
}

pub fn target_type(t: AttackTarget) -> TargetType {
    match t {
        AttackTarget::Closest => TargetType::Any,
        AttackTarget::Workers => TargetType::Unit(UnitType::Worker),
        AttackTarget::Buildings => TargetType::Unit(UnitType::Base),
    }
}

/// P1's base. Planning helpers below work in P1's frame.
pub fn own_base(obs: &GameState) -> Option<Position> {
    obs.units
        .iter()
        .find(|u| u.owner == Owner::P1 && u.kind == UnitType::Base)
        .map(|u| u.pos)
}

/// P2's base, or its oldest unit when the base is gone.
pub fn enemy_anchor(obs: &GameState) -> Position {
    obs.units
        .iter()
        .filter(|u| u.owner == Owner::P2)
        .min_by_key(|u| (u.kind != UnitType::Base, u.id))
        .map(|u| u.pos)
        .unwrap_or_else(|| Position::new(obs.width - 1, obs.height - 1))
}

/// Distance to the map centre in doubled coordinates.
fn centre_distance(obs: &GameState, p: Position) -> i32 {
    (2 * p.x - (obs.width - 1)).abs() + (2 * p.y - (obs.height - 1)).abs()
}

fn barracks_pending(obs: &GameState) -> bool {
    obs.units.iter().any(|u| {
        u.owner == Owner::P1
            && (u.kind == UnitType::Barracks
                || matches!(u.busy, Some(b) if matches!(b.action, AtomicAction::Produce(_, UnitType::Barracks))))
    })
}

/// Nearest free cell to the base that keeps the base's sides open and does
/// not touch other buildings or minerals.
pub fn barracks_site(obs: &GameState, base: Position) -> Option<Position> {
    let mut best: Option<((u32, i32, i32, i32), Position)> = None;
    for y in 0..obs.height {
        for x in 0..obs.width {
            let p = Position::new(x, y);
            if !obs.is_free(p) || (p.x - base.x).abs().max((p.y - base.y).abs()) < 2 {
                continue;
            }
            let crowded = Direction::ALL.iter().any(|d| {
                obs.unit_at(p.step(*d))
                    .is_some_and(|u| u.kind.is_building() || u.kind == UnitType::Mineral)
            });
            if crowded {
                continue;
            }
            let key = (p.manhattan(base), centre_distance(obs, p), y, x);
            if best.is_none_or(|(k, _)| key < k) {
                best = Some((key, p));
            }
        }
    }
    best.map(|(_, p)| p)
}

/// Defensive posts around the base, two cells out, nearest to the enemy first.
pub fn defense_ring(obs: &GameState, base: Position, n: usize) -> Vec<Position> {
    let enemy = enemy_anchor(obs);
    let mut cells: Vec<Position> = (-2..=2)
        .flat_map(|dy| (-2..=2).map(move |dx| (dx, dy)))
        .filter(|&(dx, dy): &(i32, i32)| dx * dx + dy * dy >= 4 && dx.abs() + dy.abs() <= 3)
        .map(|(dx, dy)| Position::new(base.x + dx, base.y + dy))
        .filter(|p| obs.in_bounds(*p))
        .filter(|p| obs.unit_at(*p).is_none_or(|u| u.kind.is_mobile()))
        .collect();
    cells.sort_by_key(|p| (p.manhattan(enemy), centre_distance(obs, *p), p.y, p.x));
    // Spread posts: skip cells next to an already chosen one when possible.
    let mut chosen: Vec<Position> = Vec::new();
    for p in &cells {
        if chosen.len() == n {
            break;
        }
        if chosen.iter().all(|c| c.manhattan(*p) > 1) {
            chosen.push(*p);
        }
    }
    for p in &cells {
        if chosen.len() == n {
            break;
        }
        if !chosen.contains(p) {
            chosen.push(*p);
        }
    }
    chosen
}

/// Sketch for `s` on a state seen from the first player.
pub fn sketch(obs: &GameState, s: &Strategy, cfg: &PlannerConfig) -> Sketch {
    let base = own_base(obs);
    let harvesters = match s.economy {
        Economy::Low => 1,
        Economy::Med => 2,
        Economy::High => 3,
    };
    let cost = obs.stats.get(UnitType::Barracks).cost;
    let stock = obs.resources[0];
    let wants_barracks = match s.barracks {
        BarracksTiming::None => false,
        BarracksTiming::Early => stock >= cost,
        BarracksTiming::Late => stock >= cost + cfg.late_barracks_margin,
    };
    let build = if wants_barracks && !barracks_pending(obs) {
        base.and_then(|b| barracks_site(obs, b))
    } else {
        None
    };
    let produce_types = composition_types(s.composition);
    let own: Vec<UnitType> = obs
        .units
        .iter()
        .filter(|u| u.owner == Owner::P1)
        .map(|u| u.kind)
        .collect();
    let army = if s.composition == Composition::Worker {
        (own.iter().filter(|k| **k == UnitType::Worker).count() as u32).saturating_sub(harvesters)
    } else {
        own.iter().filter(|k| produce_types.contains(k)).count() as u32
    };
    let attacking = s.aggression || army >= cfg.counterattack_army;
    Sketch {
        build,
        harvesters,
        production: cfg.base_production,
        staff_workers: 0,
        attackers: if attacking {
            produce_types.len() as u32
        } else {
            0
        },
        attack_types: produce_types.clone(),
        post_type: produce_types[0],
        produce_types,
        target: target_type(s.attack_target),
        posts: match s.defense {
            Defense::None => 0,
            Defense::Perimeter => 2,
            Defense::Full => 4,
        },
    }
}

/// Side of P1's base that faces P2.
pub fn facing(obs: &GameState) -> Direction {
    let enemy = enemy_anchor(obs);
    own_base(obs)
        .map(|b| {
            if (enemy.y - b.y).abs() >= (enemy.x - b.x).abs() {
                if enemy.y > b.y {
                    Direction::S
                } else {
                    Direction::N
                }
            } else if enemy.x > b.x {
                Direction::E
            } else {
                Direction::W
            }
        })
        .unwrap_or(Direction::S)
}

fn emit(obs: &GameState, sk: &Sketch, cfg: &PlannerConfig, tick: u32) -> Plan {
    let mut entries = Vec::new();
    let base = own_base(obs);
    if let Some(site) = sk.build {
        entries.push(AbstractAction::BuildBuilding {
            building_type: UnitType::Barracks,
            site,
        });
    }
    if sk.harvesters > 0 && base.is_some() {
        entries.push(AbstractAction::HarvestMineral {
            worker_count: sk.harvesters,
        });
    }
    let facing = facing(obs);
    for _ in 0..sk.staff_workers {
        entries.push(AbstractAction::ProduceUnit {
            unit_type: UnitType::Worker,
            direction: facing,
        });
    }
    for i in 0..sk.production as usize {
        entries.push(AbstractAction::ProduceUnit {
            unit_type: sk.produce_types[i % sk.produce_types.len()],
            direction: facing,
        });
    }
    for i in 0..sk.attackers as usize {
        entries.push(AbstractAction::AttackEnemy {
            attacker_type: sk.attack_types[i % sk.attack_types.len()],
            target_type: sk.target,
        });
    }
    if let Some(b) = base {
        for target in defense_ring(obs, b, sk.posts as usize) {
            entries.push(AbstractAction::DeployUnit {
                unit_type: sk.post_type,
                target,
            });
        }
    }
    entries.truncate(cfg.max_entries);
    Plan::new(entries, tick)
}

fn rotate_plan(obs: &GameState, plan: Plan) -> Plan {
    let entries = plan
        .entries
        .into_iter()
        .map(|e| match e {
            AbstractAction::DeployUnit { unit_type, target } => AbstractAction::DeployUnit {
                unit_type,
                target: obs.rotate_pos(target),
            },
            AbstractAction::BuildBuilding {
                building_type,
                site,
            } => AbstractAction::BuildBuilding {
                building_type,
                site: obs.rotate_pos(site),
            },
            AbstractAction::ProduceUnit {
                unit_type,
                direction,
            } => AbstractAction::ProduceUnit {
                unit_type,
                direction: direction.opposite(),
            },
            other => other,
        })
        .collect();
    Plan::new(entries, plan.created_tick)
}

/// Deterministic plan for `player` following `s`, adjusted by the tips whose
/// condition `s` meets.
pub fn rule_plan(
    obs: &GameState,
    player: Player,
    s: &Strategy,
    tips: &[ExpertTip],
    cfg: &PlannerConfig,
) -> Plan {
    plan_as_p1(obs, player, |view| {
        let mut sk = sketch(view, s, cfg);
        let workers = view
            .units
            .iter()
            .filter(|u| u.owner == Owner::P1 && u.kind == UnitType::Worker)
            .count() as u32;
        for tip in tips.iter().filter(|t| t.applies_to(s)) {
            tip.effect.apply(&mut sk, workers);
        }
        emit(view, &sk, cfg, obs.tick)
    })
}

/// Runs `f` on the board as `player` sees it from P1's seat and maps the
/// resulting plan back.
pub fn plan_as_p1(obs: &GameState, player: Player, f: impl FnOnce(&GameState) -> Plan) -> Plan {
    match player {
        Player::P1 => f(obs),
        Player::P2 => rotate_plan(obs, f(&obs.rotate180())),
    }
}

#[cfg(test)]
mod tests;
