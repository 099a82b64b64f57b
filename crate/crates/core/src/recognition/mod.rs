//! Trajectories, their heuristic summaries, and opponent-strategy
//! recognition.
//!
//! A [`Trajectory`] is fed every engine step and keeps running counters per
//! player. [`extract`] turns those counters into a fixed-size
//! [`TrajectorySummary`], and [`recognize`] maps one player's summary to a
//! strategy with per-dimension confidences using threshold rules.

mod rules;

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::{
    ActionKind, AtomicAction, CompletionStatus, GameState, Owner, Player, Position, TickRecord,
    UnitId, UnitType,
};

pub use rules::{
    recognize, recognize_remote, render_summary, Recognition, RecognizerConfig, RecognizerPort,
    RuleRecognizer, TextRecognizer,
};

/// Attack positions kept per player.
pub const MAX_ATTACK_POSITIONS: usize = 64;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TrajectoryError {
    #[error("tick {got} recorded after tick {last}")]
    OutOfOrder { last: u32, got: u32 },
}

/// One recorded step.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub tick: u32,
    /// Hash of unit positions, hit points and stocks after the step.
    pub digest: u64,
    pub issued: [Vec<(UnitId, AtomicAction)>; 2],
}

/// Running sums for one player. Occupancy counts army unit-ticks, with units
/// on the dividing line split between the halves. Army means every mobile
/// unit except workers whose latest harvest-or-attack order was economic.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
struct Counters {
    harvests: u32,
    returns: u32,
    produced: BTreeMap<UnitType, u32>,
    attacks: u32,
    enemy_half_attacks: f64,
    victims: BTreeMap<UnitType, u32>,
    attack_positions: Vec<(u32, Position)>,
    barracks_tick: Option<u32>,
    /// Tick and army size when a unit that never harvested first attacked
    /// from the enemy half or the dividing line.
    first_raid: Option<(u32, u32)>,
    own_half: f64,
    enemy_half: f64,
    unit_ticks: f64,
    distance_sum: f64,
}

impl Counters {
    /// Counts accumulated since `earlier`.
    fn since(&self, earlier: &Counters, from_tick: u32) -> Counters {
        let sub_map = |a: &BTreeMap<UnitType, u32>, b: &BTreeMap<UnitType, u32>| {
            a.iter()
                .map(|(k, v)| (*k, v - b.get(k).copied().unwrap_or(0)))
                .filter(|(_, v)| *v > 0)
                .collect()
        };
        Counters {
            harvests: self.harvests - earlier.harvests,
            returns: self.returns - earlier.returns,
            produced: sub_map(&self.produced, &earlier.produced),
            attacks: self.attacks - earlier.attacks,
            enemy_half_attacks: self.enemy_half_attacks - earlier.enemy_half_attacks,
            victims: sub_map(&self.victims, &earlier.victims),
            attack_positions: self
                .attack_positions
                .iter()
                .filter(|(t, _)| *t >= from_tick)
                .copied()
                .collect(),
            barracks_tick: self.barracks_tick,
            first_raid: self.first_raid.filter(|(t, _)| *t >= from_tick),
            own_half: self.own_half - earlier.own_half,
            enemy_half: self.enemy_half - earlier.enemy_half,
            unit_ticks: self.unit_ticks - earlier.unit_ticks,
            distance_sum: self.distance_sum - earlier.distance_sum,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryConfig {
    /// Only the most recent this many ticks feed the summary.
    pub window: Option<u32>,
    /// Interval between stored checkpoints and snapshots.
    pub checkpoint_every: u32,
    /// Full state snapshots kept.
    pub snapshots: usize,
}

impl Default for TrajectoryConfig {
    fn default() -> Self {
        TrajectoryConfig {
            window: None,
            checkpoint_every: 100,
            snapshots: 4,
        }
    }
}

/// Record of a match from both players' side.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub cfg: TrajectoryConfig,
    pub records: Vec<TrajectoryRecord>,
    /// Starting base of each player, used to split the map in halves.
    anchors: Option<[Position; 2]>,
    owners: BTreeMap<UnitId, Player>,
    economic: BTreeSet<UnitId>,
    harvested: BTreeSet<UnitId>,
    counters: [Counters; 2],
    checkpoints: Vec<(u32, [Counters; 2])>,
    #[serde(skip)]
    pub snapshots: VecDeque<GameState>,
}

fn digest(state: &GameState) -> u64 {
    // FNV-1a over the fields that change.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    let mut eat = |v: i64| {
        for b in v.to_le_bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
    };
    eat(state.tick as i64);
    eat(state.resources[0] as i64);
    eat(state.resources[1] as i64);
    for u in &state.units {
        eat(u.id.0 as i64);
        eat(((u.pos.x as i64) << 32) | u.pos.y as i64);
        eat(u.hp as i64);
        eat(u.minerals as i64);
    }
    h
}

fn starting_anchors(state: &GameState) -> [Position; 2] {
    let base = |o: Owner, fallback: Position| {
        state
            .units
            .iter()
            .filter(|u| u.owner == o)
            .min_by_key(|u| (u.kind != UnitType::Base, u.id))
            .map_or(fallback, |u| u.pos)
    };
    [
        base(Owner::P1, Position::new(0, 0)),
        base(Owner::P2, Position::new(state.width - 1, state.height - 1)),
    ]
}

impl Trajectory {
    pub fn new(cfg: TrajectoryConfig) -> Self {
        Trajectory {
            cfg,
            ..Trajectory::default()
        }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn last_tick(&self) -> Option<u32> {
        self.records.last().map(|r| r.tick)
    }

    /// Appends one step: `rec` is what the engine reported and `after` the
    /// state it produced. The state is only read.
    pub fn record(&mut self, after: &GameState, rec: &TickRecord) -> Result<(), TrajectoryError> {
        if let Some(last) = self.last_tick() {
            if rec.tick <= last {
                return Err(TrajectoryError::OutOfOrder {
                    last,
                    got: rec.tick,
                });
            }
        }
        let anchors = *self.anchors.get_or_insert_with(|| starting_anchors(after));

        let mut issued: [Vec<(UnitId, AtomicAction)>; 2] = Default::default();
        let mut raid = [false; 2];
        for a in &rec.issued {
            self.owners.insert(a.unit, a.player);
            match a.action.kind() {
                ActionKind::Harvest | ActionKind::Return => {
                    self.economic.insert(a.unit);
                    self.harvested.insert(a.unit);
                }
                ActionKind::Attack => {
                    self.economic.remove(&a.unit);
                }
                _ => {}
            }
            issued[a.player.index()].push((a.unit, a.action));
            if let AtomicAction::Attack(target) = a.action {
                let c = &mut self.counters[a.player.index()];
                c.attacks += 1;
                let p = a.player;
                let enemy = a.pos.manhattan(anchors[p.opponent().index()]);
                let own = a.pos.manhattan(anchors[p.index()]);
                if enemy <= own {
                    c.enemy_half_attacks += if enemy == own { 0.5 } else { 1.0 };
                    if !self.harvested.contains(&a.unit) {
                        raid[p.index()] = true;
                    }
                }
                if c.attack_positions.len() < MAX_ATTACK_POSITIONS {
                    c.attack_positions.push((rec.tick, a.pos));
                }
                if let Some(victim) = after.unit_at(target) {
                    *c.victims.entry(victim.kind).or_default() += 1;
                }
            }
        }
        for done in &rec.completions {
            if done.status != CompletionStatus::Done {
                continue;
            }
            let Some(p) = self.owners.get(&done.unit).copied() else {
                continue;
            };
            let c = &mut self.counters[p.index()];
            match done.action.kind() {
                ActionKind::Harvest => c.harvests += 1,
                ActionKind::Return => c.returns += 1,
                _ => {}
            }
        }
        for s in &rec.spawned {
            self.owners.insert(s.unit, s.owner);
            let c = &mut self.counters[s.owner.index()];
            *c.produced.entry(s.kind).or_default() += 1;
            if s.kind == UnitType::Barracks && c.barracks_tick.is_none() {
                c.barracks_tick = Some(rec.tick);
            }
        }
        let mut army = [0u32; 2];
        for u in after
            .units
            .iter()
            .filter(|u| u.kind.is_mobile() && !self.economic.contains(&u.id))
        {
            let Some(p) = u.owner.player() else { continue };
            let own = u.pos.manhattan(anchors[p.index()]);
            let enemy = u.pos.manhattan(anchors[p.opponent().index()]);
            let c = &mut self.counters[p.index()];
            match own.cmp(&enemy) {
                std::cmp::Ordering::Less => c.own_half += 1.0,
                std::cmp::Ordering::Greater => c.enemy_half += 1.0,
                std::cmp::Ordering::Equal => {
                    c.own_half += 0.5;
                    c.enemy_half += 0.5;
                }
            }
            c.unit_ticks += 1.0;
            c.distance_sum += enemy as f64;
            army[p.index()] += 1;
        }
        for p in Player::BOTH {
            let c = &mut self.counters[p.index()];
            if raid[p.index()] && c.first_raid.is_none() {
                c.first_raid = Some((rec.tick, army[p.index()]));
            }
        }

        self.records.push(TrajectoryRecord {
            tick: rec.tick,
            digest: digest(after),
            issued,
        });
        if self.cfg.checkpoint_every > 0 && rec.tick.is_multiple_of(self.cfg.checkpoint_every) {
            self.checkpoints.push((rec.tick, self.counters.clone()));
            if self.cfg.snapshots > 0 {
                if self.snapshots.len() == self.cfg.snapshots {
                    self.snapshots.pop_front();
                }
                self.snapshots.push_back(after.clone());
            }
        }
        Ok(())
    }
}

/// Digest of one player's behavior.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PlayerSummary {
    pub harvest_count: u32,
    pub return_count: u32,
    pub produce_count: BTreeMap<UnitType, u32>,
    pub attack_count: u32,
    /// Unit types found on attacked cells when the attack was issued.
    pub attack_victims: BTreeMap<UnitType, u32>,
    pub barracks_completed_tick: Option<u32>,
    /// Attacker positions at issue time, at most [`MAX_ATTACK_POSITIONS`].
    pub attack_issue_positions: Vec<Position>,
    /// Share of army unit-ticks spent nearer the own starting base. Both
    /// fractions are 0 when no army unit ever existed.
    pub own_half_fraction: f64,
    pub enemy_half_fraction: f64,
    pub mean_army_distance_to_enemy_base: Option<f64>,
    /// Army units alive when a unit that never harvested first attacked
    /// from the enemy half or the dividing line.
    pub raid_army: Option<u32>,
    /// Share of attacks issued from the enemy half, with attacks from the
    /// dividing line counting half. 0 without attacks.
    pub enemy_half_attack_share: f64,
}

impl PlayerSummary {
    pub fn produced(&self, kind: UnitType) -> u32 {
        self.produce_count.get(&kind).copied().unwrap_or(0)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySummary {
    /// Ticks covered.
    pub ticks: u32,
    pub players: [PlayerSummary; 2],
}

impl TrajectorySummary {
    pub fn player(&self, p: Player) -> &PlayerSummary {
        &self.players[p.index()]
    }
}

fn summarize(c: &Counters) -> PlayerSummary {
    let (own, enemy, mean) = if c.unit_ticks > 0.0 {
        (
            c.own_half / c.unit_ticks,
            c.enemy_half / c.unit_ticks,
            Some(c.distance_sum / c.unit_ticks),
        )
    } else {
        (0.0, 0.0, None)
    };
    PlayerSummary {
        harvest_count: c.harvests,
        return_count: c.returns,
        produce_count: c.produced.clone(),
        attack_count: c.attacks,
        attack_victims: c.victims.clone(),
        barracks_completed_tick: c.barracks_tick,
        attack_issue_positions: c.attack_positions.iter().map(|(_, p)| *p).collect(),
        own_half_fraction: own,
        enemy_half_fraction: enemy,
        mean_army_distance_to_enemy_base: mean,
        raid_army: c.first_raid.map(|(_, n)| n),
        enemy_half_attack_share: if c.attacks > 0 {
            c.enemy_half_attacks / c.attacks as f64
        } else {
            0.0
        },
    }
}

/// Summary of the trajectory, or of its last `cfg.window` ticks. With a
/// window, counting starts at the latest checkpoint inside it.
pub fn extract(traj: &Trajectory) -> TrajectorySummary {
    let Some(last) = traj.last_tick() else {
        return TrajectorySummary::default();
    };
    let first = traj.records[0].tick.saturating_sub(1);
    let (start, counters) = match traj.cfg.window {
        Some(w) if last > w => {
            let from = last - w;
            match traj.checkpoints.iter().find(|(t, _)| *t >= from) {
                Some((t, base)) if *t < last => (
                    *t,
                    [
                        traj.counters[0].since(&base[0], *t),
                        traj.counters[1].since(&base[1], *t),
                    ],
                ),
                _ => (first, traj.counters.clone()),
            }
        }
        _ => (first, traj.counters.clone()),
    };
    TrajectorySummary {
        ticks: last - start,
        players: [summarize(&counters[0]), summarize(&counters[1])],
    }
}
