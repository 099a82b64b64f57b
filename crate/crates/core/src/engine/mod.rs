//! Deterministic two-player grid-world RTS in the style of MicroRTS.
//!
//! Actions take several ticks. An action assigned at tick `t` with duration
//! `d` takes effect in the state reached at tick `t + d`. Within one step the
//! completing actions resolve in a fixed order: attacks (simultaneously), then
//! harvests, returns, and finally moves and spawns, which compete for cells.
//! Contention (two movers for one cell, two harvesters for the last mineral)
//! is settled with the state's seeded generator.

mod log;
mod maps;
mod stats;
mod types;

use std::collections::BTreeMap;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use log::{
    read_event_log, Completion, CompletionStatus, DamageEvent, Destroyed, EventLogWriter,
    IssuedAction, Spawned, TickRecord,
};
pub use maps::{load_map, load_map_with, parse_text_map, render_text_map, EngineConfig, MapId};
pub use stats::{StatTable, UnitStats};
pub use types::{
    ActionKind, AtomicAction, Busy, Direction, Outcome, Owner, Player, Position, Unit, UnitId,
    UnitType,
};

/// Per-tick orders, keyed by unit. Idle units without an entry do nothing.
pub type Assignments = BTreeMap<UnitId, AtomicAction>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EngineError {
    #[error("unknown map `{0}`")]
    UnknownMap(String),
    #[error("malformed map: {0}")]
    MapParse(String),
    #[error("unknown unit {0}")]
    UnknownUnit(UnitId),
    #[error("unit {0} is busy")]
    BusyUnit(UnitId),
    #[error("unit {0} is not controlled by a player")]
    NotControllable(UnitId),
    #[error("illegal action {action:?} for unit {unit}")]
    IllegalAction { unit: UnitId, action: AtomicAction },
    #[error("{0} cannot afford the assigned productions")]
    Unaffordable(Player),
    #[error("step limit reached at tick {0}")]
    StepLimit(u32),
}

/// Full snapshot of a match.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GameState {
    pub tick: u32,
    pub width: i32,
    pub height: i32,
    /// Alive units, sorted by id.
    pub units: Vec<Unit>,
    /// Mineral stock per player.
    pub resources: [u32; 2],
    /// Minerals committed to production (net of refunds) plus cargo lost with
    /// destroyed workers. Keeps the mineral ledger closed.
    pub sunk: [u32; 2],
    pub step_limit: u32,
    pub next_id: u32,
    pub stats: StatTable,
    pub rng: ChaCha8Rng,
}

/// Layout-only view of a unit, used to compare states up to unit ids.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct UnitShape {
    pub pos: Position,
    pub owner: Owner,
    pub kind: UnitType,
    pub hp: i32,
    pub carrying: u32,
    pub minerals: u32,
    pub busy: Option<(AtomicAction, u32)>,
}

impl GameState {
    pub fn in_bounds(&self, p: Position) -> bool {
        p.x >= 0 && p.y >= 0 && p.x < self.width && p.y < self.height
    }

    pub fn unit(&self, id: UnitId) -> Option<&Unit> {
        self.units
            .binary_search_by_key(&id, |u| u.id)
            .ok()
            .map(|i| &self.units[i])
    }

    fn unit_index(&self, id: UnitId) -> Option<usize> {
        self.units.binary_search_by_key(&id, |u| u.id).ok()
    }

    pub fn unit_at(&self, p: Position) -> Option<&Unit> {
        self.units.iter().find(|u| u.pos == p)
    }

    pub fn is_free(&self, p: Position) -> bool {
        self.in_bounds(p) && self.unit_at(p).is_none()
    }

    /// Cell → unit index lookup, row-major.
    pub fn occupancy(&self) -> Vec<Option<usize>> {
        let mut grid = vec![None; (self.width * self.height) as usize];
        for (i, u) in self.units.iter().enumerate() {
            grid[(u.pos.y * self.width + u.pos.x) as usize] = Some(i);
        }
        grid
    }

    pub fn units_of(&self, player: Player) -> impl Iterator<Item = &Unit> {
        let owner = Owner::from(player);
        self.units.iter().filter(move |u| u.owner == owner)
    }

    pub fn stock(&self, player: Player) -> u32 {
        self.resources[player.index()]
    }

    pub fn outcome(&self) -> Outcome {
        let alive = |p: Player| self.units_of(p).next().is_some();
        match (alive(Player::P1), alive(Player::P2)) {
            (true, false) => Outcome::Win(Player::P1),
            (false, true) => Outcome::Win(Player::P2),
            (false, false) => Outcome::Draw,
            (true, true) if self.tick >= self.step_limit => Outcome::Draw,
            (true, true) => Outcome::Ongoing,
        }
    }

    /// Every mineral in the game, wherever it currently sits.
    pub fn mineral_total(&self) -> u64 {
        let held: u64 = self
            .units
            .iter()
            .map(|u| u.carrying as u64 + u.minerals as u64)
            .sum();
        held + self.resources.iter().map(|&r| r as u64).sum::<u64>()
            + self.sunk.iter().map(|&r| r as u64).sum::<u64>()
    }

    /// Units as a sorted multiset of layouts, ignoring ids.
    pub fn shape(&self) -> Vec<UnitShape> {
        let mut v: Vec<UnitShape> = self
            .units
            .iter()
            .map(|u| UnitShape {
                pos: u.pos,
                owner: u.owner,
                kind: u.kind,
                hp: u.hp,
                carrying: u.carrying,
                minerals: u.minerals,
                busy: u.busy.map(|b| (b.action, b.remaining)),
            })
            .collect();
        v.sort();
        v
    }

    /// Mirror through the map centre and swap the players. Ids are kept.
    pub fn rotate180(&self) -> GameState {
        let mut out = self.clone();
        for u in &mut out.units {
            u.pos = self.rotate_pos(u.pos);
            u.owner = u.owner.swapped();
            if let Some(b) = &mut u.busy {
                b.action = self.rotate_action(b.action);
            }
        }
        out.resources.swap(0, 1);
        out.sunk.swap(0, 1);
        out
    }

    pub fn rotate_pos(&self, p: Position) -> Position {
        Position::new(self.width - 1 - p.x, self.height - 1 - p.y)
    }

    pub fn rotate_action(&self, a: AtomicAction) -> AtomicAction {
        match a {
            AtomicAction::Noop => AtomicAction::Noop,
            AtomicAction::Move(d) => AtomicAction::Move(d.opposite()),
            AtomicAction::Harvest(d) => AtomicAction::Harvest(d.opposite()),
            AtomicAction::Return(d) => AtomicAction::Return(d.opposite()),
            AtomicAction::Produce(d, t) => AtomicAction::Produce(d.opposite(), t),
            AtomicAction::Attack(p) => AtomicAction::Attack(self.rotate_pos(p)),
        }
    }

    /// Actions startable by `id` this tick, in a canonical order. `Noop` is first.
    pub fn legal_actions(&self, id: UnitId) -> Result<Vec<AtomicAction>, EngineError> {
        let idx = self.controllable(id)?;
        let unit = &self.units[idx];
        let mut out = vec![AtomicAction::Noop];
        for d in Direction::ALL {
            out.push(AtomicAction::Move(d));
            out.push(AtomicAction::Harvest(d));
            out.push(AtomicAction::Return(d));
            for &t in unit.kind.produces() {
                out.push(AtomicAction::Produce(d, t));
            }
        }
        if unit.kind.can_attack() {
            let mut targets: Vec<Position> = self
                .units
                .iter()
                .filter(|o| self.is_enemy(unit, o))
                .map(|o| o.pos)
                .collect();
            targets.sort();
            out.extend(targets.into_iter().map(AtomicAction::Attack));
        }
        out.retain(|a| self.is_startable(unit, *a, self.stock_of(unit)));
        Ok(out)
    }

    /// True when `id` could start `action` right now.
    pub fn is_legal(&self, id: UnitId, action: AtomicAction) -> bool {
        match self.controllable(id) {
            Ok(idx) => {
                let unit = &self.units[idx];
                self.is_startable(unit, action, self.stock_of(unit))
            }
            Err(_) => false,
        }
    }

    fn stock_of(&self, unit: &Unit) -> u32 {
        unit.player().map(|p| self.stock(p)).unwrap_or(0)
    }

    fn controllable(&self, id: UnitId) -> Result<usize, EngineError> {
        let idx = self.unit_index(id).ok_or(EngineError::UnknownUnit(id))?;
        let unit = &self.units[idx];
        if unit.owner == Owner::Neutral {
            return Err(EngineError::NotControllable(id));
        }
        if !unit.is_idle() {
            return Err(EngineError::BusyUnit(id));
        }
        Ok(idx)
    }

    fn is_enemy(&self, unit: &Unit, other: &Unit) -> bool {
        other.owner != Owner::Neutral && unit.owner != Owner::Neutral && other.owner != unit.owner
    }

    pub fn in_attack_range(&self, attacker: &Unit, target: Position) -> bool {
        let r = self.stats.get(attacker.kind).attack_range;
        attacker.pos.dist_sq(target) <= r * r
    }

    fn is_startable(&self, unit: &Unit, action: AtomicAction, stock: u32) -> bool {
        match action {
            AtomicAction::Noop => true,
            AtomicAction::Move(d) => unit.kind.is_mobile() && self.is_free(unit.pos.step(d)),
            AtomicAction::Harvest(d) => {
                unit.kind == UnitType::Worker
                    && unit.carrying == 0
                    && self
                        .unit_at(unit.pos.step(d))
                        .is_some_and(|m| m.kind == UnitType::Mineral && m.minerals > 0)
            }
            AtomicAction::Return(d) => {
                unit.kind == UnitType::Worker
                    && unit.carrying > 0
                    && self
                        .unit_at(unit.pos.step(d))
                        .is_some_and(|b| b.kind == UnitType::Base && b.owner == unit.owner)
            }
            AtomicAction::Produce(d, t) => {
                unit.kind.produces().contains(&t)
                    && stock >= self.stats.get(t).cost
                    && self.is_free(unit.pos.step(d))
            }
            AtomicAction::Attack(target) => {
                unit.kind.can_attack()
                    && self.in_attack_range(unit, target)
                    && self
                        .unit_at(target)
                        .is_some_and(|o| self.is_enemy(unit, o))
            }
        }
    }

    fn duration(&self, unit: &Unit, action: AtomicAction) -> u32 {
        let s = self.stats.get(unit.kind);
        let d = match action {
            AtomicAction::Noop => 0,
            AtomicAction::Move(_) => s.move_time,
            AtomicAction::Harvest(_) => s.harvest_time,
            AtomicAction::Return(_) => s.return_time,
            AtomicAction::Attack(_) => s.attack_time,
            AtomicAction::Produce(_, t) => self.stats.get(t).produce_time,
        };
        d.max(1)
    }

    /// Pure transition: returns the next state, leaving `self` untouched.
    pub fn step(&self, assignments: &Assignments) -> Result<GameState, EngineError> {
        let mut next = self.clone();
        next.apply(assignments)?;
        Ok(next)
    }

    /// In-place transition. On error the state is unchanged.
    pub fn apply(&mut self, assignments: &Assignments) -> Result<TickRecord, EngineError> {
        if self.tick >= self.step_limit {
            return Err(EngineError::StepLimit(self.tick));
        }
        self.validate(assignments)?;

        let mut record = TickRecord {
            tick: self.tick + 1,
            ..TickRecord::default()
        };

        // Start newly assigned actions.
        for (&id, &action) in assignments {
            if action == AtomicAction::Noop {
                continue;
            }
            let idx = self.unit_index(id).expect("validated");
            let duration = self.duration(&self.units[idx], action);
            let unit = &self.units[idx];
            let player = unit.player().expect("validated");
            record.issued.push(IssuedAction {
                unit: id,
                player,
                kind: unit.kind,
                pos: unit.pos,
                action,
            });
            if let AtomicAction::Produce(_, t) = action {
                let cost = self.stats.get(t).cost;
                self.resources[player.index()] -= cost;
                self.sunk[player.index()] += cost;
            }
            self.units[idx].busy = Some(Busy {
                action,
                remaining: duration,
            });
        }

        // Count down and collect completions in id order.
        let mut completing: Vec<(usize, AtomicAction)> = Vec::new();
        for (i, u) in self.units.iter_mut().enumerate() {
            if let Some(b) = &mut u.busy {
                b.remaining -= 1;
                if b.remaining == 0 {
                    completing.push((i, b.action));
                    u.busy = None;
                }
            }
        }
        if !completing.is_empty() {
            self.resolve(&completing, &mut record);
        }

        self.tick += 1;
        Ok(record)
    }

    fn validate(&self, assignments: &Assignments) -> Result<(), EngineError> {
        let mut spend = [0u32; 2];
        for (&id, &action) in assignments {
            let idx = self.controllable(id)?;
            let unit = &self.units[idx];
            if action == AtomicAction::Noop {
                continue;
            }
            let player = unit.player().expect("controllable");
            if !self.is_startable(unit, action, self.stock(player)) {
                return Err(EngineError::IllegalAction { unit: id, action });
            }
            if let AtomicAction::Produce(_, t) = action {
                spend[player.index()] += self.stats.get(t).cost;
                if spend[player.index()] > self.stock(player) {
                    return Err(EngineError::Unaffordable(player));
                }
            }
        }
        Ok(())
    }

    fn resolve(&mut self, completing: &[(usize, AtomicAction)], record: &mut TickRecord) {
        let n = self.units.len();
        let mut dead = vec![false; n];
        let mut status: Vec<CompletionStatus> = vec![CompletionStatus::Done; completing.len()];

        // Attacks land simultaneously against the pre-resolution layout.
        let grid = self.occupancy();
        let cell = |p: Position, w: i32| (p.y * w + p.x) as usize;
        let mut hp_left: Vec<i32> = self.units.iter().map(|u| u.hp).collect();
        for (k, &(i, action)) in completing.iter().enumerate() {
            let AtomicAction::Attack(target) = action else {
                continue;
            };
            let attacker = &self.units[i];
            let victim = if self.in_bounds(target) {
                grid[cell(target, self.width)]
            } else {
                None
            };
            match victim {
                Some(v) if self.is_enemy(attacker, &self.units[v]) && hp_left[v] > 0 => {
                    let dmg = self.stats.get(attacker.kind).attack_damage;
                    let amount = dmg.min(hp_left[v]);
                    hp_left[v] -= amount;
                    let vu = &self.units[v];
                    record.damage.push(DamageEvent {
                        attacker: attacker.id,
                        attacker_owner: attacker.player().expect("attackers are owned"),
                        victim: vu.id,
                        victim_owner: vu.player().expect("enemies are owned"),
                        victim_kind: vu.kind,
                        amount,
                    });
                }
                _ => status[k] = CompletionStatus::Miss,
            }
        }
        for i in 0..n {
            self.units[i].hp = hp_left[i];
            if hp_left[i] <= 0 && self.units[i].kind != UnitType::Mineral {
                dead[i] = true;
            }
        }
        for (i, u) in self.units.iter().enumerate() {
            if dead[i] {
                if let Some(p) = u.player() {
                    self.sunk[p.index()] += u.carrying;
                }
                record.destroyed.push(Destroyed {
                    unit: u.id,
                    owner: u.owner,
                    kind: u.kind,
                    pos: u.pos,
                });
            }
        }

        // Harvests: group contenders by patch.
        let mut by_patch: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (k, &(i, action)) in completing.iter().enumerate() {
            if dead[i] {
                continue;
            }
            if let AtomicAction::Harvest(d) = action {
                let target = self.units[i].pos.step(d);
                match self.in_bounds(target).then(|| grid[cell(target, self.width)]).flatten() {
                    Some(m) if self.units[m].kind == UnitType::Mineral && self.units[m].minerals > 0 => {
                        by_patch.entry(m).or_default().push(k);
                    }
                    _ => status[k] = CompletionStatus::Failed,
                }
            }
        }
        for (m, mut contenders) in by_patch {
            let available = self.units[m].minerals as usize;
            while contenders.len() > available {
                let loser = contenders.remove(self.rng.gen_range(0..contenders.len()));
                status[loser] = CompletionStatus::Failed;
            }
            for k in contenders {
                let i = completing[k].0;
                self.units[i].carrying = 1;
                self.units[m].minerals -= 1;
            }
            if self.units[m].minerals == 0 {
                dead[m] = true;
                let u = &self.units[m];
                record.destroyed.push(Destroyed {
                    unit: u.id,
                    owner: u.owner,
                    kind: u.kind,
                    pos: u.pos,
                });
            }
        }

        // Returns.
        for (k, &(i, action)) in completing.iter().enumerate() {
            if dead[i] {
                continue;
            }
            if let AtomicAction::Return(d) = action {
                let target = self.units[i].pos.step(d);
                let ok = self.in_bounds(target)
                    && grid[cell(target, self.width)].is_some_and(|b| {
                        !dead[b]
                            && self.units[b].kind == UnitType::Base
                            && self.units[b].owner == self.units[i].owner
                    });
                let player = self.units[i].player().expect("workers are owned");
                if ok && self.units[i].carrying > 0 {
                    let amount = self.units[i].carrying;
                    self.units[i].carrying = 0;
                    self.resources[player.index()] += amount;
                    record.delivered[player.index()] += amount;
                } else {
                    status[k] = CompletionStatus::Failed;
                }
            }
        }

        // Moves and spawns compete for cells that are empty now.
        let occupied = |p: Position, dead: &[bool]| -> bool {
            grid[cell(p, self.width)].is_some_and(|j| !dead[j])
        };
        let mut claims: BTreeMap<Position, Vec<usize>> = BTreeMap::new();
        for (k, &(i, action)) in completing.iter().enumerate() {
            if dead[i] {
                continue;
            }
            let target = match action {
                AtomicAction::Move(d) | AtomicAction::Produce(d, _) => self.units[i].pos.step(d),
                _ => continue,
            };
            if !self.in_bounds(target) || occupied(target, &dead) {
                status[k] = CompletionStatus::Cancelled;
                continue;
            }
            claims.entry(target).or_default().push(k);
        }
        let mut spawns: Vec<(UnitId, Player, Position, UnitType)> = Vec::new();
        for (target, mut contenders) in claims {
            while contenders.len() > 1 {
                let loser = contenders.remove(self.rng.gen_range(0..contenders.len()));
                status[loser] = CompletionStatus::Cancelled;
            }
            let k = contenders[0];
            let (i, action) = completing[k];
            match action {
                AtomicAction::Move(_) => self.units[i].pos = target,
                AtomicAction::Produce(_, t) => {
                    let u = &self.units[i];
                    spawns.push((u.id, u.player().expect("producers are owned"), target, t));
                }
                _ => unreachable!(),
            }
        }
        // Refund cancelled productions.
        for (k, &(i, action)) in completing.iter().enumerate() {
            if let (AtomicAction::Produce(_, t), CompletionStatus::Cancelled) = (action, status[k]) {
                if let Some(p) = self.units[i].player() {
                    let cost = self.stats.get(t).cost;
                    self.resources[p.index()] += cost;
                    self.sunk[p.index()] -= cost;
                }
            }
        }

        for (k, &(i, action)) in completing.iter().enumerate() {
            if dead[i] && !matches!(action, AtomicAction::Attack(_)) {
                continue;
            }
            record.completions.push(Completion {
                unit: self.units[i].id,
                action,
                status: status[k],
            });
        }

        // Drop the dead, then append spawns in producer-id order.
        let mut idx = 0;
        self.units.retain(|_| {
            let keep = !dead[idx];
            idx += 1;
            keep
        });
        spawns.sort_by_key(|s| s.0);
        for (_, owner, pos, kind) in spawns {
            let id = UnitId(self.next_id);
            self.next_id += 1;
            self.units.push(Unit {
                id,
                owner: owner.into(),
                kind,
                pos,
                hp: self.stats.get(kind).hp_max,
                carrying: 0,
                minerals: 0,
                busy: None,
            });
            record.spawned.push(Spawned {
                unit: id,
                owner,
                kind,
                pos,
            });
        }
    }
}
