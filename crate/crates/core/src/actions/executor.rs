//! Grounds a [`Plan`] into atomic actions, one tick at a time.
//!
//! Entries are visited in plan order. A pending entry claims the nearest idle
//! matching unit (path length, then lowest id); an active entry drives its
//! units. A unit serves at most one entry. Idle units left without orders hit
//! back at enemies in range when `auto_retaliate` is on.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{AbstractAction, NavGrid, Plan, TargetType};
use crate::engine::{
    Assignments, AtomicAction, Direction, GameState, Owner, Player, Position, Unit, UnitId,
    UnitType,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EntryStatus {
    Pending,
    Active,
    Done,
    Failed,
}

impl EntryStatus {
    pub fn is_terminal(self) -> bool {
        matches!(self, EntryStatus::Done | EntryStatus::Failed)
    }
}

/// Progress of one plan: a status and the serving units per entry.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExecutorState {
    pub status: Vec<EntryStatus>,
    pub units: Vec<Vec<UnitId>>,
}

impl ExecutorState {
    pub fn new(plan: &Plan) -> Self {
        ExecutorState {
            status: vec![EntryStatus::Pending; plan.len()],
            units: vec![Vec::new(); plan.len()],
        }
    }

    /// Entry currently served by `unit`.
    pub fn entry_of(&self, unit: UnitId) -> Option<usize> {
        self.units.iter().position(|us| us.contains(&unit))
    }

    fn finish(&mut self, i: usize, status: EntryStatus) {
        self.status[i] = status;
        self.units[i].clear();
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExecutorConfig {
    pub auto_retaliate: bool,
}

impl Default for ExecutorConfig {
    fn default() -> Self {
        ExecutorConfig {
            auto_retaliate: true,
        }
    }
}

struct Ctx<'a> {
    state: &'a GameState,
    owner: Owner,
    nav: NavGrid,
    stock: u32,
    out: Assignments,
    /// Units serving an entry.
    claimed: BTreeSet<UnitId>,
}

/// Assignments for `player`'s idle units this tick. `exec` is reset when it
/// does not match `plan`.
pub fn tick_controller(
    state: &GameState,
    player: Player,
    plan: &Plan,
    exec: &mut ExecutorState,
    cfg: &ExecutorConfig,
) -> Assignments {
    if exec.status.len() != plan.len() || exec.units.len() != plan.len() {
        *exec = ExecutorState::new(plan);
    }
    let owner = Owner::from(player);

    // Forget dead units; single-unit entries that lost theirs wait for a new one.
    for i in 0..plan.len() {
        exec.units[i].retain(|id| state.unit(*id).is_some_and(|u| u.owner == owner));
        if exec.status[i] == EntryStatus::Active && exec.units[i].is_empty() {
            exec.status[i] = EntryStatus::Pending;
        }
    }

    let mut nav = NavGrid::with_reservations(state);
    for (i, e) in plan.entries.iter().enumerate() {
        if let AbstractAction::BuildBuilding { site, .. } = e {
            if !exec.status[i].is_terminal() {
                nav.block(*site);
            }
        }
    }
    let claimed = exec.units.iter().flatten().copied().collect();
    let mut ctx = Ctx {
        state,
        owner,
        nav,
        stock: state.stock(player),
        out: Assignments::new(),
        claimed,
    };

    for i in 0..plan.len() {
        if exec.status[i].is_terminal() {
            continue;
        }
        match &plan.entries[i] {
            AbstractAction::HarvestMineral { worker_count } => {
                ctx.harvest(exec, i, *worker_count as usize)
            }
            AbstractAction::AttackEnemy {
                attacker_type,
                target_type,
            } => ctx.attack(exec, i, *attacker_type, *target_type),
            AbstractAction::DeployUnit { unit_type, target } => {
                ctx.deploy(exec, i, *unit_type, *target)
            }
            AbstractAction::BuildBuilding {
                building_type,
                site,
            } => ctx.build(exec, i, *building_type, *site),
            AbstractAction::ProduceUnit {
                unit_type,
                direction,
            } => ctx.produce(exec, plan, i, *unit_type, *direction),
        }
    }

    if cfg.auto_retaliate {
        ctx.retaliate();
    }
    debug_assert!(ctx
        .out
        .iter()
        .all(|(id, a)| state.is_legal(*id, *a)));
    ctx.out
}

impl Ctx<'_> {
    fn own_units(&self) -> impl Iterator<Item = &Unit> {
        let owner = self.owner;
        self.state.units.iter().filter(move |u| u.owner == owner)
    }

    fn enemies(&self) -> impl Iterator<Item = &Unit> {
        let owner = self.owner;
        self.state
            .units
            .iter()
            .filter(move |u| u.owner != owner && u.owner != Owner::Neutral)
    }

    fn minerals(&self) -> impl Iterator<Item = &Unit> {
        self.state
            .units
            .iter()
            .filter(|u| u.kind == UnitType::Mineral && u.minerals > 0)
    }

    fn is_available(&self, u: &Unit) -> bool {
        u.is_idle() && !self.claimed.contains(&u.id) && !self.out.contains_key(&u.id)
    }

    /// Nearest available unit of `kind` to any anchor, by path length then id.
    fn nearest_available(&self, kind: UnitType, anchors: &[Position]) -> Option<UnitId> {
        let candidates: Vec<&Unit> = self
            .own_units()
            .filter(|u| u.kind == kind && self.is_available(u))
            .collect();
        if candidates.is_empty() {
            return None;
        }
        if anchors.is_empty() {
            return candidates.first().map(|u| u.id);
        }
        let dist = self.nav.distances(anchors);
        candidates
            .iter()
            .map(|u| {
                let d = self.nav.unit_distance(&dist, u.pos);
                let manhattan = anchors.iter().map(|a| a.manhattan(u.pos)).min().unwrap_or(0);
                ((d, manhattan, u.id), u.id)
            })
            .min()
            .map(|(_, id)| id)
    }

    fn claim(&mut self, exec: &mut ExecutorState, i: usize, id: UnitId) {
        self.claimed.insert(id);
        exec.units[i].push(id);
        exec.status[i] = EntryStatus::Active;
    }

    fn release_all(&mut self, exec: &mut ExecutorState, i: usize, status: EntryStatus) {
        for id in &exec.units[i] {
            self.claimed.remove(id);
        }
        exec.finish(i, status);
    }

    fn issue(&mut self, id: UnitId, action: AtomicAction) {
        if let AtomicAction::Move(d) | AtomicAction::Produce(d, _) = action {
            let at = self.state.unit(id).expect("own unit").pos.step(d);
            self.nav.block(at);
        }
        self.out.insert(id, action);
    }

    /// One step toward the nearest free cell satisfying `goal`. `None` when
    /// already there or no route exists.
    fn step_toward<F: Fn(Position) -> bool>(&self, unit: &Unit, goal: F) -> Option<AtomicAction> {
        let (_, path) = self.nav.path_to(unit.pos, goal)?;
        let d = *path.first()?;
        let a = AtomicAction::Move(d);
        self.state.is_legal(unit.id, a).then_some(a)
    }

    fn adjacent_dir<F: Fn(&Unit) -> bool>(&self, at: Position, pred: F) -> Option<Direction> {
        Direction::ALL.into_iter().find(|&d| {
            self.state
                .unit_at(at.step(d))
                .is_some_and(&pred)
        })
    }

    fn harvest(&mut self, exec: &mut ExecutorState, i: usize, want: usize) {
        let bases: Vec<Position> = self
            .own_units()
            .filter(|u| u.kind == UnitType::Base)
            .map(|u| u.pos)
            .collect();
        if bases.is_empty() {
            self.release_all(exec, i, EntryStatus::Failed);
            return;
        }
        let patches: Vec<Position> = self.minerals().map(|m| m.pos).collect();
        let anyone_carrying = exec.units[i]
            .iter()
            .any(|id| self.state.unit(*id).is_some_and(|u| u.carrying > 0));
        if patches.is_empty() && !anyone_carrying {
            self.release_all(exec, i, EntryStatus::Done);
            return;
        }

        while exec.units[i].len() < want && !patches.is_empty() {
            match self.nearest_available(UnitType::Worker, &patches) {
                Some(id) => self.claim(exec, i, id),
                None => break,
            }
        }
        // Entries with more workers than asked (e.g. after a replan) shed the extras.
        while exec.units[i].len() > want.max(1) {
            let id = exec.units[i].pop().expect("non-empty");
            self.claimed.remove(&id);
        }
        if exec.units[i].is_empty() {
            exec.status[i] = EntryStatus::Pending;
            return;
        }

        let workers = exec.units[i].clone();
        for id in workers {
            let unit = self.state.unit(id).expect("pruned").clone();
            if !unit.is_idle() {
                continue;
            }
            let owner = self.owner;
            if unit.carrying > 0 {
                if let Some(d) =
                    self.adjacent_dir(unit.pos, |b| b.kind == UnitType::Base && b.owner == owner)
                {
                    self.issue(id, AtomicAction::Return(d));
                } else if let Some(a) = self.step_toward(&unit, |c| {
                    bases.iter().any(|b| b.manhattan(c) == 1)
                }) {
                    self.issue(id, a);
                }
            } else if patches.is_empty() {
                exec.units[i].retain(|u| *u != id);
                self.claimed.remove(&id);
            } else if let Some(d) =
                self.adjacent_dir(unit.pos, |m| m.kind == UnitType::Mineral && m.minerals > 0)
            {
                self.issue(id, AtomicAction::Harvest(d));
            } else if let Some(a) =
                self.step_toward(&unit, |c| patches.iter().any(|m| m.manhattan(c) == 1))
            {
                self.issue(id, a);
            }
        }
        if exec.units[i].is_empty() {
            exec.status[i] = EntryStatus::Pending;
        }
    }

    /// Enemy to chase: nearest matching by Manhattan distance, then lowest id;
    /// any enemy when none of the requested type is left.
    fn pick_target(&self, from: Position, target_type: TargetType) -> Option<&Unit> {
        let key = |u: &&Unit| (u.pos.manhattan(from), u.id);
        self.enemies()
            .filter(|u| target_type.matches(u.kind))
            .min_by_key(key)
            .or_else(|| self.enemies().min_by_key(key))
    }

    fn attack(
        &mut self,
        exec: &mut ExecutorState,
        i: usize,
        attacker_type: UnitType,
        target_type: TargetType,
    ) {
        if self.enemies().next().is_none() {
            self.release_all(exec, i, EntryStatus::Done);
            return;
        }
        if !attacker_type.can_attack() {
            self.release_all(exec, i, EntryStatus::Failed);
            return;
        }
        if exec.units[i].is_empty() {
            let mut anchors: Vec<Position> = self
                .enemies()
                .filter(|u| target_type.matches(u.kind))
                .map(|u| u.pos)
                .collect();
            if anchors.is_empty() {
                anchors = self.enemies().map(|u| u.pos).collect();
            }
            match self.nearest_available(attacker_type, &anchors) {
                Some(id) => self.claim(exec, i, id),
                None => return,
            }
        }
        let id = exec.units[i][0];
        let unit = self.state.unit(id).expect("pruned").clone();
        if !unit.is_idle() {
            return;
        }
        let Some(target) = self.pick_target(unit.pos, target_type).cloned() else {
            return;
        };
        if let Some(a) = self.strike(&unit, Some(&target), target_type) {
            self.issue(id, a);
            return;
        }
        let r = self.state.stats.get(unit.kind).attack_range;
        let reach = |c: Position, t: Position| c.dist_sq(t) <= r * r;
        if let Some(a) = self.step_toward(&unit, |c| reach(c, target.pos)) {
            self.issue(id, a);
        } else {
            let spots: Vec<Position> = self.enemies().map(|e| e.pos).collect();
            if let Some(a) = self.step_toward(&unit, |c| spots.iter().any(|t| reach(c, *t))) {
                self.issue(id, a);
            }
        }
    }

    /// Attack order for an enemy in range: the preferred target, else one of
    /// the wanted type, else anything.
    fn strike(&self, unit: &Unit, target: Option<&Unit>, target_type: TargetType) -> Option<AtomicAction> {
        if let Some(t) = target {
            if self.state.in_attack_range(unit, t.pos) {
                return Some(AtomicAction::Attack(t.pos));
            }
        }
        let in_range: Vec<&Unit> = self
            .enemies()
            .filter(|e| self.state.in_attack_range(unit, e.pos))
            .collect();
        in_range
            .iter()
            .filter(|e| target_type.matches(e.kind))
            .chain(in_range.iter())
            .min_by_key(|e| (!target_type.matches(e.kind), unit.pos.dist_sq(e.pos), e.id))
            .map(|e| AtomicAction::Attack(e.pos))
    }

    fn deploy(&mut self, exec: &mut ExecutorState, i: usize, unit_type: UnitType, target: Position) {
        if !self.state.in_bounds(target) || !unit_type.is_mobile() {
            self.release_all(exec, i, EntryStatus::Failed);
            return;
        }
        if let Some(occ) = self.state.unit_at(target) {
            if !occ.kind.is_mobile() {
                self.release_all(exec, i, EntryStatus::Failed);
                return;
            }
        }
        if exec.units[i].is_empty() {
            match self.nearest_available(unit_type, &[target]) {
                Some(id) => self.claim(exec, i, id),
                None => return,
            }
        }
        let id = exec.units[i][0];
        let unit = self.state.unit(id).expect("pruned").clone();
        if unit.pos == target {
            self.release_all(exec, i, EntryStatus::Done);
            return;
        }
        if !unit.is_idle() {
            return;
        }
        if let Some(path) = self.nav.path(unit.pos, target) {
            if let Some(&d) = path.first() {
                let a = AtomicAction::Move(d);
                if self.state.is_legal(id, a) && !self.nav.is_blocked(unit.pos.step(d)) {
                    self.issue(id, a);
                }
            }
        }
    }

    fn build(&mut self, exec: &mut ExecutorState, i: usize, building: UnitType, site: Position) {
        if !self.state.in_bounds(site) || !UnitType::Worker.produces().contains(&building) {
            self.release_all(exec, i, EntryStatus::Failed);
            return;
        }
        if let Some(occ) = self.state.unit_at(site) {
            if !occ.kind.is_mobile() {
                self.release_all(exec, i, EntryStatus::Failed);
                return;
            }
        }
        let cost = self.state.stats.get(building).cost;
        if exec.units[i].is_empty() && self.stock >= cost {
            if let Some(id) = self.nearest_available(UnitType::Worker, &[site]) {
                self.claim(exec, i, id);
            }
        }
        // Later entries may not spend what the building needs, as long as
        // someone is left to build it.
        let has_worker = self.own_units().any(|u| u.kind == UnitType::Worker);
        let Some(&id) = exec.units[i].first() else {
            if has_worker {
                self.reserve(cost);
            }
            return;
        };
        let unit = self.state.unit(id).expect("pruned").clone();
        if !unit.is_idle() {
            self.reserve(cost);
            return;
        }
        if let Some(d) = unit.pos.direction_to(site) {
            let a = AtomicAction::Produce(d, building);
            if self.stock >= cost && self.state.is_legal(id, a) {
                self.stock -= cost;
                self.issue(id, a);
                self.release_all(exec, i, EntryStatus::Done);
            } else {
                self.reserve(cost);
            }
            return;
        }
        self.reserve(cost);
        self.nav.unblock(site);
        let step = self.step_toward(&unit, |c| c.manhattan(site) == 1);
        self.nav.block(site);
        if let Some(a) = step {
            self.issue(id, a);
        }
    }

    fn reserve(&mut self, amount: u32) {
        self.stock = self.stock.saturating_sub(amount);
    }

    fn produce(
        &mut self,
        exec: &mut ExecutorState,
        plan: &Plan,
        i: usize,
        unit_type: UnitType,
        preferred: Direction,
    ) {
        let Some(producer_kind) = unit_type.producer() else {
            self.release_all(exec, i, EntryStatus::Failed);
            return;
        };
        let producer_exists = self.own_units().any(|u| u.kind == producer_kind);
        if !producer_exists {
            let building = |a: &AtomicAction| matches!(a, AtomicAction::Produce(_, t) if *t == producer_kind);
            let coming = self
                .own_units()
                .any(|u| u.busy.is_some_and(|b| building(&b.action)))
                || self.out.values().any(building)
                || plan.entries.iter().enumerate().any(|(j, e)| {
                matches!(e, AbstractAction::BuildBuilding { building_type, .. } if *building_type == producer_kind)
                    && !exec.status[j].is_terminal()
            });
            if !coming {
                self.release_all(exec, i, EntryStatus::Failed);
            }
            return;
        }
        let cost = self.state.stats.get(unit_type).cost;
        if self.stock < cost {
            return;
        }
        let producer = self
            .own_units()
            .filter(|u| u.kind == producer_kind && self.is_available(u))
            .map(|u| (u.id, u.pos))
            .next();
        let Some((pid, ppos)) = producer else {
            return;
        };
        let dir = std::iter::once(preferred)
            .chain(Direction::ALL)
            .find(|&d| {
                let cell = ppos.step(d);
                !self.nav.is_blocked(cell) && self.state.is_free(cell)
            });
        if let Some(d) = dir {
            self.stock -= cost;
            self.issue(pid, AtomicAction::Produce(d, unit_type));
            self.release_all(exec, i, EntryStatus::Done);
        }
    }

    fn retaliate(&mut self) {
        let idle: Vec<Unit> = self
            .own_units()
            .filter(|u| u.kind.can_attack() && u.is_idle() && !self.out.contains_key(&u.id))
            .cloned()
            .collect();
        for u in idle {
            if let Some(a) = self.strike(&u, None, TargetType::Any) {
                self.issue(u.id, a);
            }
        }
    }
}
