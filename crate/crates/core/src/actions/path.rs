//! Breadth-first search on the 4-connected grid.

use std::collections::VecDeque;

use crate::engine::{AtomicAction, Direction, GameState, Position};

/// Blocked-cell mask over a state's grid.
#[derive(Clone, Debug)]
pub struct NavGrid {
    width: i32,
    height: i32,
    blocked: Vec<bool>,
}

impl NavGrid {
    /// Every occupied cell is blocked.
    pub fn new(state: &GameState) -> Self {
        let mut blocked = vec![false; (state.width * state.height) as usize];
        for u in &state.units {
            blocked[(u.pos.y * state.width + u.pos.x) as usize] = true;
        }
        NavGrid {
            width: state.width,
            height: state.height,
            blocked,
        }
    }

    /// Like [`NavGrid::new`], and also blocks cells that in-progress moves
    /// and productions are about to fill.
    pub fn with_reservations(state: &GameState) -> Self {
        let mut nav = Self::new(state);
        for u in &state.units {
            if let Some(b) = u.busy {
                if let AtomicAction::Move(d) | AtomicAction::Produce(d, _) = b.action {
                    nav.block(u.pos.step(d));
                }
            }
        }
        nav
    }

    fn idx(&self, p: Position) -> usize {
        (p.y * self.width + p.x) as usize
    }

    pub fn in_bounds(&self, p: Position) -> bool {
        p.x >= 0 && p.y >= 0 && p.x < self.width && p.y < self.height
    }

    pub fn is_blocked(&self, p: Position) -> bool {
        !self.in_bounds(p) || self.blocked[self.idx(p)]
    }

    pub fn block(&mut self, p: Position) {
        if self.in_bounds(p) {
            let i = self.idx(p);
            self.blocked[i] = true;
        }
    }

    pub fn unblock(&mut self, p: Position) {
        if self.in_bounds(p) {
            let i = self.idx(p);
            self.blocked[i] = false;
        }
    }

    /// Shortest path from `from` to `to`; `to` may be occupied. Neighbours are
    /// expanded in N, E, S, W order, which fixes the tie-break.
    pub fn path(&self, from: Position, to: Position) -> Option<Vec<Direction>> {
        if from == to {
            return Some(Vec::new());
        }
        if !self.in_bounds(to) {
            return None;
        }
        self.search(from, |p| p == to, |p| p == to)
            .map(|(_, dirs)| dirs)
    }

    /// Shortest path from `from` to the nearest free cell satisfying `goal`
    /// (possibly `from` itself, giving an empty path).
    pub fn path_to<F: Fn(Position) -> bool>(
        &self,
        from: Position,
        goal: F,
    ) -> Option<(Position, Vec<Direction>)> {
        if goal(from) {
            return Some((from, Vec::new()));
        }
        self.search(from, &goal, |_| false)
    }

    fn search<G, X>(&self, from: Position, goal: G, exempt: X) -> Option<(Position, Vec<Direction>)>
    where
        G: Fn(Position) -> bool,
        X: Fn(Position) -> bool,
    {
        let n = (self.width * self.height) as usize;
        let mut parent: Vec<Option<(usize, Direction)>> = vec![None; n];
        let mut seen = vec![false; n];
        let mut queue = VecDeque::new();
        seen[self.idx(from)] = true;
        queue.push_back(from);
        while let Some(cur) = queue.pop_front() {
            for d in Direction::ALL {
                let next = cur.step(d);
                if !self.in_bounds(next) {
                    continue;
                }
                let ni = self.idx(next);
                if seen[ni] || (self.blocked[ni] && !exempt(next)) {
                    continue;
                }
                seen[ni] = true;
                parent[ni] = Some((self.idx(cur), d));
                if goal(next) {
                    let mut dirs = Vec::new();
                    let mut at = ni;
                    while let Some((prev, dir)) = parent[at] {
                        dirs.push(dir);
                        at = prev;
                    }
                    dirs.reverse();
                    return Some((next, dirs));
                }
                queue.push_back(next);
            }
        }
        None
    }

    /// Path lengths from any of `sources` through free cells. Sources count as
    /// passable even when occupied. Unreached cells hold `u32::MAX`.
    pub fn distances(&self, sources: &[Position]) -> Vec<u32> {
        let n = (self.width * self.height) as usize;
        let mut dist = vec![u32::MAX; n];
        let mut queue = VecDeque::new();
        for &s in sources {
            if self.in_bounds(s) && dist[self.idx(s)] == u32::MAX {
                dist[self.idx(s)] = 0;
                queue.push_back(s);
            }
        }
        while let Some(cur) = queue.pop_front() {
            let dc = dist[self.idx(cur)];
            for d in Direction::ALL {
                let next = cur.step(d);
                if !self.in_bounds(next) || self.blocked[self.idx(next)] {
                    continue;
                }
                let ni = self.idx(next);
                if dist[ni] == u32::MAX {
                    dist[ni] = dc + 1;
                    queue.push_back(next);
                }
            }
        }
        dist
    }

    /// Path length for a unit standing on `at` (an occupied cell) given a
    /// distance field from [`NavGrid::distances`].
    pub fn unit_distance(&self, dist: &[u32], at: Position) -> u32 {
        if !self.in_bounds(at) {
            return u32::MAX;
        }
        let own = dist[self.idx(at)];
        if own != u32::MAX {
            return own;
        }
        Direction::ALL
            .iter()
            .map(|&d| at.step(d))
            .filter(|p| self.in_bounds(*p))
            .map(|p| dist[self.idx(p)])
            .filter(|&d| d != u32::MAX)
            .min()
            .map_or(u32::MAX, |d| d + 1)
    }
}

/// Shortest 4-connected path from `from` to `to`, other units being
/// obstacles and `to` exempt. `None` when unreachable.
pub fn pathfind(state: &GameState, from: Position, to: Position) -> Option<Vec<Direction>> {
    NavGrid::new(state).path(from, to)
}
