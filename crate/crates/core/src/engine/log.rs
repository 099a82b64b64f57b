//! Per-tick event records. One [`TickRecord`] per engine step, written as a
//! JSON line by [`EventLogWriter`].

use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use super::{AtomicAction, Owner, Player, Position, UnitId, UnitType};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IssuedAction {
    pub unit: UnitId,
    pub player: Player,
    pub kind: UnitType,
    pub pos: Position,
    pub action: AtomicAction,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CompletionStatus {
    Done,
    /// Move or spawn lost a conflict or found its cell taken.
    Cancelled,
    /// Attack on a cell no longer holding an enemy.
    Miss,
    /// Harvest on a depleted patch or return without an adjacent own base.
    Failed,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Completion {
    pub unit: UnitId,
    pub action: AtomicAction,
    pub status: CompletionStatus,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DamageEvent {
    pub attacker: UnitId,
    pub attacker_owner: Player,
    pub victim: UnitId,
    pub victim_owner: Player,
    pub victim_kind: UnitType,
    /// Hit points actually removed (never more than the victim had left).
    pub amount: i32,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Destroyed {
    pub unit: UnitId,
    pub owner: Owner,
    pub kind: UnitType,
    pub pos: Position,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Spawned {
    pub unit: UnitId,
    pub owner: Player,
    pub kind: UnitType,
    pub pos: Position,
}

/// Everything that happened during one step. `tick` is the tick reached.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TickRecord {
    pub tick: u32,
    pub issued: Vec<IssuedAction>,
    pub completions: Vec<Completion>,
    pub damage: Vec<DamageEvent>,
    pub destroyed: Vec<Destroyed>,
    pub spawned: Vec<Spawned>,
    /// Minerals delivered to each player's stock this tick.
    pub delivered: [u32; 2],
}

impl TickRecord {
    pub fn is_quiet(&self) -> bool {
        self.issued.is_empty()
            && self.completions.is_empty()
            && self.damage.is_empty()
            && self.destroyed.is_empty()
            && self.spawned.is_empty()
    }
}

/// Line-delimited JSON writer for tick records.
pub struct EventLogWriter<W: Write> {
    out: W,
    skip_quiet: bool,
}

impl<W: Write> EventLogWriter<W> {
    pub fn new(out: W) -> Self {
        Self {
            out,
            skip_quiet: false,
        }
    }

    /// Do not write ticks where nothing was issued or completed.
    pub fn skip_quiet(mut self, yes: bool) -> Self {
        self.skip_quiet = yes;
        self
    }

    pub fn write(&mut self, record: &TickRecord) -> io::Result<()> {
        if self.skip_quiet && record.is_quiet() {
            return Ok(());
        }
        serde_json::to_writer(&mut self.out, record)?;
        self.out.write_all(b"\n")
    }

    pub fn into_inner(self) -> W {
        self.out
    }
}

/// Reads records written by [`EventLogWriter`].
pub fn read_event_log(text: &str) -> Result<Vec<TickRecord>, serde_json::Error> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(serde_json::from_str)
        .collect()
}
