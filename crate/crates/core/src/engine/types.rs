use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Grid cell. `x` is the column, `y` the row, both 0-based.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Position {
    pub x: i32,
    pub y: i32,
}

impl Position {
    pub const fn new(x: i32, y: i32) -> Self {
        Self { x, y }
    }

    pub fn step(self, dir: Direction) -> Position {
        let (dx, dy) = dir.delta();
        Position::new(self.x + dx, self.y + dy)
    }

    pub fn manhattan(self, other: Position) -> u32 {
        self.x.abs_diff(other.x) + self.y.abs_diff(other.y)
    }

    pub fn dist_sq(self, other: Position) -> i32 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }

    /// Direction of a 4-adjacent neighbour, if `other` is one.
    pub fn direction_to(self, other: Position) -> Option<Direction> {
        Direction::ALL.into_iter().find(|d| self.step(*d) == other)
    }
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.x, self.y)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Direction {
    N,
    E,
    S,
    W,
}

impl Direction {
    /// Canonical tie-break order.
    pub const ALL: [Direction; 4] = [Direction::N, Direction::E, Direction::S, Direction::W];

    pub fn delta(self) -> (i32, i32) {
        match self {
            Direction::N => (0, -1),
            Direction::E => (1, 0),
            Direction::S => (0, 1),
            Direction::W => (-1, 0),
        }
    }

    pub fn opposite(self) -> Direction {
        match self {
            Direction::N => Direction::S,
            Direction::E => Direction::W,
            Direction::S => Direction::N,
            Direction::W => Direction::E,
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Direction::N => "N",
            Direction::E => "E",
            Direction::S => "S",
            Direction::W => "W",
        };
        f.write_str(s)
    }
}

impl FromStr for Direction {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().as_str() {
            "N" | "NORTH" | "UP" => Ok(Direction::N),
            "E" | "EAST" | "RIGHT" => Ok(Direction::E),
            "S" | "SOUTH" | "DOWN" => Ok(Direction::S),
            "W" | "WEST" | "LEFT" => Ok(Direction::W),
            other => Err(format!("unknown direction `{other}`")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Player {
    P1,
    P2,
}

impl Player {
    pub const BOTH: [Player; 2] = [Player::P1, Player::P2];

    pub fn index(self) -> usize {
        match self {
            Player::P1 => 0,
            Player::P2 => 1,
        }
    }

    pub fn opponent(self) -> Player {
        match self {
            Player::P1 => Player::P2,
            Player::P2 => Player::P1,
        }
    }
}

impl fmt::Display for Player {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Player::P1 => f.write_str("P1"),
            Player::P2 => f.write_str("P2"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Owner {
    P1,
    P2,
    Neutral,
}

impl Owner {
    pub fn player(self) -> Option<Player> {
        match self {
            Owner::P1 => Some(Player::P1),
            Owner::P2 => Some(Player::P2),
            Owner::Neutral => None,
        }
    }

    pub fn swapped(self) -> Owner {
        match self {
            Owner::P1 => Owner::P2,
            Owner::P2 => Owner::P1,
            Owner::Neutral => Owner::Neutral,
        }
    }
}

impl From<Player> for Owner {
    fn from(p: Player) -> Self {
        match p {
            Player::P1 => Owner::P1,
            Player::P2 => Owner::P2,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum UnitType {
    Base,
    Barracks,
    Worker,
    Light,
    Heavy,
    Ranged,
    Mineral,
}

impl UnitType {
    pub const ALL: [UnitType; 7] = [
        UnitType::Base,
        UnitType::Barracks,
        UnitType::Worker,
        UnitType::Light,
        UnitType::Heavy,
        UnitType::Ranged,
        UnitType::Mineral,
    ];

    pub const COMBAT: [UnitType; 3] = [UnitType::Light, UnitType::Heavy, UnitType::Ranged];

    pub fn is_building(self) -> bool {
        matches!(self, UnitType::Base | UnitType::Barracks)
    }

    pub fn is_mobile(self) -> bool {
        matches!(
            self,
            UnitType::Worker | UnitType::Light | UnitType::Heavy | UnitType::Ranged
        )
    }

    pub fn can_attack(self) -> bool {
        self.is_mobile()
    }

    /// Unit types this type is able to produce.
    pub fn produces(self) -> &'static [UnitType] {
        match self {
            UnitType::Base => &[UnitType::Worker],
            UnitType::Barracks => &UnitType::COMBAT,
            UnitType::Worker => &[UnitType::Barracks],
            _ => &[],
        }
    }

    /// The building type that produces `self`, if any.
    pub fn producer(self) -> Option<UnitType> {
        match self {
            UnitType::Worker => Some(UnitType::Base),
            UnitType::Light | UnitType::Heavy | UnitType::Ranged => Some(UnitType::Barracks),
            UnitType::Barracks => Some(UnitType::Worker),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            UnitType::Base => "Base",
            UnitType::Barracks => "Barracks",
            UnitType::Worker => "Worker",
            UnitType::Light => "Light",
            UnitType::Heavy => "Heavy",
            UnitType::Ranged => "Ranged",
            UnitType::Mineral => "Mineral",
        }
    }
}

impl fmt::Display for UnitType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for UnitType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower = s.trim().to_ascii_lowercase();
        UnitType::ALL
            .into_iter()
            .find(|t| t.name().to_ascii_lowercase() == lower)
            .ok_or_else(|| format!("unknown unit type `{s}`"))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct UnitId(pub u32);

impl fmt::Display for UnitId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

/// Lowest-level per-unit command.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum AtomicAction {
    Noop,
    Move(Direction),
    Harvest(Direction),
    Return(Direction),
    Produce(Direction, UnitType),
    Attack(Position),
}

impl AtomicAction {
    pub fn kind(&self) -> ActionKind {
        match self {
            AtomicAction::Noop => ActionKind::Noop,
            AtomicAction::Move(_) => ActionKind::Move,
            AtomicAction::Harvest(_) => ActionKind::Harvest,
            AtomicAction::Return(_) => ActionKind::Return,
            AtomicAction::Produce(..) => ActionKind::Produce,
            AtomicAction::Attack(_) => ActionKind::Attack,
        }
    }
}

/// Action type without parameters; used for histograms.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ActionKind {
    Noop,
    Move,
    Harvest,
    Return,
    Produce,
    Attack,
}

impl ActionKind {
    pub const ALL: [ActionKind; 6] = [
        ActionKind::Noop,
        ActionKind::Move,
        ActionKind::Harvest,
        ActionKind::Return,
        ActionKind::Produce,
        ActionKind::Attack,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            ActionKind::Noop => "noop",
            ActionKind::Move => "move",
            ActionKind::Harvest => "harvest",
            ActionKind::Return => "return",
            ActionKind::Produce => "produce",
            ActionKind::Attack => "attack",
        }
    }
}

/// An atomic action in progress.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Busy {
    pub action: AtomicAction,
    pub remaining: u32,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Unit {
    pub id: UnitId,
    pub owner: Owner,
    pub kind: UnitType,
    pub pos: Position,
    pub hp: i32,
    /// Minerals held; workers only, 0 or 1.
    pub carrying: u32,
    /// Minerals left in a patch; minerals only.
    pub minerals: u32,
    pub busy: Option<Busy>,
}

impl Unit {
    pub fn is_idle(&self) -> bool {
        self.busy.is_none()
    }

    pub fn player(&self) -> Option<Player> {
        self.owner.player()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Outcome {
    Ongoing,
    Win(Player),
    Draw,
}
