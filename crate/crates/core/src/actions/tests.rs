use std::collections::{BTreeMap, VecDeque};

use super::*;
use crate::engine::{
    load_map, parse_text_map, ActionKind, AtomicAction, EngineConfig, MapId, Owner, UnitId,
};

fn state_from(text: &str) -> GameState {
    parse_text_map(text, &EngineConfig::default(), 2000, 25, 1).unwrap()
}

fn id_at(s: &GameState, x: i32, y: i32) -> UnitId {
    s.unit_at(Position::new(x, y)).expect("unit present").id
}

/// Plain BFS path length over free cells, target exempt.
fn bfs_len(s: &GameState, from: Position, to: Position) -> Option<usize> {
    let mut seen = BTreeMap::new();
    let mut q = VecDeque::new();
    seen.insert((from.x, from.y), 0usize);
    q.push_back(from);
    while let Some(p) = q.pop_front() {
        let d = seen[&(p.x, p.y)];
        if p == to {
            return Some(d);
        }
        for (dx, dy) in [(0, -1), (1, 0), (0, 1), (-1, 0)] {
            let n = Position::new(p.x + dx, p.y + dy);
            if !s.in_bounds(n) || seen.contains_key(&(n.x, n.y)) {
                continue;
            }
            if n != to && !s.is_free(n) {
                continue;
            }
            seen.insert((n.x, n.y), d + 1);
            q.push_back(n);
        }
    }
    None
}

fn run(
    s: &mut GameState,
    player: Player,
    plan: &Plan,
    exec: &mut ExecutorState,
    ticks: u32,
) {
    let cfg = ExecutorConfig::default();
    for _ in 0..ticks {
        let a = tick_controller(s, player, plan, exec, &cfg);
        s.apply(&a).unwrap();
    }
}

#[test]
fn pathfind_to_self_is_empty() {
    let s = load_map(MapId::BasesWorkers8x8, 0);
    let p = Position::new(4, 4);
    assert_eq!(pathfind(&s, p, p), Some(vec![]));
}

#[test]
fn pathfind_straight_corridor() {
    let s = state_from(
        "\
kkkkk
.....
kkkkk",
    );
    let from = Position::new(0, 1);
    let to = Position::new(3, 1);
    let path = pathfind(&s, from, to).unwrap();
    assert_eq!(path, vec![Direction::E, Direction::E, Direction::E]);
    assert_eq!(Some(path.len()), bfs_len(&s, from, to));
}

#[test]
fn pathfind_walled_target_is_unreachable() {
    let s = state_from(
        "\
.....
..k..
.k.k.
..k..
.....",
    );
    assert_eq!(pathfind(&s, Position::new(0, 0), Position::new(2, 2)), None);
}

#[test]
fn pathfind_matches_bfs_length_on_maze() {
    let s = state_from(
        "\
......
.kkkk.
.k....
.k.kkk
.k....
......",
    );
    for (to_x, to_y) in [(5, 4), (2, 2), (4, 2), (0, 5)] {
        let from = Position::new(0, 0);
        let to = Position::new(to_x, to_y);
        let path = pathfind(&s, from, to).unwrap();
        assert_eq!(Some(path.len()), bfs_len(&s, from, to));
        let mut at = from;
        for d in &path {
            at = at.step(*d);
        }
        assert_eq!(at, to);
    }
}

#[test]
fn empty_plan_issues_nothing() {
    let s = load_map(MapId::BasesWorkers8x8, 0);
    let plan = Plan::default();
    let mut exec = ExecutorState::new(&plan);
    let a = tick_controller(&s, Player::P1, &plan, &mut exec, &ExecutorConfig::default());
    assert!(a.is_empty());
}

#[test]
fn harvest_entry_raises_stock_within_a_cycle() {
    let mut s = load_map(MapId::BasesWorkers8x8, 0);
    let plan = Plan::new(vec![AbstractAction::HarvestMineral { worker_count: 1 }], 0);
    let mut exec = ExecutorState::new(&plan);
    let before = s.stock(Player::P1);
    // Worker is adjacent to both the patch and the base: one harvest plus one return.
    run(&mut s, Player::P1, &plan, &mut exec, 40);
    assert!(s.stock(Player::P1) > before);
    assert_eq!(exec.status[0], EntryStatus::Active);
}

#[test]
fn attack_entry_strikes_adjacent_enemy() {
    let s = state_from(
        "\
.....
.lW..
.....",
    );
    let plan = Plan::new(
        vec![AbstractAction::AttackEnemy {
            attacker_type: UnitType::Light,
            target_type: TargetType::Any,
        }],
        0,
    );
    let mut exec = ExecutorState::new(&plan);
    let a = tick_controller(&s, Player::P1, &plan, &mut exec, &ExecutorConfig::default());
    assert_eq!(
        a.get(&id_at(&s, 1, 1)),
        Some(&AtomicAction::Attack(Position::new(2, 1)))
    );
}

#[test]
fn attack_entry_done_when_no_enemies() {
    let s = state_from(
        "\
.....
.l...
.....",
    );
    let plan = Plan::new(
        vec![AbstractAction::AttackEnemy {
            attacker_type: UnitType::Light,
            target_type: TargetType::Any,
        }],
        0,
    );
    let mut exec = ExecutorState::new(&plan);
    tick_controller(&s, Player::P1, &plan, &mut exec, &ExecutorConfig::default());
    assert_eq!(exec.status[0], EntryStatus::Done);
}

#[test]
fn attack_entry_closes_distance() {
    let mut s = state_from(
        "\
l......
.......
......W",
    );
    let plan = Plan::new(
        vec![AbstractAction::AttackEnemy {
            attacker_type: UnitType::Light,
            target_type: TargetType::Unit(UnitType::Worker),
        }],
        0,
    );
    let mut exec = ExecutorState::new(&plan);
    run(&mut s, Player::P1, &plan, &mut exec, 200);
    assert!(s.units_of(Player::P2).next().is_none());
    assert_eq!(exec.status[0], EntryStatus::Done);
}

#[test]
fn deploy_entry_arrives() {
    let mut s = state_from(
        "\
l....
.....
.....
....W",
    );
    let target = Position::new(3, 1);
    let plan = Plan::new(
        vec![AbstractAction::DeployUnit {
            unit_type: UnitType::Light,
            target,
        }],
        0,
    );
    let mut exec = ExecutorState::new(&plan);
    let cfg = ExecutorConfig {
        auto_retaliate: false,
    };
    for _ in 0..60 {
        let a = tick_controller(&s, Player::P1, &plan, &mut exec, &cfg);
        s.apply(&a).unwrap();
    }
    assert_eq!(s.units_of(Player::P1).next().unwrap().pos, target);
    assert_eq!(exec.status[0], EntryStatus::Done);
}

#[test]
fn build_then_produce() {
    let mut s = load_map(MapId::BasesWorkers8x8, 0);
    s.resources = [20, 5];
    let plan = Plan::new(
        vec![
            AbstractAction::BuildBuilding {
                building_type: UnitType::Barracks,
                site: Position::new(3, 3),
            },
            AbstractAction::ProduceUnit {
                unit_type: UnitType::Light,
                direction: Direction::S,
            },
        ],
        0,
    );
    let mut exec = ExecutorState::new(&plan);
    run(&mut s, Player::P1, &plan, &mut exec, 400);
    let kinds: Vec<UnitType> = s.units_of(Player::P1).map(|u| u.kind).collect();
    assert!(kinds.contains(&UnitType::Barracks));
    assert!(kinds.contains(&UnitType::Light));
    assert_eq!(exec.status, vec![EntryStatus::Done, EntryStatus::Done]);
}

#[test]
fn produce_without_producer_fails() {
    let s = load_map(MapId::BasesWorkers8x8, 0);
    let plan = Plan::new(
        vec![AbstractAction::ProduceUnit {
            unit_type: UnitType::Heavy,
            direction: Direction::S,
        }],
        0,
    );
    let mut exec = ExecutorState::new(&plan);
    tick_controller(&s, Player::P1, &plan, &mut exec, &ExecutorConfig::default());
    assert_eq!(exec.status[0], EntryStatus::Failed);
}

#[test]
fn produce_worker_from_base() {
    let s = load_map(MapId::BasesWorkers8x8, 0);
    let plan = Plan::new(
        vec![AbstractAction::ProduceUnit {
            unit_type: UnitType::Worker,
            direction: Direction::S,
        }],
        0,
    );
    let mut exec = ExecutorState::new(&plan);
    let a = tick_controller(&s, Player::P1, &plan, &mut exec, &ExecutorConfig::default());
    assert_eq!(
        a.get(&id_at(&s, 2, 1)),
        Some(&AtomicAction::Produce(Direction::S, UnitType::Worker))
    );
    assert_eq!(exec.status[0], EntryStatus::Done);
}

#[test]
fn one_unit_serves_one_entry() {
    let s = load_map(MapId::BasesWorkers8x8, 0);
    let plan = Plan::new(
        vec![
            AbstractAction::HarvestMineral { worker_count: 1 },
            AbstractAction::DeployUnit {
                unit_type: UnitType::Worker,
                target: Position::new(4, 4),
            },
        ],
        0,
    );
    let mut exec = ExecutorState::new(&plan);
    let a = tick_controller(&s, Player::P1, &plan, &mut exec, &ExecutorConfig::default());
    assert_eq!(a.len(), 1);
    assert_eq!(exec.status, vec![EntryStatus::Active, EntryStatus::Pending]);
}

#[test]
fn executor_is_deterministic_and_legal() {
    let plan_text = "\
HARVEST_MINERAL worker_count=2
BUILD_BUILDING building_type=Barracks site=3,3
PRODUCE_UNIT unit_type=Worker direction=S
PRODUCE_UNIT unit_type=Light direction=S
ATTACK_ENEMY attacker_type=Light target_type=Any
ATTACK_ENEMY attacker_type=Worker target_type=Base
DEPLOY_UNIT unit_type=Light target=4,4
";
    let entries = plan_text
        .lines()
        .map(|l| AbstractAction::from_record(l).unwrap())
        .collect();
    let plan = Plan::new(entries, 0);
    let cfg = ExecutorConfig::default();
    let trace = |seed: u64| {
        let mut s = load_map(MapId::BasesWorkers8x8, seed);
        let mut e1 = ExecutorState::new(&plan);
        let mut e2 = ExecutorState::new(&plan);
        let mut out = Vec::new();
        for _ in 0..300 {
            let mut a = tick_controller(&s, Player::P1, &plan, &mut e1, &cfg);
            for (id, act) in &a {
                assert!(s.is_legal(*id, *act), "{id:?} {act:?}");
            }
            let b = tick_controller(&s, Player::P2, &plan, &mut e2, &cfg);
            for (id, act) in &b {
                assert!(s.is_legal(*id, *act), "{id:?} {act:?}");
            }
            out.push(a.clone());
            a.extend(b);
            s.apply(&a).unwrap();
        }
        out
    };
    assert_eq!(trace(5), trace(5));
}

#[test]
fn retaliation_can_be_disabled() {
    let s = state_from(
        "\
.....
.lW..
.....",
    );
    let plan = Plan::default();
    let mut exec = ExecutorState::new(&plan);
    let on = tick_controller(&s, Player::P1, &plan, &mut exec, &ExecutorConfig::default());
    assert_eq!(on.len(), 1);
    let off = tick_controller(
        &s,
        Player::P1,
        &plan,
        &mut exec,
        &ExecutorConfig {
            auto_retaliate: false,
        },
    );
    assert!(off.is_empty());
}

#[test]
fn record_roundtrip() {
    let entries = vec![
        AbstractAction::DeployUnit {
            unit_type: UnitType::Ranged,
            target: Position::new(2, 5),
        },
        AbstractAction::HarvestMineral { worker_count: 3 },
        AbstractAction::BuildBuilding {
            building_type: UnitType::Barracks,
            site: Position::new(4, 2),
        },
        AbstractAction::ProduceUnit {
            unit_type: UnitType::Heavy,
            direction: Direction::W,
        },
        AbstractAction::AttackEnemy {
            attacker_type: UnitType::Light,
            target_type: TargetType::Unit(UnitType::Base),
        },
    ];
    for e in entries {
        assert_eq!(AbstractAction::from_record(&e.to_record()), Ok(e));
    }
    assert!(AbstractAction::from_record("HARVEST_MINERAL").is_err());
    assert!(AbstractAction::from_record("FLY_AWAY x=1").is_err());
}

#[test]
fn validate_plan_flags_problems() {
    let s = load_map(MapId::BasesWorkers8x8, 0);
    let off = Plan::new(
        vec![AbstractAction::DeployUnit {
            unit_type: UnitType::Light,
            target: Position::new(9, 9),
        }],
        0,
    );
    let issues = validate_plan(&off, &s, Player::P1);
    assert_eq!(issues.len(), 1);
    assert_eq!(issues[0].kind, IssueKind::OutOfBounds);

    let mut broke = s.clone();
    broke.resources = [0, 0];
    let build = Plan::new(
        vec![AbstractAction::BuildBuilding {
            building_type: UnitType::Barracks,
            site: Position::new(3, 3),
        }],
        0,
    );
    let issues = validate_plan(&build, &broke, Player::P1);
    assert_eq!(issues[0].kind, IssueKind::Unaffordable);

    let good = Plan::new(
        vec![
            AbstractAction::HarvestMineral { worker_count: 1 },
            AbstractAction::ProduceUnit {
                unit_type: UnitType::Worker,
                direction: Direction::S,
            },
        ],
        0,
    );
    assert!(validate_plan(&good, &s, Player::P1).is_empty());
}

#[test]
fn busy_units_are_left_alone() {
    let s = load_map(MapId::BasesWorkers8x8, 0);
    let plan = Plan::new(vec![AbstractAction::HarvestMineral { worker_count: 1 }], 0);
    let mut exec = ExecutorState::new(&plan);
    let cfg = ExecutorConfig::default();
    let a = tick_controller(&s, Player::P1, &plan, &mut exec, &cfg);
    let s2 = s.step(&a).unwrap();
    let w = id_at(&s, 1, 1);
    assert_eq!(
        s2.unit(w).unwrap().busy.map(|b| b.action.kind()),
        Some(ActionKind::Harvest)
    );
    let b = tick_controller(&s2, Player::P1, &plan, &mut exec, &cfg);
    assert!(!b.contains_key(&w));
    assert!(s2.units.iter().all(|u| u.owner != Owner::Neutral || u.busy.is_none()));
}
