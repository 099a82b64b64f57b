use std::sync::Mutex;

use super::*;
use crate::actions::{validate_plan, AbstractKind, IssueKind};
use crate::engine::{load_map, MapId};
use crate::remote::{RemoteError, TextGenerator};
use crate::strategy::enumerate_space;

fn initial() -> GameState {
    load_map(MapId::BasesWorkers8x8, 0)
}

fn plan_for(s: &Strategy, tips: &[ExpertTip]) -> Plan {
    rule_plan(&initial(), Player::P1, s, tips, &PlannerConfig::default())
}

fn strat(rec: &str) -> Strategy {
    rec.parse().unwrap()
}

#[test]
fn worker_rush_strategy_maps_to_expected_entries() {
    let s = strat("economy=high barracks=none composition=worker aggression=true attack_target=closest defense=none");
    for tips in [Vec::new(), default_tips()] {
        let plan = plan_for(&s, &tips);
        assert!(plan.entries.contains(&AbstractAction::HarvestMineral { worker_count: 3 }));
        assert!(plan
            .entries
            .iter()
            .any(|e| matches!(e, AbstractAction::ProduceUnit { unit_type: UnitType::Worker, .. })));
        assert!(plan.entries.contains(&AbstractAction::AttackEnemy {
            attacker_type: UnitType::Worker,
            target_type: TargetType::Any,
        }));
        assert_eq!(plan.count(AbstractKind::BuildBuilding), 0);
        assert_eq!(plan.count(AbstractKind::DeployUnit), 0);
    }
}

#[test]
fn passive_full_defense_deploys_four_and_never_attacks() {
    for s in enumerate_space()
        .into_iter()
        .filter(|s| !s.aggression && s.defense == Defense::Full)
    {
        for tips in [Vec::new(), default_tips()] {
            let plan = plan_for(&s, &tips);
            assert_eq!(plan.count(AbstractKind::DeployUnit), 4, "{s}");
            assert_eq!(plan.count(AbstractKind::AttackEnemy), 0, "{s}");
        }
    }
}

#[test]
fn mapping_table_counts() {
    let s = strat("economy=med barracks=early composition=mixed aggression=true attack_target=buildings defense=perimeter");
    let plan = plan_for(&s, &[]);
    assert_eq!(plan.entries[0].kind(), AbstractKind::BuildBuilding);
    assert_eq!(plan.entries[1], AbstractAction::HarvestMineral { worker_count: 2 });
    assert_eq!(plan.count(AbstractKind::ProduceUnit), 2);
    assert_eq!(plan.count(AbstractKind::AttackEnemy), 3);
    assert_eq!(plan.count(AbstractKind::DeployUnit), 2);
    assert!(plan.entries.iter().all(|e| !matches!(
        e,
        AbstractAction::AttackEnemy { target_type, .. } if *target_type != TargetType::Unit(UnitType::Base)
    )));
    // Stock 5 covers an early barracks but not a late one.
    let late = Strategy {
        barracks: BarracksTiming::Late,
        ..s
    };
    assert_eq!(plan_for(&late, &[]).count(AbstractKind::BuildBuilding), 0);
}

#[test]
fn planning_is_deterministic() {
    let tips = default_tips();
    for s in enumerate_space().iter().step_by(13) {
        assert_eq!(plan_for(s, &tips), plan_for(s, &tips));
    }
}

#[test]
fn every_strategy_gets_a_valid_nonempty_plan() {
    let obs = initial();
    let tips = default_tips();
    for s in enumerate_space() {
        for player in Player::BOTH {
            let plan = rule_plan(&obs, player, &s, &tips, &PlannerConfig::default());
            assert!(!plan.is_empty(), "{s}");
            let issues: Vec<_> = validate_plan(&plan, &obs, player)
                .into_iter()
                .filter(|i| i.kind != IssueKind::Unaffordable)
                .collect();
            assert!(issues.is_empty(), "{s}: {issues:?}");
        }
    }
}

#[test]
fn aggression_tip_never_reduces_attacks() {
    let tip: Vec<ExpertTip> = default_tips()
        .into_iter()
        .filter(|t| t.dimension == "aggression")
        .collect();
    for s in enumerate_space() {
        let without = plan_for(&s, &[]).count(AbstractKind::AttackEnemy);
        let with = plan_for(&s, &tip).count(AbstractKind::AttackEnemy);
        assert!(with >= without, "{s}");
        if s.aggression {
            assert_eq!(with, without + 4, "{s}");
        }
    }
}

#[test]
fn economy_aggression_and_composition_each_change_the_plan() {
    let tips = default_tips();
    let space = enumerate_space();
    for s in &space {
        let base = plan_for(s, &tips);
        for other in &space {
            let same_except = |dim: usize| {
                (0..6).all(|d| d == dim || s.value_name(d) == other.value_name(d))
                    && s.value_name(dim) != other.value_name(dim)
            };
            if same_except(0) || same_except(2) || same_except(3) {
                assert_ne!(base, plan_for(other, &tips), "{s} vs {other}");
            }
        }
    }
}

#[test]
fn seats_get_mirrored_plans() {
    let obs = initial();
    let tips = default_tips();
    for s in enumerate_space().iter().step_by(11) {
        let p1 = rule_plan(&obs, Player::P1, s, &tips, &PlannerConfig::default());
        let p2 = rule_plan(&obs, Player::P2, s, &tips, &PlannerConfig::default());
        assert_eq!(p1.len(), p2.len());
        for (a, b) in p1.entries.iter().zip(&p2.entries) {
            match (a, b) {
                (
                    AbstractAction::BuildBuilding { site: x, .. },
                    AbstractAction::BuildBuilding { site: y, .. },
                )
                | (
                    AbstractAction::DeployUnit { target: x, .. },
                    AbstractAction::DeployUnit { target: y, .. },
                ) => assert_eq!(obs.rotate_pos(*x), *y),
                (
                    AbstractAction::ProduceUnit { direction: x, .. },
                    AbstractAction::ProduceUnit { direction: y, .. },
                ) => assert_eq!(x.opposite(), *y),
                _ => assert_eq!(a, b),
            }
        }
    }
}

#[test]
fn there_is_one_tip_per_dimension_value() {
    let tips = default_tips();
    assert_eq!(tips.len(), 3 + 3 + 5 + 2 + 3 + 3);
    for s in enumerate_space() {
        let matching = tips_for(&tips, &s);
        assert_eq!(matching.len(), 6, "{s}");
    }
}

#[test]
fn invert_keeps_strategies_valid() {
    for s in enumerate_space() {
        let t = invert_strategy(&s);
        assert!(t.is_valid());
        assert_ne!(t.aggression, s.aggression);
        assert_eq!(invert_strategy(&t), s);
    }
}

#[test]
fn prompt_sections() {
    let obs = initial();
    let s = Strategy::default();
    let bundle = assemble_prompt(&obs, Player::P1, Some(&s), &[], ENV_INFO, 10_000).unwrap();
    assert!(bundle.tips.is_none());
    assert!(!bundle.user_text().contains("Tips:"));
    // Header, column line, four unit rows, mineral line.
    let rows: Vec<&str> = bundle.observation.lines().collect();
    assert_eq!(rows.len(), 1 + 1 + 4 + 1);
    assert_eq!(rows.iter().filter(|r| r.starts_with("own ")).count(), 2);
    assert_eq!(rows.iter().filter(|r| r.starts_with("enemy ")).count(), 2);

    let tips = default_tips();
    let with = assemble_prompt(&obs, Player::P1, Some(&s), &tips_for_owned(&tips, &s), ENV_INFO, 10_000).unwrap();
    assert_eq!(with.tips.as_deref().unwrap().lines().count(), 6);
}

fn tips_for_owned(tips: &[ExpertTip], s: &Strategy) -> Vec<ExpertTip> {
    tips_for(tips, s).into_iter().cloned().collect()
}

#[test]
fn prompt_rendering_distinguishes_strategies() {
    let obs = initial();
    let mut seen = std::collections::BTreeSet::new();
    for s in enumerate_space().iter().step_by(3) {
        let b = assemble_prompt(&obs, Player::P1, Some(s), &[], ENV_INFO, 10_000).unwrap();
        assert!(seen.insert(b.user_text()));
    }
}

#[test]
fn prompt_budget_compacts_then_fails() {
    let obs = initial();
    let full = assemble_prompt(&obs, Player::P1, None, &[], ENV_INFO, 10_000).unwrap();
    let tight = assemble_prompt(&obs, Player::P1, None, &[], ENV_INFO, full.len() - 1).unwrap();
    assert!(tight.len() < full.len());
    assert!(tight.len() < full.len());
    assert!(matches!(
        assemble_prompt(&obs, Player::P1, None, &[], ENV_INFO, 50),
        Err(PromptError::Budget { .. })
    ));
}

#[test]
fn parse_plan_cases() {
    let text = "\
```
1. HARVEST_MINERAL worker_count=2
- PRODUCE_UNIT unit_type=Worker direction=S
ATTACK_ENEMY attacker_type=Worker target_type=Any
```";
    let parsed = parse_plan(text).unwrap();
    assert_eq!(parsed.plan.len(), 3);
    assert!(parsed.warnings.is_empty());

    let text = "Here is my plan:\nHARVEST_MINERAL worker_count=two\nHARVEST_MINERAL worker_count=1\nDEPLOY_UNIT unit_type=Light target=3,3\n";
    let parsed = parse_plan(text).unwrap();
    assert_eq!(parsed.plan.len(), 2);
    assert_eq!(parsed.warnings.len(), 1);

    assert_eq!(parse_plan(""), Err(PlanParseError::Empty(0)));
}

struct Scripted {
    replies: Mutex<Vec<Result<String, RemoteError>>>,
    calls: Mutex<u32>,
}

impl Scripted {
    fn new(replies: Vec<Result<String, RemoteError>>) -> Self {
        Scripted {
            replies: Mutex::new(replies),
            calls: Mutex::new(0),
        }
    }
}

impl TextGenerator for Scripted {
    fn complete(&self, _system: &str, _user: &str) -> Result<String, RemoteError> {
        *self.calls.lock().unwrap() += 1;
        let mut r = self.replies.lock().unwrap();
        if r.is_empty() {
            Err(RemoteError::Transport("timeout".into()))
        } else {
            r.remove(0)
        }
    }
}

#[test]
fn text_planner_uses_valid_replies() {
    let gen = Scripted::new(vec![Ok("HARVEST_MINERAL worker_count=1\nDEPLOY_UNIT unit_type=Light target=9,9\n".into())]);
    let planner = TextPlanner::new(gen, PlannerConfig::default());
    let plan = planner.plan(&initial(), Player::P1, &Strategy::default(), &[]);
    // The off-map deploy is dropped by validation.
    assert_eq!(plan.entries, vec![AbstractAction::HarvestMineral { worker_count: 1 }]);
}

#[test]
fn text_planner_retries_once_then_falls_back() {
    let s = Strategy::default();
    let expected = plan_for(&s, &[]);

    let gen = Scripted::new(vec![
        Err(RemoteError::Transport("timeout".into())),
        Ok("ATTACK_ENEMY attacker_type=Worker target_type=Any".into()),
    ]);
    let planner = TextPlanner::new(gen, PlannerConfig::default());
    let plan = planner.plan(&initial(), Player::P1, &s, &[]);
    assert_eq!(plan.count(AbstractKind::AttackEnemy), 1);
    assert_eq!(*planner.generator.calls.lock().unwrap(), 2);

    let gen = Scripted::new(vec![]);
    let planner = TextPlanner::new(gen, PlannerConfig::default());
    assert_eq!(planner.plan(&initial(), Player::P1, &s, &[]), expected);
    assert_eq!(*planner.generator.calls.lock().unwrap(), 2);

    let gen = Scripted::new(vec![Ok("no plan here".into())]);
    let planner = TextPlanner::new(gen, PlannerConfig::default());
    assert_eq!(planner.plan(&initial(), Player::P1, &s, &[]), expected);
}

#[test]
fn text_planner_counter_strategy() {
    let s = Strategy::default();
    let gen = Scripted::new(vec![Ok(
        "economy=high barracks=early composition=heavy aggression=true attack_target=workers defense=none".into(),
    )]);
    let planner = TextPlanner::new(gen, PlannerConfig::default());
    assert_eq!(planner.counter_strategy(&s).composition, Composition::Heavy);
    let planner = TextPlanner::new(Scripted::new(vec![]), PlannerConfig::default());
    assert_eq!(planner.counter_strategy(&s), invert_strategy(&s));
    assert_eq!(RulePlanner::default().counter_strategy(&s), invert_strategy(&s));
}
