//! Expert tips: one per strategy dimension value, each pairing a directive
//! for text prompts with the equivalent planner adjustment.

use serde::{Deserialize, Serialize};

use super::Sketch;
use crate::actions::{AbstractKind, TargetType};
use crate::engine::UnitType;
use crate::strategy::{Strategy, DIMENSIONS};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum TipEffect {
    /// More entries of one abstract action type. Harvest adds workers to
    /// the harvest entry instead of another entry.
    Add { kind: AbstractKind, count: u32 },
    /// Produce workers until the harvest entry can be fully staffed.
    StaffHarvest,
    /// Override the attack entries' target type.
    Target(TargetType),
}

impl TipEffect {
    pub fn kind(&self) -> AbstractKind {
        match self {
            TipEffect::Add { kind, .. } => *kind,
            TipEffect::StaffHarvest => AbstractKind::ProduceUnit,
            TipEffect::Target(_) => AbstractKind::AttackEnemy,
        }
    }

    pub(crate) fn apply(&self, sk: &mut Sketch, workers: u32) {
        match self {
            TipEffect::Add { kind, count } => match kind {
                AbstractKind::HarvestMineral => sk.harvesters += count,
                AbstractKind::ProduceUnit => sk.production += count,
                AbstractKind::AttackEnemy => sk.attackers += count,
                AbstractKind::DeployUnit => sk.posts += count,
                AbstractKind::BuildBuilding => {}
            },
            TipEffect::StaffHarvest => {
                sk.staff_workers += sk.harvesters.saturating_sub(workers + sk.staff_workers);
            }
            TipEffect::Target(t) => sk.target = *t,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExpertTip {
    /// Dimension name and value, as in strategy records.
    pub dimension: String,
    pub value: String,
    pub directive: String,
    pub effect: TipEffect,
}

impl ExpertTip {
    fn new(dimension: &str, value: &str, directive: &str, effect: TipEffect) -> Self {
        debug_assert!(DIMENSIONS.contains(&dimension));
        ExpertTip {
            dimension: dimension.into(),
            value: value.into(),
            directive: directive.into(),
            effect,
        }
    }

    pub fn applies_to(&self, s: &Strategy) -> bool {
        DIMENSIONS
            .iter()
            .position(|d| *d == self.dimension)
            .is_some_and(|i| s.value_name(i) == self.value)
    }
}

/// The full tip set, one tip per dimension value.
pub fn default_tips() -> Vec<ExpertTip> {
    use AbstractKind::*;
    let add = |kind, count| TipEffect::Add { kind, count };
    vec![
        ExpertTip::new(
            "economy",
            "low",
            "If Economy is low, keep one harvester and spend the savings on [Produce Unit].",
            add(ProduceUnit, 1),
        ),
        ExpertTip::new(
            "economy",
            "med",
            "If Economy is med, plan [Produce Unit] Worker until two workers can [Harvest Mineral].",
            TipEffect::StaffHarvest,
        ),
        ExpertTip::new(
            "economy",
            "high",
            "If Economy is high, plan [Produce Unit] Worker until three workers can [Harvest Mineral].",
            TipEffect::StaffHarvest,
        ),
        ExpertTip::new(
            "barracks",
            "none",
            "If Barracks is none, all units come from the base; plan an extra [Produce Unit].",
            add(ProduceUnit, 1),
        ),
        ExpertTip::new(
            "barracks",
            "early",
            "If Barracks is early, add a worker to [Harvest Mineral] so the barracks can start producing soon.",
            add(HarvestMineral, 1),
        ),
        ExpertTip::new(
            "barracks",
            "late",
            "If Barracks is late, bank minerals first with one more worker on [Harvest Mineral].",
            add(HarvestMineral, 1),
        ),
        ExpertTip::new(
            "composition",
            "worker",
            "If Composition is worker, plan more [Produce Unit] Worker.",
            add(ProduceUnit, 2),
        ),
        ExpertTip::new(
            "composition",
            "light",
            "If Composition is light, plan more [Produce Unit] Light from the barracks.",
            add(ProduceUnit, 2),
        ),
        ExpertTip::new(
            "composition",
            "heavy",
            "If Composition is heavy, plan more [Produce Unit] Heavy from the barracks.",
            add(ProduceUnit, 2),
        ),
        ExpertTip::new(
            "composition",
            "ranged",
            "If Composition is ranged, plan more [Produce Unit] Ranged from the barracks.",
            add(ProduceUnit, 2),
        ),
        ExpertTip::new(
            "composition",
            "mixed",
            "If Composition is mixed, plan [Produce Unit] for Light, Heavy and Ranged in turn.",
            add(ProduceUnit, 2),
        ),
        ExpertTip::new(
            "aggression",
            "true",
            "If the Aggression Feature is set to True, plan more [Attack Enemy] abstract actions.",
            add(AttackEnemy, 4),
        ),
        ExpertTip::new(
            "aggression",
            "false",
            "If the Aggression Feature is set to False, hold units back until the army is large, then counterattack; put another worker on [Harvest Mineral].",
            add(HarvestMineral, 1),
        ),
        ExpertTip::new(
            "attack_target",
            "closest",
            "If Attack Target is closest, [Attack Enemy] with target type Any.",
            TipEffect::Target(TargetType::Any),
        ),
        ExpertTip::new(
            "attack_target",
            "workers",
            "If Attack Target is workers, [Attack Enemy] with target type Worker.",
            TipEffect::Target(TargetType::Unit(UnitType::Worker)),
        ),
        ExpertTip::new(
            "attack_target",
            "buildings",
            "If Attack Target is buildings, [Attack Enemy] with target type Base.",
            TipEffect::Target(TargetType::Unit(UnitType::Base)),
        ),
        ExpertTip::new(
            "defense",
            "none",
            "If Defense is none, station nobody and plan an extra [Produce Unit].",
            add(ProduceUnit, 1),
        ),
        ExpertTip::new(
            "defense",
            "perimeter",
            "If Defense is perimeter, plan an extra [Produce Unit] to man the two [Deploy Unit] posts.",
            add(ProduceUnit, 1),
        ),
        ExpertTip::new(
            "defense",
            "full",
            "If Defense is full, plan two extra [Produce Unit] to man all four [Deploy Unit] posts.",
            add(ProduceUnit, 2),
        ),
    ]
}

/// Tips from `tips` whose condition `s` meets.
pub fn tips_for<'a>(tips: &'a [ExpertTip], s: &Strategy) -> Vec<&'a ExpertTip> {
    tips.iter().filter(|t| t.applies_to(s)).collect()
}
