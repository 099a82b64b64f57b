//! Seat controllers: SAP and its ablations, fixed-strategy and plan-level
//! baselines, and scripted bots.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::actions::{
    tick_controller, AbstractAction, ExecutorConfig, ExecutorState, Plan, TargetType,
};
use crate::engine::{ActionKind, Assignments, AtomicAction, GameState, Owner, Player, UnitType};
use crate::planner::{
    barracks_site, default_tips, facing, own_base, plan_as_p1, unguided_strategy, ExpertTip,
    PlannerPort, RulePlanner,
};
use crate::recognition::{extract, Recognition, RecognizerPort, RuleRecognizer, Trajectory};
use crate::sen::{best_response, SenParams};
use crate::strategy::Strategy;

/// How a SAP seat picks its response.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SapVariant {
    /// Recognize and search every k ticks.
    Full,
    /// Recognize from the previous episode only; fixed response within one.
    PerEpisode,
    /// Ask the planner port for a counter-strategy instead of searching.
    WithoutSen,
    /// Plan without expert tips.
    WithoutTips,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum ScriptedKind {
    WorkerRushLike,
    LightRushLike,
    Passive,
    RandomBiased,
}

impl ScriptedKind {
    pub const ALL: [ScriptedKind; 4] = [
        ScriptedKind::WorkerRushLike,
        ScriptedKind::LightRushLike,
        ScriptedKind::Passive,
        ScriptedKind::RandomBiased,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ScriptedKind::WorkerRushLike => "workerRushLike",
            ScriptedKind::LightRushLike => "lightRushLike",
            ScriptedKind::Passive => "passive",
            ScriptedKind::RandomBiased => "randomBiased",
        }
    }
}

impl FromStr for ScriptedKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ScriptedKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| format!("unknown scripted bot `{s}`"))
    }
}

/// What plays a seat.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AgentSpec {
    Sap { variant: SapVariant },
    Fixed { strategy: Strategy },
    Vanilla,
    TipsAugmented,
    Scripted { bot: ScriptedKind },
}

impl AgentSpec {
    pub fn sap() -> Self {
        AgentSpec::Sap {
            variant: SapVariant::Full,
        }
    }

    pub fn fixed(strategy: Strategy) -> Self {
        AgentSpec::Fixed { strategy }
    }

    pub fn needs_sen(&self) -> bool {
        matches!(
            self,
            AgentSpec::Sap {
                variant: SapVariant::Full | SapVariant::PerEpisode | SapVariant::WithoutTips
            }
        )
    }

    /// Short display name.
    pub fn label(&self) -> String {
        match self {
            AgentSpec::Sap { variant } => match variant {
                SapVariant::Full => "SAP".into(),
                SapVariant::PerEpisode => "SAP-EPE".into(),
                SapVariant::WithoutSen => "SAP w/o SEN".into(),
                SapVariant::WithoutTips => "SAP w/o tips".into(),
            },
            AgentSpec::Fixed { strategy } => format!("Fixed[{}]", strategy.to_record()),
            AgentSpec::Vanilla => "Vanilla".into(),
            AgentSpec::TipsAugmented => "TA".into(),
            AgentSpec::Scripted { bot } => bot.name().into(),
        }
    }
}

impl fmt::Display for AgentSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

/// Shared, read-only inputs for building agents.
#[derive(Clone)]
pub struct AgentContext {
    pub sen: Option<Arc<SenParams>>,
    pub planner: Arc<dyn PlannerPort>,
    pub recognizer: Arc<dyn RecognizerPort>,
    pub tips: Arc<Vec<ExpertTip>>,
    pub executor: ExecutorConfig,
}

impl Default for AgentContext {
    fn default() -> Self {
        AgentContext {
            sen: None,
            planner: Arc::new(RulePlanner::default()),
            recognizer: Arc::new(RuleRecognizer::default()),
            tips: Arc::new(default_tips()),
            executor: ExecutorConfig::default(),
        }
    }
}

impl AgentContext {
    pub fn with_sen(mut self, sen: SenParams) -> Self {
        self.sen = Some(Arc::new(sen));
        self
    }
}

/// One recognize, respond and replan step of a SAP seat.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReplanEvent {
    pub tick: u32,
    pub recognized: Strategy,
    pub confidence: [f64; 6],
    pub response: Strategy,
    /// Predicted win probability of the response, when searched.
    pub predicted: Option<f64>,
}

/// Carried from one episode to the next by per-episode agents.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct EpisodeMemory {
    pub last_recognition: Option<Recognition>,
}

enum Mode {
    Strategy { strategy: Strategy, tips: bool },
    Sap(SapVariant),
    Plan(Box<dyn Fn(&GameState, Player) -> Plan + Send + Sync>),
    Random(ChaCha8Rng),
}

/// A live seat.
pub struct Agent {
    pub player: Player,
    pub label: String,
    mode: Mode,
    ctx: AgentContext,
    exec_cfg: ExecutorConfig,
    interval: u32,
    plan: Plan,
    exec: ExecutorState,
    /// Response fixed for the episode by per-episode agents.
    episode_response: Option<(Recognition, Strategy, Option<f64>)>,
    pub events: Vec<ReplanEvent>,
}

impl Agent {
    /// Builds the controller for `spec` in seat `player`. `k` is the replan
    /// interval; `seed` only feeds random bots.
    pub fn new(
        spec: &AgentSpec,
        player: Player,
        k: u32,
        seed: u64,
        ctx: &AgentContext,
        memory: &EpisodeMemory,
    ) -> Result<Agent, HarnessError> {
        if k == 0 {
            return Err(HarnessError::Config("plan interval must be positive".into()));
        }
        if spec.needs_sen() && ctx.sen.is_none() {
            return Err(HarnessError::MissingSen(spec.label()));
        }
        let mut exec_cfg = ctx.executor.clone();
        let mut interval = k;
        let mode = match spec {
            AgentSpec::Sap { variant } => Mode::Sap(*variant),
            AgentSpec::Fixed { strategy } => Mode::Strategy {
                strategy: strategy.validate().map_err(|e| HarnessError::Config(e.to_string()))?,
                tips: true,
            },
            AgentSpec::Vanilla => Mode::Strategy {
                strategy: unguided_strategy(),
                tips: false,
            },
            AgentSpec::TipsAugmented => Mode::Strategy {
                strategy: unguided_strategy(),
                tips: true,
            },
            AgentSpec::Scripted { bot } => {
                interval = SCRIPT_INTERVAL;
                match bot {
                    ScriptedKind::WorkerRushLike => Mode::Plan(Box::new(worker_rush_plan)),
                    ScriptedKind::LightRushLike => Mode::Plan(Box::new(light_rush_plan)),
                    ScriptedKind::Passive => {
                        exec_cfg.auto_retaliate = false;
                        Mode::Plan(Box::new(passive_plan))
                    }
                    ScriptedKind::RandomBiased => Mode::Random(ChaCha8Rng::seed_from_u64(
                        seed ^ (0x9e37_79b9_7f4a_7c15u64.wrapping_mul(player.index() as u64 + 1)),
                    )),
                }
            }
        };
        let episode_response = match (&mode, &ctx.sen) {
            (Mode::Sap(SapVariant::PerEpisode), Some(sen)) => {
                let rec = memory.last_recognition.clone().unwrap_or_else(Recognition::neutral);
                let (resp, v) = best_response(sen, &rec.strategy);
                Some((rec, resp, Some(v)))
            }
            _ => None,
        };
        Ok(Agent {
            player,
            label: spec.label(),
            mode,
            ctx: ctx.clone(),
            exec_cfg,
            interval,
            plan: Plan::default(),
            exec: ExecutorState::default(),
            episode_response,
            events: Vec::new(),
        })
    }

    pub fn plan(&self) -> &Plan {
        &self.plan
    }

    fn replace_plan(&mut self, plan: Plan) {
        self.exec = ExecutorState::new(&plan);
        self.plan = plan;
    }

    fn sap_replan(&mut self, variant: SapVariant, obs: &GameState, traj: &Trajectory) {
        let (rec, response, predicted) = match (variant, &self.episode_response) {
            (SapVariant::PerEpisode, Some(fixed)) => fixed.clone(),
            _ => {
                let summary = extract(traj);
                let rec = self.ctx.recognizer.recognize(&summary, self.player.opponent());
                match (variant, &self.ctx.sen) {
                    (SapVariant::WithoutSen, _) | (_, None) => {
                        let resp = self.ctx.planner.counter_strategy(&rec.strategy);
                        (rec, resp, None)
                    }
                    (_, Some(sen)) => {
                        let (resp, v) = best_response(sen, &rec.strategy);
                        (rec, resp, Some(v))
                    }
                }
            }
        };
        let tips: &[ExpertTip] = if variant == SapVariant::WithoutTips {
            &[]
        } else {
            &self.ctx.tips
        };
        let plan = self.ctx.planner.plan(obs, self.player, &response, tips);
        self.replace_plan(plan);
        self.events.push(ReplanEvent {
            tick: obs.tick,
            recognized: rec.strategy,
            confidence: rec.confidence,
            response,
            predicted,
        });
    }

    /// Orders for this tick. `traj` holds every step before `obs`.
    pub fn act(&mut self, obs: &GameState, traj: &Trajectory) -> Assignments {
        if let Mode::Random(rng) = &mut self.mode {
            return random_biased(obs, self.player, rng);
        }
        if obs.tick.is_multiple_of(self.interval) {
            match &self.mode {
                Mode::Sap(v) => {
                    let v = *v;
                    self.sap_replan(v, obs, traj);
                }
                Mode::Strategy { strategy, tips } => {
                    let tips: &[ExpertTip] = if *tips { &self.ctx.tips } else { &[] };
                    let plan = self.ctx.planner.plan(obs, self.player, strategy, tips);
                    self.replace_plan(plan);
                }
                Mode::Plan(f) => {
                    let plan = f(obs, self.player);
                    self.replace_plan(plan);
                }
                Mode::Random(_) => unreachable!(),
            }
        }
        tick_controller(obs, self.player, &self.plan, &mut self.exec, &self.exec_cfg)
    }

    /// Recognition of the opponent over a whole episode, for the next one.
    pub fn end_episode(&self, traj: &Trajectory, memory: &mut EpisodeMemory) {
        if matches!(self.mode, Mode::Sap(SapVariant::PerEpisode)) {
            memory.last_recognition = Some(self.ctx.recognizer.recognize(&extract(traj), self.player.opponent()));
        }
    }
}

/// Replan interval of the scripted bots.
pub const SCRIPT_INTERVAL: u32 = 50;

fn worker_rush_plan(obs: &GameState, player: Player) -> Plan {
    plan_as_p1(obs, player, |view| {
        let dir = facing(view);
        let mut entries = vec![AbstractAction::HarvestMineral { worker_count: 1 }];
        for _ in 0..2 {
            entries.push(AbstractAction::ProduceUnit {
                unit_type: UnitType::Worker,
                direction: dir,
            });
        }
        for _ in 0..8 {
            entries.push(AbstractAction::AttackEnemy {
                attacker_type: UnitType::Worker,
                target_type: TargetType::Any,
            });
        }
        Plan::new(entries, obs.tick)
    })
}

fn light_rush_plan(obs: &GameState, player: Player) -> Plan {
    plan_as_p1(obs, player, |view| {
        let dir = facing(view);
        let mut entries = Vec::new();
        let has_barracks = view
            .units
            .iter()
            .any(|u| u.owner == Owner::P1 && u.kind == UnitType::Barracks);
        if !has_barracks {
            if let Some(site) = own_base(view).and_then(|b| barracks_site(view, b)) {
                entries.push(AbstractAction::BuildBuilding {
                    building_type: UnitType::Barracks,
                    site,
                });
            }
        }
        entries.push(AbstractAction::HarvestMineral { worker_count: 2 });
        for _ in 0..2 {
            entries.push(AbstractAction::ProduceUnit {
                unit_type: UnitType::Light,
                direction: dir,
            });
        }
        for _ in 0..6 {
            entries.push(AbstractAction::AttackEnemy {
                attacker_type: UnitType::Light,
                target_type: TargetType::Any,
            });
        }
        Plan::new(entries, obs.tick)
    })
}

fn passive_plan(obs: &GameState, _player: Player) -> Plan {
    Plan::new(vec![AbstractAction::HarvestMineral { worker_count: 1 }], obs.tick)
}

fn action_weight(a: &AtomicAction) -> u32 {
    match a.kind() {
        ActionKind::Attack => 8,
        ActionKind::Harvest | ActionKind::Return => 6,
        ActionKind::Produce => 3,
        ActionKind::Move => 2,
        ActionKind::Noop => 1,
    }
}

/// Random legal orders for idle units, weighted toward attacking and
/// harvesting, never overspending the stock.
fn random_biased(obs: &GameState, player: Player, rng: &mut ChaCha8Rng) -> Assignments {
    let mut out = Assignments::new();
    let mut stock = obs.stock(player);
    let idle: Vec<_> = obs.units_of(player).filter(|u| u.is_idle()).map(|u| u.id).collect();
    for id in idle {
        let legal = obs.legal_actions(id).unwrap_or_default();
        let options: Vec<AtomicAction> = legal
            .into_iter()
            .filter(|a| match a {
                AtomicAction::Produce(_, t) => obs.stats.get(*t).cost <= stock,
                _ => true,
            })
            .collect();
        let Ok(&pick) = options.choose_weighted(rng, action_weight) else {
            continue;
        };
        if let AtomicAction::Produce(_, t) = pick {
            stock -= obs.stats.get(t).cost;
        }
        if pick != AtomicAction::Noop {
            out.insert(id, pick);
        }
    }
    // Keep the draw sequence independent of how many units chose Noop.
    let _: u32 = rng.gen();
    out
}
