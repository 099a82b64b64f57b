//! Match loop, tournaments, experiments and reports.
//!
//! [`run_match`] drives one engine episode between two [`AgentSpec`]s. SAP
//! seats recognize the opponent, search a response and replan every `k`
//! ticks. [`run_battle_pair`] and [`run_round_robin`] build the result
//! dataset the evaluation network is trained on; [`experiment`] holds the
//! evaluation suites and [`report`] writes their tables.

mod agents;
pub mod config;
pub mod experiment;
pub mod report;
mod tournament;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::{load_map_with, ActionKind, EngineConfig, EngineError, MapId, Outcome, Player};
use crate::recognition::{Trajectory, TrajectoryConfig};
use crate::sen::SenError;
use crate::strategy::StrategyError;

pub use agents::{
    Agent, AgentContext, AgentSpec, EpisodeMemory, ReplanEvent, SapVariant, ScriptedKind,
    SCRIPT_INTERVAL,
};
pub use tournament::{
    outcome_name, parallel_map, run_agents, run_battle_pair, run_pairs, run_round_robin,
    BattleResult, TournamentConfig,
};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("agent `{0}` needs evaluation network parameters")]
    MissingSen(String),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Strategy(#[from] StrategyError),
    #[error(transparent)]
    Sen(#[from] SenError),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

/// Ticks per bucket of the per-match series.
pub const BUCKET_TICKS: u32 = 100;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MatchConfig {
    pub map: MapId,
    pub seed: u64,
    /// Overrides the engine's step limit.
    pub step_limit: Option<u32>,
    /// Replan interval k in ticks.
    pub plan_interval: u32,
    pub episodes: u32,
    /// Seat each agent takes in even episodes; odd episodes swap them when
    /// `alternate_seats` is set.
    pub agents: [AgentSpec; 2],
    pub alternate_seats: bool,
    pub engine: EngineConfig,
    pub trajectory: TrajectoryConfig,
}

impl Default for MatchConfig {
    fn default() -> Self {
        MatchConfig {
            map: MapId::BasesWorkers8x8,
            seed: 0,
            step_limit: None,
            plan_interval: 200,
            episodes: 1,
            agents: [
                AgentSpec::Scripted {
                    bot: ScriptedKind::Passive,
                },
                AgentSpec::Scripted {
                    bot: ScriptedKind::Passive,
                },
            ],
            alternate_seats: false,
            engine: EngineConfig::default(),
            trajectory: TrajectoryConfig::default(),
        }
    }
}

impl MatchConfig {
    pub fn new(a: AgentSpec, b: AgentSpec) -> Self {
        MatchConfig {
            agents: [a, b],
            ..MatchConfig::default()
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.plan_interval == 0 {
            return Err(HarnessError::Config("plan_interval must be positive".into()));
        }
        if self.episodes == 0 {
            return Err(HarnessError::Config("episodes must be at least 1".into()));
        }
        for a in &self.agents {
            if let AgentSpec::Fixed { strategy } = a {
                strategy.validate()?;
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlayerMetrics {
    pub damage_dealt: u64,
    pub damage_taken: u64,
    pub resources_harvested: u64,
    pub units_produced: u64,
    pub actions_issued: u64,
}

/// Counts for one stretch of [`BUCKET_TICKS`] ticks, per player. Action
/// counts are indexed by [`ActionKind::index`].
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bucket {
    pub start_tick: u32,
    pub actions: [[u32; 6]; 2],
    pub damage_dealt: [u32; 2],
    pub harvested: [u32; 2],
    pub produced: [u32; 2],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatchResult {
    pub seed: u64,
    /// Agent labels by seat.
    pub seats: [String; 2],
    /// True when the configured first agent sat in P2.
    pub swapped: bool,
    pub outcome: Outcome,
    pub final_tick: u32,
    pub metrics: [PlayerMetrics; 2],
    pub series: Vec<Bucket>,
    /// Replan events of SAP seats, by seat.
    pub replans: [Vec<ReplanEvent>; 2],
}

impl MatchResult {
    /// 1 for a win, 0.5 for a draw, 0 for a loss.
    pub fn score(&self, p: Player) -> f64 {
        match self.outcome {
            Outcome::Win(w) if w == p => 1.0,
            Outcome::Win(_) => 0.0,
            _ => 0.5,
        }
    }

    /// Seat of the configured first agent.
    pub fn first_seat(&self) -> Player {
        if self.swapped {
            Player::P2
        } else {
            Player::P1
        }
    }

    /// Score of the configured first agent.
    pub fn first_score(&self) -> f64 {
        self.score(self.first_seat())
    }
}

/// Plays one episode with `seats[0]` as P1.
fn play_episode(
    cfg: &MatchConfig,
    seed: u64,
    seats: [&AgentSpec; 2],
    memories: [&mut EpisodeMemory; 2],
    ctx: &AgentContext,
    swapped: bool,
) -> Result<(MatchResult, Trajectory), HarnessError> {
    let mut engine = cfg.engine.clone();
    if cfg.step_limit.is_some() {
        engine.step_limit = cfg.step_limit;
    }
    let mut state = load_map_with(cfg.map, seed, &engine);
    let [m1, m2] = memories;
    let mut agents = [
        Agent::new(seats[0], Player::P1, cfg.plan_interval, seed, ctx, m1)?,
        Agent::new(seats[1], Player::P2, cfg.plan_interval, seed, ctx, m2)?,
    ];
    let mut traj = Trajectory::new(cfg.trajectory.clone());
    let mut metrics: [PlayerMetrics; 2] = Default::default();
    let mut series: Vec<Bucket> = Vec::new();

    while state.outcome() == Outcome::Ongoing {
        let mut orders = agents[0].act(&state, &traj);
        orders.extend(agents[1].act(&state, &traj));
        let rec = state.apply(&orders)?;
        traj.record(&state, &rec)
            .expect("engine ticks increase");

        let b = ((rec.tick - 1) / BUCKET_TICKS) as usize;
        if series.len() <= b {
            series.resize_with(b + 1, Bucket::default);
            for (i, bucket) in series.iter_mut().enumerate() {
                bucket.start_tick = i as u32 * BUCKET_TICKS;
            }
        }
        let bucket = &mut series[b];
        for a in &rec.issued {
            let i = a.player.index();
            bucket.actions[i][a.action.kind().index()] += 1;
            metrics[i].actions_issued += 1;
        }
        for d in &rec.damage {
            let amount = d.amount as u64;
            metrics[d.attacker_owner.index()].damage_dealt += amount;
            metrics[d.victim_owner.index()].damage_taken += amount;
            bucket.damage_dealt[d.attacker_owner.index()] += d.amount as u32;
        }
        for p in Player::BOTH {
            let i = p.index();
            metrics[i].resources_harvested += rec.delivered[i] as u64;
            bucket.harvested[i] += rec.delivered[i];
        }
        for s in &rec.spawned {
            metrics[s.owner.index()].units_produced += 1;
            bucket.produced[s.owner.index()] += 1;
        }
    }

    let [a1, a2] = &agents;
    a1.end_episode(&traj, m1);
    a2.end_episode(&traj, m2);
    let [e1, e2] = agents.map(|a| a.events);
    let result = MatchResult {
        seed,
        seats: [seats[0].label(), seats[1].label()],
        swapped,
        outcome: state.outcome(),
        final_tick: state.tick,
        metrics,
        series,
        replans: [e1, e2],
    };
    Ok((result, traj))
}

/// First episode of `cfg`, agents in their configured seats.
pub fn run_match(cfg: &MatchConfig, ctx: &AgentContext) -> Result<MatchResult, HarnessError> {
    run_match_traced(cfg, ctx).map(|(r, _)| r)
}

/// [`run_match`], also returning the trajectory.
pub fn run_match_traced(
    cfg: &MatchConfig,
    ctx: &AgentContext,
) -> Result<(MatchResult, Trajectory), HarnessError> {
    cfg.validate()?;
    let mut mem: [EpisodeMemory; 2] = Default::default();
    let [m1, m2] = &mut mem;
    play_episode(cfg, cfg.seed, [&cfg.agents[0], &cfg.agents[1]], [m1, m2], ctx, false)
}

/// All `cfg.episodes` episodes with seeds `cfg.seed..`, swapping seats every
/// other episode when asked. Per-episode agents carry their memory along.
pub fn run_series(cfg: &MatchConfig, ctx: &AgentContext) -> Result<Vec<MatchResult>, HarnessError> {
    cfg.validate()?;
    let mut mem: [EpisodeMemory; 2] = Default::default();
    let mut out = Vec::with_capacity(cfg.episodes as usize);
    for e in 0..cfg.episodes {
        let seed = cfg.seed.wrapping_add(e as u64);
        let swap = cfg.alternate_seats && e % 2 == 1;
        let [ma, mb] = &mut mem;
        let (r, _) = if swap {
            play_episode(cfg, seed, [&cfg.agents[1], &cfg.agents[0]], [mb, ma], ctx, true)?
        } else {
            play_episode(cfg, seed, [&cfg.agents[0], &cfg.agents[1]], [ma, mb], ctx, false)?
        };
        out.push(r);
    }
    Ok(out)
}

/// Action kind names in histogram order.
pub fn action_kind_names() -> [&'static str; 6] {
    ActionKind::ALL.map(|k| k.name())
}

