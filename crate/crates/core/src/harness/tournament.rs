//! Strategy-versus-strategy battles and the round-robin dataset.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{run_series, AgentContext, AgentSpec, HarnessError, MatchConfig};
use crate::engine::{EngineConfig, MapId, Outcome};
use crate::recognition::TrajectoryConfig;
use crate::sen::{DatasetRecord, ResultDataset};
use crate::strategy::{Strategy, StrategyLibrary};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TournamentConfig {
    pub map: MapId,
    pub engine: EngineConfig,
    pub plan_interval: u32,
    /// Episodes per ordered pair.
    pub episodes: u32,
    pub base_seed: u64,
    /// Thread count; `None` uses every core.
    pub workers: Option<usize>,
    /// Pairs finished between two flushes of the output.
    pub chunk: usize,
    pub trajectory: TrajectoryConfig,
}

impl Default for TournamentConfig {
    fn default() -> Self {
        TournamentConfig {
            map: MapId::BasesWorkers8x8,
            engine: EngineConfig::default(),
            plan_interval: 200,
            episodes: 5,
            base_seed: 0,
            workers: None,
            chunk: 64,
            trajectory: TrajectoryConfig::default(),
        }
    }
}

impl TournamentConfig {
    pub fn match_config(&self, a: AgentSpec, b: AgentSpec) -> MatchConfig {
        MatchConfig {
            map: self.map,
            seed: self.base_seed,
            plan_interval: self.plan_interval,
            episodes: self.episodes,
            agents: [a, b],
            alternate_seats: true,
            engine: self.engine.clone(),
            trajectory: self.trajectory.clone(),
            ..MatchConfig::default()
        }
    }
}

/// Tally of one agent over a series, from its own point of view.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BattleResult {
    pub wins: u32,
    pub draws: u32,
    pub losses: u32,
}

impl BattleResult {
    pub fn episodes(&self) -> u32 {
        self.wins + self.draws + self.losses
    }

    /// Wins plus half the draws, over the episodes played.
    pub fn r(&self) -> f64 {
        let n = self.episodes();
        if n == 0 {
            return 0.5;
        }
        (self.wins as f64 + 0.5 * self.draws as f64) / n as f64
    }

    pub fn add(&mut self, score: f64) {
        if score == 1.0 {
            self.wins += 1;
        } else if score == 0.0 {
            self.losses += 1;
        } else {
            self.draws += 1;
        }
    }

    pub fn reversed(&self) -> BattleResult {
        BattleResult {
            wins: self.losses,
            draws: self.draws,
            losses: self.wins,
        }
    }
}

/// Series between two agents; the tally is the first agent's.
pub fn run_agents(
    a: &AgentSpec,
    b: &AgentSpec,
    cfg: &TournamentConfig,
    ctx: &AgentContext,
) -> Result<(BattleResult, Vec<super::MatchResult>), HarnessError> {
    let results = run_series(&cfg.match_config(a.clone(), b.clone()), ctx)?;
    let mut tally = BattleResult::default();
    for r in &results {
        tally.add(r.first_score());
    }
    Ok((tally, results))
}

/// `cfg.episodes` matches between fixed-strategy agents with seeds
/// `cfg.base_seed..`, `a` taking P1 in even episodes.
pub fn run_battle_pair(
    a: &Strategy,
    b: &Strategy,
    cfg: &TournamentConfig,
    ctx: &AgentContext,
) -> Result<BattleResult, HarnessError> {
    run_agents(&AgentSpec::fixed(*a), &AgentSpec::fixed(*b), cfg, ctx).map(|(t, _)| t)
}

/// Applies `f` to every item, on a pool of `workers` threads when the
/// `parallel` feature is on. Output order follows input order.
pub fn parallel_map<T, R, F>(items: &[T], workers: Option<usize>, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        if workers == Some(1) {
            return items.iter().map(f).collect();
        }
        let run = || items.par_iter().map(&f).collect();
        match workers {
            Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
                Ok(pool) => pool.install(run),
                Err(_) => run(),
            },
            None => run(),
        }
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = workers;
        items.iter().map(f).collect()
    }
}

/// Battle results for each pair, in order.
pub fn run_pairs(
    pairs: &[(Strategy, Strategy)],
    cfg: &TournamentConfig,
    ctx: &AgentContext,
) -> Result<Vec<BattleResult>, HarnessError> {
    parallel_map(pairs, cfg.workers, |(a, b)| run_battle_pair(a, b, cfg, ctx))
        .into_iter()
        .collect()
}

/// Every ordered pair of `lib`, self-pairs included, row by row. Pairs
/// already in `done` are kept as they are; each new record is passed to
/// `sink` as soon as its chunk finishes.
pub fn run_round_robin(
    lib: &StrategyLibrary,
    cfg: &TournamentConfig,
    ctx: &AgentContext,
    done: &ResultDataset,
    mut sink: impl FnMut(&DatasetRecord) -> Result<(), HarnessError>,
) -> Result<ResultDataset, HarnessError> {
    if lib.is_empty() {
        return Err(HarnessError::Config("strategy library is empty".into()));
    }
    let strategies = lib.strategies();
    let mut have: BTreeMap<(usize, usize), DatasetRecord> = BTreeMap::new();
    let index = |s: &Strategy| strategies.iter().position(|x| x == s);
    for rec in &done.records {
        if let (Some(i), Some(j)) = (index(&rec.a), index(&rec.b)) {
            have.entry((i, j)).or_insert_with(|| rec.clone());
        }
    }
    let n = strategies.len();
    let missing: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .filter(|k| !have.contains_key(k))
        .collect();
    for chunk in missing.chunks(cfg.chunk.max(1)) {
        let pairs: Vec<(Strategy, Strategy)> =
            chunk.iter().map(|&(i, j)| (strategies[i], strategies[j])).collect();
        let results = run_pairs(&pairs, cfg, ctx)?;
        for (&(i, j), res) in chunk.iter().zip(results) {
            let rec = DatasetRecord::new(strategies[i], strategies[j], res.r(), res.episodes());
            sink(&rec)?;
            have.insert((i, j), rec);
        }
    }
    Ok(ResultDataset {
        records: have.into_values().collect(),
    })
}

/// Outcome name used in reports.
pub fn outcome_name(o: Outcome) -> &'static str {
    match o {
        Outcome::Ongoing => "ongoing",
        Outcome::Win(crate::engine::Player::P1) => "p1",
        Outcome::Win(crate::engine::Player::P2) => "p2",
        Outcome::Draw => "draw",
    }
}
