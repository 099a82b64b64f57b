//! Evaluation suites: pool scores, searched responses, recognition
//! accuracy, ablations and pairwise agent tables.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::tournament::parallel_map;
use super::{
    run_agents, AgentContext, AgentSpec, BattleResult, HarnessError, MatchResult,
    TournamentConfig,
};
use crate::recognition::{extract, Recognition};
use crate::sen::{best_response, SenParams};
use crate::strategy::Strategy;

/// Scores of one agent against a pool of fixed-strategy opponents.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PoolScore {
    pub label: String,
    pub per_opponent: Vec<(Strategy, BattleResult)>,
    /// First-agent score of every match, opponent by opponent.
    pub scores: Vec<f64>,
    #[serde(skip)]
    pub matches: Vec<MatchResult>,
}

impl PoolScore {
    pub fn mean(&self) -> f64 {
        mean(&self.scores)
    }

    pub fn total(&self) -> BattleResult {
        let mut t = BattleResult::default();
        for (_, r) in &self.per_opponent {
            t.wins += r.wins;
            t.draws += r.draws;
            t.losses += r.losses;
        }
        t
    }
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        0.0
    } else {
        xs.iter().sum::<f64>() / xs.len() as f64
    }
}

/// Plays `agent` against `FixedStrategy(s)` for each `s` in `pool`.
pub fn score_against_pool(
    agent: &AgentSpec,
    pool: &[Strategy],
    cfg: &TournamentConfig,
    ctx: &AgentContext,
) -> Result<PoolScore, HarnessError> {
    let runs = parallel_map(pool, cfg.workers, |s| run_agents(agent, &AgentSpec::fixed(*s), cfg, ctx));
    let mut out = PoolScore {
        label: agent.label(),
        ..PoolScore::default()
    };
    for (s, run) in pool.iter().zip(runs) {
        let (tally, matches) = run?;
        out.scores.extend(matches.iter().map(MatchResult::first_score));
        out.per_opponent.push((*s, tally));
        out.matches.extend(matches);
    }
    Ok(out)
}

/// Every member of `pool` as a fixed-strategy agent against every other
/// member, pooled into one score list.
pub fn fixed_pool_baseline(
    pool: &[Strategy],
    cfg: &TournamentConfig,
    ctx: &AgentContext,
) -> Result<PoolScore, HarnessError> {
    let pairs: Vec<(Strategy, Strategy)> = pool
        .iter()
        .flat_map(|a| pool.iter().filter(move |b| *b != a).map(move |b| (*a, *b)))
        .collect();
    let runs = parallel_map(&pairs, cfg.workers, |(a, b)| {
        run_agents(&AgentSpec::fixed(*a), &AgentSpec::fixed(*b), cfg, ctx)
    });
    let mut out = PoolScore {
        label: "Fixed".into(),
        ..PoolScore::default()
    };
    for ((_, b), run) in pairs.iter().zip(runs) {
        let (tally, matches) = run?;
        out.scores.extend(matches.iter().map(MatchResult::first_score));
        out.per_opponent.push((*b, tally));
    }
    Ok(out)
}

/// One bar of the searched-response chart.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchedResponse {
    pub opponent: Strategy,
    pub response: Strategy,
    pub predicted: f64,
    pub result: BattleResult,
}

/// Searches a response to each opponent and plays it as a fixed strategy.
pub fn searched_responses(
    sen: &SenParams,
    opponents: &[Strategy],
    cfg: &TournamentConfig,
    ctx: &AgentContext,
) -> Result<Vec<SearchedResponse>, HarnessError> {
    let runs = parallel_map(opponents, cfg.workers, |opp| {
        let (response, predicted) = best_response(sen, opp);
        run_agents(&AgentSpec::fixed(response), &AgentSpec::fixed(*opp), cfg, ctx).map(|(result, _)| {
            SearchedResponse {
                opponent: *opp,
                response,
                predicted,
                result,
            }
        })
    });
    runs.into_iter().collect()
}

/// Aggregate score of the searched responses.
pub fn searched_score(rows: &[SearchedResponse]) -> f64 {
    let mut t = BattleResult::default();
    for r in rows {
        t.wins += r.result.wins;
        t.draws += r.result.draws;
        t.losses += r.result.losses;
    }
    t.r()
}

/// One recognition episode: the truth and what was recognized.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecognitionTrial {
    pub seed: u64,
    pub truth: Strategy,
    /// Recognition over the whole episode.
    pub recognized: Strategy,
    pub confidence: [f64; 6],
    /// Recognition at the observer's last replan, when it has one.
    pub final_replan: Option<Strategy>,
    pub final_tick: u32,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RecognitionReport {
    pub trials: Vec<RecognitionTrial>,
}

fn dimension_hits(a: &Strategy, b: &Strategy) -> [bool; 6] {
    std::array::from_fn(|d| a.value_name(d) == b.value_name(d))
}

impl RecognitionReport {
    /// Share of trials matching the truth, per dimension, over the trials
    /// `keep` selects.
    pub fn accuracy(&self, keep: impl Fn(&RecognitionTrial) -> bool) -> [f64; 6] {
        let mut hits = [0usize; 6];
        let mut n = 0usize;
        for t in self.trials.iter().filter(|t| keep(t)) {
            n += 1;
            for (h, ok) in hits.iter_mut().zip(dimension_hits(&t.truth, &t.recognized)) {
                *h += ok as usize;
            }
        }
        hits.map(|h| if n == 0 { 0.0 } else { h as f64 / n as f64 })
    }

    /// Aggression accuracy among trials whose truth has `aggression`.
    pub fn aggression_accuracy(&self, aggression: bool) -> f64 {
        self.accuracy(|t| t.truth.aggression == aggression)[3]
    }

    /// Aggression accuracy at the last replan among trials with one.
    pub fn final_replan_aggression_accuracy(&self) -> f64 {
        let with: Vec<_> = self.trials.iter().filter_map(|t| t.final_replan.map(|r| (t, r))).collect();
        if with.is_empty() {
            return 0.0;
        }
        with.iter().filter(|(t, r)| t.truth.aggression == r.aggression).count() as f64 / with.len() as f64
    }
}

/// For each aggression value, `episodes` matches of `observer` against a
/// fixed strategy drawn from `pool` with that value. The opponent sits in
/// P2 and plays at least `min_ticks` ticks unless the match ends first.
pub fn recognition_trials(
    observer: &AgentSpec,
    pool: &[Strategy],
    episodes: u32,
    cfg: &TournamentConfig,
    ctx: &AgentContext,
) -> Result<RecognitionReport, HarnessError> {
    let mut jobs = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.base_seed ^ 0x5eed);
    for aggression in [false, true] {
        let candidates: Vec<Strategy> = pool.iter().copied().filter(|s| s.aggression == aggression).collect();
        if candidates.is_empty() {
            return Err(HarnessError::Config(format!("pool has no strategy with aggression={aggression}")));
        }
        for e in 0..episodes {
            let truth = *candidates.choose(&mut rng).expect("non-empty");
            jobs.push((truth, cfg.base_seed + e as u64 + if aggression { 10_000 } else { 0 }));
        }
    }
    let trials = parallel_map(&jobs, cfg.workers, |(truth, seed)| {
        let mcfg = super::MatchConfig {
            seed: *seed,
            episodes: 1,
            alternate_seats: false,
            ..cfg.match_config(observer.clone(), AgentSpec::fixed(*truth))
        };
        let (result, traj) = super::run_match_traced(&mcfg, ctx)?;
        let rec: Recognition = ctx.recognizer.recognize(&extract(&traj), crate::engine::Player::P2);
        Ok(RecognitionTrial {
            seed: *seed,
            truth: *truth,
            recognized: rec.strategy,
            confidence: rec.confidence,
            final_replan: result.replans[0].last().map(|e| e.recognized),
            final_tick: result.final_tick,
        })
    });
    Ok(RecognitionReport {
        trials: trials.into_iter().collect::<Result<_, HarnessError>>()?,
    })
}

/// Bootstrap interval for `mean(a) - mean(b)`. Equal-length inputs are
/// resampled in pairs.
pub fn bootstrap_diff(a: &[f64], b: &[f64], iters: usize, level: f64, seed: u64) -> (f64, f64, f64) {
    let diff = mean(a) - mean(b);
    if a.is_empty() || b.is_empty() || iters == 0 {
        return (diff, diff, diff);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let paired = a.len() == b.len();
    let mut stats: Vec<f64> = (0..iters)
        .map(|_| {
            if paired {
                let mut s = 0.0;
                for _ in 0..a.len() {
                    let i = rng.gen_range(0..a.len());
                    s += a[i] - b[i];
                }
                s / a.len() as f64
            } else {
                let ma = (0..a.len()).map(|_| a[rng.gen_range(0..a.len())]).sum::<f64>() / a.len() as f64;
                let mb = (0..b.len()).map(|_| b[rng.gen_range(0..b.len())]).sum::<f64>() / b.len() as f64;
                ma - mb
            }
        })
        .collect();
    stats.sort_by(f64::total_cmp);
    let tail = (1.0 - level) / 2.0;
    let at = |q: f64| stats[((q * iters as f64).floor() as usize).min(iters - 1)];
    (diff, at(tail), at(1.0 - tail))
}

/// Pairwise table over agents. Cell `[i][j]` is agent i's tally against
/// agent j; the two directions of a pair come from the same matches.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub labels: Vec<String>,
    pub cells: Vec<Vec<Option<BattleResult>>>,
    #[serde(skip)]
    pub matches: Vec<MatchResult>,
}

impl ExperimentReport {
    pub fn rate(&self, i: usize, j: usize) -> Option<f64> {
        self.cells[i][j].map(|c| c.r())
    }
}

/// Plays every unordered pair of `agents` for `cfg.episodes` episodes with
/// alternating seats.
pub fn run_experiment(
    agents: &[AgentSpec],
    cfg: &TournamentConfig,
    ctx: &AgentContext,
) -> Result<ExperimentReport, HarnessError> {
    if agents.len() < 2 {
        return Err(HarnessError::Config("an experiment needs at least two agents".into()));
    }
    let n = agents.len();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    let runs = parallel_map(&pairs, cfg.workers, |&(i, j)| run_agents(&agents[i], &agents[j], cfg, ctx));
    let mut report = ExperimentReport {
        labels: agents.iter().map(AgentSpec::label).collect(),
        cells: vec![vec![None; n]; n],
        matches: Vec::new(),
    };
    for (&(i, j), run) in pairs.iter().zip(runs) {
        let (tally, matches) = run?;
        report.cells[i][j] = Some(tally);
        report.cells[j][i] = Some(tally.reversed());
        report.matches.extend(matches);
    }
    Ok(report)
}

/// One row of an ablation table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub label: String,
    pub score: f64,
    pub total: BattleResult,
    /// Gap to the next row with its 95% bootstrap interval.
    pub gap_to_next: Option<(f64, f64, f64)>,
}

/// Scores each variant against the same pool; gaps are between consecutive
/// variants, with `bootstrap_iters` resamples each.
pub fn run_ablation(
    variants: &[AgentSpec],
    pool: &[Strategy],
    cfg: &TournamentConfig,
    ctx: &AgentContext,
    bootstrap_iters: usize,
) -> Result<(Vec<AblationRow>, Vec<PoolScore>), HarnessError> {
    let scores: Vec<PoolScore> = variants
        .iter()
        .map(|v| score_against_pool(v, pool, cfg, ctx))
        .collect::<Result<_, _>>()?;
    let rows = scores
        .iter()
        .enumerate()
        .map(|(i, s)| AblationRow {
            label: s.label.clone(),
            score: s.mean(),
            total: s.total(),
            gap_to_next: scores
                .get(i + 1)
                .map(|next| bootstrap_diff(&s.scores, &next.scores, bootstrap_iters, 0.95, cfg.base_seed + i as u64)),
        })
        .collect();
    Ok((rows, scores))
}
