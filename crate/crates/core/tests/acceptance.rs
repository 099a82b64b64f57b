//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails. Tables go to the target tmp dir.

use std::collections::BTreeSet;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sap_core::engine::{
    load_map, Assignments, AtomicAction, CompletionStatus, GameState, MapId, Outcome,
};
use sap_core::harness::experiment::{
    fixed_pool_baseline, recognition_trials, run_ablation, run_experiment, score_against_pool,
    searched_responses, searched_score,
};
use sap_core::harness::report::{emit_reports, Reports};
use sap_core::harness::{
    run_battle_pair, run_round_robin, AgentContext, AgentSpec, SapVariant, TournamentConfig,
};
use sap_core::sen::{
    best_response, evaluate, gradient, split_dataset, train, ResultDataset, Sample, SenParams,
    Split, TrainConfig,
};
use sap_core::strategy::{
    encode, enumerate_space, generate_library, split_seen_unseen, AttackTarget, BarracksTiming,
    Composition, Defense, DiverseSource, Economy, Strategy,
};

struct Verdicts {
    failed: Vec<usize>,
}

impl Verdicts {
    fn check(&mut self, n: usize, name: &str, ok: bool, detail: String) {
        println!("{} {n:>2} {name}: {detail}", if ok { "PASS" } else { "FAIL" });
        if !ok {
            self.failed.push(n);
        }
    }
}

fn secs(d: Duration) -> String {
    format!("{:.1}s", d.as_secs_f64())
}

/// Network output logit computed from the raw layer weights, summing in
/// input order.
fn logit(p: &SenParams, x: &[f64]) -> f64 {
    let mut a = x.to_vec();
    for (i, l) in p.layers.iter().enumerate() {
        let mut z = vec![0.0; l.n_out];
        for (o, zo) in z.iter_mut().enumerate() {
            let mut s = 0.0;
            for k in 0..l.n_in {
                s += l.w[o * l.n_in + k] * a[k];
            }
            *zo = s + l.b[o];
            if i + 1 < p.layers.len() && *zo < 0.0 {
                *zo = 0.0;
            }
        }
        a = z;
    }
    a[0]
}

fn loss(p: &SenParams, batch: &[Sample]) -> f64 {
    batch
        .iter()
        .map(|s| {
            let y = 1.0 / (1.0 + (-logit(p, &s.x)).exp());
            -(s.target * y.ln() + (1.0 - s.target) * (1.0 - y).ln())
        })
        .sum::<f64>()
        / batch.len() as f64
}

fn pair_x(a: &Strategy, b: &Strategy) -> Vec<f64> {
    let mut x = encode(a).to_vec();
    x.extend(encode(b));
    x
}

/// Nested-loop argmax over valid strategies; the first strict maximum wins.
fn oracle_best(p: &SenParams, opp: &Strategy) -> Strategy {
    let mut best: Option<(Strategy, f64)> = None;
    for economy in [Economy::Low, Economy::Med, Economy::High] {
        for barracks in [BarracksTiming::None, BarracksTiming::Early, BarracksTiming::Late] {
            for composition in [
                Composition::Worker,
                Composition::Light,
                Composition::Heavy,
                Composition::Ranged,
                Composition::Mixed,
            ] {
                if composition != Composition::Worker && barracks == BarracksTiming::None {
                    continue;
                }
                for aggression in [false, true] {
                    for attack_target in [AttackTarget::Closest, AttackTarget::Workers, AttackTarget::Buildings] {
                        for defense in [Defense::None, Defense::Perimeter, Defense::Full] {
                            let s = Strategy {
                                economy,
                                barracks,
                                composition,
                                aggression,
                                attack_target,
                                defense,
                            };
                            let v = logit(p, &pair_x(&s, opp));
                            if best.is_none_or(|(_, bv)| v > bv) {
                                best = Some((s, v));
                            }
                        }
                    }
                }
            }
        }
    }
    best.unwrap().0
}

fn random_orders(s: &GameState, rng: &mut ChaCha8Rng) -> Assignments {
    let mut out = Assignments::new();
    let mut stock = s.resources;
    for u in s.units.iter().filter(|u| u.is_idle()) {
        let Some(p) = u.owner.player() else { continue };
        let legal = s.legal_actions(u.id).unwrap();
        let a = legal[rng.gen_range(0..legal.len())];
        if let AtomicAction::Produce(_, t) = a {
            let cost = s.stats.get(t).cost;
            if stock[p.index()] < cost {
                continue;
            }
            stock[p.index()] -= cost;
        }
        if a != AtomicAction::Noop {
            out.insert(u.id, a);
        }
    }
    out
}

/// Plays one random episode and returns the first violated invariant, and
/// whether the mirrored copy was compared on at least one tick.
fn engine_episode(seed: u64) -> (Option<String>, bool) {
    let map = if seed % 5 == 4 { MapId::BasesWorkers16x16 } else { MapId::BasesWorkers8x8 };
    let start = load_map(map, seed);
    let minerals = start.mineral_total();
    let mut s = start.clone();
    let mut r = start.rotate180();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xa5a5);
    let mut log = Vec::new();
    let mut mirrored = true;
    let mut compared = false;
    for _ in 0..120 {
        if s.outcome() != Outcome::Ongoing {
            break;
        }
        let orders = random_orders(&s, &mut rng);
        let rotated: Assignments = orders.iter().map(|(id, a)| (*id, s.rotate_action(*a))).collect();
        let rec = s.apply(&orders).unwrap();
        let cells: BTreeSet<_> = s.units.iter().map(|u| u.pos).collect();
        if cells.len() != s.units.len() || s.units.iter().any(|u| !s.in_bounds(u.pos)) {
            return (Some(format!("seed {seed}: occupancy at tick {}", s.tick)), compared);
        }
        if s.mineral_total() != minerals {
            return (Some(format!("seed {seed}: minerals at tick {}", s.tick)), compared);
        }
        if mirrored {
            let rrec = r.apply(&rotated).unwrap();
            let cancelled = |c: &sap_core::engine::Completion| c.status == CompletionStatus::Cancelled;
            mirrored = !rec.completions.iter().any(cancelled) && !rrec.completions.iter().any(cancelled);
            if mirrored {
                if r.shape() != s.rotate180().shape() {
                    return (Some(format!("seed {seed}: rotation at tick {}", s.tick)), compared);
                }
                compared = true;
            }
        }
        log.push(orders);
    }
    let mut again = start;
    for o in &log {
        again.apply(o).unwrap();
    }
    if again != s {
        return (Some(format!("seed {seed}: replay differs")), compared);
    }
    (None, compared)
}

fn main() {
    let out_dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("acceptance");
    let mut v = Verdicts { failed: Vec::new() };
    let mut reports = Reports::default();

    // 1. Library, split and round-robin tournament.
    let t = Instant::now();
    let lib = generate_library(50, &mut DiverseSource::default(), 7).unwrap();
    let (seen, unseen) = split_seen_unseen(&lib, 30, 7).unwrap();
    let unique: BTreeSet<String> = lib.strategies().iter().map(Strategy::to_record).collect();
    let cfg = TournamentConfig {
        map: MapId::BasesWorkers8x8,
        episodes: 5,
        base_seed: 1000,
        ..TournamentConfig::default()
    };
    let ctx = AgentContext::default();
    let mut streamed = 0;
    let data = run_round_robin(&seen, &cfg, &ctx, &ResultDataset::default(), |_| {
        streamed += 1;
        Ok(())
    })
    .unwrap();
    let elapsed = t.elapsed();
    let eps_ok = data.records.iter().all(|r| r.episodes == 5);
    v.check(
        1,
        "pipeline-scale tournament",
        unique.len() == 50
            && seen.len() == 30
            && unseen.len() == 20
            && data.len() == 900
            && streamed == 900
            && eps_ok
            && elapsed < Duration::from_secs(3600),
        format!(
            "{} unique strategies, split {}/{}, {} records with N=5 in {} on {} thread(s)",
            unique.len(),
            seen.len(),
            unseen.len(),
            data.len(),
            secs(elapsed),
            std::thread::available_parallelism().map_or(1, |n| n.get())
        ),
    );

    // 2. Analytic against central finite-difference gradients.
    let t = Instant::now();
    let space = enumerate_space();
    let mut worst: f64 = 0.0;
    let mut checked = 0usize;
    for seed in 0..10u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let hidden: Vec<usize> = (0..rng.gen_range(1..=2)).map(|_| rng.gen_range(4..=16)).collect();
        let p = SenParams::init(&hidden, seed);
        let batch: Vec<Sample> = (0..8)
            .map(|_| {
                let a = space.choose(&mut rng).unwrap();
                let b = space.choose(&mut rng).unwrap();
                Sample::new(a, b, [0.0, 0.5, 1.0][rng.gen_range(0..3)])
            })
            .collect();
        let (_, g) = gradient(&p, &batch).unwrap();
        let h = 1e-5;
        for l in 0..p.layers.len() {
            let n_w = p.layers[l].w.len();
            for k in 0..n_w + p.layers[l].b.len() {
                let nudge = |d: f64| {
                    let mut q = p.clone();
                    if k < n_w {
                        q.layers[l].w[k] += d;
                    } else {
                        q.layers[l].b[k - n_w] += d;
                    }
                    loss(&q, &batch)
                };
                let numeric = (nudge(h) - nudge(-h)) / (2.0 * h);
                let analytic = if k < n_w { g.layers[l].w[k] } else { g.layers[l].b[k - n_w] };
                let scale = analytic.abs().max(numeric.abs()).max(1e-6);
                worst = worst.max((analytic - numeric).abs() / scale);
                checked += 1;
            }
        }
    }
    let elapsed = t.elapsed();
    v.check(
        2,
        "gradient check",
        worst <= 1e-4 && elapsed < Duration::from_secs(10),
        format!("max relative error {worst:.2e} over {checked} parameters of 10 random small nets, {}", secs(elapsed)),
    );

    // 3. Network learnability on the tournament data.
    let data = split_dataset(&data, 0.2, 3);
    let trained = train(&data, &TrainConfig::default()).unwrap();
    let m = evaluate(&trained.params, &data.with_split(Split::Test), 0.5).unwrap();
    v.check(
        3,
        "network learnability",
        m.accuracy >= 0.75 && m.fp_rate <= 0.30,
        format!(
            "held-out accuracy {:.3}, FP rate {:.3}, confusion {:?}, n={}",
            m.accuracy, m.fp_rate, m.confusion, m.n
        ),
    );
    reports.sen = Some(m);
    let params = trained.params;

    // 4. Best response against an independent exhaustive maximizer.
    let mut rng = ChaCha8Rng::seed_from_u64(44);
    let mut agree = 0;
    for _ in 0..20 {
        let opp = *space.choose(&mut rng).unwrap();
        if best_response(&params, &opp).0 == oracle_best(&params, &opp) {
            agree += 1;
        }
    }
    let zero = SenParams::zeros(&params.shape());
    let tie = best_response(&zero, &space[7]);
    let tie_ok = tie.0 == space[0] && tie.0 == oracle_best(&zero, &space[7]) && tie.1 == 0.5;
    v.check(
        4,
        "best-response exactness",
        agree == 20 && tie_ok,
        format!(
            "{agree}/20 random opponents match the nested-loop maximizer; all-tie network picks `{}`",
            tie.0.to_record()
        ),
    );

    // 5. Searched responses against the unseen strategies.
    let sap_ctx = AgentContext::default().with_sen(params.clone());
    let unseen_s = unseen.strategies();
    let rows = searched_responses(&params, &unseen_s, &cfg, &sap_ctx).unwrap();
    let searched = searched_score(&rows);
    v.check(
        5,
        "searched-response efficacy",
        searched >= 0.60,
        format!("aggregate score {searched:.3} over {} opponents x 5 seeds", rows.len()),
    );
    reports.searched = rows;

    // 6. Closed-loop dominance.
    let mut pool = seen.strategies();
    pool.extend(unseen_s.iter().copied());
    let pool_cfg = TournamentConfig {
        episodes: 2,
        ..cfg.clone()
    };
    let sap_pool = score_against_pool(&AgentSpec::sap(), &pool, &pool_cfg, &sap_ctx).unwrap();
    let fixed = fixed_pool_baseline(&pool, &pool_cfg, &sap_ctx).unwrap();
    let h2h_cfg = TournamentConfig {
        episodes: 20,
        ..cfg.clone()
    };
    let exp = run_experiment(
        &[AgentSpec::sap(), AgentSpec::Vanilla, AgentSpec::TipsAugmented],
        &h2h_cfg,
        &sap_ctx,
    )
    .unwrap();
    let (vs_vanilla, vs_ta) = (exp.rate(0, 1).unwrap(), exp.rate(0, 2).unwrap());
    let gap = sap_pool.mean() - fixed.mean();
    v.check(
        6,
        "closed-loop dominance",
        sap_pool.scores.len() >= 100 && gap >= 0.10 && vs_vanilla >= 0.5 && vs_ta >= 0.5,
        format!(
            "SAP {:.3} over {} matches vs Fixed-vs-Fixed {:.3} (gap {gap:.3}); head-to-head vs Vanilla {vs_vanilla:.3}, vs TA {vs_ta:.3} over 20 episodes",
            sap_pool.mean(),
            sap_pool.scores.len(),
            fixed.mean()
        ),
    );
    reports.matches = exp.matches.clone();
    reports.experiment = Some(exp);

    // 7. Ablation ordering.
    let (ablation, _) = run_ablation(
        &[
            AgentSpec::sap(),
            AgentSpec::Sap {
                variant: SapVariant::WithoutSen,
            },
            AgentSpec::Sap {
                variant: SapVariant::WithoutTips,
            },
        ],
        &pool,
        &pool_cfg,
        &sap_ctx,
        2000,
    )
    .unwrap();
    let epe = score_against_pool(
        &AgentSpec::Sap {
            variant: SapVariant::PerEpisode,
        },
        &pool,
        &pool_cfg,
        &sap_ctx,
    )
    .unwrap();
    let ordered = ablation.windows(2).all(|w| w[0].score >= w[1].score);
    let detail: Vec<String> = ablation
        .iter()
        .map(|r| match r.gap_to_next {
            Some((d, lo, hi)) => format!("{} {:.3} (gap {d:+.3}, 95% CI [{lo:+.3}, {hi:+.3}])", r.label, r.score),
            None => format!("{} {:.3}", r.label, r.score),
        })
        .collect();
    v.check(
        7,
        "ablation ordering",
        ordered && ablation.iter().all(|r| r.total.episodes() >= 100),
        format!("{}; SAP-EPE {:.3}", detail.join(" > "), epe.mean()),
    );
    reports.ablation = ablation;

    // 8. Recognition of the aggression dimension.
    let observer = AgentSpec::fixed(Strategy::default());
    let rec = recognition_trials(&observer, &pool, 50, &cfg, &ctx).unwrap();
    let (no, yes) = (rec.aggression_accuracy(false), rec.aggression_accuracy(true));
    let dims = rec.accuracy(|_| true);
    v.check(
        8,
        "recognition accuracy",
        no >= 0.80 && yes >= 0.80,
        format!(
            "aggression=false {no:.2}, aggression=true {yes:.2} over 50 episodes each; per-dimension {:?}",
            dims.map(|d| (d * 100.0).round() / 100.0)
        ),
    );
    reports.recognition = Some(rec);
    let adapt = recognition_trials(&AgentSpec::sap(), &pool, 50, &cfg, &sap_ctx).unwrap();
    let early = adapt.trials.iter().filter(|t| t.final_tick < cfg.plan_interval).count();
    println!(
        "INFO    SAP final-replan aggression recognition {:.2}; {early} of {} matches ended before the first replan after tick 0",
        adapt.final_replan_aggression_accuracy(),
        adapt.trials.len()
    );

    // 9. Engine invariants over random episodes.
    let t = Instant::now();
    let mut violation = None;
    let mut mirrored = 0;
    for seed in 0..1000 {
        let (bad, compared) = engine_episode(seed);
        mirrored += compared as usize;
        if violation.is_none() {
            violation = bad;
        }
    }
    let elapsed = t.elapsed();
    v.check(
        9,
        "engine invariants",
        violation.is_none() && mirrored > 500 && elapsed < Duration::from_secs(300),
        format!(
            "1000 random episodes ({mirrored} with mirror checks) in {}: {}",
            secs(elapsed),
            violation.unwrap_or_else(|| "no violation".into())
        ),
    );

    // 10. Self-play calibration.
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let picks: Vec<Strategy> = space.choose_multiple(&mut rng, 5).copied().collect();
    let self_cfg = TournamentConfig {
        episodes: 50,
        base_seed: 5000,
        ..cfg.clone()
    };
    let rs: Vec<f64> = picks
        .iter()
        .map(|s| run_battle_pair(s, s, &self_cfg, &ctx).unwrap().r())
        .collect();
    v.check(
        10,
        "self-play calibration",
        rs.iter().all(|r| (0.35..=0.65).contains(r)),
        format!("r_ii = {:?}", rs.iter().map(|r| (r * 1000.0).round() / 1000.0).collect::<Vec<_>>()),
    );

    match emit_reports(&reports, &out_dir) {
        Ok(paths) => println!("INFO    {} tables written to {}", paths.len(), out_dir.display()),
        Err(e) => println!("INFO    report emission failed: {e}"),
    }
    if !v.failed.is_empty() {
        println!("failed criteria: {:?}", v.failed);
        std::process::exit(1);
    }
}
