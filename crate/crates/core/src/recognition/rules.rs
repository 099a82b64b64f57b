//! Threshold rules and the recognizer port.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{PlayerSummary, TrajectorySummary};
use crate::engine::{Player, UnitType};
use crate::remote::{complete_with_retry, TextGenerator};
use crate::strategy::{
    space_description, AttackTarget, BarracksTiming, Composition, Defense, Economy, Strategy,
};

/// Cut-offs used by [`recognize`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RecognizerConfig {
    /// Harvests per tick with three workers cycling without travel.
    pub max_harvest_rate: f64,
    pub economy_low: f64,
    pub economy_high: f64,
    /// Barracks finished at or before this tick count as early.
    pub early_barracks_tick: u32,
    /// Top combat type share below which two or more types read as mixed.
    pub mixed_share: f64,
    pub aggression_enemy_half: f64,
    /// A first raid launched with fewer army units than this reads as
    /// aggressive.
    pub aggression_raid_army: u32,
    /// Share of attacks from the enemy half a raid needs to count.
    pub aggression_attack_share: f64,
    pub defense_full: f64,
    pub defense_perimeter: f64,
}

impl Default for RecognizerConfig {
    fn default() -> Self {
        RecognizerConfig {
            max_harvest_rate: 0.1,
            economy_low: 0.33,
            economy_high: 0.66,
            early_barracks_tick: 600,
            mixed_share: 0.6,
            aggression_enemy_half: 0.25,
            aggression_raid_army: 3,
            aggression_attack_share: 0.5,
            defense_full: 0.9,
            defense_perimeter: 0.6,
        }
    }
}

/// A strategy estimate with a confidence in `[0, 1]` per dimension, in
/// dimension order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Recognition {
    pub strategy: Strategy,
    pub confidence: [f64; 6],
}

impl Recognition {
    pub fn neutral() -> Self {
        Recognition {
            strategy: Strategy::default(),
            confidence: [0.0; 6],
        }
    }
}

/// Distance from `x` to the nearest cut-off, scaled by `scale`, capped at 1.
fn margin(x: f64, cuts: &[f64], scale: f64) -> f64 {
    let d = cuts.iter().map(|c| (x - c).abs()).fold(f64::INFINITY, f64::min);
    (d / scale).clamp(0.0, 1.0)
}

/// Top key, its count, and the runner-up count. Ties go to the earliest
/// key in `counts`.
fn modal<K: Copy + PartialEq>(counts: &[(K, u32)]) -> Option<(K, u32, u32)> {
    let mut best: Option<(K, u32)> = None;
    let mut second = 0;
    for &(k, n) in counts {
        match best {
            Some((_, b)) if n <= b => second = second.max(n),
            Some((_, b)) => {
                second = b;
                best = Some((k, n));
            }
            None => best = Some((k, n)),
        }
    }
    best.filter(|(_, n)| *n > 0).map(|(k, n)| (k, n, second))
}

fn recognize_player(p: &PlayerSummary, ticks: u32, cfg: &RecognizerConfig) -> Recognition {
    if ticks == 0 {
        return Recognition::neutral();
    }
    let mut conf = [0.0; 6];

    let rate = p.harvest_count as f64 / ticks as f64 / cfg.max_harvest_rate;
    let economy = if rate >= cfg.economy_high {
        Economy::High
    } else if rate >= cfg.economy_low {
        Economy::Med
    } else {
        Economy::Low
    };
    conf[0] = margin(rate, &[cfg.economy_low, cfg.economy_high], cfg.economy_low);

    let early = cfg.early_barracks_tick as f64;
    let barracks = match p.barracks_completed_tick {
        Some(t) if t <= cfg.early_barracks_tick => {
            conf[1] = margin(t as f64, &[early], early);
            BarracksTiming::Early
        }
        Some(t) => {
            conf[1] = margin(t as f64, &[early], early);
            BarracksTiming::Late
        }
        None => {
            conf[1] = (ticks as f64 / early - 1.0).clamp(0.0, 1.0);
            BarracksTiming::None
        }
    };

    let combat = [
        (Composition::Light, p.produced(UnitType::Light)),
        (Composition::Heavy, p.produced(UnitType::Heavy)),
        (Composition::Ranged, p.produced(UnitType::Ranged)),
    ];
    let total: u32 = combat.iter().map(|(_, n)| n).sum();
    let composition = match (barracks, modal(&combat)) {
        (BarracksTiming::None, _) | (_, None) => {
            conf[2] = conf[1];
            Composition::Worker
        }
        (_, Some((kind, top, second))) => {
            let share = top as f64 / total as f64;
            let types = combat.iter().filter(|(_, n)| *n > 0).count();
            if share < cfg.mixed_share && types >= 2 {
                conf[2] = margin(share, &[cfg.mixed_share], cfg.mixed_share);
                Composition::Mixed
            } else {
                conf[2] = (top - second) as f64 / total as f64;
                kind
            }
        }
    };

    let (aggression, c) = match p.raid_army {
        Some(n) => {
            let cut = cfg.aggression_raid_army as f64;
            let share = p.enemy_half_attack_share;
            (
                n < cfg.aggression_raid_army && share >= cfg.aggression_attack_share,
                margin(n as f64 + 0.5, &[cut], cut).min(margin(
                    share,
                    &[cfg.aggression_attack_share],
                    cfg.aggression_attack_share,
                )),
            )
        }
        None if p.attack_count > 0 => (
            p.enemy_half_fraction > cfg.aggression_enemy_half,
            margin(
                p.enemy_half_fraction,
                &[cfg.aggression_enemy_half],
                cfg.aggression_enemy_half.max(1.0 - cfg.aggression_enemy_half),
            ),
        ),
        None if p.enemy_half_fraction > cfg.aggression_enemy_half => (false, 0.5),
        None => (
            false,
            margin(
                p.enemy_half_fraction,
                &[cfg.aggression_enemy_half],
                cfg.aggression_enemy_half.max(1.0 - cfg.aggression_enemy_half),
            ),
        ),
    };
    conf[3] = c;

    let hits: u32 = p.attack_victims.values().sum();
    let workers = victim_count(p, &[UnitType::Worker]);
    let buildings = victim_count(p, &[UnitType::Base, UnitType::Barracks]);
    let victims = [
        (AttackTarget::Closest, hits - workers - buildings),
        (AttackTarget::Workers, workers),
        (AttackTarget::Buildings, buildings),
    ];
    let attack_target = match modal(&victims) {
        Some((t, top, second)) => {
            conf[4] = (top - second) as f64 / hits as f64;
            t
        }
        None => AttackTarget::Closest,
    };

    let own = p.own_half_fraction;
    let defense = if own >= cfg.defense_full {
        Defense::Full
    } else if own >= cfg.defense_perimeter {
        Defense::Perimeter
    } else {
        Defense::None
    };
    if p.own_half_fraction + p.enemy_half_fraction > 0.0 {
        conf[5] = margin(
            own,
            &[cfg.defense_perimeter, cfg.defense_full],
            cfg.defense_full - cfg.defense_perimeter,
        );
    }

    let strategy = Strategy {
        economy,
        barracks,
        composition,
        aggression,
        attack_target,
        defense,
    };
    debug_assert!(strategy.is_valid());
    Recognition {
        strategy,
        confidence: conf,
    }
}

fn victim_count(p: &PlayerSummary, kinds: &[UnitType]) -> u32 {
    kinds
        .iter()
        .map(|k| p.attack_victims.get(k).copied().unwrap_or(0))
        .sum()
}

/// Rule-based estimate of `player`'s strategy. An empty summary gives the
/// neutral strategy with zero confidence.
pub fn recognize(summary: &TrajectorySummary, player: Player, cfg: &RecognizerConfig) -> Recognition {
    recognize_player(summary.player(player), summary.ticks, cfg)
}

/// Text rendering of one player's summary for a text generator.
pub fn render_summary(summary: &TrajectorySummary, player: Player) -> String {
    let p = summary.player(player);
    let mut out = String::new();
    let _ = writeln!(out, "ticks observed: {}", summary.ticks);
    let _ = writeln!(out, "harvest actions: {}", p.harvest_count);
    let _ = writeln!(out, "return actions: {}", p.return_count);
    let produced: Vec<String> = p
        .produce_count
        .iter()
        .map(|(k, n)| format!("{}={n}", k.name()))
        .collect();
    let _ = writeln!(out, "units produced: {}", if produced.is_empty() { "none".into() } else { produced.join(" ") });
    match p.barracks_completed_tick {
        Some(t) => {
            let _ = writeln!(out, "barracks completed at tick: {t}");
        }
        None => {
            let _ = writeln!(out, "barracks completed at tick: never");
        }
    }
    let _ = writeln!(out, "attack actions: {}", p.attack_count);
    let victims: Vec<String> = p
        .attack_victims
        .iter()
        .map(|(k, n)| format!("{}={n}", k.name()))
        .collect();
    let _ = writeln!(out, "attacked unit types: {}", if victims.is_empty() { "none".into() } else { victims.join(" ") });
    let positions: Vec<String> = p
        .attack_issue_positions
        .iter()
        .take(16)
        .map(|q| format!("({},{})", q.x, q.y))
        .collect();
    let _ = writeln!(out, "attacker positions: {}", if positions.is_empty() { "none".into() } else { positions.join(" ") });
    let _ = writeln!(
        out,
        "army time in own half: {:.2}, in enemy half: {:.2}",
        p.own_half_fraction, p.enemy_half_fraction
    );
    if let Some(d) = p.mean_army_distance_to_enemy_base {
        let _ = writeln!(out, "mean army distance to enemy base: {d:.1}");
    }
    if let Some(n) = p.raid_army {
        let _ = writeln!(out, "army size at first attack from the enemy half: {n}");
    }
    let _ = writeln!(
        out,
        "share of attacks issued from the enemy half: {:.2}",
        p.enemy_half_attack_share
    );
    out
}

/// Asks `generator` to name `player`'s strategy from the rendered summary.
/// Any failure returns the rule-based result with a warning.
pub fn recognize_remote<G: TextGenerator + ?Sized>(
    summary: &TrajectorySummary,
    player: Player,
    generator: &G,
    retries: u32,
    cfg: &RecognizerConfig,
) -> (Recognition, Option<String>) {
    let fallback = recognize(summary, player, cfg);
    let system = format!(
        "You analyse real-time strategy game trajectories and name the strategy a player follows.\n{}",
        space_description()
    );
    let user = format!(
        "Observed behaviour of the player:\n{}\nReply with one line of key=value pairs for \
         economy, barracks, composition, aggression, attack_target and defense.\n",
        render_summary(summary, player)
    );
    let reply = match complete_with_retry(generator, &system, &user, retries) {
        Ok(r) => r,
        Err(e) => return (fallback, Some(format!("recognizer fell back to rules: {e}"))),
    };
    let parsed = reply
        .lines()
        .map(|l| l.trim().trim_matches('`').trim())
        .find_map(|l| Strategy::from_record(l).ok());
    match parsed {
        Some(strategy) => (
            Recognition {
                strategy,
                confidence: [1.0; 6],
            },
            None,
        ),
        None => (
            fallback,
            Some("recognizer reply held no valid strategy record; fell back to rules".into()),
        ),
    }
}

/// Names a player's strategy from a trajectory summary.
pub trait RecognizerPort: Send + Sync {
    fn recognize(&self, summary: &TrajectorySummary, player: Player) -> Recognition;
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct RuleRecognizer {
    pub cfg: RecognizerConfig,
}

impl RecognizerPort for RuleRecognizer {
    fn recognize(&self, summary: &TrajectorySummary, player: Player) -> Recognition {
        recognize(summary, player, &self.cfg)
    }
}

/// Recognizes through a text generator, falling back to the rules.
pub struct TextRecognizer<G> {
    pub generator: G,
    pub rules: RuleRecognizer,
    pub retries: u32,
}

impl<G: TextGenerator> TextRecognizer<G> {
    pub fn new(generator: G, cfg: RecognizerConfig) -> Self {
        TextRecognizer {
            generator,
            rules: RuleRecognizer { cfg },
            retries: 1,
        }
    }
}

impl<G: TextGenerator + Send + Sync> RecognizerPort for TextRecognizer<G> {
    fn recognize(&self, summary: &TrajectorySummary, player: Player) -> Recognition {
        let (r, warning) = recognize_remote(summary, player, &self.generator, self.retries, &self.rules.cfg);
        if let Some(w) = warning {
            log::warn!("{w}");
        }
        r
    }
}
