//! Prompt assembly for text planners and parsing of their replies.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::ExpertTip;
use crate::actions::{AbstractAction, Plan};
use crate::engine::{GameState, Owner, Player, UnitType};
use crate::strategy::Strategy;

/// Static description of the game given to text models.
pub const ENV_INFO: &str = "\
Two players fight on a small grid. Each starts with a base, a worker and 5 minerals.
Workers harvest minerals next to a mineral patch and return them to a base.
Bases produce workers (cost 1). Workers build barracks (cost 5). Barracks produce
Light (cost 2, hp 4), Heavy (cost 3, hp 8) and Ranged (cost 2, range 3) units.
Units attack enemies in range. A player with no units left loses; the game is a
draw when the step limit is reached.";

const FORMAT: &str = "\
Reply with a plan, one abstract action per line, in priority order:
BUILD_BUILDING building_type=Barracks site=x,y
HARVEST_MINERAL worker_count=n
PRODUCE_UNIT unit_type=Worker|Light|Heavy|Ranged direction=N|E|S|W
ATTACK_ENEMY attacker_type=Worker|Light|Heavy|Ranged target_type=Any|Worker|Base|...
DEPLOY_UNIT unit_type=Worker|Light|Heavy|Ranged target=x,y";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptBundle {
    pub system: String,
    pub strategy: Option<String>,
    pub tips: Option<String>,
    pub observation: String,
    pub format: String,
}

impl PromptBundle {
    /// The user message: strategy, tips, observation and format sections.
    pub fn user_text(&self) -> String {
        let mut out = String::new();
        if let Some(s) = &self.strategy {
            let _ = writeln!(out, "Strategy:\n{s}\n");
        }
        if let Some(t) = &self.tips {
            let _ = writeln!(out, "Tips:\n{t}");
        }
        let _ = writeln!(out, "Observation:\n{}", self.observation);
        out.push_str(&self.format);
        out.push('\n');
        out
    }

    pub fn len(&self) -> usize {
        self.system.len() + self.user_text().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PromptError {
    #[error("prompt needs {needed} characters, budget is {budget}")]
    Budget { needed: usize, budget: usize },
}

fn owner_label(o: Owner, me: Player) -> &'static str {
    match o.player() {
        Some(p) if p == me => "own",
        Some(_) => "enemy",
        None => "neutral",
    }
}

/// Unit table and resource line. `detail` 0 lists every unit with its
/// status, 1 drops the status column, 2 keeps counts only.
fn render_observation(obs: &GameState, me: Player, detail: u8) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "tick {} of {}; map {}x{}; own stock {}; enemy stock {}",
        obs.tick,
        obs.step_limit,
        obs.width,
        obs.height,
        obs.stock(me),
        obs.stock(me.opponent())
    );
    let players: Vec<_> = obs.units.iter().filter(|u| u.owner != Owner::Neutral).collect();
    if detail < 2 {
        out.push_str(if detail == 0 {
            "side type x y hp status\n"
        } else {
            "side type x y hp\n"
        });
        for u in &players {
            let _ = write!(out, "{} {} {} {} {}", owner_label(u.owner, me), u.kind, u.pos.x, u.pos.y, u.hp);
            if detail == 0 {
                let status = match u.busy {
                    Some(b) => format!("{:?}", b.action),
                    None if u.carrying > 0 => format!("carrying {}", u.carrying),
                    None => "idle".into(),
                };
                let _ = write!(out, " {status}");
            }
            out.push('\n');
        }
    } else {
        for side in ["own", "enemy"] {
            let _ = write!(out, "{side}:");
            for kind in UnitType::ALL {
                let n = players
                    .iter()
                    .filter(|u| u.kind == kind && owner_label(u.owner, me) == side)
                    .count();
                if n > 0 {
                    let _ = write!(out, " {n} {kind}");
                }
            }
            out.push('\n');
        }
    }
    let minerals: Vec<String> = obs
        .units
        .iter()
        .filter(|u| u.kind == UnitType::Mineral && u.minerals > 0)
        .map(|u| format!("{},{}={}", u.pos.x, u.pos.y, u.minerals))
        .collect();
    let _ = writeln!(out, "minerals {}", minerals.join(" "));
    out
}

/// Prompt for planning `me`'s next steps. Without a strategy the strategy
/// section is left out, and likewise the tips section without tips. When the
/// bundle exceeds `budget`, the observation is compacted step by step.
pub fn assemble_prompt(
    obs: &GameState,
    me: Player,
    strategy: Option<&Strategy>,
    tips: &[ExpertTip],
    env_info: &str,
    budget: usize,
) -> Result<PromptBundle, PromptError> {
    let tips_text = (!tips.is_empty()).then(|| {
        tips.iter()
            .map(|t| format!("- {}\n", t.directive))
            .collect::<String>()
    });
    let mut bundle = PromptBundle {
        system: format!("You plan for one player of a real-time strategy game.\n{env_info}\n"),
        strategy: strategy.map(|s| s.to_record()),
        tips: tips_text,
        observation: String::new(),
        format: FORMAT.to_string(),
    };
    for detail in 0..=2 {
        bundle.observation = render_observation(obs, me, detail);
        if bundle.len() <= budget {
            return Ok(bundle);
        }
    }
    Err(PromptError::Budget {
        needed: bundle.len(),
        budget,
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParsedPlan {
    pub plan: Plan,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PlanParseError {
    #[error("no plan entries found ({0} lines skipped)")]
    Empty(usize),
}

/// Reads plan records out of free text. Code fences, bullets and numbering
/// are tolerated; lines that do not start with an action name are ignored,
/// and lines that do but fail to parse produce a warning.
pub fn parse_plan(text: &str) -> Result<ParsedPlan, PlanParseError> {
    let mut entries = Vec::new();
    let mut warnings = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw
            .trim()
            .trim_start_matches(|c: char| c == '-' || c == '*' || c == '`' || c.is_ascii_digit() || c == '.' || c == ')')
            .trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let head = line.split_whitespace().next().unwrap_or("");
        let looks_like_action = head.contains('_') && head.chars().all(|c| c.is_ascii_uppercase() || c == '_');
        if !looks_like_action {
            continue;
        }
        match AbstractAction::from_record(line) {
            Ok(e) => entries.push(e),
            Err(e) => warnings.push(format!("line {}: {e}", n + 1)),
        }
    }
    if entries.is_empty() {
        return Err(PlanParseError::Empty(warnings.len()));
    }
    Ok(ParsedPlan {
        plan: Plan::new(entries, 0),
        warnings,
    })
}
