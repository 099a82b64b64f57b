//! Planner implementations behind one interface.

use super::{assemble_prompt, parse_plan, rule_plan, ExpertTip, PlannerConfig, ENV_INFO};
use crate::actions::{validate_plan, IssueKind, Plan};
use crate::engine::{GameState, Player};
use crate::remote::{complete_with_retry, TextGenerator};
use crate::strategy::{Defense, Strategy};

/// Turns an observation, a strategy and tips into a plan.
pub trait PlannerPort: Send + Sync {
    fn plan(&self, obs: &GameState, player: Player, strategy: &Strategy, tips: &[ExpertTip]) -> Plan;

    /// A strategy meant to beat `recognized`, chosen without a value model.
    fn counter_strategy(&self, recognized: &Strategy) -> Strategy {
        invert_strategy(recognized)
    }
}

/// Flips aggression and mirrors defense (none and full swap).
pub fn invert_strategy(s: &Strategy) -> Strategy {
    let defense = match s.defense {
        Defense::None => Defense::Full,
        Defense::Perimeter => Defense::Perimeter,
        Defense::Full => Defense::None,
    };
    let out = Strategy {
        aggression: !s.aggression,
        defense,
        ..*s
    };
    debug_assert!(out.is_valid());
    out
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RulePlanner {
    pub cfg: PlannerConfig,
}

impl PlannerPort for RulePlanner {
    fn plan(&self, obs: &GameState, player: Player, strategy: &Strategy, tips: &[ExpertTip]) -> Plan {
        rule_plan(obs, player, strategy, tips, &self.cfg)
    }
}

/// Plans through a text generator, with one retry and the rule planner as
/// fallback.
pub struct TextPlanner<G> {
    pub generator: G,
    pub rules: RulePlanner,
    pub retries: u32,
}

impl<G: TextGenerator> TextPlanner<G> {
    pub fn new(generator: G, cfg: PlannerConfig) -> Self {
        TextPlanner {
            generator,
            rules: RulePlanner { cfg },
            retries: 1,
        }
    }

    /// The generator's plan, or why it could not be used.
    pub fn try_plan(
        &self,
        obs: &GameState,
        player: Player,
        strategy: &Strategy,
        tips: &[ExpertTip],
    ) -> Result<Plan, String> {
        let bundle = assemble_prompt(
            obs,
            player,
            Some(strategy),
            tips,
            ENV_INFO,
            self.rules.cfg.prompt_budget,
        )
        .map_err(|e| e.to_string())?;
        let reply = complete_with_retry(&self.generator, &bundle.system, &bundle.user_text(), self.retries)
            .map_err(|e| e.to_string())?;
        let parsed = parse_plan(&reply).map_err(|e| e.to_string())?;
        for w in &parsed.warnings {
            log::warn!("plan reply: {w}");
        }
        let mut plan = parsed.plan;
        let issues = validate_plan(&plan, obs, player);
        let bad: Vec<usize> = issues
            .iter()
            .filter(|i| i.kind != IssueKind::Unaffordable)
            .map(|i| i.entry)
            .collect();
        plan.entries = plan
            .entries
            .into_iter()
            .enumerate()
            .filter(|(i, _)| !bad.contains(i))
            .map(|(_, e)| e)
            .collect();
        plan.entries.truncate(self.rules.cfg.max_entries);
        plan.created_tick = obs.tick;
        if plan.is_empty() {
            return Err("no valid entries in reply".into());
        }
        Ok(plan)
    }
}

impl<G: TextGenerator + Send + Sync> PlannerPort for TextPlanner<G> {
    fn plan(&self, obs: &GameState, player: Player, strategy: &Strategy, tips: &[ExpertTip]) -> Plan {
        match self.try_plan(obs, player, strategy, tips) {
            Ok(plan) => plan,
            Err(e) => {
                log::warn!("text planner fell back to rules: {e}");
                self.rules.plan(obs, player, strategy, tips)
            }
        }
    }

    fn counter_strategy(&self, recognized: &Strategy) -> Strategy {
        let user = format!(
            "The opponent plays this strategy:\n{}\nChoose and play a counter-strategy. \
             Reply with one line of key=value pairs for economy, barracks, composition, \
             aggression, attack_target and defense.\n",
            recognized.to_record()
        );
        let system = format!("You choose strategies for a real-time strategy game.\n{ENV_INFO}\n");
        complete_with_retry(&self.generator, &system, &user, self.retries)
            .ok()
            .and_then(|reply| reply.lines().find_map(|l| Strategy::from_record(l).ok()))
            .unwrap_or_else(|| invert_strategy(recognized))
    }
}
