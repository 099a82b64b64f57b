//! Run configuration, read from one TOML file. Every table and key is
//! optional; missing values take their defaults.

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{AgentContext, AgentSpec, HarnessError, TournamentConfig};
use crate::actions::ExecutorConfig;
use crate::planner::{PlannerConfig, PlannerPort, RulePlanner};
use crate::recognition::{RecognizerConfig, RecognizerPort, RuleRecognizer};
use crate::remote::RemoteConfig;
use crate::sen::{SenParams, TrainConfig};
use crate::strategy::{DiverseSource, StrategySource, UniformSource};

/// Where new strategies come from.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LibrarySource {
    /// Maximally spread over the dimensions.
    #[default]
    Diverse,
    Uniform,
    /// The configured text generator; rejected rounds fall back to uniform
    /// draws.
    Remote,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LibraryConfig {
    pub size: usize,
    pub seen: usize,
    pub source: LibrarySource,
}

impl Default for LibraryConfig {
    fn default() -> Self {
        LibraryConfig {
            size: 50,
            seen: 30,
            source: LibrarySource::Diverse,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SenConfig {
    pub train: TrainConfig,
    /// Share of records held out for evaluation.
    pub test_fraction: f64,
    pub split_seed: u64,
    /// Predictions at or above this count as a win.
    pub threshold: f64,
}

impl Default for SenConfig {
    fn default() -> Self {
        SenConfig {
            train: TrainConfig::default(),
            test_fraction: 0.2,
            split_seed: 3,
            threshold: 0.5,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Agents of the pairwise table.
    pub agents: Vec<AgentSpec>,
    /// Episodes per pair of the pairwise table and of head-to-head runs.
    pub episodes: u32,
    /// Episodes per opponent when scoring against a strategy pool.
    pub pool_episodes: u32,
    /// Episodes per aggression value in recognition trials.
    pub recognition_episodes: u32,
    pub bootstrap_iters: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            agents: vec![
                AgentSpec::sap(),
                AgentSpec::Vanilla,
                AgentSpec::TipsAugmented,
            ],
            episodes: 10,
            pool_episodes: 4,
            recognition_episodes: 50,
            bootstrap_iters: 2000,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub library: LibraryConfig,
    pub tournament: TournamentConfig,
    pub planner: PlannerConfig,
    pub executor: ExecutorConfig,
    pub recognizer: RecognizerConfig,
    pub sen: SenConfig,
    pub experiment: ExperimentConfig,
    pub remote: RemoteConfig,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<RunConfig, HarnessError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<RunConfig, HarnessError> {
        RunConfig::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: &str| Err(HarnessError::Config(m.into()));
        if self.library.seen > self.library.size {
            return bad("library.seen exceeds library.size");
        }
        if self.tournament.episodes == 0 || self.experiment.episodes == 0 {
            return bad("episodes must be at least 1");
        }
        if self.tournament.plan_interval == 0 {
            return bad("tournament.plan_interval must be positive");
        }
        if !(0.0..1.0).contains(&self.sen.test_fraction) {
            return bad("sen.test_fraction must be in [0, 1)");
        }
        self.tournament
            .engine
            .stats
            .validate()
            .map_err(HarnessError::Config)?;
        for a in &self.experiment.agents {
            if let AgentSpec::Fixed { strategy } = a {
                strategy.validate()?;
            }
        }
        Ok(())
    }

    /// Tournament settings with the run seed as base seed and an optional
    /// worker override.
    pub fn tournament(&self, workers: Option<usize>) -> TournamentConfig {
        TournamentConfig {
            base_seed: self.seed,
            workers: workers.or(self.tournament.workers),
            ..self.tournament.clone()
        }
    }

    /// Strategy source for library generation.
    pub fn strategy_source(&self) -> Result<Box<dyn StrategySource>, HarnessError> {
        Ok(match self.library.source {
            LibrarySource::Diverse => Box::new(DiverseSource::default()),
            LibrarySource::Uniform => Box::new(UniformSource::default()),
            LibrarySource::Remote => remote_source(&self.remote)?,
        })
    }

    /// Agent context with the configured ports. Remote ports are used only
    /// when `remote.enabled` is set.
    pub fn context(&self, sen: Option<SenParams>) -> Result<AgentContext, HarnessError> {
        let (planner, recognizer) = if self.remote.enabled {
            remote_ports(self)?
        } else {
            (
                Arc::new(RulePlanner {
                    cfg: self.planner.clone(),
                }) as Arc<dyn PlannerPort>,
                Arc::new(RuleRecognizer {
                    cfg: self.recognizer.clone(),
                }) as Arc<dyn RecognizerPort>,
            )
        };
        Ok(AgentContext {
            sen: sen.map(Arc::new),
            planner,
            recognizer,
            executor: self.executor.clone(),
            ..AgentContext::default()
        })
    }
}

type Ports = (Arc<dyn PlannerPort>, Arc<dyn RecognizerPort>);

#[cfg(feature = "remote")]
fn remote_ports(cfg: &RunConfig) -> Result<Ports, HarnessError> {
    use crate::planner::TextPlanner;
    use crate::recognition::TextRecognizer;
    use crate::remote::ChatClient;

    let client = || ChatClient::from_config(&cfg.remote).map_err(|e| HarnessError::Config(e.to_string()));
    let mut planner = TextPlanner::new(client()?, cfg.planner.clone());
    planner.retries = cfg.remote.retries;
    let mut recognizer = TextRecognizer::new(client()?, cfg.recognizer.clone());
    recognizer.retries = cfg.remote.retries;
    Ok((Arc::new(planner), Arc::new(recognizer)))
}

#[cfg(not(feature = "remote"))]
fn remote_ports(_cfg: &RunConfig) -> Result<Ports, HarnessError> {
    Err(HarnessError::Config(
        "remote.enabled is set but this build has no remote support".into(),
    ))
}

#[cfg(feature = "remote")]
fn remote_source(cfg: &RemoteConfig) -> Result<Box<dyn StrategySource>, HarnessError> {
    use crate::remote::ChatClient;
    use crate::strategy::TextStrategySource;

    let client = ChatClient::from_config(cfg).map_err(|e| HarnessError::Config(e.to_string()))?;
    Ok(Box::new(TextStrategySource::new(client, crate::planner::ENV_INFO)))
}

#[cfg(not(feature = "remote"))]
fn remote_source(_cfg: &RemoteConfig) -> Result<Box<dyn StrategySource>, HarnessError> {
    Err(HarnessError::Config(
        "library.source = \"remote\" needs a build with remote support".into(),
    ))
}
