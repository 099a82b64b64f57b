//! `sap`: strategy generation, tournaments, network training, matches,
//! experiments and report tables. Every output lands under `--out-dir`.

use std::fs::{self, File, OpenOptions};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use sap_core::harness::config::RunConfig;
use sap_core::harness::experiment::{
    fixed_pool_baseline, recognition_trials, run_ablation, run_experiment, score_against_pool,
    searched_responses, searched_score, AblationRow, ExperimentReport, RecognitionReport,
    SearchedResponse,
};
use sap_core::harness::report::{emit_reports, Reports};
use sap_core::harness::{run_round_robin, run_series, AgentSpec, MatchResult, SapVariant, ScriptedKind};
use sap_core::sen::{
    evaluate, read_dataset, split_dataset, train, write_dataset, Metrics, ResultDataset, SenParams, Split,
};
use sap_core::strategy::{generate_library, read_library, split_seen_unseen, write_library, Strategy, StrategyLibrary};

const LIBRARY: &str = "library.jsonl";
const SEEN: &str = "seen.jsonl";
const UNSEEN: &str = "unseen.jsonl";
const DATASET: &str = "dataset.jsonl";
const SEN: &str = "sen.json";
const TRAINING: &str = "training.json";
const SEN_METRICS: &str = "sen_metrics.json";
const MATCHES: &str = "matches.json";
const EXPERIMENT: &str = "experiment.json";
const SEARCHED: &str = "searched.json";
const ABLATION: &str = "ablation.json";
const RECOGNITION: &str = "recognition.json";
const POOL_SCORES: &str = "pool_scores.json";
const MANIFEST: &str = "manifest.json";
const RESOLVED_CONFIG: &str = "config.toml";
const TABLES: &str = "tables";

#[derive(Parser)]
#[command(name = "sap", version, about = "Strategy-augmented planning for a grid-world RTS")]
struct Cli {
    /// TOML run configuration; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, default_value = "out")]
    out_dir: PathBuf,
    /// Worker threads; 1 runs sequentially.
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the strategy library and its seen/unseen split.
    GenStrategies,
    /// Round robin over the seen strategies; resumes a partial dataset.
    Tournament(TournamentArgs),
    /// Train the evaluation network on the dataset's train split.
    TrainSen(TrainArgs),
    /// Score the network on the dataset's test split.
    EvalSen(EvalArgs),
    /// Play a series between two agents.
    Match(MatchArgs),
    /// Pairwise agent table, pool scores, searched responses, ablation and
    /// recognition trials.
    Experiment(ExperimentArgs),
    /// Write CSV tables from the results found in the output directory.
    Report,
}

#[derive(Args)]
struct TournamentArgs {
    /// Strategy library; defaults to the seen split in the output directory.
    #[arg(long)]
    library: Option<PathBuf>,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    dataset: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    dataset: Option<PathBuf>,
    #[arg(long)]
    params: Option<PathBuf>,
}

#[derive(Args)]
struct MatchArgs {
    /// Agent in the first seat: sap, sap-epe, sap-no-sen, sap-no-tips,
    /// vanilla, ta, scripted:<bot> or fixed:<strategy record>.
    #[arg(long)]
    p1: String,
    #[arg(long)]
    p2: String,
    /// Defaults to the configured experiment episodes.
    #[arg(long)]
    episodes: Option<u32>,
    /// Keep seats fixed instead of swapping them every episode.
    #[arg(long)]
    fixed_seats: bool,
    #[arg(long)]
    params: Option<PathBuf>,
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(long)]
    params: Option<PathBuf>,
    /// Parts to run, comma separated: table, pool, searched, ablation,
    /// recognition.
    #[arg(long, value_delimiter = ',', default_value = "table,pool,searched,ablation,recognition")]
    parts: Vec<String>,
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

fn run(cli: Cli) -> Result<()> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p).with_context(|| format!("loading {}", p.display()))?,
        None => RunConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    let out = cli.out_dir.clone();
    fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
    let (name, outputs) = match &cli.command {
        Command::GenStrategies => ("gen-strategies", gen_strategies(&cfg, &out)?),
        Command::Tournament(a) => ("tournament", tournament(&cfg, &out, cli.workers, a)?),
        Command::TrainSen(a) => ("train-sen", train_sen(&cfg, &out, a)?),
        Command::EvalSen(a) => ("eval-sen", eval_sen(&cfg, &out, a)?),
        Command::Match(a) => ("match", play(&cfg, &out, cli.workers, a)?),
        Command::Experiment(a) => ("experiment", experiment(&cfg, &out, cli.workers, a)?),
        Command::Report => ("report", report(&out)?),
    };
    write_manifest(&cfg, &out, name, cli.workers, &outputs)
}

fn or_default(path: &Option<PathBuf>, out: &Path, name: &str) -> PathBuf {
    path.clone().unwrap_or_else(|| out.join(name))
}

fn load_library(path: &Path) -> Result<StrategyLibrary> {
    let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    Ok(read_library(BufReader::new(f))?)
}

fn save_library(lib: &StrategyLibrary, path: &Path) -> Result<PathBuf> {
    write_library(lib, BufWriter::new(File::create(path)?))?;
    Ok(path.to_path_buf())
}

fn load_dataset(path: &Path) -> Result<ResultDataset> {
    let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    Ok(read_dataset(BufReader::new(f))?)
}

fn load_params(path: &Path) -> Result<SenParams> {
    let text = fs::read_to_string(path).with_context(|| format!("opening {}", path.display()))?;
    Ok(SenParams::load_json(&text)?)
}

fn save_json<T: serde::Serialize + ?Sized>(value: &T, path: &Path) -> Result<PathBuf> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(path.to_path_buf())
}

fn load_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Option<T>> {
    if !path.exists() {
        return Ok(None);
    }
    let f = File::open(path)?;
    let v = serde_json::from_reader(BufReader::new(f)).with_context(|| format!("reading {}", path.display()))?;
    Ok(Some(v))
}

fn parse_agent(s: &str) -> Result<AgentSpec> {
    let sap = |variant| AgentSpec::Sap { variant };
    Ok(match s.trim().to_ascii_lowercase().as_str() {
        "sap" => sap(SapVariant::Full),
        "sap-epe" => sap(SapVariant::PerEpisode),
        "sap-no-sen" => sap(SapVariant::WithoutSen),
        "sap-no-tips" => sap(SapVariant::WithoutTips),
        "vanilla" => AgentSpec::Vanilla,
        "ta" => AgentSpec::TipsAugmented,
        other => match other.split_once(':') {
            Some(("scripted", bot)) => AgentSpec::Scripted {
                bot: bot.parse::<ScriptedKind>().map_err(anyhow::Error::msg)?,
            },
            Some(("fixed", _)) => {
                let record = &s.trim()[s.trim().find(':').unwrap_or(0) + 1..];
                let strategy = Strategy::from_record(record)?;
                strategy.validate()?;
                AgentSpec::fixed(strategy)
            }
            _ => bail!("unknown agent `{s}`"),
        },
    })
}

fn gen_strategies(cfg: &RunConfig, out: &Path) -> Result<Vec<PathBuf>> {
    let mut source = cfg.strategy_source()?;
    let lib = generate_library(cfg.library.size, source.as_mut(), cfg.seed)?;
    let (seen, unseen) = split_seen_unseen(&lib, cfg.library.seen, cfg.seed)?;
    println!("{} strategies: {} seen, {} unseen", lib.len(), seen.len(), unseen.len());
    Ok(vec![
        save_library(&lib, &out.join(LIBRARY))?,
        save_library(&seen, &out.join(SEEN))?,
        save_library(&unseen, &out.join(UNSEEN))?,
    ])
}

fn tournament(cfg: &RunConfig, out: &Path, workers: Option<usize>, a: &TournamentArgs) -> Result<Vec<PathBuf>> {
    let lib = load_library(&or_default(&a.library, out, SEEN))?;
    let path = out.join(DATASET);
    let done = if path.exists() { load_dataset(&path)? } else { ResultDataset::default() };
    let mut w = OpenOptions::new().create(true).append(true).open(&path)?;
    let before = done.len();
    let data = run_round_robin(&lib, &cfg.tournament(workers), &cfg.context(None)?, &done, |rec| {
        let line = serde_json::to_string(rec).map_err(std::io::Error::other)?;
        writeln!(w, "{line}")?;
        Ok(())
    })?;
    w.flush()?;
    // Rewrite in row order so a resumed file matches a fresh run.
    write_dataset(&data, BufWriter::new(File::create(&path)?))?;
    println!("{} records ({} new)", data.len(), data.len() - before);
    Ok(vec![path])
}

fn split(cfg: &RunConfig, path: &Path) -> Result<ResultDataset> {
    Ok(split_dataset(&load_dataset(path)?, cfg.sen.test_fraction, cfg.sen.split_seed))
}

fn train_sen(cfg: &RunConfig, out: &Path, a: &TrainArgs) -> Result<Vec<PathBuf>> {
    let data = split(cfg, &or_default(&a.dataset, out, DATASET))?;
    let outcome = train(&data, &cfg.sen.train)?;
    let last = outcome.history.last();
    println!(
        "best epoch {} of {}, validation loss {:.4}",
        outcome.best_epoch,
        outcome.history.len(),
        last.map_or(f64::NAN, |s| s.best_val_loss)
    );
    let sen = out.join(SEN);
    fs::write(&sen, outcome.params.save_json())?;
    Ok(vec![sen, save_json(&outcome.history, &out.join(TRAINING))?])
}

fn eval_sen(cfg: &RunConfig, out: &Path, a: &EvalArgs) -> Result<Vec<PathBuf>> {
    let data = split(cfg, &or_default(&a.dataset, out, DATASET))?;
    let params = load_params(&or_default(&a.params, out, SEN))?;
    let m = evaluate(&params, &data.with_split(Split::Test), cfg.sen.threshold)?;
    println!(
        "accuracy {:.3}, FP rate {:.3}, confusion {:?} over {} records",
        m.accuracy, m.fp_rate, m.confusion, m.n
    );
    Ok(vec![save_json(&m, &out.join(SEN_METRICS))?])
}

/// Network parameters when any agent needs them.
fn params_for(agents: &[&AgentSpec], path: &Path) -> Result<Option<SenParams>> {
    if agents.iter().any(|a| a.needs_sen()) {
        load_params(path).map(Some)
    } else {
        Ok(None)
    }
}

fn play(cfg: &RunConfig, out: &Path, workers: Option<usize>, a: &MatchArgs) -> Result<Vec<PathBuf>> {
    let (p1, p2) = (parse_agent(&a.p1)?, parse_agent(&a.p2)?);
    let sen = params_for(&[&p1, &p2], &or_default(&a.params, out, SEN))?;
    let mut mcfg = cfg.tournament(workers).match_config(p1, p2);
    mcfg.episodes = a.episodes.unwrap_or(cfg.experiment.episodes);
    mcfg.alternate_seats = !a.fixed_seats;
    let results = run_series(&mcfg, &cfg.context(sen)?)?;
    let first: f64 = results.iter().map(MatchResult::first_score).sum();
    println!(
        "{} vs {}: {:.1} of {} for the first agent",
        mcfg.agents[0],
        mcfg.agents[1],
        first,
        results.len()
    );
    Ok(vec![save_json(&results, &out.join(MATCHES))?])
}

fn experiment(cfg: &RunConfig, out: &Path, workers: Option<usize>, a: &ExperimentArgs) -> Result<Vec<PathBuf>> {
    let known = ["table", "pool", "searched", "ablation", "recognition"];
    if let Some(p) = a.parts.iter().find(|p| !known.contains(&p.as_str())) {
        bail!("unknown experiment part `{p}`");
    }
    let want = |p: &str| a.parts.iter().any(|x| x == p);
    let params_path = or_default(&a.params, out, SEN);
    let needs_net = want("pool") || want("searched") || want("ablation") || cfg.experiment.agents.iter().any(AgentSpec::needs_sen);
    let sen = if needs_net { Some(load_params(&params_path)?) } else { None };
    let ctx = cfg.context(sen.clone())?;
    let base = cfg.tournament(workers);
    let pool_cfg = sap_core::harness::TournamentConfig {
        episodes: cfg.experiment.pool_episodes,
        ..base.clone()
    };
    let mut written = Vec::new();

    if want("table") {
        let table_cfg = sap_core::harness::TournamentConfig {
            episodes: cfg.experiment.episodes,
            ..base.clone()
        };
        let rep = run_experiment(&cfg.experiment.agents, &table_cfg, &ctx)?;
        for (i, label) in rep.labels.iter().enumerate() {
            let row: Vec<String> = (0..rep.labels.len())
                .map(|j| rep.rate(i, j).map_or("  -  ".into(), |r| format!("{r:.3}")))
                .collect();
            println!("{label:>14} {}", row.join(" "));
        }
        written.push(save_json(&rep, &out.join(EXPERIMENT))?);
        written.push(save_json(&rep.matches, &out.join(MATCHES))?);
    }

    let needs_pool = want("pool") || want("searched") || want("ablation") || want("recognition");
    if !needs_pool {
        return Ok(written);
    }
    let seen = load_library(&out.join(SEEN))?.strategies();
    let unseen = load_library(&out.join(UNSEEN))?.strategies();
    let pool: Vec<Strategy> = seen.iter().chain(&unseen).copied().collect();

    if want("pool") {
        let mut rows = Vec::new();
        for (label, opponents) in [("seen", &seen), ("unseen", &unseen)] {
            let sap = score_against_pool(&AgentSpec::sap(), opponents, &pool_cfg, &ctx)?;
            let fixed = fixed_pool_baseline(opponents, &pool_cfg, &ctx)?;
            println!(
                "SAP vs {label}: {:.3} over {} matches; fixed vs fixed {:.3}",
                sap.mean(),
                sap.scores.len(),
                fixed.mean()
            );
            rows.push(json!({
                "opponents": label,
                "sap": sap.mean(),
                "sap_matches": sap.scores.len(),
                "fixed_baseline": fixed.mean(),
                "fixed_matches": fixed.scores.len(),
                "per_opponent": sap.per_opponent,
            }));
        }
        written.push(save_json(&rows, &out.join(POOL_SCORES))?);
    }

    if want("searched") {
        let net = sen.as_ref().context("searched responses need network parameters")?;
        let rows = searched_responses(net, &unseen, &base, &ctx)?;
        println!("searched responses: {:.3} over {} opponents", searched_score(&rows), rows.len());
        written.push(save_json(&rows, &out.join(SEARCHED))?);
    }

    if want("ablation") {
        let variants: Vec<AgentSpec> = [
            SapVariant::Full,
            SapVariant::PerEpisode,
            SapVariant::WithoutSen,
            SapVariant::WithoutTips,
        ]
        .into_iter()
        .map(|variant| AgentSpec::Sap { variant })
        .collect();
        let (rows, _) = run_ablation(&variants, &pool, &pool_cfg, &ctx, cfg.experiment.bootstrap_iters)?;
        for r in &rows {
            println!("{:>14} {:.3}", r.label, r.score);
        }
        written.push(save_json(&rows, &out.join(ABLATION))?);
    }

    if want("recognition") {
        let observer = AgentSpec::fixed(Strategy::default());
        let rep = recognition_trials(&observer, &pool, cfg.experiment.recognition_episodes, &base, &ctx)?;
        println!(
            "aggression recognized: {:.2} when false, {:.2} when true",
            rep.aggression_accuracy(false),
            rep.aggression_accuracy(true)
        );
        written.push(save_json(&rep, &out.join(RECOGNITION))?);
    }
    Ok(written)
}

fn report(out: &Path) -> Result<Vec<PathBuf>> {
    let reports = Reports {
        experiment: load_json::<ExperimentReport>(&out.join(EXPERIMENT))?,
        matches: load_json::<Vec<MatchResult>>(&out.join(MATCHES))?.unwrap_or_default(),
        sen: load_json::<Metrics>(&out.join(SEN_METRICS))?,
        searched: load_json::<Vec<SearchedResponse>>(&out.join(SEARCHED))?.unwrap_or_default(),
        recognition: load_json::<RecognitionReport>(&out.join(RECOGNITION))?,
        ablation: load_json::<Vec<AblationRow>>(&out.join(ABLATION))?.unwrap_or_default(),
    };
    let paths = emit_reports(&reports, &out.join(TABLES))?;
    println!("{} tables in {}", paths.len(), out.join(TABLES).display());
    Ok(paths)
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Records each command's last run: config hash, versions, defaults and
/// outputs. Earlier commands' entries are kept.
fn write_manifest(cfg: &RunConfig, out: &Path, command: &str, workers: Option<usize>, outputs: &[PathBuf]) -> Result<()> {
    let toml = cfg.to_toml();
    fs::write(out.join(RESOLVED_CONFIG), &toml)?;
    let path = out.join(MANIFEST);
    let mut manifest: Value = load_json(&path)?.unwrap_or_else(|| json!({}));
    if !manifest.is_object() {
        manifest = json!({});
    }
    let mut features = Vec::new();
    if cfg!(feature = "parallel") {
        features.push("parallel");
    }
    if cfg!(feature = "remote") {
        features.push("remote");
    }
    manifest["versions"] = json!({
        "sap-cli": env!("CARGO_PKG_VERSION"),
        "sap-core": sap_core::VERSION,
        "network_format": sap_core::sen::FORMAT_VERSION,
        "features": features,
    });
    manifest["config_sha256"] = json!(hex(&Sha256::digest(toml.as_bytes())));
    manifest["defaults"] = json!({
        "episodes_per_pair": cfg.tournament.episodes,
        "episodes_per_table_cell": cfg.experiment.episodes,
        "episodes_per_pool_opponent": cfg.experiment.pool_episodes,
        "episodes_per_recognition_value": cfg.experiment.recognition_episodes,
        "plan_interval": cfg.tournament.plan_interval,
        "bootstrap_iters": cfg.experiment.bootstrap_iters,
        "draw_credit": 0.5,
    });
    manifest["commands"][command] = json!({
        "seed": cfg.seed,
        "workers": workers,
        "config_sha256": hex(&Sha256::digest(toml.as_bytes())),
        "outputs": outputs.iter().map(|p| p.display().to_string()).collect::<Vec<_>>(),
    });
    save_json(&manifest, &path)?;
    Ok(())
}
