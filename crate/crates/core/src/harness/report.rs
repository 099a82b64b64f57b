//! CSV tables for plotting. Each table is written even when its input is
//! empty, so a missing result shows up as a header-only file.

use std::io;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::experiment::{AblationRow, ExperimentReport, RecognitionReport, SearchedResponse};
use super::{action_kind_names, outcome_name, MatchResult};
use crate::sen::Metrics;
use crate::strategy::DIMENSIONS;

pub const WIN_RATE_MATRIX: &str = "win_rate_matrix.csv";
pub const CONFUSION_MATRIX: &str = "confusion_matrix.csv";
pub const ACTION_SERIES: &str = "action_series.csv";
pub const METRIC_SERIES: &str = "metric_series.csv";
pub const MATCH_METRICS: &str = "match_metrics.csv";
pub const SEARCHED_RESPONSES: &str = "searched_responses.csv";
pub const RECOGNITION_ACCURACY: &str = "recognition_accuracy.csv";
pub const ABLATION: &str = "ablation.csv";

/// Everything a run may report. Absent parts produce header-only tables.
#[derive(Clone, Debug, Default)]
pub struct Reports {
    pub experiment: Option<ExperimentReport>,
    /// Matches whose series and metrics are tabulated.
    pub matches: Vec<MatchResult>,
    pub sen: Option<Metrics>,
    pub searched: Vec<SearchedResponse>,
    pub recognition: Option<RecognitionReport>,
    pub ablation: Vec<AblationRow>,
}

#[derive(Serialize)]
struct MatrixRow<'a> {
    row: &'a str,
    col: &'a str,
    wins: u32,
    draws: u32,
    losses: u32,
    rate: f64,
}

#[derive(Serialize)]
struct ConfusionRow {
    actual: &'static str,
    predicted: &'static str,
    count: usize,
}

#[derive(Serialize)]
struct MatchRow<'a> {
    r#match: usize,
    seed: u64,
    p1: &'a str,
    p2: &'a str,
    outcome: &'static str,
    final_tick: u32,
    p1_damage_dealt: u64,
    p1_damage_taken: u64,
    p1_resources_harvested: u64,
    p1_units_produced: u64,
    p1_actions_issued: u64,
    p2_damage_dealt: u64,
    p2_damage_taken: u64,
    p2_resources_harvested: u64,
    p2_units_produced: u64,
    p2_actions_issued: u64,
}

#[derive(Serialize)]
struct MetricRow<'a> {
    r#match: usize,
    seed: u64,
    player: &'static str,
    agent: &'a str,
    start_tick: u32,
    damage_dealt: u32,
    resources_harvested: u32,
    units_produced: u32,
}

#[derive(Serialize)]
struct SearchedRow {
    opponent: String,
    response: String,
    predicted: f64,
    wins: u32,
    draws: u32,
    losses: u32,
    rate: f64,
}

#[derive(Serialize)]
struct AblationCsvRow<'a> {
    label: &'a str,
    score: f64,
    wins: u32,
    draws: u32,
    losses: u32,
    gap_to_next: Option<f64>,
    gap_low: Option<f64>,
    gap_high: Option<f64>,
}

fn writer(dir: &Path, name: &str) -> io::Result<(csv::Writer<std::fs::File>, PathBuf)> {
    let path = dir.join(name);
    Ok((csv::Writer::from_path(&path)?, path))
}

fn rows<S: Serialize>(dir: &Path, name: &str, header: &[&str], rows: &[S]) -> io::Result<PathBuf> {
    let (mut w, path) = writer(dir, name)?;
    if rows.is_empty() {
        w.write_record(header)?;
    }
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(path)
}

/// Writes every table into `dir`, creating it if needed. Returns the paths
/// written.
pub fn emit_reports(reports: &Reports, dir: &Path) -> io::Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut out = Vec::new();

    let mut matrix = Vec::new();
    if let Some(e) = &reports.experiment {
        for (i, row) in e.cells.iter().enumerate() {
            for (j, cell) in row.iter().enumerate() {
                if let Some(c) = cell {
                    matrix.push(MatrixRow {
                        row: &e.labels[i],
                        col: &e.labels[j],
                        wins: c.wins,
                        draws: c.draws,
                        losses: c.losses,
                        rate: c.r(),
                    });
                }
            }
        }
    }
    out.push(rows(
        dir,
        WIN_RATE_MATRIX,
        &["row", "col", "wins", "draws", "losses", "rate"],
        &matrix,
    )?);

    let confusion: Vec<ConfusionRow> = reports
        .sen
        .iter()
        .flat_map(|m| {
            let name = |v: usize| if v == 1 { "win" } else { "not_win" };
            (0..2).flat_map(move |a| {
                (0..2).map(move |p| ConfusionRow {
                    actual: name(a),
                    predicted: name(p),
                    count: m.confusion[a][p],
                })
            })
        })
        .collect();
    out.push(rows(dir, CONFUSION_MATRIX, &["actual", "predicted", "count"], &confusion)?);

    let kinds = action_kind_names();
    let (mut w, path) = writer(dir, ACTION_SERIES)?;
    let mut header = vec!["match", "seed", "player", "agent", "start_tick"];
    header.extend(kinds);
    w.write_record(&header)?;
    for (m, r) in reports.matches.iter().enumerate() {
        for b in &r.series {
            for (p, player) in ["P1", "P2"].into_iter().enumerate() {
                let mut rec = vec![
                    m.to_string(),
                    r.seed.to_string(),
                    player.to_string(),
                    r.seats[p].clone(),
                    b.start_tick.to_string(),
                ];
                rec.extend(b.actions[p].iter().map(u32::to_string));
                w.write_record(&rec)?;
            }
        }
    }
    w.flush()?;
    out.push(path);

    let mut metric_rows = Vec::new();
    for (m, r) in reports.matches.iter().enumerate() {
        for b in &r.series {
            for (p, player) in ["P1", "P2"].into_iter().enumerate() {
                metric_rows.push(MetricRow {
                    r#match: m,
                    seed: r.seed,
                    player,
                    agent: &r.seats[p],
                    start_tick: b.start_tick,
                    damage_dealt: b.damage_dealt[p],
                    resources_harvested: b.harvested[p],
                    units_produced: b.produced[p],
                });
            }
        }
    }
    out.push(rows(
        dir,
        METRIC_SERIES,
        &[
            "match",
            "seed",
            "player",
            "agent",
            "start_tick",
            "damage_dealt",
            "resources_harvested",
            "units_produced",
        ],
        &metric_rows,
    )?);

    let match_rows: Vec<MatchRow> = reports
        .matches
        .iter()
        .enumerate()
        .map(|(m, r)| {
            let [a, b] = &r.metrics;
            MatchRow {
                r#match: m,
                seed: r.seed,
                p1: &r.seats[0],
                p2: &r.seats[1],
                outcome: outcome_name(r.outcome),
                final_tick: r.final_tick,
                p1_damage_dealt: a.damage_dealt,
                p1_damage_taken: a.damage_taken,
                p1_resources_harvested: a.resources_harvested,
                p1_units_produced: a.units_produced,
                p1_actions_issued: a.actions_issued,
                p2_damage_dealt: b.damage_dealt,
                p2_damage_taken: b.damage_taken,
                p2_resources_harvested: b.resources_harvested,
                p2_units_produced: b.units_produced,
                p2_actions_issued: b.actions_issued,
            }
        })
        .collect();
    out.push(rows(
        dir,
        MATCH_METRICS,
        &[
            "match",
            "seed",
            "p1",
            "p2",
            "outcome",
            "final_tick",
            "p1_damage_dealt",
            "p1_damage_taken",
            "p1_resources_harvested",
            "p1_units_produced",
            "p1_actions_issued",
            "p2_damage_dealt",
            "p2_damage_taken",
            "p2_resources_harvested",
            "p2_units_produced",
            "p2_actions_issued",
        ],
        &match_rows,
    )?);

    let searched: Vec<SearchedRow> = reports
        .searched
        .iter()
        .map(|s| SearchedRow {
            opponent: s.opponent.to_record(),
            response: s.response.to_record(),
            predicted: s.predicted,
            wins: s.result.wins,
            draws: s.result.draws,
            losses: s.result.losses,
            rate: s.result.r(),
        })
        .collect();
    out.push(rows(
        dir,
        SEARCHED_RESPONSES,
        &["opponent", "response", "predicted", "wins", "draws", "losses", "rate"],
        &searched,
    )?);

    let (mut w, path) = writer(dir, RECOGNITION_ACCURACY)?;
    w.write_record(["dimension", "all", "aggression_false", "aggression_true"])?;
    if let Some(rep) = &reports.recognition {
        let all = rep.accuracy(|_| true);
        let no = rep.accuracy(|t| !t.truth.aggression);
        let yes = rep.accuracy(|t| t.truth.aggression);
        for (d, name) in DIMENSIONS.iter().enumerate() {
            w.write_record([
                name.to_string(),
                all[d].to_string(),
                no[d].to_string(),
                yes[d].to_string(),
            ])?;
        }
    }
    w.flush()?;
    out.push(path);

    let ablation: Vec<AblationCsvRow> = reports
        .ablation
        .iter()
        .map(|r| AblationCsvRow {
            label: &r.label,
            score: r.score,
            wins: r.total.wins,
            draws: r.total.draws,
            losses: r.total.losses,
            gap_to_next: r.gap_to_next.map(|g| g.0),
            gap_low: r.gap_to_next.map(|g| g.1),
            gap_high: r.gap_to_next.map(|g| g.2),
        })
        .collect();
    out.push(rows(
        dir,
        ABLATION,
        &["label", "score", "wins", "draws", "losses", "gap_to_next", "gap_low", "gap_high"],
        &ablation,
    )?);

    Ok(out)
}
