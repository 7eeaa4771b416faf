//! Site-recommendation benchmark: seeded generation, JSONL storage and a
//! parallel runner that scores planner answers against gold ids.

use std::collections::BTreeSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{site_metrics, MetricsReport};
use crate::builder::{IndicatorRegistry, Scope};
use crate::graph::{Direction, EntityId, EntityKind, PropertyGraph, Relation};
use crate::planner::{Planner, StopReason};
use crate::policy::{parse_answer_ids, Constraint, Level, QuestionSpec};
use crate::tools::{rank_candidates, Criterion, CriterionDirection};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QAItem {
    pub question: String,
    pub level: Level,
    pub conditional: bool,
    pub gold_ids: Vec<String>,
    /// Criterion specs (`name:higher` / `name:lower`) that produced the gold.
    pub gold_criteria: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constraint: Option<Constraint>,
}

#[derive(Debug, Error, PartialEq)]
pub enum DatasetError {
    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error("line {line}: {message}")]
    Line { line: usize, message: String },
    #[error("benchmark generation failed: {0}")]
    Generation(String),
}

impl DatasetError {
    fn io(path: &Path, e: impl std::fmt::Display) -> Self {
        DatasetError::Io {
            path: path.to_path_buf(),
            message: e.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BenchmarkConfig {
    pub count: usize,
    pub seed: u64,
    /// Number of gold ids per item.
    pub top: usize,
    pub min_criteria: usize,
    pub max_criteria: usize,
    /// Probability that an item carries a spatial constraint.
    pub conditional_rate: f64,
    /// Probability that an item asks for grids instead of parks.
    pub grid_rate: f64,
    /// Probability of flipping a criterion against its registry polarity.
    pub flip_rate: f64,
    /// Draws allowed per item before giving up.
    pub max_retries: usize,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        BenchmarkConfig {
            count: 100,
            seed: 7,
            top: 1,
            min_criteria: 5,
            max_criteria: 8,
            conditional_rate: 0.5,
            grid_rate: 0.5,
            flip_rate: 0.25,
            max_retries: 50,
        }
    }
}

const FACILITIES: [&str; 12] = [
    "data center",
    "bank branch",
    "biotech incubator",
    "logistics hub",
    "community clinic",
    "R&D center",
    "international school",
    "fintech office",
    "testing laboratory",
    "talent apartment",
    "conference center",
    "software campus",
];

/// Candidate sites for a level and optional constraint, in id order.
pub fn candidate_sites(graph: &PropertyGraph, level: Level, constraint: Option<&Constraint>) -> Vec<EntityId> {
    let mut out: Vec<EntityId> = match (level, constraint) {
        (Level::Park, None) => graph.entities_of_kind(EntityKind::IndustrialPark),
        (Level::Park, Some(c)) => graph
            .neighbors(c.park(), Relation::AdjacentTo, Direction::Both)
            .unwrap_or_default()
            .into_iter()
            .filter(|n| graph.entity(n).map(|e| e.kind) == Some(EntityKind::IndustrialPark))
            .collect(),
        (Level::Grid, None) => graph.entities_of_kind(EntityKind::Grid),
        (Level::Grid, Some(c)) => graph.grids_of_park(c.park()).into_iter().map(|g| g.entity.clone()).collect(),
    };
    out.sort();
    out.dedup();
    out
}

fn criterion_pool(registry: &IndicatorRegistry, level: Level) -> Vec<String> {
    match level {
        Level::Park => registry.park_level_names(),
        Level::Grid => registry.of_scope(Scope::Grid).map(|d| d.name.clone()).collect(),
    }
}

fn draw_item(
    graph: &PropertyGraph,
    registry: &IndicatorRegistry,
    cfg: &BenchmarkConfig,
    parks: &[EntityId],
    rng: &mut ChaCha8Rng,
) -> Option<QAItem> {
    let level = if rng.random_bool(cfg.grid_rate) { Level::Grid } else { Level::Park };
    let constraint = if rng.random_bool(cfg.conditional_rate) {
        let park = parks.choose(rng)?.clone();
        Some(match level {
            Level::Grid => Constraint::WithinPark(park),
            Level::Park => Constraint::AdjacentToPark(park),
        })
    } else {
        None
    };
    let candidates = candidate_sites(graph, level, constraint.as_ref());
    if candidates.len() < cfg.top + 1 {
        return None;
    }

    let mut pool = criterion_pool(registry, level);
    pool.shuffle(rng);
    let hi = cfg.max_criteria.min(pool.len());
    let lo = cfg.min_criteria.min(hi).max(1);
    let n = rng.random_range(lo..=hi);
    let mut criteria: Vec<Criterion> = pool[..n]
        .iter()
        .map(|name| {
            let mut c = Criterion::parse_with(name, registry).expect("registry names parse");
            if rng.random_bool(cfg.flip_rate) {
                c.direction = match c.direction {
                    CriterionDirection::Higher => CriterionDirection::Lower,
                    CriterionDirection::Lower => CriterionDirection::Higher,
                };
            }
            c
        })
        .collect();
    criteria.sort_by(|a, b| a.name.cmp(&b.name));

    let ranking = rank_candidates(graph, &candidates, &criteria).ok()?;
    if ranking.ordering.len() < cfg.top + 1 {
        return None;
    }
    // the gold set must be unambiguous: a strict score gap after position `top`
    let last_in = ranking.score_of(&ranking.ordering[cfg.top - 1])?;
    let first_out = ranking.score_of(&ranking.ordering[cfg.top])?;
    if last_in <= first_out {
        return None;
    }

    let spec = QuestionSpec {
        level,
        facility: FACILITIES.choose(rng)?.to_string(),
        constraint: constraint.clone(),
        criteria: criteria.iter().map(Criterion::to_string).collect(),
        top: cfg.top,
    };
    let mut gold_ids: Vec<String> = ranking.ordering[..cfg.top]
        .iter()
        .map(|e| e.as_str().to_string())
        .collect();
    gold_ids.sort();
    Some(QAItem {
        question: spec.render(),
        level,
        conditional: constraint.is_some(),
        gold_ids,
        gold_criteria: spec.criteria,
        constraint,
    })
}

/// Draws `count` items from a seeded generator. Each item's gold is the
/// Borda top-`top` of its candidates under 5–8 sampled criteria; draws with
/// too few candidates or a tie at the gold boundary are redrawn.
pub fn generate_benchmark(
    graph: &PropertyGraph,
    registry: &IndicatorRegistry,
    config: &BenchmarkConfig,
) -> Result<Vec<QAItem>, DatasetError> {
    if config.top == 0 {
        return Err(DatasetError::Generation("top must be at least 1".into()));
    }
    if config.min_criteria > config.max_criteria {
        return Err(DatasetError::Generation("min_criteria exceeds max_criteria".into()));
    }
    let parks = graph.entities_of_kind(EntityKind::IndustrialPark);
    if parks.is_empty() {
        return Err(DatasetError::Generation("graph has no parks".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut items = Vec::with_capacity(config.count);
    for i in 0..config.count {
        let item = (0..config.max_retries.max(1))
            .find_map(|_| draw_item(graph, registry, config, &parks, &mut rng))
            .ok_or_else(|| {
                DatasetError::Generation(format!(
                    "item {i}: no valid draw in {} attempts (too few candidates or tied rankings)",
                    config.max_retries
                ))
            })?;
        items.push(item);
    }
    Ok(items)
}

pub fn write_dataset(path: impl AsRef<Path>, items: &[QAItem]) -> Result<(), DatasetError> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| DatasetError::io(path, e))?;
    let mut w = BufWriter::new(file);
    for item in items {
        let line = serde_json::to_string(item).expect("items serialize");
        writeln!(w, "{line}").map_err(|e| DatasetError::io(path, e))?;
    }
    w.flush().map_err(|e| DatasetError::io(path, e))
}

/// Reads JSONL items; blank lines are skipped and every item must carry a
/// question and at least one gold id.
pub fn read_dataset(path: impl AsRef<Path>) -> Result<Vec<QAItem>, DatasetError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| DatasetError::io(path, e))?;
    let mut items = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| DatasetError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let item: QAItem = serde_json::from_str(&line).map_err(|e| DatasetError::Line {
            line: i + 1,
            message: e.to_string(),
        })?;
        if item.question.trim().is_empty() || item.gold_ids.is_empty() {
            return Err(DatasetError::Line {
                line: i + 1,
                message: "item needs a question and at least one gold id".into(),
            });
        }
        items.push(item);
    }
    Ok(items)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemOutcome {
    pub index: usize,
    pub predicted: Vec<String>,
    pub gold: Vec<String>,
    pub exact: bool,
    /// The search ended without any answer.
    pub answerless: bool,
    /// An answer was given but had no parsable ids.
    pub unparsable: bool,
    pub iterations: usize,
    pub stop: StopReason,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub policy: String,
    pub evaluator: String,
    pub metrics: MetricsReport,
    pub answerless: usize,
    pub unparsable: usize,
    pub outcomes: Vec<ItemOutcome>,
}

impl BenchReport {
    pub fn render(&self) -> String {
        format!(
            "policy     {}\nevaluator  {}\n{}answerless {}\nunparsable {}\n",
            self.policy,
            self.evaluator,
            self.metrics.render(),
            self.answerless,
            self.unparsable
        )
    }
}

/// Runs the planner on every item in parallel. Results are collected in
/// item order, so the report does not depend on thread scheduling. With a
/// trace directory, each item's search tree is written to
/// `item_NNNN.json`.
pub fn run_benchmark(
    items: &[QAItem],
    planner: &Planner,
    trace_dir: Option<&Path>,
) -> Result<BenchReport, DatasetError> {
    if let Some(dir) = trace_dir {
        std::fs::create_dir_all(dir).map_err(|e| DatasetError::io(dir, e))?;
    }
    let outcomes: Vec<Result<ItemOutcome, DatasetError>> = items
        .par_iter()
        .enumerate()
        .map(|(index, item)| {
            let outcome = planner.search(&item.question);
            let answer = outcome.trajectory.answer.as_deref();
            let parsed = answer.and_then(parse_answer_ids);
            let predicted = parsed.clone().unwrap_or_default();
            let gold: BTreeSet<&String> = item.gold_ids.iter().collect();
            let result = ItemOutcome {
                index,
                exact: predicted.iter().collect::<BTreeSet<_>>() == gold,
                predicted,
                gold: item.gold_ids.clone(),
                answerless: answer.is_none(),
                unparsable: answer.is_some() && parsed.is_none(),
                iterations: outcome.iterations,
                stop: outcome.stop,
            };
            if let Some(dir) = trace_dir {
                let path = dir.join(format!("item_{index:04}.json"));
                let mut doc = outcome.to_json();
                doc["gold"] = serde_json::json!(item.gold_ids);
                let text = serde_json::to_string_pretty(&doc).expect("trace serializes");
                std::fs::write(&path, text).map_err(|e| DatasetError::io(&path, e))?;
            }
            Ok(result)
        })
        .collect();
    let outcomes: Vec<ItemOutcome> = outcomes.into_iter().collect::<Result<_, _>>()?;

    let predicted: Vec<BTreeSet<String>> =
        outcomes.iter().map(|o| o.predicted.iter().cloned().collect()).collect();
    let gold: Vec<BTreeSet<String>> = items.iter().map(|i| i.gold_ids.iter().cloned().collect()).collect();
    let metrics = site_metrics(&predicted, &gold).expect("equal lengths by construction");
    Ok(BenchReport {
        policy: planner.policy.name().to_string(),
        evaluator: planner.evaluator.name().to_string(),
        answerless: outcomes.iter().filter(|o| o.answerless).count(),
        unparsable: outcomes.iter().filter(|o| o.unparsable).count(),
        metrics,
        outcomes,
    })
}
