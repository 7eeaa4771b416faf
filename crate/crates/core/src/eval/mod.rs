//! Benchmark metrics: Hill-number diversity for functional plans and
//! set-valued precision/recall for site recommendation.

mod bench;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{EntityId, PropertyGraph};
use crate::taxonomy::UNASSIGNED;

pub use bench::{
    candidate_sites, generate_benchmark, read_dataset, run_benchmark, write_dataset,
    BenchReport, BenchmarkConfig, DatasetError, ItemOutcome, QAItem,
};
pub use crate::policy::{parse_answer_ids, Constraint, Level};

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("proportions must sum to 1 (got {0})")]
    NotNormalized(f64),
    #[error("proportions must be finite and non-negative (got {0})")]
    NegativeProportion(f64),
    #[error("order q must be finite and non-negative (got {0})")]
    BadOrder(f64),
    #[error("grid `{0}` has no function assignment")]
    UncoveredGrid(EntityId),
    #[error("unknown park `{0}`")]
    UnknownPark(EntityId),
    #[error("predicted and gold lists differ in length ({predicted} vs {gold})")]
    LengthMismatch { predicted: usize, gold: usize },
}

/// Hill number of order `q` for a proportion vector.
///
/// `q = 1` is the Shannon limit `exp(-Σ p ln p)`. Zero entries are ignored
/// for every order, so `q = 0` counts the non-zero classes.
pub fn hill_number(proportions: &[f64], q: f64) -> Result<f64, EvalError> {
    if !q.is_finite() || q < 0.0 {
        return Err(EvalError::BadOrder(q));
    }
    for &p in proportions {
        if !p.is_finite() || p < 0.0 {
            return Err(EvalError::NegativeProportion(p));
        }
    }
    let total: f64 = proportions.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(EvalError::NotNormalized(total));
    }
    let present = proportions.iter().copied().filter(|&p| p > 0.0);
    if (q - 1.0).abs() < 1e-12 {
        let entropy: f64 = present.map(|p| -p * p.ln()).sum();
        return Ok(entropy.exp());
    }
    let sum: f64 = present.map(|p| p.powf(q)).sum();
    Ok(sum.powf(1.0 / (1.0 - q)))
}

/// Normalizes raw counts (e.g. a `1:6` ratio) into proportions.
pub fn proportions_from_counts(counts: &[f64]) -> Vec<f64> {
    let total: f64 = counts.iter().sum();
    if total <= 0.0 {
        return vec![0.0; counts.len()];
    }
    counts.iter().map(|c| c / total).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiversityProfile {
    pub proportions: BTreeMap<String, f64>,
    pub h0: f64,
    pub h1: f64,
    pub h2: f64,
}

impl DiversityProfile {
    /// Builds a profile from per-function counts. `Unassigned` is not a
    /// function and is dropped; an empty count map yields all-zero numbers.
    pub fn from_counts(counts: &BTreeMap<String, usize>) -> DiversityProfile {
        let counts: BTreeMap<&String, usize> = counts
            .iter()
            .filter(|(k, &v)| k.as_str() != UNASSIGNED && v > 0)
            .map(|(k, v)| (k, *v))
            .collect();
        let total: usize = counts.values().sum();
        if total == 0 {
            return DiversityProfile {
                proportions: BTreeMap::new(),
                h0: 0.0,
                h1: 0.0,
                h2: 0.0,
            };
        }
        let proportions: BTreeMap<String, f64> = counts
            .iter()
            .map(|(k, v)| ((*k).clone(), *v as f64 / total as f64))
            .collect();
        let p: Vec<f64> = proportions.values().copied().collect();
        // counts are normalized by construction, so these cannot fail
        let h = |q| hill_number(&p, q).expect("normalized proportions");
        DiversityProfile {
            h0: h(0.0),
            h1: h(1.0),
            h2: h(2.0),
            proportions,
        }
    }
}

/// Diversity of a park's grid functions under `assignment` (grid → function
/// label). Every grid registered to the park must be assigned.
pub fn diversity_profile(
    graph: &PropertyGraph,
    park: &EntityId,
    assignment: &BTreeMap<EntityId, String>,
) -> Result<DiversityProfile, EvalError> {
    if !graph.contains(park) {
        return Err(EvalError::UnknownPark(park.clone()));
    }
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    for cell in graph.grids_of_park(park) {
        let function = assignment
            .get(&cell.entity)
            .ok_or_else(|| EvalError::UncoveredGrid(cell.entity.clone()))?;
        *counts.entry(function.clone()).or_default() += 1;
    }
    Ok(DiversityProfile::from_counts(&counts))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemMetrics {
    pub exact: bool,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub items: Vec<ItemMetrics>,
}

impl MetricsReport {
    pub fn render(&self) -> String {
        format!(
            "items      {}\naccuracy   {:.4}\nprecision  {:.4}\nrecall     {:.4}\nf1         {:.4}\n",
            self.items.len(),
            self.accuracy,
            self.precision,
            self.recall,
            self.f1
        )
    }
}

fn item_metrics(pred: &BTreeSet<String>, gold: &BTreeSet<String>) -> ItemMetrics {
    let hits = pred.intersection(gold).count() as f64;
    let precision = if pred.is_empty() { 0.0 } else { hits / pred.len() as f64 };
    let recall = if gold.is_empty() { 0.0 } else { hits / gold.len() as f64 };
    ItemMetrics {
        exact: pred == gold,
        precision,
        recall,
        f1: harmonic(precision, recall),
    }
}

fn harmonic(p: f64, r: f64) -> f64 {
    if p > 0.0 && r > 0.0 {
        2.0 * p * r / (p + r)
    } else {
        0.0
    }
}

/// Exact-match accuracy and macro-averaged precision/recall; the report's F1
/// is the harmonic mean of the macro precision and recall.
pub fn site_metrics(
    predicted: &[BTreeSet<String>],
    gold: &[BTreeSet<String>],
) -> Result<MetricsReport, EvalError> {
    if predicted.len() != gold.len() {
        return Err(EvalError::LengthMismatch {
            predicted: predicted.len(),
            gold: gold.len(),
        });
    }
    let items: Vec<ItemMetrics> = predicted
        .iter()
        .zip(gold)
        .map(|(p, g)| item_metrics(p, g))
        .collect();
    if items.is_empty() {
        return Ok(MetricsReport {
            accuracy: 0.0,
            precision: 0.0,
            recall: 0.0,
            f1: 0.0,
            items,
        });
    }
    let n = items.len() as f64;
    let accuracy = items.iter().filter(|m| m.exact).count() as f64 / n;
    let precision = items.iter().map(|m| m.precision).sum::<f64>() / n;
    let recall = items.iter().map(|m| m.recall).sum::<f64>() / n;
    Ok(MetricsReport {
        accuracy,
        precision,
        recall,
        f1: harmonic(precision, recall),
        items,
    })
}
