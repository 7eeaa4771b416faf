//! Borda-count rank aggregation over indicator criteria.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::builder::{IndicatorRegistry, Polarity};
use crate::graph::{EntityId, PropertyGraph};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Higher,
    Lower,
}

impl From<Polarity> for Direction {
    fn from(p: Polarity) -> Self {
        match p {
            Polarity::Higher => Direction::Higher,
            Polarity::Lower => Direction::Lower,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Criterion {
    pub name: String,
    pub direction: Direction,
}

impl Criterion {
    pub fn higher(name: impl Into<String>) -> Self {
        Criterion {
            name: name.into(),
            direction: Direction::Higher,
        }
    }

    pub fn lower(name: impl Into<String>) -> Self {
        Criterion {
            name: name.into(),
            direction: Direction::Lower,
        }
    }

    /// Parses `name`, `name:higher` or `name:lower`. A bare name takes the
    /// registry's polarity, or higher-is-better when the registry has no
    /// entry for it.
    pub fn parse_with(spec: &str, registry: &IndicatorRegistry) -> Result<Criterion, String> {
        let (name, dir) = match spec.rsplit_once(':') {
            Some((n, d)) => (n.trim(), Some(d.trim())),
            None => (spec.trim(), None),
        };
        if name.is_empty() {
            return Err(format!("empty criterion in `{spec}`"));
        }
        let direction = match dir {
            Some("higher") => Direction::Higher,
            Some("lower") => Direction::Lower,
            Some(other) => {
                return Err(format!(
                    "criterion direction must be `higher` or `lower`, got `{other}`"
                ))
            }
            None => registry
                .get(name)
                .map(|d| d.polarity.into())
                .unwrap_or(Direction::Higher),
        };
        Ok(Criterion {
            name: name.to_string(),
            direction,
        })
    }
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let d = match self.direction {
            Direction::Higher => "higher",
            Direction::Lower => "lower",
        };
        write!(f, "{}:{d}", self.name)
    }
}

impl FromStr for Criterion {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Criterion::parse_with(s, &IndicatorRegistry { indicators: Vec::new() })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Excluded {
    pub candidate: EntityId,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedRecommendation {
    pub candidates: Vec<EntityId>,
    pub criteria: Vec<Criterion>,
    /// `ranks[i][j]`: rank of candidate `i` under criterion `j` (1 = best).
    pub ranks: Vec<Vec<f64>>,
    pub scores: Vec<f64>,
    /// Candidates by descending score, ties by id.
    pub ordering: Vec<EntityId>,
    pub excluded: Vec<Excluded>,
}

impl RankedRecommendation {
    pub fn score_of(&self, id: &EntityId) -> Option<f64> {
        self.candidates
            .iter()
            .position(|c| c == id)
            .map(|i| self.scores[i])
    }

    pub fn top(&self, n: usize) -> &[EntityId] {
        &self.ordering[..n.min(self.ordering.len())]
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RankError {
    #[error("no candidates given")]
    NoCandidates,
    #[error("no criteria given")]
    NoCriteria,
    #[error("every candidate was excluded ({} missing values)", .0.len())]
    AllExcluded(Vec<Excluded>),
    #[error("candidate `{0}` has {1} values for {2} criteria")]
    Shape(EntityId, usize, usize),
    #[error("criterion `{0}` has a non-finite value")]
    NonFinite(String),
}

/// Ranks for one criterion: 1 is best, tied values share the mean of the
/// positions they occupy.
pub fn mean_ranks(values: &[f64], direction: Direction) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    let better = |a: f64, b: f64| match direction {
        Direction::Higher => b.total_cmp(&a),
        Direction::Lower => a.total_cmp(&b),
    };
    order.sort_by(|&i, &j| better(values[i], values[j]));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        // positions start+1 ..= end share their average
        let shared = (start + 1 + end) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = shared;
        }
        start = end;
    }
    ranks
}

/// Aggregates per-candidate criterion values. Each row of `values` holds one
/// candidate's values in criterion order.
pub fn borda_rank(
    candidates: &[EntityId],
    values: &[Vec<f64>],
    criteria: &[Criterion],
) -> Result<RankedRecommendation, RankError> {
    if candidates.is_empty() {
        return Err(RankError::NoCandidates);
    }
    if criteria.is_empty() {
        return Err(RankError::NoCriteria);
    }
    for (c, row) in candidates.iter().zip(values) {
        if row.len() != criteria.len() {
            return Err(RankError::Shape(c.clone(), row.len(), criteria.len()));
        }
    }
    let m = candidates.len();
    let mut ranks = vec![vec![0.0; criteria.len()]; m];
    for (j, criterion) in criteria.iter().enumerate() {
        let column: Vec<f64> = values.iter().map(|row| row[j]).collect();
        if column.iter().any(|v| !v.is_finite()) {
            return Err(RankError::NonFinite(criterion.name.clone()));
        }
        for (i, r) in mean_ranks(&column, criterion.direction).into_iter().enumerate() {
            ranks[i][j] = r;
        }
    }
    let scores: Vec<f64> = ranks
        .iter()
        .map(|row| row.iter().map(|r| m as f64 - r).sum())
        .collect();
    let mut idx: Vec<usize> = (0..m).collect();
    idx.sort_by(|&a, &b| {
        scores[b]
            .partial_cmp(&scores[a])
            .unwrap_or(Ordering::Equal)
            .then_with(|| candidates[a].cmp(&candidates[b]))
    });
    Ok(RankedRecommendation {
        candidates: candidates.to_vec(),
        criteria: criteria.to_vec(),
        ranks,
        scores,
        ordering: idx.into_iter().map(|i| candidates[i].clone()).collect(),
        excluded: Vec::new(),
    })
}

/// Looks criteria up as numeric attributes. Candidates missing any value
/// (or absent from the graph) are excluded and reported, never imputed.
pub fn rank_candidates(
    graph: &PropertyGraph,
    candidates: &[EntityId],
    criteria: &[Criterion],
) -> Result<RankedRecommendation, RankError> {
    if candidates.is_empty() {
        return Err(RankError::NoCandidates);
    }
    if criteria.is_empty() {
        return Err(RankError::NoCriteria);
    }
    let mut kept = Vec::new();
    let mut values = Vec::new();
    let mut excluded = Vec::new();
    let mut seen = std::collections::BTreeSet::new();
    for c in candidates {
        if !seen.insert(c) {
            continue;
        }
        if !graph.contains(c) {
            excluded.push(Excluded {
                candidate: c.clone(),
                reason: "unknown entity".into(),
            });
            continue;
        }
        let row: Vec<Option<f64>> = criteria.iter().map(|k| graph.number(c, &k.name)).collect();
        let missing: Vec<&str> = criteria
            .iter()
            .zip(&row)
            .filter(|(_, v)| v.is_none())
            .map(|(k, _)| k.name.as_str())
            .collect();
        if missing.is_empty() {
            kept.push(c.clone());
            values.push(row.into_iter().map(Option::unwrap).collect());
        } else {
            excluded.push(Excluded {
                candidate: c.clone(),
                reason: format!("missing {}", missing.join(", ")),
            });
        }
    }
    if kept.is_empty() {
        return Err(RankError::AllExcluded(excluded));
    }
    let mut ranked = borda_rank(&kept, &values, criteria)?;
    ranked.excluded = excluded;
    Ok(ranked)
}
