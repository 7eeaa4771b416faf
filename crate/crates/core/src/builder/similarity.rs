//! Park feature vectors and cosine-threshold edge induction.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{attr, BuildError};
use crate::graph::{EntityId, EntityKind, PropertyGraph, Relation, RelationalTriple};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub entity: EntityId,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MissingFeature {
    pub park: EntityId,
    pub feature: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EdgeReport {
    pub added: usize,
    /// Unordered pairs at or above the threshold, with their cosine.
    pub pairs: Vec<(EntityId, EntityId, f64)>,
    /// Entities whose vector was all zeros; every pair involving them is skipped.
    pub skipped_zero: Vec<EntityId>,
}

/// Cosine similarity, or `None` when either vector has zero norm.
pub fn cosine(a: &[f64], b: &[f64]) -> Option<f64> {
    assert_eq!(a.len(), b.len(), "vectors must share a schema");
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return None;
    }
    Some((dot / (na * nb)).clamp(-1.0, 1.0))
}

/// Z-scored indicator vectors for every park. Mean and population standard
/// deviation are taken over the parks that have the value; a missing value
/// becomes 0 and is reported, and a zero deviation maps every entry to 0.
pub fn park_feature_vectors(
    graph: &PropertyGraph,
    schema: &[String],
) -> (BTreeMap<EntityId, FeatureVector>, Vec<MissingFeature>) {
    let parks = graph.entities_of_kind(EntityKind::IndustrialPark);
    let mut missing = Vec::new();
    let mut columns: Vec<Vec<Option<f64>>> = Vec::with_capacity(schema.len());
    for name in schema {
        let col: Vec<Option<f64>> = parks.iter().map(|p| graph.number(p, name)).collect();
        for (p, v) in parks.iter().zip(&col) {
            if v.is_none() {
                missing.push(MissingFeature {
                    park: p.clone(),
                    feature: name.clone(),
                });
            }
        }
        columns.push(col);
    }
    let z_columns: Vec<Vec<f64>> = columns
        .iter()
        .map(|col| {
            let present: Vec<f64> = col.iter().flatten().copied().collect();
            if present.is_empty() {
                return vec![0.0; col.len()];
            }
            let n = present.len() as f64;
            let mean = present.iter().sum::<f64>() / n;
            let std = (present.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt();
            col.iter()
                .map(|v| match v {
                    Some(x) if std > 0.0 => (x - mean) / std,
                    _ => 0.0,
                })
                .collect()
        })
        .collect();
    let vectors = parks
        .iter()
        .enumerate()
        .map(|(i, p)| {
            (
                p.clone(),
                FeatureVector {
                    entity: p.clone(),
                    values: z_columns.iter().map(|c| c[i]).collect(),
                },
            )
        })
        .collect();
    (vectors, missing)
}

pub fn park_feature_vector(
    graph: &PropertyGraph,
    park: &EntityId,
    schema: &[String],
) -> Result<FeatureVector, BuildError> {
    match graph.entity(park) {
        Some(e) if e.kind == EntityKind::IndustrialPark => {}
        _ => return Err(BuildError::NotAPark(park.clone())),
    }
    let (mut all, _) = park_feature_vectors(graph, schema);
    Ok(all.remove(park).expect("every park has a vector"))
}

/// Industry profile per park: counts over the shared vocabulary of planned
/// and leading industry labels.
pub fn industry_vectors(graph: &PropertyGraph) -> BTreeMap<EntityId, FeatureVector> {
    let parks = graph.entities_of_kind(EntityKind::IndustrialPark);
    let labels_of = |p: &EntityId| -> Vec<String> {
        let mut labels: Vec<String> = graph
            .attribute(p, attr::PLANNED_INDUSTRIES)
            .ok()
            .flatten()
            .and_then(|v| v.as_list().map(<[String]>::to_vec))
            .unwrap_or_default();
        for level in 1..=3 {
            if let Some(l) = graph.text(p, &attr::leading_industry(level)) {
                labels.push(l.to_string());
            }
        }
        labels
    };
    let profiles: Vec<(EntityId, Vec<String>)> =
        parks.iter().map(|p| (p.clone(), labels_of(p))).collect();
    let vocab: Vec<String> = profiles
        .iter()
        .flat_map(|(_, l)| l.iter().cloned())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    profiles
        .into_iter()
        .map(|(p, labels)| {
            let values = vocab
                .iter()
                .map(|v| labels.iter().filter(|l| *l == v).count() as f64)
                .collect();
            (p.clone(), FeatureVector { entity: p, values })
        })
        .collect()
}

/// Adds a symmetric `relation` edge for each unordered pair whose cosine is
/// at least `threshold`. Existing edges are kept and not re-counted.
pub fn induce_edges(
    graph: &mut PropertyGraph,
    vectors: &BTreeMap<EntityId, FeatureVector>,
    threshold: f64,
    relation: Relation,
) -> Result<EdgeReport, BuildError> {
    let mut report = EdgeReport::default();
    let items: Vec<&FeatureVector> = vectors.values().collect();
    for v in &items {
        if v.values.iter().all(|x| *x == 0.0) {
            report.skipped_zero.push(v.entity.clone());
        }
    }
    for (i, a) in items.iter().enumerate() {
        for b in &items[i + 1..] {
            let Some(c) = cosine(&a.values, &b.values) else {
                continue;
            };
            if c >= threshold {
                report.pairs.push((a.entity.clone(), b.entity.clone(), c));
                if graph.ensure_relation(RelationalTriple::new(
                    a.entity.clone(),
                    relation,
                    b.entity.clone(),
                ))? {
                    report.added += 1;
                }
            }
        }
    }
    Ok(report)
}

pub fn similarity_edges(
    graph: &mut PropertyGraph,
    vectors: &BTreeMap<EntityId, FeatureVector>,
    threshold: f64,
) -> Result<EdgeReport, BuildError> {
    induce_edges(graph, vectors, threshold, Relation::SimilarTo)
}

pub fn correlation_edges(
    graph: &mut PropertyGraph,
    industry_vectors: &BTreeMap<EntityId, FeatureVector>,
    threshold: f64,
) -> Result<EdgeReport, BuildError> {
    induce_edges(graph, industry_vectors, threshold, Relation::RelatedTo)
}
