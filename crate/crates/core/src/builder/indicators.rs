//! Configurable indicator registry and its evaluation over grids and parks.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{attr, BuildError};
use crate::eval::DiversityProfile;
use crate::graph::{EntityId, EntityKind, PropertyGraph};
use crate::taxonomy::FunctionType;

const DEFAULT_REGISTRY: &str = include_str!("../../assets/indicators.toml");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scope {
    Grid,
    Park,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aggregation {
    Sum,
    Mean,
    Max,
}

impl Aggregation {
    pub fn apply(self, values: &[f64]) -> Option<f64> {
        if values.is_empty() {
            return None;
        }
        Some(match self {
            Aggregation::Sum => values.iter().sum(),
            Aggregation::Mean => values.iter().sum::<f64>() / values.len() as f64,
            Aggregation::Max => values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        })
    }
}

/// Whether larger indicator values are better when ranking sites.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarity {
    #[default]
    Higher,
    Lower,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CountOf {
    Enterprise,
    Poi,
    Grid,
}

impl CountOf {
    fn kind(self) -> EntityKind {
        match self {
            CountOf::Enterprise => EntityKind::Enterprise,
            CountOf::Poi => EntityKind::Poi,
            CountOf::Grid => EntityKind::Grid,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "formula", rename_all = "snake_case")]
pub enum Formula {
    /// Number of contained entities, optionally filtered by POI category (or
    /// grid dominant function) and optionally weighted by a numeric attribute.
    Count {
        of: CountOf,
        #[serde(default)]
        category: Option<String>,
        #[serde(default)]
        weight: Option<String>,
    },
    /// Count divided by the number of grids in scope.
    Density {
        of: CountOf,
        #[serde(default)]
        category: Option<String>,
    },
    /// Fraction of contained POIs in one category.
    Share { category: String },
    /// Hill number of the given order: over POI categories for a grid, over
    /// grid dominant functions for a park.
    Diversity { order: f64 },
    /// Chebyshev lattice distance to the nearest grid holding a POI of the
    /// category.
    Accessibility { category: String },
    /// Park value aggregated from a grid-scope indicator.
    AggregateOfGrid { source: String, rule: Aggregation },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndicatorDef {
    pub name: String,
    pub scope: Scope,
    #[serde(flatten)]
    pub formula: Formula,
    /// Rule for rolling a grid-scope indicator up to its park.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub aggregation: Option<Aggregation>,
    #[serde(default)]
    pub polarity: Polarity,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unit: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pillar: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndicatorRegistry {
    #[serde(rename = "indicator", default)]
    pub indicators: Vec<IndicatorDef>,
}

impl Default for IndicatorRegistry {
    fn default() -> Self {
        IndicatorRegistry::from_toml(DEFAULT_REGISTRY).expect("bundled registry parses")
    }
}

/// An (entity, indicator) pair that received no value.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MissingIndicator {
    pub entity: EntityId,
    pub indicator: String,
    pub reason: String,
}

impl IndicatorRegistry {
    pub fn from_toml(text: &str) -> Result<Self, BuildError> {
        let reg: IndicatorRegistry =
            toml::from_str(text).map_err(|e| BuildError::Registry(e.to_string()))?;
        reg.validate()?;
        Ok(reg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, BuildError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| BuildError::io(path, e))?;
        if path.extension().is_some_and(|e| e == "json") {
            let reg: IndicatorRegistry = serde_json::from_str(&text)
                .map_err(|e| BuildError::Registry(e.to_string()))?;
            reg.validate()?;
            Ok(reg)
        } else {
            Self::from_toml(&text)
        }
    }

    pub fn get(&self, name: &str) -> Option<&IndicatorDef> {
        self.indicators.iter().find(|d| d.name == name)
    }

    pub fn of_scope(&self, scope: Scope) -> impl Iterator<Item = &IndicatorDef> {
        self.indicators.iter().filter(move |d| d.scope == scope)
    }

    /// Park-level names, including grid indicators rolled up to parks.
    pub fn park_level_names(&self) -> Vec<String> {
        self.indicators
            .iter()
            .filter(|d| d.scope == Scope::Park || d.aggregation.is_some())
            .map(|d| d.name.clone())
            .collect()
    }

    pub fn validate(&self) -> Result<(), BuildError> {
        let mut seen = BTreeSet::new();
        let check_category = |def: &IndicatorDef, cat: &str| -> Result<(), BuildError> {
            cat.parse::<FunctionType>()
                .map(drop)
                .map_err(|_| BuildError::UnknownCategory {
                    indicator: def.name.clone(),
                    category: cat.to_string(),
                })
        };
        for def in &self.indicators {
            if def.name.trim().is_empty() {
                return Err(BuildError::Registry("indicator with empty name".into()));
            }
            if !seen.insert(def.name.as_str()) {
                return Err(BuildError::Registry(format!("duplicate indicator `{}`", def.name)));
            }
            match &def.formula {
                Formula::Count { of, category, .. } | Formula::Density { of, category } => {
                    if let Some(cat) = category {
                        if *of == CountOf::Enterprise {
                            return Err(BuildError::Registry(format!(
                                "`{}`: enterprises have no category filter",
                                def.name
                            )));
                        }
                        check_category(def, cat)?;
                    }
                    if *of == CountOf::Grid && def.scope == Scope::Grid {
                        return Err(BuildError::Registry(format!(
                            "`{}`: grids cannot be counted inside a grid",
                            def.name
                        )));
                    }
                }
                Formula::Share { category } => check_category(def, category)?,
                Formula::Diversity { order } => {
                    if !order.is_finite() || *order < 0.0 {
                        return Err(BuildError::Registry(format!(
                            "`{}`: diversity order must be >= 0",
                            def.name
                        )));
                    }
                }
                Formula::Accessibility { category } => {
                    check_category(def, category)?;
                    if def.scope != Scope::Grid {
                        return Err(BuildError::Registry(format!(
                            "`{}`: accessibility is grid-scope only",
                            def.name
                        )));
                    }
                }
                Formula::AggregateOfGrid { source, .. } => {
                    if def.scope != Scope::Park {
                        return Err(BuildError::Registry(format!(
                            "`{}`: aggregate_of_grid must be park-scope",
                            def.name
                        )));
                    }
                    match self.get(source) {
                        Some(src) if src.scope == Scope::Grid => {}
                        _ => {
                            return Err(BuildError::Registry(format!(
                                "`{}`: source `{source}` is not a grid-scope indicator",
                                def.name
                            )))
                        }
                    }
                }
            }
            if def.aggregation.is_some() && def.scope != Scope::Grid {
                return Err(BuildError::Registry(format!(
                    "`{}`: only grid-scope indicators carry an aggregation rule",
                    def.name
                )));
            }
        }
        Ok(())
    }
}

fn poi_category_matches(graph: &PropertyGraph, poi: &EntityId, category: &str) -> bool {
    graph.text(poi, attr::CATEGORY) == Some(category)
}

fn canonical(category: &str) -> String {
    category
        .parse::<FunctionType>()
        .map(|f| f.label().to_string())
        .unwrap_or_else(|_| category.to_string())
}

fn counted(
    graph: &PropertyGraph,
    container: &EntityId,
    of: CountOf,
    category: Option<&str>,
) -> Vec<EntityId> {
    let members = graph.members(container, of.kind()).unwrap_or_default();
    match (of, category) {
        (_, None) => members,
        (CountOf::Poi, Some(cat)) => members
            .into_iter()
            .filter(|p| poi_category_matches(graph, p, cat))
            .collect(),
        (CountOf::Grid, Some(cat)) => members
            .into_iter()
            .filter(|g| graph.text(g, attr::DOMINANT_FUNCTION) == Some(cat))
            .collect(),
        (CountOf::Enterprise, Some(_)) => members,
    }
}

/// Positions of grids containing at least one POI of `category`.
fn category_sites(graph: &PropertyGraph, category: &str) -> Vec<(u32, u32)> {
    graph
        .grid_cells()
        .filter(|cell| {
            graph
                .members(&cell.entity, EntityKind::Poi)
                .unwrap_or_default()
                .iter()
                .any(|p| poi_category_matches(graph, p, category))
        })
        .map(|c| (c.row, c.col))
        .collect()
}

fn chebyshev(a: (u32, u32), b: (u32, u32)) -> u32 {
    a.0.abs_diff(b.0).max(a.1.abs_diff(b.1))
}

fn evaluate(
    graph: &PropertyGraph,
    def: &IndicatorDef,
    entity: &EntityId,
    sites: &BTreeMap<String, Vec<(u32, u32)>>,
) -> Result<f64, String> {
    match &def.formula {
        Formula::Count { of, category, weight } => {
            let cat = category.as_deref().map(canonical);
            let items = counted(graph, entity, *of, cat.as_deref());
            Ok(match weight {
                None => items.len() as f64,
                Some(w) => items.iter().filter_map(|e| graph.number(e, w)).sum(),
            })
        }
        Formula::Density { of, category } => {
            let cat = category.as_deref().map(canonical);
            let n = counted(graph, entity, *of, cat.as_deref()).len() as f64;
            let cells = match def.scope {
                Scope::Grid => 1,
                Scope::Park => graph.members(entity, EntityKind::Grid).unwrap_or_default().len(),
            };
            if cells == 0 {
                return Err("no grids in scope".into());
            }
            Ok(n / cells as f64)
        }
        Formula::Share { category } => {
            let cat = canonical(category);
            let pois = graph.members(entity, EntityKind::Poi).unwrap_or_default();
            if pois.is_empty() {
                return Ok(0.0);
            }
            let hits = pois.iter().filter(|p| poi_category_matches(graph, p, &cat)).count();
            Ok(hits as f64 / pois.len() as f64)
        }
        Formula::Diversity { order } => {
            let labels: Vec<String> = match def.scope {
                Scope::Grid => graph
                    .members(entity, EntityKind::Poi)
                    .unwrap_or_default()
                    .iter()
                    .filter_map(|p| graph.text(p, attr::CATEGORY).map(String::from))
                    .collect(),
                Scope::Park => graph
                    .members(entity, EntityKind::Grid)
                    .unwrap_or_default()
                    .iter()
                    .filter_map(|g| graph.text(g, attr::DOMINANT_FUNCTION).map(String::from))
                    .collect(),
            };
            let mut counts: BTreeMap<String, usize> = BTreeMap::new();
            for l in labels {
                *counts.entry(l).or_default() += 1;
            }
            let profile = DiversityProfile::from_counts(&counts);
            if profile.proportions.is_empty() {
                return Ok(0.0);
            }
            let p: Vec<f64> = profile.proportions.values().copied().collect();
            crate::eval::hill_number(&p, *order).map_err(|e| e.to_string())
        }
        Formula::Accessibility { category } => {
            let cell = graph
                .grid_cell(entity)
                .ok_or_else(|| "not a lattice grid".to_string())?;
            let targets = sites.get(&canonical(category)).map(Vec::as_slice).unwrap_or(&[]);
            targets
                .iter()
                .map(|&t| chebyshev((cell.row, cell.col), t))
                .min()
                .map(f64::from)
                .ok_or_else(|| format!("no grid contains a `{category}` POI"))
        }
        Formula::AggregateOfGrid { .. } => Err("computed by aggregate_to_park".into()),
    }
}

/// Writes every grid-scope indicator, then every park-scope indicator except
/// grid aggregates. Returns the pairs that could not be valued.
pub fn compute_indicators(
    graph: &mut PropertyGraph,
    registry: &IndicatorRegistry,
) -> Result<Vec<MissingIndicator>, BuildError> {
    registry.validate()?;
    let mut sites = BTreeMap::new();
    for def in &registry.indicators {
        if let Formula::Accessibility { category } = &def.formula {
            let cat = canonical(category);
            sites
                .entry(cat)
                .or_insert_with_key(|cat| category_sites(graph, cat));
        }
    }
    let mut missing = Vec::new();
    for scope in [Scope::Grid, Scope::Park] {
        let kind = match scope {
            Scope::Grid => EntityKind::Grid,
            Scope::Park => EntityKind::IndustrialPark,
        };
        let entities = graph.entities_of_kind(kind);
        for def in registry.of_scope(scope) {
            if matches!(def.formula, Formula::AggregateOfGrid { .. }) {
                continue;
            }
            let values: Vec<(EntityId, Result<f64, String>)> = entities
                .iter()
                .map(|e| (e.clone(), evaluate(graph, def, e, &sites)))
                .collect();
            for (entity, value) in values {
                match value {
                    Ok(v) => graph.set_attribute(&entity, &def.name, v)?,
                    Err(reason) => missing.push(MissingIndicator {
                        entity,
                        indicator: def.name.clone(),
                        reason,
                    }),
                }
            }
        }
    }
    Ok(missing)
}

/// Rolls grid indicators up to parks: grid-scope indicators with an
/// aggregation rule keep their name at park level; `aggregate_of_grid`
/// indicators are written under their own name.
pub fn aggregate_to_park(
    graph: &mut PropertyGraph,
    registry: &IndicatorRegistry,
) -> Result<Vec<MissingIndicator>, BuildError> {
    let mut jobs: Vec<(String, String, Aggregation)> = Vec::new();
    for def in &registry.indicators {
        match (&def.formula, def.aggregation) {
            (Formula::AggregateOfGrid { source, rule }, _) => {
                jobs.push((def.name.clone(), source.clone(), *rule))
            }
            (_, Some(rule)) if def.scope == Scope::Grid => {
                jobs.push((def.name.clone(), def.name.clone(), rule))
            }
            _ => {}
        }
    }
    let mut missing = Vec::new();
    for park in graph.entities_of_kind(EntityKind::IndustrialPark) {
        let grids: Vec<EntityId> = graph
            .grids_of_park(&park)
            .into_iter()
            .map(|c| c.entity.clone())
            .collect();
        for (target, source, rule) in &jobs {
            let values: Vec<f64> = grids.iter().filter_map(|g| graph.number(g, source)).collect();
            match rule.apply(&values) {
                Some(v) => graph.set_attribute(&park, target, v)?,
                None => missing.push(MissingIndicator {
                    entity: park.clone(),
                    indicator: target.clone(),
                    reason: if grids.is_empty() {
                        "park has no grids".into()
                    } else {
                        format!("no grid carries `{source}`")
                    },
                }),
            }
        }
    }
    Ok(missing)
}
