//! Knowledge-graph construction from raw tables.
//!
//! The pipeline is: [`ingest`] → [`extract_adjacency`] → leading industries
//! and scopes → [`dominant_function`] per grid → [`compute_indicators`] →
//! [`aggregate_to_park`] → similarity and industry-correlation edges.
//! [`build_graph`] runs all of it.

mod indicators;
mod similarity;
mod tables;

use std::collections::{BTreeMap, BTreeSet};
use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{
    Entity, EntityId, EntityKind, GraphError, GridCell, PropertyGraph, Relation, RelationalTriple,
};
use crate::taxonomy::{FunctionType, UNASSIGNED};

pub use indicators::{
    aggregate_to_park, compute_indicators, Aggregation, CountOf, Formula, IndicatorDef,
    IndicatorRegistry, MissingIndicator, Polarity, Scope,
};
pub use similarity::{
    correlation_edges, cosine, induce_edges, industry_vectors, park_feature_vector,
    park_feature_vectors, similarity_edges, EdgeReport, FeatureVector, MissingFeature,
};
pub use tables::{
    EnterpriseRow, GridRow, ParkRow, PoiRow, RawTables, ENTERPRISES_FILE, GRIDS_FILE, PARKS_FILE,
    POIS_FILE,
};

/// Attribute names written by the builder.
pub mod attr {
    pub const CATEGORY: &str = "category";
    pub const ADDRESS: &str = "address";
    pub const PLANNED_INDUSTRIES: &str = "planned_industries";
    pub const SCOPES: &str = "scopes";
    pub const DOMINANT_FUNCTION: &str = "dominant_function";
    pub const LEADING_SCOPE: &str = "leading_scope";

    pub fn industry(level: u8) -> String {
        format!("industry_l{level}")
    }

    pub fn leading_industry(level: u8) -> String {
        format!("leading_industry_l{level}")
    }
}

#[derive(Debug, Error)]
pub enum BuildError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("{}:{line}: {message}", file.display())]
    Parse {
        file: PathBuf,
        line: usize,
        message: String,
    },
    #[error("{table} row {row}: `{field}` references unknown id `{id}`")]
    Dangling {
        table: &'static str,
        row: usize,
        field: &'static str,
        id: String,
    },
    #[error("{table} row {row}: duplicate id `{id}`")]
    Duplicate {
        table: &'static str,
        row: usize,
        id: String,
    },
    #[error("{table} row {row}: {message}")]
    InvalidRow {
        table: &'static str,
        row: usize,
        message: String,
    },
    #[error("invalid indicator registry: {0}")]
    Registry(String),
    #[error("unknown category parameter `{category}` in indicator `{indicator}`")]
    UnknownCategory { indicator: String, category: String },
    #[error("`{0}` is not an industrial park")]
    NotAPark(EntityId),
    #[error("`{0}` is not a grid")]
    NotAGrid(EntityId),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

impl BuildError {
    pub(crate) fn io(path: &Path, source: io::Error) -> Self {
        BuildError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Neighborhood {
    /// 4-connectivity.
    Rook,
    /// 8-connectivity.
    #[default]
    Queen,
}

impl Neighborhood {
    /// Forward half of the neighbor offsets; the other half follows by symmetry.
    fn forward_offsets(self) -> &'static [(i64, i64)] {
        match self {
            Neighborhood::Rook => &[(0, 1), (1, 0)],
            Neighborhood::Queen => &[(0, 1), (1, -1), (1, 0), (1, 1)],
        }
    }
}

fn industry_entity(prefix: &str, tag: &str, label: &str, kind: EntityKind) -> Entity {
    Entity::new(format!("{prefix}:{tag}:{label}"), kind, label)
}

/// Creates entities and containment triples from the raw tables.
pub fn ingest(tables: &RawTables) -> Result<PropertyGraph, BuildError> {
    let mut g = PropertyGraph::new();
    let mut park_ranges = BTreeMap::new();

    for (i, p) in tables.parks.iter().enumerate() {
        let row = i + 1;
        let id = EntityId::from(p.park_id.as_str());
        if g.contains(&id) {
            return Err(BuildError::Duplicate { table: "parks", row, id: p.park_id.clone() });
        }
        if p.row_min > p.row_max || p.col_min > p.col_max {
            return Err(BuildError::InvalidRow {
                table: "parks",
                row,
                message: "empty bounding grid range".into(),
            });
        }
        g.add_entity(Entity::new(id.clone(), EntityKind::IndustrialPark, &p.name))
            .map_err(|e| row_error("parks", row, e))?;
        g.set_attribute(&id, attr::PLANNED_INDUSTRIES, p.planned_industries.clone())?;
        for industry in &p.planned_industries {
            let target = g.ensure_entity(industry_entity(
                "pind",
                "planned",
                industry,
                EntityKind::ParkIndustry,
            ))?;
            g.ensure_relation(RelationalTriple::new(id.clone(), Relation::Has, target))?;
        }
        park_ranges.insert(id, (p.row_min..=p.row_max, p.col_min..=p.col_max));
    }

    for (i, r) in tables.grids.iter().enumerate() {
        let row = i + 1;
        let park = EntityId::from(r.park_id.as_str());
        let Some((rows, cols)) = park_ranges.get(&park) else {
            return Err(BuildError::Dangling { table: "grids", row, field: "park_id", id: r.park_id.clone() });
        };
        if !rows.contains(&r.row) || !cols.contains(&r.col) {
            return Err(BuildError::InvalidRow {
                table: "grids",
                row,
                message: format!(
                    "cell ({}, {}) lies outside the bounding range of `{}`",
                    r.row, r.col, r.park_id
                ),
            });
        }
        let id = EntityId::from(r.grid_id.as_str());
        if g.contains(&id) {
            return Err(BuildError::Duplicate { table: "grids", row, id: r.grid_id.clone() });
        }
        let park_name = g.entity(&park).map(|e| e.label.clone()).unwrap_or_default();
        g.add_entity(Entity::new(
            id.clone(),
            EntityKind::Grid,
            format!("{park_name} ({}, {})", r.row, r.col),
        ))
        .map_err(|e| row_error("grids", row, e))?;
        g.add_grid(GridCell {
            entity: id.clone(),
            row: r.row,
            col: r.col,
            lat: r.lat,
            lon: r.lon,
            park: park.clone(),
        })
        .map_err(|e| row_error("grids", row, e))?;
        g.add_relation(RelationalTriple::new(id, Relation::LocatedIn, park))?;
    }

    for (i, p) in tables.pois.iter().enumerate() {
        let row = i + 1;
        let grid = EntityId::from(p.grid_id.as_str());
        let Some(park) = g.grid_cell(&grid).map(|c| c.park.clone()) else {
            return Err(BuildError::Dangling { table: "pois", row, field: "grid_id", id: p.grid_id.clone() });
        };
        let category: FunctionType = p.category.parse().map_err(|message| BuildError::InvalidRow {
            table: "pois",
            row,
            message,
        })?;
        let id = EntityId::from(p.poi_id.as_str());
        if g.contains(&id) {
            return Err(BuildError::Duplicate { table: "pois", row, id: p.poi_id.clone() });
        }
        g.add_entity(Entity::new(id.clone(), EntityKind::Poi, &p.name))
            .map_err(|e| row_error("pois", row, e))?;
        g.set_attribute(&id, attr::CATEGORY, category.label())?;
        if !p.address.is_empty() {
            g.set_attribute(&id, attr::ADDRESS, p.address.as_str())?;
        }
        g.add_relation(RelationalTriple::new(id.clone(), Relation::LocatedIn, grid))?;
        g.add_relation(RelationalTriple::new(id, Relation::LocatedIn, park))?;
    }

    for (i, e) in tables.enterprises.iter().enumerate() {
        let row = i + 1;
        let grid = EntityId::from(e.grid_id.as_str());
        let Some(park) = g.grid_cell(&grid).map(|c| c.park.clone()) else {
            return Err(BuildError::Dangling { table: "enterprises", row, field: "grid_id", id: e.grid_id.clone() });
        };
        let id = EntityId::from(e.ent_id.as_str());
        if g.contains(&id) {
            return Err(BuildError::Duplicate { table: "enterprises", row, id: e.ent_id.clone() });
        }
        g.add_entity(Entity::new(id.clone(), EntityKind::Enterprise, &e.name))
            .map_err(|err| row_error("enterprises", row, err))?;
        let levels = [&e.primary_industry, &e.secondary_industry, &e.tertiary_industry];
        for (level, label) in (1u8..).zip(levels) {
            let Some(label) = label.as_deref().filter(|s| !s.trim().is_empty()) else {
                continue;
            };
            g.set_attribute(&id, &attr::industry(level), label)?;
            let target = g.ensure_entity(industry_entity(
                "eind",
                &format!("l{level}"),
                label,
                EntityKind::EnterpriseIndustry,
            ))?;
            g.ensure_relation(RelationalTriple::new(id.clone(), Relation::Has, target))?;
        }
        let scopes: Vec<String> = e
            .scopes
            .iter()
            .filter(|s| !s.trim().is_empty())
            .cloned()
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        if !scopes.is_empty() {
            for scope in &scopes {
                let target = g.ensure_entity(industry_entity(
                    "eind",
                    "scope",
                    scope,
                    EntityKind::EnterpriseIndustry,
                ))?;
                g.ensure_relation(RelationalTriple::new(id.clone(), Relation::Has, target))?;
            }
            g.set_attribute(&id, attr::SCOPES, scopes)?;
        }
        for (name, value) in &e.attributes {
            g.set_attribute(&id, name, *value)
                .map_err(|err| row_error("enterprises", row, err))?;
        }
        g.add_relation(RelationalTriple::new(id.clone(), Relation::LocatedIn, grid))?;
        g.add_relation(RelationalTriple::new(id, Relation::LocatedIn, park))?;
    }
    Ok(g)
}

fn row_error(table: &'static str, row: usize, err: GraphError) -> BuildError {
    match err {
        GraphError::DuplicateEntity(id) => BuildError::Duplicate {
            table,
            row,
            id: id.to_string(),
        },
        other => BuildError::InvalidRow {
            table,
            row,
            message: other.to_string(),
        },
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdjacencyReport {
    pub grid_pairs: usize,
    pub park_pairs: usize,
}

/// Adds grid–grid adjacency from the lattice, and park–park adjacency
/// wherever grids of two different parks touch. Idempotent.
pub fn extract_adjacency(
    graph: &mut PropertyGraph,
    neighborhood: Neighborhood,
) -> Result<AdjacencyReport, BuildError> {
    let mut pairs = Vec::new();
    for cell in graph.grid_cells() {
        for &(dr, dc) in neighborhood.forward_offsets() {
            let (Some(r), Some(c)) = (
                u32::try_from(cell.row as i64 + dr).ok(),
                u32::try_from(cell.col as i64 + dc).ok(),
            ) else {
                continue;
            };
            if let Some(other) = graph.grid_at(r, c) {
                let park_b = graph.grid_cell(other).map(|o| o.park.clone());
                pairs.push((cell.entity.clone(), other.clone(), cell.park.clone(), park_b));
            }
        }
    }
    let mut report = AdjacencyReport::default();
    for (a, b, park_a, park_b) in pairs {
        if graph.ensure_relation(RelationalTriple::new(a, Relation::AdjacentTo, b))? {
            report.grid_pairs += 1;
        }
        if let Some(park_b) = park_b.filter(|p| *p != park_a) {
            if graph.ensure_relation(RelationalTriple::new(park_a, Relation::AdjacentTo, park_b))? {
                report.park_pairs += 1;
            }
        }
    }
    Ok(report)
}

/// Most frequent label; ties go to the lexicographically smallest label.
pub fn argmax_label<'a>(labels: impl IntoIterator<Item = &'a str>) -> Option<String> {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for l in labels {
        *counts.entry(l).or_default() += 1;
    }
    // BTreeMap iterates in label order, so the first maximum wins ties
    let mut best: Option<(&str, usize)> = None;
    for (label, n) in counts {
        if best.is_none_or(|(_, m)| n > m) {
            best = Some((label, n));
        }
    }
    best.map(|(l, _)| l.to_string())
}

/// Scope listed by the largest number of enterprises. A scope counts once per
/// enterprise no matter how often that enterprise repeats it.
pub fn argmax_scope<'a>(scope_lists: impl IntoIterator<Item = &'a [String]>) -> Option<String> {
    let mut flat = Vec::new();
    for list in scope_lists {
        let distinct: BTreeSet<&str> = list.iter().map(String::as_str).collect();
        flat.extend(distinct);
    }
    argmax_label(flat)
}

fn container_kind(graph: &PropertyGraph, id: &EntityId) -> Result<EntityKind, BuildError> {
    graph
        .entity(id)
        .map(|e| e.kind)
        .ok_or_else(|| BuildError::Graph(GraphError::UnknownEntity(id.clone())))
}

fn leading_for(
    graph: &mut PropertyGraph,
    container: &EntityId,
    expected: EntityKind,
    level: u8,
) -> Result<Option<String>, BuildError> {
    let kind = container_kind(graph, container)?;
    if kind != expected {
        return Err(match expected {
            EntityKind::Grid => BuildError::NotAGrid(container.clone()),
            _ => BuildError::NotAPark(container.clone()),
        });
    }
    assert!((1..=3).contains(&level), "industry level must be 1, 2 or 3");
    let name = attr::industry(level);
    let enterprises = graph.members(container, EntityKind::Enterprise)?;
    let labels: Vec<String> = enterprises
        .iter()
        .filter_map(|e| graph.text(e, &name).map(String::from))
        .collect();
    let Some(leading) = argmax_label(labels.iter().map(String::as_str)) else {
        return Ok(None);
    };
    let (prefix, target_kind) = industry_prefix(expected);
    let target = graph.ensure_entity(industry_entity(
        prefix,
        &format!("l{level}"),
        &leading,
        target_kind,
    ))?;
    graph.ensure_relation(RelationalTriple::new(container.clone(), Relation::Has, target))?;
    graph.set_attribute(container, &attr::leading_industry(level), leading.as_str())?;
    Ok(Some(leading))
}

fn scope_for(
    graph: &mut PropertyGraph,
    container: &EntityId,
    expected: EntityKind,
) -> Result<Option<String>, BuildError> {
    let kind = container_kind(graph, container)?;
    if kind != expected {
        return Err(match expected {
            EntityKind::Grid => BuildError::NotAGrid(container.clone()),
            _ => BuildError::NotAPark(container.clone()),
        });
    }
    let enterprises = graph.members(container, EntityKind::Enterprise)?;
    let lists: Vec<Vec<String>> = enterprises
        .iter()
        .filter_map(|e| graph.attribute(e, attr::SCOPES).ok().flatten())
        .filter_map(|v| v.as_list().map(<[String]>::to_vec))
        .collect();
    let Some(leading) = argmax_scope(lists.iter().map(Vec::as_slice)) else {
        return Ok(None);
    };
    let (prefix, target_kind) = industry_prefix(expected);
    let target =
        graph.ensure_entity(industry_entity(prefix, "scope", &leading, target_kind))?;
    graph.ensure_relation(RelationalTriple::new(container.clone(), Relation::Has, target))?;
    graph.set_attribute(container, attr::LEADING_SCOPE, leading.as_str())?;
    Ok(Some(leading))
}

fn industry_prefix(container: EntityKind) -> (&'static str, EntityKind) {
    match container {
        EntityKind::Grid => ("gind", EntityKind::GridIndustry),
        _ => ("pind", EntityKind::ParkIndustry),
    }
}

/// Leading industry of a park at level 1–3. `None` when no enterprise in the
/// park carries a label at that level; no triple is written in that case.
pub fn leading_industry(
    graph: &mut PropertyGraph,
    park: &EntityId,
    level: u8,
) -> Result<Option<String>, BuildError> {
    leading_for(graph, park, EntityKind::IndustrialPark, level)
}

pub fn leading_scope(
    graph: &mut PropertyGraph,
    park: &EntityId,
) -> Result<Option<String>, BuildError> {
    scope_for(graph, park, EntityKind::IndustrialPark)
}

pub fn leading_grid_industry(
    graph: &mut PropertyGraph,
    grid: &EntityId,
    level: u8,
) -> Result<Option<String>, BuildError> {
    leading_for(graph, grid, EntityKind::Grid, level)
}

pub fn leading_grid_scope(
    graph: &mut PropertyGraph,
    grid: &EntityId,
) -> Result<Option<String>, BuildError> {
    scope_for(graph, grid, EntityKind::Grid)
}

/// Grid → function label overrides (the AOI adjustment).
pub type FunctionOverrides = BTreeMap<EntityId, String>;

/// Reads overrides from a JSON object or a TOML table mapping grid ids to
/// function labels.
pub fn load_overrides(path: impl AsRef<Path>) -> Result<FunctionOverrides, BuildError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| BuildError::io(path, e))?;
    let raw: BTreeMap<String, String> = if path.extension().is_some_and(|e| e == "toml") {
        toml::from_str(&text).map_err(|e| BuildError::Parse {
            file: path.to_path_buf(),
            line: 0,
            message: e.to_string(),
        })?
    } else {
        serde_json::from_str(&text).map_err(|e| BuildError::Parse {
            file: path.to_path_buf(),
            line: e.line(),
            message: e.to_string(),
        })?
    };
    let mut out = FunctionOverrides::new();
    for (grid, label) in raw {
        let function: FunctionType = label.parse().map_err(|message| BuildError::Parse {
            file: path.to_path_buf(),
            line: 0,
            message,
        })?;
        out.insert(grid.into(), function.label().to_string());
    }
    Ok(out)
}

/// Modal POI category of a grid (ties to the smallest label), or the override
/// when one exists. Grids with no POIs are `Unassigned`.
pub fn dominant_function(
    graph: &mut PropertyGraph,
    grid: &EntityId,
    overrides: Option<&FunctionOverrides>,
) -> Result<String, BuildError> {
    if container_kind(graph, grid)? != EntityKind::Grid {
        return Err(BuildError::NotAGrid(grid.clone()));
    }
    let label = match overrides.and_then(|o| o.get(grid)) {
        Some(label) => label.clone(),
        None => {
            let pois = graph.members(grid, EntityKind::Poi)?;
            let categories: Vec<&str> =
                pois.iter().filter_map(|p| graph.text(p, attr::CATEGORY)).collect();
            argmax_label(categories).unwrap_or_else(|| UNASSIGNED.to_string())
        }
    };
    let target = graph.ensure_entity(Entity::new(
        format!("func:{label}"),
        EntityKind::GridDominantFunction,
        label.as_str(),
    ))?;
    graph.ensure_relation(RelationalTriple::new(grid.clone(), Relation::Has, target))?;
    graph.set_attribute(grid, attr::DOMINANT_FUNCTION, label.as_str())?;
    Ok(label)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BuildConfig {
    #[serde(default)]
    pub neighborhood: Neighborhood,
    #[serde(default = "default_similarity")]
    pub similarity_threshold: f64,
    #[serde(default = "default_correlation")]
    pub correlation_threshold: f64,
    /// Park-scope numeric indicators used as the similarity feature schema.
    /// Empty means every park-scope indicator in the registry.
    #[serde(default)]
    pub feature_schema: Vec<String>,
}

fn default_similarity() -> f64 {
    0.95
}

fn default_correlation() -> f64 {
    0.9
}

impl Default for BuildConfig {
    fn default() -> Self {
        BuildConfig {
            neighborhood: Neighborhood::default(),
            similarity_threshold: default_similarity(),
            correlation_threshold: default_correlation(),
            feature_schema: Vec::new(),
        }
    }
}

/// Completeness report emitted by [`build_graph`].
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct BuildReport {
    pub adjacency: AdjacencyReport,
    pub undefined_leading: Vec<String>,
    pub missing_indicators: Vec<MissingIndicator>,
    pub missing_features: Vec<MissingFeature>,
    pub similarity: EdgeReport,
    pub correlation: EdgeReport,
}

/// Runs the whole extraction pipeline.
pub fn build_graph(
    tables: &RawTables,
    registry: &IndicatorRegistry,
    overrides: Option<&FunctionOverrides>,
    config: &BuildConfig,
) -> Result<(PropertyGraph, BuildReport), BuildError> {
    registry.validate()?;
    let mut g = ingest(tables)?;
    let mut report = BuildReport {
        adjacency: extract_adjacency(&mut g, config.neighborhood)?,
        ..BuildReport::default()
    };

    let parks = g.entities_of_kind(EntityKind::IndustrialPark);
    let grids = g.entities_of_kind(EntityKind::Grid);
    for park in &parks {
        for level in 1..=3 {
            if leading_industry(&mut g, park, level)?.is_none() {
                report.undefined_leading.push(format!("{park} level {level}"));
            }
        }
        if leading_scope(&mut g, park)?.is_none() {
            report.undefined_leading.push(format!("{park} scope"));
        }
    }
    for grid in &grids {
        for level in 1..=3 {
            leading_grid_industry(&mut g, grid, level)?;
        }
        leading_grid_scope(&mut g, grid)?;
        dominant_function(&mut g, grid, overrides)?;
    }

    report.missing_indicators = compute_indicators(&mut g, registry)?;
    report
        .missing_indicators
        .extend(aggregate_to_park(&mut g, registry)?);

    let schema: Vec<String> = if config.feature_schema.is_empty() {
        registry.park_level_names()
    } else {
        config.feature_schema.clone()
    };
    let (features, missing) = park_feature_vectors(&g, &schema);
    report.missing_features = missing;
    report.similarity = similarity_edges(&mut g, &features, config.similarity_threshold)?;
    let industry = industry_vectors(&g);
    report.correlation = correlation_edges(&mut g, &industry, config.correlation_threshold)?;
    Ok((g, report))
}
