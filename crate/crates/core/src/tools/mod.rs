//! The six decision-support tools behind one invocation surface.
//!
//! Every tool call returns an [`Observation`]; failures (bad arguments,
//! unknown ids, query errors, provider outages) are reported in-band with
//! `success = false` so the planner can reflect on them.

mod borda;
mod embed;
mod geo;

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value as Json};

use crate::builder::{attr, cosine, park_feature_vectors, IndicatorRegistry, Scope};
use crate::graph::{Direction, EntityId, EntityKind, PropertyGraph, Relation, SharedGraph};
use crate::query;

pub use borda::{
    borda_rank, mean_ranks, rank_candidates, Criterion, Direction as CriterionDirection, Excluded,
    RankError, RankedRecommendation,
};
pub use embed::{
    tokenize, EmbedError, EmbeddingProvider, HashTokenEmbedder, RemoteEmbedder,
    DEFAULT_DIMENSION,
};
pub(crate) use embed::fnv1a;
pub use geo::{normalize, Gazetteer, GazetteerEntry, Lookup};

pub const STRUCTURED_QUERY: &str = "structured_query";
pub const SIMILARITY_SEARCH: &str = "similarity_search";
pub const GEO_ENCODE: &str = "geo_encode";
pub const GEO_DECODE: &str = "geo_decode";
pub const RANK_MASTER: &str = "rank_master";
pub const FUNCTION_PLANNER: &str = "function_planner";

pub const DEFAULT_SUMMARY_CAP: usize = 2000;
pub const DEFAULT_TOP_K: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolInvocation {
    pub tool: String,
    #[serde(default)]
    pub args: BTreeMap<String, Json>,
    #[serde(default)]
    pub step: usize,
}

impl ToolInvocation {
    pub fn new(tool: impl Into<String>) -> Self {
        ToolInvocation {
            tool: tool.into(),
            args: BTreeMap::new(),
            step: 0,
        }
    }

    pub fn arg(mut self, name: &str, value: impl Into<Json>) -> Self {
        self.args.insert(name.to_string(), value.into());
        self
    }

    /// Identity of the call ignoring the step index.
    pub fn same_call(&self, other: &ToolInvocation) -> bool {
        self.tool == other.tool && self.args == other.args
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub summary: String,
    pub payload: Json,
    pub success: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    /// Number of results for tools that return collections.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub result_count: Option<usize>,
}

/// Truncates to at most `cap` characters, marking the cut.
pub fn cap_text(text: &str, cap: usize) -> String {
    if text.chars().count() <= cap {
        return text.to_string();
    }
    const MARK: &str = " ...[truncated]";
    let keep = cap.saturating_sub(MARK.len());
    let mut out: String = text.chars().take(keep).collect();
    if cap >= MARK.len() {
        out.push_str(MARK);
    }
    out
}

impl Observation {
    pub fn ok(summary: impl Into<String>, payload: Json, result_count: Option<usize>) -> Self {
        Observation {
            summary: summary.into(),
            payload,
            success: true,
            error: None,
            result_count,
        }
    }

    pub fn fail(error: impl Into<String>) -> Self {
        Observation::fail_with(error, Json::Null)
    }

    pub fn fail_with(error: impl Into<String>, payload: Json) -> Self {
        let mut error = error.into();
        if error.trim().is_empty() {
            error = "tool failed without detail".into();
        }
        Observation {
            summary: format!("error: {error}"),
            payload,
            success: false,
            error: Some(error),
            result_count: None,
        }
    }

    fn capped(mut self, cap: usize) -> Self {
        self.summary = cap_text(&self.summary, cap);
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ArgKind {
    Text,
    Integer,
    List,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArgSpec {
    pub name: String,
    #[serde(rename = "type")]
    pub kind: ArgKind,
    pub required: bool,
    pub description: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolSpec {
    pub name: String,
    pub description: String,
    pub args: Vec<ArgSpec>,
}

fn arg(name: &str, kind: ArgKind, required: bool, description: &str) -> ArgSpec {
    ArgSpec {
        name: name.into(),
        kind,
        required,
        description: description.into(),
    }
}

/// Names and argument schemas of every tool, in a fixed order.
pub fn manifest() -> Vec<ToolSpec> {
    use ArgKind::*;
    vec![
        ToolSpec {
            name: STRUCTURED_QUERY.into(),
            description: "Run a graph query (MATCH ... WHERE ... RETURN ...) and return the result table.".into(),
            args: vec![arg("query", Text, true, "query text")],
        },
        ToolSpec {
            name: SIMILARITY_SEARCH.into(),
            description: "Find the parks most similar to a free-text description or to an existing park.".into(),
            args: vec![
                arg("description", Text, false, "free-text description (use this or `park`)"),
                arg("park", Text, false, "id of a park to compare against"),
                arg("top_k", Integer, false, "number of parks to return (default 5)"),
            ],
        },
        ToolSpec {
            name: GEO_ENCODE.into(),
            description: "Resolve a street address to a grid id.".into(),
            args: vec![arg("address", Text, true, "address text")],
        },
        ToolSpec {
            name: GEO_DECODE.into(),
            description: "Describe a grid id as a readable address.".into(),
            args: vec![arg("grid", Text, true, "grid id")],
        },
        ToolSpec {
            name: RANK_MASTER.into(),
            description: "Rank candidate sites by Borda count over indicator criteria.".into(),
            args: vec![
                arg("candidates", List, true, "site ids"),
                arg("criteria", List, true, "indicator names, optionally suffixed :higher or :lower"),
            ],
        },
        ToolSpec {
            name: FUNCTION_PLANNER.into(),
            description: "Collect the planning context of a grid: its indicators and function, its neighbors, and its park's leading industries.".into(),
            args: vec![arg("grid", Text, true, "grid id")],
        },
    ]
}

pub fn manifest_json() -> String {
    serde_json::to_string_pretty(&manifest()).expect("manifest serializes")
}

fn validate(inv: &ToolInvocation) -> Result<&'static ToolSpecRef, String> {
    let spec = TOOL_SPECS
        .iter()
        .find(|s| s.name == inv.tool)
        .ok_or_else(|| {
            let known: Vec<&str> = TOOL_SPECS.iter().map(|s| s.name).collect();
            format!("unknown tool `{}` (available: {})", inv.tool, known.join(", "))
        })?;
    for (name, value) in &inv.args {
        let Some((_, kind, _)) = spec.args.iter().find(|(n, _, _)| n == name) else {
            return Err(format!("{}: unexpected argument `{name}`", inv.tool));
        };
        let ok = match kind {
            ArgKind::Text => value.is_string(),
            ArgKind::Integer => value.as_u64().is_some(),
            ArgKind::List => value
                .as_array()
                .is_some_and(|a| a.iter().all(Json::is_string)),
        };
        if !ok {
            return Err(format!(
                "{}: argument `{name}` must be {}",
                inv.tool,
                match kind {
                    ArgKind::Text => "a string",
                    ArgKind::Integer => "a non-negative integer",
                    ArgKind::List => "a list of strings",
                }
            ));
        }
    }
    for (name, _, required) in spec.args {
        if *required && !inv.args.contains_key(*name) {
            return Err(format!("{}: missing required argument `{name}`", inv.tool));
        }
    }
    Ok(spec)
}

/// Compact static mirror of [`manifest`] used for validation.
struct ToolSpecRef {
    name: &'static str,
    args: &'static [(&'static str, ArgKind, bool)],
}

static TOOL_SPECS: [ToolSpecRef; 6] = [
    ToolSpecRef {
        name: STRUCTURED_QUERY,
        args: &[("query", ArgKind::Text, true)],
    },
    ToolSpecRef {
        name: SIMILARITY_SEARCH,
        args: &[
            ("description", ArgKind::Text, false),
            ("park", ArgKind::Text, false),
            ("top_k", ArgKind::Integer, false),
        ],
    },
    ToolSpecRef {
        name: GEO_ENCODE,
        args: &[("address", ArgKind::Text, true)],
    },
    ToolSpecRef {
        name: GEO_DECODE,
        args: &[("grid", ArgKind::Text, true)],
    },
    ToolSpecRef {
        name: RANK_MASTER,
        args: &[
            ("candidates", ArgKind::List, true),
            ("criteria", ArgKind::List, true),
        ],
    },
    ToolSpecRef {
        name: FUNCTION_PLANNER,
        args: &[("grid", ArgKind::Text, true)],
    },
];

fn text_arg<'a>(inv: &'a ToolInvocation, name: &str) -> Option<&'a str> {
    inv.args.get(name).and_then(Json::as_str)
}

fn list_arg(inv: &ToolInvocation, name: &str) -> Vec<String> {
    inv.args
        .get(name)
        .and_then(Json::as_array)
        .map(|a| a.iter().filter_map(|v| v.as_str().map(String::from)).collect())
        .unwrap_or_default()
}

/// What a similarity search compares against.
#[derive(Debug, Clone, PartialEq)]
pub enum SimilarityQuery {
    Description(String),
    Park(EntityId),
}

/// The tools bound to one frozen graph. Cheap to clone and safe to share
/// across threads.
#[derive(Clone)]
pub struct Toolbox {
    graph: SharedGraph,
    registry: Arc<IndicatorRegistry>,
    gazetteer: Arc<Gazetteer>,
    embedder: Arc<dyn EmbeddingProvider>,
    summary_cap: usize,
}

impl std::fmt::Debug for Toolbox {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Toolbox")
            .field("entities", &self.graph.entity_count())
            .field("gazetteer", &self.gazetteer.len())
            .field("embedder", &self.embedder.name())
            .field("summary_cap", &self.summary_cap)
            .finish()
    }
}

impl Toolbox {
    /// Uses the hash-token embedder and a gazetteer built from POI addresses.
    pub fn new(graph: SharedGraph, registry: IndicatorRegistry) -> Self {
        let gazetteer = Gazetteer::from_graph(&graph);
        Toolbox {
            graph,
            registry: Arc::new(registry),
            gazetteer: Arc::new(gazetteer),
            embedder: Arc::new(HashTokenEmbedder::default()),
            summary_cap: DEFAULT_SUMMARY_CAP,
        }
    }

    pub fn with_gazetteer(mut self, gazetteer: Gazetteer) -> Self {
        self.gazetteer = Arc::new(gazetteer);
        self
    }

    pub fn with_embedder(mut self, embedder: Arc<dyn EmbeddingProvider>) -> Self {
        self.embedder = embedder;
        self
    }

    pub fn with_summary_cap(mut self, cap: usize) -> Self {
        self.summary_cap = cap;
        self
    }

    pub fn graph(&self) -> &PropertyGraph {
        &self.graph
    }

    pub fn shared_graph(&self) -> SharedGraph {
        Arc::clone(&self.graph)
    }

    pub fn registry(&self) -> &IndicatorRegistry {
        &self.registry
    }

    pub fn gazetteer(&self) -> &Gazetteer {
        &self.gazetteer
    }

    pub fn summary_cap(&self) -> usize {
        self.summary_cap
    }

    /// Validates and dispatches. Never panics on bad input; every problem
    /// comes back as a failed observation.
    pub fn invoke(&self, inv: &ToolInvocation) -> Observation {
        let obs = match validate(inv) {
            Err(e) => Observation::fail(e),
            Ok(spec) => match spec.name {
                STRUCTURED_QUERY => self.structured_query(text_arg(inv, "query").unwrap_or_default()),
                SIMILARITY_SEARCH => {
                    let top_k = inv
                        .args
                        .get("top_k")
                        .and_then(Json::as_u64)
                        .map_or(DEFAULT_TOP_K, |k| k as usize);
                    match (text_arg(inv, "description"), text_arg(inv, "park")) {
                        (Some(d), None) => {
                            self.similarity_search(&SimilarityQuery::Description(d.into()), top_k)
                        }
                        (None, Some(p)) => {
                            self.similarity_search(&SimilarityQuery::Park(p.into()), top_k)
                        }
                        _ => Observation::fail(
                            "similarity_search: give exactly one of `description` or `park`",
                        ),
                    }
                }
                GEO_ENCODE => self.geo_encode(text_arg(inv, "address").unwrap_or_default()),
                GEO_DECODE => self.geo_decode(&text_arg(inv, "grid").unwrap_or_default().into()),
                RANK_MASTER => {
                    let candidates: Vec<EntityId> =
                        list_arg(inv, "candidates").into_iter().map(EntityId::from).collect();
                    let mut criteria = Vec::new();
                    for spec in list_arg(inv, "criteria") {
                        match Criterion::parse_with(&spec, &self.registry) {
                            Ok(c) => criteria.push(c),
                            Err(e) => return Observation::fail(e).capped(self.summary_cap),
                        }
                    }
                    self.rank_master(&candidates, &criteria)
                }
                FUNCTION_PLANNER => {
                    self.function_planner(&text_arg(inv, "grid").unwrap_or_default().into())
                }
                _ => unreachable!("validated tool name"),
            },
        };
        obs.capped(self.summary_cap)
    }

    pub fn structured_query(&self, text: &str) -> Observation {
        match query::run(text, &self.graph) {
            Ok(table) => {
                let summary = table.render(10);
                let count = table.total;
                Observation::ok(
                    summary,
                    serde_json::to_value(&table).expect("table serializes"),
                    Some(count),
                )
            }
            Err(e) => Observation::fail(e.to_string()),
        }
    }

    fn park_profile_text(&self, park: &EntityId) -> String {
        let g = &self.graph;
        let mut parts = Vec::new();
        if let Some(e) = g.entity(park) {
            parts.push(e.label.clone());
        }
        if let Some(list) = g
            .attribute(park, attr::PLANNED_INDUSTRIES)
            .ok()
            .flatten()
            .and_then(|v| v.as_list())
        {
            parts.extend(list.iter().cloned());
        }
        for level in 1..=3 {
            if let Some(t) = g.text(park, &attr::leading_industry(level)) {
                parts.push(t.to_string());
            }
        }
        if let Some(t) = g.text(park, attr::LEADING_SCOPE) {
            parts.push(t.to_string());
        }
        parts.join(" ")
    }

    /// Scores every park against the query; `None` marks a zero-norm
    /// comparison, which scores 0.
    fn similarity_scores(&self, q: &SimilarityQuery) -> Result<Vec<(EntityId, f64)>, String> {
        let parks = self.graph.entities_of_kind(EntityKind::IndustrialPark);
        match q {
            SimilarityQuery::Park(id) => {
                if self.graph.entity(id).map(|e| e.kind) != Some(EntityKind::IndustrialPark) {
                    return Err(format!("unknown park `{id}`"));
                }
                let schema = self.registry.park_level_names();
                let (vectors, _) = park_feature_vectors(&self.graph, &schema);
                let target = &vectors[id].values;
                if target.iter().all(|v| *v == 0.0) {
                    return Err(format!("park `{id}` has no distinguishing features"));
                }
                Ok(parks
                    .into_iter()
                    .map(|p| {
                        let s = cosine(target, &vectors[&p].values).unwrap_or(0.0);
                        (p, s)
                    })
                    .collect())
            }
            SimilarityQuery::Description(text) => {
                let mut texts = vec![text.clone()];
                texts.extend(parks.iter().map(|p| self.park_profile_text(p)));
                let vectors = self.embedder.embed(&texts).map_err(|e| e.to_string())?;
                let (query, rest) = vectors.split_first().ok_or("provider returned nothing")?;
                if query.iter().all(|v| *v == 0.0) {
                    return Err("description has no usable tokens".into());
                }
                Ok(parks
                    .into_iter()
                    .zip(rest)
                    .map(|(p, v)| (p, cosine(query, v).unwrap_or(0.0)))
                    .collect())
            }
        }
    }

    pub fn similarity_search(&self, q: &SimilarityQuery, top_k: usize) -> Observation {
        if top_k == 0 {
            return Observation::fail("similarity_search: top_k must be at least 1");
        }
        let mut scored = match self.similarity_scores(q) {
            Ok(s) => s,
            Err(e) => return Observation::fail(e),
        };
        scored.sort_by(|(a, x), (b, y)| y.total_cmp(x).then_with(|| a.cmp(b)));
        scored.truncate(top_k);
        let mut summary = String::from("most similar parks:\n");
        let results: Vec<Json> = scored
            .iter()
            .enumerate()
            .map(|(i, (p, s))| {
                let name = self.graph.entity(p).map(|e| e.label.as_str()).unwrap_or("");
                summary.push_str(&format!("{}. {p} ({name}) score {s:.4}\n", i + 1));
                json!({"park": p, "name": name, "score": s})
            })
            .collect();
        let mode = match q {
            SimilarityQuery::Description(_) => "description",
            SimilarityQuery::Park(_) => "park",
        };
        Observation::ok(
            summary.trim_end(),
            json!({"mode": mode, "results": results}),
            Some(results.len()),
        )
    }

    pub fn geo_encode(&self, address: &str) -> Observation {
        let (entry, how) = match self.gazetteer.lookup(address) {
            Lookup::Exact(e) => (e, "exact"),
            Lookup::Normalized(e) => (e, "normalized"),
            Lookup::Missing { suggestions } => {
                let names: Vec<&str> = suggestions.iter().map(|e| e.address.as_str()).collect();
                return Observation::fail_with(
                    format!(
                        "no gazetteer entry for `{address}`; nearest: {}",
                        if names.is_empty() { "none".to_string() } else { names.join(" | ") }
                    ),
                    json!({"suggestions": suggestions}),
                );
            }
        };
        let grid = EntityId::new(entry.grid_id.clone());
        let park = self.graph.grid_cell(&grid).map(|c| c.park.clone());
        Observation::ok(
            format!("`{address}` is in grid {grid} ({how} match)"),
            json!({"address": entry.address, "grid": grid, "park": park, "match": how}),
            Some(1),
        )
    }

    pub fn geo_decode(&self, grid: &EntityId) -> Observation {
        let Some(cell) = self.graph.grid_cell(grid) else {
            return Observation::fail(format!("unknown grid `{grid}`"));
        };
        let (address, source) = match self.gazetteer.canonical_address(grid) {
            Some(a) => (a.to_string(), "gazetteer"),
            None => {
                let park = self
                    .graph
                    .entity(&cell.park)
                    .map(|e| e.label.clone())
                    .unwrap_or_else(|| cell.park.to_string());
                (format!("Park {park}, cell ({},{})", cell.row, cell.col), "synthesized")
            }
        };
        Observation::ok(
            format!("grid {grid}: {address}"),
            json!({"grid": grid, "address": address, "source": source, "row": cell.row, "col": cell.col, "park": cell.park}),
            Some(1),
        )
    }

    pub fn rank_master(&self, candidates: &[EntityId], criteria: &[Criterion]) -> Observation {
        for c in criteria {
            if self.graph.attribute_def(&c.name).is_none() {
                return Observation::fail(format!("unknown criterion `{}`", c.name));
            }
        }
        match rank_candidates(&self.graph, candidates, criteria) {
            Ok(r) => {
                let mut summary = format!(
                    "Borda ranking of {} candidates over {} criteria ({}):\n",
                    r.candidates.len(),
                    r.criteria.len(),
                    r.criteria.iter().map(Criterion::to_string).collect::<Vec<_>>().join(", ")
                );
                for (i, id) in r.ordering.iter().take(10).enumerate() {
                    let score = r.score_of(id).unwrap_or_default();
                    summary.push_str(&format!("{}. {id} B={score}\n", i + 1));
                }
                if !r.excluded.is_empty() {
                    summary.push_str(&format!("excluded {}:", r.excluded.len()));
                    for e in r.excluded.iter().take(5) {
                        summary.push_str(&format!(" {} ({});", e.candidate, e.reason));
                    }
                }
                let n = r.ordering.len();
                Observation::ok(
                    summary.trim_end(),
                    serde_json::to_value(&r).expect("ranking serializes"),
                    Some(n),
                )
            }
            Err(RankError::AllExcluded(excluded)) => Observation::fail_with(
                format!("every candidate was excluded ({} lacked values)", excluded.len()),
                json!({"excluded": excluded}),
            ),
            Err(e) => Observation::fail(e.to_string()),
        }
    }

    fn grid_profile(&self, grid: &EntityId) -> Json {
        let g = &self.graph;
        let cell = g.grid_cell(grid);
        let indicators: BTreeMap<&str, f64> = self
            .registry
            .of_scope(Scope::Grid)
            .filter_map(|d| g.number(grid, &d.name).map(|v| (d.name.as_str(), v)))
            .collect();
        json!({
            "grid": grid,
            "row": cell.map(|c| c.row),
            "col": cell.map(|c| c.col),
            "dominant_function": g.text(grid, attr::DOMINANT_FUNCTION),
            "indicators": indicators,
        })
    }

    pub fn function_planner(&self, grid: &EntityId) -> Observation {
        let g = &self.graph;
        let Some(cell) = g.grid_cell(grid) else {
            return Observation::fail(format!("unknown grid `{grid}`"));
        };
        let neighbors: Vec<EntityId> = g
            .neighbors(grid, Relation::AdjacentTo, Direction::Both)
            .unwrap_or_default()
            .into_iter()
            .filter(|n| g.entity(n).map(|e| e.kind) == Some(EntityKind::Grid))
            .collect();
        let mut histogram: BTreeMap<String, usize> = BTreeMap::new();
        for n in &neighbors {
            let f = g.text(n, attr::DOMINANT_FUNCTION).unwrap_or(crate::taxonomy::UNASSIGNED);
            *histogram.entry(f.to_string()).or_default() += 1;
        }
        let mut leading = BTreeMap::new();
        for level in 1..=3u8 {
            if let Some(t) = g.text(&cell.park, &attr::leading_industry(level)) {
                leading.insert(format!("l{level}"), t.to_string());
            }
        }
        let scope = g.text(&cell.park, attr::LEADING_SCOPE);
        let target = self.grid_profile(grid);

        let mut summary = format!(
            "grid {grid} at ({},{}) in park {}; current function: {}\n",
            cell.row,
            cell.col,
            cell.park,
            g.text(grid, attr::DOMINANT_FUNCTION).unwrap_or("unknown")
        );
        if let Some(ind) = target["indicators"].as_object() {
            let parts: Vec<String> = ind.iter().map(|(k, v)| format!("{k}={v}")).collect();
            summary.push_str(&format!("indicators: {}\n", parts.join(", ")));
        }
        let hist: Vec<String> = histogram.iter().map(|(k, v)| format!("{k}: {v}")).collect();
        summary.push_str(&format!("{} neighbors; functions: {}\n", neighbors.len(), hist.join(", ")));
        let lead: Vec<String> = leading.iter().map(|(k, v)| format!("{k} {v}")).collect();
        summary.push_str(&format!(
            "park leading industries: {}; leading scope: {}",
            if lead.is_empty() { "none".to_string() } else { lead.join(", ") },
            scope.unwrap_or("none")
        ));

        let count = neighbors.len();
        Observation::ok(
            summary,
            json!({
                "target": target,
                "park": cell.park,
                "neighbors": neighbors.iter().map(|n| self.grid_profile(n)).collect::<Vec<_>>(),
                "neighbor_functions": histogram,
                "park_leading_industries": leading,
                "park_leading_scope": scope,
            }),
            Some(count),
        )
    }
}
