//! Embedded property graph with a grid lattice.
//!
//! Entities, relational triples and attributional triples live in ordered
//! maps so every listing is deterministic (sorted by [`EntityId`]). Symmetric
//! relations are stored in both directions. Once built, a graph is frozen into
//! an [`Arc`] and shared read-only by tools and search workers.

mod persist;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use persist::{LoadError, SCHEMA_VERSION};

#[derive(Debug, Error, PartialEq)]
pub enum GraphError {
    #[error("duplicate entity id `{0}`")]
    DuplicateEntity(EntityId),
    #[error("unknown entity `{0}`")]
    UnknownEntity(EntityId),
    #[error("duplicate triple ({0}, {1}, {2})")]
    DuplicateTriple(EntityId, Relation, EntityId),
    #[error("self-referencing triple on `{0}`")]
    SelfLoop(EntityId),
    #[error("entity label must be non-empty (id `{0}`)")]
    EmptyLabel(EntityId),
    #[error("attribute `{name}` is declared as {declared} but got {got}")]
    AttributeType {
        name: String,
        declared: ValueKind,
        got: ValueKind,
    },
    #[error("attribute `{0}` has a non-finite value")]
    NonFinite(String),
    #[error("grid cell ({row}, {col}) is already occupied by `{existing}`")]
    LatticeOccupied { row: u32, col: u32, existing: EntityId },
    #[error("grid `{0}` is already registered in the lattice")]
    GridRegistered(EntityId),
    #[error("entity `{id}` has kind {found}, expected {expected}")]
    WrongKind {
        id: EntityId,
        expected: EntityKind,
        found: EntityKind,
    },
    #[error("centroid ({lat}, {lon}) is outside valid coordinate ranges")]
    BadCentroid { lat: f64, lon: f64 },
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EntityId(String);

impl EntityId {
    pub fn new(id: impl Into<String>) -> Self {
        EntityId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for EntityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for EntityId {
    fn from(s: &str) -> Self {
        EntityId(s.to_string())
    }
}

impl From<String> for EntityId {
    fn from(s: String) -> Self {
        EntityId(s)
    }
}

/// The eight major entity categories.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum EntityKind {
    IndustrialPark,
    Grid,
    GridDominantFunction,
    #[serde(rename = "POI")]
    Poi,
    Enterprise,
    EnterpriseIndustry,
    ParkIndustry,
    GridIndustry,
}

impl EntityKind {
    pub const ALL: [EntityKind; 8] = [
        EntityKind::IndustrialPark,
        EntityKind::Grid,
        EntityKind::GridDominantFunction,
        EntityKind::Poi,
        EntityKind::Enterprise,
        EntityKind::EnterpriseIndustry,
        EntityKind::ParkIndustry,
        EntityKind::GridIndustry,
    ];

    pub fn name(self) -> &'static str {
        match self {
            EntityKind::IndustrialPark => "IndustrialPark",
            EntityKind::Grid => "Grid",
            EntityKind::GridDominantFunction => "GridDominantFunction",
            EntityKind::Poi => "POI",
            EntityKind::Enterprise => "Enterprise",
            EntityKind::EnterpriseIndustry => "EnterpriseIndustry",
            EntityKind::ParkIndustry => "ParkIndustry",
            EntityKind::GridIndustry => "GridIndustry",
        }
    }
}

impl fmt::Display for EntityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EntityKind {
    type Err = String;

    /// Accepts the canonical names plus the short aliases used in queries
    /// (`Park`, `Function`, `Poi`).
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "IndustrialPark" | "Park" => EntityKind::IndustrialPark,
            "Grid" => EntityKind::Grid,
            "GridDominantFunction" | "Function" => EntityKind::GridDominantFunction,
            "POI" | "Poi" => EntityKind::Poi,
            "Enterprise" => EntityKind::Enterprise,
            "EnterpriseIndustry" => EntityKind::EnterpriseIndustry,
            "ParkIndustry" => EntityKind::ParkIndustry,
            "GridIndustry" => EntityKind::GridIndustry,
            other => return Err(format!("unknown entity kind `{other}`")),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Entity {
    pub id: EntityId,
    pub kind: EntityKind,
    pub label: String,
}

impl Entity {
    pub fn new(id: impl Into<EntityId>, kind: EntityKind, label: impl Into<String>) -> Self {
        Entity {
            id: id.into(),
            kind,
            label: label.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Relation {
    LocatedIn,
    AdjacentTo,
    SimilarTo,
    RelatedTo,
    Has,
}

impl Relation {
    pub const ALL: [Relation; 5] = [
        Relation::LocatedIn,
        Relation::AdjacentTo,
        Relation::SimilarTo,
        Relation::RelatedTo,
        Relation::Has,
    ];

    pub fn is_symmetric(self) -> bool {
        matches!(
            self,
            Relation::AdjacentTo | Relation::SimilarTo | Relation::RelatedTo
        )
    }

    pub fn name(self) -> &'static str {
        match self {
            Relation::LocatedIn => "LocatedIn",
            Relation::AdjacentTo => "AdjacentTo",
            Relation::SimilarTo => "SimilarTo",
            Relation::RelatedTo => "RelatedTo",
            Relation::Has => "Has",
        }
    }
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Relation {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Relation::ALL
            .into_iter()
            .find(|r| r.name() == s)
            .ok_or_else(|| format!("unknown relation `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct RelationalTriple {
    pub head: EntityId,
    pub relation: Relation,
    pub tail: EntityId,
}

impl RelationalTriple {
    pub fn new(head: impl Into<EntityId>, relation: Relation, tail: impl Into<EntityId>) -> Self {
        RelationalTriple {
            head: head.into(),
            relation,
            tail: tail.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ValueKind {
    Number,
    Text,
    List,
}

impl fmt::Display for ValueKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ValueKind::Number => "number",
            ValueKind::Text => "text",
            ValueKind::List => "list",
        })
    }
}

/// Typed attribute value. Serialized untagged: JSON number, string or array
/// of strings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Number(f64),
    Text(String),
    List(Vec<String>),
}

impl Value {
    pub fn kind(&self) -> ValueKind {
        match self {
            Value::Number(_) => ValueKind::Number,
            Value::Text(_) => ValueKind::Text,
            Value::List(_) => ValueKind::List,
        }
    }

    pub fn as_number(&self) -> Option<f64> {
        match self {
            Value::Number(n) => Some(*n),
            _ => None,
        }
    }

    pub fn as_text(&self) -> Option<&str> {
        match self {
            Value::Text(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_list(&self) -> Option<&[String]> {
        match self {
            Value::List(l) => Some(l),
            _ => None,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Number(n) => write!(f, "{n}"),
            Value::Text(s) => f.write_str(s),
            Value::List(l) => write!(f, "[{}]", l.join(", ")),
        }
    }
}

impl From<f64> for Value {
    fn from(n: f64) -> Self {
        Value::Number(n)
    }
}

impl From<&str> for Value {
    fn from(s: &str) -> Self {
        Value::Text(s.to_string())
    }
}

impl From<String> for Value {
    fn from(s: String) -> Self {
        Value::Text(s)
    }
}

impl From<Vec<String>> for Value {
    fn from(l: Vec<String>) -> Self {
        Value::List(l)
    }
}

/// Registry entry for an attribute name.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttributeDef {
    #[serde(rename = "type")]
    pub kind: ValueKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unit: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub entity: EntityId,
    pub row: u32,
    pub col: u32,
    pub lat: f64,
    pub lon: f64,
    pub park: EntityId,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    Outgoing,
    Incoming,
    Both,
}

type Adjacency = BTreeMap<EntityId, BTreeMap<Relation, BTreeSet<EntityId>>>;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PropertyGraph {
    entities: BTreeMap<EntityId, Entity>,
    by_kind: BTreeMap<EntityKind, BTreeSet<EntityId>>,
    triples: BTreeSet<RelationalTriple>,
    outgoing: Adjacency,
    incoming: Adjacency,
    relation_counts: BTreeMap<Relation, usize>,
    attribute_defs: BTreeMap<String, AttributeDef>,
    attributes: BTreeMap<EntityId, BTreeMap<String, Value>>,
    grids: BTreeMap<EntityId, GridCell>,
    lattice: BTreeMap<(u32, u32), EntityId>,
}

/// Counts reported after a build, used for summaries and round-trip checks.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphStats {
    pub entities: usize,
    pub entities_by_kind: BTreeMap<String, usize>,
    pub triples: usize,
    pub triples_by_relation: BTreeMap<String, usize>,
    pub attributes: usize,
    pub grids: usize,
}

/// A frozen graph, shared read-only.
pub type SharedGraph = Arc<PropertyGraph>;

impl PropertyGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn freeze(self) -> SharedGraph {
        Arc::new(self)
    }

    pub fn add_entity(&mut self, entity: Entity) -> Result<EntityId, GraphError> {
        if self.entities.contains_key(&entity.id) {
            return Err(GraphError::DuplicateEntity(entity.id));
        }
        if entity.label.trim().is_empty() {
            return Err(GraphError::EmptyLabel(entity.id));
        }
        let id = entity.id.clone();
        self.by_kind
            .entry(entity.kind)
            .or_default()
            .insert(id.clone());
        self.entities.insert(id.clone(), entity);
        Ok(id)
    }

    /// Inserts the entity unless an entity with the same id exists. Returns
    /// the id either way; a kind mismatch with the existing entity is an error.
    pub fn ensure_entity(&mut self, entity: Entity) -> Result<EntityId, GraphError> {
        match self.entities.get(&entity.id) {
            Some(existing) if existing.kind == entity.kind => Ok(entity.id),
            Some(existing) => Err(GraphError::WrongKind {
                id: entity.id,
                expected: entity.kind,
                found: existing.kind,
            }),
            None => self.add_entity(entity),
        }
    }

    pub fn entity(&self, id: &EntityId) -> Option<&Entity> {
        self.entities.get(id)
    }

    pub fn contains(&self, id: &EntityId) -> bool {
        self.entities.contains_key(id)
    }

    pub fn entities(&self) -> impl Iterator<Item = &Entity> {
        self.entities.values()
    }

    pub fn entities_of_kind(&self, kind: EntityKind) -> Vec<EntityId> {
        self.by_kind
            .get(&kind)
            .map(|s| s.iter().cloned().collect())
            .unwrap_or_default()
    }

    pub fn entity_count(&self) -> usize {
        self.entities.len()
    }

    fn require(&self, id: &EntityId) -> Result<&Entity, GraphError> {
        self.entities
            .get(id)
            .ok_or_else(|| GraphError::UnknownEntity(id.clone()))
    }

    pub fn has_triple(&self, triple: &RelationalTriple) -> bool {
        self.triples.contains(triple)
    }

    /// Adds a relational triple; symmetric relations also store the reverse.
    pub fn add_relation(&mut self, triple: RelationalTriple) -> Result<(), GraphError> {
        self.require(&triple.head)?;
        self.require(&triple.tail)?;
        if triple.head == triple.tail {
            return Err(GraphError::SelfLoop(triple.head));
        }
        if self.triples.contains(&triple) {
            return Err(GraphError::DuplicateTriple(
                triple.head,
                triple.relation,
                triple.tail,
            ));
        }
        let symmetric = triple.relation.is_symmetric();
        let reverse = RelationalTriple {
            head: triple.tail.clone(),
            relation: triple.relation,
            tail: triple.head.clone(),
        };
        self.insert_directed(triple);
        if symmetric {
            self.insert_directed(reverse);
        }
        Ok(())
    }

    /// Like [`add_relation`](Self::add_relation) but a no-op when the triple
    /// is already present. Returns whether anything was inserted.
    pub fn ensure_relation(&mut self, triple: RelationalTriple) -> Result<bool, GraphError> {
        if self.triples.contains(&triple) {
            return Ok(false);
        }
        self.add_relation(triple).map(|_| true)
    }

    fn insert_directed(&mut self, triple: RelationalTriple) {
        if !self.triples.insert(triple.clone()) {
            return;
        }
        self.outgoing
            .entry(triple.head.clone())
            .or_default()
            .entry(triple.relation)
            .or_default()
            .insert(triple.tail.clone());
        self.incoming
            .entry(triple.tail.clone())
            .or_default()
            .entry(triple.relation)
            .or_default()
            .insert(triple.head.clone());
        *self.relation_counts.entry(triple.relation).or_default() += 1;
    }

    pub fn triples(&self) -> impl Iterator<Item = &RelationalTriple> {
        self.triples.iter()
    }

    pub fn triple_count(&self) -> usize {
        self.triples.len()
    }

    pub fn neighbors(
        &self,
        entity: &EntityId,
        relation: Relation,
        direction: Direction,
    ) -> Result<Vec<EntityId>, GraphError> {
        self.require(entity)?;
        let lookup = |index: &Adjacency| -> Option<BTreeSet<EntityId>> {
            index.get(entity).and_then(|m| m.get(&relation)).cloned()
        };
        let set = match direction {
            Direction::Outgoing => lookup(&self.outgoing).unwrap_or_default(),
            Direction::Incoming => lookup(&self.incoming).unwrap_or_default(),
            Direction::Both => {
                let mut s = lookup(&self.outgoing).unwrap_or_default();
                s.extend(lookup(&self.incoming).unwrap_or_default());
                s
            }
        };
        Ok(set.into_iter().collect())
    }

    /// Incoming neighbors restricted to one entity kind. Common enough
    /// ("enterprises located in park P") to deserve a helper.
    pub fn members(
        &self,
        container: &EntityId,
        kind: EntityKind,
    ) -> Result<Vec<EntityId>, GraphError> {
        Ok(self
            .neighbors(container, Relation::LocatedIn, Direction::Incoming)?
            .into_iter()
            .filter(|id| self.entities.get(id).map(|e| e.kind) == Some(kind))
            .collect())
    }

    pub fn declare_attribute(&mut self, name: &str, def: AttributeDef) -> Result<(), GraphError> {
        match self.attribute_defs.get(name) {
            Some(existing) if existing.kind != def.kind => Err(GraphError::AttributeType {
                name: name.to_string(),
                declared: existing.kind,
                got: def.kind,
            }),
            Some(_) => Ok(()),
            None => {
                self.attribute_defs.insert(name.to_string(), def);
                Ok(())
            }
        }
    }

    pub fn attribute_def(&self, name: &str) -> Option<&AttributeDef> {
        self.attribute_defs.get(name)
    }

    pub fn attribute_defs(&self) -> &BTreeMap<String, AttributeDef> {
        &self.attribute_defs
    }

    /// Sets an attribute, last write wins. The first write of an undeclared
    /// name declares it with the value's kind.
    pub fn set_attribute(
        &mut self,
        entity: &EntityId,
        name: &str,
        value: impl Into<Value>,
    ) -> Result<(), GraphError> {
        let value = value.into();
        self.require(entity)?;
        if let Value::Number(n) = value {
            if !n.is_finite() {
                return Err(GraphError::NonFinite(name.to_string()));
            }
        }
        self.declare_attribute(
            name,
            AttributeDef {
                kind: value.kind(),
                unit: None,
            },
        )?;
        self.attributes
            .entry(entity.clone())
            .or_default()
            .insert(name.to_string(), value);
        Ok(())
    }

    pub fn attribute(&self, entity: &EntityId, name: &str) -> Result<Option<&Value>, GraphError> {
        self.require(entity)?;
        Ok(self.attributes.get(entity).and_then(|m| m.get(name)))
    }

    pub fn number(&self, entity: &EntityId, name: &str) -> Option<f64> {
        self.attributes
            .get(entity)
            .and_then(|m| m.get(name))
            .and_then(Value::as_number)
    }

    pub fn text(&self, entity: &EntityId, name: &str) -> Option<&str> {
        self.attributes
            .get(entity)
            .and_then(|m| m.get(name))
            .and_then(Value::as_text)
    }

    pub fn attributes_of(&self, entity: &EntityId) -> Option<&BTreeMap<String, Value>> {
        self.attributes.get(entity)
    }

    pub fn attribute_count(&self) -> usize {
        self.attributes.values().map(BTreeMap::len).sum()
    }

    pub fn add_grid(&mut self, cell: GridCell) -> Result<(), GraphError> {
        let grid = self.require(&cell.entity)?;
        if grid.kind != EntityKind::Grid {
            return Err(GraphError::WrongKind {
                id: cell.entity.clone(),
                expected: EntityKind::Grid,
                found: grid.kind,
            });
        }
        let park = self.require(&cell.park)?;
        if park.kind != EntityKind::IndustrialPark {
            return Err(GraphError::WrongKind {
                id: cell.park.clone(),
                expected: EntityKind::IndustrialPark,
                found: park.kind,
            });
        }
        if !(-90.0..=90.0).contains(&cell.lat) || !(-180.0..=180.0).contains(&cell.lon) {
            return Err(GraphError::BadCentroid {
                lat: cell.lat,
                lon: cell.lon,
            });
        }
        if let Some(existing) = self.lattice.get(&(cell.row, cell.col)) {
            return Err(GraphError::LatticeOccupied {
                row: cell.row,
                col: cell.col,
                existing: existing.clone(),
            });
        }
        if self.grids.contains_key(&cell.entity) {
            return Err(GraphError::GridRegistered(cell.entity));
        }
        self.lattice
            .insert((cell.row, cell.col), cell.entity.clone());
        self.grids.insert(cell.entity.clone(), cell);
        Ok(())
    }

    pub fn grid_at(&self, row: u32, col: u32) -> Option<&EntityId> {
        self.lattice.get(&(row, col))
    }

    pub fn grid_cell(&self, grid: &EntityId) -> Option<&GridCell> {
        self.grids.get(grid)
    }

    pub fn grid_cells(&self) -> impl Iterator<Item = &GridCell> {
        self.grids.values()
    }

    /// Grids registered with the given park, sorted by id.
    pub fn grids_of_park(&self, park: &EntityId) -> Vec<&GridCell> {
        self.grids.values().filter(|c| &c.park == park).collect()
    }

    pub fn stats(&self) -> GraphStats {
        GraphStats {
            entities: self.entities.len(),
            entities_by_kind: self
                .by_kind
                .iter()
                .map(|(k, s)| (k.name().to_string(), s.len()))
                .collect(),
            triples: self.triples.len(),
            triples_by_relation: self
                .relation_counts
                .iter()
                .map(|(r, n)| (r.name().to_string(), *n))
                .collect(),
            attributes: self.attribute_count(),
            grids: self.grids.len(),
        }
    }
}
