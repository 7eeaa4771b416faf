//! Address gazetteer backing geo-encoding and geo-decoding.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::builder::attr;
use crate::graph::{EntityId, EntityKind, PropertyGraph, Relation, Direction};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GazetteerEntry {
    pub address: String,
    pub grid_id: String,
}

/// Address lookup table. The first address listed for a grid is its
/// canonical address.
#[derive(Debug, Clone, Default)]
pub struct Gazetteer {
    entries: Vec<GazetteerEntry>,
    exact: BTreeMap<String, usize>,
    normalized: BTreeMap<String, usize>,
    canonical: BTreeMap<EntityId, usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Lookup<'a> {
    Exact(&'a GazetteerEntry),
    Normalized(&'a GazetteerEntry),
    Missing { suggestions: Vec<&'a GazetteerEntry> },
}

/// Case-folds and collapses runs of whitespace.
pub fn normalize(address: &str) -> String {
    address
        .split_whitespace()
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join(" ")
}

impl Gazetteer {
    pub fn from_entries(entries: impl IntoIterator<Item = GazetteerEntry>) -> Self {
        let mut g = Gazetteer::default();
        for e in entries {
            let idx = g.entries.len();
            g.exact.entry(e.address.clone()).or_insert(idx);
            g.normalized.entry(normalize(&e.address)).or_insert(idx);
            g.canonical.entry(EntityId::new(e.grid_id.clone())).or_insert(idx);
            g.entries.push(e);
        }
        g
    }

    /// Reads a CSV with `address,grid_id` columns.
    pub fn from_csv(path: impl AsRef<Path>) -> Result<Self, String> {
        let path = path.as_ref();
        let mut reader = csv::Reader::from_path(path).map_err(|e| format!("{}: {e}", path.display()))?;
        let mut rows = Vec::new();
        for (i, rec) in reader.deserialize().enumerate() {
            rows.push(rec.map_err(|e| format!("{}:{}: {e}", path.display(), i + 2))?);
        }
        Ok(Gazetteer::from_entries(rows))
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<(), String> {
        let path = path.as_ref();
        let mut w = csv::Writer::from_path(path).map_err(|e| format!("{}: {e}", path.display()))?;
        for e in &self.entries {
            w.serialize(e).map_err(|e| e.to_string())?;
        }
        w.flush().map_err(|e| e.to_string())
    }

    /// Addresses of POIs in the graph, each mapped to the POI's grid.
    pub fn from_graph(graph: &PropertyGraph) -> Self {
        let mut entries = Vec::new();
        for poi in graph.entities_of_kind(EntityKind::Poi) {
            let Some(address) = graph.text(&poi, attr::ADDRESS) else {
                continue;
            };
            if address.trim().is_empty() {
                continue;
            }
            let grid = graph
                .neighbors(&poi, Relation::LocatedIn, Direction::Outgoing)
                .unwrap_or_default()
                .into_iter()
                .find(|t| graph.entity(t).map(|e| e.kind) == Some(EntityKind::Grid));
            if let Some(grid) = grid {
                entries.push(GazetteerEntry {
                    address: address.to_string(),
                    grid_id: grid.as_str().to_string(),
                });
            }
        }
        Gazetteer::from_entries(entries)
    }

    pub fn entries(&self) -> &[GazetteerEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn lookup(&self, address: &str) -> Lookup<'_> {
        if let Some(&i) = self.exact.get(address) {
            return Lookup::Exact(&self.entries[i]);
        }
        let key = normalize(address);
        if let Some(&i) = self.normalized.get(&key) {
            return Lookup::Normalized(&self.entries[i]);
        }
        let mut scored: Vec<(usize, usize)> = self
            .normalized
            .iter()
            .map(|(k, &i)| (strsim::levenshtein(&key, k), i))
            .collect();
        scored.sort();
        Lookup::Missing {
            suggestions: scored.into_iter().take(3).map(|(_, i)| &self.entries[i]).collect(),
        }
    }

    pub fn canonical_address(&self, grid: &EntityId) -> Option<&str> {
        self.canonical.get(grid).map(|&i| self.entries[i].address.as_str())
    }
}
