//! Line-delimited JSON persistence.
//!
//! The first line is a header `{"schema": "scopekg/1", "attributes": {...}}`
//! carrying the attribute registry. Every following line is one record tagged
//! by `"record"`: `entity`, `grid`, `rel` or `attr`. Symmetric relations are
//! written once (head < tail) and re-expanded on load.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{
    AttributeDef, Entity, EntityId, EntityKind, GraphError, GridCell, PropertyGraph, Relation,
    RelationalTriple, Value,
};

pub const SCHEMA_VERSION: &str = "scopekg/1";

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("schema mismatch: expected `{expected}`, found `{found}`")]
    Schema { expected: String, found: String },
    #[error("line {line}: malformed record: {message}")]
    Malformed { line: usize, message: String },
    #[error("line {line}: {source}")]
    Integrity { line: usize, source: GraphError },
}

#[derive(Serialize, Deserialize)]
struct Header {
    schema: String,
    #[serde(default)]
    attributes: BTreeMap<String, AttributeDef>,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "lowercase")]
enum Record {
    Entity {
        id: EntityId,
        kind: EntityKind,
        label: String,
    },
    Grid {
        entity: EntityId,
        row: u32,
        col: u32,
        lat: f64,
        lon: f64,
        park: EntityId,
    },
    Rel {
        head: EntityId,
        relation: Relation,
        tail: EntityId,
    },
    Attr {
        entity: EntityId,
        attribute: String,
        value: Value,
    },
}

impl PropertyGraph {
    pub fn save(&self, path: impl AsRef<Path>) -> io::Result<()> {
        let mut out = BufWriter::new(File::create(path)?);
        self.write_to(&mut out)?;
        out.flush()
    }

    pub fn write_to(&self, out: &mut impl Write) -> io::Result<()> {
        let header = Header {
            schema: SCHEMA_VERSION.to_string(),
            attributes: self.attribute_defs.clone(),
        };
        write_line(out, &header)?;
        for e in self.entities.values() {
            write_line(
                out,
                &Record::Entity {
                    id: e.id.clone(),
                    kind: e.kind,
                    label: e.label.clone(),
                },
            )?;
        }
        for c in self.grids.values() {
            write_line(
                out,
                &Record::Grid {
                    entity: c.entity.clone(),
                    row: c.row,
                    col: c.col,
                    lat: c.lat,
                    lon: c.lon,
                    park: c.park.clone(),
                },
            )?;
        }
        for t in &self.triples {
            if t.relation.is_symmetric() && t.head > t.tail {
                continue;
            }
            write_line(
                out,
                &Record::Rel {
                    head: t.head.clone(),
                    relation: t.relation,
                    tail: t.tail.clone(),
                },
            )?;
        }
        for (entity, attrs) in &self.attributes {
            for (name, value) in attrs {
                write_line(
                    out,
                    &Record::Attr {
                        entity: entity.clone(),
                        attribute: name.clone(),
                        value: value.clone(),
                    },
                )?;
            }
        }
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<PropertyGraph, LoadError> {
        Self::read_from(BufReader::new(File::open(path)?))
    }

    pub fn read_from(reader: impl BufRead) -> Result<PropertyGraph, LoadError> {
        let mut graph = PropertyGraph::new();
        let mut seen_header = false;
        for (idx, line) in reader.lines().enumerate() {
            let line_no = idx + 1;
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            if !seen_header {
                let header: Header =
                    serde_json::from_str(&line).map_err(|e| LoadError::Malformed {
                        line: line_no,
                        message: format!("expected schema header: {e}"),
                    })?;
                if header.schema != SCHEMA_VERSION {
                    return Err(LoadError::Schema {
                        expected: SCHEMA_VERSION.to_string(),
                        found: header.schema,
                    });
                }
                for (name, def) in header.attributes {
                    graph
                        .declare_attribute(&name, def)
                        .map_err(|source| LoadError::Integrity { line: line_no, source })?;
                }
                seen_header = true;
                continue;
            }
            let record: Record =
                serde_json::from_str(&line).map_err(|e| LoadError::Malformed {
                    line: line_no,
                    message: e.to_string(),
                })?;
            graph
                .apply(record)
                .map_err(|source| LoadError::Integrity { line: line_no, source })?;
        }
        Ok(graph)
    }

    fn apply(&mut self, record: Record) -> Result<(), GraphError> {
        match record {
            Record::Entity { id, kind, label } => self.add_entity(Entity { id, kind, label }).map(drop),
            Record::Grid {
                entity,
                row,
                col,
                lat,
                lon,
                park,
            } => self.add_grid(GridCell {
                entity,
                row,
                col,
                lat,
                lon,
                park,
            }),
            Record::Rel {
                head,
                relation,
                tail,
            } => self.add_relation(RelationalTriple {
                head,
                relation,
                tail,
            }),
            Record::Attr {
                entity,
                attribute,
                value,
            } => self.set_attribute(&entity, &attribute, value),
        }
    }
}

fn write_line(out: &mut impl Write, value: &impl Serialize) -> io::Result<()> {
    serde_json::to_writer(&mut *out, value)?;
    out.write_all(b"\n")
}
