//! Spatial knowledge graph and tool-orchestrating tree search for
//! industrial-park planning.
//!
//! The crate is organised bottom-up:
//!
//! - [`graph`]: embedded property graph with a grid lattice and JSONL persistence
//! - [`builder`]: derives the graph from raw tables (containment, adjacency,
//!   leading industries, dominant functions, indicators, similarity edges)
//! - [`query`]: a small declarative query language over the graph
//! - [`tools`]: the six decision-support tools exposed to the planner
//! - [`policy`]: action proposers and reflection evaluators (scripted and remote)
//! - [`planner`]: Monte Carlo Tree Search over tool-action transcripts
//! - [`eval`]: diversity and recommendation metrics, benchmark generation and runs
//! - [`synth`]: seeded synthetic parks for tests and benchmarks

pub mod builder;
pub mod eval;
pub mod graph;
pub mod planner;
pub mod policy;
pub mod query;
pub mod synth;
pub mod taxonomy;
pub mod tools;

pub use graph::{
    Direction, Entity, EntityId, EntityKind, PropertyGraph, Relation, RelationalTriple,
    SharedGraph, Value,
};
