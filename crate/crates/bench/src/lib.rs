//! Fixtures shared by the benchmarks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use scopekg::builder::IndicatorRegistry;
use scopekg::graph::{Entity, EntityId, EntityKind, PropertyGraph, Relation, RelationalTriple};
use scopekg::synth::{self, SynthConfig};
use scopekg::tools::Toolbox;
use scopekg::SharedGraph;

/// The default synthetic world: six parks, 480 grids.
pub fn world() -> (SharedGraph, Toolbox) {
    let (g, _, gaz) = synth::build(&SynthConfig::default()).expect("synthetic graph builds");
    let g = g.freeze();
    let tb = Toolbox::new(g.clone(), IndicatorRegistry::default()).with_gazetteer(gaz);
    (g, tb)
}

/// The synthetic world padded with bulk enterprises until it holds at least
/// `triples` triples.
pub fn padded_graph(triples: usize, seed: u64) -> PropertyGraph {
    let (mut g, _, _) = synth::build(&SynthConfig::default()).expect("synthetic graph builds");
    let parks = g.entities_of_kind(EntityKind::IndustrialPark);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut k = 0usize;
    while g.triple_count() < triples {
        let id = EntityId::new(format!("ent:bulk{k:07}"));
        g.add_entity(Entity::new(id.clone(), EntityKind::Enterprise, format!("Bulk {k}")))
            .unwrap();
        let park = parks[rng.random_range(0..parks.len())].clone();
        g.add_relation(RelationalTriple::new(id.clone(), Relation::LocatedIn, park)).unwrap();
        if k > 0 {
            let other = EntityId::new(format!("ent:bulk{:07}", rng.random_range(0..k)));
            g.ensure_relation(RelationalTriple::new(id, Relation::RelatedTo, other)).unwrap();
        }
        k += 1;
    }
    g
}

/// `m × n` matrix of criterion values in `[0, 100)`.
pub fn value_matrix(m: usize, n: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..m)
        .map(|_| (0..n).map(|_| rng.random_range(0.0..100.0)).collect())
        .collect()
}
