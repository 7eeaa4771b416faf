//! Seeded synthetic industrial parks.
//!
//! Parks are rectangular blocks tiled edge to edge, so neighbouring parks
//! share lattice borders and become adjacent. Each park draws POI categories
//! and enterprise industries from its own skewed profile, which keeps parks
//! distinguishable under similarity search and ranking.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::builder::{
    build_graph, BuildConfig, BuildError, BuildReport, EnterpriseRow, FunctionOverrides, GridRow,
    IndicatorRegistry, ParkRow, PoiRow, RawTables,
};
use crate::graph::PropertyGraph;
use crate::taxonomy::FunctionType;
use crate::tools::{Gazetteer, GazetteerEntry};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub seed: u64,
    /// Parks are laid out as `park_rows × park_cols` blocks.
    pub park_rows: u32,
    pub park_cols: u32,
    pub block_rows: u32,
    pub block_cols: u32,
    pub max_pois_per_grid: u32,
    pub max_enterprises_per_grid: u32,
}

impl Default for SynthConfig {
    /// Six 10×8 parks: 480 grids.
    fn default() -> Self {
        SynthConfig {
            seed: 7,
            park_rows: 2,
            park_cols: 3,
            block_rows: 10,
            block_cols: 8,
            max_pois_per_grid: 4,
            max_enterprises_per_grid: 2,
        }
    }
}

impl SynthConfig {
    pub fn park_count(&self) -> u32 {
        self.park_rows * self.park_cols
    }

    pub fn grid_count(&self) -> u32 {
        self.park_count() * self.block_rows * self.block_cols
    }
}

#[derive(Debug, Clone)]
pub struct SynthData {
    pub tables: RawTables,
    pub gazetteer: Gazetteer,
}

const INDUSTRIES: [(&str, [&str; 2]); 6] = [
    ("Manufacturing", ["Auto Parts", "Precision Machinery"]),
    ("Information Technology", ["Software", "Semiconductors"]),
    ("Biomedicine", ["Pharmaceuticals", "Medical Devices"]),
    ("Finance", ["Banking", "Fintech"]),
    ("Logistics", ["Warehousing", "Freight"]),
    ("Research Services", ["Testing", "Design"]),
];

const SCOPES: [&str; 8] = [
    "Technology Development",
    "Sales",
    "Consulting",
    "Production",
    "Import and Export",
    "Leasing",
    "Software Services",
    "Clinical Trials",
];

const STREETS: [&str; 10] = [
    "Science", "Harbor", "Maple", "Innovation", "Canal", "Orchard", "Pioneer", "Lotus", "Ridge",
    "Station",
];

pub fn park_id(index: u32) -> String {
    format!("park:{}", park_letter(index).to_ascii_lowercase())
}

fn park_letter(index: u32) -> char {
    char::from(b'A' + (index % 26) as u8)
}

pub fn grid_id(row: u32, col: u32) -> String {
    format!("grid:{row:03}_{col:03}")
}

/// Skewed weights: a few favoured entries per park, a small floor elsewhere.
fn profile(rng: &mut ChaCha8Rng, n: usize, favoured: usize) -> Vec<f64> {
    let mut w = vec![0.3; n];
    for _ in 0..favoured {
        let i = rng.random_range(0..n);
        w[i] += rng.random_range(2.0..8.0);
    }
    w
}

pub fn generate(config: &SynthConfig) -> SynthData {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let functions = FunctionType::ALL;
    let mut tables = RawTables::default();
    let mut gazetteer = Vec::new();
    let (mut poi_n, mut ent_n) = (0u32, 0u32);

    for pr in 0..config.park_rows {
        for pc in 0..config.park_cols {
            let index = pr * config.park_cols + pc;
            let pid = park_id(index);
            let poi_weights = WeightedIndex::new(profile(&mut rng, functions.len(), 3))
                .expect("positive weights");
            let ind_weights = WeightedIndex::new(profile(&mut rng, INDUSTRIES.len(), 2))
                .expect("positive weights");
            let scope_weights =
                WeightedIndex::new(profile(&mut rng, SCOPES.len(), 2)).expect("positive weights");
            let tech_rate = rng.random_range(0.1..0.7);
            let density = rng.random_range(0.4..1.0);

            let (row_min, col_min) = (pr * config.block_rows, pc * config.block_cols);
            let (row_max, col_max) = (row_min + config.block_rows - 1, col_min + config.block_cols - 1);
            let planned: Vec<String> = {
                let a = ind_weights.sample(&mut rng);
                let b = ind_weights.sample(&mut rng);
                let mut v = vec![INDUSTRIES[a].0.to_string()];
                if b != a {
                    v.push(INDUSTRIES[b].0.to_string());
                }
                v
            };
            tables.parks.push(ParkRow {
                park_id: pid.clone(),
                name: format!("Park {}", park_letter(index)),
                planned_industries: planned,
                row_min,
                row_max,
                col_min,
                col_max,
            });

            for row in row_min..=row_max {
                for col in col_min..=col_max {
                    let gid = grid_id(row, col);
                    tables.grids.push(GridRow {
                        grid_id: gid.clone(),
                        row,
                        col,
                        lat: 31.0 + f64::from(row) * 0.005,
                        lon: 121.0 + f64::from(col) * 0.005,
                        park_id: pid.clone(),
                    });
                    let pois = if rng.random_bool(density) {
                        rng.random_range(1..=config.max_pois_per_grid.max(1))
                    } else {
                        0
                    };
                    for _ in 0..pois {
                        poi_n += 1;
                        let f = functions[poi_weights.sample(&mut rng)];
                        let street = STREETS[rng.random_range(0..STREETS.len())];
                        let address = format!("No.{poi_n} {street} Rd");
                        gazetteer.push(GazetteerEntry {
                            address: address.clone(),
                            grid_id: gid.clone(),
                        });
                        tables.pois.push(PoiRow {
                            poi_id: format!("poi:{poi_n:06}"),
                            category: f.label().to_string(),
                            grid_id: gid.clone(),
                            name: format!("{} {poi_n}", f.label()),
                            address,
                        });
                    }
                    let ents = rng.random_range(0..=config.max_enterprises_per_grid);
                    for _ in 0..ents {
                        ent_n += 1;
                        let (l1, subs) = INDUSTRIES[ind_weights.sample(&mut rng)];
                        let l2 = subs[rng.random_range(0..2)];
                        let l3 = format!("{l2} {}", ["Services", "Products"][rng.random_range(0..2)]);
                        let mut scopes: Vec<String> = (0..rng.random_range(1..=3))
                            .map(|_| SCOPES[scope_weights.sample(&mut rng)].to_string())
                            .collect();
                        scopes.sort();
                        scopes.dedup();
                        let high_tech = rng.random_bool(tech_rate);
                        tables.enterprises.push(EnterpriseRow {
                            ent_id: format!("ent:{ent_n:06}"),
                            name: format!("{l2} Co. {ent_n}"),
                            primary_industry: Some(l1.to_string()),
                            secondary_industry: Some(l2.to_string()),
                            tertiary_industry: Some(l3),
                            scopes,
                            grid_id: gid.clone(),
                            attributes: [
                                ("employees".to_string(), f64::from(rng.random_range(5..500u32))),
                                (
                                    "registered_capital".to_string(),
                                    f64::from(rng.random_range(10..5000u32)),
                                ),
                                ("high_tech".to_string(), if high_tech { 1.0 } else { 0.0 }),
                                (
                                    "patents".to_string(),
                                    if high_tech { f64::from(rng.random_range(0..40u32)) } else { 0.0 },
                                ),
                            ]
                            .into(),
                        });
                    }
                }
            }
        }
    }
    SynthData {
        tables,
        gazetteer: Gazetteer::from_entries(gazetteer),
    }
}

/// Generates tables and runs the full build pipeline with the bundled
/// registry and default build settings.
pub fn build(config: &SynthConfig) -> Result<(PropertyGraph, BuildReport, Gazetteer), BuildError> {
    let data = generate(config);
    let (graph, report) = build_graph(
        &data.tables,
        &IndicatorRegistry::default(),
        None::<&FunctionOverrides>,
        &BuildConfig::default(),
    )?;
    Ok((graph, report, data.gazetteer))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::EntityKind;

    #[test]
    fn default_shape() {
        let c = SynthConfig::default();
        assert_eq!((c.park_count(), c.grid_count()), (6, 480));
        let d = generate(&c);
        assert_eq!(d.tables.parks.len(), 6);
        assert_eq!(d.tables.grids.len(), 480);
        assert!(!d.tables.pois.is_empty() && !d.tables.enterprises.is_empty());
        assert_eq!(d.gazetteer.len(), d.tables.pois.len());
    }

    #[test]
    fn seeded() {
        let c = SynthConfig::default();
        let a = generate(&c).tables;
        assert_eq!(a, generate(&c).tables);
        let other = SynthConfig { seed: 8, ..c };
        assert_ne!(a, generate(&other).tables);
    }

    #[test]
    fn builds_with_adjacent_parks() {
        let c = SynthConfig {
            block_rows: 4,
            block_cols: 4,
            ..SynthConfig::default()
        };
        let (g, _, _) = build(&c).unwrap();
        let parks = g.entities_of_kind(EntityKind::IndustrialPark);
        assert_eq!(parks.len(), 6);
        for p in &parks {
            let n = g
                .neighbors(p, crate::graph::Relation::AdjacentTo, crate::graph::Direction::Both)
                .unwrap();
            assert!(!n.is_empty(), "{p} has no adjacent park");
        }
    }
}
