use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use proptest::prelude::*;
use scopekg::builder::{build_graph, BuildConfig, GridRow, IndicatorRegistry, ParkRow, PoiRow, RawTables};
use scopekg::graph::{Entity, EntityId, EntityKind, PropertyGraph, Value};
use scopekg::tools::*;

fn park(id: &str, name: &str, planned: &[&str], rows: (u32, u32), cols: (u32, u32)) -> ParkRow {
    ParkRow {
        park_id: id.into(),
        name: name.into(),
        planned_industries: planned.iter().map(|s| s.to_string()).collect(),
        row_min: rows.0,
        row_max: rows.1,
        col_min: cols.0,
        col_max: cols.1,
    }
}

fn grids(park: &str, rows: std::ops::RangeInclusive<u32>, cols: std::ops::RangeInclusive<u32>) -> Vec<GridRow> {
    let mut out = Vec::new();
    for r in rows {
        for c in cols.clone() {
            out.push(GridRow {
                grid_id: format!("g_{r:02}_{c:02}"),
                row: r,
                col: c,
                lat: 0.0,
                lon: 0.0,
                park_id: park.into(),
            });
        }
    }
    out
}

/// One 3×3 park, every grid holding a Green Space POI, one addressed POI.
fn green_park() -> Toolbox {
    let grids = grids("park:g", 0..=2, 0..=2);
    let pois = grids
        .iter()
        .enumerate()
        .map(|(i, g)| PoiRow {
            poi_id: format!("poi:{i}"),
            category: "Green Space".into(),
            grid_id: g.grid_id.clone(),
            name: format!("Lawn {i}"),
            address: if i == 4 { "No.1 Science Rd".into() } else { String::new() },
        })
        .collect();
    let tables = RawTables {
        parks: vec![park("park:g", "Greenfield", &["AI"], (0, 2), (0, 2))],
        grids,
        pois,
        enterprises: vec![],
    };
    let (g, _) = build_graph(&tables, &IndicatorRegistry::default(), None, &BuildConfig::default()).unwrap();
    Toolbox::new(g.freeze(), IndicatorRegistry::default())
}

fn five_parks() -> Toolbox {
    let specs: [(&str, &str, &[&str]); 5] = [
        ("park:a", "Alpha", &["Biotech", "AI"]),
        ("park:b", "Beta", &["Logistics"]),
        ("park:c", "Gamma", &["AI", "Semiconductors"]),
        ("park:d", "Delta", &["Finance", "AI"]),
        ("park:e", "Epsilon", &["Biotech", "Pharmaceuticals", "Logistics"]),
    ];
    let mut tables = RawTables::default();
    for (i, (id, name, planned)) in specs.iter().enumerate() {
        let c = i as u32 * 2;
        tables.parks.push(park(id, name, planned, (0, 1), (c, c + 1)));
        tables.grids.extend(grids(id, 0..=1, c..=c + 1));
    }
    let (g, _) = build_graph(&tables, &IndicatorRegistry::default(), None, &BuildConfig::default()).unwrap();
    Toolbox::new(g.freeze(), IndicatorRegistry::default())
}

// ---------- structured_query ----------

#[test]
fn structured_query_in_band() {
    let tb = five_parks();
    let ok = tb.invoke(&ToolInvocation::new(STRUCTURED_QUERY).arg(
        "query",
        "MATCH (p:Park) WHERE (p)-[:AdjacentTo]-(:Park) RETURN p.id, p.name",
    ));
    assert!(ok.success, "{:?}", ok.error);
    assert_eq!(ok.result_count, Some(5));
    assert_eq!(ok.payload["columns"], serde_json::json!(["p.id", "p.name"]));

    let bad = tb.invoke(&ToolInvocation::new(STRUCTURED_QUERY).arg("query", "MATCH (p:"));
    assert!(!bad.success);
    assert!(bad.error.unwrap().contains("syntax error"));

    let empty = tb.invoke(
        &ToolInvocation::new(STRUCTURED_QUERY).arg("query", "MATCH (p:Park) WHERE p.id = \"nope\" RETURN p.id"),
    );
    assert!(empty.success);
    assert_eq!(empty.result_count, Some(0));
}

#[test]
fn invalid_invocations_fail_in_band() {
    let tb = five_parks();
    for inv in [
        ToolInvocation::new("teleport"),
        ToolInvocation::new(STRUCTURED_QUERY),
        ToolInvocation::new(STRUCTURED_QUERY).arg("query", 5),
        ToolInvocation::new(GEO_DECODE).arg("grid", "g_00_00").arg("zoom", 3),
        ToolInvocation::new(SIMILARITY_SEARCH).arg("park", "park:a").arg("description", "x"),
        ToolInvocation::new(RANK_MASTER)
            .arg("candidates", vec!["park:a"])
            .arg("criteria", vec!["num_grids:sideways"]),
        ToolInvocation::new(RANK_MASTER)
            .arg("candidates", vec!["park:a"])
            .arg("criteria", vec!["no_such_indicator"]),
    ] {
        let o = tb.invoke(&inv);
        assert!(!o.success, "{inv:?}");
        assert!(!o.error.as_deref().unwrap_or("").is_empty());
    }
}

#[test]
fn summaries_respect_the_cap() {
    let tb = five_parks().with_summary_cap(40);
    let o = tb.invoke(&ToolInvocation::new(STRUCTURED_QUERY).arg("query", "MATCH (g:Grid) RETURN g.id"));
    assert!(o.success);
    assert!(o.summary.chars().count() <= 40);
    assert_eq!(o.payload["rows"].as_array().unwrap().len(), 20);
}

// ---------- similarity_search ----------

#[test]
fn park_mode_ranks_itself_first() {
    let tb = five_parks();
    // give the parks distinguishable indicators
    let mut g = tb.graph().clone();
    for (i, p) in ["park:a", "park:b", "park:c", "park:d", "park:e"].iter().enumerate() {
        g.set_attribute(&(*p).into(), "num_enterprises", Value::Number((i * i) as f64))
            .unwrap();
        g.set_attribute(&(*p).into(), "patents", Value::Number(((5 - i) * 3) as f64))
            .unwrap();
    }
    let tb = Toolbox::new(g.freeze(), IndicatorRegistry::default());
    let o = tb.similarity_search(&SimilarityQuery::Park("park:c".into()), 5);
    assert!(o.success, "{:?}", o.error);
    let results = o.payload["results"].as_array().unwrap();
    assert_eq!(results.len(), 5);
    assert_eq!(results[0]["park"], "park:c");
    assert!((results[0]["score"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    let scores: Vec<f64> = results.iter().map(|r| r["score"].as_f64().unwrap()).collect();
    assert!(scores.windows(2).all(|w| w[0] >= w[1]));

    let unknown = tb.similarity_search(&SimilarityQuery::Park("park:zz".into()), 3);
    assert!(!unknown.success);
}

fn bag(text: &str) -> HashMap<String, f64> {
    let mut m = HashMap::new();
    for t in text.split(|c: char| !c.is_alphanumeric()).filter(|t| !t.is_empty()) {
        *m.entry(t.to_lowercase()).or_insert(0.0) += 1.0;
    }
    m
}

fn bag_cosine(a: &HashMap<String, f64>, b: &HashMap<String, f64>) -> f64 {
    let dot: f64 = a.iter().map(|(k, v)| v * b.get(k).copied().unwrap_or(0.0)).sum();
    let na = a.values().map(|v| v * v).sum::<f64>().sqrt();
    let nb = b.values().map(|v| v * v).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

#[test]
fn description_mode_matches_bag_of_words_oracle() {
    let tb = five_parks();
    let description = "AI and biotech research campus with pharmaceuticals";
    let o = tb.similarity_search(&SimilarityQuery::Description(description.into()), 5);
    assert!(o.success, "{:?}", o.error);

    let q = bag(description);
    let mut expected: Vec<(String, f64)> = tb
        .graph()
        .entities_of_kind(EntityKind::IndustrialPark)
        .into_iter()
        .map(|p| {
            let name = &tb.graph().entity(&p).unwrap().label;
            let planned = tb.graph().attribute(&p, "planned_industries").unwrap().unwrap();
            let text = format!("{name} {}", planned.as_list().unwrap().join(" "));
            (p.to_string(), bag_cosine(&q, &bag(&text)))
        })
        .collect();
    expected.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));

    let got: Vec<(String, f64)> = o.payload["results"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| (r["park"].as_str().unwrap().to_string(), r["score"].as_f64().unwrap()))
        .collect();
    assert_eq!(got.len(), expected.len());
    for ((gp, gs), (ep, es)) in got.iter().zip(&expected) {
        assert_eq!(gp, ep);
        assert!((gs - es).abs() < 1e-9, "{gp}: {gs} vs {es}");
    }
}

struct Broken;
impl EmbeddingProvider for Broken {
    fn name(&self) -> &str {
        "broken"
    }
    fn embed(&self, _: &[String]) -> Result<Vec<Vec<f64>>, EmbedError> {
        Err(EmbedError::Transport("connection refused".into()))
    }
}

#[test]
fn provider_failure_is_in_band() {
    let tb = five_parks().with_embedder(Arc::new(Broken));
    let o = tb.invoke(&ToolInvocation::new(SIMILARITY_SEARCH).arg("description", "AI"));
    assert!(!o.success);
    assert!(o.error.unwrap().contains("connection refused"));
}

// ---------- geo ----------

#[test]
fn geo_encode_decode() {
    let tb = green_park();
    let enc = tb.geo_encode("No.1 Science Rd");
    assert!(enc.success);
    assert_eq!(enc.payload["grid"], "g_01_01");
    let norm = tb.geo_encode("  no.1  SCIENCE rd ");
    assert_eq!(norm.payload["grid"], "g_01_01");
    assert_eq!(norm.payload["match"], "normalized");
    let miss = tb.geo_encode("Nonexistent Ave");
    assert!(!miss.success);
    assert!(miss.error.unwrap().contains("No.1 Science Rd"));

    let dec = tb.geo_decode(&"g_01_01".into());
    assert_eq!(dec.payload["address"], "No.1 Science Rd");
    let synth = tb.geo_decode(&"g_00_02".into());
    assert_eq!(synth.payload["address"], "Park Greenfield, cell (0,2)");
    assert!(!tb.geo_decode(&"g_99_99".into()).success);
}

#[test]
fn decode_inverts_encode_on_canonical_addresses() {
    let cfg = scopekg::synth::SynthConfig {
        block_rows: 4,
        block_cols: 4,
        ..Default::default()
    };
    let (g, _, gaz) = scopekg::synth::build(&cfg).unwrap();
    let tb = Toolbox::new(g.freeze(), IndicatorRegistry::default()).with_gazetteer(gaz.clone());
    let mut checked = 0;
    for e in gaz.entries() {
        let grid = EntityId::new(e.grid_id.clone());
        if gaz.canonical_address(&grid) != Some(e.address.as_str()) {
            continue;
        }
        let enc = tb.geo_encode(&e.address);
        let id: EntityId = enc.payload["grid"].as_str().unwrap().into();
        assert_eq!(tb.geo_decode(&id).payload["address"], e.address.as_str());
        checked += 1;
    }
    assert!(checked > 10);
}

// ---------- function_planner ----------

#[test]
fn planner_context_neighbors() {
    let tb = green_park();
    let centre = tb.function_planner(&"g_01_01".into());
    assert!(centre.success);
    assert_eq!(centre.payload["neighbors"].as_array().unwrap().len(), 8);
    assert_eq!(centre.payload["neighbor_functions"], serde_json::json!({"Green Space": 8}));
    assert_eq!(centre.payload["target"]["dominant_function"], "Green Space");

    let corner = tb.function_planner(&"g_00_00".into());
    let ids: Vec<&str> = corner.payload["neighbors"]
        .as_array()
        .unwrap()
        .iter()
        .map(|n| n["grid"].as_str().unwrap())
        .collect();
    assert_eq!(ids, vec!["g_00_01", "g_01_00", "g_01_01"]);
    assert!(!tb.function_planner(&"g_42_42".into()).success);
}

// ---------- rank_master ----------

/// Independent rank: 1 + (#strictly better) + (#equal others)/2.
fn oracle_scores(values: &[Vec<f64>], lower: &[bool]) -> Vec<f64> {
    let m = values.len();
    (0..m)
        .map(|i| {
            (0..lower.len())
                .map(|j| {
                    let better = (0..m)
                        .filter(|&k| {
                            if lower[j] {
                                values[k][j] < values[i][j]
                            } else {
                                values[k][j] > values[i][j]
                            }
                        })
                        .count() as f64;
                    let equal = (0..m).filter(|&k| k != i && values[k][j] == values[i][j]).count() as f64;
                    m as f64 - (1.0 + better + equal / 2.0)
                })
                .sum()
        })
        .collect()
}

fn instance() -> impl Strategy<Value = (Vec<Vec<f64>>, Vec<bool>)> {
    (1usize..=8, 1usize..=5).prop_flat_map(|(m, n)| {
        (
            proptest::collection::vec(proptest::collection::vec(0u8..6, n).prop_map(|r| r.into_iter().map(f64::from).collect()), m),
            proptest::collection::vec(any::<bool>(), n),
        )
    })
}

fn criteria(lower: &[bool]) -> Vec<Criterion> {
    lower
        .iter()
        .enumerate()
        .map(|(j, &l)| if l { Criterion::lower(format!("c{j}")) } else { Criterion::higher(format!("c{j}")) })
        .collect()
}

fn ids(m: usize) -> Vec<EntityId> {
    (0..m).map(|i| EntityId::new(format!("s{i}"))).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn borda_equals_oracle((values, lower) in instance()) {
        let r = borda_rank(&ids(values.len()), &values, &criteria(&lower)).unwrap();
        prop_assert_eq!(&r.scores, &oracle_scores(&values, &lower));
        let m = values.len() as f64;
        let n = lower.len() as f64;
        // mean ranks keep the total even with ties
        prop_assert_eq!(r.scores.iter().sum::<f64>(), n * m * (m - 1.0) / 2.0);
        for j in 0..lower.len() {
            let mut col: Vec<f64> = r.ranks.iter().map(|row| row[j]).collect();
            col.sort_by(f64::total_cmp);
            prop_assert_eq!(col.iter().sum::<f64>(), m * (m + 1.0) / 2.0);
        }
    }

    #[test]
    fn strictly_increasing_transform_keeps_scores((values, lower) in instance(), j in 0usize..5) {
        let j = j % lower.len();
        let base = borda_rank(&ids(values.len()), &values, &criteria(&lower)).unwrap();
        let warped: Vec<Vec<f64>> = values
            .iter()
            .map(|row| {
                let mut row = row.clone();
                row[j] = (row[j] * 0.7).exp() + 3.0 * row[j];
                row
            })
            .collect();
        let after = borda_rank(&ids(values.len()), &warped, &criteria(&lower)).unwrap();
        prop_assert_eq!(base.scores, after.scores);
    }

    #[test]
    fn ordering_is_score_desc_then_id((values, lower) in instance()) {
        let r = borda_rank(&ids(values.len()), &values, &criteria(&lower)).unwrap();
        for w in r.ordering.windows(2) {
            let (a, b) = (r.score_of(&w[0]).unwrap(), r.score_of(&w[1]).unwrap());
            prop_assert!(a > b || (a == b && w[0] < w[1]));
        }
    }
}

#[test]
fn rank_master_excludes_missing_values() {
    let mut g = PropertyGraph::new();
    for (id, x, y) in [("a", Some(3.0), Some(1.0)), ("b", Some(5.0), None), ("c", Some(1.0), Some(9.0))] {
        g.add_entity(Entity::new(id, EntityKind::IndustrialPark, id)).unwrap();
        if let Some(x) = x {
            g.set_attribute(&id.into(), "x", Value::Number(x)).unwrap();
        }
        if let Some(y) = y {
            g.set_attribute(&id.into(), "y", Value::Number(y)).unwrap();
        }
    }
    let tb = Toolbox::new(g.freeze(), IndicatorRegistry { indicators: vec![] });
    let o = tb.invoke(
        &ToolInvocation::new(RANK_MASTER)
            .arg("candidates", vec!["a", "b", "c", "ghost"])
            .arg("criteria", vec!["x", "y:lower"]),
    );
    assert!(o.success, "{:?}", o.error);
    let r: RankedRecommendation = serde_json::from_value(o.payload).unwrap();
    assert_eq!(r.candidates, vec![EntityId::new("a"), EntityId::new("c")]);
    assert_eq!(r.scores, vec![2.0, 0.0]);
    let excluded: BTreeMap<String, String> =
        r.excluded.into_iter().map(|e| (e.candidate.to_string(), e.reason)).collect();
    assert_eq!(excluded["b"], "missing y");
    assert_eq!(excluded["ghost"], "unknown entity");

    let none = tb.rank_master(&["b".into()], &[Criterion::higher("y")]);
    assert!(!none.success);
}
