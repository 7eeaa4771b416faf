//! Query language properties: print/parse round trips, agreement with a
//! brute-force evaluator, limit and conjunct monotonicity, golden corpus.

use std::collections::BTreeSet;

use proptest::prelude::*;
use scopekg::graph::PropertyGraph;
use scopekg::query::{eval, parse, Cell, Property, Returns};

#[path = "support/query_oracle.rs"]
mod query_oracle;
use query_oracle::{any_query, build, fixture, oracle, typed_query, Fixture};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn print_parse_round_trip(q in any_query()) {
        let printed = q.to_string();
        let reparsed = parse(&printed).unwrap_or_else(|e| panic!("{printed}: {e}"));
        prop_assert_eq!(&reparsed, &q);
        prop_assert_eq!(reparsed.to_string(), printed);
    }

    #[test]
    fn eval_matches_brute_force(f in fixture(), q in typed_query()) {
        let g = build(&f);
        let table = eval(&q, &g).unwrap();
        let (expected, total) = oracle(&g, &q);
        prop_assert_eq!(table.total, total);
        match q.returns {
            Returns::Count => prop_assert_eq!(&table.rows, &vec![vec![Cell::Number(total as f64)]]),
            Returns::Projections(_) => {
                prop_assert_eq!(&table.entities, &expected);
                prop_assert_eq!(table.rows.len(), expected.len());
                for (row, id) in table.rows.iter().zip(&expected) {
                    prop_assert_eq!(&row[0], &Cell::Text(id.as_str().to_string()));
                }
            }
        }
    }

    #[test]
    fn limit_never_grows_and_conjuncts_only_shrink(f in fixture(), q in typed_query()) {
        let g = build(&f);
        let mut unlimited = q.clone();
        unlimited.limit = None;
        unlimited.returns = Returns::Projections(vec![Property::new("p", "id")]);
        let full = eval(&unlimited, &g).unwrap();
        if let Some(n) = q.limit {
            let mut limited = unlimited.clone();
            limited.limit = Some(n);
            let l = eval(&limited, &g).unwrap();
            prop_assert!(l.rows.len() <= full.rows.len());
            prop_assert!(l.rows.len() as u64 <= n);
        }
        if !unlimited.predicates.is_empty() {
            let mut relaxed = unlimited.clone();
            relaxed.predicates.pop();
            let r = eval(&relaxed, &g).unwrap();
            let wide: BTreeSet<_> = r.entities.iter().collect();
            prop_assert!(full.entities.iter().all(|e| wide.contains(e)));
        }
    }
}

// ---------- golden corpus ----------

#[derive(serde::Deserialize)]
struct Case {
    query: String,
    #[serde(default)]
    rows: Option<Vec<Vec<Cell>>>,
    #[serde(default)]
    total: Option<usize>,
    #[serde(default)]
    error: Option<String>,
}

fn corpus_graph() -> PropertyGraph {
    build(&Fixture {
        parks: vec![
            (Some(50.0), Some("AI".into()), vec!["x".into()]),
            (Some(120.0), Some("Bio".into()), vec![]),
            (Some(300.0), Some("AI Bio".into()), vec!["x".into(), "y".into()]),
            (None, None, vec![]),
        ],
        adjacency: vec![(0, 1), (1, 2)],
        enterprises: vec![(0, Some(3.0)), (2, Some(1.0)), (2, None)],
    })
}

#[test]
fn golden_corpus() {
    let text = include_str!("data/query_corpus.json");
    let cases: Vec<Case> = serde_json::from_str(text).unwrap();
    assert!(cases.len() >= 10);
    let g = corpus_graph();
    for case in cases {
        let result = parse(&case.query).and_then(|q| eval(&q, &g));
        match (result, &case.error) {
            (Ok(t), None) => {
                assert_eq!(Some(&t.rows), case.rows.as_ref(), "{}", case.query);
                assert_eq!(Some(t.total), case.total, "{}", case.query);
            }
            (Err(e), Some(fragment)) => {
                assert!(e.to_string().contains(fragment.as_str()), "{}: {e}", case.query)
            }
            (other, _) => panic!("{}: unexpected {other:?}", case.query),
        }
    }
}
