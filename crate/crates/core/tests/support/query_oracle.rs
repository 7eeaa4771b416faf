//! Random query and graph generators plus a brute-force evaluator, shared by
//! the query property tests and the acceptance suite.

#![allow(dead_code)]

use std::cmp::Ordering;

use proptest::prelude::*;
use scopekg::graph::{Direction, Entity, EntityId, EntityKind, PropertyGraph, Relation, RelationalTriple, Value};
use scopekg::query::{CmpOp, Comparison, Literal, OrderBy, Predicate, Property, Query, Returns, SortOrder};

// ---------- generators ----------

pub fn ident() -> impl Strategy<Value = String> {
    prop_oneof![
        "[a-z][a-z0-9_]{0,6}",
        Just("gross output".to_string()),
        Just("match".to_string()),
        Just("Order".to_string()),
        Just("x-y".to_string()),
    ]
}

pub fn literal() -> impl Strategy<Value = Literal> {
    prop_oneof![
        (-1e6f64..1e6).prop_map(Literal::Number),
        (0u32..1000).prop_map(|n| Literal::Number(n as f64)),
        "[ -~]{0,8}".prop_map(Literal::Text),
        Just(Literal::Text("quote\" back\\slash".into())),
    ]
}

pub fn op() -> impl Strategy<Value = CmpOp> {
    prop_oneof![
        Just(CmpOp::Eq),
        Just(CmpOp::Lt),
        Just(CmpOp::Gt),
        Just(CmpOp::Le),
        Just(CmpOp::Ge),
        Just(CmpOp::Contains),
    ]
}

pub fn direction() -> impl Strategy<Value = Direction> {
    prop_oneof![
        Just(Direction::Outgoing),
        Just(Direction::Incoming),
        Just(Direction::Both)
    ]
}

/// Syntactically valid queries with arbitrary (possibly unregistered) names.
pub fn any_query() -> impl Strategy<Value = Query> {
    (ident(), ident()).prop_flat_map(|(binding, kind)| {
        let b = binding.clone();
        let compare = (ident(), op(), literal()).prop_map(move |(attr, op, value)| Comparison {
            property: Property::new(b.clone(), attr),
            op,
            value,
        });
        let b2 = binding.clone();
        let related = (
            ident(),
            direction(),
            proptest::option::of(ident()),
            ident(),
            proptest::option::of((ident(), op(), literal())),
        )
            .prop_filter("inner binding must differ", move |(_, _, inner, _, _)| {
                inner.as_deref() != Some(b2.as_str())
            })
            .prop_map(|(relation, direction, inner, kind, filter)| {
                let filter = match (&inner, filter) {
                    (Some(name), Some((attr, op, value))) => Some(Comparison {
                        property: Property::new(name.clone(), attr),
                        op,
                        value,
                    }),
                    _ => None,
                };
                Predicate::Related {
                    relation,
                    direction,
                    binding: inner,
                    kind,
                    filter,
                }
            });
        let predicate = prop_oneof![compare.prop_map(Predicate::Compare), related];
        let b3 = binding.clone();
        let returns = prop_oneof![
            Just(Returns::Count),
            proptest::collection::vec(ident(), 1..4).prop_map(move |attrs| Returns::Projections(
                attrs.into_iter().map(|a| Property::new(b3.clone(), a)).collect()
            )),
        ];
        let b4 = binding.clone();
        let order = proptest::option::of((ident(), any::<bool>()).prop_map(move |(a, desc)| {
            OrderBy {
                property: Property::new(b4.clone(), a),
                order: if desc { SortOrder::Desc } else { SortOrder::Asc },
            }
        }));
        (
            Just(binding),
            Just(kind),
            proptest::collection::vec(predicate, 0..4),
            returns,
            order,
            proptest::option::of(1u64..50),
        )
            .prop_map(|(binding, kind, predicates, returns, order_by, limit)| Query {
                binding,
                kind,
                predicates,
                returns,
                order_by,
                limit,
            })
    })
}

#[derive(Debug, Clone)]
pub struct Fixture {
    pub parks: Vec<(Option<f64>, Option<String>, Vec<String>)>,
    pub adjacency: Vec<(usize, usize)>,
    pub enterprises: Vec<(usize, Option<f64>)>,
}

pub fn fixture() -> impl Strategy<Value = Fixture> {
    let park = (
        proptest::option::of((0u8..6).prop_map(|v| v as f64 * 10.0)),
        proptest::option::of(prop_oneof![Just("AI".to_string()), Just("Bio".to_string()), Just("AI Bio".to_string())]),
        proptest::collection::vec(prop_oneof![Just("x".to_string()), Just("y".to_string())], 0..3),
    );
    proptest::collection::vec(park, 1..8).prop_flat_map(|parks| {
        let n = parks.len();
        (
            Just(parks),
            proptest::collection::vec((0..n, 0..n), 0..10),
            proptest::collection::vec((0..n, proptest::option::of(0u8..4).prop_map(|o| o.map(f64::from))), 0..12),
        )
            .prop_map(|(parks, adjacency, enterprises)| Fixture {
                parks,
                adjacency,
                enterprises,
            })
    })
}

pub fn park_id(i: usize) -> EntityId {
    EntityId::new(format!("park:{i}"))
}

pub fn build(f: &Fixture) -> PropertyGraph {
    let mut g = PropertyGraph::new();
    for name in ["gdp", "sector", "tags", "staff"] {
        let kind = match name {
            "gdp" | "staff" => scopekg::graph::ValueKind::Number,
            "sector" => scopekg::graph::ValueKind::Text,
            _ => scopekg::graph::ValueKind::List,
        };
        g.declare_attribute(name, scopekg::graph::AttributeDef { kind, unit: None })
            .unwrap();
    }
    for (i, (gdp, sector, tags)) in f.parks.iter().enumerate() {
        let id = park_id(i);
        g.add_entity(Entity::new(id.clone(), EntityKind::IndustrialPark, format!("Park {i}")))
            .unwrap();
        if let Some(v) = gdp {
            g.set_attribute(&id, "gdp", Value::Number(*v)).unwrap();
        }
        if let Some(s) = sector {
            g.set_attribute(&id, "sector", Value::Text(s.clone())).unwrap();
        }
        if !tags.is_empty() {
            g.set_attribute(&id, "tags", Value::List(tags.clone())).unwrap();
        }
    }
    for &(a, b) in &f.adjacency {
        if a != b {
            g.ensure_relation(RelationalTriple::new(park_id(a), Relation::AdjacentTo, park_id(b)))
                .unwrap();
        }
    }
    for (k, &(park, staff)) in f.enterprises.iter().enumerate() {
        let id = EntityId::new(format!("ent:{k}"));
        g.add_entity(Entity::new(id.clone(), EntityKind::Enterprise, format!("E{k}")))
            .unwrap();
        if let Some(s) = staff {
            g.set_attribute(&id, "staff", Value::Number(s)).unwrap();
        }
        g.add_relation(RelationalTriple::new(id, Relation::LocatedIn, park_id(park)))
            .unwrap();
    }
    g
}

/// Well-typed queries over the fixture schema.
pub fn typed_query() -> impl Strategy<Value = Query> {
    let park_cmp = prop_oneof![
        (op().prop_filter("numeric", |o| *o != CmpOp::Contains), (0u8..6))
            .prop_map(|(op, v)| ("gdp", op, Literal::Number(v as f64 * 10.0))),
        prop_oneof![Just(CmpOp::Eq), Just(CmpOp::Contains)]
            .prop_flat_map(|op| (Just(op), prop_oneof![Just("AI"), Just("Bio"), Just("AI Bio")]))
            .prop_map(|(op, s)| ("sector", op, Literal::Text(s.into()))),
        prop_oneof![Just("x"), Just("y")].prop_map(|s| ("tags", CmpOp::Contains, Literal::Text(s.into()))),
        (0usize..8).prop_map(|i| ("id", CmpOp::Eq, Literal::Text(format!("park:{i}")))),
    ];
    let mk = |b: &str, (attr, op, value): (&str, CmpOp, Literal)| Comparison {
        property: Property::new(b, attr),
        op,
        value,
    };
    let compare = park_cmp.clone().prop_map(move |c| Predicate::Compare(mk("p", c)));
    let adjacent = (direction(), proptest::option::of(park_cmp)).prop_map(move |(direction, c)| {
        Predicate::Related {
            relation: "AdjacentTo".into(),
            direction,
            binding: c.as_ref().map(|_| "q".to_string()),
            kind: "Park".into(),
            filter: c.map(|c| mk("q", c)),
        }
    });
    let hosts = proptest::option::of((op().prop_filter("numeric", |o| *o != CmpOp::Contains), 0u8..4))
        .prop_map(move |c| Predicate::Related {
            relation: "LocatedIn".into(),
            direction: Direction::Incoming,
            binding: c.map(|_| "e".to_string()),
            kind: "Enterprise".into(),
            filter: c.map(|(op, v)| Comparison {
                property: Property::new("e", "staff"),
                op,
                value: Literal::Number(v as f64),
            }),
        });
    let predicate = prop_oneof![3 => compare, 1 => adjacent, 1 => hosts];
    let order = proptest::option::of(
        (prop_oneof![Just("gdp"), Just("sector"), Just("name")], any::<bool>()).prop_map(|(a, desc)| OrderBy {
            property: Property::new("p", a),
            order: if desc { SortOrder::Desc } else { SortOrder::Asc },
        }),
    );
    (
        proptest::collection::vec(predicate, 0..4),
        any::<bool>(),
        order,
        proptest::option::of(1u64..6),
    )
        .prop_map(|(predicates, count, order_by, limit)| Query {
            binding: "p".into(),
            kind: "Park".into(),
            predicates,
            returns: if count {
                Returns::Count
            } else {
                Returns::Projections(vec![Property::new("p", "id"), Property::new("p", "gdp")])
            },
            order_by,
            limit,
        })
}

// ---------- brute-force oracle ----------

pub fn lookup(g: &PropertyGraph, id: &EntityId, attr: &str) -> Option<Value> {
    match attr {
        "id" => Some(Value::Text(id.as_str().to_string())),
        "name" => g.entity(id).map(|e| Value::Text(e.label.clone())),
        _ => g.attributes_of(id).and_then(|m| m.get(attr)).cloned(),
    }
}

pub fn oracle_compare(g: &PropertyGraph, id: &EntityId, c: &Comparison) -> bool {
    match (lookup(g, id, &c.property.attribute), &c.value) {
        (Some(Value::Number(x)), Literal::Number(y)) => match c.op {
            CmpOp::Eq => x == *y,
            CmpOp::Lt => x < *y,
            CmpOp::Gt => x > *y,
            CmpOp::Le => x <= *y,
            CmpOp::Ge => x >= *y,
            CmpOp::Contains => false,
        },
        (Some(Value::Text(s)), Literal::Text(t)) => match c.op {
            CmpOp::Eq => &s == t,
            CmpOp::Contains => s.contains(t.as_str()),
            _ => false,
        },
        (Some(Value::List(l)), Literal::Text(t)) => c.op == CmpOp::Contains && l.contains(t),
        _ => false,
    }
}

pub fn oracle_matches(g: &PropertyGraph, id: &EntityId, p: &Predicate) -> bool {
    match p {
        Predicate::Compare(c) => oracle_compare(g, id, c),
        Predicate::Related {
            relation,
            direction,
            kind,
            filter,
            ..
        } => {
            let relation: Relation = relation.parse().unwrap();
            let kind: EntityKind = kind.parse().unwrap();
            g.triples().any(|t| {
                if t.relation != relation {
                    return false;
                }
                let other = match direction {
                    Direction::Outgoing if &t.head == id => &t.tail,
                    Direction::Incoming if &t.tail == id => &t.head,
                    Direction::Both if &t.head == id => &t.tail,
                    Direction::Both if &t.tail == id => &t.head,
                    _ => return false,
                };
                g.entity(other).unwrap().kind == kind
                    && filter.as_ref().is_none_or(|c| oracle_compare(g, other, c))
            })
        }
    }
}

pub fn oracle(g: &PropertyGraph, q: &Query) -> (Vec<EntityId>, usize) {
    let kind: EntityKind = q.kind.parse().unwrap();
    let mut hits: Vec<EntityId> = g
        .entities()
        .filter(|e| e.kind == kind)
        .map(|e| e.id.clone())
        .filter(|id| q.predicates.iter().all(|p| oracle_matches(g, id, p)))
        .collect();
    hits.sort();
    let total = hits.len();
    if let Some(o) = &q.order_by {
        let key = |id: &EntityId| lookup(g, id, &o.property.attribute);
        hits.sort_by(|a, b| {
            let ord = match (key(a), key(b)) {
                (None, None) => Ordering::Equal,
                (None, Some(_)) => Ordering::Greater,
                (Some(_), None) => Ordering::Less,
                (Some(x), Some(y)) => {
                    let o2 = match (x, y) {
                        (Value::Number(x), Value::Number(y)) => x.partial_cmp(&y).unwrap(),
                        (Value::Text(x), Value::Text(y)) => x.cmp(&y),
                        _ => unreachable!(),
                    };
                    if o.order == SortOrder::Desc {
                        o2.reverse()
                    } else {
                        o2
                    }
                }
            };
            ord.then_with(|| a.cmp(b))
        });
    }
    if let Some(n) = q.limit {
        hits.truncate(n as usize);
    }
    (hits, total)
}

