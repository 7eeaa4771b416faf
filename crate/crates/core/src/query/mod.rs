//! A small declarative query language over [`PropertyGraph`].
//!
//! ```text
//! query      = "MATCH" "(" ident ":" ident ")"
//!              [ "WHERE" predicate { "AND" predicate } ]
//!              "RETURN" ( "COUNT" "(" "*" ")" | property { "," property } )
//!              [ "ORDER" "BY" property [ "ASC" | "DESC" ] ]
//!              [ "LIMIT" integer ] ;
//! predicate  = comparison | pattern ;
//! comparison = property ( "=" | "<" | ">" | "<=" | ">=" | "CONTAINS" ) literal ;
//! pattern    = "(" ident ")" ( "-[" ":" ident "]->" | "<-[" ":" ident "]-" | "-[" ":" ident "]-" )
//!              "(" [ ident ] ":" ident [ "WHERE" comparison ] ")" ;
//! property   = ident "." ident ;
//! literal    = [ "-" ] number | string ;
//! ident      = letter { letter | digit | "_" } | "`" { any-but-backtick } "`" ;
//! ```
//!
//! Keywords are case-insensitive. `id` and `name` are built-in properties
//! (entity id and label). Comparing a missing attribute is false; naming an
//! attribute that is not registered is an error.
//!
//! [`PropertyGraph`]: crate::graph::PropertyGraph

mod ast;
mod eval;
mod lexer;
mod parser;

use thiserror::Error;

use crate::graph::{PropertyGraph, ValueKind};

pub use ast::{
    CmpOp, Comparison, Literal, OrderBy, Predicate, Property, Query, Returns, SortOrder,
};
pub use eval::{eval, Cell, ResultTable, ID_PROPERTY, NAME_PROPERTY};
pub use parser::parse;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QueryError {
    #[error("syntax error at line {line}, column {column}: {message}{}", expected_suffix(.expected))]
    Syntax {
        line: usize,
        column: usize,
        message: String,
        expected: Vec<String>,
    },
    #[error("unknown entity kind `{0}`")]
    UnknownKind(String),
    #[error("unknown relation `{0}`")]
    UnknownRelation(String),
    #[error("unknown attribute `{0}`")]
    UnknownAttribute(String),
    #[error("type mismatch: `{attribute}` is {kind}, cannot apply {op} with a {literal} operand")]
    TypeMismatch {
        attribute: String,
        kind: ValueKind,
        op: String,
        literal: String,
    },
}

fn expected_suffix(expected: &[String]) -> String {
    if expected.is_empty() {
        String::new()
    } else {
        format!(" (expected one of: {})", expected.join(", "))
    }
}

/// Parses and evaluates in one step.
pub fn run(text: &str, graph: &PropertyGraph) -> Result<ResultTable, QueryError> {
    eval(&parse(text)?, graph)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{Direction, Entity, EntityKind, Relation, RelationalTriple, Value};

    fn parks(gdp: &[(&str, f64)]) -> PropertyGraph {
        let mut g = PropertyGraph::new();
        for (id, v) in gdp {
            g.add_entity(Entity::new(*id, EntityKind::IndustrialPark, id.to_uppercase()))
                .unwrap();
            g.set_attribute(&(*id).into(), "gdp", Value::Number(*v)).unwrap();
        }
        g
    }

    #[test]
    fn golden_ast() {
        let q = parse("MATCH (p:Park) WHERE p.gdp > 100 RETURN p.name ORDER BY p.gdp DESC LIMIT 5")
            .unwrap();
        let expected = Query {
            binding: "p".into(),
            kind: "Park".into(),
            predicates: vec![Predicate::Compare(Comparison {
                property: Property::new("p", "gdp"),
                op: CmpOp::Gt,
                value: Literal::Number(100.0),
            })],
            returns: Returns::Projections(vec![Property::new("p", "name")]),
            order_by: Some(OrderBy {
                property: Property::new("p", "gdp"),
                order: SortOrder::Desc,
            }),
            limit: Some(5),
        };
        assert_eq!(q, expected);
    }

    #[test]
    fn minimal_query() {
        let q = parse("MATCH (p:Park) RETURN p.name").unwrap();
        assert!(q.predicates.is_empty());
        assert_eq!(q.order_by, None);
        assert_eq!(q.limit, None);
        assert_eq!(q.to_string(), "MATCH (p:Park) RETURN p.name");
    }

    #[test]
    fn truncated_query_reports_column_ten() {
        let err = parse("MATCH (p:").unwrap_err();
        match &err {
            QueryError::Syntax {
                line,
                column,
                expected,
                ..
            } => {
                assert_eq!((*line, *column), (1, 10));
                assert_eq!(expected, &vec!["identifier".to_string()]);
            }
            other => panic!("{other:?}"),
        }
        assert!(err.to_string().starts_with("syntax error"));
    }

    #[test]
    fn keywords_are_case_insensitive() {
        let a = parse("match (p:Park) where p.gdp >= 1 return p.id order by p.gdp limit 2").unwrap();
        let b = parse("MATCH (p:Park) WHERE p.gdp >= 1 RETURN p.id ORDER BY p.gdp ASC LIMIT 2").unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn relation_patterns_parse_and_print() {
        for text in [
            "MATCH (g:Grid) WHERE (g)-[:LocatedIn]->(p:Park WHERE p.id = \"park:a\") RETURN g.id",
            "MATCH (p:Park) WHERE (p)-[:AdjacentTo]-(:Park) RETURN COUNT(*)",
            "MATCH (p:Park) WHERE (p)<-[:LocatedIn]-(e:Enterprise WHERE e.`gross output` >= -2.5) RETURN p.name",
        ] {
            let q = parse(text).unwrap();
            assert_eq!(q.to_string(), text);
        }
    }

    #[test]
    fn less_than_negative_without_space() {
        let q = parse("MATCH (p:Park) WHERE p.gdp <-5 RETURN p.id").unwrap();
        let Predicate::Compare(c) = &q.predicates[0] else { panic!() };
        assert_eq!((c.op, &c.value), (CmpOp::Lt, &Literal::Number(-5.0)));
    }

    #[test]
    fn binding_errors() {
        assert!(matches!(
            parse("MATCH (p:Park) WHERE q.gdp > 1 RETURN p.id"),
            Err(QueryError::Syntax { column: 22, .. })
        ));
        assert!(parse("MATCH (p:Park) WHERE (p)-[:Has]->(p:Park) RETURN p.id").is_err());
        assert!(parse("MATCH (p:Park) WHERE (p)-[:Has]->(x:Park WHERE p.gdp > 1) RETURN p.id").is_err());
        assert!(parse("MATCH (p:Park) RETURN p.id LIMIT 0").is_err());
        assert!(parse("MATCH (p:Park) RETURN p.id LIMIT 1.5").is_err());
    }

    #[test]
    fn filter_order_example() {
        let g = parks(&[("p1", 50.0), ("p2", 120.0), ("p3", 300.0)]);
        let t = run("MATCH (p:Park) WHERE p.gdp > 100 RETURN p.gdp ORDER BY p.gdp DESC", &g).unwrap();
        assert_eq!(t.rows, vec![vec![Cell::Number(300.0)], vec![Cell::Number(120.0)]]);
        assert_eq!(t.entities, vec!["p3".into(), "p2".into()]);
        assert_eq!(t.total, 2);
    }

    #[test]
    fn empty_result() {
        let g = parks(&[("p1", 50.0)]);
        let t = run("MATCH (p:Park) WHERE p.gdp > 1000 RETURN p.name", &g).unwrap();
        assert!(t.rows.is_empty());
        assert_eq!(t.total, 0);
        let c = run("MATCH (p:Park) WHERE p.gdp > 1000 RETURN COUNT(*)", &g).unwrap();
        assert_eq!(c.rows, vec![vec![Cell::Number(0.0)]]);
    }

    #[test]
    fn isolated_park_fails_relation_predicate() {
        let mut g = parks(&[("p1", 1.0), ("p2", 2.0), ("p3", 3.0)]);
        g.add_relation(RelationalTriple::new("p1", Relation::AdjacentTo, "p2"))
            .unwrap();
        let t = run("MATCH (p:Park) WHERE (p)-[:AdjacentTo]-(:Park) RETURN p.id", &g).unwrap();
        assert_eq!(t.entities, vec!["p1".into(), "p2".into()]);
        let n = g
            .neighbors(&"p3".into(), Relation::AdjacentTo, Direction::Both)
            .unwrap();
        assert!(n.is_empty());
    }

    #[test]
    fn missing_values_are_false_and_sort_last() {
        let mut g = parks(&[("p1", 5.0), ("p3", 7.0)]);
        g.add_entity(Entity::new("p2", EntityKind::IndustrialPark, "P2"))
            .unwrap();
        let t = run("MATCH (p:Park) WHERE p.gdp >= 0 RETURN p.id", &g).unwrap();
        assert_eq!(t.total, 2);
        for dir in ["ASC", "DESC"] {
            let t = run(&format!("MATCH (p:Park) RETURN p.gdp ORDER BY p.gdp {dir}"), &g).unwrap();
            assert_eq!(t.rows.last().unwrap(), &vec![Cell::Null]);
        }
    }

    #[test]
    fn eval_errors() {
        let g = parks(&[("p1", 5.0)]);
        let err = run("MATCH (p:Park) WHERE p.revenue > 1 RETURN p.id", &g).unwrap_err();
        assert_eq!(err, QueryError::UnknownAttribute("revenue".into()));
        assert!(err.to_string().contains("revenue"));
        assert!(matches!(
            run("MATCH (p:Planet) RETURN p.id", &g),
            Err(QueryError::UnknownKind(_))
        ));
        assert!(matches!(
            run("MATCH (p:Park) WHERE p.gdp = \"high\" RETURN p.id", &g),
            Err(QueryError::TypeMismatch { .. })
        ));
        assert!(matches!(
            run("MATCH (p:Park) WHERE p.name > 3 RETURN p.id", &g),
            Err(QueryError::TypeMismatch { .. })
        ));
        assert!(matches!(
            run("MATCH (p:Park) WHERE (p)-[:Near]->(:Park) RETURN p.id", &g),
            Err(QueryError::UnknownRelation(_))
        ));
    }

    #[test]
    fn list_contains_and_text_contains() {
        let mut g = parks(&[("p1", 1.0), ("p2", 2.0)]);
        g.set_attribute(&"p1".into(), "tags", Value::List(vec!["AI".into(), "Bio".into()]))
            .unwrap();
        g.set_attribute(&"p2".into(), "tags", Value::List(vec!["AIR".into()]))
            .unwrap();
        let t = run("MATCH (p:Park) WHERE p.tags CONTAINS \"AI\" RETURN p.id", &g).unwrap();
        assert_eq!(t.entities, vec!["p1".into()]);
        let t = run("MATCH (p:Park) WHERE p.name CONTAINS \"2\" RETURN p.id", &g).unwrap();
        assert_eq!(t.entities, vec!["p2".into()]);
    }

    #[test]
    fn render_marks_truncation() {
        let g = parks(&[("p1", 1.0), ("p2", 2.0), ("p3", 3.0)]);
        let t = run("MATCH (p:Park) RETURN p.id, p.gdp", &g).unwrap();
        let text = t.render(2);
        assert!(text.starts_with("p.id | p.gdp"));
        assert!(text.contains("1 more rows"));
        assert!(text.ends_with("(3 matching)"));
    }
}
