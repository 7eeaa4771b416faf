use std::cmp::Ordering;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::ast::*;
use super::QueryError;
use crate::graph::{EntityId, EntityKind, PropertyGraph, Relation, Value, ValueKind};

pub const ID_PROPERTY: &str = "id";
pub const NAME_PROPERTY: &str = "name";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Cell {
    Null,
    Number(f64),
    Text(String),
    List(Vec<String>),
}

impl std::fmt::Display for Cell {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Cell::Null => f.write_str("-"),
            Cell::Number(n) => write!(f, "{n}"),
            Cell::Text(s) => f.write_str(s),
            Cell::List(items) => f.write_str(&items.join("; ")),
        }
    }
}

impl From<&Value> for Cell {
    fn from(v: &Value) -> Self {
        match v {
            Value::Number(n) => Cell::Number(*n),
            Value::Text(s) => Cell::Text(s.clone()),
            Value::List(l) => Cell::List(l.clone()),
        }
    }
}

/// Rows are parallel to `entities` for projection queries; a `COUNT(*)`
/// query has a single `count` row and no entities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    pub entities: Vec<EntityId>,
    /// Number of matching entities before `LIMIT`.
    pub total: usize,
}

impl ResultTable {
    /// Plain-text table showing at most `max_rows` rows.
    pub fn render(&self, max_rows: usize) -> String {
        let shown = self.rows.len().min(max_rows);
        let mut widths: Vec<usize> = self.columns.iter().map(|c| c.chars().count()).collect();
        let cells: Vec<Vec<String>> = self.rows[..shown]
            .iter()
            .map(|r| r.iter().map(Cell::to_string).collect())
            .collect();
        for row in &cells {
            for (w, c) in widths.iter_mut().zip(row) {
                *w = (*w).max(c.chars().count());
            }
        }
        let mut out = String::new();
        let line = |out: &mut String, items: &[String]| {
            let parts: Vec<String> = items
                .iter()
                .zip(&widths)
                .map(|(s, w)| format!("{s:<w$}"))
                .collect();
            let _ = writeln!(out, "{}", parts.join(" | ").trim_end());
        };
        line(&mut out, &self.columns);
        let rule: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
        let _ = writeln!(out, "{}", rule.join("-+-"));
        for row in &cells {
            line(&mut out, row);
        }
        if shown < self.rows.len() {
            let _ = writeln!(out, "... {} more rows", self.rows.len() - shown);
        }
        let _ = write!(out, "({} matching)", self.total);
        out
    }
}

fn resolve_kind(name: &str) -> Result<EntityKind, QueryError> {
    name.parse()
        .map_err(|_| QueryError::UnknownKind(name.to_string()))
}

fn attribute_kind(graph: &PropertyGraph, name: &str) -> Result<ValueKind, QueryError> {
    if name == ID_PROPERTY || name == NAME_PROPERTY {
        return Ok(ValueKind::Text);
    }
    graph
        .attribute_def(name)
        .map(|d| d.kind)
        .ok_or_else(|| QueryError::UnknownAttribute(name.to_string()))
}

fn check_comparison(graph: &PropertyGraph, c: &Comparison) -> Result<(), QueryError> {
    let kind = attribute_kind(graph, &c.property.attribute)?;
    let ok = match (kind, &c.value, c.op) {
        (ValueKind::Number, Literal::Number(_), op) => op != CmpOp::Contains,
        (ValueKind::Text, Literal::Text(_), op) => matches!(op, CmpOp::Eq | CmpOp::Contains),
        (ValueKind::List, Literal::Text(_), op) => op == CmpOp::Contains,
        _ => false,
    };
    if ok {
        Ok(())
    } else {
        let literal = match c.value {
            Literal::Number(_) => "number",
            Literal::Text(_) => "text",
        };
        Err(QueryError::TypeMismatch {
            attribute: c.property.attribute.clone(),
            kind,
            op: c.op.symbol().to_string(),
            literal: literal.to_string(),
        })
    }
}

/// Checked form of a query: kinds and relations resolved, attributes known.
struct Plan<'q> {
    kind: EntityKind,
    predicates: Vec<PlanPredicate<'q>>,
}

enum PlanPredicate<'q> {
    Compare(&'q Comparison),
    Related {
        relation: Relation,
        direction: crate::graph::Direction,
        kind: EntityKind,
        filter: Option<&'q Comparison>,
    },
}

fn plan<'q>(query: &'q Query, graph: &PropertyGraph) -> Result<Plan<'q>, QueryError> {
    let kind = resolve_kind(&query.kind)?;
    let mut predicates = Vec::with_capacity(query.predicates.len());
    for p in &query.predicates {
        match p {
            Predicate::Compare(c) => {
                check_comparison(graph, c)?;
                predicates.push(PlanPredicate::Compare(c));
            }
            Predicate::Related {
                relation,
                direction,
                kind,
                filter,
                ..
            } => {
                let relation: Relation = relation
                    .parse()
                    .map_err(|_| QueryError::UnknownRelation(relation.clone()))?;
                let kind = resolve_kind(kind)?;
                if let Some(c) = filter {
                    check_comparison(graph, c)?;
                }
                predicates.push(PlanPredicate::Related {
                    relation,
                    direction: *direction,
                    kind,
                    filter: filter.as_ref(),
                });
            }
        }
    }
    if let Returns::Projections(props) = &query.returns {
        for p in props {
            attribute_kind(graph, &p.attribute)?;
        }
    }
    if let Some(o) = &query.order_by {
        let kind = attribute_kind(graph, &o.property.attribute)?;
        if kind == ValueKind::List {
            return Err(QueryError::TypeMismatch {
                attribute: o.property.attribute.clone(),
                kind,
                op: "ORDER BY".into(),
                literal: "number or text".into(),
            });
        }
    }
    Ok(Plan { kind, predicates })
}

enum Prop<'g> {
    Text(&'g str),
    Value(&'g Value),
}

fn property<'g>(graph: &'g PropertyGraph, id: &'g EntityId, attribute: &str) -> Option<Prop<'g>> {
    match attribute {
        ID_PROPERTY => Some(Prop::Text(id.as_str())),
        NAME_PROPERTY => graph.entity(id).map(|e| Prop::Text(e.label.as_str())),
        _ => graph.attribute(id, attribute).ok().flatten().map(Prop::Value),
    }
}

fn compare(graph: &PropertyGraph, id: &EntityId, c: &Comparison) -> bool {
    let Some(mut prop) = property(graph, id, &c.property.attribute) else {
        return false;
    };
    if let Prop::Value(Value::Text(s)) = prop {
        prop = Prop::Text(s);
    }
    match (prop, &c.value) {
        (Prop::Value(Value::Number(x)), Literal::Number(y)) => match c.op {
            CmpOp::Eq => x == y,
            CmpOp::Lt => x < y,
            CmpOp::Gt => x > y,
            CmpOp::Le => x <= y,
            CmpOp::Ge => x >= y,
            CmpOp::Contains => false,
        },
        (Prop::Text(s), Literal::Text(t)) => {
            match c.op {
                CmpOp::Eq => s == t,
                CmpOp::Contains => s.contains(t.as_str()),
                _ => false,
            }
        }
        (Prop::Value(Value::List(items)), Literal::Text(t)) => {
            c.op == CmpOp::Contains && items.iter().any(|i| i == t)
        }
        // A stored value whose type disagrees with the registry cannot
        // satisfy the comparison.
        _ => false,
    }
}

fn satisfies(graph: &PropertyGraph, id: &EntityId, p: &PlanPredicate<'_>) -> bool {
    match p {
        PlanPredicate::Compare(c) => compare(graph, id, c),
        PlanPredicate::Related {
            relation,
            direction,
            kind,
            filter,
        } => graph
            .neighbors(id, *relation, *direction)
            .unwrap_or_default()
            .iter()
            .any(|n| {
                graph.entity(n).map(|e| e.kind) == Some(*kind)
                    && filter.is_none_or(|c| compare(graph, n, c))
            }),
    }
}

fn sort_key(graph: &PropertyGraph, id: &EntityId, attribute: &str) -> Option<Cell> {
    property(graph, id, attribute).map(|p| match p {
        Prop::Text(s) => Cell::Text(s.to_string()),
        Prop::Value(v) => Cell::from(v),
    })
}

fn cmp_cells(a: &Cell, b: &Cell) -> Ordering {
    match (a, b) {
        (Cell::Number(x), Cell::Number(y)) => x.total_cmp(y),
        (Cell::Text(x), Cell::Text(y)) => x.cmp(y),
        _ => Ordering::Equal,
    }
}

/// Evaluates a parsed query. Entities are visited in id order, so rows are
/// ordered by id unless `ORDER BY` says otherwise; ties keep id order and
/// entities missing the sort attribute come last in either direction.
pub fn eval(query: &Query, graph: &PropertyGraph) -> Result<ResultTable, QueryError> {
    let plan = plan(query, graph)?;
    let mut matched: Vec<EntityId> = graph
        .entities_of_kind(plan.kind)
        .into_iter()
        .filter(|id| plan.predicates.iter().all(|p| satisfies(graph, id, p)))
        .collect();
    let total = matched.len();

    let Returns::Projections(props) = &query.returns else {
        return Ok(ResultTable {
            columns: vec!["count".into()],
            rows: vec![vec![Cell::Number(total as f64)]],
            entities: Vec::new(),
            total,
        });
    };

    if let Some(o) = &query.order_by {
        let mut keyed: Vec<(Option<Cell>, EntityId)> = matched
            .into_iter()
            .map(|id| (sort_key(graph, &id, &o.property.attribute), id))
            .collect();
        keyed.sort_by(|(a, _), (b, _)| match (a, b) {
            (Some(a), Some(b)) => match o.order {
                SortOrder::Asc => cmp_cells(a, b),
                SortOrder::Desc => cmp_cells(b, a),
            },
            (Some(_), None) => Ordering::Less,
            (None, Some(_)) => Ordering::Greater,
            (None, None) => Ordering::Equal,
        });
        matched = keyed.into_iter().map(|(_, id)| id).collect();
    }
    if let Some(n) = query.limit {
        matched.truncate(usize::try_from(n).unwrap_or(usize::MAX));
    }

    let rows = matched
        .iter()
        .map(|id| {
            props
                .iter()
                .map(|p| match property(graph, id, &p.attribute) {
                    Some(Prop::Text(s)) => Cell::Text(s.to_string()),
                    Some(Prop::Value(v)) => Cell::from(v),
                    None => Cell::Null,
                })
                .collect()
        })
        .collect();
    Ok(ResultTable {
        columns: props.iter().map(Property::to_string).collect(),
        rows,
        entities: matched,
        total,
    })
}
