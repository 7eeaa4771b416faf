use std::fmt;

use serde::{Deserialize, Serialize};

use crate::graph::Direction;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Query {
    pub binding: String,
    pub kind: String,
    pub predicates: Vec<Predicate>,
    pub returns: Returns,
    pub order_by: Option<OrderBy>,
    pub limit: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Returns {
    Count,
    Projections(Vec<Property>),
}

/// `binding.attribute`. The names `id` and `name` resolve to the entity id
/// and label rather than to stored attributes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Property {
    pub binding: String,
    pub attribute: String,
}

impl Property {
    pub fn new(binding: impl Into<String>, attribute: impl Into<String>) -> Self {
        Property {
            binding: binding.into(),
            attribute: attribute.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CmpOp {
    Eq,
    Lt,
    Gt,
    Le,
    Ge,
    Contains,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "=",
            CmpOp::Lt => "<",
            CmpOp::Gt => ">",
            CmpOp::Le => "<=",
            CmpOp::Ge => ">=",
            CmpOp::Contains => "CONTAINS",
        }
    }

    pub fn is_ordering(self) -> bool {
        matches!(self, CmpOp::Lt | CmpOp::Gt | CmpOp::Le | CmpOp::Ge)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Literal {
    Number(f64),
    Text(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub property: Property,
    pub op: CmpOp,
    pub value: Literal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Predicate {
    Compare(Comparison),
    /// `(b)-[:Rel]->(x:Kind WHERE x.attr op lit)`: at least one neighbor of
    /// the given kind over the relation, optionally satisfying one comparison.
    Related {
        relation: String,
        direction: Direction,
        binding: Option<String>,
        kind: String,
        filter: Option<Comparison>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SortOrder {
    Asc,
    Desc,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrderBy {
    pub property: Property,
    pub order: SortOrder,
}

pub(crate) fn is_plain_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

struct Ident<'a>(&'a str);

impl fmt::Display for Ident<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if is_plain_identifier(self.0) {
            f.write_str(self.0)
        } else {
            write!(f, "`{}`", self.0)
        }
    }
}

impl fmt::Display for Property {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", Ident(&self.binding), Ident(&self.attribute))
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            // `{}` on f64 prints the shortest representation that reparses
            // to the same value.
            Literal::Number(n) => write!(f, "{n}"),
            Literal::Text(s) => {
                f.write_str("\"")?;
                for c in s.chars() {
                    match c {
                        '"' => f.write_str("\\\"")?,
                        '\\' => f.write_str("\\\\")?,
                        '\n' => f.write_str("\\n")?,
                        '\t' => f.write_str("\\t")?,
                        other => write!(f, "{other}")?,
                    }
                }
                f.write_str("\"")
            }
        }
    }
}

impl fmt::Display for Comparison {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.property, self.op.symbol(), self.value)
    }
}

impl Query {
    fn fmt_predicate(&self, p: &Predicate, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match p {
            Predicate::Compare(c) => write!(f, "{c}"),
            Predicate::Related {
                relation,
                direction,
                binding,
                kind,
                filter,
            } => {
                let (left, right) = match direction {
                    Direction::Outgoing => ("-", "->"),
                    Direction::Incoming => ("<-", "-"),
                    Direction::Both => ("-", "-"),
                };
                write!(
                    f,
                    "({}){left}[:{}]{right}(",
                    Ident(&self.binding),
                    Ident(relation)
                )?;
                if let Some(b) = binding {
                    write!(f, "{}", Ident(b))?;
                }
                write!(f, ":{}", Ident(kind))?;
                if let Some(c) = filter {
                    write!(f, " WHERE {c}")?;
                }
                f.write_str(")")
            }
        }
    }
}

/// Canonical form: upper-case keywords, single spaces, explicit sort order.
impl fmt::Display for Query {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "MATCH ({}:{})", Ident(&self.binding), Ident(&self.kind))?;
        for (i, p) in self.predicates.iter().enumerate() {
            f.write_str(if i == 0 { " WHERE " } else { " AND " })?;
            self.fmt_predicate(p, f)?;
        }
        f.write_str(" RETURN ")?;
        match &self.returns {
            Returns::Count => f.write_str("COUNT(*)")?,
            Returns::Projections(props) => {
                for (i, p) in props.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{p}")?;
                }
            }
        }
        if let Some(o) = &self.order_by {
            let dir = match o.order {
                SortOrder::Asc => "ASC",
                SortOrder::Desc => "DESC",
            };
            write!(f, " ORDER BY {} {dir}", o.property)?;
        }
        if let Some(n) = self.limit {
            write!(f, " LIMIT {n}")?;
        }
        Ok(())
    }
}
