use std::collections::BTreeSet;

use super::ast::*;
use super::lexer::{lex, Spanned, Tok};
use super::QueryError;
use crate::graph::Direction;

/// Parses one query. Keywords are matched case-insensitively; identifiers
/// keep their case.
pub fn parse(text: &str) -> Result<Query, QueryError> {
    let tokens = lex(text)?;
    let mut p = Parser {
        tokens,
        pos: 0,
        expected: BTreeSet::new(),
        scope: Vec::new(),
    };
    let query = p.query()?;
    p.expect_eof()?;
    Ok(query)
}

struct Parser {
    tokens: Vec<Spanned>,
    pos: usize,
    /// Alternatives tried at the current position; reset whenever a token is
    /// consumed so error messages list only what could have come next.
    expected: BTreeSet<String>,
    /// Binding names visible to property references at this point.
    scope: Vec<String>,
}

type PResult<T> = Result<T, QueryError>;

impl Parser {
    fn peek(&self) -> &Tok {
        &self.tokens[self.pos].tok
    }

    fn peek_at(&self, offset: usize) -> &Tok {
        let idx = (self.pos + offset).min(self.tokens.len() - 1);
        &self.tokens[idx].tok
    }

    fn bump(&mut self) -> Tok {
        let t = self.tokens[self.pos].tok.clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        self.expected.clear();
        t
    }

    fn error(&mut self) -> QueryError {
        let here = &self.tokens[self.pos];
        QueryError::Syntax {
            line: here.line,
            column: here.column,
            message: format!("unexpected {}", here.tok.describe()),
            expected: std::mem::take(&mut self.expected).into_iter().collect(),
        }
    }

    fn error_msg(&self, message: impl Into<String>) -> QueryError {
        let here = &self.tokens[self.pos];
        QueryError::Syntax {
            line: here.line,
            column: here.column,
            message: message.into(),
            expected: Vec::new(),
        }
    }

    fn is_keyword(&mut self, kw: &str) -> bool {
        self.expected.insert(kw.to_string());
        matches!(self.peek(), Tok::Ident { name, quoted: false } if name.eq_ignore_ascii_case(kw))
    }

    fn eat_keyword(&mut self, kw: &str) -> bool {
        if self.is_keyword(kw) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn keyword(&mut self, kw: &str) -> PResult<()> {
        if self.eat_keyword(kw) {
            Ok(())
        } else {
            Err(self.error())
        }
    }

    fn check(&mut self, tok: &Tok) -> bool {
        self.expected.insert(tok.describe());
        self.peek() == tok
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.check(tok) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, tok: Tok) -> PResult<()> {
        if self.eat(&tok) {
            Ok(())
        } else {
            Err(self.error())
        }
    }

    /// An identifier that must name a binding in scope.
    fn bound_ident(&mut self) -> PResult<String> {
        let at = self.pos;
        let name = self.ident()?;
        if !self.scope.contains(&name) {
            let here = &self.tokens[at];
            return Err(QueryError::Syntax {
                line: here.line,
                column: here.column,
                message: format!("unknown binding `{name}`"),
                expected: self.scope.clone(),
            });
        }
        Ok(name)
    }

    fn ident(&mut self) -> PResult<String> {
        self.expected.insert("identifier".into());
        match self.peek().clone() {
            Tok::Ident { name, .. } => {
                self.bump();
                Ok(name)
            }
            _ => Err(self.error()),
        }
    }

    fn expect_eof(&mut self) -> PResult<()> {
        self.expected.insert("end of input".into());
        if *self.peek() == Tok::Eof {
            Ok(())
        } else {
            Err(self.error())
        }
    }

    fn query(&mut self) -> PResult<Query> {
        self.keyword("MATCH")?;
        self.expect(Tok::LParen)?;
        let binding = self.ident()?;
        self.expect(Tok::Colon)?;
        let kind = self.ident()?;
        self.expect(Tok::RParen)?;
        self.scope = vec![binding.clone()];

        let mut predicates = Vec::new();
        if self.eat_keyword("WHERE") {
            predicates.push(self.predicate()?);
            while self.eat_keyword("AND") {
                predicates.push(self.predicate()?);
            }
        }

        self.keyword("RETURN")?;
        let returns = self.returns()?;

        let mut order_by = None;
        if self.eat_keyword("ORDER") {
            self.keyword("BY")?;
            let property = self.property()?;
            let order = if self.eat_keyword("DESC") {
                SortOrder::Desc
            } else {
                self.eat_keyword("ASC");
                SortOrder::Asc
            };
            order_by = Some(OrderBy { property, order });
        }

        let mut limit = None;
        if self.eat_keyword("LIMIT") {
            self.expected.insert("positive integer".into());
            match *self.peek() {
                Tok::Number(n) if n >= 1.0 && n.fract() == 0.0 && n <= u64::MAX as f64 => {
                    self.bump();
                    limit = Some(n as u64);
                }
                Tok::Number(_) => return Err(self.error_msg("LIMIT must be a positive integer")),
                _ => return Err(self.error()),
            }
        }

        Ok(Query {
            binding,
            kind,
            predicates,
            returns,
            order_by,
            limit,
        })
    }

    fn returns(&mut self) -> PResult<Returns> {
        let count_ahead = matches!(
            self.peek(),
            Tok::Ident { name, quoted: false } if name.eq_ignore_ascii_case("COUNT")
        ) && *self.peek_at(1) == Tok::LParen;
        if count_ahead {
            self.bump();
            self.expect(Tok::LParen)?;
            self.expect(Tok::Star)?;
            self.expect(Tok::RParen)?;
            return Ok(Returns::Count);
        }
        self.expected.insert("COUNT".into());
        let mut props = vec![self.property()?];
        while self.eat(&Tok::Comma) {
            props.push(self.property()?);
        }
        Ok(Returns::Projections(props))
    }

    fn property(&mut self) -> PResult<Property> {
        let binding = self.bound_ident()?;
        self.expect(Tok::Dot)?;
        let attribute = self.ident()?;
        Ok(Property { binding, attribute })
    }

    fn predicate(&mut self) -> PResult<Predicate> {
        if self.check(&Tok::LParen) {
            self.relation_pattern()
        } else {
            Ok(Predicate::Compare(self.comparison()?))
        }
    }

    fn comparison(&mut self) -> PResult<Comparison> {
        let property = self.property()?;
        let mut negate = false;
        let op = if self.eat(&Tok::Eq) {
            CmpOp::Eq
        } else if self.eat(&Tok::Le) {
            CmpOp::Le
        } else if self.eat(&Tok::Ge) {
            CmpOp::Ge
        } else if self.eat(&Tok::Lt) {
            CmpOp::Lt
        } else if self.eat(&Tok::Gt) {
            CmpOp::Gt
        } else if self.eat(&Tok::LeftArrow) {
            // `x <-5` lexes as a left arrow; in comparison position it can
            // only mean less-than a negative number.
            negate = true;
            CmpOp::Lt
        } else if self.eat_keyword("CONTAINS") {
            CmpOp::Contains
        } else {
            return Err(self.error());
        };
        let value = self.literal(negate)?;
        Ok(Comparison {
            property,
            op,
            value,
        })
    }

    fn literal(&mut self, mut negate: bool) -> PResult<Literal> {
        if !negate && self.eat(&Tok::Minus) {
            negate = true;
        }
        self.expected.insert("number".into());
        if !negate {
            self.expected.insert("string".into());
        }
        match self.peek().clone() {
            Tok::Number(n) => {
                self.bump();
                Ok(Literal::Number(if negate { -n } else { n }))
            }
            Tok::Str(s) if !negate => {
                self.bump();
                Ok(Literal::Text(s))
            }
            _ => Err(self.error()),
        }
    }

    fn relation_pattern(&mut self) -> PResult<Predicate> {
        self.expect(Tok::LParen)?;
        // The anchor is always the match binding, so the AST does not store it.
        self.bound_ident()?;
        self.expect(Tok::RParen)?;
        let incoming = if self.eat(&Tok::LeftArrow) {
            true
        } else {
            self.expect(Tok::Minus)?;
            false
        };
        self.expect(Tok::LBracket)?;
        self.expect(Tok::Colon)?;
        let relation = self.ident()?;
        self.expect(Tok::RBracket)?;
        let direction = if incoming {
            self.expect(Tok::Minus)?;
            Direction::Incoming
        } else if self.eat(&Tok::Arrow) {
            Direction::Outgoing
        } else {
            self.expect(Tok::Minus)?;
            Direction::Both
        };
        self.expect(Tok::LParen)?;
        let binding = if matches!(self.peek(), Tok::Ident { .. }) {
            let name = self.ident()?;
            if self.scope.contains(&name) {
                return Err(self.error_msg(format!("binding `{name}` is already defined")));
            }
            Some(name)
        } else {
            None
        };
        self.expect(Tok::Colon)?;
        let kind = self.ident()?;
        let filter = if self.eat_keyword("WHERE") {
            let outer = std::mem::replace(&mut self.scope, binding.iter().cloned().collect());
            let c = self.comparison();
            self.scope = outer;
            Some(c?)
        } else {
            None
        };
        self.expect(Tok::RParen)?;
        Ok(Predicate::Related {
            relation,
            direction,
            binding,
            kind,
            filter,
        })
    }
}
