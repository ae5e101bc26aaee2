//! Recursive-descent parser for the supported SQL subset.
//!
//! Parsing runs in two passes: a syntactic pass that keeps names as written,
//! then a binding pass that resolves tables, aliases and columns against the
//! schema.

use std::collections::HashMap;

use super::ast::{
    Agg, AggExpr, CondOp, CondValue, Condition, Direction, Join, Literal, OrderBy, Query,
    MAX_SUBQUERY_DEPTH,
};
use crate::error::{ForgeError, Result};
use crate::model::{is_decimal_numeral, ColumnRef, Schema};

/// Words that must be quoted when used as identifiers.
pub(crate) const RESERVED: &[&str] = &[
    "select", "from", "where", "group", "by", "having", "order", "limit", "join", "on", "as",
    "and", "or", "not", "in", "like", "between", "asc", "desc", "distinct", "union",
    "intersect", "except", "max", "min", "count", "avg", "sum", "inner", "left", "right",
    "outer", "cross", "is", "null",
];

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Word(String),
    Quoted(String),
    Str(String),
    Num(String),
    Sym(&'static str),
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    pos: usize,
}

fn syntax(pos: usize, msg: impl Into<String>) -> ForgeError {
    ForgeError::Syntax {
        pos,
        msg: msg.into(),
    }
}

fn lex(text: &str) -> Result<Vec<Spanned>> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let tok = if c.is_ascii_alphabetic() || c == b'_' || c >= 0x80 {
            while i < bytes.len()
                && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_' || bytes[i] >= 0x80)
            {
                i += 1;
            }
            Tok::Word(text[start..i].to_string())
        } else if c.is_ascii_digit()
            || (c == b'-' && bytes.get(i + 1).is_some_and(u8::is_ascii_digit))
        {
            i += 1;
            while i < bytes.len()
                && (bytes[i].is_ascii_digit()
                    || (bytes[i] == b'.' && bytes.get(i + 1).is_some_and(u8::is_ascii_digit)))
            {
                i += 1;
            }
            let n = &text[start..i];
            if !is_decimal_numeral(n) {
                return Err(syntax(start, format!("malformed number {n:?}")));
            }
            Tok::Num(n.to_string())
        } else if c == b'\'' || c == b'"' || c == b'`' {
            let quote = c;
            i += 1;
            let mut s = String::new();
            loop {
                let Some(rel) = text[i..].find(quote as char) else {
                    return Err(syntax(start, "unterminated quote"));
                };
                s.push_str(&text[i..i + rel]);
                i += rel + 1;
                if bytes.get(i) == Some(&quote) {
                    s.push(quote as char);
                    i += 1;
                } else {
                    break;
                }
            }
            if quote == b'`' {
                Tok::Quoted(s)
            } else {
                Tok::Str(s)
            }
        } else {
            let two = text.get(i..i + 2).unwrap_or("");
            let sym = match two {
                "!=" => Some("!="),
                "<>" => Some("!="),
                "<=" => Some("<="),
                ">=" => Some(">="),
                _ => None,
            };
            if let Some(s) = sym {
                i += 2;
                Tok::Sym(s)
            } else {
                i += 1;
                Tok::Sym(match c {
                    b'(' => "(",
                    b')' => ")",
                    b',' => ",",
                    b'.' => ".",
                    b'*' => "*",
                    b'=' => "=",
                    b'<' => "<",
                    b'>' => ">",
                    b';' => ";",
                    _ => {
                        let ch = text[start..].chars().next().unwrap_or('?');
                        return Err(syntax(start, format!("unexpected character {ch:?}")));
                    }
                })
            }
        };
        out.push(Spanned { tok, pos: start });
    }
    Ok(out)
}

// ---- syntactic pass -------------------------------------------------------

#[derive(Debug, Clone)]
struct RawColumn {
    qualifier: Option<String>,
    name: String,
}

#[derive(Debug, Clone)]
struct RawExpr {
    agg: Agg,
    column: Option<RawColumn>,
    pos: usize,
}

#[derive(Debug)]
enum RawValue {
    Literal(Literal),
    Range(Literal, Literal),
    Subquery(Box<RawQuery>),
}

#[derive(Debug)]
struct RawCondition {
    target: RawExpr,
    op: CondOp,
    value: RawValue,
}

#[derive(Debug)]
struct RawTable {
    name: String,
    alias: Option<String>,
    pos: usize,
}

#[derive(Debug)]
struct RawQuery {
    select: Vec<RawExpr>,
    from: Vec<RawTable>,
    joins: Vec<(RawTable, RawColumn, RawColumn)>,
    where_: Vec<RawCondition>,
    group_by: Vec<RawExpr>,
    having: Vec<RawCondition>,
    order_by: Option<(RawExpr, Direction)>,
    limit: Option<u64>,
}

struct Parser {
    toks: Vec<Spanned>,
    idx: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.idx).map(|s| &s.tok)
    }

    fn peek_at(&self, k: usize) -> Option<&Tok> {
        self.toks.get(self.idx + k).map(|s| &s.tok)
    }

    fn pos(&self) -> usize {
        self.toks.get(self.idx).map_or(self.end, |s| s.pos)
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Some(Tok::Word(w)) if w.eq_ignore_ascii_case(kw))
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if self.is_kw(kw) {
            self.idx += 1;
            true
        } else {
            false
        }
    }

    fn expect_kw(&mut self, kw: &str) -> Result<()> {
        if self.eat_kw(kw) {
            Ok(())
        } else {
            Err(self.unexpected(&format!("expected {}", kw.to_uppercase())))
        }
    }

    fn eat_sym(&mut self, s: &str) -> bool {
        if matches!(self.peek(), Some(Tok::Sym(x)) if *x == s) {
            self.idx += 1;
            true
        } else {
            false
        }
    }

    fn expect_sym(&mut self, s: &str) -> Result<()> {
        if self.eat_sym(s) {
            Ok(())
        } else {
            Err(self.unexpected(&format!("expected '{s}'")))
        }
    }

    fn unexpected(&self, what: &str) -> ForgeError {
        let found = match self.peek() {
            None => "end of input".to_string(),
            Some(Tok::Word(w)) => format!("{w:?}"),
            Some(Tok::Quoted(w)) => format!("`{w}`"),
            Some(Tok::Str(s)) => format!("string {s:?}"),
            Some(Tok::Num(n)) => format!("number {n}"),
            Some(Tok::Sym(s)) => format!("'{s}'"),
        };
        syntax(self.pos(), format!("{what}, found {found}"))
    }

    fn ident(&mut self) -> Result<String> {
        match self.peek().cloned() {
            Some(Tok::Quoted(s)) => {
                self.idx += 1;
                Ok(s)
            }
            Some(Tok::Word(w)) if !RESERVED.contains(&w.to_lowercase().as_str()) => {
                self.idx += 1;
                Ok(w)
            }
            _ => Err(self.unexpected("expected identifier")),
        }
    }

    fn query(&mut self, depth: usize) -> Result<RawQuery> {
        if depth > MAX_SUBQUERY_DEPTH {
            return Err(ForgeError::NestingTooDeep {
                max: MAX_SUBQUERY_DEPTH,
            });
        }
        self.expect_kw("select")?;
        if self.is_kw("distinct") {
            return Err(self.unexpected("DISTINCT is not supported"));
        }
        let mut select = vec![self.expr()?];
        while self.eat_sym(",") {
            select.push(self.expr()?);
        }

        self.expect_kw("from")?;
        let mut from = vec![self.table()?];
        while self.eat_sym(",") {
            from.push(self.table()?);
        }
        let mut joins = Vec::new();
        loop {
            if self.eat_kw("inner") {
                self.expect_kw("join")?;
            } else if !self.eat_kw("join") {
                break;
            }
            let table = self.table()?;
            self.expect_kw("on")?;
            let a = self.column()?;
            self.expect_sym("=")?;
            let b = self.column()?;
            joins.push((table, a, b));
        }

        let where_ = if self.eat_kw("where") {
            self.conditions(depth)?
        } else {
            Vec::new()
        };
        let mut group_by = Vec::new();
        if self.eat_kw("group") {
            self.expect_kw("by")?;
            group_by.push(self.expr()?);
            while self.eat_sym(",") {
                group_by.push(self.expr()?);
            }
        }
        let having = if self.eat_kw("having") {
            self.conditions(depth)?
        } else {
            Vec::new()
        };
        let order_by = if self.eat_kw("order") {
            self.expect_kw("by")?;
            let e = self.expr()?;
            let dir = if self.eat_kw("desc") {
                Direction::Desc
            } else {
                self.eat_kw("asc");
                Direction::Asc
            };
            if self.is_kw("desc") || self.is_kw("asc") || matches!(self.peek(), Some(Tok::Sym(","))) {
                return Err(self.unexpected("only one ORDER BY key is supported"));
            }
            Some((e, dir))
        } else {
            None
        };
        let limit = if self.eat_kw("limit") {
            match self.peek().cloned() {
                Some(Tok::Num(n)) => {
                    let pos = self.pos();
                    self.idx += 1;
                    Some(n.parse::<u64>().map_err(|_| {
                        syntax(pos, format!("LIMIT needs a non-negative integer, found {n}"))
                    })?)
                }
                _ => return Err(self.unexpected("expected LIMIT count")),
            }
        } else {
            None
        };
        Ok(RawQuery {
            select,
            from,
            joins,
            where_,
            group_by,
            having,
            order_by,
            limit,
        })
    }

    fn table(&mut self) -> Result<RawTable> {
        if matches!(self.peek(), Some(Tok::Sym("("))) {
            return Err(self.unexpected("subqueries in FROM are not supported"));
        }
        let pos = self.pos();
        let name = self.ident()?;
        let alias = if self.eat_kw("as") {
            Some(self.ident()?)
        } else {
            match self.peek() {
                Some(Tok::Word(w)) if !RESERVED.contains(&w.to_lowercase().as_str()) => {
                    Some(self.ident()?)
                }
                _ => None,
            }
        };
        Ok(RawTable { name, alias, pos })
    }

    fn column(&mut self) -> Result<RawColumn> {
        let first = self.ident()?;
        if self.eat_sym(".") {
            let name = self.ident()?;
            Ok(RawColumn {
                qualifier: Some(first),
                name,
            })
        } else {
            Ok(RawColumn {
                qualifier: None,
                name: first,
            })
        }
    }

    fn expr(&mut self) -> Result<RawExpr> {
        let pos = self.pos();
        if let Some(Tok::Word(w)) = self.peek() {
            if let Some(agg) = Agg::from_keyword(w) {
                if matches!(self.peek_at(1), Some(Tok::Sym("("))) {
                    self.idx += 2;
                    if self.is_kw("distinct") {
                        return Err(self.unexpected("DISTINCT is not supported"));
                    }
                    let column = if self.eat_sym("*") {
                        None
                    } else {
                        Some(self.column()?)
                    };
                    self.expect_sym(")")?;
                    return Ok(RawExpr { agg, column, pos });
                }
            }
        }
        if self.eat_sym("*") {
            return Ok(RawExpr {
                agg: Agg::None,
                column: None,
                pos,
            });
        }
        Ok(RawExpr {
            agg: Agg::None,
            column: Some(self.column()?),
            pos,
        })
    }

    fn conditions(&mut self, depth: usize) -> Result<Vec<RawCondition>> {
        let mut out = vec![self.condition(depth)?];
        loop {
            if self.eat_kw("and") {
                out.push(self.condition(depth)?);
            } else if self.is_kw("or") {
                return Err(self.unexpected("OR is not supported"));
            } else {
                return Ok(out);
            }
        }
    }

    fn literal(&mut self) -> Result<Literal> {
        match self.peek().cloned() {
            Some(Tok::Num(n)) => {
                self.idx += 1;
                Ok(Literal::Number(n))
            }
            Some(Tok::Str(s)) => {
                self.idx += 1;
                Ok(Literal::Text(s))
            }
            _ => Err(self.unexpected("expected literal")),
        }
    }

    fn subquery(&mut self, depth: usize) -> Result<Box<RawQuery>> {
        self.expect_sym("(")?;
        let q = self.query(depth + 1)?;
        self.expect_sym(")")?;
        Ok(Box::new(q))
    }

    fn condition(&mut self, depth: usize) -> Result<RawCondition> {
        let target = self.expr()?;
        let (op, value) = if self.eat_kw("between") {
            let lo = self.literal()?;
            self.expect_kw("and")?;
            let hi = self.literal()?;
            (CondOp::Between, RawValue::Range(lo, hi))
        } else if self.eat_kw("like") {
            (CondOp::Like, RawValue::Literal(self.literal()?))
        } else if self.eat_kw("in") {
            (CondOp::In, RawValue::Subquery(self.subquery(depth)?))
        } else if self.eat_kw("not") {
            if self.eat_kw("in") {
                (CondOp::NotIn, RawValue::Subquery(self.subquery(depth)?))
            } else {
                return Err(self.unexpected("expected IN after NOT"));
            }
        } else {
            let op = match self.peek() {
                Some(Tok::Sym("=")) => CondOp::Eq,
                Some(Tok::Sym("!=")) => CondOp::Neq,
                Some(Tok::Sym("<")) => CondOp::Lt,
                Some(Tok::Sym(">")) => CondOp::Gt,
                Some(Tok::Sym("<=")) => CondOp::Le,
                Some(Tok::Sym(">=")) => CondOp::Ge,
                _ => return Err(self.unexpected("expected comparison operator")),
            };
            self.idx += 1;
            let value = if matches!(self.peek(), Some(Tok::Sym("("))) {
                RawValue::Subquery(self.subquery(depth)?)
            } else {
                RawValue::Literal(self.literal()?)
            };
            (op, value)
        };
        Ok(RawCondition { target, op, value })
    }
}

// ---- binding pass ----------------------------------------------------------

struct Scope {
    tables: Vec<usize>,
    names: HashMap<String, usize>,
}

impl Scope {
    fn resolve(&self, schema: &Schema, col: &RawColumn) -> Result<ColumnRef> {
        let display = match &col.qualifier {
            Some(q) => format!("{q}.{}", col.name),
            None => col.name.clone(),
        };
        match &col.qualifier {
            Some(q) => {
                let table = *self
                    .names
                    .get(&q.to_lowercase())
                    .ok_or_else(|| ForgeError::UnknownTable(q.clone()))?;
                schema
                    .find_column(table, &col.name)
                    .ok_or(ForgeError::UnknownColumn(display))
            }
            None => {
                let hits: Vec<ColumnRef> = self
                    .tables
                    .iter()
                    .filter_map(|&t| schema.find_column(t, &col.name))
                    .collect();
                match hits.as_slice() {
                    [one] => Ok(*one),
                    [] => Err(ForgeError::UnknownColumn(display)),
                    _ => Err(ForgeError::AmbiguousColumn(display)),
                }
            }
        }
    }

    fn expr(&self, schema: &Schema, e: &RawExpr) -> Result<AggExpr> {
        let column = e
            .column
            .as_ref()
            .map(|c| self.resolve(schema, c))
            .transpose()?;
        if column.is_none() && e.agg != Agg::None && e.agg != Agg::Count {
            return Err(syntax(e.pos, "only COUNT accepts *"));
        }
        Ok(AggExpr { agg: e.agg, column })
    }
}

fn bind_table(schema: &Schema, scope: &mut Scope, t: &RawTable) -> Result<usize> {
    let idx = schema
        .find_table(&t.name)
        .ok_or_else(|| ForgeError::UnknownTable(t.name.clone()))?;
    if scope.tables.contains(&idx) {
        return Err(ForgeError::InvalidQuery(format!(
            "table {} appears twice (at byte {})",
            t.name, t.pos
        )));
    }
    scope.tables.push(idx);
    for name in std::iter::once(&t.name).chain(&t.alias) {
        if scope.names.insert(name.to_lowercase(), idx).is_some() {
            return Err(ForgeError::InvalidQuery(format!("duplicate table alias {name}")));
        }
    }
    Ok(idx)
}

fn bind(schema: &Schema, raw: &RawQuery) -> Result<Query> {
    let mut scope = Scope {
        tables: Vec::new(),
        names: HashMap::new(),
    };
    let mut from = Vec::new();
    for t in &raw.from {
        from.push(bind_table(schema, &mut scope, t)?);
    }
    let mut joins = Vec::new();
    for (t, a, b) in &raw.joins {
        let table = bind_table(schema, &mut scope, t)?;
        joins.push((table, a, b));
    }
    let joins = joins
        .into_iter()
        .map(|(table, a, b)| {
            Ok(Join {
                table,
                on: (scope.resolve(schema, a)?, scope.resolve(schema, b)?),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let conditions = |list: &[RawCondition]| -> Result<Vec<Condition>> {
        list.iter()
            .map(|c| {
                let value = match &c.value {
                    RawValue::Literal(l) => CondValue::Literal(l.clone()),
                    RawValue::Range(lo, hi) => CondValue::Range(lo.clone(), hi.clone()),
                    RawValue::Subquery(q) => CondValue::Subquery(Box::new(bind(schema, q)?)),
                };
                Ok(Condition {
                    target: scope.expr(schema, &c.target)?,
                    op: c.op,
                    value,
                })
            })
            .collect()
    };

    let query = Query {
        select: raw
            .select
            .iter()
            .map(|e| scope.expr(schema, e))
            .collect::<Result<_>>()?,
        from,
        joins,
        where_: conditions(&raw.where_)?,
        group_by: raw
            .group_by
            .iter()
            .map(|e| scope.expr(schema, e))
            .collect::<Result<_>>()?,
        having: conditions(&raw.having)?,
        order_by: raw
            .order_by
            .as_ref()
            .map(|(e, d)| {
                Ok::<_, ForgeError>(OrderBy {
                    target: scope.expr(schema, e)?,
                    direction: *d,
                })
            })
            .transpose()?,
        limit: raw.limit,
    };
    Ok(query)
}

/// Parses `text` and binds it to `schema`. Keywords are case-insensitive;
/// table aliases are resolved away.
pub fn parse_sql(text: &str, schema: &Schema) -> Result<Query> {
    let toks = lex(text)?;
    let mut p = Parser {
        toks,
        idx: 0,
        end: text.len(),
    };
    let raw = p.query(0)?;
    p.eat_sym(";");
    if p.peek().is_some() {
        if p.is_kw("union") || p.is_kw("intersect") || p.is_kw("except") {
            return Err(p.unexpected("set operations are not supported"));
        }
        return Err(p.unexpected("expected end of query"));
    }
    let query = bind(schema, &raw)?;
    query.validate(schema)?;
    Ok(query)
}
