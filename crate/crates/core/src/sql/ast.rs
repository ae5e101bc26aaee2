use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{ForgeError, Result};
use crate::model::{is_decimal_numeral, ColumnRef, DataType, Schema};

/// Deepest allowed subquery nesting; the outermost query sits at depth 0.
pub const MAX_SUBQUERY_DEPTH: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Agg {
    None,
    Max,
    Min,
    Count,
    Avg,
    Sum,
}

impl Agg {
    pub const ALL: [Agg; 6] = [Agg::None, Agg::Max, Agg::Min, Agg::Count, Agg::Avg, Agg::Sum];

    pub fn keyword(self) -> Option<&'static str> {
        match self {
            Agg::None => None,
            Agg::Max => Some("MAX"),
            Agg::Min => Some("MIN"),
            Agg::Count => Some("COUNT"),
            Agg::Avg => Some("AVG"),
            Agg::Sum => Some("SUM"),
        }
    }

    pub fn from_keyword(word: &str) -> Option<Agg> {
        Agg::ALL
            .into_iter()
            .find(|a| a.keyword().is_some_and(|k| k.eq_ignore_ascii_case(word)))
    }

    /// MAX, MIN, AVG and SUM only make sense over numbers.
    pub fn is_numeric(self) -> bool {
        matches!(self, Agg::Max | Agg::Min | Agg::Avg | Agg::Sum)
    }
}

/// A column (or `*` when `column` is `None`) under an optional aggregation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct AggExpr {
    pub agg: Agg,
    pub column: Option<ColumnRef>,
}

impl AggExpr {
    pub fn column(column: ColumnRef) -> Self {
        AggExpr {
            agg: Agg::None,
            column: Some(column),
        }
    }

    pub fn agg(agg: Agg, column: ColumnRef) -> Self {
        AggExpr {
            agg,
            column: Some(column),
        }
    }

    pub fn star() -> Self {
        AggExpr {
            agg: Agg::None,
            column: None,
        }
    }

    pub fn count_star() -> Self {
        AggExpr {
            agg: Agg::Count,
            column: None,
        }
    }

    /// Type of the value this expression produces.
    pub fn value_type(&self, schema: &Schema) -> Option<DataType> {
        match (self.agg, self.column) {
            (Agg::Count | Agg::Avg | Agg::Sum, _) => Some(DataType::Number),
            (_, Some(c)) => Some(schema.column(c).data_type),
            (_, None) => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum CondOp {
    Eq,
    Neq,
    Lt,
    Gt,
    Le,
    Ge,
    Like,
    Between,
    In,
    NotIn,
}

impl CondOp {
    pub const ALL: [CondOp; 10] = [
        CondOp::Eq,
        CondOp::Neq,
        CondOp::Lt,
        CondOp::Gt,
        CondOp::Le,
        CondOp::Ge,
        CondOp::Like,
        CondOp::Between,
        CondOp::In,
        CondOp::NotIn,
    ];

    pub fn is_comparison(self) -> bool {
        matches!(
            self,
            CondOp::Eq | CondOp::Neq | CondOp::Lt | CondOp::Gt | CondOp::Le | CondOp::Ge
        )
    }

    pub fn symbol(self) -> &'static str {
        match self {
            CondOp::Eq => "=",
            CondOp::Neq => "!=",
            CondOp::Lt => "<",
            CondOp::Gt => ">",
            CondOp::Le => "<=",
            CondOp::Ge => ">=",
            CondOp::Like => "LIKE",
            CondOp::Between => "BETWEEN",
            CondOp::In => "IN",
            CondOp::NotIn => "NOT IN",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Literal {
    /// Decimal numeral, kept as written.
    Number(String),
    Text(String),
}

impl Literal {
    pub fn data_type(&self) -> DataType {
        match self {
            Literal::Number(_) => DataType::Number,
            Literal::Text(_) => DataType::Text,
        }
    }

    pub fn text(&self) -> &str {
        match self {
            Literal::Number(s) | Literal::Text(s) => s,
        }
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Literal::Number(n) => f.write_str(n),
            Literal::Text(t) => write!(f, "'{}'", t.replace('\'', "''")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CondValue {
    Literal(Literal),
    /// Bounds of a BETWEEN.
    Range(Literal, Literal),
    Subquery(Box<Query>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Condition {
    pub target: AggExpr,
    pub op: CondOp,
    pub value: CondValue,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Join {
    pub table: usize,
    pub on: (ColumnRef, ColumnRef),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Direction {
    Asc,
    Desc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OrderBy {
    pub target: AggExpr,
    pub direction: Direction,
}

/// SQL clause families, matching the keyword inventory of the dependency
/// types.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Clause {
    Select,
    Join,
    Where,
    GroupBy,
    Having,
    OrderBy,
    Limit,
}

impl Clause {
    pub const ALL: [Clause; 7] = [
        Clause::Select,
        Clause::Join,
        Clause::Where,
        Clause::GroupBy,
        Clause::Having,
        Clause::OrderBy,
        Clause::Limit,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Clause::Select => "select",
            Clause::Join => "join",
            Clause::Where => "where",
            Clause::GroupBy => "group_by",
            Clause::Having => "having",
            Clause::OrderBy => "order_by",
            Clause::Limit => "limit",
        }
    }

    pub fn from_name(name: &str) -> Option<Clause> {
        let norm = name.trim().to_lowercase().replace([' ', '-'], "_");
        Clause::ALL.into_iter().find(|c| c.name() == norm)
    }
}

/// Typed AST for the supported SQL subset. Table and column references are
/// indices into the schema the query was bound against.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Query {
    pub select: Vec<AggExpr>,
    pub from: Vec<usize>,
    pub joins: Vec<Join>,
    pub where_: Vec<Condition>,
    pub group_by: Vec<AggExpr>,
    pub having: Vec<Condition>,
    pub order_by: Option<OrderBy>,
    pub limit: Option<u64>,
}

impl Query {
    /// Tables visible to column references: FROM tables then joined tables.
    pub fn tables_in_scope(&self) -> Vec<usize> {
        self.from
            .iter()
            .copied()
            .chain(self.joins.iter().map(|j| j.table))
            .collect()
    }

    /// Clause families present at this level, excluding subqueries.
    pub fn clauses(&self) -> Vec<Clause> {
        let mut out = vec![Clause::Select];
        if !self.joins.is_empty() {
            out.push(Clause::Join);
        }
        if !self.where_.is_empty() {
            out.push(Clause::Where);
        }
        if !self.group_by.is_empty() {
            out.push(Clause::GroupBy);
        }
        if !self.having.is_empty() {
            out.push(Clause::Having);
        }
        if self.order_by.is_some() {
            out.push(Clause::OrderBy);
        }
        if self.limit.is_some() {
            out.push(Clause::Limit);
        }
        out
    }

    /// Direct subqueries, in WHERE then HAVING order.
    pub fn subqueries(&self) -> impl Iterator<Item = &Query> {
        self.where_
            .iter()
            .chain(&self.having)
            .filter_map(|c| match &c.value {
                CondValue::Subquery(q) => Some(q.as_ref()),
                _ => None,
            })
    }

    /// This query and every nested subquery, depth first.
    pub fn walk(&self) -> Vec<&Query> {
        let mut out = vec![self];
        for sub in self.subqueries() {
            out.extend(sub.walk());
        }
        out
    }

    /// Nesting depth: 0 for a query without subqueries.
    pub fn depth(&self) -> usize {
        self.subqueries().map(|q| q.depth() + 1).max().unwrap_or(0)
    }

    /// Whether any item in the SELECT list carries an aggregation.
    pub fn select_aggregation(&self) -> Agg {
        self.select
            .iter()
            .map(|s| s.agg)
            .find(|a| *a != Agg::None)
            .unwrap_or(Agg::None)
    }

    /// Checks every structural invariant against `schema`.
    pub fn validate(&self, schema: &Schema) -> Result<()> {
        if self.depth() > MAX_SUBQUERY_DEPTH {
            return Err(ForgeError::NestingTooDeep {
                max: MAX_SUBQUERY_DEPTH,
            });
        }
        self.validate_level(schema)
    }

    fn validate_level(&self, schema: &Schema) -> Result<()> {
        let invalid = |m: String| Err(ForgeError::InvalidQuery(m));
        if self.select.is_empty() {
            return invalid("empty SELECT list".into());
        }
        if self.from.is_empty() {
            return invalid("empty FROM list".into());
        }
        let scope = self.tables_in_scope();
        for (i, t) in scope.iter().enumerate() {
            if *t >= schema.tables.len() {
                return Err(ForgeError::UnknownTable(format!("#{t}")));
            }
            if scope[..i].contains(t) {
                return invalid(format!("table {} appears twice", schema.table_name(*t)));
            }
        }
        let in_scope = |c: ColumnRef| -> Result<()> {
            if schema.try_column(c).is_none() {
                return Err(ForgeError::UnknownColumn(format!("[{}, {}]", c.table, c.column)));
            }
            if !scope.contains(&c.table) {
                return Err(ForgeError::UnknownColumn(format!(
                    "{} (table not in scope)",
                    schema.qualified_name(c)
                )));
            }
            Ok(())
        };
        let check_expr = |e: &AggExpr, star_ok: bool| -> Result<()> {
            match e.column {
                Some(c) => in_scope(c),
                None if e.agg == Agg::Count || (star_ok && e.agg == Agg::None) => Ok(()),
                None => invalid(format!("{:?}(*) is not allowed", e.agg)),
            }
        };

        for item in &self.select {
            check_expr(item, true)?;
        }
        for (k, join) in self.joins.iter().enumerate() {
            let earlier: Vec<usize> = self
                .from
                .iter()
                .copied()
                .chain(self.joins[..k].iter().map(|j| j.table))
                .collect();
            let (a, b) = join.on;
            in_scope(a)?;
            in_scope(b)?;
            let links = (a.table == join.table && earlier.contains(&b.table))
                || (b.table == join.table && earlier.contains(&a.table));
            if !links || !schema.joinable(a, b) {
                return invalid(format!(
                    "JOIN {} ON {} = {} does not follow a key or shared column name",
                    schema.table_name(join.table),
                    schema.qualified_name(a),
                    schema.qualified_name(b)
                ));
            }
        }
        for cond in &self.where_ {
            if cond.target.agg != Agg::None || cond.target.column.is_none() {
                return invalid("aggregation in WHERE".into());
            }
            self.validate_condition(cond, schema, &check_expr)?;
        }
        for g in &self.group_by {
            if g.column.is_none() {
                return invalid("GROUP BY *".into());
            }
            check_expr(g, false)?;
        }
        if !self.having.is_empty() && self.group_by.is_empty() {
            return invalid("HAVING without GROUP BY".into());
        }
        for cond in &self.having {
            self.validate_condition(cond, schema, &check_expr)?;
        }
        if let Some(o) = &self.order_by {
            check_expr(&o.target, false)?;
        }
        for sub in self.subqueries() {
            sub.validate_level(schema)?;
        }
        Ok(())
    }

    fn validate_condition(
        &self,
        cond: &Condition,
        schema: &Schema,
        check_expr: &dyn Fn(&AggExpr, bool) -> Result<()>,
    ) -> Result<()> {
        check_expr(&cond.target, false)?;
        let expected = cond
            .target
            .value_type(schema)
            .ok_or_else(|| ForgeError::InvalidQuery("untyped condition target".into()))?;
        let check_lit = |lit: &Literal| -> Result<()> {
            if lit.data_type() != expected {
                return Err(ForgeError::TypeMismatch(format!(
                    "{lit} compared with a {expected:?} expression"
                )));
            }
            if let Literal::Number(n) = lit {
                if !is_decimal_numeral(n) {
                    return Err(ForgeError::TypeMismatch(format!("{n:?} is not a numeral")));
                }
            }
            Ok(())
        };
        match (&cond.value, cond.op) {
            (CondValue::Range(lo, hi), CondOp::Between) => {
                check_lit(lo)?;
                check_lit(hi)
            }
            (_, CondOp::Between) => Err(ForgeError::InvalidQuery(
                "BETWEEN needs exactly two literals".into(),
            )),
            (CondValue::Literal(lit), CondOp::Like) => {
                if expected != DataType::Text {
                    return Err(ForgeError::TypeMismatch("LIKE on a number expression".into()));
                }
                check_lit(lit)
            }
            (CondValue::Literal(lit), op) if op.is_comparison() => check_lit(lit),
            (CondValue::Subquery(sub), op) if op.is_comparison() || matches!(op, CondOp::In | CondOp::NotIn) => {
                if sub.select.len() != 1 {
                    return Err(ForgeError::InvalidQuery(
                        "subquery must select exactly one expression".into(),
                    ));
                }
                Ok(())
            }
            (_, op) => Err(ForgeError::InvalidQuery(format!(
                "{} with an incompatible operand",
                op.symbol()
            ))),
        }
    }
}
