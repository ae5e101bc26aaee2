use serde::{Deserialize, Serialize};

use super::types::DependencyType;
use crate::error::{ForgeError, Result};
use crate::model::ColumnRef;
use crate::sql::{Agg, AggExpr, Clause, CondOp, CondValue, Condition, Direction, Literal, Query};

/// Why a column is mentioned by a query.
#[derive(Debug, Clone, PartialEq)]
pub struct MentionRecord {
    /// `None` only for the LIMIT pseudo-record.
    pub column: Option<ColumnRef>,
    pub clause: Clause,
    pub agg: Agg,
    pub op: Option<CondOp>,
    pub direction: Option<Direction>,
    pub values: Vec<Literal>,
}

impl MentionRecord {
    fn new(column: Option<ColumnRef>, clause: Clause, agg: Agg) -> Self {
        MentionRecord {
            column,
            clause,
            agg,
            op: None,
            direction: None,
            values: Vec::new(),
        }
    }
}

/// The kind of question span matched for a mention.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpanKind {
    Name,
    AggTrigger,
    OpTrigger,
    OrderTrigger,
    Value,
}

fn condition_record(clause: Clause, cond: &Condition) -> Option<MentionRecord> {
    let column = cond.target.column?;
    let mut r = MentionRecord::new(Some(column), clause, cond.target.agg);
    r.op = Some(cond.op);
    r.values = match &cond.value {
        CondValue::Literal(Literal::Text(t)) if cond.op == CondOp::Like => {
            vec![Literal::Text(t.trim_matches('%').to_string())]
        }
        CondValue::Literal(l) => vec![l.clone()],
        CondValue::Range(lo, hi) => vec![lo.clone(), hi.clone()],
        CondValue::Subquery(_) => Vec::new(),
    };
    Some(r)
}

fn expr_record(clause: Clause, e: &AggExpr, agg: Agg) -> Option<MentionRecord> {
    e.column.map(|c| MentionRecord::new(Some(c), clause, agg))
}

/// One record per (column, clause role) occurrence, outer query first, then
/// subqueries depth first. `*` yields no record. A GROUP BY column without
/// its own aggregation inherits the aggregation of the SELECT list.
pub fn extract_mentions(query: &Query) -> Vec<MentionRecord> {
    let mut out = Vec::new();
    for q in query.walk() {
        for item in &q.select {
            out.extend(expr_record(Clause::Select, item, item.agg));
        }
        for join in &q.joins {
            out.push(MentionRecord::new(Some(join.on.0), Clause::Join, Agg::None));
            out.push(MentionRecord::new(Some(join.on.1), Clause::Join, Agg::None));
        }
        for cond in &q.where_ {
            out.extend(condition_record(Clause::Where, cond));
        }
        for g in &q.group_by {
            let agg = if g.agg != Agg::None {
                g.agg
            } else {
                q.select_aggregation()
            };
            out.extend(expr_record(Clause::GroupBy, g, agg));
        }
        for cond in &q.having {
            out.extend(condition_record(Clause::Having, cond));
        }
        if let Some(o) = &q.order_by {
            if let Some(mut r) = expr_record(Clause::OrderBy, &o.target, o.target.agg) {
                r.direction = Some(o.direction);
                out.push(r);
            }
        }
        if let Some(n) = q.limit {
            let mut r = MentionRecord::new(None, Clause::Limit, Agg::None);
            r.values.push(Literal::Number(n.to_string()));
            out.push(r);
        }
    }
    out
}

/// Maps a mention and the kind of span found for it to a dependency label.
pub fn classify_mention(record: &MentionRecord, kind: SpanKind) -> Result<DependencyType> {
    use DependencyType as D;
    let has_agg = record.agg != Agg::None;
    let label = match (record.clause, kind) {
        (Clause::Select, SpanKind::Name) if has_agg => D::SelectAgg,
        (Clause::Select, SpanKind::Name) => D::SelectMention,
        (Clause::Select, SpanKind::AggTrigger) if has_agg => D::SelectAgg,
        (Clause::Join, SpanKind::Name) => D::JoinMention,
        (Clause::Where, SpanKind::Name) => D::WhereMention,
        (Clause::Where, SpanKind::OpTrigger) if record.op.is_some() => D::WhereOp,
        (Clause::Where, SpanKind::Value) if !record.values.is_empty() => D::WhereValue,
        (Clause::GroupBy, SpanKind::Name) if has_agg => D::GroupByAgg,
        (Clause::GroupBy, SpanKind::Name) => D::GroupByMention,
        (Clause::GroupBy, SpanKind::AggTrigger) if has_agg => D::GroupByAgg,
        (Clause::Having, SpanKind::Name) if has_agg => D::HavingAgg,
        (Clause::Having, SpanKind::Name) => D::HavingMention,
        (Clause::Having, SpanKind::AggTrigger) if has_agg => D::HavingAgg,
        (Clause::Having, SpanKind::OpTrigger) if record.op.is_some() => D::HavingOp,
        (Clause::Having, SpanKind::Value) if !record.values.is_empty() => D::HavingValue,
        (Clause::OrderBy, SpanKind::Name) if has_agg => D::OrderByAgg,
        (Clause::OrderBy, SpanKind::Name) => D::OrderByMention,
        (Clause::OrderBy, SpanKind::AggTrigger) if has_agg => D::OrderByAgg,
        (Clause::OrderBy, SpanKind::OrderTrigger) if record.direction.is_some() => D::OrderByOrder,
        (Clause::Limit, SpanKind::Value) if !record.values.is_empty() => D::LimitValue,
        (clause, kind) => {
            return Err(ForgeError::contract(format!(
                "span kind {kind:?} is incompatible with a {clause:?} mention (agg {:?})",
                record.agg
            )))
        }
    };
    Ok(label)
}
