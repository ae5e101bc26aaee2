//! Template question realization: a deterministic stand-in for a learned
//! SQL-to-text generator. Every selected column name and every condition
//! value appears verbatim in the output.

use super::ast::{Agg, AggExpr, CondOp, CondValue, Condition, Direction, Query};
use crate::model::Schema;

fn expr_phrase(schema: &Schema, e: &AggExpr) -> String {
    let col = e.column.map(|c| schema.column(c).name.clone());
    match (e.agg, col) {
        (Agg::None, Some(c)) => c,
        (Agg::None, None) => "all rows".to_string(),
        (Agg::Count, None) => "the number of rows".to_string(),
        (agg, None) => format!("the {agg:?} of rows").to_lowercase(),
        (Agg::Max, Some(c)) => format!("the maximum {c}"),
        (Agg::Min, Some(c)) => format!("the minimum {c}"),
        (Agg::Count, Some(c)) => format!("the number of {c}"),
        (Agg::Avg, Some(c)) => format!("the average {c}"),
        (Agg::Sum, Some(c)) => format!("the total {c}"),
    }
}

fn condition_phrase(schema: &Schema, c: &Condition) -> String {
    let lhs = expr_phrase(schema, &c.target);
    let rhs = match (&c.value, c.op) {
        (CondValue::Range(lo, hi), _) => format!("is between {} and {}", lo.text(), hi.text()),
        (CondValue::Literal(l), CondOp::Like) => format!("contains {}", l.text().trim_matches('%')),
        (CondValue::Literal(l), op) => {
            let verb = match op {
                CondOp::Eq => "is",
                CondOp::Neq => "is not",
                CondOp::Lt => "is less than",
                CondOp::Gt => "is greater than",
                CondOp::Le => "is at most",
                CondOp::Ge => "is at least",
                _ => "is",
            };
            format!("{verb} {}", l.text())
        }
        (CondValue::Subquery(q), op) => {
            let verb = match op {
                CondOp::In => "is one of",
                CondOp::NotIn => "is not one of",
                CondOp::Eq => "equals",
                CondOp::Neq => "differs from",
                CondOp::Lt => "is less than",
                CondOp::Gt => "is greater than",
                CondOp::Le => "is at most",
                _ => "is at least",
            };
            format!("{verb} {}", body(schema, q))
        }
    };
    format!("{lhs} {rhs}")
}

fn body(schema: &Schema, q: &Query) -> String {
    let items: Vec<String> = q.select.iter().map(|e| expr_phrase(schema, e)).collect();
    let tables: Vec<&str> = q
        .tables_in_scope()
        .into_iter()
        .map(|t| schema.table_name(t))
        .collect();
    let mut out = format!("{} of {}", items.join(" and "), tables.join(" and "));

    let conds = |list: &[Condition]| {
        list.iter()
            .map(|c| condition_phrase(schema, c))
            .collect::<Vec<_>>()
            .join(" and ")
    };
    if !q.where_.is_empty() {
        out.push_str(" where ");
        out.push_str(&conds(&q.where_));
    }
    if !q.group_by.is_empty() {
        let g: Vec<String> = q.group_by.iter().map(|e| expr_phrase(schema, e)).collect();
        out.push_str(" for each ");
        out.push_str(&g.join(" and "));
    }
    if !q.having.is_empty() {
        out.push_str(" having ");
        out.push_str(&conds(&q.having));
    }
    let dir = |d: Direction| match d {
        Direction::Asc => "ascending",
        Direction::Desc => "descending",
    };
    match (&q.order_by, q.limit) {
        (Some(o), Some(n)) => out.push_str(&format!(
            " with the top {n} by {} {}",
            expr_phrase(schema, &o.target),
            dir(o.direction)
        )),
        (Some(o), None) => out.push_str(&format!(
            " ordered by {} {}",
            expr_phrase(schema, &o.target),
            dir(o.direction)
        )),
        (None, Some(n)) => out.push_str(&format!(" limited to {n} rows")),
        (None, None) => {}
    }
    out
}

pub fn synthesize_question(query: &Query, schema: &Schema) -> String {
    format!("show {}", body(schema, query))
}
