use super::ast::{AggExpr, CondValue, Condition, Direction, Query};
use super::parser::RESERVED;
use crate::model::{ColumnRef, Schema};

fn ident(name: &str) -> String {
    let plain = name
        .chars()
        .next()
        .is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
        && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
        && !RESERVED.contains(&name.to_lowercase().as_str());
    if plain {
        name.to_string()
    } else {
        format!("`{}`", name.replace('`', "``"))
    }
}

fn column(schema: &Schema, c: ColumnRef) -> String {
    format!(
        "{}.{}",
        ident(schema.table_name(c.table)),
        ident(&schema.column(c).name)
    )
}

fn expr(schema: &Schema, e: &AggExpr) -> String {
    let inner = e.column.map_or_else(|| "*".to_string(), |c| column(schema, c));
    match e.agg.keyword() {
        Some(k) => format!("{k}({inner})"),
        None => inner,
    }
}

fn condition(schema: &Schema, c: &Condition) -> String {
    let lhs = expr(schema, &c.target);
    match (&c.value, c.op) {
        (CondValue::Range(lo, hi), _) => format!("{lhs} BETWEEN {lo} AND {hi}"),
        (CondValue::Literal(l), op) => format!("{lhs} {} {l}", op.symbol()),
        (CondValue::Subquery(q), op) => format!("{lhs} {} ({})", op.symbol(), render_sql(q, schema)),
    }
}

/// Canonical text: uppercase keywords, single spaces, table-qualified
/// columns. Identifiers that are not plain words are backquoted.
pub fn render_sql(query: &Query, schema: &Schema) -> String {
    let mut out = String::from("SELECT ");
    let items: Vec<String> = query.select.iter().map(|e| expr(schema, e)).collect();
    out.push_str(&items.join(", "));

    out.push_str(" FROM ");
    let from: Vec<String> = query
        .from
        .iter()
        .map(|&t| ident(schema.table_name(t)))
        .collect();
    out.push_str(&from.join(", "));
    for j in &query.joins {
        out.push_str(&format!(
            " JOIN {} ON {} = {}",
            ident(schema.table_name(j.table)),
            column(schema, j.on.0),
            column(schema, j.on.1)
        ));
    }

    let conds = |list: &[Condition]| -> String {
        list.iter()
            .map(|c| condition(schema, c))
            .collect::<Vec<_>>()
            .join(" AND ")
    };
    if !query.where_.is_empty() {
        out.push_str(" WHERE ");
        out.push_str(&conds(&query.where_));
    }
    if !query.group_by.is_empty() {
        let g: Vec<String> = query.group_by.iter().map(|e| expr(schema, e)).collect();
        out.push_str(" GROUP BY ");
        out.push_str(&g.join(", "));
    }
    if !query.having.is_empty() {
        out.push_str(" HAVING ");
        out.push_str(&conds(&query.having));
    }
    if let Some(o) = &query.order_by {
        let dir = match o.direction {
            Direction::Asc => "ASC",
            Direction::Desc => "DESC",
        };
        out.push_str(&format!(" ORDER BY {} {dir}", expr(schema, &o.target)));
    }
    if let Some(n) = query.limit {
        out.push_str(&format!(" LIMIT {n}"));
    }
    out
}
