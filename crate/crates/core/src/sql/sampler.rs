//! Top-down sampling from the SQL production rules.
//!
//! `SQLs -> SQL`, `SQL -> Select [Join] [Where] [GroupBy] [Having] [OrderBy]
//! [Limit]`, `Select -> SELECT A`, `Where -> WHERE Conditions`, ... Each
//! sample first picks a derivation pattern (which optional clauses expand)
//! uniformly among the valid non-empty patterns allowed by the config, then
//! expands every clause with uniformly drawn fan-out.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::ast::{
    Agg, AggExpr, Clause, CondOp, CondValue, Condition, Direction, Join, Literal, OrderBy, Query,
    MAX_SUBQUERY_DEPTH,
};
use crate::error::{ForgeError, Result};
use crate::model::{ColumnRef, DataType, Schema};
use crate::seed::rng_from_seed;

const SYNTHETIC_WORDS: &[&str] = &["alpha", "bravo", "delta", "echo", "kilo", "oscar", "sierra"];
const MAX_LIMIT: u64 = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GrammarConfig {
    pub max_select_items: usize,
    pub max_conditions: usize,
    pub max_joins: usize,
    pub subquery_probability: f64,
    pub clauses: BTreeSet<Clause>,
    /// Every SELECT item is MAX/MIN/AVG/SUM over a number column.
    pub force_numeric_agg: bool,
    pub seed: u64,
}

impl Default for GrammarConfig {
    fn default() -> Self {
        GrammarConfig {
            max_select_items: 3,
            max_conditions: 2,
            max_joins: 2,
            subquery_probability: 0.2,
            clauses: Clause::ALL.into_iter().collect(),
            force_numeric_agg: false,
            seed: 0,
        }
    }
}

impl GrammarConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_select_items == 0 || self.max_conditions == 0 {
            return Err(ForgeError::contract(
                "max_select_items and max_conditions must be at least 1",
            ));
        }
        if !(0.0..=1.0).contains(&self.subquery_probability) {
            return Err(ForgeError::contract("subquery_probability outside [0, 1]"));
        }
        if !self.clauses.contains(&Clause::Select) {
            return Err(ForgeError::contract("clause set must contain select"));
        }
        Ok(())
    }

    fn allows(&self, clause: Clause) -> bool {
        self.clauses.contains(&clause) && (clause != Clause::Join || self.max_joins > 0)
    }

    /// Valid derivation patterns: non-empty sets of optional clauses, with
    /// HAVING only alongside GROUP BY. A config allowing no optional clause
    /// yields the single pattern `Select`.
    fn patterns(&self) -> Vec<Vec<Clause>> {
        let optional: Vec<Clause> = Clause::ALL[1..]
            .iter()
            .copied()
            .filter(|c| self.allows(*c))
            .collect();
        let mut out = Vec::new();
        for mask in 1u32..(1 << optional.len()) {
            let set: Vec<Clause> = optional
                .iter()
                .enumerate()
                .filter(|(i, _)| mask & (1 << i) != 0)
                .map(|(_, c)| *c)
                .collect();
            if set.contains(&Clause::Having) && !set.contains(&Clause::GroupBy) {
                continue;
            }
            out.push(set);
        }
        if out.is_empty() {
            out.push(Vec::new());
        }
        out
    }
}

/// Seeded query sampler. Identical (schema, config) pairs produce identical
/// sample sequences.
pub struct SqlSampler {
    config: GrammarConfig,
    patterns: Vec<Vec<Clause>>,
    rng: ChaCha8Rng,
}

impl SqlSampler {
    pub fn new(config: GrammarConfig) -> Result<Self> {
        config.validate()?;
        let rng = rng_from_seed(config.seed);
        let patterns = config.patterns();
        Ok(SqlSampler {
            config,
            patterns,
            rng,
        })
    }

    pub fn config(&self) -> &GrammarConfig {
        &self.config
    }

    pub fn sample(&mut self, schema: &Schema) -> Result<Query> {
        if schema.column_count() == 0 {
            return Err(ForgeError::contract("schema has no columns"));
        }
        let numeric_tables: Vec<usize> = (0..schema.tables.len())
            .filter(|&t| has_number_column(schema, t))
            .collect();
        if self.config.force_numeric_agg && numeric_tables.is_empty() {
            return Err(ForgeError::Unsatisfiable(format!(
                "numeric aggregation forced but schema {} has no number columns",
                schema.schema_id
            )));
        }
        let pattern = self.patterns.choose(&mut self.rng).cloned().unwrap_or_default();
        let has = |c: Clause| pattern.contains(&c);

        let mut candidates: Vec<usize> = if self.config.force_numeric_agg {
            numeric_tables
        } else {
            (0..schema.tables.len()).collect()
        };
        if has(Clause::Join) {
            let joinable: Vec<usize> = candidates
                .iter()
                .copied()
                .filter(|&t| !join_options(schema, &[t]).is_empty())
                .collect();
            if !joinable.is_empty() {
                candidates = joinable;
            }
        }
        let root = *candidates.choose(&mut self.rng).expect("non-empty schema");
        let mut query = Query {
            from: vec![root],
            ..Query::default()
        };

        if has(Clause::Join) {
            let n = self.rng.gen_range(1..=self.config.max_joins);
            for _ in 0..n {
                let options = join_options(schema, &query.tables_in_scope());
                let Some(&(table, a, b)) = options.choose(&mut self.rng) else {
                    break;
                };
                query.joins.push(Join { table, on: (a, b) });
            }
        }
        let scope = scope_columns(schema, &query.tables_in_scope());

        let n_select = self.rng.gen_range(1..=self.config.max_select_items);
        for _ in 0..n_select {
            let item = self.select_item(schema, &scope);
            query.select.push(item);
        }
        if has(Clause::Where) {
            query.where_ = self.conditions(schema, &scope, 0);
        }
        if has(Clause::GroupBy) {
            let g = *scope.choose(&mut self.rng).expect("scope non-empty");
            query.group_by.push(AggExpr::column(g));
        }
        if has(Clause::Having) {
            let group = query.group_by[0].column.expect("group by column");
            let n = self.rng.gen_range(1..=self.config.max_conditions);
            for _ in 0..n {
                let c = self.having_condition(schema, &scope, group);
                query.having.push(c);
            }
        }
        if has(Clause::OrderBy) {
            let target = match query.group_by.first() {
                Some(g) => self.grouped_expr(schema, &scope, g.column.expect("group column")),
                None => AggExpr::column(*scope.choose(&mut self.rng).expect("scope non-empty")),
            };
            let direction = if self.rng.gen_bool(0.5) {
                Direction::Asc
            } else {
                Direction::Desc
            };
            query.order_by = Some(OrderBy { target, direction });
        }
        if has(Clause::Limit) {
            query.limit = Some(self.rng.gen_range(1..=MAX_LIMIT));
        }
        debug_assert!(query.validate(schema).is_ok(), "{:?}", query.validate(schema));
        Ok(query)
    }

    fn select_item(&mut self, schema: &Schema, scope: &[ColumnRef]) -> AggExpr {
        if self.config.force_numeric_agg {
            let numeric: Vec<ColumnRef> = scope
                .iter()
                .copied()
                .filter(|&c| schema.column(c).data_type == DataType::Number)
                .collect();
            let c = *numeric.choose(&mut self.rng).expect("root table has a number column");
            let agg = *[Agg::Max, Agg::Min, Agg::Avg, Agg::Sum]
                .choose(&mut self.rng)
                .expect("non-empty");
            return AggExpr::agg(agg, c);
        }
        // Uniform over the scope columns plus `*`.
        let k = self.rng.gen_range(0..=scope.len());
        if k == scope.len() {
            return if self.rng.gen_bool(0.5) {
                AggExpr::star()
            } else {
                AggExpr::count_star()
            };
        }
        let c = scope[k];
        let aggs: &[Agg] = match schema.column(c).data_type {
            DataType::Number => &Agg::ALL,
            DataType::Text => &[Agg::None, Agg::Count],
        };
        AggExpr::agg(*aggs.choose(&mut self.rng).expect("non-empty"), c)
    }

    /// Expressions meaningful next to GROUP BY `group`: the group column
    /// itself, COUNT(*), COUNT of any column, and numeric aggregations.
    fn grouped_expr(&mut self, schema: &Schema, scope: &[ColumnRef], group: ColumnRef) -> AggExpr {
        let mut options = vec![AggExpr::column(group), AggExpr::count_star()];
        for &c in scope {
            options.push(AggExpr::agg(Agg::Count, c));
            if schema.column(c).data_type == DataType::Number {
                for agg in [Agg::Max, Agg::Min, Agg::Avg, Agg::Sum] {
                    options.push(AggExpr::agg(agg, c));
                }
            }
        }
        *options.choose(&mut self.rng).expect("non-empty")
    }

    fn having_condition(&mut self, schema: &Schema, scope: &[ColumnRef], group: ColumnRef) -> Condition {
        let target = self.grouped_expr(schema, scope, group);
        let ty = target.value_type(schema).expect("typed target");
        let (op, value) = match ty {
            DataType::Number => {
                let op = *[
                    CondOp::Eq,
                    CondOp::Neq,
                    CondOp::Lt,
                    CondOp::Gt,
                    CondOp::Le,
                    CondOp::Ge,
                    CondOp::Between,
                ]
                .choose(&mut self.rng)
                .expect("non-empty");
                let mut lit = || match (target.agg, target.column) {
                    (Agg::Count, _) | (_, None) => {
                        Literal::Number(self.rng.gen_range(1..=MAX_LIMIT).to_string())
                    }
                    (_, Some(c)) => self.literal(schema, c),
                };
                let value = if op == CondOp::Between {
                    let (lo, hi) = ordered(lit(), lit());
                    CondValue::Range(lo, hi)
                } else {
                    CondValue::Literal(lit())
                };
                (op, value)
            }
            DataType::Text => self.text_condition(schema, target.column.expect("text column")),
        };
        Condition { target, op, value }
    }

    fn text_condition(&mut self, schema: &Schema, c: ColumnRef) -> (CondOp, CondValue) {
        let op = *[CondOp::Eq, CondOp::Neq, CondOp::Like]
            .choose(&mut self.rng)
            .expect("non-empty");
        let lit = self.literal(schema, c);
        let value = if op == CondOp::Like {
            Literal::Text(format!("%{}%", lit.text()))
        } else {
            lit
        };
        (op, CondValue::Literal(value))
    }

    fn conditions(&mut self, schema: &Schema, scope: &[ColumnRef], depth: usize) -> Vec<Condition> {
        let n = self.rng.gen_range(1..=self.config.max_conditions);
        (0..n)
            .map(|_| {
                let c = *scope.choose(&mut self.rng).expect("scope non-empty");
                self.where_condition(schema, c, depth)
            })
            .collect()
    }

    fn where_condition(&mut self, schema: &Schema, c: ColumnRef, depth: usize) -> Condition {
        let target = AggExpr::column(c);
        let ty = schema.column(c).data_type;
        if depth < MAX_SUBQUERY_DEPTH && self.rng.gen_bool(self.config.subquery_probability) {
            let op = if self.rng.gen_bool(0.5) {
                CondOp::In
            } else {
                CondOp::NotIn
            };
            let sub = self.subquery(schema, ty, depth + 1);
            return Condition {
                target,
                op,
                value: CondValue::Subquery(Box::new(sub)),
            };
        }
        let (op, value) = match ty {
            DataType::Number => {
                let op = *[
                    CondOp::Eq,
                    CondOp::Neq,
                    CondOp::Lt,
                    CondOp::Gt,
                    CondOp::Le,
                    CondOp::Ge,
                    CondOp::Between,
                ]
                .choose(&mut self.rng)
                .expect("non-empty");
                let value = if op == CondOp::Between {
                    let (lo, hi) = ordered(self.literal(schema, c), self.literal(schema, c));
                    CondValue::Range(lo, hi)
                } else {
                    CondValue::Literal(self.literal(schema, c))
                };
                (op, value)
            }
            DataType::Text => self.text_condition(schema, c),
        };
        Condition { target, op, value }
    }

    /// `SELECT col FROM table [WHERE ...]` with `col` of the requested type.
    fn subquery(&mut self, schema: &Schema, ty: DataType, depth: usize) -> Query {
        let options: Vec<ColumnRef> = schema
            .columns()
            .filter(|(_, col)| col.data_type == ty)
            .map(|(c, _)| c)
            .collect();
        let c = *options.choose(&mut self.rng).expect("outer column has this type");
        let mut q = Query {
            select: vec![AggExpr::column(c)],
            from: vec![c.table],
            ..Query::default()
        };
        if self.config.allows(Clause::Where) && self.rng.gen_bool(0.5) {
            let scope = scope_columns(schema, &[c.table]);
            q.where_ = self.conditions(schema, &scope, depth);
        }
        q
    }

    /// A value from the column's pool, or a synthetic literal of its type.
    fn literal(&mut self, schema: &Schema, c: ColumnRef) -> Literal {
        let column = schema.column(c);
        let picked = column.values.choose(&mut self.rng).cloned();
        match (column.data_type, picked) {
            (DataType::Number, Some(v)) => Literal::Number(v),
            (DataType::Number, None) => Literal::Number(self.rng.gen_range(0..=100).to_string()),
            (DataType::Text, Some(v)) => Literal::Text(v),
            (DataType::Text, None) => Literal::Text(
                SYNTHETIC_WORDS
                    .choose(&mut self.rng)
                    .expect("non-empty")
                    .to_string(),
            ),
        }
    }
}

/// Samples one query from a fresh sampler seeded by `config.seed`.
pub fn sample_sql(schema: &Schema, config: &GrammarConfig) -> Result<Query> {
    SqlSampler::new(config.clone())?.sample(schema)
}

fn has_number_column(schema: &Schema, table: usize) -> bool {
    schema.tables[table]
        .columns
        .iter()
        .any(|c| c.data_type == DataType::Number)
}

fn scope_columns(schema: &Schema, tables: &[usize]) -> Vec<ColumnRef> {
    tables
        .iter()
        .flat_map(|&t| (0..schema.tables[t].columns.len()).map(move |c| ColumnRef::new(t, c)))
        .collect()
}

/// Every (new table, new-table column, in-scope column) that may extend the
/// join chain.
fn join_options(schema: &Schema, scope: &[usize]) -> Vec<(usize, ColumnRef, ColumnRef)> {
    let mut out = Vec::new();
    for t in (0..schema.tables.len()).filter(|t| !scope.contains(t)) {
        for a in scope_columns(schema, &[t]) {
            for b in scope_columns(schema, scope) {
                if schema.joinable(a, b) {
                    out.push((t, a, b));
                }
            }
        }
    }
    out
}

fn ordered(a: Literal, b: Literal) -> (Literal, Literal) {
    let num = |l: &Literal| l.text().parse::<f64>().unwrap_or(0.0);
    if num(&a) <= num(&b) {
        (a, b)
    } else {
        (b, a)
    }
}
