//! The supported SQL subset: AST, parser, renderer, grammar sampler,
//! multi-table composition and template questions.

mod ast;
mod compose;
mod parser;
mod render;
mod sampler;
mod synth;

pub use ast::{
    Agg, AggExpr, Clause, CondOp, CondValue, Condition, Direction, Join, Literal, OrderBy, Query,
    MAX_SUBQUERY_DEPTH,
};
pub use compose::compose_multitable;
pub use parser::parse_sql;
pub use render::render_sql;
pub use sampler::{sample_sql, GrammarConfig, SqlSampler};
pub use synth::synthesize_question;

#[cfg(test)]
mod tests;
