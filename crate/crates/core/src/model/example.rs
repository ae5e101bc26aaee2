use serde::{Deserialize, Serialize};

use super::{Question, Schema};
use crate::deps::{DependencyGraph, Head};
use crate::error::{ForgeError, Result};
use crate::sql::Query;

/// Where a question-SQL pair came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    /// Grammar-sampled SQL with a template question.
    Sampled,
    /// Ingested real-world pair.
    Real,
}

/// How many mention targets the labeler found in the question.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MentionStats {
    pub mentions: usize,
    pub unmatched: usize,
}

/// One corpus record.
#[derive(Debug, Clone, PartialEq)]
pub struct PretrainExample {
    pub example_id: String,
    pub schema_id: String,
    pub question: Question,
    pub sql: Query,
    /// `None` until the labeling stage has run.
    pub dependencies: Option<DependencyGraph>,
    pub difficulty: Option<f64>,
    pub provenance: Provenance,
    pub mention_stats: Option<MentionStats>,
}

impl PretrainExample {
    pub fn new(
        example_id: impl Into<String>,
        schema_id: impl Into<String>,
        question: Question,
        sql: Query,
        provenance: Provenance,
    ) -> Self {
        PretrainExample {
            example_id: example_id.into(),
            schema_id: schema_id.into(),
            question,
            sql,
            dependencies: None,
            difficulty: None,
            provenance,
            mention_stats: None,
        }
    }

    pub fn edges(&self) -> &[crate::deps::DependencyEdge] {
        self.dependencies.as_ref().map_or(&[], |g| g.edges.as_slice())
    }

    /// Every dependency head exists in `schema` and every span lies inside
    /// the question.
    pub fn validate(&self, schema: &Schema) -> Result<()> {
        if let Some(d) = self.difficulty {
            if !(0.0..=1.0).contains(&d) {
                return Err(ForgeError::contract(format!(
                    "{}: difficulty {d} outside [0, 1]",
                    self.example_id
                )));
            }
        }
        for edge in self.edges() {
            if let Head::Column(c) = edge.head {
                if schema.try_column(c).is_none() {
                    return Err(ForgeError::contract(format!(
                        "{}: dependency head [{}, {}] not in schema",
                        self.example_id, c.table, c.column
                    )));
                }
            }
            if edge.span.is_empty() || edge.span.end > self.question.len() {
                return Err(ForgeError::contract(format!(
                    "{}: dependency span {:?} outside question of {} tokens",
                    self.example_id,
                    edge.span,
                    self.question.len()
                )));
            }
        }
        Ok(())
    }
}
