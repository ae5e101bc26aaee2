use serde::{Deserialize, Serialize};

use crate::deps::{DependencyEdge, DependencyGraph, DependencyType, Head, LIMIT_HEAD};
use crate::error::{ForgeError, Result};
use crate::model::{MentionStats, PretrainExample, Provenance, Question, Schema};
use crate::objectives::{MaskPlan, PerturbedExample};
use crate::sql::{parse_sql, render_sql};

/// Dependency edge as written to JSONL.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireEdge {
    /// `table.column` or `__limit__`.
    pub head: String,
    pub span: [usize; 2],
    pub label: DependencyType,
    pub score: f64,
}

/// Entity perturbation as written to JSONL.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireEpr {
    pub shuffled_tokens: Vec<String>,
    pub entity_spans: Vec<[usize; 2]>,
    pub permutation: Vec<usize>,
    pub recovery_target: Vec<usize>,
}

impl From<&PerturbedExample> for WireEpr {
    fn from(p: &PerturbedExample) -> Self {
        WireEpr {
            shuffled_tokens: p.shuffled_tokens.clone(),
            entity_spans: p
                .entity_spans_original
                .iter()
                .map(|s| [s.start, s.end])
                .collect(),
            permutation: p.permutation.clone(),
            recovery_target: p.recovery_target.clone(),
        }
    }
}

fn default_provenance() -> Provenance {
    Provenance::Real
}

/// One corpus line. Only the first four fields are required on input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusRecord {
    pub example_id: String,
    pub schema_id: String,
    pub question: String,
    pub sql: String,
    #[serde(default = "default_provenance")]
    pub provenance: Provenance,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub question_source: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dependencies: Option<Vec<WireEdge>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label_stats: Option<MentionStats>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub difficulty: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mask_plan: Option<MaskPlan>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epr: Option<WireEpr>,
}

fn head_name(head: Head, schema: &Schema) -> String {
    match head {
        Head::Column(c) => schema.qualified_name(c),
        Head::Limit => LIMIT_HEAD.to_string(),
    }
}

fn resolve_head(name: &str, schema: &Schema) -> Result<Head> {
    if name == LIMIT_HEAD {
        return Ok(Head::Limit);
    }
    schema
        .columns()
        .find(|(c, _)| schema.qualified_name(*c).eq_ignore_ascii_case(name))
        .map(|(c, _)| Head::Column(c))
        .ok_or_else(|| ForgeError::UnknownColumn(name.to_string()))
}

impl CorpusRecord {
    pub fn from_example(ex: &PretrainExample, schema: &Schema) -> Self {
        CorpusRecord {
            example_id: ex.example_id.clone(),
            schema_id: ex.schema_id.clone(),
            question: ex.question.raw.clone(),
            sql: render_sql(&ex.sql, schema),
            provenance: ex.provenance,
            question_source: (ex.provenance == Provenance::Sampled).then(|| "template".to_string()),
            dependencies: ex.dependencies.as_ref().map(|g| {
                g.edges
                    .iter()
                    .map(|e| WireEdge {
                        head: head_name(e.head, schema),
                        span: [e.span.start, e.span.end],
                        label: e.label,
                        score: e.score,
                    })
                    .collect()
            }),
            label_stats: ex.mention_stats,
            difficulty: ex.difficulty,
            mask_plan: None,
            epr: None,
        }
    }

    /// Parses the SQL against `schema` and resolves dependency heads.
    pub fn to_example(&self, schema: &Schema) -> Result<PretrainExample> {
        let sql = parse_sql(&self.sql, schema)?;
        let mut ex = PretrainExample::new(
            self.example_id.clone(),
            self.schema_id.clone(),
            Question::new(self.question.clone()),
            sql,
            self.provenance,
        );
        if let Some(edges) = &self.dependencies {
            let mut graph = DependencyGraph::default();
            for e in edges {
                graph.add(DependencyEdge {
                    head: resolve_head(&e.head, schema)?,
                    span: e.span[0]..e.span[1],
                    label: e.label,
                    score: e.score,
                });
            }
            ex.dependencies = Some(graph);
        }
        ex.difficulty = self.difficulty;
        ex.mention_stats = self.label_stats;
        ex.validate(schema)?;
        Ok(ex)
    }
}
