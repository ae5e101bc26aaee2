use std::ops::Range;

use serde::{Deserialize, Serialize};

use super::schema::{ColumnRef, Schema};
use super::Question;

pub const START_TOKEN: &str = "<s>";
pub const SEP_TOKEN: &str = "</s>";

/// Model input: `<s>` question `</s>` then each column followed by `</s>`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SerializedInput {
    pub tokens: Vec<String>,
    pub question_span: Range<usize>,
    /// Each column with the index of the separator right after its tokens.
    pub column_anchors: Vec<(ColumnRef, usize)>,
}

impl SerializedInput {
    pub fn question_len(&self) -> usize {
        self.question_span.len()
    }

    pub fn column_count(&self) -> usize {
        self.column_anchors.len()
    }

    /// Token range of column `j`'s name, excluding its separator.
    pub fn column_token_range(&self, j: usize) -> Range<usize> {
        let end = self.column_anchors[j].1;
        let start = if j == 0 {
            self.question_span.end + 1
        } else {
            self.column_anchors[j - 1].1 + 1
        };
        start..end
    }
}

/// Lays out the question and the schema columns in declaration order.
/// Table names are not serialized.
pub fn serialize_input(question: &Question, schema: &Schema) -> SerializedInput {
    let mut tokens = Vec::with_capacity(2 + question.tokens.len() + 2 * schema.column_count());
    tokens.push(START_TOKEN.to_string());
    tokens.extend(question.tokens.iter().cloned());
    let question_span = 1..tokens.len();
    tokens.push(SEP_TOKEN.to_string());

    let mut column_anchors = Vec::with_capacity(schema.column_count());
    for (cref, column) in schema.columns() {
        tokens.extend(column.tokens());
        column_anchors.push((cref, tokens.len()));
        tokens.push(SEP_TOKEN.to_string());
    }
    SerializedInput {
        tokens,
        question_span,
        column_anchors,
    }
}
