//! Canonical data types, tokenization and input serialization.

mod example;
mod schema;
mod serialize;
mod tokenize;

use serde::{Deserialize, Serialize};

pub use example::{MentionStats, PretrainExample, Provenance};
pub(crate) use schema::RawSchema;
pub use schema::{Column, ColumnRef, DataType, Schema, Table};
pub use serialize::{serialize_input, SerializedInput, SEP_TOKEN, START_TOKEN};
pub use tokenize::{is_decimal_numeral, tokenize};

/// A natural-language question and its tokens.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Question {
    pub raw: String,
    pub tokens: Vec<String>,
}

impl Question {
    pub fn new(raw: impl Into<String>) -> Self {
        let raw = raw.into();
        let tokens = tokenize(&raw);
        Question { raw, tokens }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}
