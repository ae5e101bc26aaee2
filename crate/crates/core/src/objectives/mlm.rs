use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::check_probability;
use crate::error::Result;
use crate::model::{ColumnRef, PretrainExample, Schema, SerializedInput};
use crate::seed::{derive_seed, rng_from_seed};

pub const MASK_TOKEN: &str = "<mask>";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnReplacement {
    pub column: ColumnRef,
    /// Index of the replaced token within the column name's tokens.
    pub token_index: usize,
    pub replacement: String,
    pub original: String,
}

/// Which question tokens are masked and which column-name tokens are
/// swapped for cell-value tokens.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct MaskPlan {
    pub masked_question_positions: Vec<usize>,
    pub column_replacements: Vec<ColumnReplacement>,
}

impl MaskPlan {
    pub fn is_empty(&self) -> bool {
        self.masked_question_positions.is_empty() && self.column_replacements.is_empty()
    }

    /// Corrupted token sequence: masked question positions become
    /// [`MASK_TOKEN`], replaced column tokens take their replacement.
    pub fn apply(&self, input: &SerializedInput) -> Vec<String> {
        let mut tokens = input.tokens.clone();
        for &p in &self.masked_question_positions {
            tokens[input.question_span.start + p] = MASK_TOKEN.to_string();
        }
        for r in &self.column_replacements {
            let j = input
                .column_anchors
                .iter()
                .position(|(c, _)| *c == r.column)
                .expect("replacement column is serialized");
            let range = input.column_token_range(j);
            tokens[range.start + r.token_index] = r.replacement.clone();
        }
        tokens
    }

    /// Positions in the serialized sequence whose original token is a
    /// recovery target, paired with that token.
    pub fn targets(&self, input: &SerializedInput) -> Vec<(usize, String)> {
        let mut out: Vec<(usize, String)> = self
            .masked_question_positions
            .iter()
            .map(|&p| {
                let pos = input.question_span.start + p;
                (pos, input.tokens[pos].clone())
            })
            .collect();
        for r in &self.column_replacements {
            let j = input
                .column_anchors
                .iter()
                .position(|(c, _)| *c == r.column)
                .expect("replacement column is serialized");
            out.push((input.column_token_range(j).start + r.token_index, r.original.clone()));
        }
        out
    }
}

/// Each question token is masked independently with probability `ratio`.
pub fn plan_mlm(example: &PretrainExample, ratio: f64, seed: u64) -> Result<MaskPlan> {
    check_probability("mask ratio", ratio)?;
    let mut rng = rng_from_seed(seed);
    let masked_question_positions = (0..example.question.len())
        .filter(|_| rng.gen_bool(ratio))
        .collect();
    Ok(MaskPlan {
        masked_question_positions,
        column_replacements: Vec::new(),
    })
}

/// Each column-name token is replaced, with probability `prob`, by a token
/// drawn uniformly from the tokenized cell values of the same column.
/// Columns without values are never replaced.
pub fn plan_value_replacement(schema: &Schema, prob: f64, seed: u64) -> Result<MaskPlan> {
    check_probability("value replacement probability", prob)?;
    let mut rng = rng_from_seed(seed);
    let mut column_replacements = Vec::new();
    for (column, col) in schema.columns() {
        let pool = col.value_tokens();
        if pool.is_empty() {
            continue;
        }
        for (token_index, original) in col.tokens().into_iter().enumerate() {
            if rng.gen_bool(prob) {
                let replacement = pool.choose(&mut rng).expect("non-empty pool").clone();
                column_replacements.push(ColumnReplacement {
                    column,
                    token_index,
                    replacement,
                    original,
                });
            }
        }
    }
    Ok(MaskPlan {
        masked_question_positions: Vec::new(),
        column_replacements,
    })
}

/// Both plans for one example, with independent streams derived from
/// `seed` and the example id.
pub fn plan_objectives(
    example: &PretrainExample,
    schema: &Schema,
    ratio: f64,
    prob: f64,
    seed: u64,
) -> Result<MaskPlan> {
    let base = derive_seed(seed, &example.example_id);
    let mlm = plan_mlm(example, ratio, derive_seed(base, "mlm"))?;
    let values = plan_value_replacement(schema, prob, derive_seed(base, "value"))?;
    Ok(MaskPlan {
        masked_question_positions: mlm.masked_question_positions,
        column_replacements: values.column_replacements,
    })
}
