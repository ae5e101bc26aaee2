use std::collections::BTreeMap;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::sql::{Agg, CondOp, Direction};

const BUILTIN: &str = include_str!("lexicon.json");

/// Trigger phrases for aggregations, operators and orderings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lexicon {
    pub version: u32,
    pub agg: BTreeMap<Agg, Vec<String>>,
    pub op: BTreeMap<CondOp, Vec<String>>,
    pub order: BTreeMap<Direction, Vec<String>>,
}

impl Lexicon {
    /// The lexicon shipped with the crate.
    pub fn builtin() -> &'static Lexicon {
        static LEXICON: OnceLock<Lexicon> = OnceLock::new();
        LEXICON.get_or_init(|| Lexicon::from_json(BUILTIN).expect("builtin lexicon parses"))
    }

    pub fn from_json(text: &str) -> serde_json::Result<Lexicon> {
        serde_json::from_str(text)
    }

    pub fn agg_phrases(&self, agg: Agg) -> &[String] {
        self.agg.get(&agg).map_or(&[], Vec::as_slice)
    }

    pub fn op_phrases(&self, op: CondOp) -> &[String] {
        self.op.get(&op).map_or(&[], Vec::as_slice)
    }

    pub fn order_phrases(&self, dir: Direction) -> &[String] {
        self.order.get(&dir).map_or(&[], Vec::as_slice)
    }
}
