//! Schema-dependency labeling: which question spans mention which columns,
//! and why.

mod labeler;
mod lexicon;
mod mentions;
mod ngram;
mod types;

pub use labeler::{derive_dependencies, Labeler, DEFAULT_TAU};
pub use lexicon::Lexicon;
pub use mentions::{classify_mention, extract_mentions, MentionRecord, SpanKind};
pub use ngram::{ngram_match, SpanMatch};
pub use types::{DependencyEdge, DependencyGraph, DependencyType, Head, LIMIT_HEAD};
