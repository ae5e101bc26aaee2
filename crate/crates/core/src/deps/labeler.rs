use std::ops::Range;

use super::lexicon::Lexicon;
use super::mentions::{classify_mention, extract_mentions, MentionRecord, SpanKind};
use super::ngram::{match_tokens, SpanMatch};
use super::types::{DependencyEdge, DependencyGraph, Head};
use crate::model::{tokenize, MentionStats, Question, Schema};
use crate::sql::{Literal, Query};

pub const DEFAULT_TAU: f64 = 0.3;

const NUMBER_WORDS: [&str; 21] = [
    "zero", "one", "two", "three", "four", "five", "six", "seven", "eight", "nine", "ten",
    "eleven", "twelve", "thirteen", "fourteen", "fifteen", "sixteen", "seventeen", "eighteen",
    "nineteen", "twenty",
];

/// Words absorbed into the front of an aggregation trigger span
/// ("the highest").
const DETERMINERS: [&str; 1] = ["the"];

/// Rule-based schema-dependency labeler.
#[derive(Debug, Clone)]
pub struct Labeler<'a> {
    pub lexicon: &'a Lexicon,
    pub tau: f64,
}

impl Default for Labeler<'static> {
    fn default() -> Self {
        Labeler {
            lexicon: Lexicon::builtin(),
            tau: DEFAULT_TAU,
        }
    }
}

fn better(a: &SpanMatch, b: &SpanMatch) -> bool {
    a.distance < b.distance
        || (a.distance == b.distance && a.span.len() > b.span.len())
        || (a.distance == b.distance && a.span.len() == b.span.len() && a.span.start < b.span.start)
}

fn contains_tokens(haystack: &[String], needle: &[String]) -> bool {
    !needle.is_empty() && haystack.windows(needle.len()).any(|w| w == needle)
}

/// Canonical digit form: `10.50` -> `10.5`, `3.0` -> `3`.
fn digit_form(n: &str) -> String {
    if n.contains('.') {
        let t = n.trim_end_matches('0').trim_end_matches('.');
        t.to_string()
    } else {
        n.to_string()
    }
}

impl Labeler<'_> {
    fn best<'p>(&self, tokens: &[String], phrases: impl IntoIterator<Item = &'p str>) -> Option<SpanMatch> {
        let mut best: Option<SpanMatch> = None;
        for p in phrases {
            if let Some(m) = match_tokens(tokens, p, self.tau) {
                if best.as_ref().is_none_or(|b| better(&m, b)) {
                    best = Some(m);
                }
            }
        }
        best
    }

    fn value_match(&self, tokens: &[String], schema: &Schema, r: &MentionRecord, lit: &Literal) -> Option<SpanMatch> {
        let mut forms = vec![lit.text().to_string()];
        if let Literal::Number(n) = lit {
            let digits = digit_form(n);
            if let Ok(k) = digits.parse::<usize>() {
                if let Some(w) = NUMBER_WORDS.get(k) {
                    forms.push(w.to_string());
                }
            }
            forms.push(digits);
        }
        forms.dedup();
        let from_pool = r.column.is_some_and(|c| {
            schema
                .column(c)
                .values
                .iter()
                .any(|v| v.to_lowercase() == lit.text().to_lowercase())
        });
        let verbatim = forms.iter().any(|f| contains_tokens(tokens, &tokenize(f)));
        if !(from_pool || verbatim) {
            return None;
        }
        self.best(tokens, forms.iter().map(String::as_str))
    }

    /// Spans found for one mention, by kind.
    fn targets(&self, tokens: &[String], schema: &Schema, r: &MentionRecord) -> Vec<(SpanKind, SpanMatch)> {
        let mut out = Vec::new();
        if let Some(c) = r.column {
            let name = &schema.column(c).name;
            let qualified = format!("{} {}", schema.table_name(c.table), name);
            if let Some(m) = self.best(tokens, [name.as_str(), qualified.as_str()]) {
                out.push((SpanKind::Name, m));
            }
        }
        let agg = self.lexicon.agg_phrases(r.agg);
        if let Some(mut m) = self.best(tokens, agg.iter().map(String::as_str)) {
            m.span = absorb_determiner(tokens, m.span);
            out.push((SpanKind::AggTrigger, m));
        }
        if let Some(op) = r.op {
            let phrases = self.lexicon.op_phrases(op);
            if let Some(m) = self.best(tokens, phrases.iter().map(String::as_str)) {
                out.push((SpanKind::OpTrigger, m));
            }
        }
        if let Some(dir) = r.direction {
            let phrases = self.lexicon.order_phrases(dir);
            if let Some(m) = self.best(tokens, phrases.iter().map(String::as_str)) {
                out.push((SpanKind::OrderTrigger, m));
            }
        }
        for lit in &r.values {
            if let Some(m) = self.value_match(tokens, schema, r, lit) {
                out.push((SpanKind::Value, m));
            }
        }
        out
    }

    /// Labels the question against every mention of the query. Returns the
    /// graph and how many mentions found no span at all.
    pub fn label(&self, question: &Question, query: &Query, schema: &Schema) -> (DependencyGraph, MentionStats) {
        let mut graph = DependencyGraph::default();
        let mut stats = MentionStats::default();
        for record in extract_mentions(query) {
            stats.mentions += 1;
            let head = record.column.map_or(Head::Limit, Head::Column);
            let targets = self.targets(&question.tokens, schema, &record);
            if targets.is_empty() {
                stats.unmatched += 1;
            }
            for (kind, m) in targets {
                let label = classify_mention(&record, kind)
                    .expect("span kinds are only produced for compatible mentions");
                graph.add(DependencyEdge {
                    head,
                    span: m.span,
                    label,
                    score: 1.0 - m.distance,
                });
            }
        }
        (graph, stats)
    }
}

fn absorb_determiner(tokens: &[String], span: Range<usize>) -> Range<usize> {
    if span.start > 0 && DETERMINERS.contains(&tokens[span.start - 1].as_str()) {
        span.start - 1..span.end
    } else {
        span
    }
}

/// Labels with the builtin lexicon at threshold `tau`.
pub fn derive_dependencies(question: &Question, query: &Query, schema: &Schema, tau: f64) -> DependencyGraph {
    Labeler {
        lexicon: Lexicon::builtin(),
        tau,
    }
    .label(question, query, schema)
    .0
}
