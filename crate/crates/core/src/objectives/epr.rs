use std::collections::BTreeMap;
use std::ops::Range;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::model::PretrainExample;
use crate::seed::rng_from_seed;

/// A question whose entity blocks have been shuffled.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PerturbedExample {
    pub shuffled_tokens: Vec<String>,
    pub entity_spans_original: Vec<Range<usize>>,
    /// Slot `k` holds the entity of original rank `permutation[k]`.
    pub permutation: Vec<usize>,
    /// Per-slot gold rank. Equals `permutation` except that entities with
    /// identical surface forms are assigned ranks in slot order.
    pub recovery_target: Vec<usize>,
    /// Where each slot sits in `shuffled_tokens`.
    pub slot_spans: Vec<Range<usize>>,
}

impl PerturbedExample {
    pub fn entity_count(&self) -> usize {
        self.permutation.len()
    }

    /// Undo the shuffle using `recovery_target`.
    pub fn restore(&self) -> Vec<String> {
        let k = self.slot_spans.len();
        if k == 0 {
            return self.shuffled_tokens.clone();
        }
        let mut slot_of_rank = vec![0; k];
        for (slot, &rank) in self.recovery_target.iter().enumerate() {
            slot_of_rank[rank] = slot;
        }
        let toks = &self.shuffled_tokens;
        let mut out = toks[..self.slot_spans[0].start].to_vec();
        for (rank, &slot) in slot_of_rank.iter().enumerate() {
            out.extend_from_slice(&toks[self.slot_spans[slot].clone()]);
            let gap_end = self
                .slot_spans
                .get(rank + 1)
                .map_or(toks.len(), |s| s.start);
            out.extend_from_slice(&toks[self.slot_spans[rank].end..gap_end]);
        }
        out
    }
}

/// Question tokens covered by at least one dependency edge, merged into
/// maximal contiguous spans, left to right.
pub fn identify_primary_entities(example: &PretrainExample) -> Vec<Range<usize>> {
    let n = example.question.len();
    let mut covered = vec![false; n];
    for edge in example.edges() {
        for flag in &mut covered[edge.span.start.min(n)..edge.span.end.min(n)] {
            *flag = true;
        }
    }
    let mut spans = Vec::new();
    let mut start = None;
    for (i, &c) in covered.iter().chain(std::iter::once(&false)).enumerate() {
        match (c, start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                spans.push(s..i);
                start = None;
            }
            _ => {}
        }
    }
    spans
}

/// Shuffle the primary entity blocks uniformly at random. Non-entity
/// tokens keep their positions relative to the slots.
pub fn perturb_entities(example: &PretrainExample, seed: u64) -> PerturbedExample {
    let tokens = &example.question.tokens;
    let spans = identify_primary_entities(example);
    let k = spans.len();
    let mut permutation: Vec<usize> = (0..k).collect();
    if k > 1 {
        permutation.shuffle(&mut rng_from_seed(seed));
    }

    let mut shuffled_tokens = Vec::with_capacity(tokens.len());
    let mut slot_spans = Vec::with_capacity(k);
    let mut cursor = 0;
    for (slot, span) in spans.iter().enumerate() {
        shuffled_tokens.extend_from_slice(&tokens[cursor..span.start]);
        let start = shuffled_tokens.len();
        shuffled_tokens.extend_from_slice(&tokens[spans[permutation[slot]].clone()]);
        slot_spans.push(start..shuffled_tokens.len());
        cursor = span.end;
    }
    shuffled_tokens.extend_from_slice(&tokens[cursor..]);

    // Identical surface forms: hand out their ranks in ascending slot order.
    let mut by_surface: BTreeMap<&[String], Vec<usize>> = BTreeMap::new();
    for span in &spans {
        by_surface.entry(&tokens[span.clone()]).or_default();
    }
    for (rank, span) in spans.iter().enumerate() {
        by_surface.get_mut(&tokens[span.clone()]).unwrap().push(rank);
    }
    let mut recovery_target = vec![0; k];
    let mut next: BTreeMap<&[String], usize> = BTreeMap::new();
    for (slot, &rank) in permutation.iter().enumerate() {
        let surface = &tokens[spans[rank].clone()];
        let i = next.entry(surface).or_insert(0);
        recovery_target[slot] = by_surface[surface][*i];
        *i += 1;
    }

    PerturbedExample {
        shuffled_tokens,
        entity_spans_original: spans,
        permutation,
        recovery_target,
        slot_spans,
    }
}
