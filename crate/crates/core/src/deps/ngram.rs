use std::ops::Range;

use crate::model::{tokenize, Question};

/// Best fuzzy occurrence of `phrase` in the question.
#[derive(Debug, Clone, PartialEq)]
pub struct SpanMatch {
    pub span: Range<usize>,
    /// Character Levenshtein distance over the longer string's length.
    pub distance: f64,
}

/// Scans every window of 1..=len(phrase)+2 tokens and returns the one with
/// the smallest normalized Levenshtein distance to the phrase, when that
/// distance is at most `tau` (and below 1). Ties prefer the longer window,
/// then the leftmost.
pub fn ngram_match(question: &Question, phrase: &str, tau: f64) -> Option<SpanMatch> {
    match_tokens(&question.tokens, phrase, tau)
}

pub(crate) fn match_tokens(tokens: &[String], phrase: &str, tau: f64) -> Option<SpanMatch> {
    let phrase_tokens = tokenize(phrase);
    if phrase_tokens.is_empty() || tokens.is_empty() {
        return None;
    }
    let target = phrase_tokens.join(" ");
    let target_len = target.chars().count();
    let max_window = (phrase_tokens.len() + 2).min(tokens.len());

    // Character length of each token, for the length-difference lower bound.
    let lens: Vec<usize> = tokens.iter().map(|t| t.chars().count()).collect();
    let mut best: Option<SpanMatch> = None;
    for width in 1..=max_window {
        for start in 0..=tokens.len() - width {
            let window_len = lens[start..start + width].iter().sum::<usize>() + width - 1;
            let longest = window_len.max(target_len);
            let bound = window_len.abs_diff(target_len) as f64 / longest as f64;
            if bound > tau {
                continue;
            }
            let window = tokens[start..start + width].join(" ");
            let distance = strsim::levenshtein(&window, &target) as f64 / longest as f64;
            if distance > tau || distance >= 1.0 {
                continue;
            }
            let better = match &best {
                None => true,
                Some(b) => {
                    distance < b.distance
                        || (distance == b.distance && width > b.span.len())
                        || (distance == b.distance
                            && width == b.span.len()
                            && start < b.span.start)
                }
            };
            if better {
                best = Some(SpanMatch {
                    span: start..start + width,
                    distance,
                });
            }
        }
    }
    best
}
