use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::deps::DependencyType;
use crate::model::{PretrainExample, Provenance};
use crate::sql::Clause;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DifficultySummary {
    pub min: f64,
    pub p10: f64,
    pub p25: f64,
    pub median: f64,
    pub p75: f64,
    pub p90: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub examples: usize,
    pub sampled: usize,
    pub real: usize,
    pub rejected: usize,
    pub edges: usize,
    /// Every dependency type, zero counts included.
    pub histogram: BTreeMap<String, usize>,
    pub difficulty: Option<DifficultySummary>,
    /// Examples whose query, subqueries included, uses each clause.
    pub clause_coverage: BTreeMap<String, usize>,
    pub mentions: usize,
    pub unmatched_mentions: usize,
    pub unmatched_rate: f64,
}

/// Linear interpolation between closest ranks of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

pub fn report_stats(corpus: &[PretrainExample]) -> CorpusStats {
    let mut histogram: BTreeMap<String, usize> = DependencyType::ALL
        .iter()
        .map(|t| (t.name().to_string(), 0))
        .collect();
    let mut clause_coverage: BTreeMap<String, usize> =
        Clause::ALL.iter().map(|c| (c.name().to_string(), 0)).collect();
    let (mut edges, mut mentions, mut unmatched) = (0, 0, 0);
    let mut difficulties = Vec::new();
    for ex in corpus {
        for e in ex.edges() {
            *histogram.get_mut(e.label.name()).expect("all types present") += 1;
            edges += 1;
        }
        let mut used: Vec<Clause> = ex.sql.walk().into_iter().flat_map(|q| q.clauses()).collect();
        used.sort();
        used.dedup();
        for c in used {
            *clause_coverage.get_mut(c.name()).expect("all clauses present") += 1;
        }
        if let Some(s) = ex.mention_stats {
            mentions += s.mentions;
            unmatched += s.unmatched;
        }
        difficulties.extend(ex.difficulty);
    }
    difficulties.sort_by(f64::total_cmp);
    let difficulty = (!difficulties.is_empty()).then(|| DifficultySummary {
        min: difficulties[0],
        p10: quantile(&difficulties, 0.1),
        p25: quantile(&difficulties, 0.25),
        median: quantile(&difficulties, 0.5),
        p75: quantile(&difficulties, 0.75),
        p90: quantile(&difficulties, 0.9),
        max: difficulties[difficulties.len() - 1],
    });
    let sampled = corpus
        .iter()
        .filter(|e| e.provenance == Provenance::Sampled)
        .count();
    CorpusStats {
        examples: corpus.len(),
        sampled,
        real: corpus.len() - sampled,
        rejected: 0,
        edges,
        histogram,
        difficulty,
        clause_coverage,
        mentions,
        unmatched_mentions: unmatched,
        unmatched_rate: if mentions == 0 {
            0.0
        } else {
            unmatched as f64 / mentions as f64
        },
    }
}

#[cfg(test)]
mod tests {
    use super::quantile;

    #[test]
    fn quantiles_interpolate() {
        let d = [0.0, 0.25, 0.5, 1.0];
        assert_eq!(quantile(&d, 0.0), 0.0);
        assert_eq!(quantile(&d, 1.0), 1.0);
        assert_eq!(quantile(&d, 0.5), 0.375);
        assert_eq!(quantile(&[0.3], 0.9), 0.3);
    }
}
