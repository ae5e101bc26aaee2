//! Length-based difficulty, the square-root competence schedule and
//! competence-filtered batch sampling.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{ForgeError, Result};
use crate::model::{PretrainExample, Schema};
use crate::seed::rng_from_seed;

/// Min-max scaled lengths. All equal lengths give all zeros.
pub fn difficulties_from_lengths(lengths: &[usize]) -> Result<Vec<f64>> {
    let (Some(&lo), Some(&hi)) = (lengths.iter().min(), lengths.iter().max()) else {
        return Err(ForgeError::contract("difficulty of an empty corpus"));
    };
    if hi == lo {
        return Ok(vec![0.0; lengths.len()]);
    }
    let range = (hi - lo) as f64;
    Ok(lengths.iter().map(|&l| (l - lo) as f64 / range).collect())
}

/// Input length of one example: question tokens plus column-name tokens.
pub fn input_length(example: &PretrainExample, schema: &Schema) -> usize {
    example.question.len() + schema.column_token_count()
}

pub fn compute_difficulties(
    corpus: &[PretrainExample],
    schemas: &BTreeMap<String, Schema>,
) -> Result<Vec<f64>> {
    let lengths = corpus
        .iter()
        .map(|ex| {
            schemas
                .get(&ex.schema_id)
                .map(|s| input_length(ex, s))
                .ok_or_else(|| {
                    ForgeError::contract(format!(
                        "{}: unknown schema {}",
                        ex.example_id, ex.schema_id
                    ))
                })
        })
        .collect::<Result<Vec<_>>>()?;
    difficulties_from_lengths(&lengths)
}

/// `sqrt(t (1 - min_d^2) / T + min_d^2)`, exactly 1 once `t >= T`.
pub fn competence(t: u64, total_steps: u64, min_d: f64) -> f64 {
    if t >= total_steps {
        return 1.0;
    }
    let m2 = min_d * min_d;
    (t as f64 * (1.0 - m2) / total_steps as f64 + m2).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurriculumState {
    pub difficulties: Vec<f64>,
    pub min_d: f64,
    pub total_steps: u64,
    pub t: u64,
}

impl CurriculumState {
    pub fn new(difficulties: Vec<f64>, total_steps: u64) -> Result<Self> {
        if total_steps == 0 {
            return Err(ForgeError::contract("curriculum needs at least one step"));
        }
        if let Some(d) = difficulties.iter().find(|d| !(0.0..=1.0).contains(*d)) {
            return Err(ForgeError::contract(format!("difficulty {d} outside [0, 1]")));
        }
        let min_d = difficulties.iter().copied().fold(f64::INFINITY, f64::min);
        if !min_d.is_finite() {
            return Err(ForgeError::contract("curriculum over an empty corpus"));
        }
        Ok(CurriculumState {
            difficulties,
            min_d,
            total_steps,
            t: 0,
        })
    }

    pub fn competence(&self) -> f64 {
        competence(self.t, self.total_steps, self.min_d)
    }

    /// Moves to the next step, saturating at `total_steps`.
    pub fn advance(&mut self) {
        self.t = (self.t + 1).min(self.total_steps);
    }

    /// Indices with `d <= c(t)`, ascending.
    pub fn admissible(&self) -> Vec<usize> {
        let c = self.competence();
        (0..self.difficulties.len())
            .filter(|&i| self.difficulties[i] <= c)
            .collect()
    }
}

/// Uniform sample without replacement from the admissible pool. An
/// underfull pool is padded with the easiest remaining examples
/// (ascending difficulty, then index). Returned indices are ascending.
pub fn sample_batch(state: &CurriculumState, batch_size: usize, seed: u64) -> Vec<usize> {
    let pool = state.admissible();
    let mut batch: Vec<usize> = if pool.len() >= batch_size {
        pool.choose_multiple(&mut rng_from_seed(seed), batch_size)
            .copied()
            .collect()
    } else {
        let mut rest: Vec<usize> = (0..state.difficulties.len())
            .filter(|i| pool.binary_search(i).is_err())
            .collect();
        rest.sort_by(|&a, &b| {
            state.difficulties[a]
                .total_cmp(&state.difficulties[b])
                .then(a.cmp(&b))
        });
        let need = batch_size - pool.len();
        pool.into_iter().chain(rest.into_iter().take(need)).collect()
    };
    batch.sort_unstable();
    batch
}

/// One audited curriculum step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurriculumStep {
    pub t: u64,
    pub competence: f64,
    pub pool_size: usize,
    pub batch: Vec<usize>,
}

/// Steps `0..=total_steps`, each batch drawn with a seed derived from
/// `seed` and the step.
pub fn curriculum_trace(
    difficulties: Vec<f64>,
    total_steps: u64,
    batch_size: usize,
    seed: u64,
) -> Result<Vec<CurriculumStep>> {
    if batch_size == 0 {
        return Err(ForgeError::contract("batch size must be positive"));
    }
    let mut state = CurriculumState::new(difficulties, total_steps)?;
    let mut out = Vec::with_capacity(total_steps as usize + 1);
    loop {
        out.push(CurriculumStep {
            t: state.t,
            competence: state.competence(),
            pool_size: state.admissible().len(),
            batch: sample_batch(
                &state,
                batch_size,
                crate::seed::derive_seed(seed, &format!("batch:{}", state.t)),
            ),
        });
        if state.t == total_steps {
            return Ok(out);
        }
        state.advance();
    }
}
