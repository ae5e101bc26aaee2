use std::collections::HashMap;

use ndarray::{Array2, Axis};
use rand::Rng;

use crate::error::{ForgeError, Result};
use crate::model::SerializedInput;
use crate::seed::{derive_seed, rng_from_seed};

/// Positional vectors are scaled down so token identity dominates.
const POSITION_SCALE: f64 = 0.5;

fn hashed_vector(seed: u64, key: &str, h: usize, scale: f64) -> Vec<f64> {
    let mut rng = rng_from_seed(derive_seed(seed, key));
    (0..h).map(|_| scale * rng.gen_range(-1.0..1.0)).collect()
}

/// Hash embedding plus positional embedding for every token, then one
/// pass of averaging with the immediate neighbours. Rows follow `tokens`.
pub fn toy_encode_tokens(tokens: &[String], h: usize, seed: u64) -> Array2<f64> {
    let mut cache: HashMap<&str, Vec<f64>> = HashMap::new();
    let mut x = Array2::zeros((tokens.len(), h));
    for (i, tok) in tokens.iter().enumerate() {
        let emb = cache
            .entry(tok.as_str())
            .or_insert_with(|| hashed_vector(seed, &format!("tok:{tok}"), h, 1.0));
        let pos = hashed_vector(seed, &format!("pos:{i}"), h, POSITION_SCALE);
        for (k, v) in x.row_mut(i).iter_mut().enumerate() {
            *v = emb[k] + pos[k];
        }
    }
    let mut mixed = Array2::zeros(x.raw_dim());
    let n = tokens.len();
    for i in 0..n {
        let lo = i.saturating_sub(1);
        let hi = (i + 2).min(n);
        let mean = x
            .slice(ndarray::s![lo..hi, ..])
            .mean_axis(Axis(0))
            .expect("non-empty window");
        mixed.row_mut(i).assign(&mean);
    }
    mixed
}

/// Question rows (n x h) and column rows taken at the separator after each
/// column (m x h).
pub fn toy_encode(input: &SerializedInput, h: usize, seed: u64) -> Result<(Array2<f64>, Array2<f64>)> {
    if h < 2 {
        return Err(ForgeError::contract(format!("encoder width {h} below 2")));
    }
    let all = toy_encode_tokens(&input.tokens, h, seed);
    let q = all
        .slice(ndarray::s![input.question_span.clone(), ..])
        .to_owned();
    let anchors: Vec<usize> = input.column_anchors.iter().map(|&(_, a)| a).collect();
    let s = all.select(Axis(0), &anchors);
    Ok((q, s))
}
