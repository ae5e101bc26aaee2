use ndarray::{Array2, Array3, ArrayView1, ArrayView2};

use super::score::PairScores;
use crate::deps::{DependencyGraph, DependencyType, Head};
use crate::error::{ForgeError, Result};
use crate::model::SerializedInput;

/// Token-level gold for every (question token, column) pair.
#[derive(Debug, Clone, PartialEq)]
pub struct GoldPairs {
    /// 1 where the token lies inside some edge span of that column.
    pub edge: Array2<f64>,
    /// Dependency-type index; `None` where no edge exists.
    pub label: Array2<usize>,
}

/// Expands edge spans to token-level pairs. Edges on the limit pseudo-head
/// have no column and are skipped. A pair covered by several edges takes
/// the label of the highest-scoring one, earliest type on ties.
pub fn gold_pairs(graph: &DependencyGraph, input: &SerializedInput) -> GoldPairs {
    let (n, m) = (input.question_len(), input.column_count());
    let mut edge = Array2::zeros((n, m));
    let mut label = Array2::from_elem((n, m), DependencyType::None.index());
    let mut best = Array2::from_elem((n, m), f64::NEG_INFINITY);
    for e in &graph.edges {
        let Head::Column(c) = e.head else { continue };
        let Some(j) = input.column_anchors.iter().position(|(r, _)| *r == c) else {
            continue;
        };
        for i in e.span.start.min(n)..e.span.end.min(n) {
            edge[[i, j]] = 1.0;
            let better = e.score > best[[i, j]]
                || (e.score == best[[i, j]] && e.label.index() < label[[i, j]]);
            if better {
                best[[i, j]] = e.score;
                label[[i, j]] = e.label.index();
            }
        }
    }
    GoldPairs { edge, label }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Mean binary cross-entropy with logits and its gradient.
pub fn bce_with_logits(logits: ArrayView2<f64>, gold: ArrayView2<f64>) -> (f64, Array2<f64>) {
    let count = logits.len();
    if count == 0 {
        return (0.0, Array2::zeros(logits.raw_dim()));
    }
    let mut loss = 0.0;
    let mut grad = Array2::zeros(logits.raw_dim());
    ndarray::Zip::from(&mut grad)
        .and(logits)
        .and(gold)
        .for_each(|g, &x, &y| {
            loss += x.max(0.0) - x * y + (-x.abs()).exp().ln_1p();
            *g = (sigmoid(x) - y) / count as f64;
        });
    (loss / count as f64, grad)
}

/// Numerically stable softmax of one row.
pub fn softmax(row: ArrayView1<f64>) -> Vec<f64> {
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = row.iter().map(|&v| (v - max).exp()).collect();
    let z: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / z).collect()
}

/// Mean softmax cross-entropy over rows and its gradient.
pub fn softmax_cross_entropy(logits: ArrayView2<f64>, targets: &[usize]) -> (f64, Array2<f64>) {
    let rows = logits.nrows();
    let mut grad = Array2::zeros(logits.raw_dim());
    if rows == 0 {
        return (0.0, grad);
    }
    let mut loss = 0.0;
    for (r, &t) in targets.iter().enumerate() {
        let row = logits.row(r);
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let log_z = max + row.iter().map(|&v| (v - max).exp()).sum::<f64>().ln();
        loss += log_z - row[t];
        for (g, &v) in grad.row_mut(r).iter_mut().zip(row.iter()) {
            *g = (v - log_z).exp() / rows as f64;
        }
        grad[[r, t]] -= 1.0 / rows as f64;
    }
    (loss / rows as f64, grad)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SdpLoss {
    pub loss: f64,
    pub edge_loss: f64,
    pub label_loss: f64,
    pub d_edge: Array2<f64>,
    pub d_label: Array3<f64>,
}

/// Mean edge BCE plus mean 17-way label cross-entropy over all pairs,
/// with gradients with respect to the logits.
pub fn sdp_loss(scores: &PairScores, gold: &GoldPairs) -> Result<SdpLoss> {
    let (n, m) = scores.shape();
    if gold.edge.dim() != (n, m) || gold.label.dim() != (n, m) {
        return Err(ForgeError::contract(format!(
            "gold pairs {:?} do not match scores {:?}",
            gold.edge.dim(),
            (n, m)
        )));
    }
    let (edge_loss, d_edge) = bce_with_logits(scores.edge_logits.view(), gold.edge.view());
    let l = DependencyType::COUNT;
    let flat = scores
        .label_logits
        .view()
        .into_shape_with_order((n * m, l))
        .expect("contiguous label logits");
    let targets: Vec<usize> = gold.label.iter().copied().collect();
    let (label_loss, d_flat) = softmax_cross_entropy(flat, &targets);
    let d_label = d_flat
        .into_shape_with_order((n, m, l))
        .expect("same element count");
    Ok(SdpLoss {
        loss: edge_loss + label_loss,
        edge_loss,
        label_loss,
        d_edge,
        d_label,
    })
}

/// Mean K-way cross-entropy of per-slot rank logits. `K = 0` is zero loss.
pub fn epr_loss(slot_logits: ArrayView2<f64>, target: &[usize]) -> Result<(f64, Array2<f64>)> {
    let k = target.len();
    if slot_logits.dim() != (k, k) {
        return Err(ForgeError::contract(format!(
            "slot logits {:?} for {k} entities",
            slot_logits.dim()
        )));
    }
    let mut seen = vec![false; k];
    for &t in target {
        if t >= k || std::mem::replace(&mut seen[t], true) {
            return Err(ForgeError::contract("recovery target is not a permutation"));
        }
    }
    Ok(softmax_cross_entropy(slot_logits, target))
}

/// Derivatives of the joint objective.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointGrads {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    /// `dL/dl_mlm`, `dL/dl_sdp`, `dL/dl_epr`.
    pub w_mlm: f64,
    pub w_sdp: f64,
    pub w_epr: f64,
}

/// `l_mlm/(2a^2) + l_sdp/(2b^2) + l_epr/(2g^2) + ln(a b g)`.
pub fn joint_loss(
    l_mlm: f64,
    l_sdp: f64,
    l_epr: f64,
    alpha: f64,
    beta: f64,
    gamma: f64,
) -> Result<(f64, JointGrads)> {
    for (name, v) in [("alpha", alpha), ("beta", beta), ("gamma", gamma)] {
        if v.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) {
            return Err(ForgeError::contract(format!("{name} must be positive, got {v}")));
        }
    }
    let term = |l: f64, s: f64| l / (2.0 * s * s);
    let loss = term(l_mlm, alpha) + term(l_sdp, beta) + term(l_epr, gamma) + (alpha * beta * gamma).ln();
    let d = |l: f64, s: f64| -l / (s * s * s) + 1.0 / s;
    Ok((
        loss,
        JointGrads {
            alpha: d(l_mlm, alpha),
            beta: d(l_sdp, beta),
            gamma: d(l_epr, gamma),
            w_mlm: 1.0 / (2.0 * alpha * alpha),
            w_sdp: 1.0 / (2.0 * beta * beta),
            w_epr: 1.0 / (2.0 * gamma * gamma),
        },
    ))
}
