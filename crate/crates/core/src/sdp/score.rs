use ndarray::{s, Array1, Array2, Array3, ArrayView1, ArrayView2, Axis};

use super::params::{Ffn, LabelBiaffine, SdpParams};
use crate::deps::DependencyType;
use crate::error::{ForgeError, Result};

/// Edge and label logits for every (question token, column) pair.
#[derive(Debug, Clone, PartialEq)]
pub struct PairScores {
    /// `n x m`.
    pub edge_logits: Array2<f64>,
    /// `n x m x 17`, last axis in dependency-type order.
    pub label_logits: Array3<f64>,
}

impl PairScores {
    pub fn shape(&self) -> (usize, usize) {
        self.edge_logits.dim()
    }
}

fn dims(what: &str, expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(ForgeError::contract(format!(
            "{what}: expected dimension {expected}, found {found}"
        )))
    }
}

/// `max(0, x W + b)`.
pub fn ffn_project(x: ArrayView1<f64>, block: &Ffn) -> Result<Array1<f64>> {
    dims("ffn input", block.w.nrows(), x.len())?;
    dims("ffn bias", block.w.ncols(), block.b.len())?;
    Ok((x.dot(&block.w) + &block.b).mapv(|v| v.max(0.0)))
}

/// `x1' U x2 + w . (x1 ++ x2) + b`.
pub fn biaffine(
    x1: ArrayView1<f64>,
    x2: ArrayView1<f64>,
    u: ArrayView2<f64>,
    w: ArrayView1<f64>,
    b: f64,
) -> Result<f64> {
    let p = x1.len();
    dims("biaffine right operand", p, x2.len())?;
    dims("biaffine bilinear rows", p, u.nrows())?;
    dims("biaffine bilinear columns", p, u.ncols())?;
    dims("biaffine linear term", 2 * p, w.len())?;
    Ok(x1.dot(&u.dot(&x2)) + w.slice(s![..p]).dot(&x1) + w.slice(s![p..]).dot(&x2) + b)
}

/// One biaffine value per dependency type.
pub fn biaffine_labels(
    x1: ArrayView1<f64>,
    x2: ArrayView1<f64>,
    label: &LabelBiaffine,
) -> Result<Array1<f64>> {
    dims("label forms", DependencyType::COUNT, label.u.len_of(Axis(0)))?;
    (0..DependencyType::COUNT)
        .map(|l| {
            biaffine(
                x1,
                x2,
                label.u.index_axis(Axis(0), l),
                label.w.row(l),
                label.b[l],
            )
        })
        .collect::<Result<Vec<_>>>()
        .map(Array1::from)
}

/// Pre- and post-activation projections kept for the backward pass.
#[derive(Debug, Clone)]
pub struct PairCache {
    pub q: Array2<f64>,
    pub s: Array2<f64>,
    pub zq_edge: Array2<f64>,
    pub aq_edge: Array2<f64>,
    pub zs_edge: Array2<f64>,
    pub as_edge: Array2<f64>,
    pub zq_label: Array2<f64>,
    pub aq_label: Array2<f64>,
    pub zs_label: Array2<f64>,
    pub as_label: Array2<f64>,
}

fn project_rows(x: &Array2<f64>, block: &Ffn) -> (Array2<f64>, Array2<f64>) {
    let z = x.dot(&block.w) + &block.b;
    let a = z.mapv(|v| v.max(0.0));
    (z, a)
}

/// `A U B' + (A w1) 1' + 1 (B w2)' + b` for row-stacked operands.
pub(crate) fn biaffine_rows(
    a: &Array2<f64>,
    b: &Array2<f64>,
    u: ArrayView2<f64>,
    w: ArrayView1<f64>,
    bias: f64,
) -> Array2<f64> {
    let p = a.ncols();
    let left = a.dot(&w.slice(s![..p]));
    let right = b.dot(&w.slice(s![p..]));
    let mut out = a.dot(&u).dot(&b.t());
    for ((i, j), v) in out.indexed_iter_mut() {
        *v += left[i] + right[j] + bias;
    }
    out
}

/// Question rows `q` (n x h) against column rows `s` (m x h).
pub fn score_pairs(
    q: &Array2<f64>,
    s: &Array2<f64>,
    params: &SdpParams,
) -> Result<(PairScores, PairCache)> {
    let h = params.hidden();
    dims("question representation width", h, q.ncols())?;
    dims("column representation width", h, s.ncols())?;
    let (zq_edge, aq_edge) = project_rows(q, &params.edge_dep);
    let (zs_edge, as_edge) = project_rows(s, &params.edge_head);
    let (zq_label, aq_label) = project_rows(q, &params.label_dep);
    let (zs_label, as_label) = project_rows(s, &params.label_head);
    let e = &params.edge;
    let edge_logits = biaffine_rows(&aq_edge, &as_edge, e.u.view(), e.w.view(), e.b);
    let (n, m) = (q.nrows(), s.nrows());
    let mut label_logits = Array3::zeros((n, m, DependencyType::COUNT));
    for l in 0..DependencyType::COUNT {
        let lab = &params.label;
        let scores = biaffine_rows(
            &aq_label,
            &as_label,
            lab.u.index_axis(Axis(0), l),
            lab.w.row(l),
            lab.b[l],
        );
        label_logits.index_axis_mut(Axis(2), l).assign(&scores);
    }
    let cache = PairCache {
        q: q.clone(),
        s: s.clone(),
        zq_edge,
        aq_edge,
        zs_edge,
        as_edge,
        zq_label,
        aq_label,
        zs_label,
        as_label,
    };
    Ok((
        PairScores {
            edge_logits,
            label_logits,
        },
        cache,
    ))
}

/// Edge logits only; the label forms are skipped.
pub fn score_edges(q: &Array2<f64>, s: &Array2<f64>, params: &SdpParams) -> Result<Array2<f64>> {
    let h = params.hidden();
    dims("question representation width", h, q.ncols())?;
    dims("column representation width", h, s.ncols())?;
    let (_, aq) = project_rows(q, &params.edge_dep);
    let (_, a_s) = project_rows(s, &params.edge_head);
    let e = &params.edge;
    Ok(biaffine_rows(&aq, &a_s, e.u.view(), e.w.view(), e.b))
}

/// Edge present iff its logit is at least zero.
pub fn decide_edges(scores: &PairScores) -> Array2<bool> {
    scores.edge_logits.mapv(|v| v >= 0.0)
}

fn relu_backward(dz: &mut Array2<f64>, z: &Array2<f64>) {
    dz.zip_mut_with(z, |d, &z| {
        if z <= 0.0 {
            *d = 0.0;
        }
    });
}

fn ffn_backward(x: &Array2<f64>, z: &Array2<f64>, mut da: Array2<f64>, grad: &mut Ffn) {
    relu_backward(&mut da, z);
    grad.w += &x.t().dot(&da);
    grad.b += &da.sum_axis(Axis(0));
}

/// Accumulates `d/dA` and `d/dB` of a row-stacked biaffine given `d/dout`,
/// and returns the gradients of `(U, w, bias)`.
fn biaffine_rows_backward(
    a: &Array2<f64>,
    b: &Array2<f64>,
    u: ArrayView2<f64>,
    w: ArrayView1<f64>,
    dout: ArrayView2<f64>,
    da: &mut Array2<f64>,
    db: &mut Array2<f64>,
) -> (Array2<f64>, Array1<f64>, f64) {
    let p = a.ncols();
    let row_sum = dout.sum_axis(Axis(1));
    let col_sum = dout.sum_axis(Axis(0));
    let du = a.t().dot(&dout).dot(b);
    let mut dw = Array1::zeros(2 * p);
    dw.slice_mut(s![..p]).assign(&a.t().dot(&row_sum));
    dw.slice_mut(s![p..]).assign(&b.t().dot(&col_sum));
    *da += &dout.dot(b).dot(&u.t());
    *db += &dout.t().dot(a).dot(&u);
    for (mut row, &r) in da.rows_mut().into_iter().zip(row_sum.iter()) {
        row.scaled_add(r, &w.slice(s![..p]));
    }
    for (mut row, &c) in db.rows_mut().into_iter().zip(col_sum.iter()) {
        row.scaled_add(c, &w.slice(s![p..]));
    }
    (du, dw, dout.sum())
}

impl SdpParams {
    /// Adds the parameter gradients implied by logit gradients
    /// `d_edge` (n x m) and `d_label` (n x m x 17) into `grad`.
    pub fn backward_pairs(
        &self,
        cache: &PairCache,
        d_edge: &Array2<f64>,
        d_label: &Array3<f64>,
        grad: &mut SdpParams,
    ) {
        let mut daq = Array2::zeros(cache.aq_edge.raw_dim());
        let mut das = Array2::zeros(cache.as_edge.raw_dim());
        let (du, dw, db) = biaffine_rows_backward(
            &cache.aq_edge,
            &cache.as_edge,
            self.edge.u.view(),
            self.edge.w.view(),
            d_edge.view(),
            &mut daq,
            &mut das,
        );
        grad.edge.u += &du;
        grad.edge.w += &dw;
        grad.edge.b += db;
        ffn_backward(&cache.q, &cache.zq_edge, daq, &mut grad.edge_dep);
        ffn_backward(&cache.s, &cache.zs_edge, das, &mut grad.edge_head);

        let mut daq = Array2::zeros(cache.aq_label.raw_dim());
        let mut das = Array2::zeros(cache.as_label.raw_dim());
        for l in 0..DependencyType::COUNT {
            let (du, dw, db) = biaffine_rows_backward(
                &cache.aq_label,
                &cache.as_label,
                self.label.u.index_axis(Axis(0), l),
                self.label.w.row(l),
                d_label.index_axis(Axis(2), l),
                &mut daq,
                &mut das,
            );
            let mut gu = grad.label.u.index_axis_mut(Axis(0), l);
            gu += &du;
            let mut gw = grad.label.w.row_mut(l);
            gw += &dw;
            grad.label.b[l] += db;
        }
        ffn_backward(&cache.q, &cache.zq_label, daq, &mut grad.label_dep);
        ffn_backward(&cache.s, &cache.zs_label, das, &mut grad.label_head);
    }
}
