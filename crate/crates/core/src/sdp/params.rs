use ndarray::{Array1, Array2, Array3};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::deps::DependencyType;
use crate::seed::rng_from_seed;

/// Largest entity count the rank classifier can order.
pub const K_MAX: usize = 8;

/// Single-layer rectified projection `max(0, x W + b)`, `W: h x p`.
#[derive(Debug, Clone, PartialEq)]
pub struct Ffn {
    pub w: Array2<f64>,
    pub b: Array1<f64>,
}

/// `x1' U x2 + w . (x1 ++ x2) + b`.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeBiaffine {
    pub u: Array2<f64>,
    pub w: Array1<f64>,
    pub b: f64,
}

/// One biaffine form per dependency type, stacked on the first axis.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelBiaffine {
    pub u: Array3<f64>,
    pub w: Array2<f64>,
    pub b: Array1<f64>,
}

/// `x W + b`.
#[derive(Debug, Clone, PartialEq)]
pub struct Affine {
    pub w: Array2<f64>,
    pub b: Array1<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SdpParams {
    /// Column side of the edge scorer.
    pub edge_head: Ffn,
    /// Column side of the label scorer.
    pub label_head: Ffn,
    /// Question side of the edge scorer.
    pub edge_dep: Ffn,
    /// Question side of the label scorer.
    pub label_dep: Ffn,
    pub edge: EdgeBiaffine,
    pub label: LabelBiaffine,
    /// Entity first-token representation to original-rank logits.
    pub rank: Affine,
    /// Token representation to vocabulary logits.
    pub mlm: Affine,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

fn uniform2(rng: &mut ChaCha8Rng, rows: usize, cols: usize, scale: f64) -> Array2<f64> {
    Array2::from_shape_fn((rows, cols), |_| rng.gen_range(-scale..scale))
}

impl Ffn {
    fn init(rng: &mut ChaCha8Rng, h: usize, p: usize) -> Self {
        Ffn {
            w: uniform2(rng, h, p, (3.0 / h as f64).sqrt()),
            b: Array1::zeros(p),
        }
    }
}

impl SdpParams {
    /// Random weights scaled by fan-in, zero biases, unit balance scalars.
    pub fn init(h: usize, p: usize, vocab: usize, seed: u64) -> Self {
        let mut rng = rng_from_seed(seed);
        let l = DependencyType::COUNT;
        let bil = (1.0 / p as f64).sqrt();
        let edge_head = Ffn::init(&mut rng, h, p);
        let label_head = Ffn::init(&mut rng, h, p);
        let edge_dep = Ffn::init(&mut rng, h, p);
        let label_dep = Ffn::init(&mut rng, h, p);
        let edge = EdgeBiaffine {
            u: uniform2(&mut rng, p, p, bil),
            w: Array1::from_shape_fn(2 * p, |_| rng.gen_range(-bil..bil)),
            b: 0.0,
        };
        let label = LabelBiaffine {
            u: Array3::from_shape_fn((l, p, p), |_| rng.gen_range(-bil..bil)),
            w: uniform2(&mut rng, l, 2 * p, bil),
            b: Array1::zeros(l),
        };
        let out = (1.0 / h as f64).sqrt();
        let rank = Affine {
            w: uniform2(&mut rng, h, K_MAX, out),
            b: Array1::zeros(K_MAX),
        };
        let mlm = Affine {
            w: uniform2(&mut rng, h, vocab, out),
            b: Array1::zeros(vocab),
        };
        SdpParams {
            edge_head,
            label_head,
            edge_dep,
            label_dep,
            edge,
            label,
            rank,
            mlm,
            alpha: 1.0,
            beta: 1.0,
            gamma: 1.0,
        }
    }

    pub fn hidden(&self) -> usize {
        self.edge_head.w.nrows()
    }

    pub fn proj(&self) -> usize {
        self.edge_head.w.ncols()
    }

    pub fn vocab(&self) -> usize {
        self.mlm.b.len()
    }

    /// Same shapes, every entry zero, balance scalars zero. Used as a
    /// gradient accumulator.
    pub fn zeros_like(&self) -> Self {
        let mut z = self.clone();
        for s in z.slices_mut() {
            s.fill(0.0);
        }
        z.alpha = 0.0;
        z.beta = 0.0;
        z.gamma = 0.0;
        z
    }

    /// Every weight tensor as a flat slice, balance scalars excluded.
    pub fn slices_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out = Vec::new();
        for ffn in [
            &mut self.edge_head,
            &mut self.label_head,
            &mut self.edge_dep,
            &mut self.label_dep,
        ] {
            out.push(ffn.w.as_slice_mut().expect("standard layout"));
            out.push(ffn.b.as_slice_mut().expect("standard layout"));
        }
        out.push(self.edge.u.as_slice_mut().expect("standard layout"));
        out.push(self.edge.w.as_slice_mut().expect("standard layout"));
        out.push(std::slice::from_mut(&mut self.edge.b));
        out.push(self.label.u.as_slice_mut().expect("standard layout"));
        out.push(self.label.w.as_slice_mut().expect("standard layout"));
        out.push(self.label.b.as_slice_mut().expect("standard layout"));
        for a in [&mut self.rank, &mut self.mlm] {
            out.push(a.w.as_slice_mut().expect("standard layout"));
            out.push(a.b.as_slice_mut().expect("standard layout"));
        }
        out
    }

    /// Read-only counterpart of [`SdpParams::slices_mut`].
    pub fn slices(&self) -> Vec<&[f64]> {
        let mut out = Vec::new();
        for ffn in [
            &self.edge_head,
            &self.label_head,
            &self.edge_dep,
            &self.label_dep,
        ] {
            out.push(ffn.w.as_slice().expect("standard layout"));
            out.push(ffn.b.as_slice().expect("standard layout"));
        }
        out.push(self.edge.u.as_slice().expect("standard layout"));
        out.push(self.edge.w.as_slice().expect("standard layout"));
        out.push(std::slice::from_ref(&self.edge.b));
        out.push(self.label.u.as_slice().expect("standard layout"));
        out.push(self.label.w.as_slice().expect("standard layout"));
        out.push(self.label.b.as_slice().expect("standard layout"));
        for a in [&self.rank, &self.mlm] {
            out.push(a.w.as_slice().expect("standard layout"));
            out.push(a.b.as_slice().expect("standard layout"));
        }
        out
    }

    pub fn flat(&self) -> Vec<f64> {
        self.slices().concat()
    }

    /// `self += k * other` over the weight tensors.
    pub fn add_scaled(&mut self, other: &SdpParams, k: f64) {
        for (a, b) in self.slices_mut().into_iter().zip(other.slices()) {
            for (x, y) in a.iter_mut().zip(b.iter()) {
                *x += k * y;
            }
        }
    }
}
