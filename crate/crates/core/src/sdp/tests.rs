use ndarray::{array, Array1, Array2, Array3};
use rand::Rng;

use super::*;
use crate::deps::DependencyType;
use crate::seed::rng_from_seed;

const FD_STEP: f64 = 1e-5;

fn random_matrix(rng: &mut impl Rng, rows: usize, cols: usize) -> Array2<f64> {
    Array2::from_shape_fn((rows, cols), |_| rng.gen_range(-1.0..1.0))
}

fn rel_error(a: &[f64], b: &[f64]) -> f64 {
    let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na.max(nb) == 0.0 {
        0.0
    } else {
        diff / na.max(nb)
    }
}

fn noisy_params(rng: &mut impl Rng, h: usize, p: usize, vocab: usize) -> SdpParams {
    let mut params = SdpParams::init(h, p, vocab, rng.gen());
    for s in params.slices_mut() {
        for v in s.iter_mut() {
            *v += rng.gen_range(-0.3..0.3);
        }
    }
    params
}

fn near_kink(cache: &PairCache) -> bool {
    [&cache.zq_edge, &cache.zs_edge, &cache.zq_label, &cache.zs_label]
        .iter()
        .any(|z| z.iter().any(|v| v.abs() < 1e-3))
}

#[test]
fn ffn_zero_weights_and_identity() {
    let block = Ffn {
        w: Array2::zeros((3, 2)),
        b: array![0.5, -0.5],
    };
    assert_eq!(ffn_project(array![1.0, 2.0, 3.0].view(), &block).unwrap(), array![0.5, 0.0]);
    let block = Ffn {
        w: Array2::eye(3).slice(ndarray::s![.., ..2]).to_owned(),
        b: Array1::zeros(2),
    };
    assert_eq!(ffn_project(array![1.0, 2.0, 3.0].view(), &block).unwrap(), array![1.0, 2.0]);
    assert!(ffn_project(array![1.0].view(), &block).is_err());
}

#[test]
fn ffn_jacobian_matches_differences() {
    let mut rng = rng_from_seed(4);
    let block = Ffn {
        w: random_matrix(&mut rng, 4, 3),
        b: Array1::from_shape_fn(3, |_| rng.gen_range(-1.0..1.0)),
    };
    let x = Array1::from_shape_fn(4, |_| rng.gen_range(-1.0..1.0));
    let z = x.dot(&block.w) + &block.b;
    for k in 0..4 {
        let mut xp = x.clone();
        let mut xm = x.clone();
        xp[k] += FD_STEP;
        xm[k] -= FD_STEP;
        let num = (ffn_project(xp.view(), &block).unwrap() - ffn_project(xm.view(), &block).unwrap())
            / (2.0 * FD_STEP);
        for j in 0..3 {
            let ana = if z[j] > 0.0 { block.w[[k, j]] } else { 0.0 };
            assert!((num[j] - ana).abs() <= 1e-6 * ana.abs().max(1.0));
        }
    }
}

#[test]
fn biaffine_cases() {
    let u = array![[0.0, 1.0], [0.0, 0.0]];
    let w = Array1::zeros(4);
    assert_eq!(biaffine(array![1.0, 0.0].view(), array![0.0, 1.0].view(), u.view(), w.view(), 0.0).unwrap(), 1.0);
    let z = Array2::zeros((2, 2));
    assert_eq!(biaffine(array![3.0, 1.0].view(), array![2.0, 5.0].view(), z.view(), w.view(), 0.5).unwrap(), 0.5);
    let w = array![7.0, 7.0, 1.0, 2.0];
    assert_eq!(biaffine(array![0.0, 0.0].view(), array![2.0, 5.0].view(), u.view(), w.view(), 0.5).unwrap(), 12.5);
    assert!(biaffine(array![0.0].view(), array![2.0, 5.0].view(), u.view(), w.view(), 0.5).is_err());
}

#[test]
fn score_pairs_shapes_and_composition() {
    let mut rng = rng_from_seed(8);
    let params = noisy_params(&mut rng, 5, 4, 3);
    let q = random_matrix(&mut rng, 2, 5);
    let s = random_matrix(&mut rng, 3, 5);
    let (scores, _) = score_pairs(&q, &s, &params).unwrap();
    assert_eq!(scores.edge_logits.dim(), (2, 3));
    assert_eq!(scores.label_logits.dim(), (2, 3, DependencyType::COUNT));
    let x1 = ffn_project(q.row(1), &params.edge_dep).unwrap();
    let x2 = ffn_project(s.row(2), &params.edge_head).unwrap();
    let direct = biaffine(x1.view(), x2.view(), params.edge.u.view(), params.edge.w.view(), params.edge.b).unwrap();
    assert!((scores.edge_logits[[1, 2]] - direct).abs() < 1e-12);
    let y1 = ffn_project(q.row(0), &params.label_dep).unwrap();
    let y2 = ffn_project(s.row(1), &params.label_head).unwrap();
    let labels = biaffine_labels(y1.view(), y2.view(), &params.label).unwrap();
    for l in 0..DependencyType::COUNT {
        assert!((scores.label_logits[[0, 1, l]] - labels[l]).abs() < 1e-12);
    }

    let zero = params.zeros_like();
    let (scores, _) = score_pairs(&q, &s, &zero).unwrap();
    assert!(scores.edge_logits.iter().all(|&v| v == 0.0));
}

#[test]
fn decisions_use_inclusive_sign() {
    let scores = PairScores {
        edge_logits: array![[0.0, -0.001], [1e300, -1e300]],
        label_logits: Array3::zeros((2, 2, DependencyType::COUNT)),
    };
    assert_eq!(decide_edges(&scores), array![[true, false], [true, false]]);
}

#[test]
fn uniform_labels_cost_ln_17() {
    let scores = PairScores {
        edge_logits: Array2::zeros((3, 2)),
        label_logits: Array3::from_elem((3, 2, DependencyType::COUNT), 0.7),
    };
    let gold = GoldPairs {
        edge: Array2::zeros((3, 2)),
        label: Array2::from_elem((3, 2), 4),
    };
    let l = sdp_loss(&scores, &gold).unwrap();
    assert!((l.label_loss - 17f64.ln()).abs() < 1e-9);
    assert!((l.edge_loss - 2f64.ln()).abs() < 1e-12);
}

#[test]
fn separated_logits_have_small_loss() {
    let gold = GoldPairs {
        edge: array![[1.0, 0.0]],
        label: array![[1, 0]],
    };
    let mut label_logits = Array3::zeros((1, 2, DependencyType::COUNT));
    label_logits[[0, 0, 1]] = 40.0;
    label_logits[[0, 1, 0]] = 40.0;
    let scores = PairScores {
        edge_logits: array![[40.0, -40.0]],
        label_logits,
    };
    assert!(sdp_loss(&scores, &gold).unwrap().loss < 0.01);
}

#[test]
fn softmax_rows_sum_to_one() {
    let mut rng = rng_from_seed(1);
    for _ in 0..200 {
        let row = Array1::from_shape_fn(DependencyType::COUNT, |_| rng.gen_range(-30.0..30.0));
        let p = softmax(row.view());
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn sdp_gradients_match_differences() {
    let mut rng = rng_from_seed(21);
    let mut trials = 0;
    while trials < 30 {
        let (n, m) = (rng.gen_range(1..=5), rng.gen_range(1..=5));
        let (h, p) = (rng.gen_range(2..=6), rng.gen_range(2..=8));
        let params = noisy_params(&mut rng, h, p, 2);
        let q = random_matrix(&mut rng, n, h);
        let s = random_matrix(&mut rng, m, h);
        let (scores, cache) = score_pairs(&q, &s, &params).unwrap();
        if near_kink(&cache) {
            continue;
        }
        let gold = GoldPairs {
            edge: Array2::from_shape_fn((n, m), |_| if rng.gen_bool(0.3) { 1.0 } else { 0.0 }),
            label: Array2::from_shape_fn((n, m), |_| rng.gen_range(0..DependencyType::COUNT)),
        };
        let loss = sdp_loss(&scores, &gold).unwrap();
        let mut grad = params.zeros_like();
        params.backward_pairs(&cache, &loss.d_edge, &loss.d_label, &mut grad);

        let f = |pp: &SdpParams| sdp_loss(&score_pairs(&q, &s, pp).unwrap().0, &gold).unwrap().loss;
        let mut numeric = Vec::new();
        let mut probe = params.clone();
        let count = params.flat().len();
        for idx in 0..count {
            let orig = params.flat()[idx];
            set_flat(&mut probe, idx, orig + FD_STEP);
            let up = f(&probe);
            set_flat(&mut probe, idx, orig - FD_STEP);
            let down = f(&probe);
            set_flat(&mut probe, idx, orig);
            numeric.push((up - down) / (2.0 * FD_STEP));
        }
        let err = rel_error(&grad.flat(), &numeric);
        assert!(err < 1e-4, "relative error {err}");
        trials += 1;
    }
}

fn set_flat(params: &mut SdpParams, mut idx: usize, value: f64) {
    for s in params.slices_mut() {
        if idx < s.len() {
            s[idx] = value;
            return;
        }
        idx -= s.len();
    }
    panic!("index out of range");
}

#[test]
fn epr_loss_cases() {
    let (l, g) = epr_loss(Array2::zeros((0, 0)).view(), &[]).unwrap();
    assert_eq!(l, 0.0);
    assert!(g.is_empty());
    let (l, _) = epr_loss(Array2::zeros((3, 3)).view(), &[2, 0, 1]).unwrap();
    assert!((l - 3f64.ln()).abs() < 1e-12);
    let mut logits = Array2::from_elem((3, 3), -50.0);
    for (k, &t) in [2usize, 0, 1].iter().enumerate() {
        logits[[k, t]] = 50.0;
    }
    assert!(epr_loss(logits.view(), &[2, 0, 1]).unwrap().0 < 1e-12);
    assert!(epr_loss(Array2::zeros((2, 2)).view(), &[0, 0]).is_err());
    assert!(epr_loss(Array2::zeros((2, 3)).view(), &[0, 1]).is_err());
}

#[test]
fn epr_gradients_match_differences() {
    let mut rng = rng_from_seed(5);
    for _ in 0..50 {
        let k = rng.gen_range(1..=K_MAX);
        let logits = random_matrix(&mut rng, k, k) * 3.0;
        let mut target: Vec<usize> = (0..k).collect();
        rand::seq::SliceRandom::shuffle(target.as_mut_slice(), &mut rng);
        let (_, grad) = epr_loss(logits.view(), &target).unwrap();
        let mut numeric = Vec::new();
        for idx in 0..k * k {
            let (r, c) = (idx / k, idx % k);
            let mut up = logits.clone();
            up[[r, c]] += FD_STEP;
            let mut down = logits.clone();
            down[[r, c]] -= FD_STEP;
            numeric.push(
                (epr_loss(up.view(), &target).unwrap().0 - epr_loss(down.view(), &target).unwrap().0)
                    / (2.0 * FD_STEP),
            );
        }
        let err = rel_error(grad.as_slice().unwrap(), &numeric);
        assert!(err < 1e-4, "{err}");
    }
}

#[test]
fn joint_loss_cases() {
    let (l, g) = joint_loss(0.4, 1.2, 2.0, 1.0, 1.0, 1.0).unwrap();
    assert!((l - 1.8).abs() < 1e-15);
    let (_, g1) = joint_loss(1.0, 0.3, 0.2, 1.0, 2.0, 0.5).unwrap();
    assert!(g1.alpha.abs() < 1e-12);
    assert_eq!(g.w_mlm, 0.5);
    assert!(joint_loss(1.0, 1.0, 1.0, 0.0, 1.0, 1.0).is_err());
    assert!(joint_loss(1.0, 1.0, 1.0, 1.0, -1.0, 1.0).is_err());
    assert!(joint_loss(1.0, 1.0, 1.0, 1.0, 1.0, f64::NAN).is_err());

    // Swapping (loss, scalar) pairs leaves the value unchanged.
    let (a, _) = joint_loss(0.3, 0.9, 1.7, 0.8, 1.3, 2.1).unwrap();
    let (b, _) = joint_loss(1.7, 0.3, 0.9, 2.1, 0.8, 1.3).unwrap();
    assert!((a - b).abs() < 1e-12);

    let mut rng = rng_from_seed(2);
    for _ in 0..100 {
        let ls: [f64; 3] = std::array::from_fn(|_| rng.gen_range(0.0..5.0));
        let sc: [f64; 3] = std::array::from_fn(|_| rng.gen_range(0.2..3.0));
        let (_, g) = joint_loss(ls[0], ls[1], ls[2], sc[0], sc[1], sc[2]).unwrap();
        let analytic = [g.alpha, g.beta, g.gamma];
        for k in 0..3 {
            let mut up = sc;
            up[k] += FD_STEP;
            let mut down = sc;
            down[k] -= FD_STEP;
            let num = (joint_loss(ls[0], ls[1], ls[2], up[0], up[1], up[2]).unwrap().0
                - joint_loss(ls[0], ls[1], ls[2], down[0], down[1], down[2]).unwrap().0)
                / (2.0 * FD_STEP);
            let denom = num.abs().max(analytic[k].abs());
            assert!(denom == 0.0 || (num - analytic[k]).abs() / denom < 1e-6);
        }
    }
}

#[test]
fn toy_encoder_properties() {
    use crate::model::{serialize_input, Column, DataType, Question, Schema, Table};
    let schema = Schema::new(
        "s",
        vec![Table::new(
            "t",
            vec![Column::new("a", DataType::Text), Column::new("b c", DataType::Text)],
        )],
        vec![],
    )
    .unwrap();
    let input = serialize_input(&Question::new("x x x y"), &schema);
    let (q, s) = toy_encode(&input, 6, 3).unwrap();
    assert_eq!(q.dim(), (4, 6));
    assert_eq!(s.dim(), (2, 6));
    assert_ne!(q.row(0), q.row(1));
    assert_ne!(q.row(1), q.row(2));
    assert_eq!(toy_encode(&input, 6, 3).unwrap(), (q.clone(), s.clone()));
    let empty = serialize_input(&Question::new(""), &schema);
    let (q0, s0) = toy_encode(&empty, 6, 3).unwrap();
    assert_eq!(q0.nrows(), 0);
    assert_eq!(s0.nrows(), 2);
    assert!(toy_encode(&input, 1, 3).is_err());
}

#[test]
fn edge_f1_counts() {
    let gold = GoldPairs {
        edge: array![[1.0, 0.0], [1.0, 0.0]],
        label: Array2::zeros((2, 2)),
    };
    let pred = array![[true, true], [false, false]];
    // tp 1, fp 1, fn 1.
    assert!((edge_f1(&[pred], std::slice::from_ref(&gold)) - 0.5).abs() < 1e-12);
    assert_eq!(edge_f1(&[gold.edge.mapv(|v| v > 0.5)], &[gold]), 1.0);
}

mod demo {
    use std::collections::BTreeMap;

    use super::super::*;
    use crate::deps::Labeler;
    use crate::model::{Column, DataType, PretrainExample, Provenance, Question, Schema, Table};
    use crate::sql::{synthesize_question, GrammarConfig, SqlSampler};

    fn corpus(n: usize) -> (Vec<PretrainExample>, BTreeMap<String, Schema>) {
        corpus_seeded(n, 11)
    }

    fn corpus_seeded(n: usize, seed: u64) -> (Vec<PretrainExample>, BTreeMap<String, Schema>) {
        let schema = Schema::new(
            "school",
            vec![Table::new(
                "student",
                vec![
                    Column::new("name", DataType::Text).with_values(["dannie", "lee", "ana"]),
                    Column::new("height", DataType::Number).with_values(["150", "172"]),
                    Column::new("age", DataType::Number).with_values(["10", "12"]),
                    Column::new("home city", DataType::Text).with_values(["paris", "lima"]),
                ],
            )],
            vec![],
        )
        .unwrap();
        let mut sampler = SqlSampler::new(GrammarConfig {
            seed,
            ..GrammarConfig::default()
        })
        .unwrap();
        let labeler = Labeler::default();
        let examples = (0..n)
            .map(|i| {
                let sql = sampler.sample(&schema).unwrap();
                let question = Question::new(synthesize_question(&sql, &schema));
                let mut ex = PretrainExample::new(format!("ex{i}"), "school", question, sql, Provenance::Sampled);
                let (g, stats) = labeler.label(&ex.question, &ex.sql, &schema);
                ex.dependencies = Some(g);
                ex.mention_stats = Some(stats);
                ex
            })
            .collect();
        (examples, BTreeMap::from([("school".to_string(), schema)]))
    }

    #[test]
    fn zero_learning_rate_keeps_trace_constant() {
        let (ex, schemas) = corpus(8);
        let cfg = DemoConfig { steps: 20, lr: 0.0, ..DemoConfig::default() };
        let out = train_demo(&ex, &schemas, &cfg).unwrap();
        assert!(out.trace.iter().all(|r| r.joint == out.trace[0].joint));
    }

    #[test]
    fn same_seed_same_trace() {
        let (ex, schemas) = corpus(8);
        let cfg = DemoConfig { steps: 30, ..DemoConfig::default() };
        let a = train_demo(&ex, &schemas, &cfg).unwrap();
        let b = train_demo(&ex, &schemas, &cfg).unwrap();
        assert_eq!(a.trace, b.trace);
    }

    #[test]
    fn loss_window_averages_decrease() {
        let (ex, schemas) = corpus(8);
        let cfg = DemoConfig { steps: 300, ..DemoConfig::default() };
        let out = train_demo(&ex, &schemas, &cfg).unwrap();
        let means: Vec<f64> = out
            .trace
            .chunks(50)
            .map(|w| w.iter().map(|r| r.joint).sum::<f64>() / w.len() as f64)
            .collect();
        assert!(means.windows(2).all(|w| w[1] < w[0]), "{means:?}");
    }

    #[test]
    fn rejects_oversized_slice() {
        let (ex, schemas) = corpus(1);
        let many = vec![ex[0].clone(); MAX_DEMO_EXAMPLES + 1];
        assert!(train_demo(&many, &schemas, &DemoConfig::default()).is_err());
        assert!(train_demo(&[], &schemas, &DemoConfig::default()).is_err());
    }
}
