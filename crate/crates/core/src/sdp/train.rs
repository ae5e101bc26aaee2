use std::collections::{BTreeMap, BTreeSet};

use ndarray::{s, Array2, Axis};
use serde::{Deserialize, Serialize};

use super::encode::toy_encode_tokens;
use super::loss::{
    epr_loss, gold_pairs, joint_loss, sdp_loss, softmax_cross_entropy, GoldPairs,
};
use super::params::{SdpParams, K_MAX};
use super::score::{score_edges, score_pairs};
use crate::curriculum::{compute_difficulties, sample_batch, CurriculumState};
use crate::error::{ForgeError, Result};
use crate::model::{serialize_input, PretrainExample, Question, Schema};
use crate::objectives::{perturb_entities, plan_objectives};
use crate::seed::derive_seed;

/// Largest training slice accepted.
pub const MAX_DEMO_EXAMPLES: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DemoConfig {
    pub steps: usize,
    pub lr: f64,
    pub seed: u64,
    pub hidden: usize,
    pub proj: usize,
    pub batch_size: usize,
    pub mlm_ratio: f64,
    pub value_prob: f64,
    /// Lower bound on the balance scalars. The joint objective is unbounded
    /// below once a component loss reaches zero and its scalar shrinks.
    pub min_balance: f64,
}

impl Default for DemoConfig {
    fn default() -> Self {
        DemoConfig {
            steps: 300,
            lr: 0.5,
            seed: 0,
            hidden: 32,
            proj: 16,
            batch_size: 8,
            mlm_ratio: 0.25,
            value_prob: 0.25,
            min_balance: 0.5,
        }
    }
}

/// Losses and balance scalars before the update of `step`, and training
/// slice edge F1 at the same parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub step: usize,
    pub l_mlm: f64,
    pub l_sdp: f64,
    pub l_epr: f64,
    pub joint: f64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub edge_f1: f64,
}

impl TraceRow {
    pub const CSV_HEADER: &'static str = "step,l_mlm,l_sdp,l_epr,joint,alpha,beta,gamma,edge_f1";

    pub fn to_csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.step,
            self.l_mlm,
            self.l_sdp,
            self.l_epr,
            self.joint,
            self.alpha,
            self.beta,
            self.gamma,
            self.edge_f1
        )
    }
}

#[derive(Debug, Clone)]
pub struct DemoOutcome {
    pub trace: Vec<TraceRow>,
    /// Edge F1 after the last update.
    pub final_edge_f1: f64,
    pub params: SdpParams,
}

struct Prepared {
    q: Array2<f64>,
    s: Array2<f64>,
    gold: GoldPairs,
    mlm_x: Array2<f64>,
    mlm_targets: Vec<usize>,
    epr_x: Array2<f64>,
    epr_target: Vec<usize>,
}

fn prepare(
    ex: &PretrainExample,
    schema: &Schema,
    vocab: &BTreeMap<String, usize>,
    cfg: &DemoConfig,
) -> Result<Prepared> {
    let h = cfg.hidden;
    let input = serialize_input(&ex.question, schema);
    let all = toy_encode_tokens(&input.tokens, h, cfg.seed);
    let q = all.slice(s![input.question_span.clone(), ..]).to_owned();
    let anchors: Vec<usize> = input.column_anchors.iter().map(|&(_, a)| a).collect();
    let s = all.select(Axis(0), &anchors);
    let gold = ex
        .dependencies
        .as_ref()
        .map(|g| gold_pairs(g, &input))
        .unwrap_or_else(|| gold_pairs(&Default::default(), &input));

    let plan = plan_objectives(ex, schema, cfg.mlm_ratio, cfg.value_prob, cfg.seed)?;
    let corrupted = toy_encode_tokens(&plan.apply(&input), h, cfg.seed);
    let targets = plan.targets(&input);
    let rows: Vec<usize> = targets.iter().map(|(p, _)| *p).collect();
    let mlm_x = corrupted.select(Axis(0), &rows);
    let mlm_targets = targets.iter().map(|(_, t)| vocab[t]).collect();

    let perturbed = perturb_entities(ex, derive_seed(cfg.seed, &format!("epr:{}", ex.example_id)));
    let (epr_x, epr_target) = if perturbed.entity_count() > K_MAX {
        (Array2::zeros((0, h)), Vec::new())
    } else {
        let shuffled = Question {
            raw: ex.question.raw.clone(),
            tokens: perturbed.shuffled_tokens.clone(),
        };
        let sin = serialize_input(&shuffled, schema);
        let enc = toy_encode_tokens(&sin.tokens, h, cfg.seed);
        let rows: Vec<usize> = perturbed
            .slot_spans
            .iter()
            .map(|sp| sin.question_span.start + sp.start)
            .collect();
        (enc.select(Axis(0), &rows), perturbed.recovery_target.clone())
    };
    Ok(Prepared {
        q,
        s,
        gold,
        mlm_x,
        mlm_targets,
        epr_x,
        epr_target,
    })
}

/// Micro F1 of predicted against gold edges over a set of examples.
/// No gold and no predicted edges counts as 1.
pub fn edge_f1(predicted: &[Array2<bool>], gold: &[GoldPairs]) -> f64 {
    let (mut tp, mut fp, mut fn_) = (0usize, 0usize, 0usize);
    for (pred, g) in predicted.iter().zip(gold) {
        for (&p, &y) in pred.iter().zip(g.edge.iter()) {
            match (p, y > 0.5) {
                (true, true) => tp += 1,
                (true, false) => fp += 1,
                (false, true) => fn_ += 1,
                (false, false) => {}
            }
        }
    }
    if tp + fp + fn_ == 0 {
        1.0
    } else {
        2.0 * tp as f64 / (2 * tp + fp + fn_) as f64
    }
}

fn slice_f1(params: &SdpParams, prepared: &[Prepared]) -> Result<f64> {
    let mut predicted = Vec::with_capacity(prepared.len());
    for p in prepared {
        predicted.push(score_edges(&p.q, &p.s, params)?.mapv(|v| v >= 0.0));
    }
    let gold: Vec<GoldPairs> = prepared.iter().map(|p| p.gold.clone()).collect();
    Ok(edge_f1(&predicted, &gold))
}

struct StepLosses {
    mlm: f64,
    sdp: f64,
    epr: f64,
}

/// Batch-mean component losses; `grad` receives the joint-weighted
/// parameter gradient.
fn accumulate(
    params: &SdpParams,
    batch: &[&Prepared],
    grad: &mut SdpParams,
) -> Result<StepLosses> {
    let (w_mlm, w_sdp, w_epr) = {
        let (_, g) = joint_loss(0.0, 0.0, 0.0, params.alpha, params.beta, params.gamma)?;
        (g.w_mlm, g.w_sdp, g.w_epr)
    };
    let scale = 1.0 / batch.len() as f64;
    let mut out = StepLosses {
        mlm: 0.0,
        sdp: 0.0,
        epr: 0.0,
    };
    for p in batch {
        let (scores, cache) = score_pairs(&p.q, &p.s, params)?;
        let mut sdp = sdp_loss(&scores, &p.gold)?;
        out.sdp += scale * sdp.loss;
        sdp.d_edge *= scale * w_sdp;
        sdp.d_label *= scale * w_sdp;
        params.backward_pairs(&cache, &sdp.d_edge, &sdp.d_label, grad);

        let logits = p.mlm_x.dot(&params.mlm.w) + &params.mlm.b;
        let (l, mut d) = softmax_cross_entropy(logits.view(), &p.mlm_targets);
        out.mlm += scale * l;
        d *= scale * w_mlm;
        grad.mlm.w += &p.mlm_x.t().dot(&d);
        grad.mlm.b += &d.sum_axis(Axis(0));

        let k = p.epr_target.len();
        let logits = p.epr_x.dot(&params.rank.w.slice(s![.., ..k])) + params.rank.b.slice(s![..k]);
        let (l, mut d) = epr_loss(logits.view(), &p.epr_target)?;
        out.epr += scale * l;
        d *= scale * w_epr;
        let mut gw = grad.rank.w.slice_mut(s![.., ..k]);
        gw += &p.epr_x.t().dot(&d);
        let mut gb = grad.rank.b.slice_mut(s![..k]);
        gb += &d.sum_axis(Axis(0));
    }
    Ok(out)
}

/// Plain gradient descent on the joint objective over curriculum batches.
/// Balance scalars are updated through their logarithms and clamped at
/// `min_balance`.
pub fn train_demo(
    examples: &[PretrainExample],
    schemas: &BTreeMap<String, Schema>,
    cfg: &DemoConfig,
) -> Result<DemoOutcome> {
    if examples.is_empty() || examples.len() > MAX_DEMO_EXAMPLES {
        return Err(ForgeError::contract(format!(
            "training slice of {} examples, expected 1..={MAX_DEMO_EXAMPLES}",
            examples.len()
        )));
    }
    if cfg.batch_size == 0 {
        return Err(ForgeError::contract("batch size must be positive"));
    }
    if cfg.min_balance.is_nan() || cfg.min_balance <= 0.0 {
        return Err(ForgeError::contract("balance floor must be positive"));
    }
    let schema_of = |ex: &PretrainExample| {
        schemas.get(&ex.schema_id).ok_or_else(|| {
            ForgeError::contract(format!("{}: unknown schema {}", ex.example_id, ex.schema_id))
        })
    };
    let mut words = BTreeSet::new();
    for ex in examples {
        words.extend(serialize_input(&ex.question, schema_of(ex)?).tokens);
    }
    let vocab: BTreeMap<String, usize> = words.into_iter().enumerate().map(|(i, w)| (w, i)).collect();
    let prepared = examples
        .iter()
        .map(|ex| prepare(ex, schema_of(ex)?, &vocab, cfg))
        .collect::<Result<Vec<_>>>()?;

    let difficulties = compute_difficulties(examples, schemas)?;
    let mut state = CurriculumState::new(difficulties, cfg.steps.max(1) as u64)?;
    let mut params = SdpParams::init(cfg.hidden, cfg.proj, vocab.len(), derive_seed(cfg.seed, "init"));
    let mut trace = Vec::with_capacity(cfg.steps);
    for step in 0..cfg.steps {
        let idx = sample_batch(&state, cfg.batch_size, derive_seed(cfg.seed, &format!("batch:{step}")));
        let batch: Vec<&Prepared> = idx.iter().map(|&i| &prepared[i]).collect();
        let mut grad = params.zeros_like();
        let losses = accumulate(&params, &batch, &mut grad)?;
        let (joint, jg) = joint_loss(
            losses.mlm,
            losses.sdp,
            losses.epr,
            params.alpha,
            params.beta,
            params.gamma,
        )?;
        trace.push(TraceRow {
            step,
            l_mlm: losses.mlm,
            l_sdp: losses.sdp,
            l_epr: losses.epr,
            joint,
            alpha: params.alpha,
            beta: params.beta,
            gamma: params.gamma,
            edge_f1: slice_f1(&params, &prepared)?,
        });
        params.add_scaled(&grad, -cfg.lr);
        let floor = cfg.min_balance;
        let log_step = |s: f64, g: f64| (s * (-cfg.lr * s * g).exp()).max(floor);
        params.alpha = log_step(params.alpha, jg.alpha);
        params.beta = log_step(params.beta, jg.beta);
        params.gamma = log_step(params.gamma, jg.gamma);
        state.advance();
    }
    let final_edge_f1 = slice_f1(&params, &prepared)?;
    Ok(DemoOutcome {
        trace,
        final_edge_f1,
        params,
    })
}
