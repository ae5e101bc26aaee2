//! Biaffine schema-dependency scoring, entity-order recovery and masked
//! token heads over a fixed toy encoder, with analytic gradients and an
//! uncertainty-weighted joint objective.

mod encode;
mod loss;
mod params;
mod score;
mod train;

pub use encode::{toy_encode, toy_encode_tokens};
pub use loss::{
    bce_with_logits, epr_loss, gold_pairs, joint_loss, sdp_loss, softmax, softmax_cross_entropy,
    GoldPairs, JointGrads, SdpLoss,
};
pub use params::{Affine, EdgeBiaffine, Ffn, LabelBiaffine, SdpParams, K_MAX};
pub use score::{
    biaffine, biaffine_labels, decide_edges, ffn_project, score_edges, score_pairs, PairCache,
    PairScores,
};
pub use train::{edge_f1, train_demo, DemoConfig, DemoOutcome, TraceRow, MAX_DEMO_EXAMPLES};

#[cfg(test)]
mod tests;
