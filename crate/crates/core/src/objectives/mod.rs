//! Self-supervised training signals: masking with value replacement, and
//! entity perturbation with recovery targets.

mod epr;
mod mlm;

pub use epr::{identify_primary_entities, perturb_entities, PerturbedExample};
pub use mlm::{
    plan_mlm, plan_objectives, plan_value_replacement, ColumnReplacement, MaskPlan, MASK_TOKEN,
};

fn check_probability(name: &str, p: f64) -> crate::error::Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(crate::error::ForgeError::contract(format!(
            "{name} {p} outside [0, 1]"
        )))
    }
}
