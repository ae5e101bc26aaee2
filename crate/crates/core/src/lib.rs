//! Corpus construction and objective verification for table pre-training:
//! grammar-based SQL sampling, schema dependency labeling, masking and
//! entity-perturbation objectives, curriculum scheduling and a small
//! biaffine scoring head with exact gradients.

pub mod curriculum;
pub mod deps;
pub mod error;
pub mod model;
pub mod objectives;
pub mod pipeline;
pub mod sdp;
pub mod seed;
pub mod sql;

pub use deps::{DependencyEdge, DependencyGraph, DependencyType, Head};
pub use error::{ForgeError, Result};
pub use model::{
    serialize_input, tokenize, Column, ColumnRef, DataType, PretrainExample, Provenance, Question,
    Schema, SerializedInput, Table,
};
pub use sql::Query;
