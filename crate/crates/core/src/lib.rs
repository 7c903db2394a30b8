//! Combination of semantic role labeling systems.
//!
//! The outputs of several labelers are merged into a pool of candidate
//! arguments, each candidate is scored (by summed calibrated probabilities
//! or by a learned kernel scorer), and a consistent subset is selected by
//! exact constrained inference.

pub mod calibrate;
pub mod corpus_io;
pub mod eval_oracle;
pub mod features;
pub mod infer_cs;
pub mod infer_dp;
pub mod learn;
pub mod model;
pub mod pipeline;
pub mod pool;

pub use model::{
    audit, validate, Argument, Candidate, Constraint, ConstraintMode, ConstraintSet, RoleLabel, Sentence, Solution,
    Span, SpanRelation,
};
