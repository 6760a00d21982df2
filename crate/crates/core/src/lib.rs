//! Learning a teacher's reward weights from free-form language feedback.
//!
//! Utterances are decomposed into a sentiment and the object features it
//! targets, then folded into a Gaussian belief over reward weights by
//! conjugate linear regression. A small inference network offers a learned
//! alternative. The [`harness`] module runs the evaluation protocols.

pub mod error;
pub mod belief;
pub mod corpus;
pub mod features;
pub mod harness;
pub mod feedback;
pub mod rng;
pub mod neural;
pub mod world;

pub use error::{Error, Result};
pub use features::{FeatureVector, NUM_FEATURES};
