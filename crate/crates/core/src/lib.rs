//! Pseudo-label selection for sparsely labeled text-attributed graphs.
//!
//! The crate combines a cheap graph judge with an expensive text annotator:
//! unlabeled nodes are ranked by an influence bound relative to the labeled
//! set, annotated by both models, and split by agreement. Agreed nodes feed
//! an instruction dataset; confident disagreements feed a preference dataset.
//! A simulator with controllable annotator accuracies checks the analytic
//! agreement-accuracy prediction against Monte-Carlo runs.

pub mod agreement;
pub mod data;
pub mod error;
pub mod graph;
pub mod influence;
pub mod judge;
pub mod llm;
pub mod objectives;
pub mod pipeline;
pub mod prompt;
pub mod sim;
pub mod synthetic;
pub mod text_classifier;
pub mod util;

pub use error::{Error, Result};
pub use graph::{Graph, NodeId};
