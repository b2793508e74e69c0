//! Two-stage semiparametric estimation of productivity with learning from
//! own exporting and from exporting peers.
//!
//! The usual flow is [`panel::load_panel`] (or [`simulate::simulate_panel`]),
//! then [`run_pipeline`], then [`inference::run_inference`] for intervals and
//! [`baselines`] for the descriptive comparators.

pub mod baselines;
pub mod effects;
pub mod error;
pub mod inference;
pub mod linalg;
pub mod panel;
pub mod pipeline;
pub mod simulate;
pub mod stage1;
pub mod stage2;
pub mod stats;

pub use error::{Error, Result};
pub use pipeline::{estimate_sample, run_pipeline, Estimates, PipelineSpec};
