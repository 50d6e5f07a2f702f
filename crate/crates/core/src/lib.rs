//! Fairness-aware feature selection with a REINFORCE policy.
//!
//! A policy network walks a feature-subset MDP (add/remove one feature per
//! step). Each visited subset is scored with a composite reward: validation
//! AUC of a black-box learner, minus a direct penalty for sensitive features,
//! an indirect penalty for features correlated with them, and a size penalty,
//! plus a shaped bonus for preferred features. The same correlation graph
//! drives a standalone bias audit of any feature set.

pub mod agent;
pub mod bench;
pub mod corrgraph;
pub mod data;
pub mod env;
mod error;
pub mod learner;
pub mod policy;
pub mod reward;
mod rng;

pub use error::{Error, ErrorKind, Result};
