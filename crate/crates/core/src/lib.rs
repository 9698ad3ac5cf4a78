//! Dual sourcing of spare parts when the two supply modes fail at different
//! rates.
//!
//! Parts sourced from conventional manufacturing (CM) and additive
//! manufacturing (AM) differ in price, lead time and failure rate, so today's
//! sourcing mix drives tomorrow's demand. The crate provides the one-period
//! model ([`dynamics`]), an exact policy-iteration solver for small instances
//! ([`exact`]), heuristic policies ([`heuristics`]), learned policies
//! ([`learning`]), a Monte-Carlo evaluation harness ([`sim`]) and the
//! instance library and file formats ([`config`]).

pub mod config;
pub mod cost;
pub mod demand;
pub mod dynamics;
pub mod error;
pub mod exact;
pub mod heuristics;
pub mod learning;
pub mod params;
pub mod policy;
pub mod runner;
pub mod sim;
pub mod state;

pub use cost::CostBreakdown;
pub use dynamics::Model;
pub use error::{Error, Result};
pub use policy::Policy;
pub use params::{DemandFamily, InstanceParams, ModeParams, Source};
pub use state::{Decision, FailureRealization, SystemState};

/// Chapters of the guide under `book/`, run as doctests.
#[cfg(doctest)]
pub mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    pub mod introduction {}
    #[doc = include_str!("../../../book/src/model.md")]
    pub mod model {}
    #[doc = include_str!("../../../book/src/exact.md")]
    pub mod exact {}
    #[doc = include_str!("../../../book/src/heuristics.md")]
    pub mod heuristics {}
    #[doc = include_str!("../../../book/src/learning.md")]
    pub mod learning {}
    #[doc = include_str!("../../../book/src/simulation.md")]
    pub mod simulation {}
    #[doc = include_str!("../../../book/src/cli.md")]
    pub mod cli {}
}
