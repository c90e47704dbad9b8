//! Online planning for POMDPs with particle-filter beliefs.
//!
//! The crate provides:
//!
//! - a minimal [`model::PomdpModel`] abstraction with exact belief updates,
//!   expected rewards and entropies over dense probability vectors;
//! - a finite-horizon expectimax [`oracle`] for small domains, including
//!   value-of-information diagnostics;
//! - unweighted [`particles`] with a constant-time incremental entropy
//!   update;
//! - a UCB1 Monte-Carlo tree-search [`planner`] and its entropy-guided
//!   variant, which biases simulation toward actions whose subtrees have
//!   reduced belief entropy;
//! - two benchmark [`domains`]: the two-door tiger problem and the Long
//!   Hallway navigation problem;
//! - a seeded, reproducible experiment [`harness`] with CSV persistence and
//!   a grid search.
//!
//! The accompanying guide under `book/` walks through the concepts; its code
//! samples compile and run as doctests of this crate.

pub mod domains;
pub mod harness;
pub mod model;
pub mod oracle;
pub mod particles;
pub mod planner;
pub mod tree;

pub use model::{DenseBelief, PomdpModel, Step};
pub use particles::ParticleFilter;
pub use planner::{Budget, Planner, PlannerConfig, PlannerKind};

// Re-exported so downstream code and the book's samples can name the RNG
// types that appear in this crate's API.
pub use rand;
pub use rand_chacha;

// Compile the book's code samples as doctests so the guide can never drift
// from the library.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    pub struct Introduction;
    #[doc = include_str!("../../../book/src/beliefs.md")]
    pub struct Beliefs;
    #[doc = include_str!("../../../book/src/particles.md")]
    pub struct Particles;
    #[doc = include_str!("../../../book/src/planners.md")]
    pub struct Planners;
    #[doc = include_str!("../../../book/src/hallway.md")]
    pub struct Hallway;
    #[doc = include_str!("../../../book/src/experiments.md")]
    pub struct Experiments;
}
