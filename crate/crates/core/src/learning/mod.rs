//! Learned policies: approximate value iteration with a linear value
//! function, rollout-trained classifier policies, and training across many
//! instances at once.

pub mod artifact;
pub mod avi;
pub mod classifier;
pub mod dcl;
pub mod epl;
pub mod features;
pub mod mlp;

pub use artifact::PolicyArtifact;
pub use avi::{avi_train, greedy_decision, ridge_fit, AviConfig, AviResult, LinearVfa, Rls, VfaPolicy};
pub use classifier::{masked_argmax, Classifier, ClassifierPolicy, DecisionGrid};
pub use dcl::{dcl_train, rollout_argmin, rollout_estimate, DclResult, DclRound, NetConfig, RolloutConfig};
pub use epl::{
    epl_build_grid, epl_sample, epl_train_avi, epl_train_dcl, from_theta, theta, EplConfig, EplGrid, EplResult,
    EplRound, EplSource, THETA_NAMES,
};
pub use features::{FeatureSchema, ParamBounds};
pub use mlp::{Mlp, TrainConfig, TrainReport};
