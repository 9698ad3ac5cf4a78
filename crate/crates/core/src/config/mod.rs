//! Bundled instances, instance files and experiment configuration.

pub mod energy;
pub mod experiment;
pub mod instance_file;
pub mod library;

pub use experiment::{ExperimentConfig, Hyperparams, PolicyKind};
pub use instance_file::{load_instance, InstanceFile};
pub use library::{bundled, synthetic, NamedInstance};
