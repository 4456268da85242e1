//! Bootstrap model averaging for discrete Bayesian network structure
//! learning, with an L1-optimal significance threshold for edge confidence.

pub mod averaging;
pub mod dataset;
pub mod evaluation;
pub mod fixtures;
pub mod graph;
pub mod independence;
pub mod io;
pub mod learn;
pub mod model;
pub mod rng;
pub mod scores;

pub use averaging::{
    assign_directions, edge_confidence, estimate_threshold, l1_objective, noise_floor,
    noise_floor_threshold, select_with_adhoc_threshold, AveragedNetwork, AveragingError,
    BootstrapOptions, ConfidenceProfile, Method, ThresholdReport,
};
pub use dataset::Dataset;
pub use graph::{Dag, NodePair, NodeSet, Skeleton};
pub use learn::{Algorithm, Learner, LearnerConfig};
pub use model::{DiscreteBayesNet, Variable};
