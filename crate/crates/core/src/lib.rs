//! Swarm foraging driven by pheromone trails, simulated as distributed
//! cross-learning.
//!
//! Patch attractiveness follows a sigmoid of food density. A pheromone field
//! that evaporates and is reinforced on every visit induces a choice
//! distribution that coincides step for step with a cross-learning policy
//! update whose effective reward is the stigmergic gain. The simulator runs
//! that policy over batches of individuals, with a bounded replay buffer
//! standing in for pheromone evaporation.
//!
//! ```
//! use stigmergy::{attractiveness, SigmoidParams};
//!
//! let a = attractiveness(&SigmoidParams::OP50, 0.003).unwrap();
//! assert!((a - 0.6465180222706002).abs() < 1e-12);
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cross_learning;
pub mod environment;
pub mod error;
pub mod fitting;
pub mod foraging;
pub mod harness;
pub mod metrics;
pub mod pheromone;
pub mod rng;
pub mod scenarios;
pub mod sim;
pub mod trajectory;

pub use cross_learning::{
    buffered_tau, cl_update, equivalence_suite, estimate_drift, replicator_rhs, stigmergic_gain,
    verify_equivalence, Fault, Policy, ReplayBuffer,
};
pub use environment::{initial_policy, BanditSpec};
pub use error::{Error, Result};
pub use fitting::{differential_evolution, fit_de, Bounds, DeParams, FitParams, FitSpec};
pub use foraging::{attractiveness, ifd_distribution, PatchSpec, SigmoidParams};
pub use metrics::{bootstrap_ci, mse, mta};
pub use pheromone::{choice_distribution, PheromoneField};
pub use rng::{derive_seed, RngStream};
pub use scenarios::{DynamicAdaptation, StaticValidation};
pub use sim::{run_ensemble, run_epoch, run_experiment, ExplorerMode, PopulationConfig, RunTrace, SimConfig};
pub use trajectory::Trajectory;
