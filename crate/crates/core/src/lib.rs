//! Rumor source detection when the source is known to lie in a suspect set.
//!
//! The crate simulates SI spreading on graphs, locates the maximum a
//! posteriori source among the suspects via rumor centrality, and computes
//! exact detection probabilities on regular trees through Pólya urn laws.
//! The [`harness`] module compares Monte Carlo estimates against those
//! exact values.

pub mod centrality;
pub mod error;
pub mod estimator;
pub mod exactprob;
pub mod harness;
pub mod probability;
pub mod spread;
pub mod topology;
pub mod urn;

pub use centrality::{centrality_all, rumor_centrality, Centrality, CentralityReport};
pub use error::{Error, ErrorClass, Result};
pub use estimator::{map_estimate, Estimate, SuspectPattern, SuspectSet};
pub use exactprob::{DetectionResult, Method, Scenario};
pub use harness::{run_experiment, ExperimentConfig, ExperimentReport, ExperimentScenario};
pub use probability::{Arithmetic, Probability};
pub use spread::Backend;
pub use topology::{Graph, NodeId, Snapshot};
