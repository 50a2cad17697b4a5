//! Capacity-building skills graphs.
//!
//! A weighted DAG of interventions ([`graph`]) supports budget allocation
//! ([`allocator`]), resource-constrained path planning ([`pathfinder`]),
//! metric-driven weight updates ([`feedback`]) and Markov transition models
//! ([`markov`]). Alongside sits an outcome-prediction pipeline: a decision
//! tree built from scratch ([`learner`]) trained on synthetic cohorts
//! ([`cohort`]). [`cli`] ties everything to the `skillgraph` binary.

pub mod allocator;
pub mod cli;
pub mod cohort;
pub mod feedback;
pub mod graph;
pub mod learner;
pub mod markov;
pub mod pathfinder;
