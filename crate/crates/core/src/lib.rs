//! Discrete-event simulation of federated learning deployments.
//!
//! A run places two actors on every simulated host: a role automaton
//! (aggregator, trainer, proxy, ...) that consumes compute, and a network
//! manager that handles registration and topology-specific routing. The two
//! talk through a zero-cost mediator. The kernel advances a virtual clock,
//! drains transfers with a flow-level bandwidth model and records the busy
//! intervals and link traffic needed to estimate energy.
//!
//! On top of single runs, [`evolve`] searches platform and algorithm
//! configurations with an elitist evolutionary loop, one pipeline per
//! topology and aggregation algorithm.

pub mod cli;
pub mod evolve;
pub mod kernel;
pub mod platform;
pub mod protocol;
pub mod roles;
pub mod scenario;
pub mod seed;

pub use kernel::{SimError, SimTime};
pub use platform::{HostProfile, LinkProfile, Platform};
pub use scenario::{run_simulation, RunResult, Scenario};
