//! Simulation and Brownian-control lower bounds for resource sharing networks
//! in heavy traffic.

pub mod bcp;
pub mod harness;
pub mod model;
pub mod policies;
pub mod sim;
pub mod stats;
pub mod stochastic;
