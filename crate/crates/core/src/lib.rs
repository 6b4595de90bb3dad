//! Simulation and exact verification of the irregular random subgraph of a
//! d-regular graph: every vertex receives an independent uniform weight and
//! an edge survives when the weights of its endpoints sum to at least one.

pub mod analysis;
pub mod cli;
pub mod exact;
pub mod graph;
pub mod guide;
pub mod martingale;
pub mod oracle;
pub mod quadrature;
pub mod rng;
pub mod sampler;
pub mod special;
