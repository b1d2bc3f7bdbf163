//! Closed reason–execute–monitor loop for UAV swarm missions.
//!
//! A reasoner (scripted or remote chat model) drives a simulated swarm
//! exclusively through typed tools exposed by [`gateway`]. The gateway
//! mediates access to Web-of-Things Things ([`wot`]) registered in a
//! [`directory`]; [`planners`] back the service Things; [`agent`] runs the
//! loop with guardrails and token accounting; [`eval`] scores runs.

pub mod agent;
pub mod directory;
pub mod eval;
pub mod gateway;
pub mod geometry;
pub mod planners;
pub mod sim;
pub mod wot;
