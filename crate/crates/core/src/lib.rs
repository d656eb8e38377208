//! Language-model driven generation of robotic assembly scripts.
//!
//! The pipeline decomposes an assembly task into behavior-level subtasks,
//! asks a model to write a workcell script for each, and runs every script
//! against a kinematic simulator, feeding errors back until it succeeds.

pub mod agent;
pub mod library;
pub mod llm;
pub mod model;
pub mod orchestrator;
pub mod sga;
pub mod sim;
pub mod tda;
pub mod wcs;
